/** Writers for the activation dataset directory consumed by the convlogic
 * core: manifest.json plus EATN/EATL/EATP binary files, all little-endian. */

import { mkdirSync, writeFileSync } from 'fs'
import { join } from 'path'

export interface LayerNorms {
  name: string
  nKernels: number
  pooled: boolean
  /** n_samples x n_kernels, sample-major. */
  norms: Float32Array
}

export interface DatasetPayload {
  nSamples: number
  classNames: string[]
  splits: { train: number[]; val: number[]; test: number[] }
  layers: LayerNorms[]
  labels: Uint16Array
  teacher: Uint16Array
  imageRefs?: string[]
  /** Free-form provenance notes stored in the manifest (ignored by the core). */
  preprocessing?: Record<string, unknown>
}

function u32(value: number): Buffer {
  const b = Buffer.alloc(4)
  b.writeUInt32LE(value >>> 0)
  return b
}

export function encodeNorms(nSamples: number, nKernels: number, norms: Float32Array): Buffer {
  if (norms.length !== nSamples * nKernels) {
    throw new Error(`norm buffer length ${norms.length} != ${nSamples}x${nKernels}`)
  }
  for (const v of norms) {
    if (!Number.isFinite(v)) throw new Error('non-finite norm')
    if (v < 0) throw new Error('negative norm')
  }
  return Buffer.concat([
    Buffer.from('EATN', 'ascii'), u32(1), u32(nSamples), u32(nKernels),
    Buffer.from(norms.buffer, norms.byteOffset, norms.byteLength),
  ])
}

export function encodeClassVector(magic: 'EATL' | 'EATP', values: Uint16Array): Buffer {
  return Buffer.concat([
    Buffer.from(magic, 'ascii'), u32(values.length),
    Buffer.from(values.buffer, values.byteOffset, values.byteLength),
  ])
}

export function writeDataset(dir: string, d: DatasetPayload): void {
  const n = d.nSamples
  if (d.labels.length !== n || d.teacher.length !== n) {
    throw new Error('labels/teacher length must equal n_samples')
  }
  for (const v of [...d.labels, ...d.teacher]) {
    if (v >= d.classNames.length) throw new Error(`class index ${v} out of range`)
  }
  if (d.imageRefs && d.imageRefs.length !== n) {
    throw new Error('image_refs length must equal n_samples')
  }
  mkdirSync(dir, { recursive: true })
  for (const layer of d.layers) {
    writeFileSync(join(dir, `${layer.name}.norms`), encodeNorms(n, layer.nKernels, layer.norms))
  }
  writeFileSync(join(dir, 'labels.bin'), encodeClassVector('EATL', d.labels))
  writeFileSync(join(dir, 'teacher.bin'), encodeClassVector('EATP', d.teacher))

  const manifest: Record<string, unknown> = {
    version: 1,
    n_samples: n,
    class_names: d.classNames,
    splits: d.splits,
    layers: d.layers.map(l => ({
      name: l.name, n_kernels: l.nKernels, pooled: l.pooled, file: `${l.name}.norms`,
    })),
    image_refs: d.imageRefs ?? null,
  }
  if (d.preprocessing) manifest.preprocessing = d.preprocessing
  writeFileSync(join(dir, 'manifest.json'), JSON.stringify(manifest, null, 2) + '\n')
}
