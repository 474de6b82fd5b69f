/** The exporter: forward-pass a trained classifier over listed images,
 * capture each convolutional block's pooled activations, reduce them to
 * per-kernel l1 norms, record the model's predicted classes and write a
 * dataset directory in the convlogic on-disk format. */

import { copyFileSync, mkdirSync, readFileSync, writeFileSync } from 'fs'
import { dirname, join } from 'path'

import * as tf from '@tensorflow/tfjs'

import { DatasetPayload, LayerNorms, writeDataset } from './dataset'
import { loadModel, poolNameFor } from './model'
import { readPpm } from './ppm'

export interface ImageEntry {
  path: string
  className: string
}

export interface ExportConfig {
  /** Directory holding model.json + weights.bin. */
  modelDir: string
  /** Image-list file per split: lines of `<relpath> <class-name>`. */
  listFiles: { train: string; val: string; test: string }
  /** Root the list-file paths are relative to. */
  imageRoot: string
  /** Convolutional layers to capture (pooled outputs are read). */
  layers: string[]
  outDir: string
  batchSize?: number
  /** Copy the images into <outDir>/images and reference them. */
  copyImages?: boolean
  /** Also dump the raw pooled activation tensors for auditing. */
  dumpRaw?: boolean
}

export function readImageList(path: string): ImageEntry[] {
  const entries: ImageEntry[] = []
  for (const raw of readFileSync(path, 'utf-8').split('\n')) {
    const line = raw.trim()
    if (!line || line.startsWith('#')) continue
    const space = line.lastIndexOf(' ')
    if (space < 1) throw new Error(`${path}: expected '<relpath> <class>' got '${line}'`)
    entries.push({ path: line.slice(0, space).trim(), className: line.slice(space + 1) })
  }
  return entries
}

export function imageToTensorData(path: string, expectSize?: number): Float32Array {
  const img = readPpm(path)
  if (expectSize && (img.width !== expectSize || img.height !== expectSize)) {
    throw new Error(`${path}: expected ${expectSize}x${expectSize}, got ${img.width}x${img.height}`)
  }
  const out = new Float32Array(img.pixels.length)
  for (let i = 0; i < img.pixels.length; i++) out[i] = img.pixels[i] / 255
  return out
}

/** Sum of |values| over the spatial axes: [b, h, w, c] -> [b, c]. */
export function l1NormPerKernel(activation: tf.Tensor4D): tf.Tensor2D {
  return tf.sum(tf.abs(activation), [1, 2]) as tf.Tensor2D
}

interface RawDump {
  name: string
  shape: number[]
  chunks: Float32Array[]
}

export async function exportDataset(cfg: ExportConfig): Promise<DatasetPayload> {
  const model = await loadModel(cfg.modelDir)
  const inputShape = model.inputs[0].shape
  const inputSize = inputShape[1] as number

  for (const name of cfg.layers) {
    try {
      model.getLayer(name)
    } catch {
      throw new Error(`layer ${name} not found in model`)
    }
  }
  const captureNames = cfg.layers.map(poolNameFor)
  const captured = tf.model({
    inputs: model.inputs,
    outputs: [
      ...captureNames.map(n => model.getLayer(n).output as tf.SymbolicTensor),
      model.outputs[0],
    ],
  })

  const splits: Record<'train' | 'val' | 'test', number[]> = { train: [], val: [], test: [] }
  const entries: ImageEntry[] = []
  for (const split of ['train', 'val', 'test'] as const) {
    for (const entry of readImageList(cfg.listFiles[split])) {
      splits[split].push(entries.length)
      entries.push(entry)
    }
  }
  if (entries.length === 0) throw new Error('image lists are empty')
  const classNames = [...new Set(entries.map(e => e.className))].sort()
  const classIndex = new Map(classNames.map((c, i) => [c, i]))

  const n = entries.length
  const kernels: number[] = captureNames.map(
    name => (model.getLayer(name).outputShape as number[])[3])
  const normBuffers = kernels.map(k => new Float32Array(n * k))
  const teacher = new Uint16Array(n)
  const labels = new Uint16Array(n)
  const raws: RawDump[] = captureNames.map(name => ({ name, shape: [], chunks: [] }))

  const batchSize = cfg.batchSize ?? 32
  for (let start = 0; start < n; start += batchSize) {
    const batch = entries.slice(start, start + batchSize)
    const data = new Float32Array(batch.length * inputSize * inputSize * 3)
    batch.forEach((entry, j) => {
      data.set(imageToTensorData(join(cfg.imageRoot, entry.path), inputSize),
               j * inputSize * inputSize * 3)
    })
    const input = tf.tensor4d(data, [batch.length, inputSize, inputSize, 3])
    const outputs = captured.predict(input) as tf.Tensor[]
    for (let li = 0; li < captureNames.length; li++) {
      const act = outputs[li] as tf.Tensor4D
      const norms = l1NormPerKernel(act)
      normBuffers[li].set(norms.dataSync() as Float32Array, start * kernels[li])
      norms.dispose()
      if (cfg.dumpRaw) {
        raws[li].shape = act.shape.slice(1)
        raws[li].chunks.push(new Float32Array(act.dataSync()))
      }
    }
    const probs = outputs[outputs.length - 1] as tf.Tensor2D
    const top1 = tf.argMax(probs, 1).dataSync()
    for (let j = 0; j < batch.length; j++) {
      teacher[start + j] = top1[j]
      labels[start + j] = classIndex.get(batch[j].className)!
    }
    outputs.forEach(t => t.dispose())
    input.dispose()
  }

  let imageRefs: string[] | undefined
  if (cfg.copyImages ?? true) {
    imageRefs = entries.map(e => e.path)
    for (const entry of entries) {
      const dst = join(cfg.outDir, entry.path)
      mkdirSync(dirname(dst), { recursive: true })
      copyFileSync(join(cfg.imageRoot, entry.path), dst)
    }
  }

  const layers: LayerNorms[] = cfg.layers.map((name, li) => ({
    name, nKernels: kernels[li], pooled: true, norms: normBuffers[li],
  }))
  const payload: DatasetPayload = {
    nSamples: n,
    classNames,
    splits,
    layers,
    labels,
    teacher,
    imageRefs,
    preprocessing: {
      pixel_scale: '1/255',
      image_format: 'ppm(P6)',
      input_size: inputSize,
      capture: 'post max-pool',
    },
  }
  writeDataset(cfg.outDir, payload)

  if (cfg.dumpRaw) {
    for (const dump of raws) {
      const total = dump.chunks.reduce((acc, c) => acc + c.length, 0)
      const merged = new Float32Array(total)
      let off = 0
      for (const c of dump.chunks) {
        merged.set(c, off)
        off += c.length
      }
      const header = Buffer.alloc(4 + 4 * 4)
      header.write('EATR', 0, 'ascii')
      header.writeUInt32LE(n, 4)
      header.writeUInt32LE(dump.shape[0], 8)
      header.writeUInt32LE(dump.shape[1], 12)
      header.writeUInt32LE(dump.shape[2], 16)
      writeFileSync(join(cfg.outDir, `${dump.name}.raw`),
                    Buffer.concat([header, Buffer.from(merged.buffer)]))
    }
  }
  return payload
}
