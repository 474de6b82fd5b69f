/** Deterministic generator for a tiny 3-class scene image set (P6 PPM).
 * The classes carry simple, CNN-learnable structure: sandy gradients with a
 * horizon (desert), dark vertical trunks on green (forest), and a grey road
 * with dashed centre line and building blocks (street). */

import { mkdirSync, writeFileSync } from 'fs'
import { join } from 'path'

import { writePpm } from './ppm'

export const SCENE_CLASSES = ['desert', 'forest', 'street'] as const
export type SceneClass = (typeof SCENE_CLASSES)[number]

export const IMAGE_SIZE = 32

/** Small deterministic PRNG (mulberry32). */
export function rng(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a |= 0
    a = (a + 0x6d2b79f5) | 0
    let t = Math.imul(a ^ (a >>> 15), 1 | a)
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

type Pixel = [number, number, number]

function paint(px: Uint8Array, x: number, y: number, [r, g, b]: Pixel): void {
  const i = (y * IMAGE_SIZE + x) * 3
  px[i] = r
  px[i + 1] = g
  px[i + 2] = b
}

function clamp(v: number): number {
  return Math.max(0, Math.min(255, Math.round(v)))
}

export function drawScene(cls: SceneClass, random: () => number): Uint8Array {
  const n = IMAGE_SIZE
  const px = new Uint8Array(n * n * 3)
  const noise = () => (random() - 0.5) * 30

  if (cls === 'desert') {
    const horizon = 8 + Math.floor(random() * 8)
    for (let y = 0; y < n; y++) {
      for (let x = 0; x < n; x++) {
        if (y < horizon) {
          paint(px, x, y, [clamp(140 + noise()), clamp(190 + noise()), clamp(235 + noise())])
        } else {
          const warm = 200 - (y - horizon) * 2
          paint(px, x, y, [clamp(warm + 20 + noise()), clamp(warm - 20 + noise()), clamp(90 + noise())])
        }
      }
    }
  } else if (cls === 'forest') {
    for (let y = 0; y < n; y++) {
      for (let x = 0; x < n; x++) {
        paint(px, x, y, [clamp(30 + noise()), clamp(110 + random() * 60), clamp(30 + noise())])
      }
    }
    const trunks = 3 + Math.floor(random() * 3)
    for (let t = 0; t < trunks; t++) {
      const cx = 2 + Math.floor(random() * (n - 4))
      const width = 1 + Math.floor(random() * 2)
      for (let y = Math.floor(n * 0.3); y < n; y++) {
        for (let dx = 0; dx < width; dx++) {
          paint(px, Math.min(n - 1, cx + dx), y, [clamp(70 + noise()), clamp(45 + noise()), clamp(20 + noise())])
        }
      }
    }
  } else {
    for (let y = 0; y < n; y++) {
      for (let x = 0; x < n; x++) {
        const g = y > n / 2 ? 90 : 150
        paint(px, x, y, [clamp(g + noise()), clamp(g + noise()), clamp(g + noise())])
      }
    }
    // buildings above, dashed centre line on the road below
    const blocks = 2 + Math.floor(random() * 3)
    for (let b = 0; b < blocks; b++) {
      const x0 = Math.floor(random() * (n - 8))
      const w = 4 + Math.floor(random() * 6)
      const h = 6 + Math.floor(random() * 8)
      const shade: Pixel = [clamp(60 + random() * 120), clamp(60 + random() * 120), clamp(70 + random() * 120)]
      for (let y = 0; y < h; y++) {
        for (let x = x0; x < Math.min(n, x0 + w); x++) paint(px, x, y, shade)
      }
    }
    const lineY = Math.floor(n * 0.75)
    for (let x = 0; x < n; x += 4) {
      paint(px, x, lineY, [235, 235, 235])
      paint(px, Math.min(n - 1, x + 1), lineY, [235, 235, 235])
    }
  }
  return px
}

export interface SceneSetOptions {
  outDir: string
  perClass: number
  seed: number
  trainFraction?: number
  valFraction?: number
}

/** Writes images under <outDir>/images/<class>/ and one image-list file per
 * split (`train.txt`, `val.txt`, `test.txt`), lines of `<relpath> <class>`. */
export function generateSceneSet(opts: SceneSetOptions): void {
  const trainFraction = opts.trainFraction ?? 0.8
  const valFraction = opts.valFraction ?? 0.1
  const random = rng(opts.seed)
  const lists: Record<'train' | 'val' | 'test', string[]> = { train: [], val: [], test: [] }

  for (const cls of SCENE_CLASSES) {
    const dir = join(opts.outDir, 'images', cls)
    mkdirSync(dir, { recursive: true })
    for (let i = 0; i < opts.perClass; i++) {
      const name = `${cls}_${String(i).padStart(3, '0')}.ppm`
      writePpm(join(dir, name), {
        width: IMAGE_SIZE, height: IMAGE_SIZE, pixels: drawScene(cls, random),
      })
      const rel = `images/${cls}/${name}`
      const split = i < opts.perClass * trainFraction ? 'train'
        : i < opts.perClass * (trainFraction + valFraction) ? 'val' : 'test'
      lists[split].push(`${rel} ${cls}`)
    }
  }
  for (const split of ['train', 'val', 'test'] as const) {
    writeFileSync(join(opts.outDir, `${split}.txt`), lists[split].join('\n') + '\n')
  }
}
