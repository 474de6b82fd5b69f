/** Exporter command line: gen-scenes | train | export. */

import { join } from 'path'

import * as tf from '@tensorflow/tfjs'

import { exportDataset, imageToTensorData, readImageList } from './export'
import { DEFAULT_BLOCKS, buildModel, saveModel, trainModel } from './model'
import { IMAGE_SIZE, generateSceneSet, rng } from './scenes'

function arg(argv: string[], name: string, fallback?: string): string {
  const i = argv.indexOf(`--${name}`)
  if (i >= 0 && i + 1 < argv.length) return argv[i + 1]
  if (fallback !== undefined) return fallback
  throw new Error(`missing --${name}`)
}

function flag(argv: string[], name: string): boolean {
  return argv.includes(`--${name}`)
}

export async function loadSplit(root: string, listFile: string, classNames: string[]) {
  const entries = readImageList(listFile)
  const data = new Float32Array(entries.length * IMAGE_SIZE * IMAGE_SIZE * 3)
  const labels = new Int32Array(entries.length)
  entries.forEach((entry, i) => {
    data.set(imageToTensorData(join(root, entry.path), IMAGE_SIZE),
             i * IMAGE_SIZE * IMAGE_SIZE * 3)
    const cls = classNames.indexOf(entry.className)
    if (cls < 0) throw new Error(`unknown class ${entry.className}`)
    labels[i] = cls
  })
  const images = tf.tensor4d(data, [entries.length, IMAGE_SIZE, IMAGE_SIZE, 3])
  const oneHot = tf.oneHot(tf.tensor1d(labels, 'int32'), classNames.length) as tf.Tensor2D
  return { images, oneHot, labels, entries }
}

async function cmdGenScenes(argv: string[]): Promise<void> {
  const out = arg(argv, 'out')
  const perClass = parseInt(arg(argv, 'per-class', '100'), 10)
  const seed = parseInt(arg(argv, 'seed', '1'), 10)
  generateSceneSet({ outDir: out, perClass, seed })
  process.stdout.write(`wrote ${3 * perClass} images under ${out}\n`)
}

async function cmdTrain(argv: string[]): Promise<void> {
  const root = arg(argv, 'images')
  const modelDir = arg(argv, 'model')
  const epochs = parseInt(arg(argv, 'epochs', '30'), 10)
  const seed = parseInt(arg(argv, 'seed', '1234'), 10)

  const entries = readImageList(join(root, 'train.txt'))
  const classNames = [...new Set(entries.map(e => e.className))].sort()
  const { images, oneHot } = await loadSplit(root, join(root, 'train.txt'), classNames)

  // deterministic pre-shuffle, then fit with shuffle disabled
  const order = [...Array(images.shape[0]).keys()]
  const random = rng(seed)
  for (let i = order.length - 1; i > 0; i--) {
    const j = Math.floor(random() * (i + 1))
    ;[order[i], order[j]] = [order[j], order[i]]
  }
  const idx = tf.tensor1d(Int32Array.from(order), 'int32')
  const shuffledImages = tf.gather(images, idx) as tf.Tensor4D
  const shuffledLabels = tf.gather(oneHot, idx) as tf.Tensor2D

  const model = buildModel(IMAGE_SIZE, classNames.length, DEFAULT_BLOCKS, seed)
  const acc = await trainModel(model, shuffledImages, shuffledLabels,
                               { epochs, verbose: flag(argv, 'verbose') })
  await saveModel(model, modelDir)
  process.stdout.write(`trained on ${images.shape[0]} images, `
    + `final train accuracy ${acc.toFixed(3)} -> ${modelDir}\n`)
}

async function cmdExport(argv: string[]): Promise<void> {
  const root = arg(argv, 'images')
  const payload = await exportDataset({
    modelDir: arg(argv, 'model'),
    imageRoot: root,
    listFiles: {
      train: join(root, 'train.txt'),
      val: join(root, 'val.txt'),
      test: join(root, 'test.txt'),
    },
    layers: arg(argv, 'layers', DEFAULT_BLOCKS.map(b => b.name).join(','))
      .split(',').map(s => s.trim()),
    outDir: arg(argv, 'out'),
    batchSize: parseInt(arg(argv, 'batch-size', '32'), 10),
    dumpRaw: flag(argv, 'dump-raw'),
  })
  let agree = 0
  for (let i = 0; i < payload.nSamples; i++) {
    if (payload.labels[i] === payload.teacher[i]) agree++
  }
  process.stdout.write(`wrote ${payload.nSamples} samples, `
    + `${payload.layers.length} layers -> ${arg(argv, 'out')}\n`)
  process.stdout.write(`teacher accuracy over all samples: `
    + `${(agree / payload.nSamples).toFixed(3)}\n`)
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv
  try {
    if (command === 'gen-scenes') await cmdGenScenes(rest)
    else if (command === 'train') await cmdTrain(rest)
    else if (command === 'export') await cmdExport(rest)
    else {
      process.stderr.write('usage: cli.js <gen-scenes|train|export> [--flags]\n')
      return 1
    }
    return 0
  } catch (e) {
    process.stderr.write(`error: ${e instanceof Error ? e.message : e}\n`)
    return 2
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then(code => process.exit(code))
}
