/** Small convolutional classifier plus file-based save/load for node.
 * Every conv layer feeds a named max-pooling layer; the exporter captures
 * the pooled outputs. */

import { mkdirSync, readFileSync, writeFileSync } from 'fs'
import { join } from 'path'

import * as tf from '@tensorflow/tfjs'

export interface ConvBlockSpec {
  name: string
  filters: number
}

export const DEFAULT_BLOCKS: ConvBlockSpec[] = [
  { name: 'conv1', filters: 8 },
  { name: 'conv2', filters: 16 },
  { name: 'conv3', filters: 32 },
]

export function poolNameFor(convName: string): string {
  return `${convName}_pool`
}

export function buildModel(inputSize: number, nClasses: number,
                           blocks: ConvBlockSpec[] = DEFAULT_BLOCKS,
                           seed = 1234): tf.LayersModel {
  const model = tf.sequential()
  blocks.forEach((block, i) => {
    model.add(tf.layers.conv2d({
      name: block.name,
      filters: block.filters,
      kernelSize: 3,
      padding: 'same',
      activation: 'relu',
      kernelInitializer: tf.initializers.heNormal({ seed: seed + i }),
      ...(i === 0 ? { inputShape: [inputSize, inputSize, 3] } : {}),
    }))
    model.add(tf.layers.maxPooling2d({ name: poolNameFor(block.name), poolSize: 2 }))
  })
  model.add(tf.layers.flatten())
  model.add(tf.layers.dense({
    name: 'logits',
    units: nClasses,
    activation: 'softmax',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 100 }),
  }))
  return model
}

export async function saveModel(model: tf.LayersModel, dir: string): Promise<void> {
  mkdirSync(dir, { recursive: true })
  await model.save(tf.io.withSaveHandler(async artifacts => {
    const weightData = artifacts.weightData as ArrayBuffer | ArrayBuffer[]
    const buffers = Array.isArray(weightData)
      ? weightData.map(b => Buffer.from(b))
      : [Buffer.from(weightData)]
    writeFileSync(join(dir, 'weights.bin'), Buffer.concat(buffers))
    writeFileSync(join(dir, 'model.json'), JSON.stringify({
      modelTopology: artifacts.modelTopology,
      weightSpecs: artifacts.weightSpecs,
      format: artifacts.format,
      generatedBy: artifacts.generatedBy,
    }, null, 2))
    return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } }
  }))
}

export async function loadModel(dir: string): Promise<tf.LayersModel> {
  const doc = JSON.parse(readFileSync(join(dir, 'model.json'), 'utf-8'))
  const raw = readFileSync(join(dir, 'weights.bin'))
  const weightData = raw.buffer.slice(raw.byteOffset, raw.byteOffset + raw.byteLength)
  return tf.loadLayersModel(tf.io.fromMemory({
    modelTopology: doc.modelTopology,
    weightSpecs: doc.weightSpecs,
    weightData,
  }))
}

export interface TrainOptions {
  epochs?: number
  batchSize?: number
  learningRate?: number
  verbose?: boolean
}

export async function trainModel(model: tf.LayersModel, images: tf.Tensor4D,
                                 labels: tf.Tensor2D, opts: TrainOptions = {}): Promise<number> {
  model.compile({
    optimizer: tf.train.adam(opts.learningRate ?? 1e-3),
    loss: 'categoricalCrossentropy',
    metrics: ['accuracy'],
  })
  const history = await model.fit(images, labels, {
    epochs: opts.epochs ?? 25,
    batchSize: opts.batchSize ?? 32,
    shuffle: false, // caller pre-shuffles; keeps runs reproducible
    verbose: 0,
    callbacks: opts.verbose
      ? [new tf.CustomCallback({
          onEpochEnd: async (epoch, logs) => {
            process.stderr.write(`epoch ${epoch + 1}: loss=${logs?.loss?.toFixed(4)} `
              + `acc=${(logs?.acc as number | undefined)?.toFixed(3)}\n`)
          },
        })]
      : [],
  })
  const accs = history.history.acc as number[] | undefined
  return accs ? accs[accs.length - 1] : NaN
}
