/** End-to-end check: generate a tiny 3-class scene set, train the small CNN,
 * export activations, then hand the dataset to the convlogic CLI to extract
 * and evaluate a program at the last conv layer.  Passes when the program's
 * validation accuracy lands within 20 points of the teacher's. */

import { execFileSync } from 'child_process'
import { readFileSync } from 'fs'
import { mkdtempSync } from 'fs'
import { tmpdir } from 'os'
import { join } from 'path'

import { main } from './cli'

function readClassVector(path: string, magic: string): Uint16Array {
  const raw = readFileSync(path)
  if (raw.toString('ascii', 0, 4) !== magic) throw new Error(`${path}: bad magic`)
  const n = raw.readUInt32LE(4)
  return new Uint16Array(raw.buffer, raw.byteOffset + 8, n)
}

function readSplits(dir: string): Record<string, number[]> {
  return JSON.parse(readFileSync(join(dir, 'manifest.json'), 'utf-8')).splits
}

async function run(): Promise<void> {
  const started = Date.now()
  const work = mkdtempSync(join(tmpdir(), 'convlogic-e2e-'))
  const images = join(work, 'scenes')
  const modelDir = join(work, 'model')
  const ds = join(work, 'ds')
  const prog = join(work, 'prog.eric')

  console.log(`workdir: ${work}`)
  let code = await main(['gen-scenes', '--out', images, '--per-class', '100', '--seed', '1'])
  if (code !== 0) throw new Error('gen-scenes failed')
  code = await main(['train', '--images', images, '--model', modelDir,
                     '--epochs', '12', '--seed', '1234'])
  if (code !== 0) throw new Error('train failed')
  code = await main(['export', '--images', images, '--model', modelDir, '--out', ds])
  if (code !== 0) throw new Error('export failed')

  // teacher validation accuracy straight from the exported files
  const labels = readClassVector(join(ds, 'labels.bin'), 'EATL')
  const teacher = readClassVector(join(ds, 'teacher.bin'), 'EATP')
  const val = readSplits(ds).val
  const teacherAcc = val.filter(i => labels[i] === teacher[i]).length / val.length
  console.log(`teacher val accuracy: ${teacherAcc.toFixed(3)}`)

  execFileSync('convlogic', ['extract', '--dataset', ds, '--lep', 'conv3',
                             '--depth', '5', '--alpha', '0.01', '--out', prog],
               { stdio: ['ignore', 'inherit', 'inherit'] })
  const out = execFileSync('convlogic', ['evaluate', '--dataset', ds,
                                         '--program', prog, '--split', 'val'],
                           { encoding: 'utf-8' })
  process.stdout.write(out)
  const match = out.match(/val: accuracy=([0-9.]+)/)
  if (!match) throw new Error('could not parse program val accuracy')
  const programAcc = parseFloat(match[1])

  const gap = Math.abs(teacherAcc - programAcc)
  console.log(`program val accuracy: ${programAcc.toFixed(3)} (gap ${(gap * 100).toFixed(1)} points)`)
  if (gap > 0.20) {
    throw new Error(`program val accuracy ${programAcc} more than 20 points from teacher ${teacherAcc}`)
  }
  const minutes = (Date.now() - started) / 60_000
  console.log(`elapsed: ${minutes.toFixed(1)} min`)
  if (minutes >= 15) throw new Error(`e2e took ${minutes.toFixed(1)} min, budget is 15`)
  console.log('e2e: PASS')
}

run().catch(e => {
  console.error(`e2e: FAIL: ${e instanceof Error ? e.message : e}`)
  process.exit(1)
})
