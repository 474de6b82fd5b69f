/** Minimal binary PPM (P6, maxval 255) reader/writer. */

import { readFileSync, writeFileSync } from 'fs'

export interface PpmImage {
  width: number
  height: number
  /** RGB, row-major, 3 bytes per pixel. */
  pixels: Uint8Array
}

export function writePpm(path: string, image: PpmImage): void {
  const { width, height, pixels } = image
  if (pixels.length !== width * height * 3) {
    throw new Error(`pixel buffer length ${pixels.length} != ${width}x${height}x3`)
  }
  const header = Buffer.from(`P6\n${width} ${height}\n255\n`, 'ascii')
  writeFileSync(path, Buffer.concat([header, Buffer.from(pixels)]))
}

export function readPpm(path: string): PpmImage {
  const raw = readFileSync(path)
  // header: magic, whitespace-separated width/height/maxval, single whitespace
  let offset = 0
  const token = (): string => {
    while (offset < raw.length && isSpace(raw[offset])) {
      if (raw[offset] === 0x23) skipComment()
      offset++
    }
    const start = offset
    while (offset < raw.length && !isSpace(raw[offset])) offset++
    return raw.toString('ascii', start, offset)
  }
  const skipComment = () => {
    while (offset < raw.length && raw[offset] !== 0x0a) offset++
  }
  const isSpace = (b: number) => b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d || b === 0x23

  const magic = token()
  if (magic !== 'P6') throw new Error(`${path}: not a P6 PPM file`)
  const width = parseInt(token(), 10)
  const height = parseInt(token(), 10)
  const maxval = parseInt(token(), 10)
  if (!(width > 0) || !(height > 0)) throw new Error(`${path}: bad dimensions`)
  if (maxval !== 255) throw new Error(`${path}: unsupported maxval ${maxval}`)
  offset++ // the single whitespace after maxval
  const need = width * height * 3
  if (raw.length - offset < need) throw new Error(`${path}: truncated pixel data`)
  return { width, height, pixels: new Uint8Array(raw.subarray(offset, offset + need)) }
}
