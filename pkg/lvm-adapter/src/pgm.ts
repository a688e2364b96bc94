/** Binary PGM (P5) masks: 255 = building, 0 = background. */
import { readFileSync, writeFileSync } from "node:fs";

export interface BitMask {
  width: number;
  height: number;
  /** Row-major, one byte per pixel, 0 or 1. */
  bits: Uint8Array;
}

export function emptyMask(width: number, height: number): BitMask {
  return { width, height, bits: new Uint8Array(width * height) };
}

export function unionMasks(masks: BitMask[], width: number, height: number): BitMask {
  const out = emptyMask(width, height);
  for (const mask of masks) {
    if (mask.width !== width || mask.height !== height) {
      throw new Error(`mask is ${mask.width}x${mask.height}, expected ${width}x${height}`);
    }
    for (let i = 0; i < out.bits.length; i++) out.bits[i] |= mask.bits[i];
  }
  return out;
}

export function writePgm(path: string, mask: BitMask): void {
  const header = Buffer.from(`P5\n${mask.width} ${mask.height}\n255\n`, "latin1");
  const raster = Buffer.alloc(mask.bits.length);
  for (let i = 0; i < mask.bits.length; i++) raster[i] = mask.bits[i] ? 255 : 0;
  writeFileSync(path, Buffer.concat([header, raster]));
}

export function readPgm(path: string): BitMask {
  const data = readFileSync(path);
  if (data.subarray(0, 2).toString("latin1") !== "P5") {
    throw new Error(`${path}: not a binary PGM (P5)`);
  }
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    const c = data[pos];
    if (c === 0x23) {
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      pos++;
    } else if (c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d) {
      pos++;
    } else {
      let end = pos;
      while (end < data.length && data[end] > 0x20) end++;
      fields.push(Number(data.subarray(pos, end).toString("latin1")));
      pos = end;
    }
  }
  pos++;
  const [width, height, maxval] = fields;
  if (maxval !== 255) throw new Error(`${path}: unsupported PGM maxval ${maxval}`);
  const raster = data.subarray(pos, pos + width * height);
  if (raster.length !== width * height) {
    throw new Error(`${path}: PGM raster is ${raster.length} bytes, expected ${width * height}`);
  }
  const bits = new Uint8Array(width * height);
  for (let i = 0; i < bits.length; i++) bits[i] = raster[i] >= 128 ? 1 : 0;
  return { width, height, bits };
}
