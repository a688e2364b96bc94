/**
 * Input image decoding: binary PPM (P6) and 8-bit non-interlaced PNG.
 *
 * PNG support covers grayscale, RGB, and RGBA at bit depth 8, which is what
 * panorama exporters produce; palette and 16-bit images are rejected.
 */
import { readFileSync } from "node:fs";
import { inflateSync } from "node:zlib";

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB, 3 bytes per pixel. */
  rgb: Uint8Array;
}

const PNG_SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

export function readImage(path: string): RgbImage {
  const data = readFileSync(path);
  if (data.subarray(0, 2).toString("latin1") === "P6") {
    return decodePpm(data, path);
  }
  if (data.subarray(0, 8).equals(PNG_SIGNATURE)) {
    return decodePng(data, path);
  }
  throw new Error(`${path}: not a binary PPM (P6) or PNG image`);
}

export function decodePpm(data: Buffer, label = "ppm"): RgbImage {
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    if (pos >= data.length) throw new Error(`${label}: truncated PPM header`);
    const c = data[pos];
    if (c === 0x23) {
      // comment: skip to end of line
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      pos++;
    } else if (c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d) {
      pos++;
    } else {
      let end = pos;
      while (end < data.length && data[end] > 0x20) end++;
      const token = data.subarray(pos, end).toString("latin1");
      if (!/^\d+$/.test(token)) {
        throw new Error(`${label}: non-numeric PPM header field '${token}'`);
      }
      fields.push(Number(token));
      pos = end;
    }
  }
  pos++; // single whitespace byte after maxval
  const [width, height, maxval] = fields;
  if (maxval !== 255) throw new Error(`${label}: unsupported PPM maxval ${maxval}`);
  const expected = width * height * 3;
  const raster = data.subarray(pos, pos + expected);
  if (raster.length !== expected) {
    throw new Error(`${label}: PPM raster is ${raster.length} bytes, expected ${expected}`);
  }
  return { width, height, rgb: new Uint8Array(raster) };
}

interface PngHeader {
  width: number;
  height: number;
  bitDepth: number;
  colorType: number;
  interlace: number;
}

export function decodePng(data: Buffer, label = "png"): RgbImage {
  let pos = 8;
  let header: PngHeader | null = null;
  const idatParts: Buffer[] = [];
  while (pos + 8 <= data.length) {
    const length = data.readUInt32BE(pos);
    const type = data.subarray(pos + 4, pos + 8).toString("latin1");
    const body = data.subarray(pos + 8, pos + 8 + length);
    pos += 12 + length; // length + type + body + crc
    if (type === "IHDR") {
      header = {
        width: body.readUInt32BE(0),
        height: body.readUInt32BE(4),
        bitDepth: body[8],
        colorType: body[9],
        interlace: body[12],
      };
    } else if (type === "IDAT") {
      idatParts.push(body);
    } else if (type === "IEND") {
      break;
    }
  }
  if (!header) throw new Error(`${label}: missing IHDR chunk`);
  if (header.bitDepth !== 8) {
    throw new Error(`${label}: unsupported PNG bit depth ${header.bitDepth}`);
  }
  if (header.interlace !== 0) throw new Error(`${label}: interlaced PNG not supported`);
  const channels = { 0: 1, 2: 3, 4: 2, 6: 4 }[header.colorType];
  if (channels === undefined || header.colorType === 4) {
    throw new Error(`${label}: unsupported PNG color type ${header.colorType}`);
  }
  const raw = inflateSync(Buffer.concat(idatParts));
  const { width, height } = header;
  const stride = width * channels;
  if (raw.length !== (stride + 1) * height) {
    throw new Error(`${label}: PNG data is ${raw.length} bytes, expected ${(stride + 1) * height}`);
  }

  // undo per-scanline filters in place
  const pixels = new Uint8Array(stride * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const row = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
    const out = pixels.subarray(y * stride, (y + 1) * stride);
    const prev = y > 0 ? pixels.subarray((y - 1) * stride, y * stride) : null;
    for (let x = 0; x < stride; x++) {
      const a = x >= channels ? out[x - channels] : 0;
      const b = prev ? prev[x] : 0;
      const c = prev && x >= channels ? prev[x - channels] : 0;
      let value = row[x];
      switch (filter) {
        case 0: break;
        case 1: value += a; break;
        case 2: value += b; break;
        case 3: value += (a + b) >> 1; break;
        case 4: value += paeth(a, b, c); break;
        default: throw new Error(`${label}: unknown PNG filter ${filter}`);
      }
      out[x] = value & 0xff;
    }
  }

  const rgb = new Uint8Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    const src = i * channels;
    if (channels === 1) {
      rgb[i * 3] = rgb[i * 3 + 1] = rgb[i * 3 + 2] = pixels[src];
    } else {
      rgb[i * 3] = pixels[src];
      rgb[i * 3 + 1] = pixels[src + 1];
      rgb[i * 3 + 2] = pixels[src + 2];
    }
  }
  return { width, height, rgb };
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}
