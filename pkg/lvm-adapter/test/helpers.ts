/** Deterministic test images written as PPM/PNG buffers. */
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { deflateSync } from "node:zlib";

export function tempDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

export function ppmBuffer(
  width: number,
  height: number,
  paint: (x: number, y: number) => [number, number, number],
): Buffer {
  const raster = Buffer.alloc(width * height * 3);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [r, g, b] = paint(x, y);
      raster.writeUInt8(r, (y * width + x) * 3);
      raster.writeUInt8(g, (y * width + x) * 3 + 1);
      raster.writeUInt8(b, (y * width + x) * 3 + 2);
    }
  }
  return Buffer.concat([Buffer.from(`P6\n${width} ${height}\n255\n`, "latin1"), raster]);
}

/** Dark background with one bright building-like rectangle. */
export function buildingScene(width = 96, height = 48): Buffer {
  return ppmBuffer(width, height, (x, y) =>
    x >= 20 && x < 60 && y >= 10 && y < 38 ? [220, 210, 200] : [15, 15, 20],
  );
}

export function blankScene(width = 64, height = 32): Buffer {
  return ppmBuffer(width, height, () => [15, 15, 20]);
}

export function writeTemp(dir: string, name: string, data: Buffer): string {
  const path = join(dir, name);
  writeFileSync(path, data);
  return path;
}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(data: Buffer): number {
  let crc = 0xffffffff;
  for (const byte of data) crc = CRC_TABLE[(crc ^ byte) & 0xff] ^ (crc >>> 8);
  return (crc ^ 0xffffffff) >>> 0;
}

function chunk(type: string, body: Buffer): Buffer {
  const length = Buffer.alloc(4);
  length.writeUInt32BE(body.length);
  const typed = Buffer.concat([Buffer.from(type, "latin1"), body]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(typed));
  return Buffer.concat([length, typed, crc]);
}

/** Minimal 8-bit PNG encoder (filter 0 rows) for decoder tests. */
export function pngBuffer(
  width: number,
  height: number,
  colorType: 0 | 2 | 6,
  pixel: (x: number, y: number) => number[],
): Buffer {
  const channels = { 0: 1, 2: 3, 6: 4 }[colorType];
  const raw = Buffer.alloc(height * (1 + width * channels));
  for (let y = 0; y < height; y++) {
    const row = y * (1 + width * channels);
    raw[row] = 0; // filter: none
    for (let x = 0; x < width; x++) {
      const values = pixel(x, y);
      for (let c = 0; c < channels; c++) raw[row + 1 + x * channels + c] = values[c];
    }
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8;
  ihdr[9] = colorType;
  const signature = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
  return Buffer.concat([
    signature,
    chunk("IHDR", ihdr),
    chunk("IDAT", deflateSync(raw)),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}
