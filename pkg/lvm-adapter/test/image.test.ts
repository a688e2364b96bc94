import assert from "node:assert/strict";
import { test } from "node:test";
import { deflateSync } from "node:zlib";

import { decodePng, decodePpm, readImage } from "../src/image.js";
import { blankScene, pngBuffer, ppmBuffer, tempDir, writeTemp } from "./helpers.js";

test("decodes P6 pixels row-major", () => {
  const buf = ppmBuffer(2, 2, (x, y) => [x * 100, y * 100, 7]);
  const image = decodePpm(buf);
  assert.equal(image.width, 2);
  assert.equal(image.height, 2);
  assert.deepEqual([...image.rgb], [0, 0, 7, 100, 0, 7, 0, 100, 7, 100, 100, 7]);
});

test("ppm header comments are skipped", () => {
  const raster = Buffer.from([1, 2, 3]);
  const buf = Buffer.concat([Buffer.from("P6\n# a comment\n1 1\n255\n", "latin1"), raster]);
  assert.deepEqual([...decodePpm(buf).rgb], [1, 2, 3]);
});

test("truncated ppm raster is rejected", () => {
  const buf = Buffer.from("P6\n2 2\n255\nxx", "latin1");
  assert.throws(() => decodePpm(buf), /raster/);
});

test("decodes rgb png", () => {
  const buf = pngBuffer(3, 2, 2, (x, y) => [x * 10, y * 10, 200]);
  const image = decodePng(buf);
  assert.equal(image.width, 3);
  assert.equal(image.height, 2);
  assert.deepEqual([...image.rgb.subarray(0, 6)], [0, 0, 200, 10, 0, 200]);
});

test("grayscale png replicates channels, rgba drops alpha", () => {
  const gray = decodePng(pngBuffer(2, 1, 0, (x) => [x ? 250 : 5]));
  assert.deepEqual([...gray.rgb], [5, 5, 5, 250, 250, 250]);
  const rgba = decodePng(pngBuffer(1, 1, 6, () => [9, 8, 7, 128]));
  assert.deepEqual([...rgba.rgb], [9, 8, 7]);
});

test("png sub filter is undone", () => {
  // one row, filter 1 (Sub): raw deltas [10,10,10, 5,5,5] -> [10,10,10, 15,15,15]
  const raw = Buffer.from([1, 10, 10, 10, 5, 5, 5]);
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(2, 0);
  ihdr.writeUInt32BE(1, 4);
  ihdr[8] = 8;
  ihdr[9] = 2;
  const signature = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
  const crcStub = Buffer.alloc(4); // decoder does not verify CRCs
  const chunkOf = (type: string, body: Buffer) => {
    const len = Buffer.alloc(4);
    len.writeUInt32BE(body.length);
    return Buffer.concat([len, Buffer.from(type, "latin1"), body, crcStub]);
  };
  const buf = Buffer.concat([
    signature,
    chunkOf("IHDR", ihdr),
    chunkOf("IDAT", deflateSync(raw)),
    chunkOf("IEND", Buffer.alloc(0)),
  ]);
  assert.deepEqual([...decodePng(buf).rgb], [10, 10, 10, 15, 15, 15]);
});

test("readImage dispatches by magic and rejects unknown data", () => {
  const dir = tempDir("lvm-image-");
  const ppmPath = writeTemp(dir, "a.ppm", blankScene(4, 2));
  assert.equal(readImage(ppmPath).width, 4);
  const pngPath = writeTemp(dir, "a.png", pngBuffer(5, 3, 2, () => [1, 2, 3]));
  assert.equal(readImage(pngPath).width, 5);
  const junk = writeTemp(dir, "a.bin", Buffer.from("garbage"));
  assert.throws(() => readImage(junk), /not a binary PPM/);
});
