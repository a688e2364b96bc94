/**
 * Core adapter: image in, interchange files out.
 *
 * For every processed image the adapter writes `boxes.json`, one
 * `mask_<k>.pgm` per surviving detection, and `mask_union.pgm` (the pixelwise
 * OR), all with the input image's dimensions. Zero detections are a valid
 * outcome: the box list is empty and the union mask all-false.
 */
import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { clampBox, type SegmenterBackend, type WireBox } from "./backend.js";
import { readImage } from "./image.js";
import { unionMasks, writePgm, type BitMask } from "./pgm.js";

export interface AdapterOptions {
  prompt?: string;
  boxThreshold?: number;
  textThreshold?: number;
  backend: SegmenterBackend;
}

export interface AdapterResult {
  width: number;
  height: number;
  boxes: WireBox[];
  boxesFile: string;
  maskFiles: string[];
  unionFile: string;
}

export const DEFAULT_PROMPT = "buildings";
export const DEFAULT_BOX_THRESHOLD = 0.35;
export const DEFAULT_TEXT_THRESHOLD = 0.25;

export async function detectAndSegment(
  imagePath: string,
  outDir: string,
  options: AdapterOptions,
): Promise<AdapterResult> {
  const prompt = options.prompt ?? DEFAULT_PROMPT;
  const boxThreshold = options.boxThreshold ?? DEFAULT_BOX_THRESHOLD;
  const textThreshold = options.textThreshold ?? DEFAULT_TEXT_THRESHOLD;

  const image = readImage(imagePath);
  const detections = await options.backend.detectAndSegment(
    image,
    prompt,
    boxThreshold,
    textThreshold,
  );
  const surviving = detections.filter((d) => d.box.score >= boxThreshold);

  mkdirSync(outDir, { recursive: true });
  const boxes: WireBox[] = [];
  const masks: BitMask[] = [];
  const maskFiles: string[] = [];
  for (const [k, detection] of surviving.entries()) {
    boxes.push(clampBox(detection.box, image.width, image.height));
    const mask: BitMask = {
      width: image.width,
      height: image.height,
      bits: detection.mask,
    };
    masks.push(mask);
    const file = join(outDir, `mask_${k}.pgm`);
    writePgm(file, mask);
    maskFiles.push(file);
  }

  const unionFile = join(outDir, "mask_union.pgm");
  writePgm(unionFile, unionMasks(masks, image.width, image.height));

  const boxesFile = join(outDir, "boxes.json");
  const doc = {
    width: image.width,
    height: image.height,
    prompt,
    boxes,
    // provenance
    box_threshold: boxThreshold,
    text_threshold: textThreshold,
    backend: options.backend.name,
  };
  writeFileSync(boxesFile, JSON.stringify(doc, null, 2) + "\n");

  if (boxes.length === 0) {
    process.stderr.write(`warning: no detections for '${prompt}' in ${imagePath}\n`);
  }
  return {
    width: image.width,
    height: image.height,
    boxes,
    boxesFile,
    maskFiles,
    unionFile,
  };
}
