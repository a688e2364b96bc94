/** Detector + segmenter backends behind one interface. */
import type { RgbImage } from "./image.js";

/** Field names follow the boxes.json wire format. */
export interface WireBox {
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
  score: number;
  phrase: string;
}

export interface SegmentedDetection {
  box: WireBox;
  /** Row-major 0/1 mask, same dimensions as the input image. */
  mask: Uint8Array;
}

export interface SegmenterBackend {
  readonly name: string;
  detectAndSegment(
    image: RgbImage,
    prompt: string,
    boxThreshold: number,
    textThreshold: number,
  ): Promise<SegmentedDetection[]>;
}

export function clampBox(box: WireBox, width: number, height: number): WireBox {
  return {
    ...box,
    x_min: Math.max(0, Math.min(box.x_min, width)),
    y_min: Math.max(0, Math.min(box.y_min, height)),
    x_max: Math.max(0, Math.min(box.x_max, width)),
    y_max: Math.max(0, Math.min(box.y_max, height)),
  };
}
