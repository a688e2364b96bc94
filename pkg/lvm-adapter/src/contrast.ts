/**
 * Classical fallback backend: treats compact high-contrast regions as
 * building candidates.
 *
 * Foreground pixels deviate strongly in luminance from the border-estimated
 * background; 4-connected components above a minimum size become scored
 * boxes, and each box's mask is the foreground inside it. Deterministic and
 * dependency-free, so the interchange contract can be exercised without any
 * model weights.
 */
import type { RgbImage } from "./image.js";
import type { SegmentedDetection, SegmenterBackend } from "./backend.js";

const CONTRAST_THRESHOLD = 50; // luminance delta that counts as foreground
const MIN_BOX_PIXELS = 16;

function luminance(image: RgbImage): Float64Array {
  const lum = new Float64Array(image.width * image.height);
  for (let i = 0; i < lum.length; i++) {
    lum[i] =
      0.299 * image.rgb[i * 3] + 0.587 * image.rgb[i * 3 + 1] + 0.114 * image.rgb[i * 3 + 2];
  }
  return lum;
}

function borderMedian(lum: Float64Array, width: number, height: number): number {
  const border: number[] = [];
  for (let x = 0; x < width; x++) {
    border.push(lum[x], lum[(height - 1) * width + x]);
  }
  for (let y = 1; y < height - 1; y++) {
    border.push(lum[y * width], lum[y * width + width - 1]);
  }
  border.sort((a, b) => a - b);
  return border.length ? border[border.length >> 1] : 0;
}

interface Component {
  pixels: number[];
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
  contrastSum: number;
}

function connectedComponents(
  foreground: Uint8Array,
  contrast: Float64Array,
  width: number,
  height: number,
): Component[] {
  const seen = new Uint8Array(foreground.length);
  const components: Component[] = [];
  const stack: number[] = [];
  for (let start = 0; start < foreground.length; start++) {
    if (!foreground[start] || seen[start]) continue;
    const comp: Component = {
      pixels: [],
      xMin: width,
      xMax: -1,
      yMin: height,
      yMax: -1,
      contrastSum: 0,
    };
    stack.push(start);
    seen[start] = 1;
    while (stack.length) {
      const i = stack.pop()!;
      comp.pixels.push(i);
      comp.contrastSum += contrast[i];
      const x = i % width;
      const y = (i / width) | 0;
      if (x < comp.xMin) comp.xMin = x;
      if (x > comp.xMax) comp.xMax = x;
      if (y < comp.yMin) comp.yMin = y;
      if (y > comp.yMax) comp.yMax = y;
      if (x > 0 && foreground[i - 1] && !seen[i - 1]) { seen[i - 1] = 1; stack.push(i - 1); }
      if (x < width - 1 && foreground[i + 1] && !seen[i + 1]) { seen[i + 1] = 1; stack.push(i + 1); }
      if (y > 0 && foreground[i - width] && !seen[i - width]) { seen[i - width] = 1; stack.push(i - width); }
      if (y < height - 1 && foreground[i + width] && !seen[i + width]) { seen[i + width] = 1; stack.push(i + width); }
    }
    components.push(comp);
  }
  return components;
}

export function createContrastBackend(): SegmenterBackend {
  return {
    name: "contrast",
    async detectAndSegment(image, prompt, boxThreshold, _textThreshold) {
      const { width, height } = image;
      const lum = luminance(image);
      const background = borderMedian(lum, width, height);
      const contrast = new Float64Array(lum.length);
      const foreground = new Uint8Array(lum.length);
      for (let i = 0; i < lum.length; i++) {
        contrast[i] = Math.abs(lum[i] - background);
        foreground[i] = contrast[i] > CONTRAST_THRESHOLD ? 1 : 0;
      }

      const detections: SegmentedDetection[] = [];
      for (const comp of connectedComponents(foreground, contrast, width, height)) {
        if (comp.pixels.length < MIN_BOX_PIXELS) continue;
        const boxArea = (comp.xMax - comp.xMin + 1) * (comp.yMax - comp.yMin + 1);
        const fill = comp.pixels.length / boxArea;
        const meanContrast = comp.contrastSum / comp.pixels.length / 255;
        const score = Math.min(0.99, 0.5 * fill + 0.5 * meanContrast);
        if (score < boxThreshold) continue;
        const mask = new Uint8Array(width * height);
        for (const i of comp.pixels) mask[i] = 1;
        detections.push({
          box: {
            x_min: comp.xMin,
            y_min: comp.yMin,
            x_max: comp.xMax + 1,
            y_max: comp.yMax + 1,
            score,
            phrase: prompt,
          },
          mask,
        });
      }
      detections.sort((a, b) => b.box.score - a.box.score);
      return detections;
    },
  };
}
