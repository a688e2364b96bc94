/**
 * Neural backend: open-vocabulary detection (Grounding DINO) feeding a
 * box-prompted segmenter (SAM), both through @huggingface/transformers.
 *
 * The package is an optional peer dependency and model weights must be
 * cached locally; a missing runtime or download failure surfaces as a clear
 * error so callers can fall back to the classical backend.
 */
import type { RgbImage } from "./image.js";
import type { SegmentedDetection, SegmenterBackend, WireBox } from "./backend.js";

const DETECTOR_MODEL = process.env.LVM_DETECTOR_MODEL ?? "IDEA-Research/grounding-dino-tiny";
const SEGMENTER_MODEL = process.env.LVM_SEGMENTER_MODEL ?? "Xenova/slimsam-77-uniform";

async function loadTransformers(): Promise<any> {
  const specifier = "@huggingface/transformers";
  try {
    return await import(specifier);
  } catch {
    throw new Error(
      "the grounded-sam backend needs the optional @huggingface/transformers " +
        "package plus locally cached model weights; install it or run with " +
        "--backend contrast",
    );
  }
}

export function createGroundedSamBackend(): SegmenterBackend {
  let loaded: Promise<{ detector: any; segModel: any; segProcessor: any; RawImage: any }> | null =
    null;

  async function load() {
    const tf = await loadTransformers();
    try {
      const detector = await tf.pipeline("zero-shot-object-detection", DETECTOR_MODEL);
      const segProcessor = await tf.AutoProcessor.from_pretrained(SEGMENTER_MODEL);
      const segModel = await tf.SamModel.from_pretrained(SEGMENTER_MODEL);
      return { detector, segModel, segProcessor, RawImage: tf.RawImage };
    } catch (err) {
      throw new Error(
        `failed to load model weights (${DETECTOR_MODEL}, ${SEGMENTER_MODEL}): ` +
          `${err instanceof Error ? err.message : err}`,
      );
    }
  }

  return {
    name: "grounded-sam",
    async detectAndSegment(image, prompt, boxThreshold, textThreshold) {
      loaded ??= load();
      const { detector, segModel, segProcessor, RawImage } = await loaded;
      const raw = new RawImage(new Uint8ClampedArray(image.rgb), image.width, image.height, 3);

      const found: Array<{ box: any; score: number; label: string }> = await detector(
        raw,
        [prompt],
        { threshold: boxThreshold, text_threshold: textThreshold },
      );

      const detections: SegmentedDetection[] = [];
      for (const hit of found) {
        const box: WireBox = {
          x_min: hit.box.xmin,
          y_min: hit.box.ymin,
          x_max: hit.box.xmax,
          y_max: hit.box.ymax,
          score: hit.score,
          phrase: hit.label ?? prompt,
        };
        const inputs = await segProcessor(raw, {
          input_boxes: [[[box.x_min, box.y_min, box.x_max, box.y_max]]],
        });
        const outputs = await segModel(inputs);
        const maskTensors = await segProcessor.post_process_masks(
          outputs.pred_masks,
          inputs.original_sizes,
          inputs.reshaped_input_sizes,
        );
        // take the highest-IoU mask proposal for the box
        const scores = outputs.iou_scores.data as Float32Array;
        let best = 0;
        for (let k = 1; k < scores.length; k++) if (scores[k] > scores[best]) best = k;
        const proposal = maskTensors[0][0][best];
        const mask = new Uint8Array(image.width * image.height);
        const data = proposal.data as Uint8Array | Float32Array;
        for (let i = 0; i < mask.length; i++) mask[i] = data[i] ? 1 : 0;
        detections.push({ box, mask });
      }
      return detections;
    },
  };
}
