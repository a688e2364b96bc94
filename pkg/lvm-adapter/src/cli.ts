#!/usr/bin/env node
/**
 * lvm-adapter --image <file-or-dir> --out <dir> [--prompt buildings]
 *             [--box-threshold 0.35] [--text-threshold 0.25]
 *             [--backend contrast|grounded-sam]
 *
 * Directory inputs run in batch mode: every .ppm/.png inside is processed
 * into <out>/<stem>/. Exit codes: 0 ok (including zero detections),
 * 1 usage error, 2 data or model error.
 */
import { readdirSync, statSync } from "node:fs";
import { basename, extname, join } from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { detectAndSegment } from "./adapter.js";
import type { SegmenterBackend } from "./backend.js";
import { createContrastBackend } from "./contrast.js";
import { createGroundedSamBackend } from "./groundedSam.js";

function usage(message: string): never {
  process.stderr.write(`error: ${message}\n`);
  process.stderr.write(
    "usage: lvm-adapter --image <file-or-dir> --out <dir> [--prompt <text>] " +
      "[--box-threshold <f>] [--text-threshold <f>] [--backend contrast|grounded-sam]\n",
  );
  process.exit(1);
}

function pickBackend(name: string): SegmenterBackend {
  if (name === "contrast") return createContrastBackend();
  if (name === "grounded-sam") return createGroundedSamBackend();
  usage(`unknown backend '${name}'`);
}

export async function main(argv: string[]): Promise<number> {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        image: { type: "string" },
        out: { type: "string" },
        prompt: { type: "string", default: "buildings" },
        "box-threshold": { type: "string", default: "0.35" },
        "text-threshold": { type: "string", default: "0.25" },
        backend: { type: "string", default: "contrast" },
      },
    });
  } catch (err) {
    usage(err instanceof Error ? err.message : String(err));
  }
  const values = parsed.values;
  if (!values.image || !values.out) usage("--image and --out are required");
  const boxThreshold = Number(values["box-threshold"]);
  const textThreshold = Number(values["text-threshold"]);
  if (!Number.isFinite(boxThreshold) || !Number.isFinite(textThreshold)) {
    usage("thresholds must be numbers");
  }
  const backend = pickBackend(values.backend!);

  const jobs: Array<{ image: string; out: string }> = [];
  if (statSync(values.image, { throwIfNoEntry: false })?.isDirectory()) {
    for (const entry of readdirSync(values.image).sort()) {
      const ext = extname(entry).toLowerCase();
      if (ext === ".ppm" || ext === ".png") {
        jobs.push({
          image: join(values.image, entry),
          out: join(values.out, basename(entry, ext)),
        });
      }
    }
    if (jobs.length === 0) usage(`no .ppm or .png images in ${values.image}`);
  } else {
    jobs.push({ image: values.image, out: values.out });
  }

  try {
    for (const job of jobs) {
      const result = await detectAndSegment(job.image, job.out, {
        prompt: values.prompt,
        boxThreshold,
        textThreshold,
        backend,
      });
      process.stdout.write(
        `${job.image}: ${result.boxes.length} box(es) -> ${job.out}\n`,
      );
    }
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
    return 2;
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
