/**
 * In-memory bindings for the maskfuse toolkit.
 *
 * Detector pipelines hand over stacks of binary masks plus scores and
 * get fusion/evaluation/sweep results back as plain objects; all disk
 * plumbing (manifests, label PNGs, temp trees) happens inside. Results
 * are bit-identical to driving the command-line interface by hand on
 * the same data, which the test suite pins.
 */

import { readFile, writeFile, mkdir } from "node:fs/promises";
import { join } from "node:path";

import { BoundPredictionSet } from "./masks.js";
import type { LabelMap } from "./masks.js";
import { fromManifest, toManifest } from "./manifest.js";
import type { ManifestPayload } from "./manifest.js";
import { decodeLabelPng, encodeLabelPng } from "./png.js";
import { runCli, withTempDir } from "./runner.js";

export { BoundPredictionSet, instancesFromLabels, labelMap } from "./masks.js";
export type { BoundInstance, LabelMap, MaskInput } from "./masks.js";
export { fromColumnMajorRle, rleDecode, rleEncode, toColumnMajorRle } from "./rle.js";
export { decodeLabelPng, encodeLabelPng } from "./png.js";
export { fromManifest, toManifest } from "./manifest.js";
export type { ManifestInstance, ManifestPayload } from "./manifest.js";
export { MaskfuseCliError, maskfuseBinary } from "./runner.js";

export const TRANSFORMS = ["identity", "hflip", "vflip", "rot90cw", "rot90ccw"] as const;
export type TransformName = (typeof TRANSFORMS)[number];

export type OverlapRule = "votes" | "score";

export interface FusionOptions {
  /** IoU above which instances from different versions are aligned (default 0.5) */
  matchThreshold?: number;
  /** minimum member versions for a fused instance to survive (default 1) */
  minVersions?: number;
  /** vote against all versions instead of matched members */
  voteOverAllVersions?: boolean;
  /** filter each version by score before fusing */
  tau?: number;
}

export interface EvalResult {
  sbd: number;
  dic: number;
  absDic: number;
  predCount: number;
  gtCount: number;
}

export interface SweepRow {
  tau: number;
  meanSbd: number;
  meanDic: number;
  meanAbsDic: number;
  meanPredCount: number;
  nImages: number;
}

export interface SweepOptions extends FusionOptions {
  taus?: number[];
  tta?: boolean;
  overlapRule?: OverlapRule;
}

export interface GenerateOptions {
  images?: number;
  leaves?: number;
  width?: number;
  height?: number;
  seed?: number;
  mergeProb?: number;
  dropProb?: number;
  boundaryNoise?: number;
  scoreJitter?: number;
  transforms?: readonly TransformName[];
}

export interface GeneratedImage {
  imageId: string;
  groundTruth: LabelMap;
  versions: Partial<Record<TransformName, BoundPredictionSet>>;
}

function fusionFlags(opts: FusionOptions): string[] {
  const flags: string[] = [];
  if (opts.matchThreshold !== undefined) flags.push("--match-threshold", String(opts.matchThreshold));
  if (opts.minVersions !== undefined) flags.push("--min-versions", String(opts.minVersions));
  if (opts.voteOverAllVersions) flags.push("--vote-over-all-versions");
  if (opts.tau !== undefined) flags.push("--tau", String(opts.tau));
  return flags;
}

async function writeManifest(path: string, imageId: string, ps: BoundPredictionSet): Promise<void> {
  await writeFile(path, JSON.stringify(toManifest(imageId, ps)) + "\n");
}

async function readManifest(path: string): Promise<BoundPredictionSet> {
  const payload = JSON.parse(await readFile(path, "utf-8")) as ManifestPayload;
  return fromManifest(payload);
}

async function writeVersionTree(
  root: string,
  imageId: string,
  versions: Partial<Record<TransformName, BoundPredictionSet>>,
): Promise<void> {
  for (const [name, ps] of Object.entries(versions)) {
    if (!TRANSFORMS.includes(name as TransformName)) {
      throw new RangeError(`unknown transform ${name}`);
    }
    if (!ps) continue;
    const dir = join(root, name);
    await mkdir(dir, { recursive: true });
    await writeManifest(join(dir, `${imageId}.json`), imageId, ps);
  }
}

/**
 * De-augment, align and majority-vote one image's per-transform
 * predictions. The identity entry is required; rotated entries must
 * come in rotated (swapped) dimensions.
 */
export async function fuse(
  predictions: Partial<Record<TransformName, BoundPredictionSet>>,
  opts: FusionOptions = {},
): Promise<BoundPredictionSet> {
  if (!predictions.identity) {
    throw new RangeError("predictions must include the identity transform");
  }
  return withTempDir(async (dir) => {
    const pred = join(dir, "pred");
    await writeVersionTree(pred, "img", predictions);
    const out = join(dir, "fused");
    await runCli(["fuse", "--pred-dir", pred, "--out", out, ...fusionFlags(opts)]);
    return readManifest(join(out, "img.json"));
  });
}

/** Score one prediction set against a ground-truth label map. */
export async function evaluate(
  pred: BoundPredictionSet,
  groundTruth: LabelMap,
  opts: { overlapRule?: OverlapRule } = {},
): Promise<EvalResult> {
  return withTempDir(async (dir) => {
    const predDir = join(dir, "pred");
    const gtDir = join(dir, "gt");
    await mkdir(predDir, { recursive: true });
    await mkdir(gtDir, { recursive: true });
    await writeManifest(join(predDir, "img.json"), "img", pred);
    await writeFile(join(gtDir, "img.png"), encodeLabelPng(groundTruth));
    const out = join(dir, "report");
    const args = ["evaluate", "--pred", predDir, "--gt", gtDir, "--out", out];
    if (opts.overlapRule) args.push("--overlap-rule", opts.overlapRule);
    await runCli(args);
    const report = JSON.parse(await readFile(join(out, "report.json"), "utf-8")) as {
      per_image: Array<{
        sbd: number;
        dic: number;
        abs_dic: number;
        pred_count: number;
        gt_count: number;
      }>;
    };
    const row = report.per_image[0]!;
    return {
      sbd: row.sbd,
      dic: row.dic,
      absDic: row.abs_dic,
      predCount: row.pred_count,
      gtCount: row.gt_count,
    };
  });
}

/** Run the detection-threshold sweep over an in-memory corpus. */
export async function sweep(
  corpus: Array<{
    imageId: string;
    versions: Partial<Record<TransformName, BoundPredictionSet>>;
    groundTruth: LabelMap;
  }>,
  opts: SweepOptions = {},
): Promise<SweepRow[]> {
  if (corpus.length === 0) throw new RangeError("corpus is empty");
  return withTempDir(async (dir) => {
    const pred = join(dir, "pred");
    const gtDir = join(dir, "gt");
    await mkdir(gtDir, { recursive: true });
    for (const { imageId, versions, groundTruth } of corpus) {
      await writeVersionTree(pred, imageId, versions);
      await writeFile(join(gtDir, `${imageId}.png`), encodeLabelPng(groundTruth));
    }
    const out = join(dir, "sweep.csv");
    const args = ["sweep", "--pred-dir", pred, "--gt", gtDir, "--out", out];
    if (opts.taus) args.push("--taus", opts.taus.join(","));
    if (opts.tta) args.push("--tta");
    if (opts.overlapRule) args.push("--overlap-rule", opts.overlapRule);
    args.push(...fusionFlags({ ...opts, tau: undefined }));
    await runCli(args);
    const lines = (await readFile(out, "utf-8")).trim().split("\n");
    return lines.slice(1).map((line) => {
      const [tau, sbd, dic, absDic, count, n] = line.split(",");
      return {
        tau: Number(tau),
        meanSbd: Number(sbd),
        meanDic: Number(dic),
        meanAbsDic: Number(absDic),
        meanPredCount: Number(count),
        nImages: Number(n),
      };
    });
  });
}

/** Generate a seeded synthetic corpus and return it in memory. */
export async function generate(opts: GenerateOptions = {}): Promise<GeneratedImage[]> {
  return withTempDir(async (dir) => {
    const args = ["gen", "--out", dir];
    if (opts.images !== undefined) args.push("--images", String(opts.images));
    if (opts.leaves !== undefined) args.push("--leaves", String(opts.leaves));
    if (opts.width !== undefined) args.push("--width", String(opts.width));
    if (opts.height !== undefined) args.push("--height", String(opts.height));
    if (opts.seed !== undefined) args.push("--seed", String(opts.seed));
    if (opts.mergeProb !== undefined) args.push("--merge-prob", String(opts.mergeProb));
    if (opts.dropProb !== undefined) args.push("--drop-prob", String(opts.dropProb));
    if (opts.boundaryNoise !== undefined) args.push("--boundary-noise", String(opts.boundaryNoise));
    if (opts.scoreJitter !== undefined) args.push("--score-jitter", String(opts.scoreJitter));
    if (opts.transforms) args.push("--transforms", opts.transforms.join(","));
    await runCli(args);
    const index = JSON.parse(await readFile(join(dir, "index.json"), "utf-8")) as {
      images: string[];
      transforms: TransformName[];
    };
    const out: GeneratedImage[] = [];
    for (const imageId of index.images) {
      const groundTruth = decodeLabelPng(await readFile(join(dir, "gt", `${imageId}.png`)));
      const versions: Partial<Record<TransformName, BoundPredictionSet>> = {};
      for (const t of index.transforms) {
        versions[t] = await readManifest(join(dir, "pred", t, `${imageId}.json`));
      }
      out.push({ imageId, groundTruth, versions });
    }
    return out;
  });
}
