/**
 * Prediction-manifest JSON payloads, mirroring the toolkit's on-disk
 * schema (masks as native row-major RLE).
 */

import { BoundPredictionSet } from "./masks.js";
import { rleDecode, rleEncode } from "./rle.js";

export interface ManifestInstance {
  score: number;
  rle: number[];
  votes?: number;
}

export interface ManifestPayload {
  image_id: string;
  width: number;
  height: number;
  instances: ManifestInstance[];
}

export function toManifest(imageId: string, ps: BoundPredictionSet): ManifestPayload {
  return {
    image_id: imageId,
    width: ps.width,
    height: ps.height,
    instances: ps.instances.map((inst) => {
      const entry: ManifestInstance = {
        score: inst.score,
        rle: rleEncode(inst.mask),
      };
      if (inst.votes !== undefined) entry.votes = inst.votes;
      return entry;
    }),
  };
}

export function fromManifest(payload: ManifestPayload): BoundPredictionSet {
  const { width, height } = payload;
  return new BoundPredictionSet(
    width,
    height,
    payload.instances.map((entry) => {
      if (!Array.isArray(entry.rle)) {
        throw new RangeError("manifest instances must carry inline rle masks");
      }
      return {
        mask: rleDecode(entry.rle, width, height),
        score: entry.score,
        votes: entry.votes,
      };
    }),
  );
}
