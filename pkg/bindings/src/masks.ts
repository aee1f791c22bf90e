/**
 * In-memory mask containers mirroring the toolkit's native types.
 *
 * Masks are row-major `Uint8Array`s of 0/1 pixels; label maps are
 * row-major `Int32Array`s where 0 is background and each positive value
 * is one instance id. Constructors copy their inputs, so bound calls
 * never alias or mutate caller arrays.
 */

export type MaskInput = Uint8Array | boolean[][] | number[][];

export interface BoundInstance {
  /** row-major 0/1 pixels, length width*height */
  readonly mask: Uint8Array;
  /** detection confidence in [0, 1] */
  readonly score: number;
  /** member count recorded by fusion, when known */
  readonly votes?: number;
}

export interface LabelMap {
  readonly width: number;
  readonly height: number;
  /** row-major instance ids, length width*height, 0 = background */
  readonly labels: Int32Array;
}

function flattenMask(mask: MaskInput, width: number, height: number): Uint8Array {
  if (mask instanceof Uint8Array) {
    if (mask.length !== width * height) {
      throw new RangeError(
        `mask has ${mask.length} pixels, expected ${width}x${height} = ${width * height}`,
      );
    }
    const out = new Uint8Array(mask.length);
    for (let i = 0; i < mask.length; i++) out[i] = mask[i]! ? 1 : 0;
    return out;
  }
  if (mask.length !== height) {
    throw new RangeError(`mask has ${mask.length} rows, expected ${height}`);
  }
  const out = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    const row = mask[y]!;
    if (row.length !== width) {
      throw new RangeError(`mask row ${y} has ${row.length} pixels, expected ${width}`);
    }
    for (let x = 0; x < width; x++) out[y * width + x] = row[x] ? 1 : 0;
  }
  return out;
}

/** One image version's predictions: a stack of masks plus scores. */
export class BoundPredictionSet {
  readonly width: number;
  readonly height: number;
  readonly instances: readonly BoundInstance[];

  constructor(
    width: number,
    height: number,
    instances: Array<{ mask: MaskInput; score: number; votes?: number }> = [],
  ) {
    if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
      throw new RangeError(`invalid dimensions ${width}x${height}`);
    }
    this.width = width;
    this.height = height;
    this.instances = instances.map(({ mask, score, votes }, k) => {
      if (!Number.isFinite(score) || score < 0 || score > 1) {
        throw new RangeError(`instance ${k}: score ${score} outside [0,1]`);
      }
      if (votes !== undefined && (!Number.isInteger(votes) || votes < 1)) {
        throw new RangeError(`instance ${k}: votes must be a positive integer`);
      }
      const flat = flattenMask(mask, width, height);
      if (!flat.some((v) => v === 1)) {
        throw new RangeError(`instance ${k}: mask has no positive pixel`);
      }
      return votes === undefined
        ? { mask: flat, score }
        : { mask: flat, score, votes };
    });
    Object.freeze(this.instances);
    Object.freeze(this);
  }

  get size(): number {
    return this.instances.length;
  }

  get scores(): number[] {
    return this.instances.map((i) => i.score);
  }
}

export function labelMap(
  width: number,
  height: number,
  labels: Int32Array | number[] | number[][],
): LabelMap {
  let flat: Int32Array;
  if (Array.isArray(labels) && Array.isArray(labels[0])) {
    const rows = labels as number[][];
    if (rows.length !== height) {
      throw new RangeError(`label map has ${rows.length} rows, expected ${height}`);
    }
    flat = new Int32Array(width * height);
    for (let y = 0; y < height; y++) {
      const row = rows[y]!;
      if (row.length !== width) {
        throw new RangeError(`label row ${y} has ${row.length} entries, expected ${width}`);
      }
      flat.set(row, y * width);
    }
  } else {
    const src = labels as Int32Array | number[];
    if (src.length !== width * height) {
      throw new RangeError(
        `label map has ${src.length} entries, expected ${width * height}`,
      );
    }
    flat = Int32Array.from(src);
  }
  for (let i = 0; i < flat.length; i++) {
    if (flat[i]! < 0) throw new RangeError(`label map entry ${i} is negative`);
  }
  return { width, height, labels: flat };
}

/** Explode a label map into unit-score instances, ascending id order. */
export function instancesFromLabels(map: LabelMap): BoundPredictionSet {
  const ids = [...new Set(map.labels)].filter((v) => v > 0).sort((a, b) => a - b);
  const instances = ids.map((id) => {
    const mask = new Uint8Array(map.width * map.height);
    for (let i = 0; i < map.labels.length; i++) mask[i] = map.labels[i] === id ? 1 : 0;
    return { mask, score: 1.0 };
  });
  return new BoundPredictionSet(map.width, map.height, instances);
}
