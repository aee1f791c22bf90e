/**
 * Run-length encodings for binary masks.
 *
 * The toolkit's native encoding is row-major: counts alternate
 * background/foreground starting with background (a zero run when the
 * mask begins on a positive pixel) and sum to width*height. Detection
 * frameworks commonly use the same alternation in column-major
 * (down-then-right) pixel order instead; the converters here translate
 * losslessly between the two.
 */

function encodeOrder(pixel: (i: number) => number, total: number): number[] {
  const counts: number[] = [];
  let current = 0; // encoding starts on background
  let run = 0;
  for (let i = 0; i < total; i++) {
    const v = pixel(i) ? 1 : 0;
    if (v === current) {
      run++;
    } else {
      counts.push(run);
      current = v;
      run = 1;
    }
  }
  counts.push(run);
  return counts;
}

function decodeOrder(
  counts: readonly number[],
  total: number,
  place: (i: number) => void,
): void {
  let sum = 0;
  for (const c of counts) {
    if (!Number.isInteger(c) || c < 0) {
      throw new RangeError(`rle counts must be non-negative integers, got ${c}`);
    }
    sum += c;
  }
  if (sum !== total) {
    throw new RangeError(`rle counts sum to ${sum}, expected ${total}`);
  }
  let pos = 0;
  let value = 0;
  for (const c of counts) {
    if (value) {
      for (let i = pos; i < pos + c; i++) place(i);
    }
    pos += c;
    value = 1 - value;
  }
}

/** Native row-major encoding (first count covers background). */
export function rleEncode(mask: Uint8Array): number[] {
  return encodeOrder((i) => mask[i]!, mask.length);
}

/** Inverse of {@link rleEncode}. */
export function rleDecode(counts: readonly number[], width: number, height: number): Uint8Array {
  const mask = new Uint8Array(width * height);
  decodeOrder(counts, width * height, (i) => {
    mask[i] = 1;
  });
  return mask;
}

/** Column-major (down-then-right) encoding of a row-major mask. */
export function toColumnMajorRle(mask: Uint8Array, width: number, height: number): number[] {
  if (mask.length !== width * height) {
    throw new RangeError(`mask has ${mask.length} pixels, expected ${width * height}`);
  }
  return encodeOrder((i) => {
    const x = Math.floor(i / height);
    const y = i % height;
    return mask[y * width + x]!;
  }, width * height);
}

/** Decode column-major counts into a row-major mask. */
export function fromColumnMajorRle(
  counts: readonly number[],
  width: number,
  height: number,
): Uint8Array {
  const mask = new Uint8Array(width * height);
  decodeOrder(counts, width * height, (i) => {
    const x = Math.floor(i / height);
    const y = i % height;
    mask[y * width + x] = 1;
  });
  return mask;
}
