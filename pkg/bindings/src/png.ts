/**
 * Minimal PNG codec for the toolkit's label images: writes 16-bit
 * grayscale, reads 8- or 16-bit grayscale (all five scanline filters).
 * Kept dependency-free on purpose; label PNGs are the only image format
 * the bindings need to touch.
 */

import { deflateSync, inflateSync } from "node:zlib";

import type { LabelMap } from "./masks.js";
import { labelMap } from "./masks.js";

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(...parts: Buffer[]): number {
  let c = 0xffffffff;
  for (const part of parts) {
    for (const byte of part) {
      c = CRC_TABLE[(c ^ byte) & 0xff]! ^ (c >>> 8);
    }
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Buffer): Buffer {
  const header = Buffer.alloc(4);
  header.writeUInt32BE(data.length);
  const typeBuf = Buffer.from(type, "ascii");
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(typeBuf, data));
  return Buffer.concat([header, typeBuf, data, crc]);
}

/** Encode a label map as a 16-bit grayscale PNG. */
export function encodeLabelPng(map: LabelMap): Buffer {
  const { width, height, labels } = map;
  for (const v of labels) {
    if (v > 0xffff) throw new RangeError(`label id ${v} exceeds the 16-bit range`);
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 16; // bit depth
  ihdr[9] = 0; // grayscale
  // compression, filter, interlace all 0

  const stride = width * 2;
  const raw = Buffer.alloc(height * (stride + 1));
  for (let y = 0; y < height; y++) {
    const row = y * (stride + 1);
    raw[row] = 0; // filter: none
    for (let x = 0; x < width; x++) {
      raw.writeUInt16BE(labels[y * width + x]!, row + 1 + x * 2);
    }
  }
  return Buffer.concat([
    SIGNATURE,
    chunk("IHDR", ihdr),
    chunk("IDAT", deflateSync(raw)),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}

function unfilter(raw: Buffer, width: number, height: number, bpp: number): Buffer {
  const stride = width * bpp;
  const out = Buffer.alloc(height * stride);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)]!;
    const src = y * (stride + 1) + 1;
    const dst = y * stride;
    for (let i = 0; i < stride; i++) {
      const x = raw[src + i]!;
      const a = i >= bpp ? out[dst + i - bpp]! : 0; // left
      const b = y > 0 ? out[dst + i - stride]! : 0; // up
      const c = y > 0 && i >= bpp ? out[dst + i - stride - bpp]! : 0; // up-left
      let value: number;
      switch (filter) {
        case 0:
          value = x;
          break;
        case 1:
          value = x + a;
          break;
        case 2:
          value = x + b;
          break;
        case 3:
          value = x + Math.floor((a + b) / 2);
          break;
        case 4: {
          const p = a + b - c;
          const pa = Math.abs(p - a);
          const pb = Math.abs(p - b);
          const pc = Math.abs(p - c);
          value = x + (pa <= pb && pa <= pc ? a : pb <= pc ? b : c);
          break;
        }
        default:
          throw new RangeError(`unsupported PNG filter type ${filter}`);
      }
      out[dst + i] = value & 0xff;
    }
  }
  return out;
}

/** Decode an 8- or 16-bit grayscale PNG into a label map. */
export function decodeLabelPng(data: Buffer): LabelMap {
  if (!data.subarray(0, 8).equals(SIGNATURE)) {
    throw new RangeError("not a PNG file");
  }
  let width = 0;
  let height = 0;
  let bitDepth = 0;
  let colorType = -1;
  const idat: Buffer[] = [];
  let offset = 8;
  while (offset < data.length) {
    const length = data.readUInt32BE(offset);
    const type = data.toString("ascii", offset + 4, offset + 8);
    const body = data.subarray(offset + 8, offset + 8 + length);
    if (type === "IHDR") {
      width = body.readUInt32BE(0);
      height = body.readUInt32BE(4);
      bitDepth = body[8]!;
      colorType = body[9]!;
      if (body[12] !== 0) throw new RangeError("interlaced PNGs are not supported");
    } else if (type === "IDAT") {
      idat.push(body);
    } else if (type === "IEND") {
      break;
    }
    offset += 12 + length;
  }
  if (colorType !== 0 || (bitDepth !== 8 && bitDepth !== 16)) {
    throw new RangeError(
      `expected 8- or 16-bit grayscale, got color type ${colorType} depth ${bitDepth}`,
    );
  }
  const bpp = bitDepth / 8;
  const raw = inflateSync(Buffer.concat(idat));
  if (raw.length !== height * (width * bpp + 1)) {
    throw new RangeError("PNG payload size does not match dimensions");
  }
  const pixels = unfilter(raw, width, height, bpp);
  const labels = new Int32Array(width * height);
  for (let i = 0; i < labels.length; i++) {
    labels[i] = bpp === 2 ? pixels.readUInt16BE(i * 2) : pixels[i]!;
  }
  return labelMap(width, height, labels);
}
