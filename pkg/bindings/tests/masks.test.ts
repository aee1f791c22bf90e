import { describe, expect, it } from "vitest";

import {
  BoundPredictionSet,
  instancesFromLabels,
  labelMap,
} from "../src/masks.js";
import { decodeLabelPng, encodeLabelPng } from "../src/png.js";

describe("BoundPredictionSet", () => {
  it("accepts flat and nested mask inputs", () => {
    const flat = new BoundPredictionSet(2, 2, [
      { mask: Uint8Array.from([1, 0, 0, 0]), score: 0.5 },
    ]);
    const nested = new BoundPredictionSet(2, 2, [
      { mask: [[true, false], [false, false]], score: 0.5 },
    ]);
    expect(flat.instances[0]!.mask).toEqual(nested.instances[0]!.mask);
  });

  it("rejects shape-mismatched arrays", () => {
    expect(
      () => new BoundPredictionSet(3, 2, [{ mask: new Uint8Array(5), score: 0.5 }]),
    ).toThrow(/pixels/);
    expect(
      () => new BoundPredictionSet(3, 2, [{ mask: [[1, 1, 1]], score: 0.5 }]),
    ).toThrow(/rows/);
  });

  it("rejects out-of-range scores and empty masks", () => {
    expect(
      () => new BoundPredictionSet(2, 1, [{ mask: Uint8Array.from([1, 0]), score: 1.5 }]),
    ).toThrow(/score/);
    expect(
      () => new BoundPredictionSet(2, 1, [{ mask: Uint8Array.from([0, 0]), score: 0.5 }]),
    ).toThrow(/positive pixel/);
  });

  it("copies its inputs instead of aliasing them", () => {
    const source = Uint8Array.from([1, 1, 0, 0]);
    const ps = new BoundPredictionSet(2, 2, [{ mask: source, score: 1.0 }]);
    source[0] = 0;
    expect(ps.instances[0]!.mask[0]).toBe(1);
  });
});

describe("labelMap and instancesFromLabels", () => {
  it("explodes ids in ascending order with unit scores", () => {
    const map = labelMap(3, 2, [
      [0, 2, 2],
      [7, 7, 0],
    ]);
    const ps = instancesFromLabels(map);
    expect(ps.size).toBe(2);
    expect(ps.scores).toEqual([1.0, 1.0]);
    expect([...ps.instances[0]!.mask]).toEqual([0, 1, 1, 0, 0, 0]); // id 2
    expect([...ps.instances[1]!.mask]).toEqual([0, 0, 0, 1, 1, 0]); // id 7
  });

  it("rejects negative ids and bad shapes", () => {
    expect(() => labelMap(2, 1, [-1, 0])).toThrow(/negative/);
    expect(() => labelMap(2, 2, [1, 2, 3])).toThrow(/entries/);
  });
});

describe("label png codec", () => {
  it("round-trips 16-bit label maps, ids above 255 included", () => {
    const map = labelMap(3, 2, [
      [0, 1, 300],
      [300, 2, 0],
    ]);
    const back = decodeLabelPng(encodeLabelPng(map));
    expect(back.width).toBe(3);
    expect(back.height).toBe(2);
    expect([...back.labels]).toEqual([...map.labels]);
  });

  it("rejects ids beyond 16 bits", () => {
    const map = labelMap(1, 1, [70000]);
    expect(() => encodeLabelPng(map)).toThrow(/16-bit/);
  });

  it("rejects non-png bytes", () => {
    expect(() => decodeLabelPng(Buffer.from("nope"))).toThrow(/PNG/);
  });
});
