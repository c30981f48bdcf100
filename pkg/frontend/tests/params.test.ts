import { describe, expect, it } from "vitest";

import { PARAMS_BYTES, packParams } from "../src/params.js";

describe("parameter block", () => {
  it("is 16 bytes", () => {
    expect(packParams({ n: 1 }).byteLength).toBe(PARAMS_BYTES);
  });

  it("matches the documented byte layout", () => {
    // Frozen from the Python runner: pack_params(7, q=3.0, tile=16)
    const expected = [7, 0, 0, 0, 0, 0, 64, 64, 16, 0, 0, 0, 0, 0, 0, 0];
    const bytes = Array.from(new Uint8Array(packParams({ n: 7, q: 3.0, tile: 16 })));
    expect(bytes).toEqual(expected);
  });

  it("defaults q and tile to zero", () => {
    const view = new DataView(packParams({ n: 5 }));
    expect(view.getUint32(0, true)).toBe(5);
    expect(view.getFloat32(4, true)).toBe(0);
    expect(view.getUint32(8, true)).toBe(0);
    expect(view.getUint32(12, true)).toBe(0);
  });

  it("rejects a non-positive n", () => {
    expect(() => packParams({ n: 0 })).toThrow(/positive/);
    expect(() => packParams({ n: 1.5 })).toThrow(/integer/);
  });
});
