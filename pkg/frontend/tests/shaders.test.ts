import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import {
  ENTRY_POINTS,
  SHADER_FILES,
  bindings,
  hasEntryPoint,
  shaderFile,
  workgroupConstant,
} from "../src/shaders.js";

const SHADER_DIR = join(dirname(fileURLToPath(import.meta.url)), "..", "shaders");

const source = (file: string) => readFileSync(join(SHADER_DIR, file), "utf8");

describe("WGSL sources", () => {
  it("defines all six documented entry points", () => {
    expect(ENTRY_POINTS.sort()).toEqual(
      ["gemm_naive", "gemm_tiled", "stream_add", "stream_copy", "stream_scale", "stream_triad"].sort(),
    );
    for (const entry of ENTRY_POINTS) {
      expect(hasEntryPoint(source(shaderFile(entry)), entry)).toBe(true);
    }
  });

  it("stream bindings: a, b, c read_write plus the uniform params", () => {
    const decls = bindings(source("stream.wgsl"));
    expect(decls.map((d) => [d.binding, d.name])).toEqual([
      [0, "a"],
      [1, "b"],
      [2, "c"],
      [3, "params"],
    ]);
    for (const d of decls.slice(0, 3)) {
      expect(d.space).toBe("storage, read_write");
    }
    expect(decls[3].space).toBe("uniform");
  });

  it("gemm bindings: inputs read-only, output read_write", () => {
    for (const file of ["gemm_naive.wgsl", "gemm_tiled.wgsl"]) {
      const decls = bindings(source(file));
      expect(decls.map((d) => d.name)).toEqual(["a", "b", "c", "params"]);
      expect(decls[0].space).toBe("storage, read");
      expect(decls[1].space).toBe("storage, read");
      expect(decls[2].space).toBe("storage, read_write");
    }
  });

  it("declares the documented default workgroup sizes", () => {
    expect(workgroupConstant(source("stream.wgsl"))).toBe(256);
    expect(workgroupConstant(source("gemm_naive.wgsl"))).toBe(16);
    expect(workgroupConstant(source("gemm_tiled.wgsl"))).toBe(16);
  });

  it("every kernel documents the shared 16-byte params struct", () => {
    for (const file of new Set(Object.values(SHADER_FILES))) {
      const text = source(file);
      expect(text).toMatch(/struct Params \{\s*n: u32,\s*q: f32,\s*tile: u32,\s*reserved: u32,\s*\}/);
    }
  });

  it("bounds-masks out-of-range threads", () => {
    const text = source("stream.wgsl");
    const bodies = text.split("@compute").slice(1);
    expect(bodies).toHaveLength(4);
    for (const body of bodies) {
      expect(body).toContain("if (i >= params.n) { return; }");
    }
  });
});
