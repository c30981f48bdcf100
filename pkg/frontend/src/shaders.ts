/**
 * shaders.ts — registry of the WGSL kernel sources and structural checks.
 *
 * The shader files live in this package's `shaders/` directory and are the
 * single source of truth consumed by both this harness and the Python
 * runner.  Loading the text is host-specific (fetch in a browser, fs in
 * tests); everything here operates on source strings.
 */

export const SHADER_FILES = {
  stream_copy: "stream.wgsl",
  stream_scale: "stream.wgsl",
  stream_add: "stream.wgsl",
  stream_triad: "stream.wgsl",
  gemm_naive: "gemm_naive.wgsl",
  gemm_tiled: "gemm_tiled.wgsl",
} as const;

export type EntryPoint = keyof typeof SHADER_FILES;

export const ENTRY_POINTS = Object.keys(SHADER_FILES) as EntryPoint[];

export function shaderFile(entry: EntryPoint): string {
  return SHADER_FILES[entry];
}

/** True when the source text defines the given compute entry point. */
export function hasEntryPoint(source: string, entry: EntryPoint): boolean {
  return new RegExp(String.raw`@compute[\s\S]{0,120}?fn\s+${entry}\s*\(`).test(source);
}

export interface BindingDecl {
  binding: number;
  name: string;
  space: string;
}

/** Parse the @group(0) binding declarations out of a WGSL source. */
export function bindings(source: string): BindingDecl[] {
  const out: BindingDecl[] = [];
  const re = /@group\(0\)\s*@binding\((\d+)\)\s*var<([^>]+)>\s*(\w+)\s*:/g;
  for (const m of source.matchAll(re)) {
    out.push({ binding: Number(m[1]), space: m[2].trim(), name: m[3] });
  }
  return out.sort((x, y) => x.binding - y.binding);
}

/** The declared workgroup constant (const WG / const TILE), if present. */
export function workgroupConstant(source: string): number | null {
  const m = source.match(/const (?:WG|TILE): u32 = (\d+)u;/);
  return m ? Number(m[1]) : null;
}
