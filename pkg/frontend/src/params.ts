/**
 * params.ts — the 16-byte uniform parameter block shared by every kernel.
 *
 * Byte layout (little-endian), identical to the Python runner:
 *   byte 0   u32 n         element count or matrix dimension
 *   byte 4   f32 q         scalar for scale/triad (0 for GEMM)
 *   byte 8   u32 tile      compile-time tile echo (0 for stream)
 *   byte 12  u32 reserved  must be zero
 */

export const PARAMS_BYTES = 16;

export interface KernelParams {
  n: number;
  q?: number;
  tile?: number;
}

export function packParams({ n, q = 0, tile = 0 }: KernelParams): ArrayBuffer {
  if (!Number.isInteger(n) || n < 1) {
    throw new Error(`n must be a positive integer, got ${n}`);
  }
  const buf = new ArrayBuffer(PARAMS_BYTES);
  const view = new DataView(buf);
  view.setUint32(0, n, true);
  view.setFloat32(4, q, true);
  view.setUint32(8, tile, true);
  view.setUint32(12, 0, true);
  return buf;
}
