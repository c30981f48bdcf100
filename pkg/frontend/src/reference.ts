/**
 * reference.ts — CPU reference semantics for every shader, in strict FP32.
 *
 * These are the oracles the GPU harness verifies against; Math.fround after
 * each multiply and add reproduces IEEE binary32 rounding, so the stream
 * kernels and the naive GEMM match the suite's CPU implementations bit for
 * bit on identical inputs.
 */

const f32 = Math.fround;

export type StreamKind = "copy" | "scale" | "add" | "triad";

export const STREAM_KINDS: readonly StreamKind[] = ["copy", "scale", "add", "triad"];

export function streamKernel(
  kind: StreamKind,
  a: Float32Array,
  b: Float32Array,
  c: Float32Array,
  q: number,
): void {
  const qf = f32(q);
  const n = a.length;
  for (let i = 0; i < n; i++) {
    switch (kind) {
      case "copy":
        c[i] = a[i];
        break;
      case "scale":
        b[i] = f32(qf * c[i]);
        break;
      case "add":
        c[i] = f32(a[i] + b[i]);
        break;
      case "triad":
        a[i] = f32(b[i] + f32(qf * c[i]));
        break;
    }
  }
}

/** Bytes touched by one kernel pass (standard STREAM accounting). */
export function bytesMoved(kind: StreamKind, n: number, elemBytes = 4): number {
  return (kind === "copy" || kind === "scale" ? 2 : 3) * n * elemBytes;
}

/** c[i,j] = sum_k a[i,k]*b[k,j] in FP32, k ascending: the oracle order. */
export function gemmNaive(a: Float32Array, b: Float32Array, n: number): Float32Array {
  const c = new Float32Array(n * n);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      let acc = 0;
      for (let k = 0; k < n; k++) {
        acc = f32(acc + f32(a[i * n + k] * b[k * n + j]));
      }
      c[i * n + j] = acc;
    }
  }
  return c;
}

/** The tiled shader's accumulation order: TILE-sized k blocks, zero-padded
 * boundary loads (adding exact zeros, so padding never changes a result). */
export function gemmTiled(
  a: Float32Array,
  b: Float32Array,
  n: number,
  tile = 16,
): Float32Array {
  const c = new Float32Array(n * n);
  const nTiles = Math.ceil(n / tile);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      let acc = 0;
      for (let t = 0; t < nTiles; t++) {
        for (let kk = 0; kk < tile; kk++) {
          const k = t * tile + kk;
          const av = k < n ? a[i * n + k] : 0;
          const bv = k < n ? b[k * n + j] : 0;
          acc = f32(acc + f32(av * bv));
        }
      }
      c[i * n + j] = acc;
    }
  }
  return c;
}

export const FP32_EPS = 2 ** -23;

/** Forward-error envelope shared with the Python suite. */
export function verifyBound(n: number, maxA: number, maxB: number): number {
  return 16 * FP32_EPS * n * maxA * maxB;
}

export function maxAbsDiff(x: Float32Array, y: Float32Array): number {
  let worst = 0;
  for (let i = 0; i < x.length; i++) {
    worst = Math.max(worst, Math.abs(x[i] - y[i]));
  }
  return worst;
}

// --- deterministic matrix generation ---------------------------------------
//
// Counter-based SplitMix64, identical to the Python generator: element i of
// matrix (n, seed) is mix64(seed + (i+1) * 0x9E3779B97F4A7C15), and the top
// 24 bits map exactly onto the FP32 mantissa for a value in [0, 1).

const MASK64 = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

function mix64(z: bigint): bigint {
  z = ((z ^ (z >> 30n)) * MIX1) & MASK64;
  z = ((z ^ (z >> 27n)) * MIX2) & MASK64;
  return z ^ (z >> 31n);
}

export function generateMatrix(n: number, seed: number | bigint): Float32Array {
  const out = new Float32Array(n * n);
  const s = BigInt(seed) & MASK64;
  for (let i = 0; i < n * n; i++) {
    const z = mix64((s + BigInt(i + 1) * GAMMA) & MASK64);
    out[i] = f32(Number(z >> 40n) * 2 ** -24);
  }
  return out;
}
