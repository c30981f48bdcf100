/**
 * plan.ts — dispatch geometry, mirroring the Python runner exactly.
 *
 * Defaults: 256x1 workgroups for the stream kernels, 16x16 for GEMM (the
 * tiled shader's workgroup must equal its compile-time TILE).  The opt-in
 * "paper grid" plan fixes the group count at 8x8 and scales the workgroup
 * instead; it only fits small problems before hitting device limits.
 */

export const STREAM_WORKGROUP: readonly [number, number] = [256, 1];
export const GEMM_WORKGROUP: readonly [number, number] = [16, 16];
export const SHADER_TILE = 16;

export interface DispatchPlan {
  workgroupSize: [number, number];
  groupCount: [number, number];
}

const ceilDiv = (a: number, b: number) => Math.ceil(a / b);

export function covers(plan: DispatchPlan, nx: number, ny: number): boolean {
  return (
    plan.workgroupSize[0] * plan.groupCount[0] >= nx &&
    plan.workgroupSize[1] * plan.groupCount[1] >= ny
  );
}

export function assertCovers(plan: DispatchPlan, nx: number, ny: number): void {
  if (!covers(plan, nx, ny)) {
    throw new Error(
      `plan ${plan.workgroupSize}x${plan.groupCount} does not cover ${nx}x${ny}`,
    );
  }
}

export function planForStream(
  n: number,
  workgroup: readonly [number, number] = STREAM_WORKGROUP,
): DispatchPlan {
  return {
    workgroupSize: [workgroup[0], 1],
    groupCount: [ceilDiv(n, workgroup[0]), 1],
  };
}

export function planForGemm(
  n: number,
  variant: "naive" | "tiled",
  workgroup: readonly [number, number] = GEMM_WORKGROUP,
  paperGrid = false,
): DispatchPlan {
  let [wx, wy] = workgroup;
  if (variant === "tiled") {
    wx = SHADER_TILE;
    wy = SHADER_TILE;
  }
  if (paperGrid) {
    return {
      workgroupSize: [ceilDiv(n, 8), ceilDiv(n, 8)],
      groupCount: [8, 8],
    };
  }
  return {
    workgroupSize: [wx, wy],
    groupCount: [ceilDiv(n, wx), ceilDiv(n, wy)],
  };
}
