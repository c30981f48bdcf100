import { describe, expect, it } from "vitest";

import { assertCovers, covers, planForGemm, planForStream } from "../src/plan.js";

describe("dispatch plans", () => {
  it("stream plan covers n with 256-wide groups", () => {
    const plan = planForStream(1000);
    expect(plan.workgroupSize).toEqual([256, 1]);
    expect(plan.groupCount).toEqual([4, 1]);
    expect(covers(plan, 1000, 1)).toBe(true);
  });

  it("gemm default: 16x16 workgroups tile the output", () => {
    const plan = planForGemm(256, "tiled");
    expect(plan.workgroupSize).toEqual([16, 16]);
    expect(plan.groupCount).toEqual([16, 16]);
  });

  it("tiled plans pin the workgroup to the shader tile", () => {
    const plan = planForGemm(64, "tiled", [32, 32]);
    expect(plan.workgroupSize).toEqual([16, 16]);
  });

  it("paper grid fixes an 8x8 group count", () => {
    const plan = planForGemm(128, "naive", undefined, true);
    expect(plan.groupCount).toEqual([8, 8]);
    expect(covers(plan, 128, 128)).toBe(true);
  });

  it("non-covering plans are rejected before submission", () => {
    const plan = { workgroupSize: [16, 16] as [number, number], groupCount: [2, 2] as [number, number] };
    expect(covers(plan, 32, 32)).toBe(true);
    expect(covers(plan, 33, 32)).toBe(false);
    expect(() => assertCovers(plan, 64, 64)).toThrow(/does not cover/);
  });

  it("trailing threads are masked, not required", () => {
    // n one past a workgroup boundary needs one extra group, nothing else
    const plan = planForStream(257);
    expect(plan.groupCount).toEqual([2, 1]);
  });
});
