/**
 * harness.ts — WebGPU execution of the benchmark kernels.
 *
 * Timing is wall time from queue submission to onSubmittedWorkDone
 * (submit-then-wait), matching the suite's convention.  Results are checked
 * against the FP32 references in reference.ts.
 */

import { packParams } from "./params.js";
import {
  DispatchPlan,
  SHADER_TILE,
  assertCovers,
  planForGemm,
  planForStream,
} from "./plan.js";
import {
  StreamKind,
  bytesMoved,
  gemmNaive,
  maxAbsDiff,
  verifyBound,
} from "./reference.js";
import { EntryPoint } from "./shaders.js";

export interface GpuHarness {
  device: GPUDevice;
  adapterName: string;
  maxWorkgroupDims: [number, number];
}

export type ShaderSources = Record<string, string>; // file name -> WGSL text

export async function initGpu(): Promise<GpuHarness> {
  if (typeof navigator === "undefined" || !navigator.gpu) {
    throw new Error("no-gpu: WebGPU is not available in this host");
  }
  const adapter = await navigator.gpu.requestAdapter({ powerPreference: "high-performance" });
  if (!adapter) {
    throw new Error("no-gpu: no adapter");
  }
  const device = await adapter.requestDevice();
  const dims: [number, number] = [
    device.limits.maxComputeWorkgroupSizeX,
    device.limits.maxComputeWorkgroupSizeY,
  ];
  if (dims[0] < 16 || dims[1] < 16) {
    throw new Error(`no-gpu: workgroup limits ${dims} below the required (16, 16)`);
  }
  return { device, adapterName: adapter.info?.device ?? "unknown", maxWorkgroupDims: dims };
}

const PAGE = 16384;
const roundUpPages = (n: number) => Math.max(1, Math.ceil(n / PAGE)) * PAGE;

export function allocStorage(h: GpuHarness, nbytes: number): GPUBuffer {
  return h.device.createBuffer({
    size: roundUpPages(nbytes),
    usage: GPUBufferUsage.STORAGE | GPUBufferUsage.COPY_SRC | GPUBufferUsage.COPY_DST,
  });
}

export function writeF32(h: GpuHarness, buf: GPUBuffer, data: Float32Array): void {
  h.device.queue.writeBuffer(buf, 0, data.buffer, data.byteOffset, data.byteLength);
}

export async function readF32(h: GpuHarness, buf: GPUBuffer, count: number): Promise<Float32Array> {
  const staging = h.device.createBuffer({
    size: count * 4,
    usage: GPUBufferUsage.COPY_DST | GPUBufferUsage.MAP_READ,
  });
  const enc = h.device.createCommandEncoder();
  enc.copyBufferToBuffer(buf, 0, staging, 0, count * 4);
  h.device.queue.submit([enc.finish()]);
  await staging.mapAsync(GPUMapMode.READ);
  const out = new Float32Array(staging.getMappedRange().slice(0, count * 4));
  staging.unmap();
  staging.destroy();
  return out;
}

export class KernelRunner {
  private pipelines = new Map<EntryPoint, GPUComputePipeline>();

  constructor(
    private h: GpuHarness,
    private sources: ShaderSources,
  ) {}

  private pipeline(entry: EntryPoint, file: string): GPUComputePipeline {
    let pipe = this.pipelines.get(entry);
    if (!pipe) {
      const code = this.sources[file];
      if (!code) {
        throw new Error(`shader source ${file} not provided`);
      }
      const module = this.h.device.createShaderModule({ code });
      pipe = this.h.device.createComputePipeline({
        layout: "auto",
        compute: { module, entryPoint: entry },
      });
      this.pipelines.set(entry, pipe);
    }
    return pipe;
  }

  /** Submit one dispatch and wait for completion; returns seconds. */
  private async submitTimed(
    pipe: GPUComputePipeline,
    buffers: GPUBuffer[],
    params: ArrayBuffer,
    plan: DispatchPlan,
  ): Promise<number> {
    const device = this.h.device;
    const ubuf = device.createBuffer({
      size: params.byteLength,
      usage: GPUBufferUsage.UNIFORM | GPUBufferUsage.COPY_DST,
    });
    device.queue.writeBuffer(ubuf, 0, params);
    const entries: GPUBindGroupEntry[] = buffers.map((buffer, i) => ({
      binding: i,
      resource: { buffer },
    }));
    entries.push({ binding: buffers.length, resource: { buffer: ubuf } });
    const bindGroup = device.createBindGroup({
      layout: pipe.getBindGroupLayout(0),
      entries,
    });
    const enc = device.createCommandEncoder();
    const pass = enc.beginComputePass();
    pass.setPipeline(pipe);
    pass.setBindGroup(0, bindGroup);
    pass.dispatchWorkgroups(plan.groupCount[0], plan.groupCount[1], 1);
    pass.end();
    const cmd = enc.finish();
    const t0 = performance.now();
    device.queue.submit([cmd]);
    await device.queue.onSubmittedWorkDone();
    const seconds = (performance.now() - t0) / 1e3;
    ubuf.destroy();
    return seconds;
  }

  async dispatchStream(
    kind: StreamKind,
    a: GPUBuffer,
    b: GPUBuffer,
    c: GPUBuffer,
    n: number,
    q: number,
    plan: DispatchPlan = planForStream(n),
  ): Promise<number> {
    assertCovers(plan, n, 1);
    const entry = `stream_${kind}` as EntryPoint;
    const pipe = this.pipeline(entry, "stream.wgsl");
    return this.submitTimed(pipe, [a, b, c], packParams({ n, q }), plan);
  }

  async dispatchGemm(
    variant: "naive" | "tiled",
    a: GPUBuffer,
    b: GPUBuffer,
    c: GPUBuffer,
    n: number,
    plan: DispatchPlan = planForGemm(n, variant),
  ): Promise<number> {
    assertCovers(plan, n, n);
    const entry = `gemm_${variant}` as EntryPoint;
    const pipe = this.pipeline(entry, `gemm_${variant}.wgsl`);
    return this.submitTimed(pipe, [a, b, c], packParams({ n, tile: SHADER_TILE }), plan);
  }
}

export interface StreamCell {
  kind: StreamKind;
  bestGbs: number;
  bestSeconds: number;
  times: number[];
}

/** Best-of-N STREAM over device buffers, one untimed warm-up sequence. */
export async function runStreamSuite(
  h: GpuHarness,
  sources: ShaderSources,
  n: number,
  q = 3.0,
  repetitions = 20,
): Promise<StreamCell[]> {
  const runner = new KernelRunner(h, sources);
  const nbytes = n * 4;
  const a = allocStorage(h, nbytes);
  const b = allocStorage(h, nbytes);
  const c = allocStorage(h, nbytes);
  writeF32(h, a, new Float32Array(n).fill(1));
  writeF32(h, b, new Float32Array(n).fill(2));
  writeF32(h, c, new Float32Array(n));
  const kinds: StreamKind[] = ["copy", "scale", "add", "triad"];
  const times = new Map<StreamKind, number[]>(kinds.map((k) => [k, []]));
  for (let rep = -1; rep < repetitions; rep++) {
    for (const kind of kinds) {
      const dt = await runner.dispatchStream(kind, a, b, c, n, q);
      if (rep >= 0) {
        times.get(kind)!.push(dt);
      }
    }
  }
  return kinds.map((kind) => {
    const samples = times.get(kind)!;
    const best = Math.min(...samples);
    return {
      kind,
      bestSeconds: best,
      bestGbs: bytesMoved(kind, n) / best / 1e9,
      times: samples,
    };
  });
}

export interface GemmCell {
  variant: "naive" | "tiled";
  n: number;
  gflopsBest: number;
  verified: boolean;
  maxError: number;
  bound: number;
}

/** Timed GEMM cells verified against the FP32 CPU reference. */
export async function runGemmSuite(
  h: GpuHarness,
  sources: ShaderSources,
  aData: Float32Array,
  bData: Float32Array,
  n: number,
  repetitions = 5,
): Promise<GemmCell[]> {
  const runner = new KernelRunner(h, sources);
  const nbytes = n * n * 4;
  const a = allocStorage(h, nbytes);
  const b = allocStorage(h, nbytes);
  const c = allocStorage(h, nbytes);
  writeF32(h, a, aData);
  writeF32(h, b, bData);
  const oracle = gemmNaive(aData, bData, n);
  const maxA = aData.reduce((m, v) => Math.max(m, Math.abs(v)), 0);
  const maxB = bData.reduce((m, v) => Math.max(m, Math.abs(v)), 0);
  const bound = verifyBound(n, maxA, maxB);
  const flops = n * n * (2 * n - 1);
  const cells: GemmCell[] = [];
  for (const variant of ["naive", "tiled"] as const) {
    await runner.dispatchGemm(variant, a, b, c, n); // warm-up
    const times: number[] = [];
    for (let rep = 0; rep < repetitions; rep++) {
      times.push(await runner.dispatchGemm(variant, a, b, c, n));
    }
    const out = await readF32(h, c, n * n);
    const maxError = maxAbsDiff(out, oracle);
    cells.push({
      variant,
      n,
      gflopsBest: flops / Math.min(...times) / 1e9,
      verified: maxError <= bound,
      maxError,
      bound,
    });
  }
  return cells;
}
