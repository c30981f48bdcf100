export { PARAMS_BYTES, packParams } from "./params.js";
export type { KernelParams } from "./params.js";
export {
  GEMM_WORKGROUP,
  SHADER_TILE,
  STREAM_WORKGROUP,
  assertCovers,
  covers,
  planForGemm,
  planForStream,
} from "./plan.js";
export type { DispatchPlan } from "./plan.js";
export {
  FP32_EPS,
  STREAM_KINDS,
  bytesMoved,
  gemmNaive,
  gemmTiled,
  generateMatrix,
  maxAbsDiff,
  streamKernel,
  verifyBound,
} from "./reference.js";
export type { StreamKind } from "./reference.js";
export { ENTRY_POINTS, SHADER_FILES, bindings, hasEntryPoint, shaderFile, workgroupConstant } from "./shaders.js";
export type { BindingDecl, EntryPoint } from "./shaders.js";
export {
  KernelRunner,
  allocStorage,
  initGpu,
  readF32,
  runGemmSuite,
  runStreamSuite,
  writeF32,
} from "./harness.js";
export type { GemmCell, GpuHarness, ShaderSources, StreamCell } from "./harness.js";
