"""unibench: STREAM, GEMM, and power-efficiency benchmarks for
unified-memory machines, with measured-vs-theoretical reporting."""

__version__ = "0.1.0"
