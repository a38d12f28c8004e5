//! Benchmark harness for the flow kernels; see `benches/`.
