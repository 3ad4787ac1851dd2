//! Benchmarks for the nbz codecs; see `benches/codecs.rs`.
