//! Shared fixtures for the criterion benchmarks.

use sepmin::class::{Family, QueryClass};
use sepmin::data::Dataset;
use sepmin::rng;

pub fn conjunctions(d: usize) -> QueryClass {
    QueryClass::new(Family::Conjunction, d).unwrap()
}

pub fn fixture_dataset(d: usize, n: usize) -> Dataset {
    Dataset::sample_binary(d, n, 0.7, &mut rng::stream(0xbe, &[d as u64, n as u64])).unwrap()
}
