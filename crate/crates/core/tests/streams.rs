use std::thread;

use frugal_core::eval::OracleState;
use frugal_core::stream::{generate, generate_range, StreamSpec};
use frugal_core::QuantileSpec;

#[test]
fn cauchy_sample_median_near_location() {
    for seed in 0..5 {
        let items = generate(&StreamSpec::cauchy(10_000.0, 1_250.0, 100_000, seed)).unwrap();
        let median = OracleState::from_values(items.iter().map(|i| i.value))
            .quantile(QuantileSpec::median())
            .unwrap();
        assert!((median - 10_000).abs() <= 300, "seed {seed}: median {median}");
    }
}

#[test]
fn sharded_generation_matches_sequential() {
    let spec = StreamSpec::piecewise(
        vec![
            StreamSpec::cauchy(12_500.0, 80.0, 7_000, 1),
            StreamSpec::uniform(0, 99, 5_000, 2),
            StreamSpec::cauchy(-3.0, 10.0, 8_000, 3),
        ],
        42,
    );
    let whole = generate(&spec).unwrap();
    let parts: Vec<_> = thread::scope(|s| {
        let handles: Vec<_> = (0..4u64)
            .map(|w| {
                let spec = &spec;
                s.spawn(move || generate_range(spec, w * 5_000..(w + 1) * 5_000).unwrap())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(whole, parts);
}
