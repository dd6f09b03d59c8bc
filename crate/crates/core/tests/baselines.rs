use frugal_core::baselines::{GkSummary, QDigest, Selection};
use frugal_core::eval::OracleState;
use frugal_core::rng::SplitRng;
use frugal_core::stream::{generate, StreamSpec};
use frugal_core::QuantileSpec;
use rand::Rng;

fn deciles() -> impl Iterator<Item = QuantileSpec> {
    (1..10).map(|h| QuantileSpec::new(h, 10).unwrap())
}

/// Rank interval [#less + 1, #less-or-equal] of `x` in `sorted`.
fn ranks(sorted: &[i64], x: i64) -> (u64, u64) {
    let less = sorted.partition_point(|&v| v < x) as u64;
    let le = sorted.partition_point(|&v| v <= x) as u64;
    (less + 1, le)
}

#[test]
fn gk_budget_audit_every_update() {
    for (seed, t) in [(1u64, 20usize), (2, 5), (3, 64)] {
        let mut gk = GkSummary::with_budget(t).unwrap();
        let mut rng = SplitRng::new(seed);
        for i in 0..100_000 {
            gk.insert(rng.gen_range(-5_000..5_000));
            if let Err(e) = gk.check_invariants() {
                panic!("t={t} after {} updates: {e}", i + 1);
            }
        }
    }
}

#[test]
fn gk_rank_error_within_final_epsilon() {
    let spec = StreamSpec::cauchy(10_000.0, 1_250.0, 20_000, 4);
    let values: Vec<i64> = generate(&spec).unwrap().iter().map(|i| i.value).collect();
    let mut gk = GkSummary::with_budget(20).unwrap();
    values.iter().for_each(|&v| gk.insert(v));
    let oracle = OracleState::from_values(values.iter().copied());
    let n = values.len() as f64;
    let slack = gk.epsilon() * n;
    for q in deciles() {
        let (lo, hi) = ranks(oracle.sorted(), gk.query(q).unwrap());
        let r = q.fraction() * n;
        assert!(
            lo as f64 <= r + slack + 1.0 && hi as f64 >= r - slack,
            "{q}: ranks [{lo}, {hi}] vs {r} ± {slack}"
        );
    }
}

#[test]
fn qdigest_node_budget_every_update_and_final_audit() {
    for (seed, domain, b) in [(1u64, 1000u64, 20u64), (2, 65_536, 20), (3, 7, 2), (4, 100_000, 5)] {
        let mut d = QDigest::new(domain, b).unwrap();
        let mut rng = SplitRng::new(seed);
        for i in 0..100_000 {
            d.insert(rng.gen_range(1..=domain as i64)).unwrap();
            assert!(
                d.node_count() as u64 <= 3 * b,
                "domain {domain} b {b}: {} nodes after {} updates",
                d.node_count(),
                i + 1
            );
        }
        d.check_invariants().unwrap();
    }
}

#[test]
fn qdigest_rank_error_within_depth_times_alpha() {
    let mut rng = SplitRng::new(9);
    let values: Vec<i64> = (0..30_000).map(|_| rng.gen_range(1..=4096)).collect();
    let mut d = QDigest::new(4096, 20).unwrap();
    values.iter().for_each(|&v| d.insert(v).unwrap());
    let oracle = OracleState::from_values(values.iter().copied());
    let n = values.len() as f64;
    let slack = (d.sigma() as f64).log2() * (values.len() as u64 / 20) as f64;
    for q in deciles() {
        let (lo, hi) = ranks(oracle.sorted(), d.query(q).unwrap());
        let r = q.fraction() * n;
        assert!(lo as f64 <= r + slack + 1.0 && hi as f64 >= r - slack, "{q}");
    }
}

#[test]
fn selection_state_is_fixed_size_and_bounded() {
    let before = std::mem::size_of_val(&Selection::new());
    let mut s = Selection::new();
    let mut rng = SplitRng::new(12);
    let q = QuantileSpec::new(9, 10).unwrap();
    for _ in 0..100_000 {
        s.update(q, rng.gen_range(0..1_000_000), rng.unit()).unwrap();
    }
    assert_eq!(std::mem::size_of_val(&s), before);
    let u = s.query().unwrap();
    assert!(s.lower().is_none_or(|a| a <= u) && s.upper().is_none_or(|b| u <= b));
}
