//! Simulator against the mean-field limit.

use redundancy_core::orderstats::{rep_batch_tail, rep_copy_tail};
use redundancy_core::sim::stats::sup_distance;
use redundancy_core::sim::{pool, run, Policy, SimConfig};
use redundancy_core::SystemParams;

fn replication_gap(k: u32) -> f64 {
    let params = SystemParams::new(0.5, 3, 0, 3, k).unwrap();
    let runs: Vec<_> = [1, 2]
        .iter()
        .map(|&seed| run(&SimConfig::new(params, Policy::Replication, seed).with_horizon(60_000, 5_000)).unwrap())
        .collect();
    let pooled = pool(&runs);
    sup_distance(&pooled.batch_completion_samples, |t| rep_batch_tail(&params, t).unwrap())
}

#[test]
fn distance_to_mean_field_shrinks_with_k() {
    let small = replication_gap(50);
    let large = replication_gap(1000);
    assert!(large < small, "k=50: {small}, k=1000: {large}");
    assert!(large < 0.02, "k=1000: {large}");
}

#[test]
fn probes_follow_the_per_copy_tail() {
    // One job with d copies: the mean-field virtual tail is the per-copy closed form.
    let params = SystemParams::new(0.5, 1, 0, 2, 1000).unwrap();
    let config = SimConfig::new(params, Policy::Replication, 3)
        .with_horizon(60_000, 5_000)
        .with_probe_rate(1.0);
    let r = run(&config).unwrap();
    let gap = sup_distance(&r.probe_sojourn_samples, |t| rep_copy_tail(&params, t).unwrap());
    assert!(gap < 0.02, "gap {gap}");
}

#[test]
fn removal_shortens_completion() {
    let params = SystemParams::new(0.3, 2, 0, 2, 200).unwrap();
    let base = SimConfig::new(params, Policy::Replication, 4).with_horizon(40_000, 4_000);
    let with = run(&base).unwrap();
    let without = run(&base.with_removal(false)).unwrap();
    assert!(with.mean_batch_completion() < without.mean_batch_completion());
    assert_eq!(without.counts.removals, 0);
    assert!(with.counts.removals > 0);
}

#[test]
fn pooled_samples_are_sorted_union() {
    let params = SystemParams::new(0.5, 3, 2, 3, 50).unwrap();
    let runs: Vec<_> = [7, 8]
        .iter()
        .map(|&s| run(&SimConfig::new(params, Policy::Mds, s).with_horizon(5_000, 500)).unwrap())
        .collect();
    let pooled = pool(&runs);
    assert_eq!(pooled.seeds, vec![7, 8]);
    assert_eq!(pooled.batch_completion_samples.len(), 9_000);
    assert!(pooled.batch_completion_samples.windows(2).all(|w| w[0] <= w[1]));
}
