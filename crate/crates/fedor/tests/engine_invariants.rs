//! Cross-scenario invariants of the experiment engine that go beyond the
//! acceptance gate's tolerances.

use fedor::engine::{gof_sweep, run_scenario, scenario_catalog, ExperimentReport, GateKind};
use fedor::strategies::StrategySpec;

const JOBS: usize = 2;

fn honest_mean(reports: &[ExperimentReport]) -> f64 {
    reports
        .iter()
        .map(|r| r.mean_per_round_over(&r.honest_indices()))
        .sum::<f64>()
        / reports.len() as f64
}

fn social_mean(reports: &[ExperimentReport]) -> f64 {
    reports.iter().map(|r| r.social_utility).sum::<f64>() / reports.len() as f64
}

/// An honest player's expected utility does not depend on anyone else's
/// strategy: with the ideal gate every scenario matches the all-honest one
/// tightly; with the statistical gate false positives shave a little off
/// everywhere equally.
#[test]
fn honest_utility_insensitive_to_other_strategies() {
    let run = |label: char, gate: GateKind| -> f64 {
        let mut scenario = scenario_catalog(label).unwrap();
        scenario.gate = gate;
        scenario.rounds = 5_000;
        scenario.experiments = 8;
        honest_mean(&run_scenario(&scenario, JOBS).unwrap())
    };

    let base_perfect = run('A', GateKind::Perfect);
    let base_ks = run('A', GateKind::Ks);
    for label in ['B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J'] {
        let perfect = run(label, GateKind::Perfect);
        assert!(
            (perfect - base_perfect).abs() <= 0.02,
            "{label}: ideal-gate honest mean {perfect:.4} vs A {base_perfect:.4}"
        );
        let ks = run(label, GateKind::Ks);
        assert!(
            (ks - base_ks).abs() <= 0.05,
            "{label}: KS-gate honest mean {ks:.4} vs A {base_ks:.4}"
        );
    }
}

/// Total allocated value is highest when everyone is honest.
#[test]
fn social_utility_maximized_by_all_honest() {
    let run = |label: char| {
        let mut scenario = scenario_catalog(label).unwrap();
        scenario.rounds = 5_000;
        scenario.experiments = 8;
        (
            social_mean(&run_scenario(&scenario, JOBS).unwrap()),
            scenario.rounds,
        )
    };
    let (base, rounds) = run('A');
    for label in ['B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J'] {
        let (social, _) = run(label);
        assert!(
            base >= social - 0.02 * rounds as f64,
            "{label}: social {social:.1} above all-honest {base:.1}"
        );
    }
}

/// Shrinking the window never helps detection: cheater rejection rates are
/// non-increasing as the history length drops (3-point Monte Carlo slack).
#[test]
fn detection_weakens_as_history_shrinks() {
    let cheaters = [
        StrategySpec::BetaUncorr { beta: 0.9 },
        StrategySpec::BetaUncorr { beta: 0.7 },
        StrategySpec::Normal { mu: 0.5, sigma: 0.15 },
    ];
    let lengths = [100usize, 500, 1000, 5000];
    let points = gof_sweep(&cheaters, &lengths, &[0.1], 5_000, 10, 42, JOBS).unwrap();
    for cheater in &cheaters {
        let mut rates: Vec<(usize, f64)> = points
            .iter()
            .filter(|p| p.strategy == *cheater)
            .map(|p| (p.history, p.positive_rate))
            .collect();
        rates.sort_by_key(|&(h, _)| h);
        for pair in rates.windows(2) {
            let (h_small, r_small) = pair[0];
            let (h_large, r_large) = pair[1];
            assert!(
                r_small <= r_large + 0.03,
                "{cheater}: rate({h_small}) = {r_small:.3} above rate({h_large}) = {r_large:.3}"
            );
        }
    }
}
