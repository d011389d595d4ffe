//! The round loop in its centralized form: draw types, apply strategies,
//! run the configured mechanism, settle the ledgers. One [`Experiment`]
//! owns all mutable state, so experiments parallelize trivially and replay
//! bit-identically from `(scenario, experiment index)`.

use crate::core::{
    per_round_utility, AllocationOutcome, BidVector, CompensatedSum, Error, Mechanism,
    MechanismConfig, Result, SlotWeights, UtilityLedger,
};
use crate::gof::{GoFConfig, GofGate, HistoryBuffer, KsGate};
use crate::mechanisms::{fedor_decide, gsp_decide, vcg_decide};
use crate::rng::{RngStream, StreamPurpose};
use crate::strategies::{declare, draw_true_type, StrategySpec};

/// Which goodness-of-fit gate an experiment installs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    /// The real sliding-window KS gate.
    Ks,
    /// An oracle that passes exactly the players whose declared values have
    /// a uniform marginal. The analysis results assume such an ideal test;
    /// installing it reproduces them without statistical noise.
    Perfect,
}

/// Ideal gate double: keys on the strategy behind each player. A uniform
/// declared marginal always passes; anything else always fails. Independence
/// from the true type is invisible to any marginal test, ideal or not.
#[derive(Debug, Clone)]
pub struct PerfectGate {
    uniform_marginal: Vec<bool>,
}

impl PerfectGate {
    pub fn new(strategies: &[StrategySpec]) -> Self {
        Self {
            uniform_marginal: strategies
                .iter()
                .map(StrategySpec::declared_marginal_is_uniform)
                .collect(),
        }
    }
}

impl GofGate for PerfectGate {
    fn check(&self, player: usize, _history: &HistoryBuffer, _candidate: f64) -> Result<bool> {
        Ok(self.uniform_marginal[player])
    }
}

/// A full experiment description: population, mechanism, and budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub label: String,
    pub strategies: Vec<StrategySpec>,
    pub mech: MechanismConfig,
    pub rounds: u64,
    pub experiments: u32,
    pub gate: GateKind,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.mech.validate()?;
        if self.strategies.len() != self.mech.n {
            return Err(Error::Config(format!(
                "scenario '{}' has {} strategies for n={}",
                self.label,
                self.strategies.len(),
                self.mech.n
            )));
        }
        for s in &self.strategies {
            s.validate()?;
        }
        if self.rounds == 0 {
            return Err(Error::Config("need at least one round".into()));
        }
        if self.experiments == 0 {
            return Err(Error::Config("need at least one experiment".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.mech.n
    }

    pub fn k(&self) -> usize {
        self.mech.weights.k()
    }
}

/// Default population mixes A..J: nine players, three slots with weights
/// (3, 2, 1), KS gate with a 1000-round window at threshold 0.1, no fee,
/// 10^4 rounds, 100 experiments.
pub fn scenario_catalog(label: char) -> Result<ScenarioConfig> {
    use StrategySpec::{BetaUncorr, Honest, Normal, RandomUniform};
    let normal = Normal { mu: 0.5, sigma: 0.15 };
    let beta9 = BetaUncorr { beta: 0.9 };
    let beta7 = BetaUncorr { beta: 0.7 };

    let cheaters: Vec<StrategySpec> = match label.to_ascii_uppercase() {
        'A' => vec![],
        'B' => vec![normal],
        'C' => vec![beta9],
        'D' => vec![beta7],
        'E' => vec![RandomUniform],
        'F' => vec![RandomUniform; 3],
        'G' => vec![beta9; 3],
        'H' => vec![beta7; 3],
        'I' => vec![normal; 3],
        'J' => vec![RandomUniform, beta9, beta7, normal],
        other => return Err(Error::Argument(format!("unknown scenario label '{other}'"))),
    };

    let n = 9;
    let mut strategies = vec![Honest; n - cheaters.len()];
    strategies.extend(cheaters);

    Ok(ScenarioConfig {
        label: label.to_ascii_uppercase().to_string(),
        strategies,
        mech: MechanismConfig {
            n,
            weights: SlotWeights::new(vec![3.0, 2.0, 1.0])?,
            mechanism: Mechanism::Fedor,
            flat_fee: 0.0,
            gof: GoFConfig::default(),
            master_seed: 42,
        },
        rounds: 10_000,
        experiments: 100,
        gate: GateKind::Ks,
    })
}

/// Full trace of one settled round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    pub true_types: Vec<f64>,
    pub bids: Vec<f64>,
    /// Gate verdicts; all-true for the monetary mechanisms.
    pub verdicts: Vec<bool>,
    pub outcome: AllocationOutcome,
    pub utilities: Vec<f64>,
    pub seller_income: f64,
}

/// Aggregates of one experiment. Fully deterministic given
/// `(scenario, experiment)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub label: String,
    pub mechanism: Mechanism,
    pub experiment: u32,
    pub rounds: u64,
    pub strategies: Vec<StrategySpec>,
    pub player_utility: Vec<f64>,
    pub slot_wins: Vec<Vec<u64>>,
    pub gof_rejections: Vec<u64>,
    pub seller_utility: f64,
    /// Total value of the goods as allocated: sum over rounds and slots of
    /// the winner's true type times the slot weight.
    pub social_utility: f64,
}

impl ExperimentReport {
    pub fn per_round_mean(&self, player: usize) -> f64 {
        self.player_utility[player] / self.rounds as f64
    }

    pub fn seller_per_round(&self) -> f64 {
        self.seller_utility / self.rounds as f64
    }

    pub fn honest_indices(&self) -> Vec<usize> {
        (0..self.strategies.len())
            .filter(|&i| self.strategies[i].is_honest())
            .collect()
    }

    pub fn cheater_indices(&self) -> Vec<usize> {
        (0..self.strategies.len())
            .filter(|&i| !self.strategies[i].is_honest())
            .collect()
    }

    /// Mean per-round utility over a set of players.
    pub fn mean_per_round_over(&self, players: &[usize]) -> f64 {
        if players.is_empty() {
            return 0.0;
        }
        players.iter().map(|&p| self.per_round_mean(p)).sum::<f64>() / players.len() as f64
    }

    /// Mean per-round utility over all players.
    pub fn player_mean_per_round(&self) -> f64 {
        let all: Vec<usize> = (0..self.strategies.len()).collect();
        self.mean_per_round_over(&all)
    }

    /// Strict bit-level equality, including every f64.
    pub fn bits_eq(&self, other: &ExperimentReport) -> bool {
        let f64_eq = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        };
        self.label == other.label
            && self.mechanism == other.mechanism
            && self.experiment == other.experiment
            && self.rounds == other.rounds
            && self.strategies == other.strategies
            && f64_eq(&self.player_utility, &other.player_utility)
            && self.slot_wins == other.slot_wins
            && self.gof_rejections == other.gof_rejections
            && self.seller_utility.to_bits() == other.seller_utility.to_bits()
            && self.social_utility.to_bits() == other.social_utility.to_bits()
    }
}

/// All mutable state of one running experiment.
pub struct Experiment {
    scenario: ScenarioConfig,
    experiment: u32,
    gate: Box<dyn GofGate>,
    histories: Vec<HistoryBuffer>,
    type_streams: Vec<RngStream>,
    declare_streams: Vec<RngStream>,
    ledger: UtilityLedger,
    gof_rejections: Vec<u64>,
    social: CompensatedSum,
    round: u64,
}

impl Experiment {
    /// Builds the experiment and, for the filtering mechanism, pre-fills
    /// every history window with strategy-generated values so scored rounds
    /// never see a transient window.
    pub fn new(scenario: &ScenarioConfig, experiment: u32) -> Result<Self> {
        scenario.validate()?;
        let n = scenario.n();
        let seed = scenario.mech.master_seed;
        let mut type_streams = Vec::with_capacity(n);
        let mut declare_streams = Vec::with_capacity(n);
        for player in 0..n {
            type_streams.push(RngStream::new(
                seed,
                experiment as u64,
                player as u64,
                StreamPurpose::TrueType,
            ));
            declare_streams.push(RngStream::new(
                seed,
                experiment as u64,
                player as u64,
                StreamPurpose::Declare,
            ));
        }

        let gate: Box<dyn GofGate> = match scenario.gate {
            GateKind::Ks => Box::new(KsGate::new(scenario.mech.gof)),
            GateKind::Perfect => Box::new(PerfectGate::new(&scenario.strategies)),
        };

        let h = scenario.mech.gof.history_length;
        let mut histories: Vec<HistoryBuffer> =
            (0..n).map(|_| HistoryBuffer::new(h)).collect();
        if scenario.mech.mechanism == Mechanism::Fedor {
            for player in 0..n {
                for _ in 0..h {
                    let theta = draw_true_type(&mut type_streams[player]);
                    let bid = declare(
                        &scenario.strategies[player],
                        theta,
                        &mut declare_streams[player],
                    );
                    histories[player].record(bid);
                }
            }
        }

        Ok(Self {
            experiment,
            gate,
            histories,
            type_streams,
            declare_streams,
            ledger: UtilityLedger::new(n, scenario.k()),
            gof_rejections: vec![0; n],
            social: CompensatedSum::default(),
            round: 0,
            scenario: scenario.clone(),
        })
    }

    /// Draw, declare, decide, settle. Returns the full round trace.
    pub fn step(&mut self) -> Result<RoundRecord> {
        let n = self.scenario.n();
        let mut true_types = Vec::with_capacity(n);
        let mut bids = Vec::with_capacity(n);
        for player in 0..n {
            let theta = draw_true_type(&mut self.type_streams[player]);
            let bid = declare(
                &self.scenario.strategies[player],
                theta,
                &mut self.declare_streams[player],
            );
            true_types.push(theta);
            bids.push(bid);
        }
        self.apply_round(true_types, bids)
    }

    fn apply_round(&mut self, true_types: Vec<f64>, bids: Vec<f64>) -> Result<RoundRecord> {
        let scenario = &self.scenario;
        let n = scenario.n();
        let weights = &scenario.mech.weights;
        let round = self.round;
        let bid_vector = BidVector::new(round, bids)?;

        let (mut outcome, verdicts) = match scenario.mech.mechanism {
            Mechanism::Fedor => {
                let decision =
                    fedor_decide(&bid_vector, &self.histories, self.gate.as_ref(), weights)?;
                for (count, &pass) in self.gof_rejections.iter_mut().zip(&decision.verdicts) {
                    if !pass {
                        *count += 1;
                    }
                }
                // Reported values enter the history whether or not they
                // passed; replacement values never do.
                for (history, &bid) in self.histories.iter_mut().zip(bid_vector.as_slice()) {
                    history.record(bid);
                }
                (decision.outcome, decision.verdicts)
            }
            Mechanism::Vcg => (vcg_decide(&bid_vector, weights)?, vec![true; n]),
            Mechanism::Gsp => (gsp_decide(&bid_vector, weights)?, vec![true; n]),
        };

        if scenario.mech.mechanism == Mechanism::Fedor {
            outcome.payments = vec![scenario.mech.flat_fee; n];
        }

        let mut utilities = Vec::with_capacity(n);
        for player in 0..n {
            utilities.push(per_round_utility(
                true_types[player],
                outcome.slot_of(player),
                weights,
                outcome.payments[player],
            )?);
        }
        let seller_income: f64 = outcome.payments.iter().sum();

        let social_round: f64 = outcome
            .assignment
            .iter()
            .zip(weights.as_slice())
            .map(|(&p, &w)| true_types[p] * w)
            .sum();
        self.social.add(social_round);
        self.ledger
            .record_round(&utilities, seller_income, &outcome.assignment);
        self.round += 1;

        Ok(RoundRecord {
            round,
            true_types,
            bids: bid_vector.as_slice().to_vec(),
            verdicts,
            outcome,
            utilities,
            seller_income,
        })
    }

    pub fn rounds_run(&self) -> u64 {
        self.round
    }

    pub fn into_report(self) -> ExperimentReport {
        let scenario = &self.scenario;
        let n = scenario.n();
        let rounds = self.round;
        // The flat fee transfers to the seller identically every round, so
        // the filtering mechanism's seller total has a closed form.
        let seller_utility = match scenario.mech.mechanism {
            Mechanism::Fedor => rounds as f64 * n as f64 * scenario.mech.flat_fee,
            _ => self.ledger.seller_utility(),
        };
        ExperimentReport {
            label: scenario.label.clone(),
            mechanism: scenario.mech.mechanism,
            experiment: self.experiment,
            rounds,
            strategies: scenario.strategies.clone(),
            player_utility: (0..n).map(|p| self.ledger.player_utility(p)).collect(),
            slot_wins: (0..n).map(|p| self.ledger.slot_wins(p).to_vec()).collect(),
            gof_rejections: self.gof_rejections,
            seller_utility,
            social_utility: self.social.value(),
        }
    }
}

/// Run one experiment to completion.
pub fn run_experiment(scenario: &ScenarioConfig, experiment: u32) -> Result<ExperimentReport> {
    let mut exp = Experiment::new(scenario, experiment)?;
    for _ in 0..scenario.rounds {
        exp.step()?;
    }
    Ok(exp.into_report())
}

/// Run one experiment keeping every round trace.
pub fn run_experiment_traced(
    scenario: &ScenarioConfig,
    experiment: u32,
) -> Result<(ExperimentReport, Vec<RoundRecord>)> {
    let mut exp = Experiment::new(scenario, experiment)?;
    let mut trace = Vec::with_capacity(scenario.rounds as usize);
    for _ in 0..scenario.rounds {
        trace.push(exp.step()?);
    }
    Ok((exp.into_report(), trace))
}

/// Run all experiments of a scenario across up to `jobs` worker threads.
/// Reports come back in experiment order regardless of scheduling.
pub fn run_scenario(scenario: &ScenarioConfig, jobs: usize) -> Result<Vec<ExperimentReport>> {
    scenario.validate()?;
    let total = scenario.experiments;
    let workers = jobs.max(1).min(total as usize);
    if workers <= 1 {
        return (0..total).map(|e| run_experiment(scenario, e)).collect();
    }

    let next = std::sync::atomic::AtomicU32::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<ExperimentReport>>>> =
        (0..total).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let e = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if e >= total {
                    break;
                }
                let report = run_experiment(scenario, e);
                *slots[e as usize].lock().unwrap() = Some(report);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

/// One point of the fee tradeoff line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeeTradeoffPoint {
    pub fee: f64,
    pub seller_mean_per_round: f64,
    pub player_mean_per_round: f64,
}

/// The flat fee transfers one unit per player per round from players to the
/// seller, so the tradeoff is an exact line through the no-fee point: seller
/// `n * fee`, player `U0 - fee`. One no-fee run pins `U0`; every requested
/// fee is then an affine shift, which keeps the returned points exactly
/// collinear.
pub fn fee_sweep(
    scenario: &ScenarioConfig,
    fees: &[f64],
    jobs: usize,
) -> Result<Vec<FeeTradeoffPoint>> {
    if scenario.mech.mechanism != Mechanism::Fedor {
        return Err(Error::Config(
            "fee sweep applies to the payment-free mechanism only".into(),
        ));
    }
    if let Some(bad) = fees.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
        return Err(Error::Config(format!("fees must be non-negative, got {bad}")));
    }
    let mut no_fee = scenario.clone();
    no_fee.mech.flat_fee = 0.0;
    let reports = run_scenario(&no_fee, jobs)?;
    let u0 = reports.iter().map(ExperimentReport::player_mean_per_round).sum::<f64>()
        / reports.len() as f64;
    let n = scenario.n() as f64;
    Ok(fees
        .iter()
        .map(|&fee| FeeTradeoffPoint {
            fee,
            seller_mean_per_round: n * fee,
            player_mean_per_round: u0 - fee,
        })
        .collect())
}

/// One cell of the gate sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GofSweepPoint {
    pub history: usize,
    pub alpha: f64,
    pub strategy: StrategySpec,
    pub positive_rate: f64,
}

/// Per-round rejection frequency of the KS gate against a single reporter
/// following `strategy`, for every (history length, threshold) pair. The
/// window is pre-filled from the strategy, then slides over `rounds` scored
/// reports per experiment; one p-value per round serves every threshold.
pub fn gof_sweep(
    strategies: &[StrategySpec],
    history_lengths: &[usize],
    alphas: &[f64],
    rounds: u64,
    experiments: u32,
    master_seed: u64,
    jobs: usize,
) -> Result<Vec<GofSweepPoint>> {
    for s in strategies {
        s.validate()?;
    }
    for &alpha in alphas {
        GoFConfig {
            p_threshold: alpha,
            ..GoFConfig::default()
        }
        .validate()?;
    }
    for &h in history_lengths {
        GoFConfig {
            history_length: h,
            ..GoFConfig::default()
        }
        .validate()?;
    }

    struct Cell {
        strategy_idx: usize,
        history: usize,
    }
    let cells: Vec<Cell> = strategies
        .iter()
        .enumerate()
        .flat_map(|(strategy_idx, _)| {
            history_lengths.iter().map(move |&history| Cell { strategy_idx, history })
        })
        .collect();

    let run_cell = |cell: &Cell| -> Vec<u64> {
        let strategy = &strategies[cell.strategy_idx];
        // The player slot encodes the cell so no two cells share a stream.
        let player = (cell.strategy_idx * history_lengths.len()
            + history_lengths.iter().position(|&h| h == cell.history).unwrap())
            as u64;
        let mut positives = vec![0u64; alphas.len()];
        for experiment in 0..experiments {
            let mut types = RngStream::new(
                master_seed,
                experiment as u64,
                player,
                StreamPurpose::TrueType,
            );
            let mut noise = RngStream::new(
                master_seed,
                experiment as u64,
                player,
                StreamPurpose::Declare,
            );
            let mut window = HistoryBuffer::new(cell.history);
            for _ in 0..cell.history {
                let theta = draw_true_type(&mut types);
                window.record(declare(strategy, theta, &mut noise));
            }
            for _ in 0..rounds {
                let theta = draw_true_type(&mut types);
                let candidate = declare(strategy, theta, &mut noise);
                let d = window.ks_with_candidate(candidate);
                let p = crate::stats::ks_pvalue(d, window.len() + 1);
                for (count, &alpha) in positives.iter_mut().zip(alphas) {
                    if p < alpha {
                        *count += 1;
                    }
                }
                window.record(candidate);
            }
        }
        positives
    };

    let workers = jobs.max(1).min(cells.len());
    let results: Vec<Vec<u64>> = if workers <= 1 {
        cells.iter().map(run_cell).collect()
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<std::sync::Mutex<Option<Vec<u64>>>> =
            (0..cells.len()).map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= cells.len() {
                        break;
                    }
                    *slots[i].lock().unwrap() = Some(run_cell(&cells[i]));
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().unwrap().expect("worker filled every cell"))
            .collect()
    };

    let denom = (rounds * experiments as u64) as f64;
    let mut out = Vec::with_capacity(cells.len() * alphas.len());
    for (cell, positives) in cells.iter().zip(results) {
        for (ai, &alpha) in alphas.iter().enumerate() {
            out.push(GofSweepPoint {
                history: cell.history,
                alpha,
                strategy: strategies[cell.strategy_idx],
                positive_rate: positives[ai] as f64 / denom,
            });
        }
    }
    Ok(out)
}
