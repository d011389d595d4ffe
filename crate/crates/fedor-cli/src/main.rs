//! Experiment front-end. Four subcommands, each emitting plot-ready CSV
//! plus a manifest that pins the exact configuration:
//!
//! - `scenarios` — per-player utilities and social utility for population
//!   mixes A..J (or a custom config file) under any mechanism.
//! - `fee-sweep` — the seller/player tradeoff line of the flat fee.
//! - `gof-sweep` — gate positive rates per history length and threshold.
//! - `compare`  — seller/player utility points for the three mechanisms on
//!   all-honest populations.
//!
//! Re-running with an identical configuration reproduces every output file
//! byte for byte. `FEDOR_SEED` overrides `--seed`.

mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use fedor::core::{Mechanism, MechanismConfig, SlotWeights};
use fedor::engine::{
    fee_sweep, gof_sweep, run_scenario, scenario_catalog, ExperimentReport, GateKind,
    ScenarioConfig,
};
use fedor::gof::GoFConfig;
use fedor::strategies::StrategySpec;
use output::{fmt_f64, write_manifest, CsvFile};
use serde_json::json;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "fedor", version, about = "Repeated slot-allocation experiments: payment-free filtered-rank mechanism vs VCG/GSP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run population scenarios; emits scenarios.csv and social.csv
    Scenarios(ScenariosArgs),
    /// Flat-fee tradeoff line per (n, k) grid; emits fee_sweep.csv
    FeeSweep(FeeSweepArgs),
    /// Gate positive rates over history lengths and thresholds; emits gof_sweep.csv
    GofSweep(GofSweepArgs),
    /// Mechanism utility points for honest populations; emits compare.csv
    Compare(CompareArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Master seed (environment variable FEDOR_SEED overrides)
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Rounds per experiment
    #[arg(long, default_value_t = 10_000)]
    rounds: u64,
    /// Independent experiments per configuration
    #[arg(long, default_value_t = 100)]
    experiments: u32,
    /// Worker threads (0 = all available)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl CommonArgs {
    fn resolved_seed(&self) -> Result<u64, String> {
        match std::env::var("FEDOR_SEED") {
            Ok(text) => text
                .parse()
                .map_err(|_| format!("FEDOR_SEED must be an integer, got '{text}'")),
            Err(_) => Ok(self.seed),
        }
    }

    fn resolved_jobs(&self) -> usize {
        if self.jobs == 0 {
            std::thread::available_parallelism().map_or(1, usize::from)
        } else {
            self.jobs
        }
    }
}

#[derive(Args)]
struct ScenariosArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scenario labels, comma separated (A..J)
    #[arg(long, default_value = "A,B,C,D,E,F,G,H,I,J")]
    label: String,
    /// Mechanisms to run, comma separated (fedor,vcg,gsp)
    #[arg(long, default_value = "fedor,vcg,gsp")]
    mechanism: String,
    /// Per-round flat participation fee (payment-free mechanism only)
    #[arg(long, default_value_t = 0.0)]
    fee: f64,
    /// Slot weights, comma separated, overriding the catalog's 3,2,1
    #[arg(long)]
    weights: Option<String>,
    /// Gate history window length
    #[arg(long, default_value_t = 1000)]
    history: usize,
    /// Gate rejection threshold on the KS p-value
    #[arg(long, default_value_t = 0.1)]
    pvalue: f64,
    /// Install the ideal strategy-aware gate instead of the KS gate
    #[arg(long, default_value_t = false)]
    perfect_gof: bool,
    /// Custom scenario file (key=value format) instead of --label
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FeeSweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Player counts, comma separated; default covers the reference grids
    #[arg(long)]
    players: Option<String>,
    /// Slot counts, comma separated
    #[arg(long)]
    slots: Option<String>,
    /// Fees to tabulate, comma separated
    #[arg(long, default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5")]
    fee: String,
}

#[derive(Args)]
struct GofSweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// History lengths, comma separated
    #[arg(long, default_value = "100,500,1000,5000")]
    history: String,
    /// p-value thresholds, comma separated
    #[arg(long, default_value = "0.05,0.1,0.2")]
    pvalue: String,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Player counts, comma separated; default covers the reference grids
    #[arg(long)]
    players: Option<String>,
    /// Slot counts, comma separated
    #[arg(long)]
    slots: Option<String>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scenarios(args) => cmd_scenarios(args),
        Command::FeeSweep(args) => cmd_fee_sweep(args),
        Command::GofSweep(args) => cmd_gof_sweep(args),
        Command::Compare(args) => cmd_compare(args),
    };
    if let Err(message) = result {
        eprintln!("error: {message}");
        std::process::exit(1);
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|item| {
            item.trim()
                .parse::<T>()
                .map_err(|_| format!("invalid {what} '{item}'"))
        })
        .collect()
}

/// The reference grids: nine players with one to eight slots, and three
/// slots with four to nine players.
fn default_grid() -> Vec<(usize, usize)> {
    let mut grid: Vec<(usize, usize)> = (1..=8).map(|k| (9usize, k)).collect();
    grid.extend((4..=8).map(|n| (n, 3usize)));
    grid.sort_unstable();
    grid
}

fn resolve_grid(players: &Option<String>, slots: &Option<String>) -> Result<Vec<(usize, usize)>, String> {
    match (players, slots) {
        (None, None) => Ok(default_grid()),
        (p, s) => {
            let players: Vec<usize> = parse_list(p.as_deref().unwrap_or("9"), "player count")?;
            let slots: Vec<usize> = parse_list(s.as_deref().unwrap_or("3"), "slot count")?;
            let mut grid = Vec::new();
            for &n in &players {
                for &k in &slots {
                    if k < n {
                        grid.push((n, k));
                    }
                }
            }
            if grid.is_empty() {
                return Err("grid is empty: every slot count must be below some player count".into());
            }
            grid.sort_unstable();
            Ok(grid)
        }
    }
}

/// All-honest population with slot weights k, k-1, .., 1 and the ideal
/// gate, the configuration the tradeoff and comparison tables assume.
fn honest_population(n: usize, k: usize, mechanism: Mechanism, seed: u64, rounds: u64, experiments: u32) -> Result<ScenarioConfig, String> {
    let weights: Vec<f64> = (1..=k).rev().map(|w| w as f64).collect();
    let scenario = ScenarioConfig {
        label: format!("honest-n{n}k{k}"),
        strategies: vec![StrategySpec::Honest; n],
        mech: MechanismConfig {
            n,
            weights: SlotWeights::new(weights).map_err(|e| e.to_string())?,
            mechanism,
            flat_fee: 0.0,
            gof: GoFConfig::default(),
            master_seed: seed,
        },
        rounds,
        experiments,
        gate: GateKind::Perfect,
    };
    scenario.validate().map_err(|e| e.to_string())?;
    Ok(scenario)
}

fn mean_player_per_round(reports: &[ExperimentReport]) -> f64 {
    reports.iter().map(ExperimentReport::player_mean_per_round).sum::<f64>() / reports.len() as f64
}

fn mean_seller_per_round(reports: &[ExperimentReport]) -> f64 {
    reports.iter().map(ExperimentReport::seller_per_round).sum::<f64>() / reports.len() as f64
}

fn cmd_scenarios(args: ScenariosArgs) -> Result<(), String> {
    let seed = args.common.resolved_seed()?;
    let jobs = args.common.resolved_jobs();

    // Resolve the scenario set: catalog labels or one custom file.
    let mut base_scenarios: Vec<ScenarioConfig> = Vec::new();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        base_scenarios.push(config::parse_scenario_file(&text)?);
    } else {
        for label in args.label.split(',') {
            let label = label.trim();
            let mut chars = label.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(format!("invalid scenario label '{label}'"));
            };
            base_scenarios.push(scenario_catalog(c).map_err(|e| e.to_string())?);
        }
    }
    let mechanisms: Vec<Mechanism> = parse_list(&args.mechanism, "mechanism")?;

    let weight_override: Option<SlotWeights> = match &args.weights {
        Some(text) => Some(
            SlotWeights::new(parse_list(text, "weight")?).map_err(|e| e.to_string())?,
        ),
        None => None,
    };
    for scenario in &mut base_scenarios {
        scenario.mech.master_seed = seed;
        scenario.rounds = args.common.rounds;
        scenario.experiments = args.common.experiments;
        scenario.mech.flat_fee = args.fee;
        if let Some(weights) = &weight_override {
            scenario.mech.weights = weights.clone();
        }
        scenario.mech.gof.history_length = args.history;
        scenario.mech.gof.p_threshold = args.pvalue;
        scenario.gate = if args.perfect_gof { GateKind::Perfect } else { GateKind::Ks };
        scenario.validate().map_err(|e| e.to_string())?;
    }

    let manifest = json!({
        "command": "scenarios",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "rounds": args.common.rounds,
        "experiments": args.common.experiments,
        "labels": base_scenarios.iter().map(|s| s.label.clone()).collect::<Vec<_>>(),
        "strategies": base_scenarios
            .iter()
            .map(|s| s.strategies.iter().map(|st| st.to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "mechanisms": mechanisms.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "players": base_scenarios[0].n(),
        "slots": base_scenarios[0].k(),
        "weights": base_scenarios[0].mech.weights.as_slice(),
        "fee": args.fee,
        "history": args.history,
        "pvalue": args.pvalue,
        "perfect_gof": args.perfect_gof,
        "outputs": ["scenarios.csv", "social.csv"],
    });
    let hash = write_manifest(&args.common.out, &manifest).map_err(|e| e.to_string())?;

    let k = base_scenarios[0].k();
    let slot_headers: Vec<String> = (1..=k).map(|j| format!("slot{j}_wins")).collect();
    let mut scenarios_csv = CsvFile::create(
        args.common.out.join("scenarios.csv"),
        &hash,
        &format!(
            "scenario,mechanism,experiment,player,strategy,cumulative_utility,per_round_mean,{},gof_rejections",
            slot_headers.join(",")
        ),
    )
    .map_err(|e| e.to_string())?;
    let mut social_csv = CsvFile::create(
        args.common.out.join("social.csv"),
        &hash,
        "scenario,mechanism,experiment,social_utility",
    )
    .map_err(|e| e.to_string())?;

    for base in &base_scenarios {
        for &mechanism in &mechanisms {
            let mut scenario = base.clone();
            scenario.mech.mechanism = mechanism;
            let reports = run_scenario(&scenario, jobs).map_err(|e| e.to_string())?;
            for report in &reports {
                for player in 0..scenario.n() {
                    let mut fields = vec![
                        report.label.clone(),
                        mechanism.name().to_string(),
                        report.experiment.to_string(),
                        player.to_string(),
                        report.strategies[player].to_string(),
                        fmt_f64(report.player_utility[player]),
                        fmt_f64(report.per_round_mean(player)),
                    ];
                    fields.extend(report.slot_wins[player].iter().map(u64::to_string));
                    fields.push(report.gof_rejections[player].to_string());
                    scenarios_csv.row(&fields).map_err(|e| e.to_string())?;
                }
                social_csv
                    .row(&[
                        report.label.clone(),
                        mechanism.name().to_string(),
                        report.experiment.to_string(),
                        fmt_f64(report.social_utility),
                    ])
                    .map_err(|e| e.to_string())?;
            }
        }
    }

    scenarios_csv.finish().map_err(|e| e.to_string())?;
    social_csv.finish().map_err(|e| e.to_string())?;
    Ok(())
}

fn cmd_fee_sweep(args: FeeSweepArgs) -> Result<(), String> {
    let seed = args.common.resolved_seed()?;
    let jobs = args.common.resolved_jobs();
    let grid = resolve_grid(&args.players, &args.slots)?;
    let fees: Vec<f64> = parse_list(&args.fee, "fee")?;

    let manifest = json!({
        "command": "fee-sweep",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "rounds": args.common.rounds,
        "experiments": args.common.experiments,
        "grid": grid.iter().map(|&(n, k)| json!({"n": n, "k": k})).collect::<Vec<_>>(),
        "fees": fees,
        "outputs": ["fee_sweep.csv"],
    });
    let hash = write_manifest(&args.common.out, &manifest).map_err(|e| e.to_string())?;

    let mut csv = CsvFile::create(
        args.common.out.join("fee_sweep.csv"),
        &hash,
        "n,k,fee,seller_mean,player_mean",
    )
    .map_err(|e| e.to_string())?;

    for &(n, k) in &grid {
        let scenario = honest_population(
            n,
            k,
            Mechanism::Fedor,
            seed,
            args.common.rounds,
            args.common.experiments,
        )?;
        let points = fee_sweep(&scenario, &fees, jobs).map_err(|e| e.to_string())?;
        for point in points {
            csv.row(&[
                n.to_string(),
                k.to_string(),
                fmt_f64(point.fee),
                fmt_f64(point.seller_mean_per_round),
                fmt_f64(point.player_mean_per_round),
            ])
            .map_err(|e| e.to_string())?;
        }
    }
    csv.finish().map_err(|e| e.to_string())?;
    Ok(())
}

fn cmd_gof_sweep(args: GofSweepArgs) -> Result<(), String> {
    let seed = args.common.resolved_seed()?;
    let jobs = args.common.resolved_jobs();
    let histories: Vec<usize> = parse_list(&args.history, "history length")?;
    let alphas: Vec<f64> = parse_list(&args.pvalue, "p-value threshold")?;
    // The four reporter families of the detection figure.
    let strategies = [
        StrategySpec::Honest,
        StrategySpec::BetaUncorr { beta: 0.9 },
        StrategySpec::BetaUncorr { beta: 0.7 },
        StrategySpec::Normal { mu: 0.5, sigma: 0.15 },
    ];

    let manifest = json!({
        "command": "gof-sweep",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "rounds": args.common.rounds,
        "experiments": args.common.experiments,
        "histories": histories,
        "pvalues": alphas,
        "strategies": strategies.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "outputs": ["gof_sweep.csv"],
    });
    let hash = write_manifest(&args.common.out, &manifest).map_err(|e| e.to_string())?;

    let points = gof_sweep(
        &strategies,
        &histories,
        &alphas,
        args.common.rounds,
        args.common.experiments,
        seed,
        jobs,
    )
    .map_err(|e| e.to_string())?;

    let mut csv = CsvFile::create(
        args.common.out.join("gof_sweep.csv"),
        &hash,
        "history,alpha,strategy,positive_rate",
    )
    .map_err(|e| e.to_string())?;
    for point in points {
        csv.row(&[
            point.history.to_string(),
            fmt_f64(point.alpha),
            point.strategy.to_string(),
            fmt_f64(point.positive_rate),
        ])
        .map_err(|e| e.to_string())?;
    }
    csv.finish().map_err(|e| e.to_string())?;
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), String> {
    let seed = args.common.resolved_seed()?;
    let jobs = args.common.resolved_jobs();
    let grid = resolve_grid(&args.players, &args.slots)?;

    let manifest = json!({
        "command": "compare",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "rounds": args.common.rounds,
        "experiments": args.common.experiments,
        "grid": grid.iter().map(|&(n, k)| json!({"n": n, "k": k})).collect::<Vec<_>>(),
        "outputs": ["compare.csv"],
    });
    let hash = write_manifest(&args.common.out, &manifest).map_err(|e| e.to_string())?;

    let mut csv = CsvFile::create(
        args.common.out.join("compare.csv"),
        &hash,
        "n,k,mechanism,seller_mean,player_mean",
    )
    .map_err(|e| e.to_string())?;

    for &(n, k) in &grid {
        for mechanism in [Mechanism::Fedor, Mechanism::Vcg, Mechanism::Gsp] {
            let scenario = honest_population(n, k, mechanism, seed, args.common.rounds, args.common.experiments)?;
            let reports = run_scenario(&scenario, jobs).map_err(|e| e.to_string())?;
            csv.row(&[
                n.to_string(),
                k.to_string(),
                mechanism.name().to_string(),
                fmt_f64(mean_seller_per_round(&reports)),
                fmt_f64(mean_player_per_round(&reports)),
            ])
            .map_err(|e| e.to_string())?;
        }
    }
    csv.finish().map_err(|e| e.to_string())?;
    Ok(())
}
