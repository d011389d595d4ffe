//! Flat key=value scenario files, the no-dependency alternative to the
//! built-in catalog:
//!
//! ```text
//! label=custom
//! mechanism=fedor
//! weights=3,2,1
//! fee=0
//! rounds=10000
//! experiments=100
//! history=1000
//! pvalue=0.1
//! seed=7
//! player.0.strategy=honest
//! player.1.strategy=normal:0.5:0.15
//! ```

use fedor::core::{Mechanism, MechanismConfig, SlotWeights};
use fedor::engine::{GateKind, ScenarioConfig};
use fedor::gof::GoFConfig;
use fedor::strategies::StrategySpec;

pub fn parse_scenario_file(text: &str) -> Result<ScenarioConfig, String> {
    let mut label = "custom".to_string();
    let mut mechanism = Mechanism::Fedor;
    let mut weights = vec![3.0, 2.0, 1.0];
    let mut fee = 0.0f64;
    let mut rounds = 10_000u64;
    let mut experiments = 100u32;
    let mut history = 1000usize;
    let mut pvalue = 0.1f64;
    let mut seed = 42u64;
    let mut players: Vec<(usize, StrategySpec)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| format!("line {}: invalid {what} '{value}'", lineno + 1);
        match key {
            "label" => label = value.to_string(),
            "mechanism" => mechanism = value.parse().map_err(|_| bad("mechanism"))?,
            "weights" => {
                weights = value
                    .split(',')
                    .map(|w| w.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("weights"))?;
            }
            "fee" => fee = value.parse().map_err(|_| bad("fee"))?,
            "rounds" => rounds = value.parse().map_err(|_| bad("rounds"))?,
            "experiments" => experiments = value.parse().map_err(|_| bad("experiments"))?,
            "history" => history = value.parse().map_err(|_| bad("history"))?,
            "pvalue" => pvalue = value.parse().map_err(|_| bad("pvalue"))?,
            "seed" => seed = value.parse().map_err(|_| bad("seed"))?,
            _ => {
                let index = key
                    .strip_prefix("player.")
                    .and_then(|rest| rest.strip_suffix(".strategy"))
                    .and_then(|i| i.parse::<usize>().ok())
                    .ok_or_else(|| format!("line {}: unknown key '{key}'", lineno + 1))?;
                let strategy: StrategySpec = value.parse().map_err(|e| format!("line {}: {e}", lineno + 1))?;
                players.push((index, strategy));
            }
        }
    }

    if players.is_empty() {
        return Err("no player.<i>.strategy entries".into());
    }
    players.sort_by_key(|&(i, _)| i);
    let n = players.len();
    for (expect, &(got, _)) in players.iter().enumerate() {
        if got != expect {
            return Err(format!("player indices must be contiguous from 0, missing {expect}"));
        }
    }

    let scenario = ScenarioConfig {
        label,
        strategies: players.into_iter().map(|(_, s)| s).collect(),
        mech: MechanismConfig {
            n,
            weights: SlotWeights::new(weights).map_err(|e| e.to_string())?,
            mechanism,
            flat_fee: fee,
            gof: GoFConfig {
                history_length: history,
                p_threshold: pvalue,
                warmup_accept: false,
            },
            master_seed: seed,
        },
        rounds,
        experiments,
        gate: GateKind::Ks,
    };
    scenario.validate().map_err(|e| e.to_string())?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# population with one distorted reporter
label=demo
mechanism=fedor
weights=2,1
fee=0.05
rounds=500
experiments=3
history=100
pvalue=0.1
seed=9
player.0.strategy=honest
player.1.strategy=honest
player.2.strategy=beta_corr:0.9
";

    #[test]
    fn parses_a_full_file() {
        let s = parse_scenario_file(SAMPLE).unwrap();
        assert_eq!(s.label, "demo");
        assert_eq!(s.n(), 3);
        assert_eq!(s.k(), 2);
        assert_eq!(s.mech.flat_fee, 0.05);
        assert_eq!(s.mech.gof.history_length, 100);
        assert_eq!(s.mech.master_seed, 9);
        assert_eq!(s.strategies[2], StrategySpec::BetaCorr { beta: 0.9 });
    }

    #[test]
    fn rejects_gaps_and_unknown_keys() {
        assert!(parse_scenario_file("player.1.strategy=honest").is_err());
        assert!(parse_scenario_file("bogus=1\nplayer.0.strategy=honest").is_err());
        assert!(parse_scenario_file("").is_err());
        // k >= n is rejected by validation.
        let bad = "weights=2,1\nplayer.0.strategy=honest\nplayer.1.strategy=honest";
        assert!(parse_scenario_file(bad).is_err());
    }
}
