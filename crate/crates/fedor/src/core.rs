//! Domain types, configuration, and the utility accounting shared by every
//! mechanism. Player indices are 0-based everywhere; reports aimed at humans
//! may re-map to 1-based at the presentation layer.

use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Invalid static configuration (weights, player counts, fees, ...).
    Config(String),
    /// Invalid argument to an operation.
    Argument(String),
    /// A replica observed something the broadcast contract forbids.
    Protocol(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Argument(msg) => write!(f, "argument error: {msg}"),
            Error::Protocol(msg) => write!(f, "protocol violation: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

/// Which allocation rule a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Fedor,
    Vcg,
    Gsp,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Fedor => "fedor",
            Mechanism::Vcg => "vcg",
            Mechanism::Gsp => "gsp",
        }
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fedor" => Ok(Mechanism::Fedor),
            "vcg" => Ok(Mechanism::Vcg),
            "gsp" => Ok(Mechanism::Gsp),
            other => Err(Error::Argument(format!("unknown mechanism '{other}'"))),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Relative slot values (CTR-style weights), sorted non-increasing, all
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotWeights {
    w: Vec<f64>,
}

impl SlotWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Config("need at least one slot weight".into()));
        }
        if w.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::Config(format!("slot weights must be positive, got {w:?}")));
        }
        if w.windows(2).any(|p| p[0] < p[1]) {
            return Err(Error::Config(format!(
                "slot weights must be non-increasing, got {w:?}"
            )));
        }
        Ok(Self { w })
    }

    /// Number of slots.
    pub fn k(&self) -> usize {
        self.w.len()
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.w[slot]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// A player's true private valuation for the current round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerType(f64);

impl PlayerType {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Argument(format!("player type must lie in [0,1], got {theta}")));
        }
        Ok(Self(theta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// All players' reported types for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct BidVector {
    pub round: u64,
    bids: Vec<f64>,
}

impl BidVector {
    pub fn new(round: u64, bids: Vec<f64>) -> Result<Self> {
        if bids.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::Argument(format!(
                "bids must lie in [0,1], got {bids:?}"
            )));
        }
        Ok(Self { round, bids })
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    pub fn get(&self, player: usize) -> f64 {
        self.bids[player]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.bids
    }
}

/// One round's allocation: `assignment[j]` is the player receiving slot `j`.
/// `payments[i]` is what player `i` pays this round (auction price, or the
/// flat fee under the payment-free mechanism). `decision_values` holds the
/// filtered value vector when the filtering mechanism produced one.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationOutcome {
    pub assignment: Vec<usize>,
    pub payments: Vec<f64>,
    pub decision_values: Vec<f64>,
}

impl AllocationOutcome {
    /// Slot won by `player`, if any.
    pub fn slot_of(&self, player: usize) -> Option<usize> {
        self.assignment.iter().position(|&p| p == player)
    }
}

/// Utility of one player for one round: `theta * w_slot - payment` if a slot
/// was won, `-payment` otherwise.
pub fn per_round_utility(
    theta: f64,
    slot: Option<usize>,
    weights: &SlotWeights,
    payment: f64,
) -> Result<f64> {
    debug_assert!((0.0..=1.0).contains(&theta));
    debug_assert!(payment >= 0.0);
    match slot {
        Some(j) if j >= weights.k() => Err(Error::Config(format!(
            "slot index {j} out of range for k={}",
            weights.k()
        ))),
        Some(j) => Ok(theta * weights.get(j) - payment),
        None => Ok(-payment),
    }
}

/// Static configuration for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismConfig {
    pub n: usize,
    pub weights: SlotWeights,
    pub mechanism: Mechanism,
    /// Per-round participation fee, charged to every player (payment-free
    /// mechanism only).
    pub flat_fee: f64,
    pub gof: crate::gof::GoFConfig,
    pub master_seed: u64,
}

impl MechanismConfig {
    pub fn validate(&self) -> Result<()> {
        let k = self.weights.k();
        if !(1 <= k && k < self.n) {
            return Err(Error::Config(format!(
                "need 1 <= k < n, got k={k}, n={}",
                self.n
            )));
        }
        if !(self.flat_fee.is_finite() && self.flat_fee >= 0.0) {
            return Err(Error::Config(format!(
                "flat fee must be non-negative, got {}",
                self.flat_fee
            )));
        }
        self.gof.validate()
    }
}

/// Kahan-compensated accumulator. Keeps cumulative utility drift far below
/// the 1e-6 relative budget even over millions of rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Cumulative per-player and seller utilities plus slot win counts for one
/// experiment. Owned and mutated by a single engine instance.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityLedger {
    player_utility: Vec<CompensatedSum>,
    seller_utility: CompensatedSum,
    /// `slot_wins[player][slot]`.
    slot_wins: Vec<Vec<u64>>,
    rounds: u64,
}

impl UtilityLedger {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            player_utility: vec![CompensatedSum::default(); n],
            seller_utility: CompensatedSum::default(),
            slot_wins: vec![vec![0; k]; n],
            rounds: 0,
        }
    }

    /// Record one settled round.
    pub fn record_round(&mut self, per_player: &[f64], seller: f64, assignment: &[usize]) {
        debug_assert_eq!(per_player.len(), self.player_utility.len());
        for (acc, &u) in self.player_utility.iter_mut().zip(per_player) {
            acc.add(u);
        }
        self.seller_utility.add(seller);
        for (slot, &player) in assignment.iter().enumerate() {
            self.slot_wins[player][slot] += 1;
        }
        self.rounds += 1;
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn player_utility(&self, player: usize) -> f64 {
        self.player_utility[player].value()
    }

    pub fn seller_utility(&self) -> f64 {
        self.seller_utility.value()
    }

    pub fn slot_wins(&self, player: usize) -> &[u64] {
        &self.slot_wins[player]
    }

    /// Each slot is given out exactly once per round.
    pub fn slot_totals_consistent(&self) -> bool {
        let k = self.slot_wins.first().map_or(0, Vec::len);
        (0..k).all(|j| {
            self.slot_wins.iter().map(|row| row[j]).sum::<u64>() == self.rounds
        })
    }
}
