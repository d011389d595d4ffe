//! The per-player goodness-of-fit gate: a sliding window of past reported
//! values, tested each round together with the newly reported value against
//! Uniform[0,1] with the one-sample KS test.
//!
//! Window policy: every *reported* value is recorded, whether or not it
//! passed the gate, so the window always reflects the player's reporting
//! behavior. Pseudorandom replacement values are never recorded; they are
//! the mechanism's values, not the player's reports.

use crate::core::{Error, Result};
use crate::stats::ks_pvalue;

/// Gate parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoFConfig {
    /// Window capacity H.
    pub history_length: usize,
    /// Rejection threshold alpha: the gate fails when the KS p-value drops
    /// below this.
    pub p_threshold: f64,
    /// Accept everything while the window is still filling. Exists for unit
    /// tests; the engine always pre-fills windows before scored rounds.
    pub warmup_accept: bool,
}

impl Default for GoFConfig {
    fn default() -> Self {
        Self {
            history_length: 1000,
            p_threshold: 0.1,
            warmup_accept: false,
        }
    }
}

impl GoFConfig {
    pub fn validate(&self) -> Result<()> {
        if self.history_length < 10 {
            return Err(Error::Config(format!(
                "history length must be at least 10, got {}",
                self.history_length
            )));
        }
        if !(self.p_threshold > 0.0 && self.p_threshold < 1.0) {
            return Err(Error::Config(format!(
                "p threshold must lie in (0,1), got {}",
                self.p_threshold
            )));
        }
        Ok(())
    }
}

/// Sliding window of one player's most recent reported values. Keeps a
/// parallel sorted copy so the per-round KS scan is a single linear pass.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer {
    chronological: std::collections::VecDeque<f64>,
    sorted: Vec<f64>,
    capacity: usize,
}

impl HistoryBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            chronological: std::collections::VecDeque::with_capacity(capacity + 1),
            sorted: Vec::with_capacity(capacity + 1),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.chronological.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chronological.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() >= self.capacity
    }

    /// Append a reported value, evicting the oldest if the window is full.
    pub fn record(&mut self, value: f64) {
        debug_assert!((0.0..=1.0).contains(&value));
        if self.chronological.len() == self.capacity {
            let oldest = self.chronological.pop_front().expect("non-empty");
            self.chronological.push_back(value);
            // Replace in place: one shift over the span between the two
            // positions instead of a remove plus an insert.
            let i = self.sorted.partition_point(|&v| v < oldest);
            debug_assert!(self.sorted[i] == oldest);
            let j = self.sorted.partition_point(|&v| v < value);
            if j <= i {
                self.sorted.copy_within(j..i, j + 1);
                self.sorted[j] = value;
            } else {
                self.sorted.copy_within(i + 1..j, i);
                self.sorted[j - 1] = value;
            }
        } else {
            self.chronological.push_back(value);
            let idx = self.sorted.partition_point(|&v| v < value);
            self.sorted.insert(idx, value);
        }
    }

    /// Oldest-to-newest iteration.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.chronological.iter().copied()
    }

    /// KS statistic of the window with `candidate` merged in, without
    /// materializing the combined sample. Equals
    /// `ks_statistic(window + candidate)` bit for bit: max is an exact
    /// selection, so the unrolled reduction below can associate freely.
    pub fn ks_with_candidate(&self, candidate: f64) -> f64 {
        let m = (self.sorted.len() + 1) as f64;
        let inv_m = 1.0 / m;
        let pos = self.sorted.partition_point(|&v| v < candidate);
        // Window elements at ranks 0..pos keep their rank; the rest shift
        // up by one to make room for the candidate at rank `pos`.
        let d = scan_gap_max(&self.sorted[..pos], 0, inv_m)
            .max(scan_gap_max(&self.sorted[pos..], pos + 1, inv_m));
        d.max((pos + 1) as f64 * inv_m - candidate)
            .max(candidate - pos as f64 * inv_m)
    }
}

/// Max over `xs` of the two ECDF gaps at ranks `first_rank + i`, unrolled
/// into four independent accumulators so the reduction pipelines. Gap
/// values match the plain formulation bit for bit; max is exact selection,
/// so regrouping the reduction cannot change the result.
#[inline]
fn scan_gap_max(xs: &[f64], first_rank: usize, inv_m: f64) -> f64 {
    #[inline(always)]
    fn sel_max(a: f64, b: f64) -> f64 {
        if b > a {
            b
        } else {
            a
        }
    }
    let (mut d0, mut d1, mut d2, mut d3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut chunks = xs.chunks_exact(4);
    let mut base = first_rank;
    for chunk in &mut chunks {
        let r = base as f64;
        d0 = sel_max(d0, sel_max((r + 1.0) * inv_m - chunk[0], chunk[0] - r * inv_m));
        d1 = sel_max(d1, sel_max((r + 2.0) * inv_m - chunk[1], chunk[1] - (r + 1.0) * inv_m));
        d2 = sel_max(d2, sel_max((r + 3.0) * inv_m - chunk[2], chunk[2] - (r + 2.0) * inv_m));
        d3 = sel_max(d3, sel_max((r + 4.0) * inv_m - chunk[3], chunk[3] - (r + 3.0) * inv_m));
        base += 4;
    }
    let mut out = sel_max(sel_max(d0, d1), sel_max(d2, d3));
    for (lane, &x) in chunks.remainder().iter().enumerate() {
        let rank = (base + lane) as f64;
        out = sel_max(out, sel_max((rank + 1.0) * inv_m - x, x - rank * inv_m));
    }
    out
}

/// Gate verdicts consumed by the decision rule. `player` lets test doubles
/// key on identity; the statistical gate ignores it.
pub trait GofGate {
    /// True when the candidate is consistent with Uniform[0,1].
    fn check(&self, player: usize, history: &HistoryBuffer, candidate: f64) -> Result<bool>;
}

/// The real gate: one-sample KS over window + candidate.
#[derive(Debug, Clone)]
pub struct KsGate {
    pub config: GoFConfig,
}

impl KsGate {
    pub fn new(config: GoFConfig) -> Self {
        Self { config }
    }
}

impl GofGate for KsGate {
    fn check(&self, _player: usize, history: &HistoryBuffer, candidate: f64) -> Result<bool> {
        gof_check(&self.config, history, candidate)
    }
}

/// Test window + candidate against Uniform[0,1]; true means the report
/// passes. During warmup (window below capacity) with `warmup_accept`, the
/// gate always passes.
pub fn gof_check(config: &GoFConfig, history: &HistoryBuffer, candidate: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&candidate) {
        return Err(Error::Argument(format!(
            "gof candidate must lie in [0,1], got {candidate}"
        )));
    }
    if config.warmup_accept && !history.is_full() {
        return Ok(true);
    }
    let d = history.ks_with_candidate(candidate);
    let p = ks_pvalue(d, history.len() + 1);
    Ok(p >= config.p_threshold)
}
