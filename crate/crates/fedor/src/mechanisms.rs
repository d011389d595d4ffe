//! The three allocation rules.
//!
//! - [`fedor_decide`]: rank the gate-filtered value vector, no payments.
//! - [`vcg_decide`]: position auction with externality payments.
//! - [`gsp_decide`]: position auction with next-bid payments.
//!
//! All tie-breaks are by lower player index, so every rule is a pure
//! deterministic function of its inputs.

use crate::core::{AllocationOutcome, BidVector, Error, Result, SlotWeights};
use crate::gof::{GofGate, HistoryBuffer};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[inline]
fn fnv1a_absorb(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// The replacement value every replica substitutes for a report that failed
/// the gate. Bit-exact procedure: hash, with 64-bit FNV-1a, the byte string
/// formed by each remaining bid as its big-endian IEEE-754 bits (increasing
/// player index), then the round and the excluded player index as big-endian
/// u64; the value is `(hash >> 11) / 2^53`, uniform in [0, 1).
pub fn deterministic_uniform(round: u64, excluded_player: usize, others_bids: &[f64]) -> f64 {
    let mut hash = FNV_OFFSET;
    for &bid in others_bids {
        hash = fnv1a_absorb(hash, &bid.to_bits().to_be_bytes());
    }
    hash = fnv1a_absorb(hash, &round.to_be_bytes());
    hash = fnv1a_absorb(hash, &(excluded_player as u64).to_be_bytes());
    (hash >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The filtered value vector the payment-free rule ranks. Same on every
/// replica that saw the same bids.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector {
    values: Vec<f64>,
}

impl DecisionVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, player: usize) -> f64 {
        self.values[player]
    }

    /// Bit-level equality, the agreement criterion between replicas.
    pub fn bits_eq(&self, other: &DecisionVector) -> bool {
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Everything one filtered-rank decision produces.
#[derive(Debug, Clone, PartialEq)]
pub struct FedorDecision {
    pub outcome: AllocationOutcome,
    pub decision: DecisionVector,
    /// Per-player gate verdicts (true = report accepted).
    pub verdicts: Vec<bool>,
}

/// Indices of the k largest values, descending, ties by lower player index.
fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Filtered-rank allocation: each report that passes its gate stands; each
/// one that fails is replaced by [`deterministic_uniform`] computed from the
/// other players' raw bids. Slots go to the k largest filtered values.
/// Payments are zeros here; the engine applies the flat fee.
pub fn fedor_decide(
    bids: &BidVector,
    histories: &[HistoryBuffer],
    gate: &dyn GofGate,
    weights: &SlotWeights,
) -> Result<FedorDecision> {
    let n = bids.len();
    let k = weights.k();
    if n <= k {
        return Err(Error::Config(format!("need more players than slots, got n={n}, k={k}")));
    }
    if histories.len() != n {
        return Err(Error::Argument(format!(
            "history count {} does not match player count {n}",
            histories.len()
        )));
    }

    let mut verdicts = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut others = Vec::with_capacity(n - 1);
    for i in 0..n {
        let bid = bids.get(i);
        let pass = gate.check(i, &histories[i], bid)?;
        verdicts.push(pass);
        if pass {
            values.push(bid);
        } else {
            others.clear();
            others.extend(
                bids.as_slice()
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &b)| b),
            );
            values.push(deterministic_uniform(bids.round, i, &others));
        }
    }

    let assignment = top_k(&values, k);
    Ok(FedorDecision {
        outcome: AllocationOutcome {
            assignment,
            payments: vec![0.0; n],
            decision_values: values.clone(),
        },
        decision: DecisionVector { values },
        verdicts,
    })
}

/// VCG position auction: top-k bidders win in bid order; the slot-j winner
/// pays the externality `sum_{m=j}^{k} (w_m - w_{m+1}) * b_(m+1)` with
/// `w_{k+1} = 0`, where `b_(m)` is the m-th highest bid.
pub fn vcg_decide(bids: &BidVector, weights: &SlotWeights) -> Result<AllocationOutcome> {
    let (ranked, k) = position_rank(bids, weights)?;
    let n = bids.len();
    let mut payments = vec![0.0; n];
    for j in 0..k {
        let mut p = 0.0;
        for m in j..k {
            let w_next = if m + 1 < k { weights.get(m + 1) } else { 0.0 };
            p += (weights.get(m) - w_next) * bids.get(ranked[m + 1]);
        }
        payments[ranked[j]] = p;
    }
    Ok(AllocationOutcome {
        assignment: ranked[..k].to_vec(),
        payments,
        decision_values: Vec::new(),
    })
}

/// GSP position auction: the slot-j winner pays `w_j * b_(j+1)`.
pub fn gsp_decide(bids: &BidVector, weights: &SlotWeights) -> Result<AllocationOutcome> {
    let (ranked, k) = position_rank(bids, weights)?;
    let n = bids.len();
    let mut payments = vec![0.0; n];
    for j in 0..k {
        payments[ranked[j]] = weights.get(j) * bids.get(ranked[j + 1]);
    }
    Ok(AllocationOutcome {
        assignment: ranked[..k].to_vec(),
        payments,
        decision_values: Vec::new(),
    })
}

fn position_rank(bids: &BidVector, weights: &SlotWeights) -> Result<(Vec<usize>, usize)> {
    let n = bids.len();
    let k = weights.k();
    if n <= k {
        return Err(Error::Config(format!("need more players than slots, got n={n}, k={k}")));
    }
    Ok((top_k(bids.as_slice(), n), k))
}
