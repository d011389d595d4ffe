//! Replicated execution of the filtered-rank mechanism: every player runs a
//! node, bids travel over a simulated reliable synchronous broadcast, and
//! each node independently recomputes the gate verdicts, the replacement
//! values, and the allocation from its own copy of the state. No central
//! entity decides anything; [`agreement_audit`] verifies that all replicas
//! nevertheless produced identical outcomes.

use crate::core::{BidVector, Error, Mechanism, Result, SlotWeights};
use crate::engine::{GateKind, PerfectGate, ScenarioConfig};
use crate::gof::{GofGate, HistoryBuffer, KsGate};
use crate::mechanisms::{fedor_decide, DecisionVector};
use crate::rng::{RngStream, StreamPurpose};
use crate::strategies::{declare, draw_true_type, StrategySpec};

/// Fixed 18-byte wire layout: round (u64 BE) | player id (u16 BE) |
/// bid (binary64 bits, BE). Traces dump and replay byte-exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireMessage {
    pub round: u64,
    pub player_id: u16,
    pub bid: f64,
}

impl WireMessage {
    pub const ENCODED_LEN: usize = 18;

    pub fn encode(&self) -> [u8; Self::ENCODED_LEN] {
        let mut out = [0u8; Self::ENCODED_LEN];
        out[..8].copy_from_slice(&self.round.to_be_bytes());
        out[8..10].copy_from_slice(&self.player_id.to_be_bytes());
        out[10..].copy_from_slice(&self.bid.to_bits().to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != Self::ENCODED_LEN {
            return Err(Error::Protocol(format!(
                "wire message must be {} bytes, got {}",
                Self::ENCODED_LEN,
                bytes.len()
            )));
        }
        let round = u64::from_be_bytes(bytes[..8].try_into().unwrap());
        let player_id = u16::from_be_bytes(bytes[8..10].try_into().unwrap());
        let bid = f64::from_bits(u64::from_be_bytes(bytes[10..].try_into().unwrap()));
        if !(0.0..=1.0).contains(&bid) {
            return Err(Error::Protocol(format!("bid {bid} out of range on the wire")));
        }
        Ok(Self { round, player_id, bid })
    }
}

/// Round-synchronized mailboxes. Every message broadcast in a round reaches
/// every node before that round's compute phase; each node drains its
/// mailbox in its own pseudorandom permutation, so nothing downstream may
/// depend on delivery order.
struct BroadcastBus {
    mailboxes: Vec<Vec<[u8; WireMessage::ENCODED_LEN]>>,
    shuffle: RngStream,
}

impl BroadcastBus {
    fn new(n: usize, master_seed: u64, experiment: u32) -> Self {
        Self {
            mailboxes: vec![Vec::with_capacity(n); n],
            shuffle: RngStream::new(master_seed, experiment as u64, 0, StreamPurpose::BusShuffle),
        }
    }

    fn broadcast(&mut self, message: &WireMessage) {
        let bytes = message.encode();
        for mailbox in &mut self.mailboxes {
            mailbox.push(bytes);
        }
    }

    fn deliver(&mut self, node: usize) -> Vec<[u8; WireMessage::ENCODED_LEN]> {
        let mut batch = std::mem::take(&mut self.mailboxes[node]);
        self.shuffle.shuffle(&mut batch);
        batch
    }
}

/// One replica: the player it acts for, plus local copies of every
/// player's history window and its own gate instance.
struct Node {
    player: usize,
    strategy: StrategySpec,
    type_stream: RngStream,
    declare_stream: RngStream,
    gate: Box<dyn GofGate>,
    histories: Vec<HistoryBuffer>,
    weights: SlotWeights,
}

impl Node {
    fn compute(&mut self, round: u64, batch: &[[u8; WireMessage::ENCODED_LEN]]) -> Result<NodeOutcome> {
        let n = self.histories.len();
        if batch.len() != n {
            return Err(Error::Protocol(format!(
                "node {} entered compute with {} of {} bids in round {round}",
                self.player,
                batch.len(),
                n
            )));
        }
        // Reassemble by player id; delivery order is deliberately useless.
        let mut bids = vec![f64::NAN; n];
        for bytes in batch {
            let msg = WireMessage::decode(bytes)?;
            if msg.round != round {
                return Err(Error::Protocol(format!(
                    "node {} got a round-{} message in round {round}",
                    self.player, msg.round
                )));
            }
            let idx = msg.player_id as usize;
            if idx >= n || !bids[idx].is_nan() {
                return Err(Error::Protocol(format!(
                    "node {} got a duplicate or unknown sender {idx} in round {round}",
                    self.player
                )));
            }
            bids[idx] = msg.bid;
        }
        let bid_vector = BidVector::new(round, bids)?;

        let decision = fedor_decide(&bid_vector, &self.histories, self.gate.as_ref(), &self.weights)?;
        for (history, &bid) in self.histories.iter_mut().zip(bid_vector.as_slice()) {
            history.record(bid);
        }
        Ok(NodeOutcome {
            assignment: decision.outcome.assignment,
            decision: decision.decision,
        })
    }

    fn record_warmup(&mut self, batch: &[[u8; WireMessage::ENCODED_LEN]], round: u64) -> Result<()> {
        let n = self.histories.len();
        if batch.len() != n {
            return Err(Error::Protocol(format!(
                "node {} missing warmup bids in round {round}",
                self.player
            )));
        }
        let mut bids = vec![f64::NAN; n];
        for bytes in batch {
            let msg = WireMessage::decode(bytes)?;
            bids[msg.player_id as usize] = msg.bid;
        }
        for (history, &bid) in self.histories.iter_mut().zip(&bids) {
            history.record(bid);
        }
        Ok(())
    }
}

/// What one node decided in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeOutcome {
    pub assignment: Vec<usize>,
    pub decision: DecisionVector,
}

/// All nodes' outcomes for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcomes {
    pub round: u64,
    pub per_node: Vec<NodeOutcome>,
}

pub type NetTrace = Vec<RoundOutcomes>;

/// The replicated system: n nodes in lockstep rounds over the bus.
pub struct NetSim {
    nodes: Vec<Node>,
    bus: BroadcastBus,
    round: u64,
}

impl NetSim {
    /// Builds the replica set and runs the unscored warmup rounds that fill
    /// every history window from broadcast reports.
    pub fn new(scenario: &ScenarioConfig, experiment: u32) -> Result<Self> {
        scenario.validate()?;
        if scenario.mech.mechanism != Mechanism::Fedor {
            return Err(Error::Config(
                "the replicated protocol runs the payment-free mechanism only".into(),
            ));
        }
        let n = scenario.n();
        let seed = scenario.mech.master_seed;
        let h = scenario.mech.gof.history_length;
        let mut nodes: Vec<Node> = (0..n)
            .map(|player| {
                let gate: Box<dyn GofGate> = match scenario.gate {
                    GateKind::Ks => Box::new(KsGate::new(scenario.mech.gof)),
                    GateKind::Perfect => Box::new(PerfectGate::new(&scenario.strategies)),
                };
                Node {
                    player,
                    strategy: scenario.strategies[player],
                    type_stream: RngStream::new(
                        seed,
                        experiment as u64,
                        player as u64,
                        StreamPurpose::TrueType,
                    ),
                    declare_stream: RngStream::new(
                        seed,
                        experiment as u64,
                        player as u64,
                        StreamPurpose::Declare,
                    ),
                    gate,
                    histories: (0..n).map(|_| HistoryBuffer::new(h)).collect(),
                    weights: scenario.mech.weights.clone(),
                }
            })
            .collect();

        let mut bus = BroadcastBus::new(n, seed, experiment);
        for warmup_round in 0..h as u64 {
            for node in &mut nodes {
                let theta = draw_true_type(&mut node.type_stream);
                let bid = declare(&node.strategy, theta, &mut node.declare_stream);
                bus.broadcast(&WireMessage {
                    round: warmup_round,
                    player_id: node.player as u16,
                    bid,
                });
            }
            for i in 0..n {
                let batch = bus.deliver(i);
                nodes[i].record_warmup(&batch, warmup_round)?;
            }
        }

        Ok(Self { nodes, bus, round: 0 })
    }

    /// One synchronous round: every node broadcasts its bid, then every node
    /// computes the allocation from the n bids it received.
    pub fn step_round(&mut self) -> Result<RoundOutcomes> {
        let round = self.round;
        for node in &mut self.nodes {
            let theta = draw_true_type(&mut node.type_stream);
            let bid = declare(&node.strategy, theta, &mut node.declare_stream);
            self.bus.broadcast(&WireMessage {
                round,
                player_id: node.player as u16,
                bid,
            });
        }
        let mut per_node = Vec::with_capacity(self.nodes.len());
        for i in 0..self.nodes.len() {
            let batch = self.bus.deliver(i);
            per_node.push(self.nodes[i].compute(round, &batch)?);
        }
        self.round += 1;
        Ok(RoundOutcomes { round, per_node })
    }

    pub fn run(&mut self, rounds: u64) -> Result<NetTrace> {
        (0..rounds).map(|_| self.step_round()).collect()
    }
}

/// True iff in every round all replicas produced the same assignment and
/// bit-identical decision vectors.
pub fn agreement_audit(trace: &NetTrace) -> bool {
    trace.iter().all(|round| {
        let Some(first) = round.per_node.first() else {
            return true;
        };
        round.per_node.iter().all(|node| {
            node.assignment == first.assignment && node.decision.bits_eq(&first.decision)
        })
    })
}
