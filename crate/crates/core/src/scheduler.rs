//! Back-pressure scheduling over rate-tagged virtual queues.
//!
//! The source holds a backlog of bits. Each relay keeps one virtual queue per
//! packet state `g`; a `g`-packet carries up to `r_g` bits, enters both relays
//! when the source broadcasts during a block whose source gains match `g`, and
//! leaves both relays when they forward it during a block whose relay gains
//! match `g`. Every block the scheduler either lets the source broadcast,
//! lets the relays forward, or idles.
//!
//! Weights, for the realized state `f`:
//!
//! * source, over `g` matching `f` on the source side:
//!   `(q_s - r_g (q_1[g] + q_2[g])) r_g`
//! * relays, over `g` matching `f` on the relay side:
//!   `r_g^2 (q_1[g] + q_2[g])`
//!
//! The source wins ties. Only the realized state is ever consulted; the
//! scheduler has no notion of the state distribution.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::channel::{FadingState, RateTable, StateId};

/// One amplify-and-forward "packet": the stored signal is abstracted to its
/// encoding state and the number of real bits it carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub g: StateId,
    pub payload: f64,
    pub born: u64,
}

pub const RELAYS: usize = 2;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueueState {
    source_backlog: f64,
    relays: [BTreeMap<StateId, VecDeque<Packet>>; RELAYS],
    enqueued: BTreeMap<StateId, u64>,
    drained: BTreeMap<StateId, u64>,
    slot: u64,
}

impl QueueState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn source_backlog(&self) -> f64 {
        self.source_backlog
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Packets waiting at relay `n` (0 or 1) for state `g`.
    pub fn relay_len(&self, relay: usize, g: StateId) -> usize {
        self.relays[relay].get(&g).map_or(0, VecDeque::len)
    }

    /// `q_1[g] + q_2[g]`.
    pub fn pair_len(&self, g: StateId) -> usize {
        (0..RELAYS).map(|n| self.relay_len(n, g)).sum()
    }

    pub fn head(&self, relay: usize, g: StateId) -> Option<&Packet> {
        self.relays[relay].get(&g).and_then(VecDeque::front)
    }

    /// Packet states that have ever been materialized at either relay.
    pub fn packet_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.enqueued.keys().copied()
    }

    pub fn enqueued(&self, g: StateId) -> u64 {
        self.enqueued.get(&g).copied().unwrap_or(0)
    }

    pub fn drained(&self, g: StateId) -> u64 {
        self.drained.get(&g).copied().unwrap_or(0)
    }

    /// Both relays hold the same number of packets for every state.
    pub fn is_symmetric(&self) -> bool {
        self.packet_states()
            .all(|g| self.relay_len(0, g) == self.relay_len(1, g))
    }

    pub fn arrive(&mut self, bits: f64) {
        debug_assert!(bits >= 0.0);
        self.source_backlog += bits;
    }

    pub fn advance_slot(&mut self) {
        self.slot += 1;
    }

    /// `q_s + sum_{n,g} r_g q_n[g]`, the backlog in nominal bits.
    pub fn weighted_backlog(&self, rates: &RateTable) -> f64 {
        self.source_backlog
            + self
                .relays
                .iter()
                .flat_map(|m| m.iter())
                .map(|(g, q)| rates.rate(*g) * q.len() as f64)
                .sum::<f64>()
    }

    /// Test hook: sets counts directly, keeping both relays equal.
    pub fn with_backlog(source_bits: f64, packets: &[(StateId, usize)], rates: &RateTable) -> Self {
        let mut q = Self::new();
        q.source_backlog = source_bits;
        for &(g, count) in packets {
            for _ in 0..count {
                q.push_pair(Packet {
                    g,
                    payload: rates.rate(g),
                    born: 0,
                });
            }
        }
        q
    }

    fn push_pair(&mut self, packet: Packet) {
        for relay in &mut self.relays {
            relay.entry(packet.g).or_default().push_back(packet);
        }
        *self.enqueued.entry(packet.g).or_default() += 1;
    }

    fn pop_pair(&mut self, g: StateId) -> Option<Packet> {
        let [first, second] = &mut self.relays;
        let a = first.get_mut(&g)?.pop_front()?;
        let b = second
            .get_mut(&g)
            .and_then(VecDeque::pop_front)
            .expect("relay queues out of step");
        debug_assert_eq!(a, b);
        *self.drained.entry(g).or_default() += 1;
        Some(a)
    }
}

/// What the network does in one block. `bits` is the real payload moved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Action {
    SourceTransmit { g: StateId, bits: f64 },
    RelayTransmit { g: StateId, bits: f64 },
    Idle,
}

impl Action {
    pub fn label(&self) -> &'static str {
        match self {
            Action::SourceTransmit { .. } => "source",
            Action::RelayTransmit { .. } => "relay",
            Action::Idle => "idle",
        }
    }

    pub fn packet_state(&self) -> Option<StateId> {
        match *self {
            Action::SourceTransmit { g, .. } | Action::RelayTransmit { g, .. } => Some(g),
            Action::Idle => None,
        }
    }

    pub fn bits(&self) -> f64 {
        match *self {
            Action::SourceTransmit { bits, .. } | Action::RelayTransmit { bits, .. } => bits,
            Action::Idle => 0.0,
        }
    }
}

/// What the source does when its backlog is smaller than `r_g`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Padding {
    /// Send a packet carrying whatever bits are available.
    #[default]
    Pad,
    /// Idle instead of sending a short packet.
    Strict,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SchedulerConfig {
    pub padding: Padding,
}

pub fn source_weight(g: StateId, queues: &QueueState, rates: &RateTable) -> f64 {
    let r = rates.rate(g);
    (queues.source_backlog() - r * queues.pair_len(g) as f64) * r
}

pub fn relay_weight(g: StateId, queues: &QueueState, rates: &RateTable) -> f64 {
    let r = rates.rate(g);
    r * r * queues.pair_len(g) as f64
}

/// `q_s^2 + sum_{n,g} (r_g q_n[g])^2`.
pub fn lyapunov_value(queues: &QueueState, rates: &RateTable) -> f64 {
    let relay: f64 = queues
        .relays
        .iter()
        .flat_map(|m| m.iter())
        .map(|(g, q)| {
            let w = rates.rate(*g) * q.len() as f64;
            w * w
        })
        .sum();
    queues.source_backlog * queues.source_backlog + relay
}

/// Packet states `g` with positive rate that can be served in state `f`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Eligible {
    pub source: Vec<StateId>,
    pub relay: Vec<StateId>,
}

impl Eligible {
    pub fn for_state(f: StateId, rates: &RateTable) -> Self {
        let a = rates.alphabet();
        Self {
            source: a
                .source_matches(f)
                .filter(|&g| rates.rate(g) > 0.0)
                .collect(),
            relay: a
                .relay_matches(f)
                .filter(|&g| rates.rate(g) > 0.0)
                .collect(),
        }
    }
}

/// Highest weight over `candidates`; the first (smallest) id wins ties.
fn argmax(candidates: &[StateId], weight: impl Fn(StateId) -> f64) -> Option<(StateId, f64)> {
    let mut best: Option<(StateId, f64)> = None;
    for &g in candidates {
        let w = weight(g);
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((g, w));
        }
    }
    best
}

fn decide_among(
    eligible: &Eligible,
    queues: &QueueState,
    rates: &RateTable,
    config: &SchedulerConfig,
) -> Action {
    let source = argmax(&eligible.source, |g| source_weight(g, queues, rates));
    let relay = argmax(&eligible.relay, |g| relay_weight(g, queues, rates));
    let relay_w = relay.map_or(0.0, |(_, w)| w);

    if let Some((g, w)) = source {
        if w > 0.0 && w >= relay_w {
            let r = rates.rate(g);
            let q = queues.source_backlog();
            if q < r && config.padding == Padding::Strict {
                return Action::Idle;
            }
            return Action::SourceTransmit { g, bits: q.min(r) };
        }
    }
    match relay {
        Some((g, w)) if w > 0.0 => Action::RelayTransmit {
            g,
            bits: queues.head(0, g).map_or(0.0, |p| p.payload),
        },
        // All source weights are non-positive and every eligible relay queue is empty.
        _ => Action::Idle,
    }
}

/// One back-pressure decision for realized state `f`, with padded packets.
///
/// Panics if `f` uses a gain outside the rate table's alphabet.
pub fn backpressure_decide(f: &FadingState, queues: &QueueState, rates: &RateTable) -> Action {
    let id = rates
        .id_of(f)
        .unwrap_or_else(|| panic!("state {f} is not in the rate table"));
    decide_among(
        &Eligible::for_state(id, rates),
        queues,
        rates,
        &SchedulerConfig::default(),
    )
}

/// Executes `action` and returns the real bits delivered to the destination.
///
/// Panics on a relay transmission from an empty queue.
pub fn apply_action(queues: &mut QueueState, action: &Action, rates: &RateTable) -> f64 {
    match *action {
        Action::SourceTransmit { g, .. } => {
            let bits = queues.source_backlog.min(rates.rate(g));
            queues.source_backlog -= bits;
            let born = queues.slot;
            queues.push_pair(Packet {
                g,
                payload: bits,
                born,
            });
            0.0
        }
        Action::RelayTransmit { g, .. } => {
            let packet = queues.pop_pair(g);
            assert!(
                packet.is_some(),
                "relay transmission from empty queue {g:?}"
            );
            packet.map_or(0.0, |p| p.payload)
        }
        Action::Idle => 0.0,
    }
}

/// Back-pressure controller with a per-state eligibility cache.
#[derive(Debug, Clone, Default)]
pub struct Scheduler {
    config: SchedulerConfig,
    eligible: HashMap<StateId, Eligible>,
}

impl Scheduler {
    pub fn new(config: SchedulerConfig) -> Self {
        Self {
            config,
            eligible: HashMap::new(),
        }
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.config
    }

    pub fn decide(&mut self, f: StateId, queues: &QueueState, rates: &RateTable) -> Action {
        let eligible = self
            .eligible
            .entry(f)
            .or_insert_with(|| Eligible::for_state(f, rates));
        decide_among(eligible, queues, rates, &self.config)
    }

    /// Decides and applies one block for realized state `f`; returns the
    /// action and the bits delivered.
    pub fn step(
        &mut self,
        f: StateId,
        queues: &mut QueueState,
        rates: &RateTable,
    ) -> (Action, f64) {
        let action = self.decide(f, queues, rates);
        #[cfg(debug_assertions)]
        {
            let a = rates.alphabet();
            let (fs, gs) = (a.state(f), action.packet_state().map(|g| a.state(g)));
            match action {
                Action::SourceTransmit { .. } => {
                    debug_assert!(crate::region::membership_is(&fs, &gs.unwrap()))
                }
                Action::RelayTransmit { .. } => {
                    debug_assert!(crate::region::membership_id(&fs, &gs.unwrap()))
                }
                Action::Idle => {}
            }
        }
        let delivered = apply_action(queues, &action, rates);
        (action, delivered)
    }
}
