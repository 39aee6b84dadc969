//! Trajectory simulation and empirical stability classification.
//!
//! A trajectory draws one fading state per block from the scenario's
//! distribution, adds the block's arrivals to the source backlog and lets the
//! [`Scheduler`] act. The total nominal backlog is sampled at regular
//! checkpoints; a queue is called stable when the least-squares slope over the
//! second half of those samples stays small relative to the arrival rate and
//! the destination receives nearly all offered bits.

use std::io;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{build_rate_table, Alphabet, ChannelError, FadingState, RateTable, StateId};
use crate::numfmt::sig12;
use crate::region::{
    figure2_async_rate, solve_region_minform, synchronous_baseline, RegionError, Scenario,
    ScenarioError,
};
use crate::scheduler::{lyapunov_value, Action, QueueState, Scheduler, SchedulerConfig};

/// Shortest horizon for which a verdict is given.
pub const MIN_HORIZON: u64 = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("arrival rate must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error("arrival bound {bound} is below the mean {lambda}")]
    BoundBelowMean { lambda: f64, bound: f64 },
    #[error("lambda grid must be sorted ascending")]
    UnsortedGrid,
    #[error("state {0} is not in the rate table")]
    UnknownState(FadingState),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalKind {
    /// Exactly `lambda` bits every block.
    Constant,
    /// `bound` bits with probability `lambda / bound`, else nothing.
    #[default]
    BernoulliBatch,
    /// Uniform on `[lambda - w, lambda + w]` with `w = min(lambda, bound - lambda)`.
    Uniform,
}

/// I.i.d. per-block arrival process with mean `lambda` bits and bounded support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSpec {
    pub kind: ArrivalKind,
    pub lambda: f64,
    /// Largest arrival in one block; defaults to `2 lambda`.
    pub bound: Option<f64>,
}

impl ArrivalSpec {
    pub fn new(kind: ArrivalKind, lambda: f64, bound: Option<f64>) -> Result<Self, SimError> {
        let spec = Self {
            kind,
            lambda,
            bound,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn bernoulli(lambda: f64) -> Self {
        Self {
            kind: ArrivalKind::BernoulliBatch,
            lambda,
            bound: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(SimError::InvalidLambda(self.lambda));
        }
        if let Some(bound) = self.bound {
            if !(bound >= self.lambda) {
                return Err(SimError::BoundBelowMean {
                    lambda: self.lambda,
                    bound,
                });
            }
        }
        Ok(())
    }

    pub fn bound(&self) -> f64 {
        self.bound.unwrap_or(2.0 * self.lambda)
    }

    /// Same process shape with a different mean.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            bound: None,
            ..*self
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        match self.kind {
            ArrivalKind::Constant => self.lambda,
            ArrivalKind::BernoulliBatch => {
                let batch = self.bound();
                if rng.gen_bool((self.lambda / batch).min(1.0)) {
                    batch
                } else {
                    0.0
                }
            }
            ArrivalKind::Uniform => {
                let w = self.lambda.min(self.bound() - self.lambda);
                if w <= 0.0 {
                    self.lambda
                } else {
                    rng.gen_range(self.lambda - w..=self.lambda + w)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Number of backlog samples over the horizon.
    pub checkpoints: usize,
    pub scheduler: SchedulerConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            checkpoints: 1000,
            scheduler: SchedulerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Number of blocks completed.
    pub slot: u64,
    /// `q_s + sum_{n,g} r_g q_n[g]`.
    pub backlog: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub horizon: u64,
    pub seed: u64,
    pub arrived_bits: f64,
    pub delivered_bits: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub source_transmissions: u64,
    pub relay_transmissions: u64,
}

impl TrajectoryStats {
    pub fn delivered_rate(&self) -> f64 {
        if self.horizon == 0 {
            0.0
        } else {
            self.delivered_bits / self.horizon as f64
        }
    }

    /// Least-squares slope of the backlog over the second half of the checkpoints.
    pub fn backlog_slope(&self) -> f64 {
        let tail = &self.checkpoints[self.checkpoints.len() / 2..];
        least_squares_slope(tail.iter().map(|c| (c.slot as f64, c.backlog)))
    }
}

fn least_squares_slope(points: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let n = points.clone().count() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let (sx, sy) = points
        .clone()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Everything that happened in one block, handed to trajectory observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotEvent {
    pub slot: u64,
    pub state: StateId,
    pub arrival: f64,
    pub action: Action,
    pub delivered: f64,
}

/// Independent, reproducible RNG streams for one trajectory.
pub struct Streams {
    pub fading: ChaCha8Rng,
    pub arrivals: ChaCha8Rng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        let mut fading = ChaCha8Rng::seed_from_u64(seed);
        fading.set_stream(1);
        let mut arrivals = ChaCha8Rng::seed_from_u64(seed);
        arrivals.set_stream(2);
        Self { fading, arrivals }
    }
}

/// Draws i.i.d. fading states from the scenario's distribution.
pub struct FadingSampler {
    states: Vec<StateId>,
    index: WeightedIndex<f64>,
}

impl FadingSampler {
    pub fn new(scenario: &Scenario, rates: &RateTable) -> Result<Self, SimError> {
        let states = scenario
            .support()
            .iter()
            .map(|(f, _)| rates.id_of(f).ok_or(SimError::UnknownState(*f)))
            .collect::<Result<Vec<_>, _>>()?;
        let index = WeightedIndex::new(scenario.support().iter().map(|(_, p)| *p))
            .expect("validated scenario has positive weights");
        Ok(Self { states, index })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StateId {
        self.states[self.index.sample(rng)]
    }
}

pub fn run_trajectory(
    scenario: &Scenario,
    rates: &RateTable,
    arrival: &ArrivalSpec,
    horizon: u64,
    seed: u64,
) -> Result<TrajectoryStats, SimError> {
    run_trajectory_with(
        scenario,
        rates,
        arrival,
        horizon,
        seed,
        &SimConfig::default(),
        |_, _| {},
    )
}

pub fn run_trajectory_with(
    scenario: &Scenario,
    rates: &RateTable,
    arrival: &ArrivalSpec,
    horizon: u64,
    seed: u64,
    config: &SimConfig,
    observer: impl FnMut(&SlotEvent, &QueueState),
) -> Result<TrajectoryStats, SimError> {
    let sampler = FadingSampler::new(scenario, rates)?;
    simulate(
        rates,
        arrival,
        horizon,
        seed,
        config,
        |_, rng| sampler.sample(rng),
        observer,
    )
}

/// Core loop. The scheduler only ever sees the state returned by `fading`
/// for the current block.
pub fn simulate(
    rates: &RateTable,
    arrival: &ArrivalSpec,
    horizon: u64,
    seed: u64,
    config: &SimConfig,
    mut fading: impl FnMut(u64, &mut ChaCha8Rng) -> StateId,
    mut observer: impl FnMut(&SlotEvent, &QueueState),
) -> Result<TrajectoryStats, SimError> {
    arrival.validate()?;
    let mut streams = Streams::new(seed);
    let mut scheduler = Scheduler::new(config.scheduler);
    let mut queues = QueueState::new();
    let cadence = (horizon / config.checkpoints.max(1) as u64).max(1);

    let mut stats = TrajectoryStats {
        horizon,
        seed,
        arrived_bits: 0.0,
        delivered_bits: 0.0,
        checkpoints: Vec::with_capacity(config.checkpoints),
        source_transmissions: 0,
        relay_transmissions: 0,
    };
    for slot in 0..horizon {
        let f = fading(slot, &mut streams.fading);
        let a = arrival.sample(&mut streams.arrivals);
        queues.arrive(a);
        stats.arrived_bits += a;
        let (action, delivered) = scheduler.step(f, &mut queues, rates);
        stats.delivered_bits += delivered;
        match action {
            Action::SourceTransmit { .. } => stats.source_transmissions += 1,
            Action::RelayTransmit { .. } => stats.relay_transmissions += 1,
            Action::Idle => {}
        }
        observer(
            &SlotEvent {
                slot,
                state: f,
                arrival: a,
                action,
                delivered,
            },
            &queues,
        );
        queues.advance_slot();
        if (slot + 1) % cadence == 0 {
            let backlog = queues.weighted_backlog(rates);
            stats.checkpoints.push(Checkpoint {
                slot: slot + 1,
                backlog,
            });
            log::trace!(
                "slot {}: backlog {backlog}, V = {}",
                slot + 1,
                lyapunov_value(&queues, rates)
            );
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    /// Backlog growth in bits per block.
    pub slope: f64,
    pub delivered_rate: f64,
}

impl StabilityVerdict {
    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    /// Stable requires slope below this fraction of lambda.
    pub slope_fraction: f64,
    /// Stable requires a delivered rate of at least this fraction of lambda.
    pub delivery_fraction: f64,
    pub min_horizon: u64,
    pub min_checkpoints: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            slope_fraction: 0.05,
            delivery_fraction: 0.95,
            min_horizon: MIN_HORIZON,
            min_checkpoints: 8,
        }
    }
}

pub fn classify_stability(stats: &TrajectoryStats, lambda: f64) -> StabilityVerdict {
    classify_stability_with(stats, lambda, &ClassifierConfig::default())
}

pub fn classify_stability_with(
    stats: &TrajectoryStats,
    lambda: f64,
    cfg: &ClassifierConfig,
) -> StabilityVerdict {
    let slope = stats.backlog_slope();
    let delivered_rate = stats.delivered_rate();
    let verdict =
        if stats.horizon < cfg.min_horizon || stats.checkpoints.len() < cfg.min_checkpoints {
            Verdict::Inconclusive
        } else {
            // With no arrivals the only stable outcome is a backlog that does not grow.
            let slope_ok = if lambda > 0.0 {
                slope < cfg.slope_fraction * lambda
            } else {
                slope <= 0.0
            };
            if slope_ok && delivered_rate >= cfg.delivery_fraction * lambda {
                Verdict::Stable
            } else {
                Verdict::Unstable
            }
        };
    StabilityVerdict {
        verdict,
        slope,
        delivered_rate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub seed: u64,
    pub verdict: StabilityVerdict,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Majority verdict per lambda, in grid order.
    pub majority: Vec<(f64, Verdict)>,
}

/// Runs every `(lambda, seed)` pair (in parallel) and takes a majority vote
/// per lambda. Ties and inconclusive majorities give `Inconclusive`.
pub fn sweep_lambda(
    scenario: &Scenario,
    rates: &RateTable,
    arrival: &ArrivalSpec,
    grid: &[f64],
    horizon: u64,
    seeds: &[u64],
    config: &SimConfig,
) -> Result<SweepTable, SimError> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(SimError::UnsortedGrid);
    }
    let jobs: Vec<(f64, u64)> = grid
        .iter()
        .flat_map(|&l| seeds.iter().map(move |&s| (l, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(lambda, seed)| {
            let spec = arrival.with_lambda(lambda);
            let stats =
                run_trajectory_with(scenario, rates, &spec, horizon, seed, config, |_, _| {})?;
            Ok(SweepRow {
                lambda,
                seed,
                verdict: classify_stability(&stats, lambda),
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    let majority = grid
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let votes = &rows[i * seeds.len()..(i + 1) * seeds.len()];
            let count = |v| votes.iter().filter(|r| r.verdict.verdict == v).count();
            let (stable, unstable) = (count(Verdict::Stable), count(Verdict::Unstable));
            let verdict = if 2 * stable > votes.len() {
                Verdict::Stable
            } else if 2 * unstable > votes.len() {
                Verdict::Unstable
            } else {
                Verdict::Inconclusive
            };
            (lambda, verdict)
        })
        .collect();
    Ok(SweepTable { rows, majority })
}

impl SweepTable {
    /// CSV with columns `lambda,seed,slope,delivered,verdict`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "seed", "slope", "delivered", "verdict"])?;
        for r in &self.rows {
            w.write_record([
                sig12(r.lambda),
                r.seed.to_string(),
                sig12(r.verdict.slope),
                sig12(r.verdict.delivered_rate),
                r.verdict.verdict.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure2Row {
    pub gamma: f64,
    pub r_sync: f64,
    pub r_async: f64,
    pub r_max_lp: f64,
}

/// Buffered versus unbuffered AF rates of the outage example over `gammas`.
pub fn figure2(gammas: &[f64]) -> Result<Vec<Figure2Row>, SimError> {
    let rates = build_rate_table(&Alphabet::new([0.0, 1.0, 10.0])?, 1.0)?;
    gammas
        .iter()
        .map(|&gamma| {
            let scenario = Scenario::figure2(gamma)?;
            Ok(Figure2Row {
                gamma,
                r_sync: synchronous_baseline(&scenario, &rates)?,
                r_async: figure2_async_rate(gamma),
                r_max_lp: solve_region_minform(&scenario, &rates)?.r_max,
            })
        })
        .collect()
}

/// CSV with columns `gamma,r_sync,r_async,r_max_lp`.
pub fn write_figure2_csv<W: io::Write>(rows: &[Figure2Row], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["gamma", "r_sync", "r_async", "r_max_lp"])?;
    for r in rows {
        w.write_record([
            sig12(r.gamma),
            sig12(r.r_sync),
            sig12(r.r_async),
            sig12(r.r_max_lp),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-block trajectory log writer: `slot,f,action,g,bits,q_s,backlog,lyapunov`.
pub struct TrajectoryLog<W: io::Write> {
    writer: csv::Writer<W>,
    error: Option<csv::Error>,
}

impl<W: io::Write> TrajectoryLog<W> {
    pub fn new(out: W) -> csv::Result<Self> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record([
            "slot", "f", "action", "g", "bits", "q_s", "backlog", "lyapunov",
        ])?;
        Ok(Self {
            writer,
            error: None,
        })
    }

    pub fn record(&mut self, event: &SlotEvent, queues: &QueueState, rates: &RateTable) {
        if self.error.is_some() {
            return;
        }
        let a = rates.alphabet();
        let g = event
            .action
            .packet_state()
            .map_or(String::new(), |g| a.state(g).to_string());
        let res = self.writer.write_record([
            event.slot.to_string(),
            a.state(event.state).to_string(),
            event.action.label().to_string(),
            g,
            sig12(event.action.bits()),
            sig12(queues.source_backlog()),
            sig12(queues.weighted_backlog(rates)),
            sig12(lyapunov_value(queues, rates)),
        ]);
        if let Err(e) = res {
            self.error = Some(e);
        }
    }

    pub fn finish(mut self) -> csv::Result<()> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.writer.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2(gamma: f64) -> (Scenario, RateTable) {
        let rates = build_rate_table(&Alphabet::new([0.0, 1.0, 10.0]).unwrap(), 1.0).unwrap();
        (Scenario::figure2(gamma).unwrap(), rates)
    }

    fn stats_with(slope: f64, delivered: f64) -> TrajectoryStats {
        let horizon = 100_000;
        TrajectoryStats {
            horizon,
            seed: 0,
            arrived_bits: 0.0,
            delivered_bits: delivered * horizon as f64,
            checkpoints: (1..=100)
                .map(|k| Checkpoint {
                    slot: k * 1000,
                    backlog: 5.0 + slope * (k * 1000) as f64,
                })
                .collect(),
            source_transmissions: 0,
            relay_transmissions: 0,
        }
    }

    #[test]
    fn arrival_means_are_exact() {
        let spec = ArrivalSpec::bernoulli(0.3);
        assert_eq!(spec.bound(), 0.6);
        let u = ArrivalSpec::new(ArrivalKind::Uniform, 0.3, Some(0.45)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        for spec in [
            spec,
            u,
            ArrivalSpec::new(ArrivalKind::Constant, 0.3, None).unwrap(),
        ] {
            let mean: f64 = (0..n).map(|_| spec.sample(&mut rng)).sum::<f64>() / n as f64;
            assert!((mean - 0.3).abs() < 0.005, "{spec:?}: {mean}");
            let max = (0..1000).map(|_| spec.sample(&mut rng)).fold(0.0, f64::max);
            assert!(max <= spec.bound() + 1e-12);
        }
        assert_eq!(
            ArrivalSpec::new(ArrivalKind::Uniform, 0.3, Some(0.2)),
            Err(SimError::BoundBelowMean {
                lambda: 0.3,
                bound: 0.2
            })
        );
        assert_eq!(
            ArrivalSpec::new(ArrivalKind::Constant, -1.0, None),
            Err(SimError::InvalidLambda(-1.0))
        );
    }

    #[test]
    fn no_arrivals_means_empty_network() {
        let (s, t) = fig2(0.5);
        let stats = run_trajectory(&s, &t, &ArrivalSpec::bernoulli(0.0), 20_000, 3).unwrap();
        assert_eq!(stats.delivered_bits, 0.0);
        assert!(stats.checkpoints.iter().all(|c| c.backlog == 0.0));
        assert!(classify_stability(&stats, 0.0).is_stable());
    }

    #[test]
    fn permanently_dark_network_grows_at_lambda() {
        let (s, t) = fig2(1.0);
        let stats = run_trajectory(
            &s,
            &t,
            &ArrivalSpec::new(ArrivalKind::Constant, 0.2, None).unwrap(),
            20_000,
            1,
        )
        .unwrap();
        assert!((stats.backlog_slope() - 0.2).abs() < 1e-9);
        assert_eq!(classify_stability(&stats, 0.2).verdict, Verdict::Unstable);
    }

    #[test]
    fn classifier_examples() {
        assert_eq!(
            classify_stability(&stats_with(0.0, 0.25), 0.25).verdict,
            Verdict::Stable
        );
        assert_eq!(
            classify_stability(&stats_with(0.25, 0.0), 0.25).verdict,
            Verdict::Unstable
        );
        // Served but the backlog still creeps upwards.
        assert_eq!(
            classify_stability(&stats_with(0.02, 0.24), 0.25).verdict,
            Verdict::Unstable
        );
        let mut short = stats_with(0.0, 0.25);
        short.horizon = 5_000;
        assert_eq!(
            classify_stability(&short, 0.25).verdict,
            Verdict::Inconclusive
        );
    }

    #[test]
    fn least_squares_recovers_a_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        assert!((least_squares_slope(pts.iter().copied()) + 0.5).abs() < 1e-12);
        assert_eq!(least_squares_slope(std::iter::once((1.0, 1.0))), 0.0);
    }

    #[test]
    fn trajectories_are_reproducible() {
        let (s, t) = fig2(0.5);
        let spec = ArrivalSpec::bernoulli(0.2);
        let a = run_trajectory(&s, &t, &spec, 20_000, 7).unwrap();
        let b = run_trajectory(&s, &t, &spec, 20_000, 7).unwrap();
        assert_eq!(a, b);
        let c = run_trajectory(&s, &t, &spec, 20_000, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sweep_requires_sorted_grid_and_handles_empty() {
        let (s, t) = fig2(0.5);
        let spec = ArrivalSpec::bernoulli(0.1);
        let cfg = SimConfig::default();
        assert_eq!(
            sweep_lambda(&s, &t, &spec, &[0.2, 0.1], 10_000, &[1], &cfg),
            Err(SimError::UnsortedGrid)
        );
        let empty = sweep_lambda(&s, &t, &spec, &[], 10_000, &[1, 2], &cfg).unwrap();
        assert!(empty.rows.is_empty() && empty.majority.is_empty());
    }

    #[test]
    fn figure2_endpoints() {
        let rows = figure2(&[0.0, 1.0]).unwrap();
        let c = 0.5 * (31.0f64 / 11.0).log2();
        assert!((rows[0].r_sync - 0.5 * c).abs() < 1e-12);
        assert!((rows[0].r_async - 0.5 * c).abs() < 1e-12);
        assert!((rows[0].r_max_lp - 0.5 * c).abs() < 1e-8);
        assert_eq!(
            (rows[1].r_sync, rows[1].r_async, rows[1].r_max_lp),
            (0.0, 0.0, 0.0)
        );
        assert!(matches!(
            figure2(&[1.2]),
            Err(SimError::Scenario(ScenarioError::GammaOutOfRange(_)))
        ));
    }

    #[test]
    fn trajectory_log_has_one_row_per_slot() {
        let (s, t) = fig2(0.5);
        let mut buf = Vec::new();
        let mut log = TrajectoryLog::new(&mut buf).unwrap();
        run_trajectory_with(
            &s,
            &t,
            &ArrivalSpec::bernoulli(0.2),
            50,
            1,
            &SimConfig::default(),
            |e, q| log.record(e, q, &t),
        )
        .unwrap();
        log.finish().unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 51);
        assert!(text.starts_with("slot,f,action,g,bits,q_s,backlog,lyapunov"));
    }
}
