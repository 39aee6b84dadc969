//! Stability region of the relay network.
//!
//! A packet encoded for state `g` leaves the source in any block whose source
//! gains match `g` (the set `I_s`) and reaches the destination in any block
//! whose relay gains match `g` (the set `I_d`). Time-sharing fractions
//! `a[f][g]` (source sends a `g`-packet during state `f`) and `b[f][g]` (relays
//! forward a `g`-packet during state `f`) then define the rates that can be
//! carried. This module builds the linear programs over those fractions:
//!
//! * the min form maximizes `sum_g min(fill_g, drain_g)`,
//! * the balance form maximizes `sum_g fill_g` subject to `fill_g <= drain_g`,
//!
//! where `fill_g = sum_f pi_f a[f][g] r_g` and `drain_g = sum_f pi_f b[f][g] r_g`.
//! Both have the same optimum `r_max`, the largest stabilizable arrival rate.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{capacity, Alphabet, ChannelError, FadingState, RateTable, StateId};
use crate::lp::{LinearProgram, LpError, Relation, SimplexOptions};
use crate::numfmt::sig12;

/// Absolute slack allowed on the probability sum.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("scenario has no fading states")]
    EmptySupport,
    #[error("state {state} has non-positive probability {prob}")]
    NonPositiveProbability { state: FadingState, prob: f64 },
    #[error("state probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),
    #[error("state {state} uses gain {gain}, which is not in the alphabet")]
    GainNotInAlphabet { state: FadingState, gain: f64 },
    #[error("state {0} is listed more than once")]
    DuplicateState(FadingState),
    #[error("gamma must lie in [0, 1], got {0}")]
    GammaOutOfRange(f64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Error, PartialEq)]
pub enum RegionError {
    #[error("rate table has no entry for state {0}")]
    MissingRate(FadingState),
    #[error("target rate must be non-negative, got {0}")]
    NegativeRate(f64),
    #[error("time-sharing solver failed: {0}")]
    Solver(#[from] LpError),
}

/// Channel statistics and power budget of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    alphabet: Alphabet,
    support: Vec<(FadingState, f64)>,
    power: f64,
}

impl Scenario {
    pub fn new(
        alphabet: Alphabet,
        support: Vec<(FadingState, f64)>,
        power: f64,
    ) -> Result<Self, ScenarioError> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(ChannelError::InvalidPower(power).into());
        }
        if support.is_empty() {
            return Err(ScenarioError::EmptySupport);
        }
        for (i, (state, prob)) in support.iter().enumerate() {
            if !(*prob > 0.0) {
                return Err(ScenarioError::NonPositiveProbability {
                    state: *state,
                    prob: *prob,
                });
            }
            if let Some(&gain) = state.0.iter().find(|&&g| !alphabet.contains(g)) {
                return Err(ScenarioError::GainNotInAlphabet {
                    state: *state,
                    gain,
                });
            }
            if support[..i].iter().any(|(s, _)| s == state) {
                return Err(ScenarioError::DuplicateState(*state));
            }
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(ScenarioError::ProbabilitySum(total));
        }
        Ok(Self {
            alphabet,
            support,
            power,
        })
    }

    /// The four-state outage example: gains from `{0, 1, 10}`, unit power,
    /// each hop independently in outage with probability `gamma`.
    /// Zero-probability states are left out of the support.
    pub fn figure2(gamma: f64) -> Result<Self, ScenarioError> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(ScenarioError::GammaOutOfRange(gamma));
        }
        let up = 1.0 - gamma;
        let states = [
            (FadingState::new(0.0, 0.0, 0.0, 0.0), gamma * gamma),
            (FadingState::new(0.0, 0.0, 10.0, 10.0), gamma * up),
            (FadingState::new(1.0, 1.0, 0.0, 0.0), up * gamma),
            (FadingState::new(1.0, 1.0, 10.0, 10.0), up * up),
        ];
        let support = states.into_iter().filter(|(_, p)| *p > 0.0).collect();
        Self::new(Alphabet::new([0.0, 1.0, 10.0])?, support, 1.0)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn support(&self) -> &[(FadingState, f64)] {
        &self.support
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Same states with new probabilities (re-validated).
    pub fn with_probabilities(&self, probs: &[f64]) -> Result<Self, ScenarioError> {
        let support = self
            .support
            .iter()
            .zip(probs)
            .map(|((s, _), &p)| (*s, p))
            .collect();
        Self::new(self.alphabet.clone(), support, self.power)
    }
}

/// `(f, g)` is in `I_s`: a `g`-packet can leave the source during state `f`.
pub fn membership_is(f: &FadingState, g: &FadingState) -> bool {
    f.source_gains() == g.source_gains()
}

/// `(f, g)` is in `I_d`: a `g`-packet can reach the destination during state `f`.
pub fn membership_id(f: &FadingState, g: &FadingState) -> bool {
    f.relay_gains() == g.relay_gains()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Share {
    pub f: FadingState,
    pub g: FadingState,
    pub fraction: f64,
}

/// Non-zero time-sharing fractions; anything not listed is zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSharing {
    /// `a[f][g]`: source broadcasts a `g`-packet while in state `f`.
    pub source: Vec<Share>,
    /// `b[f][g]`: relays forward a `g`-packet while in state `f`.
    pub relay: Vec<Share>,
}

/// Bits per block entering and leaving the relay queues of state `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueFlow {
    pub g: FadingState,
    pub rate: f64,
    pub fill: f64,
    pub drain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSolution {
    pub r_max: f64,
    pub sharing: TimeSharing,
    pub flows: Vec<QueueFlow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Epigraph rewrite of `max sum_g min(fill_g, drain_g)`.
    MinForm,
    /// `max sum_g fill_g` subject to `fill_g <= drain_g`.
    BalanceForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionOptions {
    pub tolerance: f64,
}

impl Default for RegionOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9 }
    }
}

impl RegionOptions {
    fn simplex(&self) -> SimplexOptions {
        SimplexOptions {
            tolerance: self.tolerance,
            ..SimplexOptions::default()
        }
    }
}

/// Index bookkeeping for the reduced program: support states `f` times
/// productive packet states `g` (positive rate, reachable from both ends).
struct Layout {
    probs: Vec<f64>,
    states: Vec<FadingState>,
    packets: Vec<(FadingState, f64)>,
    /// `(f index, g index)` of each source variable.
    a: Vec<(usize, usize)>,
    /// `(f index, g index)` of each relay variable.
    b: Vec<(usize, usize)>,
}

impl Layout {
    fn new(scenario: &Scenario, rates: &RateTable) -> Result<Self, RegionError> {
        let states: Vec<FadingState> = scenario.support.iter().map(|(s, _)| *s).collect();
        let probs: Vec<f64> = scenario.support.iter().map(|(_, p)| *p).collect();

        let mut candidates: Vec<(StateId, FadingState)> = Vec::new();
        for f in &states {
            for h in &states {
                let [s1, s2] = f.source_gains();
                let [d1, d2] = h.relay_gains();
                let g = FadingState::new(s1, s2, d1, d2);
                let id = rates.id_of(&g).ok_or(RegionError::MissingRate(g))?;
                candidates.push((id, g));
            }
        }
        candidates.sort_by_key(|(id, _)| *id);
        candidates.dedup_by_key(|(id, _)| *id);
        let packets: Vec<(FadingState, f64)> = candidates
            .into_iter()
            .map(|(id, g)| (g, rates.rate(id)))
            .filter(|(_, r)| *r > 0.0)
            .collect();

        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, f) in states.iter().enumerate() {
            for (j, (g, _)) in packets.iter().enumerate() {
                if membership_is(f, g) {
                    a.push((i, j));
                }
                if membership_id(f, g) {
                    b.push((i, j));
                }
            }
        }
        Ok(Self {
            probs,
            states,
            packets,
            a,
            b,
        })
    }

    fn num_fractions(&self) -> usize {
        self.a.len() + self.b.len()
    }

    /// Row with `pi_f * scale(g)` on the source variables of packet `j` and
    /// `-pi_f * scale(g)` on its relay variables, padded to `width`.
    fn balance_row(&self, j: usize, scale: f64, width: usize) -> Vec<f64> {
        let mut row = vec![0.0; width];
        for (k, &(i, jj)) in self.a.iter().enumerate() {
            if jj == j {
                row[k] = self.probs[i] * scale;
            }
        }
        for (k, &(i, jj)) in self.b.iter().enumerate() {
            if jj == j {
                row[self.a.len() + k] = -self.probs[i] * scale;
            }
        }
        row
    }

    fn add_time_budget(&self, lp: &mut LinearProgram, width: usize) -> Result<(), LpError> {
        for i in 0..self.states.len() {
            let mut row = vec![0.0; width];
            for (k, &(fi, _)) in self.a.iter().enumerate() {
                if fi == i {
                    row[k] = 1.0;
                }
            }
            for (k, &(fi, _)) in self.b.iter().enumerate() {
                if fi == i {
                    row[self.a.len() + k] = 1.0;
                }
            }
            if row.iter().any(|&v| v != 0.0) {
                lp.add(row, Relation::Le, 1.0)?;
            }
        }
        Ok(())
    }

    fn sharing(&self, x: &[f64]) -> TimeSharing {
        let pick = |vars: &[(usize, usize)], offset: usize| {
            vars.iter()
                .enumerate()
                .filter(|(k, _)| x[offset + k] > 0.0)
                .map(|(k, &(i, j))| Share {
                    f: self.states[i],
                    g: self.packets[j].0,
                    fraction: x[offset + k],
                })
                .collect()
        };
        TimeSharing {
            source: pick(&self.a, 0),
            relay: pick(&self.b, self.a.len()),
        }
    }
}

pub fn solve_region_minform(
    scenario: &Scenario,
    rates: &RateTable,
) -> Result<RegionSolution, RegionError> {
    solve_region(
        scenario,
        rates,
        Formulation::MinForm,
        &RegionOptions::default(),
    )
}

pub fn solve_region_eqform(
    scenario: &Scenario,
    rates: &RateTable,
) -> Result<RegionSolution, RegionError> {
    solve_region(
        scenario,
        rates,
        Formulation::BalanceForm,
        &RegionOptions::default(),
    )
}

/// Maximum supportable rate and a time-sharing that achieves it.
///
/// The returned sharing is balanced (every queue's fill equals its drain), so
/// `r_max` is exactly the total source rate it induces.
pub fn solve_region(
    scenario: &Scenario,
    rates: &RateTable,
    form: Formulation,
    opts: &RegionOptions,
) -> Result<RegionSolution, RegionError> {
    let layout = Layout::new(scenario, rates)?;
    let nf = layout.num_fractions();
    let np = layout.packets.len();

    if nf == 0 {
        return Ok(balanced_solution(&layout, Vec::new(), 0.0, opts));
    }
    let lp = match form {
        Formulation::MinForm => {
            // Variables: fractions, then one epigraph variable per packet state.
            let width = nf + np;
            let mut objective = vec![0.0; width];
            objective[nf..].iter_mut().for_each(|c| *c = 1.0);
            let mut lp = LinearProgram::maximize(objective);
            for (j, &(_, r)) in layout.packets.iter().enumerate() {
                // t_j <= fill_j and t_j <= drain_j
                let mut fill = vec![0.0; width];
                let mut drain = vec![0.0; width];
                let row = layout.balance_row(j, r, width);
                for k in 0..layout.a.len() {
                    fill[k] = -row[k];
                }
                drain[layout.a.len()..nf].copy_from_slice(&row[layout.a.len()..nf]);
                fill[nf + j] = 1.0;
                drain[nf + j] = 1.0;
                lp.add(fill, Relation::Le, 0.0)?;
                lp.add(drain, Relation::Le, 0.0)?;
            }
            layout.add_time_budget(&mut lp, width)?;
            lp
        }
        Formulation::BalanceForm => {
            let mut objective = vec![0.0; nf];
            for (k, &(i, j)) in layout.a.iter().enumerate() {
                objective[k] = layout.probs[i] * layout.packets[j].1;
            }
            let mut lp = LinearProgram::maximize(objective);
            for (j, &(_, r)) in layout.packets.iter().enumerate() {
                lp.add(layout.balance_row(j, r, nf), Relation::Le, 0.0)?;
            }
            layout.add_time_budget(&mut lp, nf)?;
            lp
        }
    };
    let sol = lp.solve_with(&opts.simplex())?;
    log::debug!(
        "{form:?}: objective {} after {} pivots",
        sol.objective,
        sol.pivots
    );
    let mut x = sol.x;
    x.truncate(nf);
    Ok(balanced_solution(&layout, x, sol.objective, opts))
}

/// Scales each packet state's source and relay fractions down so that fill and
/// drain both equal their minimum.
fn balanced_solution(
    layout: &Layout,
    mut x: Vec<f64>,
    lp_objective: f64,
    opts: &RegionOptions,
) -> RegionSolution {
    let na = layout.a.len();
    let mut fill = vec![0.0; layout.packets.len()];
    let mut drain = vec![0.0; layout.packets.len()];
    for (k, &(i, j)) in layout.a.iter().enumerate() {
        fill[j] += layout.probs[i] * x[k] * layout.packets[j].1;
    }
    for (k, &(i, j)) in layout.b.iter().enumerate() {
        drain[j] += layout.probs[i] * x[na + k] * layout.packets[j].1;
    }
    let mut flows = Vec::with_capacity(layout.packets.len());
    for (j, &(g, rate)) in layout.packets.iter().enumerate() {
        let m = fill[j].min(drain[j]);
        let theta = if fill[j] > 0.0 { m / fill[j] } else { 0.0 };
        let eta = if drain[j] > 0.0 { m / drain[j] } else { 0.0 };
        for (k, &(_, jj)) in layout.a.iter().enumerate() {
            if jj == j {
                x[k] *= theta;
            }
        }
        for (k, &(_, jj)) in layout.b.iter().enumerate() {
            if jj == j {
                x[na + k] *= eta;
            }
        }
        flows.push(QueueFlow {
            g,
            rate,
            fill: m,
            drain: m,
        });
    }
    let r_max: f64 = flows.iter().map(|q| q.fill).sum();
    if (r_max - lp_objective).abs() > 10.0 * opts.tolerance {
        log::warn!("balanced rate {r_max} differs from program optimum {lp_objective}");
    }
    RegionSolution {
        r_max,
        sharing: layout.sharing(&x),
        flows,
    }
}

/// Whether `r` satisfies the flow-conservation conditions for some
/// time-sharing; returns a witness when it does.
pub fn is_supportable(
    scenario: &Scenario,
    rates: &RateTable,
    r: f64,
) -> Result<Option<TimeSharing>, RegionError> {
    is_supportable_with(scenario, rates, r, &RegionOptions::default())
}

pub fn is_supportable_with(
    scenario: &Scenario,
    rates: &RateTable,
    r: f64,
    opts: &RegionOptions,
) -> Result<Option<TimeSharing>, RegionError> {
    if !(r >= 0.0) {
        return Err(RegionError::NegativeRate(r));
    }
    if r == 0.0 {
        return Ok(Some(TimeSharing::default()));
    }
    let layout = Layout::new(scenario, rates)?;
    let nf = layout.num_fractions();
    if nf == 0 {
        return Ok(None);
    }
    let mut lp = LinearProgram::maximize(vec![0.0; nf]);
    let mut total = vec![0.0; nf];
    for (k, &(i, j)) in layout.a.iter().enumerate() {
        total[k] = layout.probs[i] * layout.packets[j].1;
    }
    lp.add(total, Relation::Eq, r)?;
    for j in 0..layout.packets.len() {
        lp.add(layout.balance_row(j, 1.0, nf), Relation::Eq, 0.0)?;
    }
    layout.add_time_budget(&mut lp, nf)?;
    match lp.solve_with(&opts.simplex()) {
        Ok(sol) => Ok(Some(layout.sharing(&sol.x))),
        Err(LpError::Infeasible(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

impl TimeSharing {
    /// Largest violation of the flow-conservation conditions for carrying rate
    /// `r`: total source rate equals `r`, each packet state's fill equals its
    /// drain in packets, per-state fractions sum to at most one, and every
    /// fraction is non-negative and respects `I_s` / `I_d`.
    pub fn violation(
        &self,
        scenario: &Scenario,
        rates: &RateTable,
        r: f64,
    ) -> Result<f64, RegionError> {
        let prob = |f: &FadingState| {
            scenario
                .support
                .iter()
                .find(|(s, _)| s == f)
                .map_or(0.0, |(_, p)| *p)
        };
        let rate = |g: &FadingState| rates.rate_of(g).ok_or(RegionError::MissingRate(*g));

        let mut worst: f64 = 0.0;
        let mut carried = 0.0;
        let mut packets: Vec<(FadingState, f64)> = Vec::new();
        let mut bump = |g: FadingState, v: f64| match packets.iter_mut().find(|(h, _)| *h == g) {
            Some((_, acc)) => *acc += v,
            None => packets.push((g, v)),
        };
        for s in &self.source {
            if !membership_is(&s.f, &s.g) {
                worst = worst.max(s.fraction.abs());
            }
            worst = worst.max(-s.fraction);
            carried += prob(&s.f) * s.fraction * rate(&s.g)?;
            bump(s.g, prob(&s.f) * s.fraction);
        }
        for s in &self.relay {
            if !membership_id(&s.f, &s.g) {
                worst = worst.max(s.fraction.abs());
            }
            worst = worst.max(-s.fraction);
            bump(s.g, -prob(&s.f) * s.fraction);
        }
        worst = worst.max((carried - r).abs());
        for (_, net) in packets {
            worst = worst.max(net.abs());
        }
        for (f, _) in &scenario.support {
            let used: f64 = self
                .source
                .iter()
                .chain(&self.relay)
                .filter(|s| s.f == *f)
                .map(|s| s.fraction)
                .sum();
            worst = worst.max(used - 1.0);
        }
        Ok(worst)
    }
}

/// Rate of conventional AF without buffering: each state is used end to end,
/// half of the block to receive and half to forward.
pub fn synchronous_baseline(scenario: &Scenario, rates: &RateTable) -> Result<f64, RegionError> {
    scenario.support.iter().try_fold(0.0, |acc, (f, p)| {
        let r = rates.rate_of(f).ok_or(RegionError::MissingRate(*f))?;
        Ok(acc + 0.5 * p * r)
    })
}

/// Closed-form buffered rate of the outage example, `(0.5 up^2 + gamma up) C(20/11)`.
pub fn figure2_async_rate(gamma: f64) -> f64 {
    let up = 1.0 - gamma;
    (0.5 * up * up + gamma * up) * capacity(20.0 / 11.0).expect("positive snr")
}

/// Closed-form unbuffered rate of the outage example, `0.5 up^2 C(20/11)`.
pub fn figure2_sync_rate(gamma: f64) -> f64 {
    let up = 1.0 - gamma;
    0.5 * up * up * capacity(20.0 / 11.0).expect("positive snr")
}

impl RegionSolution {
    /// CSV: one `r_max` row, then one row per non-zero fraction.
    pub fn write_csv<W: io::Write>(&self, rates: &RateTable, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "f_id", "g_id", "f", "g", "value"])?;
        w.write_record(["r_max", "", "", "", "", &sig12(self.r_max)])?;
        let id = |s: &FadingState| rates.id_of(s).map_or(String::new(), |i| i.0.to_string());
        for (kind, shares) in [("a", &self.sharing.source), ("b", &self.sharing.relay)] {
            for s in shares {
                w.write_record([
                    kind,
                    &id(&s.f),
                    &id(&s.g),
                    &s.f.to_string(),
                    &s.g.to_string(),
                    &sig12(s.fraction),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_rate_table;

    fn c2011() -> f64 {
        0.5 * (31.0f64 / 11.0).log2()
    }

    fn table() -> RateTable {
        build_rate_table(&Alphabet::new([0.0, 1.0, 10.0]).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn membership_examples() {
        let f = FadingState::new(1.0, 1.0, 10.0, 10.0);
        assert!(membership_is(&f, &FadingState::new(1.0, 1.0, 0.0, 0.0)));
        assert!(membership_is(&f, &f));
        assert!(!membership_is(
            &FadingState::new(0.0, 1.0, 0.0, 0.0),
            &FadingState::new(1.0, 1.0, 0.0, 0.0)
        ));
        assert!(membership_id(
            &FadingState::new(0.0, 0.0, 10.0, 10.0),
            &FadingState::new(1.0, 1.0, 10.0, 10.0)
        ));
        assert!(membership_id(&f, &f));
        assert!(!membership_id(
            &FadingState::new(1.0, 1.0, 0.0, 10.0),
            &FadingState::new(1.0, 1.0, 10.0, 10.0)
        ));
    }

    #[test]
    fn scenario_validation() {
        let a = Alphabet::new([0.0, 1.0, 10.0]).unwrap();
        let s = FadingState::new(1.0, 1.0, 10.0, 10.0);
        assert_eq!(
            Scenario::new(a.clone(), vec![(s, 0.9)], 1.0),
            Err(ScenarioError::ProbabilitySum(0.9))
        );
        let bad = FadingState::new(7.0, 1.0, 10.0, 10.0);
        assert_eq!(
            Scenario::new(a.clone(), vec![(bad, 1.0)], 1.0),
            Err(ScenarioError::GainNotInAlphabet {
                state: bad,
                gain: 7.0
            })
        );
        assert_eq!(
            Scenario::new(a.clone(), vec![(s, 0.5), (s, 0.5)], 1.0),
            Err(ScenarioError::DuplicateState(s))
        );
        assert!(matches!(
            Scenario::new(a.clone(), vec![(s, 1.0), (bad, 0.0)], 1.0),
            Err(ScenarioError::NonPositiveProbability { .. })
        ));
        assert_eq!(
            Scenario::new(a, vec![], 1.0),
            Err(ScenarioError::EmptySupport)
        );
        assert_eq!(
            Scenario::figure2(1.5),
            Err(ScenarioError::GammaOutOfRange(1.5))
        );
        assert_eq!(Scenario::figure2(0.0).unwrap().support().len(), 1);
        assert_eq!(Scenario::figure2(0.5).unwrap().support().len(), 4);
    }

    #[test]
    fn figure2_half_outage() {
        let t = table();
        let s = Scenario::figure2(0.5).unwrap();
        let min = solve_region_minform(&s, &t).unwrap();
        let eq = solve_region_eqform(&s, &t).unwrap();
        assert!((min.r_max - 0.375 * c2011()).abs() < 1e-9, "{}", min.r_max);
        assert!((eq.r_max - 0.375 * c2011()).abs() < 1e-9, "{}", eq.r_max);
        assert!((min.r_max - 0.280_268_379_703_045_9).abs() < 1e-9);
        let base = synchronous_baseline(&s, &t).unwrap();
        assert!((base - 0.125 * c2011()).abs() < 1e-12);
    }

    #[test]
    fn single_state_splits_evenly() {
        let t = table();
        let s = Scenario::new(
            t.alphabet().clone(),
            vec![(FadingState::new(1.0, 1.0, 10.0, 10.0), 1.0)],
            1.0,
        )
        .unwrap();
        let sol = solve_region_minform(&s, &t).unwrap();
        assert!((sol.r_max - 0.5 * c2011()).abs() < 1e-9);
        assert!((synchronous_baseline(&s, &t).unwrap() - 0.5 * c2011()).abs() < 1e-12);
        let eq = solve_region_eqform(&Scenario::figure2(0.0).unwrap(), &t).unwrap();
        assert!((eq.r_max - 0.5 * c2011()).abs() < 1e-9);
    }

    #[test]
    fn dead_scenarios_have_zero_region() {
        let t = table();
        let s = Scenario::figure2(1.0).unwrap();
        assert_eq!(solve_region_minform(&s, &t).unwrap().r_max, 0.0);
        assert_eq!(solve_region_eqform(&s, &t).unwrap().r_max, 0.0);
        assert_eq!(synchronous_baseline(&s, &t).unwrap(), 0.0);
        let s = Scenario::new(
            t.alphabet().clone(),
            vec![
                // relay 1 hears the source but is cut from the destination,
                // relay 2 reaches the destination but never hears the source
                (FadingState::new(1.0, 0.0, 0.0, 0.0), 0.5),
                (FadingState::new(0.0, 0.0, 0.0, 10.0), 0.5),
            ],
            1.0,
        )
        .unwrap();
        assert_eq!(solve_region_minform(&s, &t).unwrap().r_max, 0.0);
    }

    #[test]
    fn supportability_brackets_r_max() {
        let t = table();
        let s = Scenario::figure2(0.5).unwrap();
        let w = is_supportable(&s, &t, 0.28).unwrap().expect("0.28 < r_max");
        assert!(w.violation(&s, &t, 0.28).unwrap() < 1e-9);
        assert!(is_supportable(&s, &t, 0.30).unwrap().is_none());
        let zero = is_supportable(&s, &t, 0.0).unwrap().unwrap();
        assert!(zero.source.is_empty() && zero.relay.is_empty());
        assert_eq!(
            is_supportable(&s, &t, -1.0),
            Err(RegionError::NegativeRate(-1.0))
        );
    }

    #[test]
    fn witness_from_optimum_conserves_flow() {
        let t = table();
        let s = Scenario::figure2(0.3).unwrap();
        for sol in [
            solve_region_minform(&s, &t).unwrap(),
            solve_region_eqform(&s, &t).unwrap(),
        ] {
            assert!(sol.sharing.violation(&s, &t, sol.r_max).unwrap() < 1e-9);
        }
    }

    #[test]
    fn missing_rates_are_reported() {
        let small = build_rate_table(&Alphabet::new([0.0, 1.0]).unwrap(), 1.0).unwrap();
        let s = Scenario::figure2(0.5).unwrap();
        assert!(matches!(
            solve_region_minform(&s, &small),
            Err(RegionError::MissingRate(_))
        ));
    }

    #[test]
    fn closed_forms() {
        assert!((figure2_async_rate(0.5) - 0.375 * c2011()).abs() < 1e-15);
        assert!((figure2_sync_rate(0.5) - 0.125 * c2011()).abs() < 1e-15);
        assert_eq!(figure2_async_rate(1.0), 0.0);
        assert_eq!(figure2_async_rate(0.0), figure2_sync_rate(0.0));
    }
}
