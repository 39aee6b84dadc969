//! Amplify-and-forward link model.
//!
//! A fading state carries the four link power gains of the diamond network
//! (source to each relay, each relay to the destination). For every state the
//! end-to-end AF channel is a scalar Gaussian channel whose SNR depends on the
//! transmit powers of the source and both relays; [`af_rate`] maximizes the
//! resulting rate over the per-node power budget and [`build_rate_table`]
//! tabulates it for every state of a finite gain alphabet.
//!
//! Rates are in bits per block, one block being a single channel use.

use std::fmt;
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numfmt::sig12;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("capacity is undefined for negative SNR {0}")]
    NegativeSnr(f64),
    #[error("gain alphabet is empty")]
    EmptyAlphabet,
    #[error("gain {0} is not a finite non-negative number")]
    InvalidGain(f64),
    #[error("power budget must be positive and finite, got {0}")]
    InvalidPower(f64),
}

/// Gains of one block: `[g_s1, g_s2, g_1d, g_2d]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FadingState(pub [f64; 4]);

impl FadingState {
    pub const fn new(s1: f64, s2: f64, d1: f64, d2: f64) -> Self {
        Self([s1, s2, d1, d2])
    }

    /// Source-to-relay gains `[g_s1, g_s2]`.
    pub fn source_gains(&self) -> [f64; 2] {
        [self.0[0], self.0[1]]
    }

    /// Relay-to-destination gains `[g_1d, g_2d]`.
    pub fn relay_gains(&self) -> [f64; 2] {
        [self.0[2], self.0[3]]
    }
}

impl fmt::Display for FadingState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "[{a},{b},{c},{d}]")
    }
}

/// Per-block transmit powers of the source and the two relays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub source: f64,
    pub relay1: f64,
    pub relay2: f64,
}

impl PowerAllocation {
    pub const fn new(source: f64, relay1: f64, relay2: f64) -> Self {
        Self {
            source,
            relay1,
            relay2,
        }
    }

    pub fn uniform(power: f64) -> Self {
        Self::new(power, power, power)
    }

    pub fn within_budget(&self, power: f64) -> bool {
        [self.source, self.relay1, self.relay2]
            .iter()
            .all(|&p| (0.0..=power).contains(&p))
    }
}

/// Index of a state in the lexicographic enumeration of `F^4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(pub usize);

/// Finite, sorted set of link gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alphabet(Vec<f64>);

impl Alphabet {
    /// Sorts and deduplicates `gains`.
    pub fn new(gains: impl IntoIterator<Item = f64>) -> Result<Self, ChannelError> {
        let mut gains: Vec<f64> = gains.into_iter().collect();
        if let Some(&bad) = gains.iter().find(|g| !g.is_finite() || **g < 0.0) {
            return Err(ChannelError::InvalidGain(bad));
        }
        if gains.is_empty() {
            return Err(ChannelError::EmptyAlphabet);
        }
        gains.sort_by(f64::total_cmp);
        gains.dedup();
        Ok(Self(gains))
    }

    pub fn gains(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, gain: f64) -> bool {
        self.index_of(gain).is_some()
    }

    pub fn index_of(&self, gain: f64) -> Option<usize> {
        self.0.iter().position(|&g| g == gain)
    }

    pub fn num_states(&self) -> usize {
        self.len().pow(4)
    }

    pub fn state_id(&self, state: &FadingState) -> Option<StateId> {
        let k = self.len();
        let mut id = 0;
        for &gain in &state.0 {
            id = id * k + self.index_of(gain)?;
        }
        Some(StateId(id))
    }

    pub fn state(&self, id: StateId) -> FadingState {
        let k = self.len();
        let mut rest = id.0;
        let mut gains = [0.0; 4];
        for slot in gains.iter_mut().rev() {
            *slot = self.0[rest % k];
            rest /= k;
        }
        FadingState(gains)
    }

    /// All states in lexicographic order of their alphabet indices.
    pub fn states(&self) -> impl Iterator<Item = (StateId, FadingState)> + '_ {
        (0..self.num_states()).map(|i| (StateId(i), self.state(StateId(i))))
    }

    /// States sharing the source gains of `f`, i.e. all `g` with `(f, g)` in `I_s`.
    /// They form one contiguous block of ids.
    pub fn source_matches(&self, f: StateId) -> impl Iterator<Item = StateId> {
        let block = self.len() * self.len();
        let start = (f.0 / block) * block;
        (start..start + block).map(StateId)
    }

    /// States sharing the relay gains of `f`, i.e. all `g` with `(f, g)` in `I_d`.
    pub fn relay_matches(&self, f: StateId) -> impl Iterator<Item = StateId> {
        let block = self.len() * self.len();
        let offset = f.0 % block;
        (0..block).map(move |i| StateId(i * block + offset))
    }
}

/// Knobs for the per-state power optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOptions {
    /// Absolute convergence target for rates (bits per block).
    pub tolerance: f64,
    /// Points per unit budget in the 1-D scan that brackets the golden search.
    pub scan_steps: usize,
    /// Points per unit budget in the 3-D guard grid.
    pub guard_steps: usize,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            scan_steps: 200,
            guard_steps: 50,
        }
    }
}

/// `C(x) = 1/2 log2(1 + x)`, in bits per real channel use.
pub fn capacity(snr: f64) -> Result<f64, ChannelError> {
    if snr < 0.0 || snr.is_nan() {
        return Err(ChannelError::NegativeSnr(snr));
    }
    Ok(half_log2_1p(snr))
}

fn half_log2_1p(x: f64) -> f64 {
    0.5 * x.ln_1p() / std::f64::consts::LN_2
}

/// End-to-end SNR at the destination when the relays amplify and forward a
/// source symbol sent over state `g` with powers `alloc`.
pub fn af_snr(g: &FadingState, alloc: &PowerAllocation) -> f64 {
    let [gs1, gs2, g1d, g2d] = g.0;
    let ps = alloc.source;
    let c1 = g1d * alloc.relay1 / (gs1 * ps + 1.0);
    let c2 = g2d * alloc.relay2 / (gs2 * ps + 1.0);
    let coherent = (gs1 * c1).sqrt() + (gs2 * c2).sqrt();
    let numerator = ps * coherent * coherent;
    if numerator == 0.0 {
        return 0.0;
    }
    numerator / (c1 + c2 + 1.0)
}

/// Rate delivered over state `g` with the given powers.
pub fn af_objective(g: &FadingState, alloc: &PowerAllocation) -> f64 {
    half_log2_1p(af_snr(g, alloc))
}

/// True when no power allocation gives a positive rate over `g`.
pub fn is_dead_state(g: &FadingState) -> bool {
    let [gs1, gs2, g1d, g2d] = g.0;
    gs1 * g1d == 0.0 && gs2 * g2d == 0.0
}

/// Maximum AF rate over `g` with per-node power budget `power`, together
/// with an allocation attaining it.
pub fn af_rate(g: &FadingState, power: f64) -> Result<(f64, PowerAllocation), ChannelError> {
    af_rate_with(g, power, &RateOptions::default())
}

pub fn af_rate_with(
    g: &FadingState,
    power: f64,
    opts: &RateOptions,
) -> Result<(f64, PowerAllocation), ChannelError> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(ChannelError::InvalidPower(power));
    }
    if let Some(&bad) = g.0.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(ChannelError::InvalidGain(bad));
    }
    if is_dead_state(g) {
        return Ok((0.0, PowerAllocation::uniform(power)));
    }

    // Full source power and one relay at full power; optimize the other relay.
    let (x2, r2) = maximize_on_interval(
        |p| af_objective(g, &PowerAllocation::new(power, power, p)),
        power,
        opts,
    );
    let (x1, r1) = maximize_on_interval(
        |p| af_objective(g, &PowerAllocation::new(power, p, power)),
        power,
        opts,
    );
    let (mut best_rate, mut best_alloc) = if r2 >= r1 {
        (r2, PowerAllocation::new(power, power, x2))
    } else {
        (r1, PowerAllocation::new(power, x1, power))
    };

    let (guard_rate, guard_alloc) = guard_grid(g, power, opts.guard_steps);
    if guard_rate > best_rate + opts.tolerance {
        log::warn!(
            "boundary search missed the optimum for {g}: {best_rate} < {guard_rate}; polishing grid point"
        );
        let step = power / opts.guard_steps as f64;
        let (rate, alloc) = polish(g, power, guard_alloc, step, opts);
        if rate > best_rate {
            best_rate = rate;
            best_alloc = alloc;
        }
    }
    Ok((best_rate, best_alloc))
}

/// Scan `[0, hi]` on a uniform grid, then golden-section refine around the best
/// grid point. Endpoints are always candidates.
fn maximize_on_interval(f: impl Fn(f64) -> f64, hi: f64, opts: &RateOptions) -> (f64, f64) {
    let n = opts.scan_steps.max(2);
    let h = hi / n as f64;
    let mut best_k = 0;
    let mut best = f(0.0);
    for k in 1..=n {
        let x = if k == n { hi } else { k as f64 * h };
        let v = f(x);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let best_x = if best_k == n { hi } else { best_k as f64 * h };
    let lo = if best_k == 0 {
        0.0
    } else {
        (best_k - 1) as f64 * h
    };
    let up = if best_k + 1 >= n {
        hi
    } else {
        (best_k + 1) as f64 * h
    };
    let (x, v) = golden_section_max(&f, lo, up, hi * 1e-12);
    if v > best {
        (x, v)
    } else {
        (best_x, best)
    }
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_section_max(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    xtol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn guard_grid(g: &FadingState, power: f64, steps: usize) -> (f64, PowerAllocation) {
    let steps = steps.max(1);
    let at = |k: usize| {
        if k == steps {
            power
        } else {
            power * k as f64 / steps as f64
        }
    };
    let mut best = (f64::NEG_INFINITY, PowerAllocation::uniform(power));
    for i in 0..=steps {
        for j in 0..=steps {
            for k in 0..=steps {
                let alloc = PowerAllocation::new(at(i), at(j), at(k));
                let v = af_objective(g, &alloc);
                if v > best.0 {
                    best = (v, alloc);
                }
            }
        }
    }
    best
}

/// Cyclic coordinate ascent inside a box of half-width `radius` around `start`.
fn polish(
    g: &FadingState,
    power: f64,
    start: PowerAllocation,
    radius: f64,
    opts: &RateOptions,
) -> (f64, PowerAllocation) {
    let mut x = [start.source, start.relay1, start.relay2];
    let mut value = af_objective(g, &start);
    let eval = |x: &[f64; 3]| af_objective(g, &PowerAllocation::new(x[0], x[1], x[2]));
    for _ in 0..50 {
        let before = value;
        for axis in 0..3 {
            let lo = (x[axis] - radius).max(0.0);
            let hi = (x[axis] + radius).min(power);
            let (t, v) = golden_section_max(
                |t| {
                    let mut y = x;
                    y[axis] = t;
                    eval(&y)
                },
                lo,
                hi,
                power * 1e-12,
            );
            if v > value {
                x[axis] = t;
                value = v;
            }
        }
        if value - before <= opts.tolerance * 1e-3 {
            break;
        }
    }
    (value, PowerAllocation::new(x[0], x[1], x[2]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub state: FadingState,
    pub rate: f64,
    pub alloc: PowerAllocation,
}

/// AF rate of every state in `F^4`, indexed by [`StateId`].
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    alphabet: Alphabet,
    power: f64,
    entries: Vec<RateEntry>,
}

pub fn build_rate_table(alphabet: &Alphabet, power: f64) -> Result<RateTable, ChannelError> {
    build_rate_table_with(alphabet, power, &RateOptions::default())
}

pub fn build_rate_table_with(
    alphabet: &Alphabet,
    power: f64,
    opts: &RateOptions,
) -> Result<RateTable, ChannelError> {
    if alphabet.is_empty() {
        return Err(ChannelError::EmptyAlphabet);
    }
    let entries = (0..alphabet.num_states())
        .into_par_iter()
        .map(|i| {
            let state = alphabet.state(StateId(i));
            af_rate_with(&state, power, opts).map(|(rate, alloc)| RateEntry { state, rate, alloc })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RateTable {
        alphabet: alphabet.clone(),
        power,
        entries,
    })
}

impl RateTable {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn entries(&self) -> &[RateEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rate(&self, id: StateId) -> f64 {
        self.entries[id.0].rate
    }

    pub fn entry(&self, id: StateId) -> &RateEntry {
        &self.entries[id.0]
    }

    pub fn id_of(&self, state: &FadingState) -> Option<StateId> {
        self.alphabet.state_id(state)
    }

    pub fn rate_of(&self, state: &FadingState) -> Option<f64> {
        self.id_of(state).map(|id| self.rate(id))
    }

    /// Same table with every rate multiplied by `factor`. Allocations are kept.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.rate *= factor;
        }
        out
    }

    /// CSV with columns `g_s1,g_s2,g_1d,g_2d,rate,p_s,p_1,p_2`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["g_s1", "g_s2", "g_1d", "g_2d", "rate", "p_s", "p_1", "p_2"])?;
        for e in &self.entries {
            let [a, b, c, d] = e.state.0;
            w.write_record([
                sig12(a),
                sig12(b),
                sig12(c),
                sig12(d),
                sig12(e.rate),
                sig12(e.alloc.source),
                sig12(e.alloc.relay1),
                sig12(e.alloc.relay2),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
