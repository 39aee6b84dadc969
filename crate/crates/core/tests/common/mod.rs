//! Independent oracles shared by the integration tests. Nothing here calls
//! into the crate's optimizers or solvers.

#![allow(dead_code)]

use afrelay::{Alphabet, FadingState, Scenario};

pub fn cap(x: f64) -> f64 {
    0.5 * (1.0 + x).log2()
}

/// `C(20/11)`, the rate of `[1,1,10,10]` at unit power.
pub fn c2011() -> f64 {
    0.5 * (31.0f64 / 11.0).log2()
}

/// AF rate of state `g` at powers `(ps, p1, p2)`, written out directly.
pub fn af_value(g: [f64; 4], ps: f64, p1: f64, p2: f64) -> f64 {
    let [s1, s2, d1, d2] = g;
    let c1 = d1 * p1 / (s1 * ps + 1.0);
    let c2 = d2 * p2 / (s2 * ps + 1.0);
    let amp = (s1 * c1).sqrt() + (s2 * c2).sqrt();
    cap(ps * amp * amp / (c1 + c2 + 1.0))
}

/// Maximum of the AF rate over the cube `[0, P]^3` sampled at step `P / steps`.
pub fn grid_rate(g: [f64; 4], power: f64, steps: usize) -> f64 {
    let h = power / steps as f64;
    let mut best: f64 = 0.0;
    for i in 0..=steps {
        let ps = i as f64 * h;
        for j in 0..=steps {
            let p1 = j as f64 * h;
            for k in 0..=steps {
                best = best.max(af_value(g, ps, p1, k as f64 * h));
            }
        }
    }
    best
}

/// Single-relay AF rate in closed form (the other relay link is dark).
pub fn single_relay_rate(g_sr: f64, g_rd: f64, power: f64) -> f64 {
    let (a, b) = (g_sr * power, g_rd * power);
    cap(a * b / (a + b + 1.0))
}

/// Best total throughput over a grid of time-sharing fractions for a
/// scenario whose productive packets all share one state `g` of rate `rate`.
///
/// Every support state splits its block between "source sends a g-packet"
/// (allowed when its source gains match `g`) and "relays forward a g-packet"
/// (allowed when its relay gains match `g`), in multiples of `step`.
pub fn exhaustive_single_packet(scenario: &Scenario, g: &FadingState, rate: f64, step: f64) -> f64 {
    let n = (1.0 / step).round() as usize;
    // Per-state menu of reachable (fill, drain) contributions.
    let menus: Vec<Vec<(f64, f64)>> = scenario
        .support()
        .iter()
        .map(|(f, p)| {
            let src = f.source_gains() == g.source_gains();
            let rel = f.relay_gains() == g.relay_gains();
            let mut menu = Vec::new();
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let (a, b) = (i as f64 * step, j as f64 * step);
                    if (a > 0.0 && !src) || (b > 0.0 && !rel) {
                        continue;
                    }
                    menu.push((p * a * rate, p * b * rate));
                }
            }
            menu
        })
        .collect();
    fn search(menus: &[Vec<(f64, f64)>], fill: f64, drain: f64) -> f64 {
        match menus.split_first() {
            None => fill.min(drain),
            Some((menu, rest)) => menu
                .iter()
                .map(|&(f, d)| search(rest, fill + f, drain + d))
                .fold(0.0, f64::max),
        }
    }
    search(&menus, 0.0, 0.0)
}

pub fn figure2_alphabet() -> Alphabet {
    Alphabet::new([0.0, 1.0, 10.0]).unwrap()
}

/// Gains drawn for randomized scenarios.
pub const GAIN_POOL: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0];

/// Scenario over `gains` (deduplicated) whose support is the states with
/// the given indices into `F^4`, weighted by `weights`.
pub fn scenario_from(gains: &[f64], picks: &[(usize, u32)], power: f64) -> Scenario {
    let alphabet = Alphabet::new(gains.iter().copied()).unwrap();
    let n = alphabet.num_states();
    let mut support: Vec<(FadingState, f64)> = Vec::new();
    for &(idx, w) in picks {
        let f = alphabet.state(afrelay::StateId(idx % n));
        if !support.iter().any(|(s, _)| *s == f) {
            support.push((f, w as f64));
        }
    }
    let total: f64 = support.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut support {
        *w /= total;
    }
    Scenario::new(alphabet, support, power).unwrap()
}

/// Reproducible random scenario with at most three gains and six support states.
pub fn random_scenario<R: rand::Rng>(rng: &mut R) -> Scenario {
    use rand::seq::SliceRandom;
    let k = rng.gen_range(1..=3);
    let gains: Vec<f64> = GAIN_POOL.choose_multiple(rng, k).copied().collect();
    let picks: Vec<(usize, u32)> = (0..rng.gen_range(1..=6))
        .map(|_| (rng.gen_range(0..81), rng.gen_range(1..=100)))
        .collect();
    scenario_from(&gains, &picks, rng.gen_range(0.5..2.0))
}
