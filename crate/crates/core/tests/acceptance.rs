//! Acceptance gate. Runs without the test harness so that every criterion's
//! PASS/FAIL line is printed; exits non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use afrelay::channel::{af_objective, af_rate, build_rate_table};
use afrelay::region::{
    membership_id, membership_is, solve_region_eqform, solve_region_minform, synchronous_baseline,
};
use afrelay::scheduler::Action;
use afrelay::sim::{
    classify_stability, run_trajectory, run_trajectory_with, ArrivalKind, ArrivalSpec, SimConfig,
    Verdict,
};
use afrelay::{FadingState, Scenario};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn rate_formula() -> Outcome {
    let start = Instant::now();
    let (rate, _) = af_rate(&FadingState::new(1.0, 1.0, 10.0, 10.0), 1.0).unwrap();
    let took = start.elapsed();
    let err = (rate - c2011()).abs();
    check(
        err <= 1e-6 && within(took, Duration::from_secs(1)),
        format!("rate {rate:.12}, error {err:.1e}, {took:.2?}"),
    )
}

fn figure2_reproduction() -> Outcome {
    let start = Instant::now();
    let rates = build_rate_table(&figure2_alphabet(), 1.0).unwrap();
    let (mut lp_err, mut sync_err): (f64, f64) = (0.0, 0.0);
    for k in 0..=10 {
        let gamma = k as f64 / 10.0;
        let up = 1.0 - gamma;
        let s = Scenario::figure2(gamma).unwrap();
        let r_max = solve_region_minform(&s, &rates).unwrap().r_max;
        let sync = synchronous_baseline(&s, &rates).unwrap();
        lp_err = lp_err.max((r_max - (0.5 * up * up + gamma * up) * c2011()).abs());
        sync_err = sync_err.max((sync - 0.5 * up * up * c2011()).abs());
    }
    let took = start.elapsed();
    check(
        lp_err <= 1e-8 && sync_err <= 1e-12 && within(took, Duration::from_secs(10)),
        format!("max LP error {lp_err:.1e}, max baseline error {sync_err:.1e}, {took:.2?}"),
    )
}

fn lp_form_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let s = random_scenario(&mut rng);
        let rates = build_rate_table(s.alphabet(), s.power()).unwrap();
        let a = solve_region_minform(&s, &rates).unwrap().r_max;
        let b = solve_region_eqform(&s, &rates).unwrap().r_max;
        worst = worst.max((a - b).abs());
    }
    let took = start.elapsed();
    check(
        worst <= 1e-8 && within(took, Duration::from_secs(120)),
        format!("50 scenarios, max gap {worst:.1e}, {took:.2?}"),
    )
}

fn figure2_half_runs(fraction: f64) -> (f64, Vec<(Verdict, f64, f64, Duration)>) {
    let s = Scenario::figure2(0.5).unwrap();
    let rates = build_rate_table(s.alphabet(), 1.0).unwrap();
    let r_max = solve_region_minform(&s, &rates).unwrap().r_max;
    let lambda = fraction * r_max;
    let arrival = ArrivalSpec::bernoulli(lambda);
    let runs = [1u64, 2, 3]
        .iter()
        .map(|&seed| {
            let start = Instant::now();
            let stats = run_trajectory(&s, &rates, &arrival, 1_000_000, seed).unwrap();
            let v = classify_stability(&stats, lambda);
            (v.verdict, v.slope, v.delivered_rate, start.elapsed())
        })
        .collect();
    (lambda, runs)
}

fn stable_side() -> Outcome {
    let (lambda, runs) = figure2_half_runs(0.9);
    let pass = runs
        .iter()
        .all(|(v, _, _, t)| *v == Verdict::Stable && within(*t, Duration::from_secs(60)));
    let detail = runs
        .iter()
        .map(|(v, slope, d, t)| {
            format!("{} slope {slope:.2e} delivered {d:.4} {t:.2?}", v.as_str())
        })
        .collect::<Vec<_>>()
        .join("; ");
    check(pass, format!("lambda {lambda:.6}: {detail}"))
}

fn unstable_side() -> Outcome {
    let (lambda, runs) = figure2_half_runs(1.1);
    let pass = runs.iter().all(|(v, slope, _, t)| {
        *v == Verdict::Unstable && *slope >= 0.05 * lambda && within(*t, Duration::from_secs(60))
    });
    let detail = runs
        .iter()
        .map(|(v, slope, d, t)| format!("{} slope {slope:.4} delivered {d:.4} {t:.2?}", v.as_str()))
        .collect::<Vec<_>>()
        .join("; ");
    check(
        pass,
        format!(
            "lambda {lambda:.6}, slope floor {:.4}: {detail}",
            0.05 * lambda
        ),
    )
}

fn property_suite() -> Outcome {
    let mut problems: Vec<String> = Vec::new();

    // Queue symmetry, packet conservation and eligibility along trajectories.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut scenarios: Vec<Scenario> = (0..6)
        .map(|k| Scenario::figure2(k as f64 / 5.0).unwrap())
        .collect();
    scenarios.extend((0..14).map(|_| random_scenario(&mut rng)));
    let kinds = [
        ArrivalKind::Constant,
        ArrivalKind::BernoulliBatch,
        ArrivalKind::Uniform,
    ];
    let mut slots = 0u64;
    for (i, s) in scenarios.iter().enumerate() {
        let rates = build_rate_table(s.alphabet(), s.power()).unwrap();
        let r_max = solve_region_minform(s, &rates).unwrap().r_max;
        let load = rng.gen_range(0.3..1.4);
        let arrival = ArrivalSpec::new(kinds[i % 3], load * r_max, None).unwrap();
        let alphabet = rates.alphabet().clone();
        run_trajectory_with(
            s,
            &rates,
            &arrival,
            20_000,
            i as u64,
            &SimConfig::default(),
            |ev, q| {
                slots += 1;
                if !q.is_symmetric() {
                    problems.push(format!("scenario {i} slot {}: asymmetric relays", ev.slot));
                }
                let f = alphabet.state(ev.state);
                let eligible = match ev.action {
                    Action::SourceTransmit { g, .. } => membership_is(&f, &alphabet.state(g)),
                    Action::RelayTransmit { g, .. } => membership_id(&f, &alphabet.state(g)),
                    Action::Idle => true,
                };
                if !eligible {
                    problems.push(format!("scenario {i} slot {}: ineligible action", ev.slot));
                }
                if let Some(g) = ev.action.packet_state() {
                    let held = q.enqueued(g) - q.drained(g);
                    if held != q.relay_len(0, g) as u64 || held != q.relay_len(1, g) as u64 {
                        problems.push(format!("scenario {i} slot {}: packet count drift", ev.slot));
                    }
                }
            },
        )
        .unwrap();
    }

    // Optimizer consistency and the full-power allocation pattern.
    let rates = build_rate_table(&figure2_alphabet(), 1.0).unwrap();
    let mut consistency: f64 = 0.0;
    for e in rates.entries() {
        consistency = consistency.max((af_objective(&e.state, &e.alloc) - e.rate).abs());
        consistency = consistency.max(
            (af_value(e.state.0, e.alloc.source, e.alloc.relay1, e.alloc.relay2) - e.rate).abs(),
        );
        if e.rate > 0.0 {
            let a = e.alloc;
            if (a.source - 1.0).abs() > 1e-12 || a.relay1.max(a.relay2) < 1.0 - 1.0 / 50.0 {
                problems.push(format!(
                    "{}: allocation {a:?} off the full-power pattern",
                    e.state
                ));
            }
        }
    }
    if consistency > 1e-9 {
        problems.push(format!("optimizer consistency {consistency:.1e}"));
    }

    let detail = if problems.is_empty() {
        format!("{slots} slots checked, 81 states, optimizer consistency {consistency:.1e}")
    } else {
        problems.truncate(3);
        problems.join("; ")
    };
    check(problems.is_empty(), detail)
}

fn oracle_checks() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let states: Vec<(FadingState, f64)> = (0..20)
        .map(|_| {
            let mut g = [0.0; 4];
            for x in &mut g {
                *x = if rng.gen_bool(0.15) {
                    0.0
                } else {
                    rng.gen_range(0.0..10.0)
                };
            }
            (FadingState(g), rng.gen_range(0.5..2.0))
        })
        .collect();
    let rate_err = states
        .par_iter()
        .map(|(g, power)| {
            let (rate, _) = af_rate(g, *power).unwrap();
            (rate - grid_rate(g.0, *power, 200)).abs()
        })
        .reduce(|| 0.0, f64::max);

    let strong = FadingState::new(1.0, 1.0, 10.0, 10.0);
    let half_dark = FadingState::new(0.0, 0.0, 10.0, 10.0);
    let s = Scenario::new(
        figure2_alphabet(),
        vec![(strong, 0.6), (half_dark, 0.4)],
        1.0,
    )
    .unwrap();
    let rates = build_rate_table(s.alphabet(), 1.0).unwrap();
    let r_max = solve_region_minform(&s, &rates).unwrap().r_max;
    let oracle = exhaustive_single_packet(&s, &strong, c2011(), 1e-3);
    let region_err = (r_max - oracle).abs();
    check(
        rate_err <= 1e-4 && region_err <= 1e-3,
        format!(
            "20 states, max grid gap {rate_err:.1e}; r_max {r_max:.9} vs exhaustive {oracle:.9}; {:.2?}",
            start.elapsed()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("rate formula", rate_formula),
        ("outage example reproduction", figure2_reproduction),
        ("LP form equivalence", lp_form_equivalence),
        ("stable below r_max", stable_side),
        ("unstable above r_max", unstable_side),
        ("property suite", property_suite),
        ("oracle checks", oracle_checks),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {}: {tag}: {name}: {}", i + 1, outcome.detail);
        if !outcome.pass {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
