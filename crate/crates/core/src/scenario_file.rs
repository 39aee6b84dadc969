//! Scenario files.
//!
//! A scenario file is a TOML document describing one experiment:
//!
//! ```toml
//! alphabet = [0, 1, 10]
//! power = 1.0
//!
//! [[states]]
//! f = [1, 1, 10, 10]
//! prob = 1.0
//!
//! [arrivals]            # optional
//! kind = "bernoulli-batch"
//! lambda = 0.25
//!
//! [sim]                 # optional
//! horizon = 1000000
//! seeds = [1, 2, 3]
//! checkpoints = 1000
//!
//! [solver]              # optional
//! tolerance = 1e-9
//! ```
//!
//! Unknown keys are rejected. Validation errors name the offending key and
//! the line it appears on.

use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

use crate::channel::{Alphabet, FadingState};
use crate::region::{Scenario, ScenarioError};
use crate::sim::{ArrivalKind, ArrivalSpec, SimError};

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("line {line}: `{key}`: {message}")]
    Invalid {
        key: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub checkpoints: usize,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            horizon: 1_000_000,
            seeds: vec![1, 2, 3],
            checkpoints: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tolerance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tolerance: 1e-9 }
    }
}

/// A parsed, validated scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub scenario: Scenario,
    pub arrivals: ArrivalSpec,
    pub sim: SimSettings,
    pub solver: SolverSettings,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    alphabet: Spanned<Vec<f64>>,
    power: Spanned<f64>,
    states: Spanned<Vec<Spanned<RawState>>>,
    arrivals: Option<Spanned<RawArrivals>>,
    sim: Option<Spanned<RawSim>>,
    solver: Option<Spanned<RawSolver>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    f: Spanned<[f64; 4]>,
    prob: Spanned<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArrivals {
    #[serde(default)]
    kind: ArrivalKind,
    lambda: Spanned<f64>,
    bound: Option<Spanned<f64>>,
}

#[derive(Serialize)]
struct OutState {
    f: [f64; 4],
    prob: f64,
}

#[derive(Serialize)]
struct OutArrivals {
    kind: ArrivalKind,
    lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<f64>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    horizon: Option<u64>,
    seeds: Option<Vec<u64>>,
    checkpoints: Option<usize>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tolerance: f64,
}

#[derive(Serialize)]
struct OutFile<'a> {
    alphabet: &'a [f64],
    power: f64,
    states: Vec<OutState>,
    arrivals: OutArrivals,
    sim: RawSim,
    solver: RawSolver,
}

struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn of(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.0.len());
        self.0[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn invalid(
        &self,
        key: &str,
        span: Range<usize>,
        message: impl fmt::Display,
    ) -> ScenarioFileError {
        ScenarioFileError::Invalid {
            key: key.to_string(),
            line: self.of(span),
            message: message.to_string(),
        }
    }
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Experiment, ScenarioFileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> Result<Experiment, ScenarioFileError> {
    let raw: RawFile = toml::from_str(text).map_err(|e| {
        let msg = match e.span() {
            Some(span) => format!("line {}: {}", Lines(text).of(span), e.message()),
            None => e.message().to_string(),
        };
        ScenarioFileError::Syntax(msg)
    })?;
    let lines = Lines(text);

    let alphabet = Alphabet::new(raw.alphabet.get_ref().iter().copied())
        .map_err(|e| lines.invalid("alphabet", raw.alphabet.span(), e))?;

    let support: Vec<(FadingState, f64)> = raw
        .states
        .get_ref()
        .iter()
        .map(|s| {
            (
                FadingState(*s.get_ref().f.get_ref()),
                *s.get_ref().prob.get_ref(),
            )
        })
        .collect();
    let scenario = Scenario::new(alphabet, support, *raw.power.get_ref()).map_err(|e| {
        let entry = |state: &FadingState| {
            raw.states
                .get_ref()
                .iter()
                .rev()
                .find(|s| *s.get_ref().f.get_ref() == state.0)
                .map(|s| s.get_ref())
        };
        let f_span = |state| entry(state).map_or(raw.states.span(), |s| s.f.span());
        let prob_span = |state| entry(state).map_or(raw.states.span(), |s| s.prob.span());
        match &e {
            ScenarioError::GainNotInAlphabet { state, .. } => {
                lines.invalid("states.f", f_span(state), &e)
            }
            ScenarioError::NonPositiveProbability { state, .. } => {
                lines.invalid("states.prob", prob_span(state), &e)
            }
            ScenarioError::DuplicateState(state) => lines.invalid("states.f", f_span(state), &e),
            ScenarioError::Channel(_) => lines.invalid("power", raw.power.span(), &e),
            _ => lines.invalid("states", raw.states.span(), &e),
        }
    })?;

    let arrivals = match &raw.arrivals {
        Some(a) => {
            let r = a.get_ref();
            let bound = r.bound.as_ref().map(|b| *b.get_ref());
            ArrivalSpec::new(r.kind, *r.lambda.get_ref(), bound).map_err(|e| {
                match (&e, &r.bound) {
                    (SimError::BoundBelowMean { .. }, Some(b)) => {
                        lines.invalid("arrivals.bound", b.span(), &e)
                    }
                    _ => lines.invalid("arrivals.lambda", r.lambda.span(), &e),
                }
            })?
        }
        None => ArrivalSpec::bernoulli(0.0),
    };

    let mut sim = SimSettings::default();
    if let Some(s) = &raw.sim {
        let r = s.get_ref();
        if let Some(h) = r.horizon {
            sim.horizon = h;
        }
        if let Some(seeds) = &r.seeds {
            if seeds.is_empty() {
                return Err(lines.invalid("sim.seeds", s.span(), "at least one seed is required"));
            }
            sim.seeds = seeds.clone();
        }
        if let Some(c) = r.checkpoints {
            if c == 0 {
                return Err(lines.invalid("sim.checkpoints", s.span(), "must be positive"));
            }
            sim.checkpoints = c;
        }
    }

    let mut solver = SolverSettings::default();
    if let Some(s) = &raw.solver {
        let t = s.get_ref().tolerance;
        if !(t > 0.0 && t.is_finite()) {
            return Err(lines.invalid("solver.tolerance", s.span(), "must be positive"));
        }
        solver.tolerance = t;
    }

    Ok(Experiment {
        scenario,
        arrivals,
        sim,
        solver,
    })
}

impl Experiment {
    /// Scenario-file text for this experiment. Fails for seeds or horizons
    /// above `i64::MAX`, which TOML integers cannot hold.
    pub fn to_toml_string(&self) -> Result<String, toml::ser::Error> {
        let out = OutFile {
            alphabet: self.scenario.alphabet().gains(),
            power: self.scenario.power(),
            states: self
                .scenario
                .support()
                .iter()
                .map(|(f, p)| OutState { f: f.0, prob: *p })
                .collect(),
            arrivals: OutArrivals {
                kind: self.arrivals.kind,
                lambda: self.arrivals.lambda,
                bound: self.arrivals.bound,
            },
            sim: RawSim {
                horizon: Some(self.sim.horizon),
                seeds: Some(self.sim.seeds.clone()),
                checkpoints: Some(self.sim.checkpoints),
            },
            solver: RawSolver {
                tolerance: self.solver.tolerance,
            },
        };
        toml::to_string(&out)
    }
}
