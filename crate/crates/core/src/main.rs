#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use afrelay::channel::{build_rate_table_with, ChannelError, RateOptions, RateTable};
use afrelay::numfmt::sig12;
use afrelay::region::{
    solve_region, synchronous_baseline, Formulation, RegionError, RegionOptions, RegionSolution,
};
use afrelay::scenario_file::{parse_scenario, Experiment, ScenarioFileError};
use afrelay::sim::{
    classify_stability, figure2, run_trajectory_with, sweep_lambda, write_figure2_csv, SimConfig,
    SimError, TrajectoryLog,
};

/// Overrides the default output directory (the current directory).
const OUT_DIR_ENV: &str = "AFRELAY_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "afrelay",
    version,
    about = "AF relay rates, stability region and back-pressure simulation"
)]
struct Cli {
    /// Seed for simulation runs; replaces the scenario's seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solver tolerance; replaces the scenario's `solver.tolerance`.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the AF rate of every support state (or every state with --all).
    Rate {
        scenario: PathBuf,
        #[arg(long)]
        all: bool,
    },
    /// Print r_max and the nonzero time-sharing fractions.
    Region {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Form::Min)]
        form: Form,
    },
    /// Print the synchronous (unbuffered) AF rate.
    Baseline { scenario: PathBuf },
    /// Run one back-pressure trajectory and classify it.
    Simulate {
        scenario: PathBuf,
        /// Arrival rate in bits per block; defaults to the scenario's.
        #[arg(long, conflicts_with = "fraction")]
        lambda: Option<f64>,
        /// Arrival rate as a fraction of r_max.
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        horizon: Option<u64>,
        /// Also write the per-block trajectory to trajectory.csv.
        #[arg(long)]
        log: bool,
    },
    /// Classify a grid of arrival rates over several seeds; writes sweep.csv.
    Sweep {
        scenario: PathBuf,
        /// Comma-separated arrival rates.
        #[arg(long, value_delimiter = ',', conflicts_with = "fractions")]
        lambdas: Option<Vec<f64>>,
        /// Comma-separated fractions of r_max.
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.9,1.1")]
        fractions: Vec<f64>,
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Buffered versus unbuffered rates of the outage example; writes figure2.csv.
    Figure2 {
        /// `start:stop:step` (inclusive) or a comma-separated list.
        #[arg(long, default_value = "0:1:0.1")]
        gammas: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Form {
    Min,
    Eq,
    Both,
}

enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<ScenarioFileError> for CliError {
    fn from(e: ScenarioFileError) -> Self {
        // An unreadable scenario is bad input, not a runtime failure.
        CliError::Validation(e.to_string())
    }
}

impl From<ChannelError> for CliError {
    fn from(e: ChannelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        match e {
            RegionError::Solver(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Region(r) => r.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

struct Context {
    seed: Option<u64>,
    out: PathBuf,
    tolerance: Option<f64>,
}

impl Context {
    fn load(&self, path: &Path) -> Result<Experiment, CliError> {
        let mut exp = parse_scenario(path)?;
        if let Some(t) = self.tolerance {
            exp.solver.tolerance = t;
        }
        if let Some(s) = self.seed {
            exp.sim.seeds = vec![s];
        }
        Ok(exp)
    }

    fn rates(&self, exp: &Experiment) -> Result<RateTable, CliError> {
        let opts = RateOptions {
            tolerance: exp.solver.tolerance,
            ..RateOptions::default()
        };
        Ok(build_rate_table_with(
            exp.scenario.alphabet(),
            exp.scenario.power(),
            &opts,
        )?)
    }

    fn region(
        &self,
        exp: &Experiment,
        rates: &RateTable,
        form: Formulation,
    ) -> Result<RegionSolution, CliError> {
        let opts = RegionOptions {
            tolerance: exp.solver.tolerance,
        };
        Ok(solve_region(&exp.scenario, rates, form, &opts)?)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        info!("writing {}", path.display());
        Ok(BufWriter::new(File::create(path)?))
    }
}

fn parse_gammas(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Validation(format!("invalid gamma grid `{spec}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let gammas = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| {
                if k == n && ((stop - start) / step - n as f64).abs() < 1e-9 {
                    stop
                } else {
                    start + k as f64 * step
                }
            })
            .collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
        return Err(CliError::Validation(format!(
            "gamma values must lie in [0, 1]: `{spec}`"
        )));
    }
    Ok(gammas)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Context {
        seed: cli.seed,
        out: cli
            .out
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".")),
        tolerance: cli.tolerance,
    };
    if let Some(t) = ctx.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Validation(format!(
                "--tolerance must be positive, got {t}"
            )));
        }
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();

    match cli.command {
        Command::Rate { scenario, all } => {
            let exp = ctx.load(&scenario)?;
            let rates = ctx.rates(&exp)?;
            if all {
                rates.write_csv(&mut out)?;
            } else {
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(["g_s1", "g_s2", "g_1d", "g_2d", "rate", "p_s", "p_1", "p_2"])?;
                for (f, _) in exp.scenario.support() {
                    let id = rates.id_of(f).expect("support states are in the alphabet");
                    let e = rates.entry(id);
                    let mut row: Vec<String> = f.0.iter().map(|x| sig12(*x)).collect();
                    row.push(sig12(e.rate));
                    row.extend([e.alloc.source, e.alloc.relay1, e.alloc.relay2].map(sig12));
                    w.write_record(&row)?;
                }
                w.flush()?;
            }
        }
        Command::Region { scenario, form } => {
            let exp = ctx.load(&scenario)?;
            let rates = ctx.rates(&exp)?;
            let forms: &[(&str, Formulation)] = match form {
                Form::Min => &[("min", Formulation::MinForm)],
                Form::Eq => &[("eq", Formulation::BalanceForm)],
                Form::Both => &[
                    ("min", Formulation::MinForm),
                    ("eq", Formulation::BalanceForm),
                ],
            };
            let solutions = forms
                .iter()
                .map(|&(name, f)| Ok((name, ctx.region(&exp, &rates, f)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            writeln!(out, "form,r_max")?;
            for (name, s) in &solutions {
                writeln!(out, "{name},{}", sig12(s.r_max))?;
            }
            writeln!(out)?;
            solutions[0].1.write_csv(&rates, &mut out)?;
        }
        Command::Baseline { scenario } => {
            let exp = ctx.load(&scenario)?;
            let rates = ctx.rates(&exp)?;
            writeln!(out, "r_sync")?;
            writeln!(
                out,
                "{}",
                sig12(synchronous_baseline(&exp.scenario, &rates)?)
            )?;
        }
        Command::Simulate {
            scenario,
            lambda,
            fraction,
            horizon,
            log,
        } => {
            let exp = ctx.load(&scenario)?;
            let rates = ctx.rates(&exp)?;
            let lambda = match (lambda, fraction) {
                (Some(l), _) => l,
                (None, Some(x)) => x * ctx.region(&exp, &rates, Formulation::MinForm)?.r_max,
                (None, None) => exp.arrivals.lambda,
            };
            let arrival = if lambda == exp.arrivals.lambda {
                exp.arrivals
            } else {
                exp.arrivals.with_lambda(lambda)
            };
            arrival.validate()?;
            let horizon = horizon.unwrap_or(exp.sim.horizon);
            let seed = exp.sim.seeds[0];
            let config = SimConfig {
                checkpoints: exp.sim.checkpoints,
                ..SimConfig::default()
            };
            info!("simulating lambda={lambda} horizon={horizon} seed={seed}");
            let stats = if log {
                let mut logger = TrajectoryLog::new(ctx.create("trajectory.csv")?)?;
                let stats = run_trajectory_with(
                    &exp.scenario,
                    &rates,
                    &arrival,
                    horizon,
                    seed,
                    &config,
                    |ev, q| logger.record(ev, q, &rates),
                )?;
                logger.finish()?;
                stats
            } else {
                run_trajectory_with(
                    &exp.scenario,
                    &rates,
                    &arrival,
                    horizon,
                    seed,
                    &config,
                    |_, _| {},
                )?
            };
            let v = classify_stability(&stats, lambda);
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["lambda", "seed", "horizon", "slope", "delivered", "verdict"])?;
            w.write_record([
                sig12(lambda),
                seed.to_string(),
                horizon.to_string(),
                sig12(v.slope),
                sig12(v.delivered_rate),
                v.verdict.as_str().to_string(),
            ])?;
            w.flush()?;
        }
        Command::Sweep {
            scenario,
            lambdas,
            fractions,
            horizon,
        } => {
            let exp = ctx.load(&scenario)?;
            let rates = ctx.rates(&exp)?;
            let grid = match lambdas {
                Some(l) => l,
                None => {
                    let r_max = ctx.region(&exp, &rates, Formulation::MinForm)?.r_max;
                    fractions.iter().map(|x| x * r_max).collect()
                }
            };
            let config = SimConfig {
                checkpoints: exp.sim.checkpoints,
                ..SimConfig::default()
            };
            let table = sweep_lambda(
                &exp.scenario,
                &rates,
                &exp.arrivals,
                &grid,
                horizon.unwrap_or(exp.sim.horizon),
                &exp.sim.seeds,
                &config,
            )?;
            table.write_csv(ctx.create("sweep.csv")?)?;
            writeln!(out, "lambda,majority")?;
            for (l, v) in &table.majority {
                writeln!(out, "{},{}", sig12(*l), v.as_str())?;
            }
        }
        Command::Figure2 { gammas } => {
            let gammas = parse_gammas(&gammas)?;
            let rows = figure2(&gammas)?;
            write_figure2_csv(&rows, ctx.create("figure2.csv")?)?;
            write_figure2_csv(&rows, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
