//! Command-line driver. `run` returns the process exit code: 0 when every
//! check passes, 1 when a check fails, 2 on usage, input or I/O errors.

use crate::augmented::{lift, LiftOptions};
use crate::error::{Error, Result};
use crate::fixtures::{build, FixtureOptions};
use crate::io::{read_json, read_pair, to_json, write_json, PairFile};
use crate::minimal_flux::minimal_pair;
use crate::superposition::{represent, split_d, SuperpositionMeasure};
use crate::suite::{roundtrip_stats, run_suite};
use crate::weak_form::{ce_residual, ce_residual_exact};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "ceflux", version, about = "Verification pipelines for continuity equations with singular flux")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Pair JSON with mu, nu, mu0 and horizon.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Built-in example id, e.g. 7.1 or 7.4(10).
    #[arg(long)]
    pub example: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Continuity-equation residuals against a tensor B-spline basis.
    CeVerify {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 16)]
        basis_grid: usize,
        /// Nodes per Lebesgue factor when discretizing.
        #[arg(long, default_value_t = 100)]
        res: usize,
        /// Bound on max_abs of the discretized residual.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimal submeasure of the singular flux by linear programming.
    MinimalFlux {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 16)]
        basis_grid: usize,
        #[arg(long, default_value_t = 16)]
        res: usize,
        #[arg(long, default_value_t = 1e-8)]
        eps_con: f64,
        #[arg(long, default_value_t = 1e-9)]
        eps_loc: f64,
        /// Also require the objective to stay below this value.
        #[arg(long)]
        max_objective: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mollify, integrate augmented characteristics and check the lift.
    Lift {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        grid: f64,
        #[arg(long, default_value_t = 1e-3)]
        ds: f64,
        #[arg(long, default_value_t = 4.0)]
        smax: f64,
        #[arg(long, default_value_t = 400)]
        starts: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        basis_grid: usize,
        #[arg(long, default_value_t = 5e-2)]
        marginal_tol: f64,
        #[arg(long, default_value_t = 1e-4)]
        inversion_tol: f64,
        #[arg(long, default_value_t = 5e-2)]
        residual_tol: f64,
        /// CSV dump of the trajectories: curve, s, t, x...
        #[arg(long)]
        trajectories: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a superposition ensemble with (mu, nu).
    Superpose {
        #[command(flatten)]
        source: Source,
        /// Ensemble JSON; defaults to the example's own ensemble.
        #[arg(long)]
        ensemble: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        curves: usize,
        #[arg(long, default_value_t = 16)]
        basis_grid: usize,
        #[arg(long, default_value_t = 2e-2)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Round trips between unit-speed curves and ABV curves.
    Roundtrip {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write an example's measures and ensembles as JSON files.
    Example {
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = 200)]
        curves: usize,
        #[arg(long)]
        emit: PathBuf,
    },
    /// Run the whole verification suite.
    Report {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("--{name} must be positive")))
    }
}

fn load(source: &Source, curves: usize) -> Result<(PairFile, Option<SuperpositionMeasure>)> {
    match (&source.input, &source.example) {
        (Some(p), _) => Ok((read_pair(p)?, None)),
        (None, Some(id)) => {
            let fx = build(id, &FixtureOptions { m_curves: curves, ..Default::default() })?;
            Ok((PairFile::from_fixture(&fx), fx.eta))
        }
        (None, None) => Err(Error::Invalid("need --input or --example".into())),
    }
}

fn emit<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            std::io::stdout().write_all(to_json(value)?.as_bytes())?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CeVerifyReport {
    exact: crate::weak_form::ResidualReport,
    discretized: crate::weak_form::ResidualReport,
    atoms: usize,
    tol: f64,
    pass: bool,
}

#[derive(Serialize)]
struct MinimalReport {
    lambda: Vec<f64>,
    singular: Vec<bool>,
    objective: f64,
    tv_singular: f64,
    max_violation: f64,
    is_submeasure: bool,
    eps_con: f64,
    pass: bool,
}

#[derive(Serialize)]
struct LiftFile<'a> {
    options: &'a LiftOptions,
    report: &'a crate::augmented::LiftReport,
    pass: bool,
}

#[derive(Serialize)]
struct SuperposeReport {
    representation: crate::superposition::RepresentationReport,
    d_plus_flux_mass: f64,
    d_zero_flux_mass: f64,
    pass: bool,
}

#[derive(Serialize)]
struct RoundtripReport {
    n: usize,
    seed: u64,
    stats: crate::suite::RoundtripStats,
    tol: f64,
    pass: bool,
}

fn write_trajectories(path: &Path, trajs: &[crate::augmented::Trajectory]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let d = trajs.first().map(|t| t.start().len()).unwrap_or(1) - 1;
    write!(f, "curve,s,t")?;
    for c in 1..=d {
        write!(f, ",x{c}")?;
    }
    writeln!(f)?;
    for (j, tr) in trajs.iter().enumerate() {
        for (s, y) in tr.s.iter().zip(&tr.states) {
            write!(f, "{j},{s}")?;
            for v in y {
                write!(f, ",{v}")?;
            }
            writeln!(f)?;
        }
    }
    f.flush()?;
    Ok(())
}

/// Executes one parsed command; Ok(pass) on completion.
pub fn execute(cmd: &Command) -> Result<bool> {
    match cmd {
        Command::CeVerify {
            source,
            basis_grid,
            res,
            tol,
            out,
        } => {
            positive("tol", *tol)?;
            let (p, _) = load(source, 1)?;
            let basis = p.basis(*basis_grid)?;
            let exact = ce_residual_exact(&p.mu, &p.nu, &p.mu0, &basis, *tol)?;
            let (mu, nu, mu0) = (p.mu.discretize(*res)?, p.nu.discretize(*res)?, p.mu0.discretize(*res)?);
            let discretized = ce_residual(&mu, &nu, &mu0, &basis, *tol)?;
            let pass = discretized.max_abs <= *tol && exact.max_abs <= *tol;
            emit(
                out,
                &CeVerifyReport {
                    exact,
                    discretized,
                    atoms: mu.len() + nu.len() + mu0.len(),
                    tol: *tol,
                    pass,
                },
            )?;
            Ok(pass)
        }
        Command::MinimalFlux {
            source,
            basis_grid,
            res,
            eps_con,
            eps_loc,
            max_objective,
            out,
        } => {
            positive("eps-con", *eps_con)?;
            positive("eps-loc", *eps_loc)?;
            let (p, _) = load(source, 1)?;
            let basis = p.basis(*basis_grid)?;
            let r = minimal_pair(&p.mu.discretize(*res)?, &p.nu.discretize(*res)?, &basis, *eps_loc, *eps_con)?;
            let pass = r.is_submeasure
                && r.max_violation <= eps_con * (1.0 + 1e-6)
                && max_objective.is_none_or(|m| r.objective <= m);
            emit(
                out,
                &MinimalReport {
                    lambda: r.lambda,
                    singular: r.singular,
                    objective: r.objective,
                    tv_singular: r.tv_singular,
                    max_violation: r.max_violation,
                    is_submeasure: r.is_submeasure,
                    eps_con: *eps_con,
                    pass,
                },
            )?;
            Ok(pass)
        }
        Command::Lift {
            source,
            eps,
            grid,
            ds,
            smax,
            starts,
            seed,
            basis_grid,
            marginal_tol,
            inversion_tol,
            residual_tol,
            trajectories,
            out,
        } => {
            for (n, v) in [
                ("eps", *eps),
                ("grid", *grid),
                ("ds", *ds),
                ("smax", *smax),
                ("marginal-tol", *marginal_tol),
                ("inversion-tol", *inversion_tol),
                ("residual-tol", *residual_tol),
            ] {
                positive(n, v)?;
            }
            let (p, _) = load(source, 1)?;
            let res = (1.0 / grid).ceil() as usize;
            let opts = LiftOptions {
                eps: *eps,
                h: *grid,
                ds: *ds,
                s_max: *smax,
                starts: *starts,
                seed: *seed,
                knots: *basis_grid,
                tight_t: 0.075 * smax,
                tight_s: 0.75 * smax,
            };
            let mu = p.mu.discretize_with(res, 2)?;
            let nu = p.nu.discretize_with(res, res)?;
            let mu0 = p.mu0.discretize(2)?;
            let r = lift(&mu, &nu, &mu0, p.horizon, p.mu.norm, &opts)?;
            if let Some(path) = trajectories {
                write_trajectories(path, &r.trajectories)?;
            }
            let pass = r.unit_norm_defect <= 1e-12
                && r.marginal <= *marginal_tol
                && r.inversion <= *inversion_tol
                && r.tight_mass <= r.tight_bound + 1e-3
                && r.augmented <= *residual_tol;
            emit(
                out,
                &LiftFile {
                    options: &opts,
                    report: &r,
                    pass,
                },
            )?;
            Ok(pass)
        }
        Command::Superpose {
            source,
            ensemble,
            curves,
            basis_grid,
            tol,
            out,
        } => {
            positive("tol", *tol)?;
            let (p, own) = load(source, *curves)?;
            let eta = match ensemble {
                Some(path) => {
                    let e: SuperpositionMeasure = read_json(path)?;
                    SuperpositionMeasure::new(e.curves, e.weights, e.s_max, e.s_step)?
                }
                None => own.ok_or_else(|| Error::Invalid("no ensemble: pass --ensemble".into()))?,
            };
            let basis = p.basis(*basis_grid)?;
            let tv = p.mu.plus(&p.nu.abs()?)?;
            let representation = represent(&eta, &p.mu, &p.nu, Some(&tv), &basis, *tol)?;
            let split = split_d(&eta, &basis);
            let pass = representation.pass;
            emit(
                out,
                &SuperposeReport {
                    representation,
                    d_plus_flux_mass: split.mass_plus,
                    d_zero_flux_mass: split.mass_zero,
                    pass,
                },
            )?;
            Ok(pass)
        }
        Command::Roundtrip { n, seed, tol, out } => {
            positive("tol", *tol)?;
            let stats = roundtrip_stats(*n, *seed)?;
            let pass = stats.lip_roundtrip <= *tol && stats.abv_roundtrip <= *tol && stats.invariants;
            emit(
                out,
                &RoundtripReport {
                    n: *n,
                    seed: *seed,
                    stats,
                    tol: *tol,
                    pass,
                },
            )?;
            Ok(pass)
        }
        Command::Example { id, curves, emit: dir } => {
            let fx = build(id, &FixtureOptions { m_curves: *curves, ..Default::default() })?;
            let stem = fx.id.replace('(', "_").replace(')', "");
            write_json(&dir.join(format!("{stem}_pair.json")), &PairFile::from_fixture(&fx))?;
            if let Some(e) = &fx.eta {
                write_json(&dir.join(format!("{stem}_eta.json")), e)?;
            }
            if let Some(e) = &fx.alt_eta {
                write_json(&dir.join(format!("{stem}_alt_eta.json")), e)?;
            }
            #[derive(Serialize)]
            struct Meta<'a> {
                id: &'a str,
                expectations: &'a [crate::fixtures::Expectation],
                metadata: &'a std::collections::BTreeMap<String, String>,
                minimal: bool,
            }
            write_json(
                &dir.join(format!("{stem}_meta.json")),
                &Meta {
                    id: &fx.id,
                    expectations: &fx.expectations,
                    metadata: &fx.metadata,
                    minimal: fx.minimal,
                },
            )?;
            Ok(true)
        }
        Command::Report { seed, out } => {
            let r = run_suite(*seed)?;
            emit(out, &r)?;
            Ok(r.pass)
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
