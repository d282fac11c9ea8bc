//! Command-line front-end for the accelerated failure conditionals model.

pub mod data;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use afc_core::estimation::{aic_compare, compute_moments, mle, mme, FitResult};
use afc_core::harness::{run_study, StudyDesign};
use afc_core::model::rho_max;
use afc_core::quadrature::{hoeffding_covariance, mixed_partial, verify_shift_identity};
use afc_core::sampler::{run_chain, write_csv, ChainConfig};
use afc_core::{AfcError, AfcModel, Direction, FamilyKind, FitMethod, QuadratureSpec};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(
    name = "afc",
    version,
    about = "Weibull accelerated failure conditionals: fit, sample, grid, simulate, check"
)]
pub struct Cli {
    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one or all families to an `x,y` CSV and compare by AIC.
    Fit(FitArgs),
    /// Draw from the model by Metropolis-Hastings.
    Sample(SampleArgs),
    /// Evaluate the joint density on a rectangular grid.
    Grid(GridArgs),
    /// Run the replicated simulation study.
    Simstudy(SimstudyArgs),
    /// Run the validity and numerical identity checks.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Logistic,
    Gumbel,
    Laplace,
    Cauchy,
    Normal,
}

impl From<FamilyArg> for FamilyKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Logistic => FamilyKind::Logistic,
            FamilyArg::Gumbel => FamilyKind::Gumbel,
            FamilyArg::Laplace => FamilyKind::Laplace,
            FamilyArg::Cauchy => FamilyKind::Cauchy,
            FamilyArg::Normal => FamilyKind::Normal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Pos,
    Neg,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Pos => Direction::Positive,
            DirectionArg::Neg => Direction::Negative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitFamily {
    Logistic,
    Gumbel,
    Laplace,
    Cauchy,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitDirection {
    Pos,
    Neg,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mme,
    Mle,
}

fn parse_tau(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("tau must lie in [0, 1], got {v}"));
    }
    Ok(v)
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .or_else(|| s.split_once(','))
        .ok_or_else(|| format!("expected `lo:hi`, got `{s}`"))?;
    let lo: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("bad lower bound `{a}`"))?;
    let hi: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("bad upper bound `{b}`"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("need finite lo < hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

/// Model parameters shared by sample, grid, simstudy and check.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 3.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Dependence parameter in [0, 1].
    #[arg(long, default_value_t = 0.5, value_parser = parse_tau)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = FamilyArg::Logistic)]
    pub family: FamilyArg,
    #[arg(long, value_enum, default_value_t = DirectionArg::Pos)]
    pub direction: DirectionArg,
}

impl ModelArgs {
    pub fn build(&self) -> afc_core::Result<AfcModel> {
        AfcModel::from_params(
            self.family.into(),
            self.alpha,
            self.beta,
            self.lambda,
            self.gamma,
            self.tau,
            self.direction.into(),
        )
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// CSV file with header `x,y`.
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = FitFamily::All)]
    pub family: FitFamily,
    #[arg(long, value_enum, default_value_t = FitDirection::Auto)]
    pub direction: FitDirection,
    /// Skip rows with missing values instead of failing.
    #[arg(long)]
    pub drop_bad_rows: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of retained draws.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Discarded initial steps; 10% of the run when absent.
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, default_value_t = afc_core::sampler::DEFAULT_THIN)]
    pub thin: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// `lo:hi` with lo > 0; the 0.001 and 0.999 Weibull quantiles when absent.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub x_range: Option<(f64, f64)>,
    /// `lo:hi`; gamma ± 8 beta when absent.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub y_range: Option<(f64, f64)>,
    #[arg(long, default_value_t = 50)]
    pub nx: usize,
    #[arg(long, default_value_t = 50)]
    pub ny: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimstudyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 500, 1000])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = afc_core::harness::DEFAULT_REPLICATES, conflicts_with = "full_scale")]
    pub replicates: usize,
    /// Estimation methods; both where a moment estimator exists when absent.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Vec<MethodArg>,
    /// 10000 replicates per sample size.
    #[arg(long)]
    pub full_scale: bool,
    #[arg(long, default_value_t = afc_core::harness::DEFAULT_BURN_IN)]
    pub burn_in: usize,
    #[arg(long, default_value_t = afc_core::harness::DEFAULT_THIN)]
    pub thin: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
}

pub const FULL_SCALE_REPLICATES: usize = 10_000;

/// Runs a parsed command line; errors are reported by the caller.
pub fn run(cli: Cli) -> Result<ExitCode> {
    let ctx = Output {
        path: cli.out.clone(),
        format: cli.format,
    };
    match cli.command {
        Command::Fit(args) => cmd_fit(&args, &ctx),
        Command::Sample(args) => cmd_sample(&args, cli.seed, &ctx),
        Command::Grid(args) => cmd_grid(&args, &ctx),
        Command::Simstudy(args) => cmd_simstudy(&args, cli.seed, &ctx),
        Command::Check(args) => cmd_check(&args, &ctx),
    }
}

struct Output {
    path: Option<PathBuf>,
    format: Format,
}

impl Output {
    fn open(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn to_file(&self) -> bool {
        self.path.is_some()
    }
}

fn write_json(mut w: impl Write, value: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

enum FitRow {
    Fitted {
        fit: FitResult,
        selected: bool,
    },
    Failed {
        family: FamilyKind,
        method: FitMethod,
        reason: String,
    },
    Skipped {
        family: FamilyKind,
        reason: String,
    },
}

const FIT_ORDER: [FamilyKind; 4] = [
    FamilyKind::Logistic,
    FamilyKind::Laplace,
    FamilyKind::Cauchy,
    FamilyKind::Gumbel,
];

fn cmd_fit(args: &FitArgs, ctx: &Output) -> Result<ExitCode> {
    let dataset = data::read_csv_path(&args.data, args.drop_bad_rows)?;
    if dataset.dropped > 0 {
        eprintln!("dropped {} rows with missing values", dataset.dropped);
    }
    let obs = &dataset.observations;
    if obs.len() < afc_core::estimation::MLE_MIN_N {
        bail!(
            "need at least {} observations, got {}",
            afc_core::estimation::MLE_MIN_N,
            obs.len()
        );
    }
    let direction = match args.direction {
        FitDirection::Pos => Direction::Positive,
        FitDirection::Neg => Direction::Negative,
        FitDirection::Auto => {
            let d = Direction::from_sign(compute_moments(obs)?.s12);
            eprintln!("direction resolved to {d}");
            d
        }
    };
    let families: Vec<FamilyKind> = match args.family {
        FitFamily::All => FIT_ORDER.to_vec(),
        FitFamily::Logistic => vec![FamilyKind::Logistic],
        FitFamily::Gumbel => vec![FamilyKind::Gumbel],
        FitFamily::Laplace => vec![FamilyKind::Laplace],
        FitFamily::Cauchy => vec![FamilyKind::Cauchy],
    };
    if args.family == FitFamily::Gumbel && direction == Direction::Negative {
        bail!(AfcError::NegativeDependenceUnsupported(FamilyKind::Gumbel));
    }

    let mut rows = Vec::new();
    let mut mle_fits = Vec::new();
    for family in families {
        if family == FamilyKind::Gumbel && direction == Direction::Negative {
            rows.push(FitRow::Skipped {
                family,
                reason: "skipped: negative correlation".into(),
            });
            continue;
        }
        let mut init = None;
        if family.has_moments() {
            match mme(obs, family, direction) {
                Ok(fit) => {
                    init = Some(fit.params);
                    rows.push(FitRow::Fitted {
                        fit,
                        selected: false,
                    });
                }
                Err(e) => rows.push(FitRow::Failed {
                    family,
                    method: FitMethod::Mme,
                    reason: e.to_string(),
                }),
            }
        }
        match mle(obs, family, direction, init) {
            Ok(fit) => {
                mle_fits.push(fit.clone());
                rows.push(FitRow::Fitted {
                    fit,
                    selected: false,
                });
            }
            Err(e) => rows.push(FitRow::Failed {
                family,
                method: FitMethod::Mle,
                reason: e.to_string(),
            }),
        }
    }
    if !mle_fits.is_empty() {
        let ranking = aic_compare(&mle_fits)?;
        let best = &mle_fits[ranking[0].index];
        for row in &mut rows {
            if let FitRow::Fitted { fit, selected } = row {
                *selected =
                    fit.method == FitMethod::Mle && fit.params.family() == best.params.family();
            }
        }
    }

    let table = fit_table(&rows, obs.len(), direction);
    match (ctx.to_file(), ctx.format) {
        (false, Format::Json) => write_json(ctx.open()?, &fit_json(&rows))?,
        (false, Format::Csv) => {
            print!("{table}");
        }
        (true, format) => {
            print!("{table}");
            let mut w = ctx.open()?;
            match format {
                Format::Json => write_json(w, &fit_json(&rows))?,
                Format::Csv => {
                    write_fit_csv(&mut w, &rows)?;
                    w.flush()?;
                }
            }
        }
    }
    let any_fit = rows.iter().any(|r| matches!(r, FitRow::Fitted { .. }));
    Ok(if any_fit {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn fit_table(rows: &[FitRow], n: usize, direction: Direction) -> String {
    let mut s = format!("n = {n}, direction = {direction}\n");
    s.push_str(&format!(
        "{:<9}{:>7}{:>10}{:>10}{:>10}{:>10}{:>10}{:>14}{:>16}\n",
        "family", "method", "alpha", "beta", "lambda", "gamma", "tau", "loglik", "AIC"
    ));
    for row in rows {
        match row {
            FitRow::Fitted { fit, selected } => {
                let p = fit.params.params();
                let aic = if *selected {
                    format!("**{:.3}**", fit.aic)
                } else {
                    format!("{:.3}", fit.aic)
                };
                let mut line = format!(
                    "{:<9}{:>7}{:>10.4}{:>10.4}{:>10.4}{:>10.4}{:>10.4}{:>14.3}{:>16}",
                    fit.params.family().name(),
                    fit.method.to_string(),
                    p[0],
                    p[1],
                    p[2],
                    p[3],
                    p[4],
                    fit.loglik,
                    aic
                );
                if !fit.converged {
                    line.push_str("  (not converged)");
                }
                for flag in &fit.flags {
                    line.push_str(&format!(
                        "  [{}]",
                        serde_json::to_value(flag)
                            .unwrap_or_default()
                            .as_str()
                            .unwrap_or("")
                    ));
                }
                s.push_str(&line);
                s.push('\n');
            }
            FitRow::Failed {
                family,
                method,
                reason,
            } => {
                s.push_str(&format!(
                    "{:<9}{:>7}  failed: {reason}\n",
                    family.name(),
                    method.to_string()
                ));
            }
            FitRow::Skipped { family, reason } => {
                s.push_str(&format!("{:<9}{:>7}  {reason}\n", family.name(), "-"));
            }
        }
    }
    s
}

const FIT_COLUMNS: &str =
    "family,method,alpha,beta,lambda,gamma,tau,loglik,aic,rho_hat,converged,selected,status";

fn write_fit_csv(w: &mut dyn Write, rows: &[FitRow]) -> Result<()> {
    writeln!(w, "{FIT_COLUMNS}")?;
    for row in rows {
        match row {
            FitRow::Fitted { fit, selected } => {
                let p = fit.params.params();
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{},{},ok",
                    fit.params.family().name(),
                    fit.method,
                    p[0],
                    p[1],
                    p[2],
                    p[3],
                    p[4],
                    fit.loglik,
                    fit.aic,
                    opt(fit.rho_hat),
                    fit.converged,
                    selected
                )?;
            }
            FitRow::Failed {
                family,
                method,
                reason,
            } => {
                writeln!(
                    w,
                    "{},{method},,,,,,,,,false,false,\"failed: {}\"",
                    family.name(),
                    reason.replace('"', "'")
                )?;
            }
            FitRow::Skipped { family, reason } => {
                writeln!(w, "{},,,,,,,,,,false,false,{reason}", family.name())?;
            }
        }
    }
    Ok(())
}

fn fit_json(rows: &[FitRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|row| match row {
                FitRow::Fitted { fit, selected } => {
                    let p = fit.params.params();
                    json!({
                        "family": fit.params.family().name(),
                        "method": fit.method.to_string(),
                        "alpha": p[0], "beta": p[1], "lambda": p[2], "gamma": p[3], "tau": p[4],
                        "loglik": fit.loglik,
                        "aic": fit.aic,
                        "rho_hat": fit.rho_hat,
                        "converged": fit.converged,
                        "selected": selected,
                        "status": "ok",
                    })
                }
                FitRow::Failed {
                    family,
                    method,
                    reason,
                } => json!({
                    "family": family.name(),
                    "method": method.to_string(),
                    "converged": false,
                    "selected": false,
                    "status": format!("failed: {reason}"),
                }),
                FitRow::Skipped { family, reason } => json!({
                    "family": family.name(),
                    "converged": false,
                    "selected": false,
                    "status": reason,
                }),
            })
            .collect(),
    )
}

fn cmd_sample(args: &SampleArgs, seed: u64, ctx: &Output) -> Result<ExitCode> {
    let model = args.model.build()?;
    let mut cfg = ChainConfig::new(args.n, seed).with_thin(args.thin);
    if let Some(b) = args.burn_in {
        cfg = cfg.with_burn_in(b);
    }
    let out = run_chain(&model, &cfg)?;
    eprintln!("acceptance rate: {}", out.acceptance_rate);
    let mut w = ctx.open()?;
    match ctx.format {
        Format::Csv => {
            write_csv(&out.draws, &mut w)?;
            w.flush()?;
        }
        Format::Json => {
            let draws: Vec<Value> = out
                .draws
                .iter()
                .map(|o| json!({"x": o.x, "y": o.y}))
                .collect();
            write_json(w, &Value::Array(draws))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_grid(args: &GridArgs, ctx: &Output) -> Result<ExitCode> {
    if args.nx < 2 || args.ny < 2 {
        bail!(
            "nx and ny must be at least 2, got {} and {}",
            args.nx,
            args.ny
        );
    }
    let model = args.model.build()?;
    let default = model.default_grid();
    let x_range = args
        .x_range
        .unwrap_or((default.xs[0], default.xs[default.xs.len() - 1]));
    if x_range.0 <= 0.0 {
        bail!(
            "x range must lie in (0, inf), got lower bound {}",
            x_range.0
        );
    }
    let y_range = args.y_range.unwrap_or((
        model.gamma() - 8.0 * model.beta(),
        model.gamma() + 8.0 * model.beta(),
    ));
    let grid = afc_core::model::Grid::linspace(x_range, y_range, args.nx, args.ny);

    let mut w = ctx.open()?;
    let mut cells = Vec::new();
    if ctx.format == Format::Csv {
        writeln!(w, "x,y,density")?;
    }
    for &x in &grid.xs {
        for &y in &grid.ys {
            let d = model.joint_density(x, y)?;
            match ctx.format {
                Format::Csv => writeln!(w, "{x},{y},{d}")?,
                Format::Json => cells.push(json!({"x": x, "y": y, "density": d})),
            }
        }
    }
    match ctx.format {
        Format::Csv => w.flush()?,
        Format::Json => write_json(w, &Value::Array(cells))?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simstudy(args: &SimstudyArgs, seed: u64, ctx: &Output) -> Result<ExitCode> {
    let model = args.model.build()?;
    let mut design = StudyDesign::new(model, args.sizes.clone(), seed);
    design.replicates = if args.full_scale {
        FULL_SCALE_REPLICATES
    } else {
        args.replicates
    };
    if !args.methods.is_empty() {
        design.methods = args
            .methods
            .iter()
            .map(|m| match m {
                MethodArg::Mme => FitMethod::Mme,
                MethodArg::Mle => FitMethod::Mle,
            })
            .collect();
        design.methods.dedup();
    }
    design.burn_in = args.burn_in;
    design.thin = args.thin;
    design.validate()?;
    let report = run_study(&design)?;

    let summary = report.summary();
    if ctx.to_file() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    let mut w = ctx.open()?;
    match ctx.format {
        Format::Csv => report.write_csv(&mut w)?,
        Format::Json => writeln!(w, "{}", report.to_json())?,
    }
    w.flush()?;
    if report.is_flagged() {
        eprintln!("warning: more than 5% of fits failed in at least one cell");
    }
    Ok(ExitCode::SUCCESS)
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub status: CheckStatus,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

impl CheckStatus {
    fn label(self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skip => "SKIP",
        }
    }
}

pub const SHIFT_TOLERANCE: f64 = 1e-6;
pub const HOEFFDING_TOLERANCE: f64 = 1e-4;
pub const MIXED_PARTIAL_TOLERANCE: f64 = 1e-4;

fn verdict(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

fn from_result(
    name: &'static str,
    tol: f64,
    r: afc_core::Result<f64>,
    detail: impl FnOnce(f64) -> String,
) -> CheckLine {
    match r {
        Ok(res) => CheckLine {
            name,
            status: verdict(res.abs() <= tol),
            residual: Some(res),
            tolerance: Some(tol),
            detail: detail(res),
        },
        Err(e) => CheckLine {
            name,
            status: CheckStatus::Fail,
            residual: None,
            tolerance: Some(tol),
            detail: e.to_string(),
        },
    }
}

/// Largest relative gap between the closed-form density and a central
/// difference of the joint survival function over a quantile grid.
pub fn mixed_partial_gap(model: &AfcModel, points: usize) -> afc_core::Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let q = (i as f64 + 0.5) / points as f64;
        let x = model.marginal().quantile(0.02 + 0.96 * q);
        let rate =
            1.0 / x + model.marginal().hazard(x)? + (model.mu_deriv(x).abs() + 1.0) / model.beta();
        let h = 2e-3 / rate;
        for j in 0..points {
            // odd offsets keep the stencil off the Laplace ridge at t = 0
            let t = -3.0 + 6.0 * (j as f64 + 0.5) / points as f64 + 0.0137;
            let y = model.mu(x) + model.beta() * t;
            let exact = model.joint_density(x, y)?;
            let fd = mixed_partial(model, x, y, h)?;
            let gap = (fd - exact).abs() / exact.abs().max(1e-300);
            if exact > 1e-12 {
                worst = worst.max(gap);
            }
        }
    }
    Ok(worst)
}

/// Runs every check for the given parameters. A constructor rejection is
/// reported as a single failing line.
pub fn run_checks(args: &ModelArgs) -> Vec<CheckLine> {
    let model = match args.build() {
        Ok(m) => m,
        Err(e) => {
            return vec![CheckLine {
                name: "constructor",
                status: CheckStatus::Fail,
                residual: None,
                tolerance: None,
                detail: e.to_string(),
            }]
        }
    };
    let mut lines = Vec::new();
    let spec = QuadratureSpec::default();

    let report = model.validate(&model.default_grid());
    lines.push(CheckLine {
        name: "validity",
        status: verdict(report.is_valid()),
        residual: Some(report.min_density),
        tolerance: None,
        detail: format!(
            "{} grid points, min density {:e} at ({}, {}), {} negative",
            report.points,
            report.min_density,
            report.argmin.0,
            report.argmin.1,
            report.negative.len()
        ),
    });

    let x_med = model.marginal().quantile(0.5);
    let mu = model.mu(x_med);
    lines.push(from_result(
        "shift_identity",
        SHIFT_TOLERANCE,
        verify_shift_identity(model.family(), model.beta(), mu, model.gamma(), &spec),
        |r| format!("mu = {mu}, gamma = {}, residual {r:e}", model.gamma()),
    ));

    if model.family().has_moments() {
        let res = model
            .covariance()
            .and_then(|closed| hoeffding_covariance(&model, &spec).map(|num| (num, closed)));
        lines.push(match res {
            Ok((num, closed)) => CheckLine {
                name: "hoeffding",
                status: verdict((num - closed).abs() <= HOEFFDING_TOLERANCE),
                residual: Some(num - closed),
                tolerance: Some(HOEFFDING_TOLERANCE),
                detail: format!(
                    "numeric {num}, closed form {closed}, residual {:e}",
                    (num - closed).abs()
                ),
            },
            Err(e) => CheckLine {
                name: "hoeffding",
                status: CheckStatus::Fail,
                residual: None,
                tolerance: Some(HOEFFDING_TOLERANCE),
                detail: e.to_string(),
            },
        });
    } else {
        lines.push(CheckLine {
            name: "hoeffding",
            status: CheckStatus::Skip,
            residual: None,
            tolerance: None,
            detail: format!("moments undefined for the {} family", model.family()),
        });
    }

    lines.push(from_result(
        "mixed_partial",
        MIXED_PARTIAL_TOLERANCE,
        mixed_partial_gap(&model, 10),
        |r| format!("max relative gap {r:e} over a 10x10 grid"),
    ));

    if let Ok(bound) = rho_max(model.family(), model.lambda()) {
        let rho = model.correlation().unwrap_or(f64::NAN);
        lines.push(CheckLine {
            name: "correlation_bound",
            status: verdict(rho.abs() <= bound + 1e-12),
            residual: Some(bound - rho.abs()),
            tolerance: None,
            detail: format!("rho {rho}, bound {bound}"),
        });
    }
    lines
}

fn cmd_check(args: &CheckArgs, ctx: &Output) -> Result<ExitCode> {
    let lines = run_checks(&args.model);
    for l in &lines {
        println!("{} {}: {}", l.status.label(), l.name, l.detail);
    }
    if let Some(path) = &ctx.path {
        write_check_file(path, ctx.format, &lines)?;
    }
    let ok = lines.iter().all(|l| l.status != CheckStatus::Fail);
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn write_check_file(path: &Path, format: Format, lines: &[CheckLine]) -> Result<()> {
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    match format {
        Format::Csv => {
            writeln!(w, "check,status,residual,tolerance,detail")?;
            for l in lines {
                writeln!(
                    w,
                    "{},{},{},{},\"{}\"",
                    l.name,
                    l.status.label(),
                    opt(l.residual),
                    opt(l.tolerance),
                    l.detail.replace('"', "'")
                )?;
            }
            w.flush()?;
        }
        Format::Json => {
            let v: Vec<Value> = lines
                .iter()
                .map(|l| {
                    json!({
                        "check": l.name,
                        "status": l.status.label(),
                        "residual": l.residual,
                        "tolerance": l.tolerance,
                        "detail": l.detail,
                    })
                })
                .collect();
            write_json(w, &Value::Array(v))?;
        }
    }
    Ok(())
}
