//! Seeded replication study: simulate datasets with the sampler, fit them,
//! and summarise the estimates across replicates.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AfcError, Result};
use crate::estimation::{mle, mme, normal_quantile, FitMethod, FitResult, MLE_MIN_N};
use crate::families::FamilyKind;
use crate::model::{AfcModel, Observation};
use crate::rng::derive_seed;
use crate::sampler::{run_chain, ChainConfig};

pub const DEFAULT_REPLICATES: usize = 200;
pub const DEFAULT_BURN_IN: usize = 2000;
pub const DEFAULT_THIN: usize = 5;
/// A cell is flagged when more than this share of replicates failed.
pub const FAILURE_FLAG_SHARE: f64 = 0.05;

pub const PARAMETER_NAMES: [&str; 6] = ["alpha", "beta", "lambda", "gamma", "tau", "rho"];

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut s = NeumaierSum::default();
    values.iter().for_each(|&v| s.add(v));
    let mean = s.value() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let mut ss = NeumaierSum::default();
    values.iter().for_each(|&v| ss.add((v - mean) * (v - mean)));
    (mean, (ss.value() / (n - 1) as f64).sqrt())
}

/// Sample Pearson correlation of the pairs.
pub fn pearson(data: &[Observation]) -> f64 {
    let n = data.len() as f64;
    let mx = data.iter().map(|o| o.x).sum::<f64>() / n;
    let my = data.iter().map(|o| o.y).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for o in data {
        let (dx, dy) = (o.x - mx, o.y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyDesign {
    pub model: AfcModel,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub root_seed: u64,
    pub methods: Vec<FitMethod>,
    pub burn_in: usize,
    pub thin: usize,
}

impl StudyDesign {
    /// Desk-scale defaults: 200 replicates, burn-in 2000, thinning 5, and
    /// both methods where a moment estimator exists.
    pub fn new(model: AfcModel, sample_sizes: Vec<usize>, root_seed: u64) -> Self {
        let methods = if model.family() == FamilyKind::Cauchy {
            vec![FitMethod::Mle]
        } else {
            vec![FitMethod::Mme, FitMethod::Mle]
        };
        Self {
            model,
            sample_sizes,
            replicates: DEFAULT_REPLICATES,
            root_seed,
            methods,
            burn_in: DEFAULT_BURN_IN,
            thin: DEFAULT_THIN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(AfcError::Config(format!(
                "replicates must be at least 2 to estimate standard errors, got {}",
                self.replicates
            )));
        }
        if self.sample_sizes.is_empty() {
            return Err(AfcError::Config("no sample sizes given".into()));
        }
        let mut sizes = self.sample_sizes.clone();
        sizes.sort_unstable();
        if sizes.windows(2).any(|w| w[0] == w[1]) {
            return Err(AfcError::Config("sample sizes must be distinct".into()));
        }
        if sizes[0] < MLE_MIN_N {
            return Err(AfcError::Config(format!(
                "sample sizes must be at least {MLE_MIN_N}"
            )));
        }
        if self.methods.is_empty() {
            return Err(AfcError::Config("no estimation methods given".into()));
        }
        if self.thin == 0 {
            return Err(AfcError::Config("thin must be at least 1".into()));
        }
        let family = self.model.family();
        if family == FamilyKind::Normal {
            return Err(AfcError::UnsupportedFamily {
                family,
                reason: "the normal conditional admits no dependence",
            });
        }
        if family == FamilyKind::Cauchy && self.methods.contains(&FitMethod::Mme) {
            return Err(AfcError::UnsupportedFamily {
                family,
                reason: "no moment estimator exists because the moments are undefined",
            });
        }
        Ok(())
    }
}

/// One output row: a `(n, method, parameter)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub method: FitMethod,
    pub parameter: String,
    pub mean: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Across-replicate mean of the sample Pearson correlation of the data.
    pub pearson_mean: f64,
    pub n_failed: usize,
}

/// Per `(n, method)` bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub method: FitMethod,
    pub n_used: usize,
    pub n_failed: usize,
    /// More than 5% of the replicates failed.
    pub flagged: bool,
    pub pearson_mean: f64,
    /// Mean implied correlation `ρ̂`; absent for Cauchy.
    pub rho_mean: Option<f64>,
    /// `(α, β, λ, γ, τ)` per successful replicate, in replicate order.
    #[serde(skip)]
    pub estimates: Vec<[f64; 5]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub design: StudyDesign,
    pub truth: [f64; 5],
    pub cells: Vec<CellSummary>,
    pub rows: Vec<ReportRow>,
}

struct Replicate {
    n: usize,
    pearson: f64,
    /// One entry per design method; `None` when the fit failed.
    fits: Vec<Option<FitResult>>,
}

fn fit_once(data: &[Observation], model: &AfcModel, method: FitMethod) -> Option<FitResult> {
    let (family, direction) = (model.family(), model.direction());
    let fit = match method {
        FitMethod::Mme => mme(data, family, direction),
        FitMethod::Mle => mle(data, family, direction, None),
    };
    fit.ok().filter(|f| f.converged)
}

/// Simulates one dataset of size `n` for replicate `r`.
pub fn simulate_dataset(design: &StudyDesign, n: usize, r: usize) -> Result<Vec<Observation>> {
    let cfg = ChainConfig::new(n, derive_seed(design.root_seed, n as u64, r as u64))
        .with_burn_in(design.burn_in)
        .with_thin(design.thin);
    Ok(run_chain(&design.model, &cfg)?.draws)
}

pub fn run_study(design: &StudyDesign) -> Result<StudyReport> {
    design.validate()?;
    let tasks: Vec<(usize, usize)> = design
        .sample_sizes
        .iter()
        .flat_map(|&n| (0..design.replicates).map(move |r| (n, r)))
        .collect();
    let replicates: Vec<Replicate> = tasks
        .par_iter()
        .map(|&(n, r)| {
            let data = simulate_dataset(design, n, r)?;
            let fits = design
                .methods
                .iter()
                .map(|&m| fit_once(&data, &design.model, m))
                .collect();
            Ok(Replicate {
                n,
                pearson: pearson(&data),
                fits,
            })
        })
        .collect::<Result<_>>()?;

    let z = normal_quantile(0.975);
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for &n in &design.sample_sizes {
        let reps: Vec<&Replicate> = replicates.iter().filter(|r| r.n == n).collect();
        let pearsons: Vec<f64> = reps.iter().map(|r| r.pearson).collect();
        let pearson_mean = mean_sd(&pearsons).0;
        for (mi, &method) in design.methods.iter().enumerate() {
            let fits: Vec<&FitResult> = reps.iter().filter_map(|r| r.fits[mi].as_ref()).collect();
            let n_failed = reps.len() - fits.len();
            let estimates: Vec<[f64; 5]> = fits.iter().map(|f| f.params.params()).collect();
            let rhos: Vec<f64> = fits.iter().filter_map(|f| f.rho_hat).collect();
            let rho_mean = (!rhos.is_empty()).then(|| mean_sd(&rhos).0);

            let mut columns: Vec<(&str, Vec<f64>)> = (0..5)
                .map(|j| (PARAMETER_NAMES[j], estimates.iter().map(|e| e[j]).collect()))
                .collect();
            if !rhos.is_empty() {
                columns.push((PARAMETER_NAMES[5], rhos));
            }
            for (name, values) in columns {
                let (mean, se) = mean_sd(&values);
                rows.push(ReportRow {
                    n,
                    method,
                    parameter: name.to_string(),
                    mean,
                    se,
                    ci_lo: mean - z * se,
                    ci_hi: mean + z * se,
                    pearson_mean,
                    n_failed,
                });
            }
            cells.push(CellSummary {
                n,
                method,
                n_used: fits.len(),
                n_failed,
                flagged: n_failed as f64 > FAILURE_FLAG_SHARE * reps.len() as f64,
                pearson_mean,
                rho_mean,
                estimates,
            });
        }
    }
    Ok(StudyReport {
        design: design.clone(),
        truth: design.model.params(),
        cells,
        rows,
    })
}

impl StudyReport {
    pub fn row(&self, n: usize, method: FitMethod, parameter: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.method == method && r.parameter == parameter)
    }

    pub fn cell(&self, n: usize, method: FitMethod) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.n == n && c.method == method)
    }

    pub fn is_flagged(&self) -> bool {
        self.cells.iter().any(|c| c.flagged)
    }

    /// CSV with columns `n,method,parameter,mean,se,ci_lo,ci_hi,pearson_mean,n_failed`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "n,method,parameter,mean,se,ci_lo,ci_hi,pearson_mean,n_failed"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.method,
                r.parameter,
                r.mean,
                r.se,
                r.ci_lo,
                r.ci_hi,
                r.pearson_mean,
                r.n_failed
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table: one block per `n`, one line per parameter.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let names = ["alpha", "beta", "lambda", "gamma", "tau"];
        for &n in &self.design.sample_sizes {
            let pc = self
                .rows
                .iter()
                .find(|r| r.n == n)
                .map_or(f64::NAN, |r| r.pearson_mean);
            s.push_str(&format!(
                "n = {n}  (mean Pearson correlation across replicates: {pc:.3})\n"
            ));
            s.push_str(&format!(
                "{:<8}{:>6}{:>10}{:>9}{:>21}\n",
                "param", "method", "mean", "se", "95% CI"
            ));
            for (j, name) in names.iter().enumerate() {
                for &m in &self.design.methods {
                    if let Some(r) = self.row(n, m, name) {
                        s.push_str(&format!(
                            "{:<8}{:>6}{:>10.3}{:>9.3}    ({:>7.3}, {:>7.3})   truth {:.3}\n",
                            name,
                            m.to_string(),
                            r.mean,
                            r.se,
                            r.ci_lo,
                            r.ci_hi,
                            self.truth[j]
                        ));
                    }
                }
            }
            for &m in &self.design.methods {
                if let Some(c) = self.cell(n, m) {
                    let flag = if c.flagged { "  [flagged]" } else { "" };
                    s.push_str(&format!(
                        "{m}: {} used, {} failed{flag}\n",
                        c.n_used, c.n_failed
                    ));
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Median over the five model parameters (and every method present) of
/// `SE(n_small)/SE(n_large)`.
pub fn se_ratio_check(report: &StudyReport, n_small: usize, n_large: usize) -> Result<f64> {
    for n in [n_small, n_large] {
        if !report.design.sample_sizes.contains(&n) {
            return Err(AfcError::Config(format!(
                "sample size {n} is not in the report"
            )));
        }
    }
    let mut ratios = Vec::new();
    for &m in &report.design.methods {
        for name in &PARAMETER_NAMES[..5] {
            if let (Some(a), Some(b)) = (report.row(n_small, m, name), report.row(n_large, m, name))
            {
                let r = a.se / b.se;
                if r.is_finite() {
                    ratios.push(r);
                }
            }
        }
    }
    if ratios.is_empty() {
        return Err(AfcError::Data("no finite standard-error ratios".into()));
    }
    ratios.sort_by(f64::total_cmp);
    let k = ratios.len();
    Ok(if k % 2 == 1 {
        ratios[k / 2]
    } else {
        0.5 * (ratios[k / 2 - 1] + ratios[k / 2])
    })
}
