//! Method-of-moments and maximum-likelihood fitting, AIC ranking and Wald
//! intervals.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{AfcError, Result};
use crate::families::{FamilyKind, WeibullParams, EULER_MASCHERONI};
use crate::model::{log_likelihood_unchecked, AfcModel, DependenceSpec, Direction, Observation};
use crate::optim::{nelder_mead_with_restart, NelderMeadOptions};

/// Number of free parameters `(α, β, λ, γ, τ)`.
pub const N_PARAMS: usize = 5;

const LN_LAMBDA_LO: f64 = -2.995_732_273_553_991; // ln 0.05
const LN_LAMBDA_HI: f64 = 3.912_023_005_428_146; // ln 50

/// Smallest sample accepted by [`mle`].
pub const MLE_MIN_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub m1: f64,
    pub m2: f64,
    pub s1: f64,
    pub s2: f64,
    pub s12: f64,
}

/// Means, variances and covariance with the `1/n` convention.
pub fn compute_moments(data: &[Observation]) -> Result<SampleMoments> {
    if data.len() < 2 {
        return Err(AfcError::Data(format!(
            "need at least 2 observations, got {}",
            data.len()
        )));
    }
    let n = data.len() as f64;
    let m1 = data.iter().map(|o| o.x).sum::<f64>() / n;
    let m2 = data.iter().map(|o| o.y).sum::<f64>() / n;
    let (mut s1, mut s2, mut s12) = (0.0, 0.0, 0.0);
    for o in data {
        let (dx, dy) = (o.x - m1, o.y - m2);
        s1 += dx * dx;
        s2 += dy * dy;
        s12 += dx * dy;
    }
    Ok(SampleMoments {
        m1,
        m2,
        s1: s1 / n,
        s2: s2 / n,
        s12: s12 / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FitMethod {
    #[serde(rename = "MME")]
    Mme,
    #[serde(rename = "MLE")]
    Mle,
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMethod::Mme => "MME",
            FitMethod::Mle => "MLE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFlag {
    /// The moment inversion for `τ` exceeded 1 and was clipped.
    TauClipped,
    /// `direction·s12 < 0`: `τ` was set to 0.
    TauSignMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: AfcModel,
    pub loglik: f64,
    pub aic: f64,
    pub rho_hat: Option<f64>,
    pub method: FitMethod,
    pub converged: bool,
    pub iterations: usize,
    pub flags: Vec<FitFlag>,
    /// Log-likelihood at the starting point of the optimizer.
    pub init_loglik: Option<f64>,
    pub n: usize,
    pub data_fingerprint: u64,
}

impl FitResult {
    fn build(
        params: AfcModel,
        data: &[Observation],
        method: FitMethod,
        converged: bool,
        iterations: usize,
        flags: Vec<FitFlag>,
        init_loglik: Option<f64>,
    ) -> Self {
        let loglik = log_likelihood_unchecked(&params, data);
        Self {
            params,
            loglik,
            aic: aic(loglik),
            rho_hat: params.correlation().ok(),
            method,
            converged,
            iterations,
            flags,
            init_loglik,
            n: data.len(),
            data_fingerprint: fingerprint(data),
        }
    }
}

/// `2k − 2ℓ` with `k = 5`.
pub fn aic(loglik: f64) -> f64 {
    2.0 * N_PARAMS as f64 - 2.0 * loglik
}

/// FNV-1a hash of the bit patterns of the data, used to tell datasets apart.
pub fn fingerprint(data: &[Observation]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |v: u64| {
        for byte in v.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(data.len() as u64);
    for o in data {
        feed(o.x.to_bits());
        feed(o.y.to_bits());
    }
    h
}

fn check_data(data: &[Observation]) -> Result<()> {
    for (i, o) in data.iter().enumerate() {
        o.check()
            .map_err(|e| AfcError::Data(format!("observation {}: {e}", i + 1)))?;
    }
    Ok(())
}

/// Squared coefficient of variation of a Weibull with shape `λ`.
fn weibull_cv2(lambda: f64) -> f64 {
    (ln_gamma(1.0 + 2.0 / lambda) - 2.0 * ln_gamma(1.0 + 1.0 / lambda)).exp() - 1.0
}

/// Weibull `(α, λ)` matching mean `m1` and variance `s1`. `λ` is found by
/// bisection on `ln λ ∈ [ln 0.05, ln 50]`.
pub fn weibull_mme(m1: f64, s1: f64) -> Result<WeibullParams> {
    if !(m1 > 0.0 && m1.is_finite()) {
        return Err(AfcError::Data(format!(
            "mean of x must be positive, got {m1}"
        )));
    }
    if !(s1 > 0.0 && s1.is_finite()) {
        return Err(AfcError::Data(format!(
            "variance of x must be positive, got {s1}"
        )));
    }
    let target = s1 / (m1 * m1);
    let (cv_hi, cv_lo) = (
        weibull_cv2(LN_LAMBDA_LO.exp()),
        weibull_cv2(LN_LAMBDA_HI.exp()),
    );
    if !(target <= cv_hi && target >= cv_lo) {
        return Err(AfcError::Data(format!(
            "coefficient of variation of x ({}) outside the range reachable for shapes in [0.05, 50]",
            target.sqrt()
        )));
    }
    let (mut lo, mut hi) = (LN_LAMBDA_LO, LN_LAMBDA_HI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // CV² decreases in λ
        if weibull_cv2(mid.exp()) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = (0.5 * (lo + hi)).exp();
    WeibullParams::new(gamma(1.0 + 1.0 / lambda) / m1, lambda)
}

/// Inverts the five moment equations; also returns the `τ` flags.
pub fn mme_from_moments(
    m: &SampleMoments,
    family: FamilyKind,
    direction: Direction,
) -> Result<(AfcModel, Vec<FitFlag>)> {
    let (beta, gamma_loc) = match family {
        FamilyKind::Cauchy => {
            return Err(AfcError::UnsupportedFamily {
                family,
                reason: "no moment estimator exists because the moments are undefined",
            })
        }
        FamilyKind::Normal => {
            return Err(AfcError::UnsupportedFamily {
                family,
                reason: "the normal conditional admits no dependence",
            })
        }
        FamilyKind::Gumbel if direction == Direction::Negative => {
            return Err(AfcError::NegativeDependenceUnsupported(family))
        }
        FamilyKind::Logistic => {
            let b = (3.0 * m.s2 / (PI * PI)).sqrt();
            (b, m.m2)
        }
        FamilyKind::Gumbel => {
            let b = (6.0 * m.s2 / (PI * PI)).sqrt();
            (b, m.m2 - b * EULER_MASCHERONI)
        }
        FamilyKind::Laplace => ((m.s2 / 2.0).sqrt(), m.m2),
    };
    if !(m.s2 > 0.0) {
        return Err(AfcError::Data(format!(
            "variance of y must be positive, got {}",
            m.s2
        )));
    }
    let w = weibull_mme(m.m1, m.s1)?;
    let (alpha, lambda) = (w.alpha(), w.lambda());
    let raw = direction.sign() * alpha * lambda * m.s12 / (beta * gamma(1.0 + 1.0 / lambda));
    let mut flags = Vec::new();
    let tau = if raw < 0.0 {
        flags.push(FitFlag::TauSignMismatch);
        0.0
    } else {
        let t = raw.powf(1.0 / lambda);
        if t > 1.0 {
            flags.push(FitFlag::TauClipped);
            1.0
        } else {
            t
        }
    };
    let model = AfcModel::new(
        w,
        family,
        DependenceSpec::new(beta, gamma_loc, tau, direction)?,
    )?;
    Ok((model, flags))
}

/// Method-of-moments fit.
pub fn mme(data: &[Observation], family: FamilyKind, direction: Direction) -> Result<FitResult> {
    check_data(data)?;
    let moments = compute_moments(data)?;
    let (model, flags) = mme_from_moments(&moments, family, direction)?;
    Ok(FitResult::build(
        model,
        data,
        FitMethod::Mme,
        true,
        0,
        flags,
        None,
    ))
}

/// Empirical quantile with linear interpolation between order statistics.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Starting point for families without a moment estimator: Weibull moments
/// on `x`, median and half the interquartile range of `y`, `τ = 0.5`.
pub fn robust_init(
    data: &[Observation],
    family: FamilyKind,
    direction: Direction,
) -> Result<AfcModel> {
    let m = compute_moments(data)?;
    let w = weibull_mme(m.m1, m.s1)?;
    let mut ys: Vec<f64> = data.iter().map(|o| o.y).collect();
    ys.sort_by(f64::total_cmp);
    let med = quantile_sorted(&ys, 0.5);
    let half_iqr = 0.5 * (quantile_sorted(&ys, 0.75) - quantile_sorted(&ys, 0.25));
    if !(half_iqr > 0.0) {
        return Err(AfcError::Data("interquartile range of y is zero".into()));
    }
    let tau = if family == FamilyKind::Normal {
        0.0
    } else {
        0.5
    };
    AfcModel::new(
        w,
        family,
        DependenceSpec::new(half_iqr, med, tau, direction)?,
    )
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn inv_logit(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Keeps the optimizer start away from the logit singularities.
const TAU_START_RANGE: (f64, f64) = (0.02, 0.98);

fn to_unconstrained(m: &AfcModel) -> Vec<f64> {
    let tau = m.tau().clamp(TAU_START_RANGE.0, TAU_START_RANGE.1);
    vec![
        m.alpha().ln(),
        m.beta().ln(),
        m.lambda().ln(),
        m.gamma(),
        logit(tau),
    ]
}

fn from_unconstrained(theta: &[f64], family: FamilyKind, direction: Direction) -> Result<AfcModel> {
    AfcModel::from_params(
        family,
        theta[0].exp(),
        theta[1].exp(),
        theta[2].exp(),
        theta[3],
        inv_logit(theta[4]),
        direction,
    )
}

/// Maximum-likelihood fit by Nelder–Mead in `(ln α, ln β, ln λ, γ, logit τ)`.
///
/// Without `init` the moment estimator is used as the start, or
/// [`robust_init`] for Cauchy (or when the moment inversion fails).
pub fn mle(
    data: &[Observation],
    family: FamilyKind,
    direction: Direction,
    init: Option<AfcModel>,
) -> Result<FitResult> {
    mle_with_options(data, family, direction, init, &NelderMeadOptions::default())
}

pub fn mle_with_options(
    data: &[Observation],
    family: FamilyKind,
    direction: Direction,
    init: Option<AfcModel>,
    opts: &NelderMeadOptions,
) -> Result<FitResult> {
    check_data(data)?;
    if data.len() < MLE_MIN_N {
        return Err(AfcError::Data(format!(
            "maximum likelihood needs at least {MLE_MIN_N} observations, got {}",
            data.len()
        )));
    }
    match family {
        FamilyKind::Normal => {
            return Err(AfcError::UnsupportedFamily {
                family,
                reason: "the normal conditional admits no dependence",
            })
        }
        FamilyKind::Gumbel if direction == Direction::Negative => {
            return Err(AfcError::NegativeDependenceUnsupported(family))
        }
        _ => {}
    }
    let first = data[0];
    if data.iter().all(|o| o.x == first.x) {
        return Err(AfcError::Data("all x values are equal".into()));
    }
    if data.iter().all(|o| o.y == first.y) {
        return Err(AfcError::Data("all y values are equal".into()));
    }

    let start = match init {
        Some(m) => {
            if m.family() != family || m.direction() != direction {
                return Err(AfcError::Config(
                    "initial model must match the requested family and direction".into(),
                ));
            }
            m
        }
        None if family == FamilyKind::Cauchy => robust_init(data, family, direction)?,
        None => match mme(data, family, direction) {
            Ok(fit) => fit.params,
            Err(_) => robust_init(data, family, direction)?,
        },
    };
    let init_loglik = log_likelihood_unchecked(&start, data);

    let objective = |theta: &[f64]| match from_unconstrained(theta, family, direction) {
        Ok(m) => -log_likelihood_unchecked(&m, data),
        Err(_) => f64::INFINITY,
    };
    let result = nelder_mead_with_restart(objective, &to_unconstrained(&start), opts);
    let fitted = from_unconstrained(&result.x, family, direction)?;
    let fitted_loglik = log_likelihood_unchecked(&fitted, data);
    // never hand back a point worse than the start
    let best = if fitted_loglik >= init_loglik {
        fitted
    } else {
        start
    };
    Ok(FitResult::build(
        best,
        data,
        FitMethod::Mle,
        result.converged,
        result.iterations,
        Vec::new(),
        Some(init_loglik),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    /// Position of the fit in the input list.
    pub index: usize,
    pub family: FamilyKind,
    pub method: FitMethod,
    pub aic: f64,
    pub selected: bool,
}

/// Sorts fits by ascending AIC and marks the minimum. All fits must come
/// from the same dataset.
pub fn aic_compare(fits: &[FitResult]) -> Result<Vec<RankEntry>> {
    let Some(head) = fits.first() else {
        return Err(AfcError::Config("no fits to compare".into()));
    };
    if fits
        .iter()
        .any(|f| f.data_fingerprint != head.data_fingerprint)
    {
        return Err(AfcError::Data(
            "fits were computed on different datasets".into(),
        ));
    }
    let mut order: Vec<usize> = (0..fits.len()).collect();
    order.sort_by(|&a, &b| fits[a].aic.total_cmp(&fits[b].aic).then(a.cmp(&b)));
    Ok(order
        .iter()
        .enumerate()
        .map(|(rank, &i)| RankEntry {
            index: i,
            family: fits[i].params.family(),
            method: fits[i].method,
            aic: fits[i].aic,
            selected: rank == 0,
        })
        .collect())
}

/// Standard-normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    FamilyKind::Normal.quantile(p)
}

/// `estimate ± z·se` with `z = Φ⁻¹((1 + level)/2)`.
pub fn wald_ci(estimate: f64, se: f64, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(AfcError::InvalidParameter {
            name: "level",
            value: level,
            reason: "must lie in (0, 1)",
        });
    }
    if !(se >= 0.0) {
        return Err(AfcError::InvalidParameter {
            name: "se",
            value: se,
            reason: "must be >= 0",
        });
    }
    let z = normal_quantile(0.5 * (1.0 + level));
    Ok((estimate - z * se, estimate + z * se))
}
