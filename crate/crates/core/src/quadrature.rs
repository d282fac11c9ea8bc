//! Adaptive Gauss–Kronrod quadrature and the brute-force oracles built on it.
//!
//! Everything here is deliberately independent of the closed forms in
//! [`crate::model`]: the oracles only ever evaluate survival functions.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{AfcError, Result};
use crate::families::{FamilyKind, WeibullParams};
use crate::model::AfcModel;

// 15-point Kronrod abscissae on [0, 1] with the embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-7,
            rel_tol: 1e-6,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(AfcError::InvalidParameter {
                name: "abs_tol",
                value: self.abs_tol,
                reason: "must be finite and > 0",
            });
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(AfcError::InvalidParameter {
                name: "rel_tol",
                value: self.rel_tol,
                reason: "must be finite and > 0",
            });
        }
        if self.max_subdivisions == 0 {
            return Err(AfcError::Config(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// An integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    let value = k * h;
    let error = ((k - g) * h).abs();
    Panel {
        a,
        b,
        value,
        error: if error.is_nan() { f64::INFINITY } else { error },
    }
}

/// `∫ₐᵇ f` by globally adaptive G7–K15 bisection.
pub fn integrate<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    integrate_with_breaks(f, a, b, &[], spec)
}

/// As [`integrate`], with the initial partition split at `breaks`
/// (points outside `(a, b)` are ignored).
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    spec.check()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(AfcError::Domain {
            value: if a.is_finite() { b } else { a },
            reason: "integration limits must be finite",
        });
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    if a > b {
        let est = integrate_with_breaks(f, b, a, breaks, spec)?;
        return Ok(Estimate {
            value: -est.value,
            ..est
        });
    }

    let mut points: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut edges = Vec::with_capacity(points.len() + 2);
    edges.push(a);
    edges.extend(points);
    edges.push(b);

    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        heap.push(kronrod(&mut f, w[0], w[1]));
    }
    let mut subdivisions = heap.len();
    loop {
        let (value, error) = totals(&heap);
        if error <= spec.tolerance(value) {
            return Ok(Estimate {
                value,
                error,
                subdivisions,
            });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(AfcError::Accuracy {
                estimate: value,
                error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine precision
            let (value, error) = totals(&heap);
            return Err(AfcError::Accuracy {
                estimate: value + worst.value,
                error: error + worst.error,
            });
        }
        heap.push(kronrod(&mut f, worst.a, mid));
        heap.push(kronrod(&mut f, mid, worst.b));
        subdivisions += 1;
    }
}

fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    // sort for a summation order independent of heap layout
    let mut parts: Vec<(f64, f64, f64)> = heap.iter().map(|p| (p.a, p.value, p.error)).collect();
    parts.sort_by(|l, r| l.0.total_cmp(&r.0));
    let mut value = 0.0;
    let mut error = 0.0;
    for (_, v, e) in parts {
        value += v;
        error += e;
    }
    (value, error)
}

/// Nested iterated integral `∫ₐᵇ ∫_{lo(x)}^{hi(x)} f(x, y) dy dx`.
/// The inner integral uses `inner_spec` and may be split at `inner_breaks(x)`.
pub fn integrate_2d<F, R, B>(
    f: F,
    (a, b): (f64, f64),
    inner_range: R,
    inner_breaks: B,
    outer_spec: &QuadratureSpec,
    inner_spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64,
    R: Fn(f64) -> (f64, f64),
    B: Fn(f64) -> Vec<f64>,
{
    let failure: RefCell<Option<AfcError>> = RefCell::new(None);
    let outer = integrate(
        |x| {
            let (lo, hi) = inner_range(x);
            match integrate_with_breaks(|y| f(x, y), lo, hi, &inner_breaks(x), inner_spec) {
                Ok(est) => est.value,
                Err(err) => {
                    let mut slot = failure.borrow_mut();
                    if slot.is_none() {
                        *slot = Some(err);
                    }
                    f64::NAN
                }
            }
        },
        a,
        b,
        outer_spec,
    );
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    outer
}

/// `F̄₁(a) − F̄₁(b)`, taken through the distribution function when both
/// arguments sit in the lower tail so the difference keeps its precision.
fn survival_difference(k: FamilyKind, a: f64, b: f64) -> f64 {
    if a.max(b) < 0.0 {
        k.cdf(b) - k.cdf(a)
    } else {
        k.survival(a) - k.survival(b)
    }
}

fn tighter(spec: &QuadratureSpec, factor: f64) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: spec.abs_tol * factor,
        rel_tol: spec.rel_tol * factor,
        max_subdivisions: spec.max_subdivisions,
    }
}

/// Half-width of the `y` window, in units of `β`, past which the survival
/// difference is negligible for the light-tailed families.
const LIGHT_TAIL_WIDTH: f64 = 40.0;

/// `∫∫ [P(X > x, Y > y) − P(X > x)·P(Y > y)] dy dx` by nested quadrature.
pub fn hoeffding_covariance(model: &AfcModel, spec: &QuadratureSpec) -> Result<f64> {
    spec.check()?;
    if !model.family().has_moments() {
        return Err(AfcError::MomentsUndefined(model.family()));
    }
    let marginal = model.marginal();
    let (gamma, beta) = (model.gamma(), model.beta());
    let x_hi = marginal.quantile(1.0 - 1e-8);
    let inner_spec = tighter(spec, 1e-3);
    let est = integrate_2d(
        |x, y| {
            model.joint_survival_unchecked(x, y)
                - marginal.survival_unchecked(x) * model.y_survival(y)
        },
        (0.0, x_hi),
        |x| {
            let mu = model.mu(x);
            (
                gamma.min(mu) - LIGHT_TAIL_WIDTH * beta,
                gamma.max(mu) + LIGHT_TAIL_WIDTH * beta,
            )
        },
        |x| vec![gamma, model.mu(x)],
        spec,
        &inner_spec,
    )?;
    Ok(est.value)
}

/// `∫ [F̄₁((y − μ)/β) − F̄₁((y − γ)/β)] dy − (μ − γ)` over the whole line.
///
/// The line is mapped onto `(−π/2, π/2)` through `y = c + s·tan θ`, so
/// heavy tails need no truncation.
pub fn verify_shift_identity(
    k: FamilyKind,
    beta: f64,
    mu: f64,
    gamma: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.check()?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(AfcError::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "must be finite and > 0",
        });
    }
    if !(mu.is_finite() && gamma.is_finite()) {
        return Err(AfcError::Domain {
            value: if mu.is_finite() { gamma } else { mu },
            reason: "locations must be finite",
        });
    }
    if mu == gamma {
        return Ok(0.0);
    }
    let c = 0.5 * (mu + gamma);
    let s = beta + 0.5 * (mu - gamma).abs();
    let theta = |y: f64| ((y - c) / s).atan();
    let est = integrate_with_breaks(
        |th| {
            let t = th.tan();
            let y = c + s * t;
            survival_difference(k, (y - mu) / beta, (y - gamma) / beta) * s * (1.0 + t * t)
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        &[theta(mu), theta(gamma), 0.0],
        &tighter(spec, 0.1),
    )?;
    Ok(est.value - (mu - gamma))
}

/// Hoeffding covariance of the fixed-location model
/// `P(X > x, Y > y) = S_X(x)·F̄₁(y/β(x))`, where `β(x)` steps through
/// `beta_fn_samples` at equal-probability quantiles of the Weibull marginal.
/// For a symmetric family the result should be zero. The inner integral is
/// taken as two mirrored halves about the location, which for Cauchy is the
/// principal value.
pub fn verify_symmetric_zero_cov(
    k: FamilyKind,
    marginal: WeibullParams,
    beta_fn_samples: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.check()?;
    if !k.is_symmetric() {
        return Err(AfcError::Domain {
            value: f64::NAN,
            reason: "the family must be symmetric about its location",
        });
    }
    if beta_fn_samples.is_empty() {
        return Err(AfcError::Config("beta_fn_samples must not be empty".into()));
    }
    for &b in beta_fn_samples {
        if !(b.is_finite() && b > 0.0) {
            return Err(AfcError::InvalidParameter {
                name: "beta_fn_samples",
                value: b,
                reason: "scales must be finite and > 0",
            });
        }
    }
    let m = beta_fn_samples.len();
    let cuts: Vec<f64> = (1..m)
        .map(|i| marginal.quantile(i as f64 / m as f64))
        .collect();
    let beta_at = |x: f64| beta_fn_samples[cuts.partition_point(|&c| c <= x)];
    let beta0 = beta_fn_samples[0];
    let max_beta = beta_fn_samples.iter().copied().fold(0.0, f64::max);
    let half = if k.has_moments() { 60.0 } else { 200.0 } * max_beta;
    let x_hi = marginal.quantile(1.0 - 1e-8);
    let inner_spec = tighter(spec, 1e-3);

    let failure: RefCell<Option<AfcError>> = RefCell::new(None);
    let est = integrate_with_breaks(
        |x| {
            let b = beta_at(x);
            let g = |y: f64| survival_difference(k, y / b, y / beta0);
            let lower = integrate(g, -half, 0.0, &inner_spec);
            let upper = integrate(g, 0.0, half, &inner_spec);
            match (lower, upper) {
                (Ok(l), Ok(u)) => marginal.survival_unchecked(x) * (l.value + u.value),
                (Err(err), _) | (_, Err(err)) => {
                    failure.borrow_mut().get_or_insert(err);
                    f64::NAN
                }
            }
        },
        0.0,
        x_hi,
        &cuts,
        spec,
    );
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    Ok(est?.value)
}

/// Central-difference estimate of `∂²P(X > x, Y > y)/∂x∂y` with step `h`.
pub fn mixed_partial(model: &AfcModel, x: f64, y: f64, h: f64) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(AfcError::Domain {
            value: h,
            reason: "step must be finite and > 0",
        });
    }
    if !(x.is_finite() && x - h > 0.0) {
        return Err(AfcError::Domain {
            value: x,
            reason: "need x - h > 0",
        });
    }
    if !y.is_finite() {
        return Err(AfcError::Domain {
            value: y,
            reason: "y must be finite",
        });
    }
    // S(x, y) − S_X(x) has the same mixed partial and keeps its digits
    // where S(x, y) is close to S_X(x).
    let upper_half = model.family().survival((y - model.mu(x)) / model.beta()) > 0.5;
    let s = |x: f64, y: f64| {
        if upper_half {
            -model.survival_x_cdf_y(x, y).expect("x checked positive")
        } else {
            model.joint_survival_unchecked(x, y)
        }
    };
    Ok((s(x + h, y + h) - s(x + h, y - h) - s(x - h, y + h) + s(x - h, y - h)) / (4.0 * h * h))
}
