//! The joint AFC model: a Weibull marginal for `X` composed with a
//! location-scale conditional for `Y` whose location moves with `x`.
//!
//! With `r = τ^λ` and `t = (y − μ(x))/β` the joint density factors as
//!
//! ```text
//! f(x, y) = f_X(x) · f₁(t)/β · (1 + d·r·f₁'(t)/f₁(t))
//! ```
//!
//! which is the expanded per-family density written in terms of the family
//! score `f₁'/f₁`. Non-negativity of the last factor is what bounds `τ`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{AfcError, Result};
use crate::families::{FamilyKind, WeibullParams};

/// Log-likelihood returned when some density term is zero or negative.
pub const LOGLIK_SENTINEL: f64 = -1e300;

/// Sign of `μ'(x)`: `Positive` selects `μ⁺`, `Negative` selects `μ⁻`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Positive => 1.0,
            Direction::Negative => -1.0,
        }
    }

    /// Direction matching the sign of `v`; zero maps to `Positive`.
    pub fn from_sign(v: f64) -> Self {
        if v < 0.0 {
            Direction::Negative
        } else {
            Direction::Positive
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Positive => "pos",
            Direction::Negative => "neg",
        })
    }
}

impl FromStr for Direction {
    type Err = AfcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pos" | "+" | "+1" | "positive" => Ok(Direction::Positive),
            "neg" | "-" | "-1" | "negative" => Ok(Direction::Negative),
            other => Err(AfcError::Config(format!("unknown direction `{other}`"))),
        }
    }
}

/// Scale `β`, baseline location `γ = μ(0)`, dependence `τ` and direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceSpec {
    beta: f64,
    gamma: f64,
    tau: f64,
    direction: Direction,
}

impl DependenceSpec {
    pub fn new(beta: f64, gamma: f64, tau: f64, direction: Direction) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(AfcError::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "must be finite and > 0",
            });
        }
        if !gamma.is_finite() {
            return Err(AfcError::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "must be finite",
            });
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(AfcError::InvalidParameter {
                name: "tau",
                value: tau,
                reason: "must lie in [0, 1] for a non-negative joint density",
            });
        }
        Ok(Self {
            beta,
            gamma,
            tau,
            direction,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }
}

/// One `(x, y)` data point, `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: f64,
    pub y: f64,
}

impl Observation {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let obs = Self { x, y };
        obs.check()?;
        Ok(obs)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.x.is_finite() && self.x > 0.0) {
            return Err(AfcError::Domain {
                value: self.x,
                reason: "observation x must be finite and > 0",
            });
        }
        if !self.y.is_finite() {
            return Err(AfcError::Domain {
                value: self.y,
                reason: "observation y must be finite",
            });
        }
        Ok(())
    }
}

/// A validated Weibull–`family` AFC model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfcModel {
    marginal: WeibullParams,
    family: FamilyKind,
    dep: DependenceSpec,
}

impl AfcModel {
    pub fn new(marginal: WeibullParams, family: FamilyKind, dep: DependenceSpec) -> Result<Self> {
        if family == FamilyKind::Gumbel && dep.direction == Direction::Negative {
            return Err(AfcError::NegativeDependenceUnsupported(family));
        }
        if family == FamilyKind::Normal && dep.tau != 0.0 {
            return Err(AfcError::NormalRequiresIndependence(dep.tau));
        }
        Ok(Self {
            marginal,
            family,
            dep,
        })
    }

    /// Builds a model from raw parameters, validating every constraint.
    pub fn from_params(
        family: FamilyKind,
        alpha: f64,
        beta: f64,
        lambda: f64,
        gamma: f64,
        tau: f64,
        direction: Direction,
    ) -> Result<Self> {
        Self::new(
            WeibullParams::new(alpha, lambda)?,
            family,
            DependenceSpec::new(beta, gamma, tau, direction)?,
        )
    }

    /// Builds a model without checking `τ`, the direction or the family
    /// restrictions. Only positivity of `α, β, λ` is still required for the
    /// formulas to be defined. Used to demonstrate what the constraints
    /// protect against; the result may have a negative "density".
    pub fn new_unchecked(
        family: FamilyKind,
        alpha: f64,
        beta: f64,
        lambda: f64,
        gamma: f64,
        tau: f64,
        direction: Direction,
    ) -> Self {
        Self {
            marginal: WeibullParams::new(alpha, lambda).expect("alpha and lambda must be positive"),
            family,
            dep: DependenceSpec {
                beta,
                gamma,
                tau,
                direction,
            },
        }
    }

    pub fn marginal(&self) -> WeibullParams {
        self.marginal
    }

    pub fn family(&self) -> FamilyKind {
        self.family
    }

    pub fn dependence(&self) -> DependenceSpec {
        self.dep
    }

    pub fn alpha(&self) -> f64 {
        self.marginal.alpha()
    }

    pub fn lambda(&self) -> f64 {
        self.marginal.lambda()
    }

    pub fn beta(&self) -> f64 {
        self.dep.beta
    }

    pub fn gamma(&self) -> f64 {
        self.dep.gamma
    }

    pub fn tau(&self) -> f64 {
        self.dep.tau
    }

    pub fn direction(&self) -> Direction {
        self.dep.direction
    }

    /// Parameter vector in the order `(α, β, λ, γ, τ)`.
    pub fn params(&self) -> [f64; 5] {
        [
            self.alpha(),
            self.beta(),
            self.lambda(),
            self.gamma(),
            self.tau(),
        ]
    }

    /// Same model with `τ = 0`: the independence product of the marginals.
    pub fn independent(&self) -> Self {
        Self {
            dep: DependenceSpec {
                tau: 0.0,
                ..self.dep
            },
            ..*self
        }
    }

    /// `τ^λ`.
    #[inline]
    fn tau_pow(&self) -> f64 {
        if self.dep.tau == 0.0 {
            0.0
        } else {
            self.dep.tau.powf(self.lambda())
        }
    }

    /// Location function `μ(x) = γ + d·β(ατx)^λ`.
    pub fn mu(&self, x: f64) -> f64 {
        if self.dep.tau == 0.0 {
            return self.dep.gamma;
        }
        self.dep.gamma
            + self.dep.direction.sign()
                * self.dep.beta
                * (self.alpha() * self.dep.tau * x).powf(self.lambda())
    }

    /// `μ'(x) = d·βλα^λτ^λ x^(λ−1)`.
    pub fn mu_deriv(&self, x: f64) -> f64 {
        if self.dep.tau == 0.0 {
            return 0.0;
        }
        let a = self.alpha() * self.dep.tau;
        self.dep.direction.sign()
            * self.dep.beta
            * self.lambda()
            * a
            * (a * x).powf(self.lambda() - 1.0)
    }

    /// `r(x, τ) = τ·h₀(τx)/h₀(x)`; `0` at `τ = 0`.
    pub fn r_ratio(&self, x: f64) -> Result<f64> {
        self.marginal.hazard(x)?;
        if self.dep.tau == 0.0 {
            return Ok(0.0);
        }
        let tau = self.dep.tau;
        Ok(tau * self.marginal.hazard_unchecked(tau * x) / self.marginal.hazard_unchecked(x))
    }

    #[inline]
    fn standardized(&self, x: f64, y: f64) -> f64 {
        (y - self.mu(x)) / self.dep.beta
    }

    /// `P(X > x, Y > y)`.
    pub fn joint_survival(&self, x: f64, y: f64) -> Result<f64> {
        self.marginal.survival(x)?;
        Ok(self.joint_survival_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn joint_survival_unchecked(&self, x: f64, y: f64) -> f64 {
        self.marginal.survival_unchecked(x) * self.family.survival(self.standardized(x, y))
    }

    /// `P(X > x, Y ≤ y)`, accurate where the joint survival is close to `P(X > x)`.
    pub fn survival_x_cdf_y(&self, x: f64, y: f64) -> Result<f64> {
        self.marginal.survival(x)?;
        Ok(self.marginal.survival_unchecked(x) * self.family.cdf(self.standardized(x, y)))
    }

    /// Marginal survival of `Y`, `F̄₁((y − γ)/β)`.
    pub fn y_survival(&self, y: f64) -> f64 {
        self.family.survival((y - self.dep.gamma) / self.dep.beta)
    }

    /// Marginal density of `Y`.
    pub fn y_density(&self, y: f64) -> f64 {
        self.family.density((y - self.dep.gamma) / self.dep.beta) / self.dep.beta
    }

    pub fn y_ln_density(&self, y: f64) -> f64 {
        self.family.ln_density((y - self.dep.gamma) / self.dep.beta) - self.dep.beta.ln()
    }

    /// `1 + d·τ^λ·f₁'(t)/f₁(t)`, the factor carrying the dependence.
    #[inline]
    fn dependence_factor(&self, t: f64) -> f64 {
        let r = self.tau_pow();
        if r == 0.0 {
            1.0
        } else {
            1.0 + self.dep.direction.sign() * r * self.family.score(t)
        }
    }

    /// `ln f(x, y) − ln f_X(x) − ln f_Y(y)`; exactly `0` when `τ = 0`,
    /// `-inf` where the joint density vanishes.
    pub fn ln_dependence_weight(&self, x: f64, y: f64) -> f64 {
        let t = self.standardized(x, y);
        let factor = self.dependence_factor(t);
        if !(factor > 0.0) {
            return f64::NEG_INFINITY;
        }
        if self.dep.tau == 0.0 {
            return 0.0;
        }
        let t0 = (y - self.dep.gamma) / self.dep.beta;
        let w = self.family.ln_density(t) - self.family.ln_density(t0) + factor.ln();
        if w.is_nan() {
            f64::NEG_INFINITY
        } else {
            w
        }
    }

    /// Joint density `∂²P(X > x, Y > y)/∂x∂y`. On the Laplace ridge
    /// `y = μ(x)` the `sgn(0) = 0` convention applies.
    pub fn joint_density(&self, x: f64, y: f64) -> Result<f64> {
        self.marginal.density(x)?;
        Ok(self.joint_density_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn joint_density_unchecked(&self, x: f64, y: f64) -> f64 {
        let t = self.standardized(x, y);
        let base = self.marginal.density_unchecked(x) * self.family.density(t) / self.dep.beta;
        if base == 0.0 {
            // far tails, where the score may overflow
            return 0.0;
        }
        base * self.dependence_factor(t)
    }

    /// `ln f(x, y)`; `-inf` where the density is zero or negative.
    pub fn ln_joint_density(&self, x: f64, y: f64) -> Result<f64> {
        self.marginal.density(x)?;
        Ok(self.ln_joint_density_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn ln_joint_density_unchecked(&self, x: f64, y: f64) -> f64 {
        let alpha = self.alpha();
        let lambda = self.lambda();
        let ln_ax = (alpha * x).ln();
        let cum = (lambda * ln_ax).exp();
        let r = self.tau_pow();
        let mu = if r == 0.0 {
            self.dep.gamma
        } else {
            self.dep.gamma + self.dep.direction.sign() * self.dep.beta * r * cum
        };
        let t = (y - mu) / self.dep.beta;
        let factor = if r == 0.0 {
            1.0
        } else {
            1.0 + self.dep.direction.sign() * r * self.family.score(t)
        };
        let ln_f1 = self.family.ln_density(t);
        if !(factor > 0.0) || ln_f1 == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        lambda.ln() + alpha.ln() + (lambda - 1.0) * ln_ax - cum - self.dep.beta.ln()
            + ln_f1
            + factor.ln()
    }

    /// `Cov(X, Y) = d·(βτ^λ/(αλ))·Γ(1 + 1/λ)`.
    pub fn covariance(&self) -> Result<f64> {
        if !self.family.has_moments() {
            return Err(AfcError::MomentsUndefined(self.family));
        }
        let lambda = self.lambda();
        Ok(
            self.dep.direction.sign() * self.dep.beta * self.tau_pow() / (self.alpha() * lambda)
                * gamma(1.0 + 1.0 / lambda),
        )
    }

    /// Pearson correlation of `(X, Y)`.
    pub fn correlation(&self) -> Result<f64> {
        match self.family {
            FamilyKind::Cauchy => return Err(AfcError::MomentsUndefined(self.family)),
            FamilyKind::Normal => {
                return Err(AfcError::UnsupportedFamily {
                    family: self.family,
                    reason: "the normal conditional admits no dependence",
                })
            }
            _ => {}
        }
        let cov = self.covariance()?;
        let (_, var_x) = self.marginal.mean_var();
        let (_, var_y) = self.family.mean_var(self.dep.gamma, self.dep.beta)?;
        Ok(cov / (var_x * var_y).sqrt())
    }

    /// Rectangle used by [`validate`](Self::validate) when no grid is given:
    /// 50×50 points, `x` between the 0.001 and 0.999 Weibull quantiles and
    /// `y` over `γ ± 8β` (`γ ± 40β` for Cauchy).
    pub fn default_grid(&self) -> Grid {
        let half = if self.family == FamilyKind::Cauchy {
            40.0
        } else {
            8.0
        } * self.dep.beta;
        Grid::linspace(
            (self.marginal.quantile(0.001), self.marginal.quantile(0.999)),
            (self.dep.gamma - half, self.dep.gamma + half),
            50,
            50,
        )
    }

    /// Evaluates the joint density at every grid point and reports negatives.
    pub fn validate(&self, grid: &Grid) -> ValidityReport {
        let mut report = ValidityReport {
            points: 0,
            min_density: f64::INFINITY,
            argmin: (f64::NAN, f64::NAN),
            negative: Vec::new(),
        };
        for &x in &grid.xs {
            for &y in &grid.ys {
                let d = if x > 0.0 {
                    self.joint_density_unchecked(x, y)
                } else {
                    f64::NAN
                };
                report.points += 1;
                if d < report.min_density || d.is_nan() {
                    report.min_density = d;
                    report.argmin = (x, y);
                }
                if !(d >= -VALIDITY_TOLERANCE) {
                    report.negative.push((x, y, d));
                }
            }
        }
        report
    }
}

const VALIDITY_TOLERANCE: f64 = 1e-12;

/// Upper envelope of `|ρ|` over `τ ∈ [0, 1]` for shape `λ`.
pub fn rho_max(family: FamilyKind, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(AfcError::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "must be finite and > 0",
        });
    }
    let constant = match family {
        FamilyKind::Logistic => 3f64.sqrt() / std::f64::consts::PI,
        FamilyKind::Gumbel => 6f64.sqrt() / std::f64::consts::PI,
        FamilyKind::Laplace => std::f64::consts::FRAC_1_SQRT_2,
        FamilyKind::Cauchy | FamilyKind::Normal => {
            return Err(AfcError::UnsupportedFamily {
                family,
                reason: "no correlation bound (undefined moments or no dependence)",
            })
        }
    };
    let g1 = gamma(1.0 + 1.0 / lambda);
    let g2 = gamma(1.0 + 2.0 / lambda);
    Ok(constant * g1 / (lambda * (g2 - g1 * g1).sqrt()))
}

/// Sum of `ln f(xᵢ, yᵢ)`, or [`LOGLIK_SENTINEL`] if some density is not positive.
pub fn log_likelihood(model: &AfcModel, data: &[Observation]) -> Result<f64> {
    if data.is_empty() {
        return Err(AfcError::Data("log-likelihood of an empty dataset".into()));
    }
    for obs in data {
        obs.check()?;
    }
    Ok(log_likelihood_unchecked(model, data))
}

pub(crate) fn log_likelihood_unchecked(model: &AfcModel, data: &[Observation]) -> f64 {
    let mut sum = crate::harness::NeumaierSum::default();
    for obs in data {
        let l = model.ln_joint_density_unchecked(obs.x, obs.y);
        if !l.is_finite() {
            return LOGLIK_SENTINEL;
        }
        sum.add(l);
    }
    sum.value()
}

/// Rectangular evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Grid {
    pub fn linspace(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Self {
        Self {
            xs: linspace(x_range.0, x_range.1, nx),
            ys: linspace(y_range.0, y_range.1, ny),
        }
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Outcome of [`AfcModel::validate`]; a report with negatives is data, not an error.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub points: usize,
    pub min_density: f64,
    pub argmin: (f64, f64),
    /// `(x, y, density)` for every point below `-1e-12`.
    pub negative: Vec<(f64, f64, f64)>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.points > 0 && self.negative.is_empty()
    }
}
