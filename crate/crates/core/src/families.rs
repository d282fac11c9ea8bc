//! Univariate building blocks: the Weibull marginal of `X` and the five
//! standardized location-scale families available for `Y`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::gamma;

use crate::error::{AfcError, Result};

/// Euler–Mascheroni constant.
pub const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_860_606_512_090_082;

const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_2: f64 = std::f64::consts::LN_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Weibull law of `X` with survival `exp(-(αx)^λ)`.
///
/// `alpha` is an inverse scale (units of `1/x`), `lambda` the shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    alpha: f64,
    lambda: f64,
}

impl WeibullParams {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(AfcError::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "must be finite and > 0",
            });
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(AfcError::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "must be finite and > 0",
            });
        }
        Ok(Self { alpha, lambda })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn check_x(x: f64) -> Result<()> {
        if x.is_finite() && x > 0.0 {
            Ok(())
        } else {
            Err(AfcError::Domain {
                value: x,
                reason: "x must be finite and > 0",
            })
        }
    }

    /// `(αx)^λ`, the cumulative hazard.
    #[inline]
    pub(crate) fn cum_hazard(&self, x: f64) -> f64 {
        (self.alpha * x).powf(self.lambda)
    }

    #[inline]
    pub(crate) fn survival_unchecked(&self, x: f64) -> f64 {
        (-self.cum_hazard(x)).exp()
    }

    #[inline]
    pub(crate) fn hazard_unchecked(&self, x: f64) -> f64 {
        self.lambda * self.alpha * (self.alpha * x).powf(self.lambda - 1.0)
    }

    #[inline]
    pub(crate) fn density_unchecked(&self, x: f64) -> f64 {
        self.hazard_unchecked(x) * self.survival_unchecked(x)
    }

    #[inline]
    pub(crate) fn ln_density_unchecked(&self, x: f64) -> f64 {
        let ax = self.alpha * x;
        self.lambda.ln() + self.alpha.ln() + (self.lambda - 1.0) * ax.ln() - ax.powf(self.lambda)
    }

    pub fn survival(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.survival_unchecked(x))
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.density_unchecked(x))
    }

    pub fn ln_density(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.ln_density_unchecked(x))
    }

    /// Hazard `λα(αx)^(λ−1)`.
    pub fn hazard(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.hazard_unchecked(x))
    }

    /// `(E[X], Var[X])`.
    pub fn mean_var(&self) -> (f64, f64) {
        let g1 = gamma(1.0 + 1.0 / self.lambda);
        let g2 = gamma(1.0 + 2.0 / self.lambda);
        (g1 / self.alpha, (g2 - g1 * g1) / (self.alpha * self.alpha))
    }

    /// The `x` with `P(X > x) = p`, i.e. `(1/α)(−ln p)^(1/λ)`.
    pub fn inverse_survival(&self, p: f64) -> f64 {
        (-p.ln()).powf(1.0 / self.lambda) / self.alpha
    }

    /// The `x` with `P(X ≤ x) = q`.
    pub fn quantile(&self, q: f64) -> f64 {
        (-(-q).ln_1p()).powf(1.0 / self.lambda) / self.alpha
    }
}

/// Standardized location-scale family followed by `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Logistic,
    Gumbel,
    Laplace,
    Cauchy,
    Normal,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 5] = [
        FamilyKind::Logistic,
        FamilyKind::Gumbel,
        FamilyKind::Laplace,
        FamilyKind::Cauchy,
        FamilyKind::Normal,
    ];

    /// The four families that admit a dependent model.
    pub const DEPENDENT: [FamilyKind; 4] = [
        FamilyKind::Logistic,
        FamilyKind::Gumbel,
        FamilyKind::Laplace,
        FamilyKind::Cauchy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::Logistic => "logistic",
            FamilyKind::Gumbel => "gumbel",
            FamilyKind::Laplace => "laplace",
            FamilyKind::Cauchy => "cauchy",
            FamilyKind::Normal => "normal",
        }
    }

    /// Symmetric about its location parameter.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, FamilyKind::Gumbel)
    }

    pub fn has_moments(&self) -> bool {
        !matches!(self, FamilyKind::Cauchy)
    }

    /// Standardized survival `F̄₁(t)`.
    pub fn survival(&self, t: f64) -> f64 {
        match self {
            FamilyKind::Logistic => {
                if t > 0.0 {
                    let u = (-t).exp();
                    u / (1.0 + u)
                } else {
                    1.0 / (1.0 + t.exp())
                }
            }
            FamilyKind::Gumbel => -(-(-t).exp()).exp_m1(),
            FamilyKind::Laplace => {
                if t >= 0.0 {
                    0.5 * (-t).exp()
                } else {
                    1.0 - 0.5 * t.exp()
                }
            }
            FamilyKind::Cauchy => {
                if t > 0.0 {
                    (1.0 / t).atan() / PI
                } else {
                    0.5 - t.atan() / PI
                }
            }
            FamilyKind::Normal => 0.5 * erfc(t * FRAC_1_SQRT_2),
        }
    }

    /// Standardized distribution function `1 − F̄₁(t)`, accurate in the lower tail.
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            FamilyKind::Gumbel => (-(-t).exp()).exp(),
            // the remaining families are symmetric about zero
            _ => self.survival(-t),
        }
    }

    /// Standardized density `f₁(t) = −F̄₁'(t)`.
    pub fn density(&self, t: f64) -> f64 {
        match self {
            FamilyKind::Logistic => {
                let u = (-t.abs()).exp();
                u / ((1.0 + u) * (1.0 + u))
            }
            FamilyKind::Gumbel => (-t - (-t).exp()).exp(),
            FamilyKind::Laplace => 0.5 * (-t.abs()).exp(),
            FamilyKind::Cauchy => 1.0 / (PI * (1.0 + t * t)),
            FamilyKind::Normal => (-0.5 * t * t - LN_SQRT_2PI).exp(),
        }
    }

    pub fn ln_density(&self, t: f64) -> f64 {
        match self {
            FamilyKind::Logistic => -t.abs() - 2.0 * (-t.abs()).exp().ln_1p(),
            FamilyKind::Gumbel => -t - (-t).exp(),
            FamilyKind::Laplace => -LN_2 - t.abs(),
            FamilyKind::Cauchy => -LN_PI - (t * t).ln_1p(),
            FamilyKind::Normal => -0.5 * t * t - LN_SQRT_2PI,
        }
    }

    /// Density derivative `f₁'(t)`. For Laplace at `t = 0` this is `0`
    /// under the `sgn(0) = 0` convention.
    pub fn density_deriv(&self, t: f64) -> f64 {
        self.density_deriv_flagged(t).0
    }

    /// Like [`density_deriv`](Self::density_deriv), also reporting whether the
    /// value is a convention rather than a true derivative (Laplace kink).
    pub fn density_deriv_flagged(&self, t: f64) -> (f64, bool) {
        match self {
            FamilyKind::Logistic => {
                let u = (-t.abs()).exp();
                (-signum0(t) * u * (1.0 - u) / (1.0 + u).powi(3), false)
            }
            FamilyKind::Gumbel => {
                let f = self.density(t);
                if f == 0.0 {
                    (0.0, false)
                } else {
                    (f * (-t).exp_m1(), false)
                }
            }
            FamilyKind::Laplace => (-0.5 * signum0(t) * (-t.abs()).exp(), t == 0.0),
            FamilyKind::Cauchy => {
                let s = 1.0 + t * t;
                (-2.0 * t / (PI * s * s), false)
            }
            FamilyKind::Normal => (-t * self.density(t), false),
        }
    }

    /// The score `f₁'(t) / f₁(t)`, evaluated without forming either factor.
    #[inline]
    pub fn score(&self, t: f64) -> f64 {
        match self {
            FamilyKind::Logistic => -(0.5 * t).tanh(),
            FamilyKind::Gumbel => (-t).exp_m1(),
            FamilyKind::Laplace => -signum0(t),
            FamilyKind::Cauchy => -2.0 * t / (1.0 + t * t),
            FamilyKind::Normal => -t,
        }
    }

    /// `−Q(t) = −f₁(t) / f₁'(t)`; undefined where `f₁'(t) = 0`.
    pub fn neg_q(&self, t: f64) -> Result<f64> {
        let undefined = Err(AfcError::UndefinedRatio { family: *self, t });
        if !t.is_finite() || t == 0.0 {
            return undefined;
        }
        let v = match self {
            FamilyKind::Logistic => 1.0 / (0.5 * t).tanh(),
            FamilyKind::Gumbel => -1.0 / (-t).exp_m1(),
            FamilyKind::Laplace => t.signum(),
            FamilyKind::Cauchy => (t * t + 1.0) / (2.0 * t),
            FamilyKind::Normal => 1.0 / t,
        };
        Ok(v)
    }

    /// `(s*, c*)`: the infimum of `−Q` where `f₁' < 0` and its supremum where `f₁' > 0`.
    pub fn extremal_constants(&self) -> (f64, f64) {
        match self {
            FamilyKind::Logistic | FamilyKind::Laplace | FamilyKind::Cauchy => (1.0, -1.0),
            FamilyKind::Gumbel => (1.0, 0.0),
            FamilyKind::Normal => (0.0, 0.0),
        }
    }

    /// Mean and variance of the family with location `gamma` and scale `beta`.
    pub fn mean_var(&self, gamma: f64, beta: f64) -> Result<(f64, f64)> {
        let b2 = beta * beta;
        match self {
            FamilyKind::Logistic => Ok((gamma, b2 * PI * PI / 3.0)),
            FamilyKind::Gumbel => Ok((gamma + beta * EULER_MASCHERONI, b2 * PI * PI / 6.0)),
            FamilyKind::Laplace => Ok((gamma, 2.0 * b2)),
            FamilyKind::Normal => Ok((gamma, b2)),
            FamilyKind::Cauchy => Err(AfcError::MomentsUndefined(*self)),
        }
    }

    /// Standardized quantile: the `t` with `P(T ≤ t) = u`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            FamilyKind::Logistic => (u / (1.0 - u)).ln(),
            FamilyKind::Gumbel => -(-u.ln()).ln(),
            FamilyKind::Laplace => {
                if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            }
            FamilyKind::Cauchy => (PI * (u - 0.5)).tan(),
            FamilyKind::Normal => {
                let t = -SQRT_2 * erfc_inv(2.0 * u);
                // one Newton step against the erfc-based cdf
                let d = self.density(t);
                if t.is_finite() && d > 0.0 {
                    t - (self.cdf(t) - u) / d
                } else {
                    t
                }
            }
        }
    }
}

/// Sign with `sgn(0) = 0`.
#[inline]
pub(crate) fn signum0(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = AfcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" => Ok(FamilyKind::Logistic),
            "gumbel" => Ok(FamilyKind::Gumbel),
            "laplace" => Ok(FamilyKind::Laplace),
            "cauchy" => Ok(FamilyKind::Cauchy),
            "normal" => Ok(FamilyKind::Normal),
            other => Err(AfcError::Config(format!("unknown family `{other}`"))),
        }
    }
}
