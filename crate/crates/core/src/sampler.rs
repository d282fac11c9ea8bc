//! Metropolis–Hastings independence sampler.
//!
//! Proposals come from the product of the two marginals, so the acceptance
//! ratio only involves `f/(f_X·f_Y)` at the two points. Each step draws
//! three uniforms in the order proposal-x, proposal-y, acceptance-u. When no
//! initial point is configured, the first two uniforms of the stream produce
//! it from the proposal.

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AfcError, Result};
use crate::model::{AfcModel, Observation};
use crate::rng::{stream, uniform_open01};

pub const DEFAULT_THIN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_draws: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub init: Option<Observation>,
}

impl ChainConfig {
    /// Thinning of 5 and a burn-in of 10% of the total step budget.
    pub fn new(n_draws: usize, seed: u64) -> Self {
        Self {
            n_draws,
            burn_in: default_burn_in(n_draws, DEFAULT_THIN),
            thin: DEFAULT_THIN,
            seed,
            init: None,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_init(mut self, init: Observation) -> Self {
        self.init = Some(init);
        self
    }

    /// `burn_in + n_draws·thin`.
    pub fn total_steps(&self) -> Result<usize> {
        if self.n_draws == 0 {
            return Err(AfcError::Config("n_draws must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(AfcError::Config("thin must be at least 1".into()));
        }
        self.n_draws
            .checked_mul(self.thin)
            .and_then(|s| s.checked_add(self.burn_in))
            .ok_or_else(|| AfcError::Config("burn_in + n_draws * thin overflows".into()))
    }
}

/// Burn-in equal to one tenth of `burn_in + n_draws·thin`, rounded up.
pub fn default_burn_in(n_draws: usize, thin: usize) -> usize {
    n_draws.saturating_mul(thin).div_ceil(9)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub draws: Vec<Observation>,
    pub acceptance_rate: f64,
    pub accepted: usize,
    pub steps: usize,
    pub seed_used: u64,
}

/// Maps two uniforms to a proposal by inverse transform on each marginal.
pub fn propose_from_uniforms(model: &AfcModel, u_x: f64, u_y: f64) -> Observation {
    Observation {
        x: model.marginal().inverse_survival(u_x),
        y: model.gamma() + model.beta() * model.family().quantile(u_y),
    }
}

pub fn propose<R: Rng + ?Sized>(model: &AfcModel, rng: &mut R) -> Observation {
    let u_x = uniform_open01(rng);
    let u_y = uniform_open01(rng);
    propose_from_uniforms(model, u_x, u_y)
}

/// `min{w(proposal) − w(current), 0}` with `w = ln f − ln f_X − ln f_Y`.
pub fn log_acceptance(model: &AfcModel, current: &Observation, proposal: &Observation) -> f64 {
    let w_prop = model.ln_dependence_weight(proposal.x, proposal.y);
    let w_cur = model.ln_dependence_weight(current.x, current.y);
    acceptance_from_weights(w_cur, w_prop)
}

#[inline]
fn acceptance_from_weights(w_cur: f64, w_prop: f64) -> f64 {
    if w_prop == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    (w_prop - w_cur).min(0.0)
}

pub fn run_chain(model: &AfcModel, cfg: &ChainConfig) -> Result<ChainOutput> {
    let steps = cfg.total_steps()?;
    let mut rng = stream(cfg.seed);
    let mut current = match cfg.init {
        Some(init) => {
            init.check()
                .map_err(|e| AfcError::Config(format!("initial point outside the support: {e}")))?;
            if model.ln_dependence_weight(init.x, init.y) == f64::NEG_INFINITY {
                return Err(AfcError::Config("initial point has zero density".into()));
            }
            init
        }
        None => loop {
            let p = propose(model, &mut rng);
            if model.ln_dependence_weight(p.x, p.y) > f64::NEG_INFINITY {
                break p;
            }
        },
    };
    let mut w_cur = model.ln_dependence_weight(current.x, current.y);

    let mut draws = Vec::with_capacity(cfg.n_draws);
    let mut accepted = 0usize;
    for step in 1..=steps {
        let proposal = propose(model, &mut rng);
        let u = uniform_open01(&mut rng);
        let w_prop = model.ln_dependence_weight(proposal.x, proposal.y);
        if u < acceptance_from_weights(w_cur, w_prop).exp() {
            current = proposal;
            w_cur = w_prop;
            accepted += 1;
        }
        if step > cfg.burn_in && (step - cfg.burn_in).is_multiple_of(cfg.thin) {
            draws.push(current);
        }
    }
    debug_assert_eq!(draws.len(), cfg.n_draws);
    Ok(ChainOutput {
        draws,
        acceptance_rate: accepted as f64 / steps as f64,
        accepted,
        steps,
        seed_used: cfg.seed,
    })
}

/// Writes draws as CSV with header `x,y` using shortest round-trip decimals.
pub fn write_csv<W: Write>(draws: &[Observation], mut out: W) -> io::Result<()> {
    writeln!(out, "x,y")?;
    for d in draws {
        writeln!(out, "{},{}", d.x, d.y)?;
    }
    Ok(())
}
