//! Draws from `P(X ∈ dt | X + Z > β)`, the increment law of the importance
//! sampler at level `β`.
//!
//! The target density is `f_X(t) P(Z > β - t) / P(X + Z > β)`. All schemes
//! propose from (pieces of) the law of `X` and accept with a ratio of
//! `P(Z > ·)` values, so the accepted draws are exact regardless of how
//! accurately the normalizer `P(X + Z > β)` is known.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::approximation::{Approximation, ExceedTable};
use crate::error::{Error, Result};
use crate::models::TailClass;
use crate::rng::CountingRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    Auto,
    Naive,
    RegVar,
    Stratified,
}

impl FromStr for SchemeChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(SchemeChoice::Auto),
            "naive" => Ok(SchemeChoice::Naive),
            "regvar" => Ok(SchemeChoice::RegVar),
            "stratified" => Ok(SchemeChoice::Stratified),
            other => Err(format!("unknown sampler scheme '{other}' (auto, naive, regvar, stratified)")),
        }
    }
}

impl fmt::Display for SchemeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeChoice::Auto => "auto",
            SchemeChoice::Naive => "naive",
            SchemeChoice::RegVar => "regvar",
            SchemeChoice::Stratified => "stratified",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub scheme: SchemeChoice,
    /// Split fraction of the mixture proposal, in (0, 1).
    pub theta: f64,
    pub proposal_cap: u64,
    /// Largest `β` at which plain rejection from `X` may be used when it was
    /// requested explicitly. `None` lifts the restriction.
    pub naive_ceiling: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            scheme: SchemeChoice::Auto,
            theta: 0.5,
            proposal_cap: 1_000_000,
            naive_ceiling: Some(50.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    NaiveAR,
    RegVarMixture { theta: f64, m: f64 },
    WeibullStratified,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::NaiveAR => "naive",
            Scheme::RegVarMixture { .. } => "regvar",
            Scheme::WeibullStratified => "stratified",
        }
    }
}

/// Immutable sampler description shared by all replications.
#[derive(Debug, Clone)]
pub struct SamplerPlan {
    exceed: Arc<ExceedTable>,
    scheme: Scheme,
    config: SamplerConfig,
}

impl SamplerPlan {
    /// Resolves the scheme. For the mixture scheme the domination constant
    /// `m` is computed on a grid of levels up to `beta_max` and inflated by 10%.
    pub fn new(exceed: Arc<ExceedTable>, config: SamplerConfig, beta_max: f64) -> Result<Self> {
        if !(config.theta > 0.0 && config.theta < 1.0) {
            return Err(Error::SamplerPrecondition {
                beta: f64::NAN,
                reason: format!("theta must lie in (0, 1), got {}", config.theta),
            });
        }
        let approx = exceed.approximation().clone();
        let class = approx.model().tail_class();
        let scheme = match (config.scheme, class) {
            (SchemeChoice::Naive, _) => Scheme::NaiveAR,
            (SchemeChoice::Auto, TailClass::RegularlyVarying { .. }) | (SchemeChoice::RegVar, TailClass::RegularlyVarying { .. }) => {
                Scheme::RegVarMixture {
                    theta: config.theta,
                    m: domination_constant(&exceed, beta_max)?,
                }
            }
            (SchemeChoice::Auto, TailClass::WeibullType) | (SchemeChoice::Stratified, TailClass::WeibullType) => {
                Scheme::WeibullStratified
            }
            (SchemeChoice::Auto, _) => Scheme::NaiveAR,
            (choice, class) => {
                return Err(Error::SamplerPrecondition {
                    beta: f64::NAN,
                    reason: format!("scheme '{choice}' does not apply to a {class} model"),
                })
            }
        };
        Ok(SamplerPlan { exceed, scheme, config })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn approximation(&self) -> &Arc<Approximation> {
        self.exceed.approximation()
    }

    pub fn exceed_table(&self) -> &Arc<ExceedTable> {
        &self.exceed
    }

    pub fn sampler(&self) -> ConditionalSampler<'_> {
        ConditionalSampler {
            plan: self,
            stats: SamplerStats::default(),
            strata: None,
        }
    }

    /// Mixing weights `(λ0, λ1)` and normalizer `c(β)` of the mixture proposal.
    pub fn mixture_weights(&self, beta: f64) -> (f64, f64, f64) {
        let theta = match self.scheme {
            Scheme::RegVarMixture { theta, .. } => theta,
            _ => self.config.theta,
        };
        let a = self.approximation();
        let cut = beta - theta * beta;
        let zb = a.z_tail(beta);
        let above = a.model().tail(cut);
        let below = if above < 0.5 { 1.0 - above } else { a.model().cdf(cut) };
        let low = below * a.z_tail(theta * beta) / zb;
        let high = above / zb;
        let c = low + high;
        (low / c, high / c, c)
    }

    /// Expected acceptance probability per proposal at level `β` for the
    /// resolved scheme.
    pub fn acceptance_probability(&self, beta: f64) -> Result<f64> {
        let a = self.approximation();
        if beta < a.sure_level() {
            return Ok(1.0);
        }
        let exceed = self.exceed.ln_exceed(beta)?.exp();
        Ok(match self.scheme {
            Scheme::NaiveAR => exceed,
            Scheme::RegVarMixture { m, .. } if beta > 0.0 => {
                let (_, _, c) = self.mixture_weights(beta);
                1.0 / (m * c)
            }
            Scheme::WeibullStratified if beta > 1.0 => exceed / Strata::new(a, beta).total,
            _ => exceed,
        })
    }
}

/// Per-level constants of the mixture proposal.
struct RegVarStep {
    cut: f64,
    low_weight: f64,
    low_scale: f64,
    high_scale: f64,
}

impl SamplerPlan {
    fn regvar_step(&self, beta: f64, exceed: f64, m: f64) -> RegVarStep {
        let theta = match self.scheme {
            Scheme::RegVarMixture { theta, .. } => theta,
            _ => self.config.theta,
        };
        let a = self.approximation();
        let (low_weight, _, _) = self.mixture_weights(beta);
        let high_scale = a.z_tail(beta) / (m * exceed);
        RegVarStep {
            cut: beta - theta * beta,
            low_weight,
            low_scale: high_scale / a.z_tail(theta * beta),
            high_scale,
        }
    }
}

fn domination_constant(exceed: &ExceedTable, beta_max: f64) -> Result<f64> {
    let a = exceed.approximation();
    let mut sup: f64 = 1.0;
    let mut beta = 0.0;
    while beta <= beta_max.max(1.0) {
        let ratio = a.z_tail(beta) / exceed.ln_exceed(beta)?.exp();
        sup = sup.max(ratio);
        beta = if beta < 10.0 { beta + 0.25 } else { beta * 1.05 };
    }
    Ok(1.1 * sup)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SamplerStats {
    pub proposals: u64,
    pub acceptances: u64,
}

impl SamplerStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            f64::NAN
        } else {
            self.acceptances as f64 / self.proposals as f64
        }
    }

    pub fn merge(&mut self, other: &SamplerStats) {
        self.proposals += other.proposals;
        self.acceptances += other.acceptances;
    }
}

/// Piecewise-constant envelope of `P(Z > β - t)` used by the stratified
/// scheme: `(-∞, 0]`, `(kh, (k+1)h]` for `k < m`, `(mh, β]`, `(β, ∞)` with
/// `h = sqrt(β)` and `m = floor(h)`.
#[derive(Debug, Clone)]
struct Strata {
    beta: f64,
    bounds: Vec<(f64, f64)>,
    levels: Vec<f64>,
    cumulative: Vec<f64>,
    total: f64,
}

impl Strata {
    fn new(a: &Approximation, beta: f64) -> Self {
        let model = a.model();
        let h = beta.sqrt();
        let m = h.floor() as usize;
        let mut bounds = Vec::with_capacity(m + 3);
        let mut levels = Vec::with_capacity(m + 3);
        bounds.push((f64::NEG_INFINITY, 0.0));
        levels.push(a.z_tail(beta));
        for k in 0..m {
            let hi = (k + 1) as f64 * h;
            bounds.push((k as f64 * h, hi));
            levels.push(a.z_tail(beta - hi));
        }
        bounds.push((m as f64 * h, beta));
        levels.push(a.z_tail(0.0));
        bounds.push((beta, f64::INFINITY));
        levels.push(1.0);
        let mut cumulative = Vec::with_capacity(bounds.len());
        let mut total = 0.0;
        for (&(lo, hi), &level) in bounds.iter().zip(&levels) {
            total += level * model.mass_between(lo, hi);
            cumulative.push(total);
        }
        Strata {
            beta,
            bounds,
            levels,
            cumulative,
            total,
        }
    }

    fn envelope(&self, t: f64) -> f64 {
        let i = self.bounds.partition_point(|b| b.1 < t).min(self.bounds.len() - 1);
        self.levels[i]
    }
}

/// Per-replication (or per-worker) sampler with counters.
#[derive(Debug)]
pub struct ConditionalSampler<'a> {
    plan: &'a SamplerPlan,
    stats: SamplerStats,
    strata: Option<Strata>,
}

impl ConditionalSampler<'_> {
    pub fn stats(&self) -> SamplerStats {
        self.stats
    }

    pub fn plan(&self) -> &SamplerPlan {
        self.plan
    }

    /// One draw from the conditional law at level `β`.
    pub fn sample(&mut self, beta: f64, rng: &mut CountingRng) -> Result<f64> {
        let exceed = self.plan.exceed.ln_exceed(beta)?.exp();
        self.sample_with_exceed(beta, exceed, rng)
    }

    /// As [`sample`](Self::sample) with `P(X + Z > β)` supplied by the caller.
    pub fn sample_with_exceed(&mut self, beta: f64, exceed: f64, rng: &mut CountingRng) -> Result<f64> {
        let a = self.plan.approximation();
        if beta < a.sure_level() {
            self.stats.proposals += 1;
            self.stats.acceptances += 1;
            return Ok(a.model().sample(rng));
        }
        if !(exceed > 0.0) {
            return Err(Error::SamplerPrecondition {
                beta,
                reason: "P(X + Z > beta) = 0, the conditional law is undefined".into(),
            });
        }
        match self.plan.scheme {
            Scheme::NaiveAR => {
                if let Some(ceiling) = self.plan.config.naive_ceiling {
                    if beta > ceiling && self.plan.config.scheme == SchemeChoice::Naive {
                        return Err(Error::SamplerPrecondition {
                            beta,
                            reason: format!("plain rejection is limited to beta <= {ceiling}"),
                        });
                    }
                }
                self.naive_ar(beta, rng)
            }
            Scheme::RegVarMixture { m, .. } => {
                if beta <= 0.0 {
                    return self.naive_ar(beta, rng);
                }
                let ratio = a.z_tail(beta) / exceed;
                if ratio > m {
                    return Err(Error::SamplerPrecondition {
                        beta,
                        reason: format!("domination constant m = {m:.4} below P(Z > beta)/P(X + Z > beta) = {ratio:.4}"),
                    });
                }
                let step = self.plan.regvar_step(beta, exceed, m);
                self.accept_loop(beta, "regvar", rng, |s, rng| Ok(s.propose_regvar_with(beta, &step, rng)))
            }
            Scheme::WeibullStratified => {
                if beta <= 1.0 {
                    return self.naive_ar(beta, rng);
                }
                self.accept_loop(beta, "stratified", rng, |s, rng| Ok(s.propose_stratified(beta, rng)))
            }
        }
    }

    /// Plain rejection: propose `X`, accept with probability `P(Z > β - X)`.
    pub fn naive_ar(&mut self, beta: f64, rng: &mut CountingRng) -> Result<f64> {
        self.accept_loop(beta, "naive", rng, |s, rng| {
            let x = s.plan.approximation().model().sample(rng);
            Ok((x, s.plan.approximation().z_tail(beta - x)))
        })
    }

    fn accept_loop<F>(&mut self, beta: f64, scheme: &'static str, rng: &mut CountingRng, mut propose: F) -> Result<f64>
    where
        F: FnMut(&mut Self, &mut CountingRng) -> Result<(f64, f64)>,
    {
        let cap = self.plan.config.proposal_cap;
        for _ in 0..cap {
            let (x, p) = propose(self, rng)?;
            self.stats.proposals += 1;
            if rng.uniform() < p {
                self.stats.acceptances += 1;
                return Ok(x);
            }
        }
        Err(Error::SamplerFailure {
            beta,
            scheme,
            proposals: cap,
        })
    }

    /// Candidate from the two-piece mixture and its acceptance probability.
    pub fn propose_regvar(&mut self, beta: f64, rng: &mut CountingRng) -> Result<(f64, f64)> {
        let m = match self.plan.scheme {
            Scheme::RegVarMixture { m, .. } => m,
            _ => {
                return Err(Error::SamplerPrecondition {
                    beta,
                    reason: "plan does not use the mixture scheme".into(),
                })
            }
        };
        let exceed = self.plan.exceed.ln_exceed(beta)?.exp();
        let step = self.plan.regvar_step(beta, exceed, m);
        Ok(self.propose_regvar_with(beta, &step, rng))
    }

    fn propose_regvar_with(&mut self, beta: f64, step: &RegVarStep, rng: &mut CountingRng) -> (f64, f64) {
        let a = self.plan.approximation();
        let model = a.model();
        if rng.uniform() < step.low_weight {
            let x = model.sample_below(step.cut, rng);
            (x, a.z_tail(beta - x) * step.low_scale)
        } else {
            let x = model.sample_above(step.cut, rng);
            (x, a.z_tail(beta - x) * step.high_scale)
        }
    }

    /// Candidate from the stratified envelope and its acceptance probability.
    pub fn propose_stratified(&mut self, beta: f64, rng: &mut CountingRng) -> (f64, f64) {
        let a = self.plan.approximation().clone();
        if self.strata.as_ref().map(|s| s.beta) != Some(beta) {
            self.strata = Some(Strata::new(&a, beta));
        }
        let strata = self.strata.as_ref().expect("just built");
        let u = rng.uniform() * strata.total;
        let i = strata.cumulative.partition_point(|&c| c <= u).min(strata.bounds.len() - 1);
        let (lo, hi) = strata.bounds[i];
        let level = strata.levels[i];
        let x = a.model().sample_between(lo, hi, rng);
        (x, a.z_tail(beta - x) / level)
    }

    /// Envelope mass divided by `P(X + Z > β)`: expected proposals per draw
    /// of the stratified scheme.
    pub fn stratified_cost(&self, beta: f64) -> Result<f64> {
        let a = self.plan.approximation();
        let strata = Strata::new(a, beta);
        Ok(strata.total / self.plan.exceed.ln_exceed(beta)?.exp())
    }

    /// Envelope value at `t`, i.e. the constant dominating `P(Z > β - t)`.
    pub fn stratified_envelope(&self, beta: f64, t: f64) -> f64 {
        Strata::new(self.plan.approximation(), beta).envelope(t)
    }
}
