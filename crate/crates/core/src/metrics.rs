//! Successful-content-delivery probability (SCDP) and content-delivery
//! delay (CDD).
//!
//! The per-content success probability is
//!
//! ```text
//! P_s(q) = ∫₀^∞ 2π qμ x e^{-π qμ x²} [1 - F_FAS(η σ² x^α / (P β))] dx
//! ```
//!
//! evaluated two ways: a fixed Gauss-Laguerre rule at the Laguerre roots
//! (with the `e^{κ}` compensation carried by the rule's scaled weights), and
//! an adaptive Gauss-Kronrod oracle over a truncated range. The FAS survival
//! at each Gauss-Laguerre node depends only on the node, not on `q`, so one
//! table of node survivals serves every content.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::adaptive;
use crate::channel::FasChannel;
use crate::error::{Error, Result};
use crate::net::{CachePolicy, ContentCatalog, NetworkParams};
use crate::rng::mix_seed;
use crate::specfun::QuadratureRule;

pub const DEFAULT_QUAD_ORDER: usize = 30;
/// GL and adaptive results closer than `max(this, 3 × MVN error)` agree.
pub const CROSS_CHECK_TOL: f64 = 2e-3;
/// Success probabilities below this give an unbounded delay.
pub const MIN_SUCCESS: f64 = 1e-12;
/// Truncated tail mass of the distance law in the adaptive path.
const TAIL_MASS: f64 = 1e-13;
const ADAPTIVE_MAX_INTERVALS: usize = 400;

/// Weight convention of the Gauss-Laguerre path.
///
/// `Standard` uses the textbook weights `κ/((A+1)² L_{A+1}(κ)²)` and
/// converges to the integral. `AsPrinted` keeps the extra factor 1/2 of the
/// published node formula, which halves every success probability; it is
/// kept only so that discrepancy can be measured against the adaptive path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightConvention {
    #[default]
    Standard,
    AsPrinted,
}

impl WeightConvention {
    fn factor(self) -> f64 {
        match self {
            Self::Standard => 1.0,
            Self::AsPrinted => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GaussLaguerre,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessResult {
    pub value: f64,
    pub method: Method,
    /// Gauss-Laguerre order; 0 for the adaptive path.
    pub quad_order: usize,
    pub mvn_tol: f64,
    /// Propagated bound on the MVN contribution to the error.
    pub mvn_error: f64,
    /// All MVN evaluations met their tolerance.
    pub converged: bool,
}

impl SuccessResult {
    fn zero(method: Method, quad_order: usize, mvn_tol: f64) -> Self {
        Self { value: 0.0, method, quad_order, mvn_tol, mvn_error: 0.0, converged: true }
    }
}

/// `1 - F_FAS` at the gain threshold of every Gauss-Laguerre node.
#[derive(Debug, Clone)]
pub struct NodeTable {
    nodes: Vec<f64>,
    scaled_weights: Vec<f64>,
    survival: Vec<f64>,
    error: Vec<f64>,
    converged: bool,
    mvn_tol: f64,
}

impl NodeTable {
    /// One MVN evaluation per node, node `a` seeded from `(channel seed, a)`.
    pub fn build(params: &NetworkParams, ch: &FasChannel, rule: &QuadratureRule) -> Result<Self> {
        params.validate()?;
        let evals: Vec<_> = rule
            .nodes()
            .par_iter()
            .enumerate()
            .map(|(a, &kappa)| ch.fas_gain_cdf_seeded(params.gain_threshold(kappa), mix_seed(ch.seed(), a as u64)))
            .collect::<Result<_>>()?;
        Ok(Self {
            nodes: rule.nodes().to_vec(),
            scaled_weights: rule.scaled_weights().to_vec(),
            survival: evals.iter().map(|e| 1.0 - e.value).collect(),
            error: evals.iter().map(|e| e.error_estimate).collect(),
            converged: evals.iter().all(|e| e.converged),
            mvn_tol: ch.mvn_tol(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Gauss-Laguerre `P_s` for thinned intensity `qμ`.
    pub fn success(&self, q: f64, sbs_intensity: f64) -> SuccessResult {
        self.success_with(q, sbs_intensity, WeightConvention::Standard)
    }

    pub fn success_with(&self, q: f64, sbs_intensity: f64, convention: WeightConvention) -> SuccessResult {
        let method = Method::GaussLaguerre;
        if q <= 0.0 {
            return SuccessResult::zero(method, self.order(), self.mvn_tol);
        }
        let lambda = q * sbs_intensity;
        let mut value = 0.0;
        let mut mvn_error = 0.0;
        for a in 0..self.nodes.len() {
            let k = self.nodes[a];
            let dist = 2.0 * PI * lambda * k * (-PI * lambda * k * k).exp();
            let w = convention.factor() * self.scaled_weights[a] * dist;
            value += w * self.survival[a];
            mvn_error += w.abs() * self.error[a];
        }
        SuccessResult {
            value: value.clamp(0.0, 1.0),
            method,
            quad_order: self.order(),
            mvn_tol: self.mvn_tol,
            mvn_error,
            converged: self.converged,
        }
    }
}

fn check_content(l: usize, policy: &CachePolicy) -> Result<f64> {
    if l == 0 || l > policy.len() {
        return Err(Error::InvalidParams(format!("content index {l} outside 1..={}", policy.len())));
    }
    Ok(policy.q(l))
}

/// Gauss-Laguerre success probability of content `l` (1-based).
pub fn success_probability(
    l: usize,
    params: &NetworkParams,
    policy: &CachePolicy,
    ch: &FasChannel,
    rule: &QuadratureRule,
) -> Result<SuccessResult> {
    success_probability_with(l, params, policy, ch, rule, WeightConvention::Standard)
}

/// [`success_probability`] under an explicit weight convention.
pub fn success_probability_with(
    l: usize,
    params: &NetworkParams,
    policy: &CachePolicy,
    ch: &FasChannel,
    rule: &QuadratureRule,
    convention: WeightConvention,
) -> Result<SuccessResult> {
    let q = check_content(l, policy)?;
    if q == 0.0 {
        params.validate()?;
        return Ok(SuccessResult::zero(Method::GaussLaguerre, rule.order(), ch.mvn_tol()));
    }
    Ok(NodeTable::build(params, ch, rule)?.success_with(q, params.sbs_intensity, convention))
}

/// `P_s` at caching probability `q`, by adaptive Gauss-Kronrod.
pub fn success_probability_adaptive_q(q: f64, params: &NetworkParams, ch: &FasChannel) -> Result<SuccessResult> {
    params.validate()?;
    let method = Method::Adaptive;
    if q <= 0.0 {
        return Ok(SuccessResult::zero(method, 0, ch.mvn_tol()));
    }
    let lambda = q * params.sbs_intensity;
    let x_max = (-TAIL_MASS.ln() / (PI * lambda)).sqrt();
    let exact_cdf = ch.port_count() == 1;
    let mut worst_mvn = 0.0_f64;
    let mut converged = true;
    let integrand = |x: f64| -> Result<f64> {
        let cdf = ch.fas_gain_cdf(params.gain_threshold(x))?;
        worst_mvn = worst_mvn.max(cdf.error_estimate);
        converged &= cdf.converged;
        Ok(2.0 * PI * lambda * x * (-PI * lambda * x * x).exp() * (1.0 - cdf.value))
    };
    let (abs_tol, rel_tol) = if exact_cdf { (1e-12, 1e-12) } else { (ch.mvn_tol(), 0.0) };
    let res = adaptive::integrate(integrand, 0.0, x_max, abs_tol, rel_tol, ADAPTIVE_MAX_INTERVALS)?;
    Ok(SuccessResult {
        value: res.value.clamp(0.0, 1.0),
        method,
        quad_order: 0,
        mvn_tol: ch.mvn_tol(),
        // The distance density integrates to one, so a uniform MVN error
        // bound carries straight through.
        mvn_error: worst_mvn,
        converged,
    })
}

/// Adaptive-quadrature oracle for [`success_probability`].
pub fn success_probability_adaptive(
    l: usize,
    params: &NetworkParams,
    policy: &CachePolicy,
    ch: &FasChannel,
) -> Result<SuccessResult> {
    let q = check_content(l, policy)?;
    success_probability_adaptive_q(q, params, ch)
}

fn check_lengths(catalog: &ContentCatalog, policy: &CachePolicy) -> Result<()> {
    if catalog.count() != policy.len() {
        return Err(Error::InvalidParams(format!(
            "catalog has {} contents but the policy covers {}",
            catalog.count(),
            policy.len()
        )));
    }
    Ok(())
}

/// `Σ_l p_l P_s,l` from the Gauss-Laguerre path.
pub fn scdp(
    params: &NetworkParams,
    catalog: &ContentCatalog,
    policy: &CachePolicy,
    ch: &FasChannel,
    rule: &QuadratureRule,
) -> Result<SuccessResult> {
    scdp_with(params, catalog, policy, ch, rule, WeightConvention::Standard)
}

/// [`scdp`] under an explicit weight convention.
pub fn scdp_with(
    params: &NetworkParams,
    catalog: &ContentCatalog,
    policy: &CachePolicy,
    ch: &FasChannel,
    rule: &QuadratureRule,
    convention: WeightConvention,
) -> Result<SuccessResult> {
    check_lengths(catalog, policy)?;
    let table = NodeTable::build(params, ch, rule)?;
    let mut value = 0.0;
    let mut mvn_error = 0.0;
    for (p, &q) in catalog.popularity().iter().zip(policy.probs()) {
        let s = table.success_with(q, params.sbs_intensity, convention);
        value += p * s.value;
        mvn_error += p * s.mvn_error;
    }
    Ok(SuccessResult {
        value: value.clamp(0.0, 1.0),
        method: Method::GaussLaguerre,
        quad_order: rule.order(),
        mvn_tol: ch.mvn_tol(),
        mvn_error,
        converged: table.converged,
    })
}

/// SCDP from the adaptive path; contents sharing a `q` share one integral.
pub fn scdp_adaptive(
    params: &NetworkParams,
    catalog: &ContentCatalog,
    policy: &CachePolicy,
    ch: &FasChannel,
) -> Result<SuccessResult> {
    check_lengths(catalog, policy)?;
    let mut by_q: HashMap<u64, SuccessResult> = HashMap::new();
    let mut value = 0.0;
    let mut mvn_error = 0.0;
    let mut converged = true;
    for (p, &q) in catalog.popularity().iter().zip(policy.probs()) {
        let s = match by_q.get(&q.to_bits()) {
            Some(s) => *s,
            None => {
                let s = success_probability_adaptive_q(q, params, ch)?;
                by_q.insert(q.to_bits(), s);
                s
            }
        };
        value += p * s.value;
        mvn_error += p * s.mvn_error;
        converged &= s.converged;
    }
    Ok(SuccessResult { value: value.clamp(0.0, 1.0), method: Method::Adaptive, quad_order: 0, mvn_tol: ch.mvn_tol(), mvn_error, converged })
}

/// Both paths and whether they agree within
/// `max(CROSS_CHECK_TOL, 3 × combined MVN error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck {
    pub gauss_laguerre: SuccessResult,
    pub adaptive: SuccessResult,
    pub agree: bool,
}

impl CrossCheck {
    pub fn new(gauss_laguerre: SuccessResult, adaptive: SuccessResult) -> Self {
        let tol = CROSS_CHECK_TOL.max(3.0 * (gauss_laguerre.mvn_error + adaptive.mvn_error));
        let agree = (gauss_laguerre.value - adaptive.value).abs() <= tol;
        if !agree {
            log::warn!(
                "Gauss-Laguerre ({:.6}) and adaptive ({:.6}) success probabilities differ by more than {tol:.1e}",
                gauss_laguerre.value,
                adaptive.value
            );
        }
        Self { gauss_laguerre, adaptive, agree }
    }

    pub fn difference(&self) -> f64 {
        (self.gauss_laguerre.value - self.adaptive.value).abs()
    }
}

pub fn scdp_cross_check(
    params: &NetworkParams,
    catalog: &ContentCatalog,
    policy: &CachePolicy,
    ch: &FasChannel,
    rule: &QuadratureRule,
) -> Result<CrossCheck> {
    Ok(CrossCheck::new(scdp(params, catalog, policy, ch, rule)?, scdp_adaptive(params, catalog, policy, ch)?))
}

/// Expected delivery time with at most `max_arq` rounds of `slot_time`:
/// `T₀ (1 - (1 - P)^M) / P`, i.e. `T₀ Σ_{m<M} (1 - P)^m`.
pub fn delay_from_success(success: f64, slot_time: f64, max_arq: u32) -> Option<f64> {
    let p = success.clamp(0.0, 1.0);
    if p < MIN_SUCCESS {
        return None;
    }
    if max_arq == 1 {
        return Some(slot_time);
    }
    // (1 - P)^M - 1 without cancellation for small P
    Some(slot_time * -(max_arq as f64 * (-p).ln_1p()).exp_m1() / p)
}

/// `T₀ / P`, the delay without a retransmission cap.
pub fn asymptotic_delay_from_success(success: f64, slot_time: f64) -> Option<f64> {
    let p = success.clamp(0.0, 1.0);
    (p >= MIN_SUCCESS).then(|| slot_time / p)
}

fn delay_for(l: usize, success: f64, params: &NetworkParams, q: f64, asymptotic: bool) -> Result<f64> {
    if q == 0.0 {
        return Err(Error::Uncached { content: l });
    }
    let d = if asymptotic {
        asymptotic_delay_from_success(success, params.slot_time)
    } else {
        delay_from_success(success, params.slot_time, params.max_arq)
    };
    d.ok_or(Error::InfiniteDelay { content: l })
}

/// CDD of content `l`, in seconds.
pub fn cdd(l: usize, params: &NetworkParams, policy: &CachePolicy, ch: &FasChannel, rule: &QuadratureRule) -> Result<f64> {
    let q = check_content(l, policy)?;
    if q == 0.0 {
        return Err(Error::Uncached { content: l });
    }
    let s = success_probability(l, params, policy, ch, rule)?;
    delay_for(l, s.value, params, q, false)
}

/// CDD of content `l` as the number of ARQ rounds grows without bound.
pub fn cdd_asymptotic(l: usize, params: &NetworkParams, policy: &CachePolicy, ch: &FasChannel, rule: &QuadratureRule) -> Result<f64> {
    let q = check_content(l, policy)?;
    if q == 0.0 {
        return Err(Error::Uncached { content: l });
    }
    let s = success_probability(l, params, policy, ch, rule)?;
    delay_for(l, s.value, params, q, true)
}

/// Popularity-weighted CDD `Σ_l p_l D_l`. Any requested content that is
/// never cached makes the aggregate unbounded.
pub fn cdd_weighted(
    params: &NetworkParams,
    catalog: &ContentCatalog,
    policy: &CachePolicy,
    ch: &FasChannel,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_lengths(catalog, policy)?;
    if let Some(l) = (1..=catalog.count()).find(|&l| catalog.probability(l) > 0.0 && policy.q(l) == 0.0) {
        return Err(Error::InfiniteDelay { content: l });
    }
    let table = NodeTable::build(params, ch, rule)?;
    let mut total = 0.0;
    for l in 1..=catalog.count() {
        let p = catalog.probability(l);
        if p == 0.0 {
            continue;
        }
        let q = policy.q(l);
        let s = table.success(q, params.sbs_intensity);
        total += p * delay_for(l, s.value, params, q, false).map_err(|_| Error::InfiniteDelay { content: l })?;
    }
    Ok(total)
}

/// Popularity-weighted mean of per-content delays; `None` if any is unbounded.
pub fn weighted_delay(popularity: &[f64], delays: &[f64]) -> Option<f64> {
    let mut total = 0.0;
    for (&p, &d) in popularity.iter().zip(delays) {
        if p > 0.0 {
            if !d.is_finite() {
                return None;
            }
            total += p * d;
        }
    }
    Some(total)
}
