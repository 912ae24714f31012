//! Content popularity, probabilistic cache placement, network parameters and
//! the distance from a typical user to the nearest SBS caching a content.
//!
//! Everything in here is SI/linear. dB conversion happens at the config
//! boundary through [`dbm_to_watts`] and [`db_to_linear`].

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

/// Zipf-distributed request probabilities, most popular first.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentCatalog {
    zipf_exp: f64,
    popularity: Vec<f64>,
}

impl ContentCatalog {
    pub fn count(&self) -> usize {
        self.popularity.len()
    }

    pub fn zipf_exp(&self) -> f64 {
        self.zipf_exp
    }

    pub fn popularity(&self) -> &[f64] {
        &self.popularity
    }

    /// Request probability of 1-based content `l`.
    pub fn probability(&self, l: usize) -> f64 {
        self.popularity[l - 1]
    }

    /// Inverse-CDF draw of a 1-based content index from a uniform `u`.
    pub fn content_for(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in self.popularity.iter().enumerate() {
            acc += p;
            if u < acc {
                return i + 1;
            }
        }
        self.popularity.len()
    }
}

/// `p_l = l^{-ζ} / Σ_k k^{-ζ}`.
pub fn zipf_popularity(count: usize, zipf_exp: f64) -> Result<ContentCatalog> {
    if count == 0 {
        return Err(Error::InvalidParams("catalog needs at least one content".into()));
    }
    if !(zipf_exp.is_finite() && zipf_exp >= 0.0) {
        return Err(Error::InvalidParams(format!("Zipf exponent {zipf_exp} must be finite and nonnegative")));
    }
    let raw: Vec<f64> = (1..=count).map(|l| (l as f64).powf(-zipf_exp)).collect();
    // Sum smallest-first for accuracy.
    let total: f64 = raw.iter().rev().sum();
    Ok(ContentCatalog { zipf_exp, popularity: raw.into_iter().map(|v| v / total).collect() })
}

/// Caching probabilities `q_l` under a storage budget of `capacity` contents.
#[derive(Debug, Clone, PartialEq)]
pub struct CachePolicy {
    probs: Vec<f64>,
    capacity: usize,
}

impl CachePolicy {
    /// Explicit placement; checks `q_l ∈ [0, 1]` and `Σ q_l ≤ capacity`.
    pub fn new(probs: Vec<f64>, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParams("cache capacity must be positive".into()));
        }
        if let Some(q) = probs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(Error::InvalidParams(format!("caching probability {q} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if total > capacity as f64 + 1e-9 {
            return Err(Error::InvalidParams(format!("Σq = {total} exceeds capacity {capacity}")));
        }
        Ok(Self { probs, capacity })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `q_l` for 1-based content `l`.
    pub fn q(&self, l: usize) -> f64 {
        self.probs[l - 1]
    }
}

fn check_k_of_l(count: usize, capacity: usize) -> Result<()> {
    if capacity == 0 || capacity > count {
        return Err(Error::InvalidParams(format!("capacity {capacity} must be in 1..={count}")));
    }
    Ok(())
}

/// Cache the `capacity` most popular contents everywhere.
pub fn policy_top_k(count: usize, capacity: usize) -> Result<CachePolicy> {
    check_k_of_l(count, capacity)?;
    let probs = (1..=count).map(|l| if l <= capacity { 1.0 } else { 0.0 }).collect();
    CachePolicy::new(probs, capacity)
}

/// Spread the budget evenly: `q_l = K / L`.
pub fn policy_uniform(count: usize, capacity: usize) -> Result<CachePolicy> {
    check_k_of_l(count, capacity)?;
    let q = capacity as f64 / count as f64;
    CachePolicy::new(vec![q; count], capacity)
}

/// Same `q` for every content, with the smallest budget that admits it,
/// `⌈qL⌉`. This is the per-content "what if content l is cached with
/// probability q" setting used by the sweeps.
pub fn policy_constant(count: usize, q: f64) -> Result<CachePolicy> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParams(format!("caching probability {q} outside [0, 1]")));
    }
    let capacity = ((q * count as f64) - 1e-9).ceil().max(1.0) as usize;
    CachePolicy::new(vec![q; count], capacity)
}

/// Link and deployment parameters, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// SBS intensity `μ_S`, m⁻².
    pub sbs_intensity: f64,
    /// Transmit power `P`, W.
    pub tx_power: f64,
    /// Noise-plus-weak-interference power `σ²`, W.
    pub noise_power: f64,
    pub pathloss_exp: f64,
    pub pathloss_const: f64,
    /// Linear SNR threshold `η`.
    pub snr_threshold: f64,
    /// Duration of one ARQ round, s.
    pub slot_time: f64,
    pub max_arq: u32,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("sbs_intensity", self.sbs_intensity),
            ("tx_power", self.tx_power),
            ("noise_power", self.noise_power),
            ("pathloss_exp", self.pathloss_exp),
            ("pathloss_const", self.pathloss_const),
            ("snr_threshold", self.snr_threshold),
            ("slot_time", self.slot_time),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be finite and positive")));
            }
        }
        if self.max_arq == 0 {
            return Err(Error::InvalidParams("max_arq must be at least 1".into()));
        }
        Ok(())
    }

    /// Gain threshold at distance `x`: `g ≥ η σ² x^α / (P β)`.
    pub fn gain_threshold(&self, x: f64) -> f64 {
        self.snr_threshold * self.noise_power * x.powf(self.pathloss_exp) / (self.tx_power * self.pathloss_const)
    }

    /// Received SNR for gain `g` at distance `x`.
    pub fn snr(&self, gain: f64, x: f64) -> f64 {
        self.tx_power * gain * self.pathloss_const * x.powf(-self.pathloss_exp) / self.noise_power
    }
}

impl Default for NetworkParams {
    /// μ_S = 10⁻² m⁻², P = −30 dBm, σ² = −60 dBm, α = 3, β = 1, η = 0 dB,
    /// T₀ = 1 ms, M = 3.
    fn default() -> Self {
        Self {
            sbs_intensity: 1e-2,
            tx_power: dbm_to_watts(-30.0),
            noise_power: dbm_to_watts(-60.0),
            pathloss_exp: 3.0,
            pathloss_const: 1.0,
            snr_threshold: 1.0,
            slot_time: 1e-3,
            max_arq: 3,
        }
    }
}

fn check_thinned(q: f64, sbs_intensity: f64) -> Result<f64> {
    let lambda = q * sbs_intensity;
    if q == 0.0 {
        return Err(Error::Uncached { content: 0 });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParams(format!("thinned intensity q·μ = {lambda} must be positive")));
    }
    Ok(lambda)
}

/// `f(x) = 2π q μ x exp(-π q μ x²)`, the nearest-point distance density of a
/// PPP of intensity `qμ` in the plane.
pub fn nearest_distance_pdf(x: f64, q: f64, sbs_intensity: f64) -> Result<f64> {
    let lambda = check_thinned(q, sbs_intensity)?;
    if x < 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * PI * lambda * x * (-PI * lambda * x * x).exp())
}

/// `1 - exp(-π q μ x²)`.
pub fn nearest_distance_cdf(x: f64, q: f64, sbs_intensity: f64) -> Result<f64> {
    let lambda = check_thinned(q, sbs_intensity)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(-(-PI * lambda * x * x).exp_m1())
}

/// Inverse-CDF transform of a uniform `u ∈ [0, 1)`.
pub fn nearest_distance_from_uniform(u: f64, q: f64, sbs_intensity: f64) -> Result<f64> {
    let lambda = check_thinned(q, sbs_intensity)?;
    Ok((-(-u).ln_1p() / (PI * lambda)).sqrt())
}

pub fn sample_nearest_distance<R: Rng + ?Sized>(q: f64, sbs_intensity: f64, rng: &mut R) -> Result<f64> {
    nearest_distance_from_uniform(rng.random::<f64>(), q, sbs_intensity)
}

/// `10^{(x - 30)/10}`.
pub fn dbm_to_watts(x_dbm: f64) -> f64 {
    10f64.powf((x_dbm - 30.0) / 10.0)
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
