//! End-to-end Monte-Carlo simulation of content requests, serving distance,
//! correlated port fading and ARQ rounds.
//!
//! Every trial owns a counter-based substream indexed by `(seed, trial)`;
//! within a trial, block 0 draws the content and block `r + 1` drives ARQ
//! round `r`. Tallies are integers, so the reduction is exact and the result
//! does not depend on how rayon splits the work.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::FasChannel;
use crate::corr::PortGrid;
use crate::error::{Error, Result};
use crate::net::{db_to_linear, policy_constant, sample_nearest_distance, CachePolicy, ContentCatalog, NetworkParams};
use crate::rng::{mix_seed, substream};

const Z95: f64 = 1.959_963_984_540_054;
const CHUNK: u64 = 4096;

/// Everything that defines one operating point of the network.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: NetworkParams,
    pub catalog: ContentCatalog,
    pub policy: CachePolicy,
    pub channel: FasChannel,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.catalog.count() != self.policy.len() {
            return Err(Error::InvalidParams(format!(
                "catalog has {} contents but the policy covers {}",
                self.catalog.count(),
                self.policy.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub trials: u64,
    pub seed: u64,
    /// Keep the serving distance of the first round for all retransmissions.
    /// The default redraws it every round, which is what makes rounds
    /// independent and the delay a truncated geometric.
    pub fixed_distance: bool,
}

impl SimConfig {
    pub fn new(scenario: Scenario, trials: u64, seed: u64) -> Self {
        Self { scenario, trials, seed, fixed_distance: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// First-round delivery rate over all requests.
    pub scdp_hat: f64,
    pub scdp_ci95: f64,
    /// Mean delay over cached requests, timeouts counted at `M T₀`, s.
    pub cdd_hat: f64,
    pub cdd_ci95: f64,
    /// Mean delay of the requests delivered within `M` rounds, s.
    pub cdd_conditional: f64,
    pub cdd_conditional_ci95: f64,
    /// First-round success rate of each content; `None` if never requested.
    pub per_content: Vec<Option<f64>>,
    /// Pooled success rate of individual ARQ rounds of cached requests.
    pub per_round_success_rate: f64,
    pub per_round_ci95: f64,
    /// Requests for contents that no SBS caches.
    pub uncached_requests: u64,
    pub trials_run: u64,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    first_success: u64,
    cached: u64,
    rounds: u64,
    rounds_sq: u64,
    delivered: u64,
    delivered_rounds: u64,
    delivered_rounds_sq: u64,
    round_successes: u64,
    requests: Vec<u64>,
    content_success: Vec<u64>,
}

impl Tally {
    fn new(contents: usize) -> Self {
        Self { requests: vec![0; contents], content_success: vec![0; contents], ..Self::default() }
    }

    fn merge(mut self, other: Self) -> Self {
        self.first_success += other.first_success;
        self.cached += other.cached;
        self.rounds += other.rounds;
        self.rounds_sq += other.rounds_sq;
        self.delivered += other.delivered;
        self.delivered_rounds += other.delivered_rounds;
        self.delivered_rounds_sq += other.delivered_rounds_sq;
        self.round_successes += other.round_successes;
        for (a, b) in self.requests.iter_mut().zip(&other.requests) {
            *a += b;
        }
        for (a, b) in self.content_success.iter_mut().zip(&other.content_success) {
            *a += b;
        }
        self
    }
}

/// Sample mean and 95% half-width from integer sums.
fn mean_ci(n: u64, sum: u64, sum_sq: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = ((sum_sq as f64 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, Z95 * (var / nf).sqrt())
}

fn run_trial(cfg: &SimConfig, trial: u64, tally: &mut Tally) -> Result<()> {
    let sc = &cfg.scenario;
    let p = &sc.params;
    let mut rng = substream(cfg.seed, trial, 0);
    let l = sc.catalog.content_for(rng.random::<f64>());
    tally.requests[l - 1] += 1;
    let q = sc.policy.q(l);
    if q == 0.0 {
        return Ok(());
    }
    tally.cached += 1;
    let max_rounds = u64::from(p.max_arq);
    let mut distance = None;
    let mut used = max_rounds;
    let mut delivered = false;
    for round in 0..max_rounds {
        let mut rng = substream(cfg.seed, trial, round + 1);
        let x = match distance {
            Some(x) => x,
            None => {
                let x = sample_nearest_distance(q, p.sbs_intensity, &mut rng)?;
                if cfg.fixed_distance {
                    distance = Some(x);
                }
                x
            }
        };
        let g = sc.channel.sample_fas_gain(&mut rng).gain;
        if p.snr(g, x) >= p.snr_threshold {
            if round == 0 {
                tally.first_success += 1;
                tally.content_success[l - 1] += 1;
            }
            used = round + 1;
            delivered = true;
            break;
        }
    }
    tally.rounds += used;
    tally.rounds_sq += used * used;
    if delivered {
        tally.round_successes += 1;
        tally.delivered += 1;
        tally.delivered_rounds += used;
        tally.delivered_rounds_sq += used * used;
    }
    Ok(())
}

/// Runs `cfg.trials` independent requests.
pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    cfg.scenario.validate()?;
    if cfg.trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let contents = cfg.scenario.catalog.count();
    let chunks = cfg.trials.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::new(contents);
            for trial in c * CHUNK..((c + 1) * CHUNK).min(cfg.trials) {
                run_trial(cfg, trial, &mut t)?;
            }
            Ok(t)
        })
        .try_reduce(|| Tally::new(contents), |a, b| Ok(a.merge(b)))?;

    let n = cfg.trials;
    let t0 = cfg.scenario.params.slot_time;
    let (scdp_hat, scdp_ci95) = mean_ci(n, tally.first_success, tally.first_success);
    let (rounds, rounds_ci) = mean_ci(tally.cached, tally.rounds, tally.rounds_sq);
    let (cond, cond_ci) = mean_ci(tally.delivered, tally.delivered_rounds, tally.delivered_rounds_sq);
    let attempts = tally.rounds;
    let per_round = if attempts > 0 { tally.round_successes as f64 / attempts as f64 } else { f64::NAN };
    let per_round_ci = if attempts > 0 { Z95 * (per_round * (1.0 - per_round) / attempts as f64).sqrt() } else { f64::NAN };
    Ok(SimResult {
        scdp_hat,
        scdp_ci95,
        cdd_hat: t0 * rounds,
        cdd_ci95: t0 * rounds_ci,
        cdd_conditional: t0 * cond,
        cdd_conditional_ci95: t0 * cond_ci,
        per_content: tally
            .requests
            .iter()
            .zip(&tally.content_success)
            .map(|(&r, &s)| (r > 0).then(|| s as f64 / r as f64))
            .collect(),
        per_round_success_rate: per_round,
        per_round_ci95: per_round_ci,
        uncached_requests: n - tally.cached,
        trials_run: n,
    })
}

/// Expected rounds of a delivered request when each round succeeds with
/// probability `p`, given delivery within `max_arq` rounds, times `slot_time`.
pub fn conditional_delay(p: f64, slot_time: f64, max_arq: u32) -> Option<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return None;
    }
    let f = 1.0 - p;
    let (mut num, mut den, mut fm) = (0.0, 0.0, 1.0);
    for m in 1..=max_arq {
        num += m as f64 * fm * p;
        den += fm * p;
        fm *= f;
    }
    Some(slot_time * num / den)
}

/// Scenario parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// SNR threshold in dB.
    EtaDb,
    /// SBS intensity, m⁻².
    MuS,
    /// Same caching probability for all contents.
    QScalar,
    /// Maximum ARQ rounds.
    M,
    /// Port count: `√N × √N` if `N` is a perfect square, else `N × 1`.
    N,
    /// Aperture side in wavelengths, applied to both dimensions.
    W,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] = [Self::EtaDb, Self::MuS, Self::QScalar, Self::M, Self::N, Self::W];

    pub fn name(self) -> &'static str {
        match self {
            Self::EtaDb => "eta_db",
            Self::MuS => "mu_s",
            Self::QScalar => "q_scalar",
            Self::M => "M",
            Self::N => "N",
            Self::W => "W",
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut sc = base.clone();
        match self {
            Self::EtaDb => sc.params.snr_threshold = db_to_linear(value),
            Self::MuS => sc.params.sbs_intensity = value,
            Self::QScalar => sc.policy = policy_constant(sc.catalog.count(), value)?,
            Self::M => sc.params.max_arq = positive_integer(self, value)? as u32,
            Self::N => {
                let n = positive_integer(self, value)?;
                let g = base.channel.grid();
                let side = (n as f64).sqrt().round() as usize;
                let grid = if side * side == n {
                    PortGrid::new(side, side, g.w1(), g.w2())?
                } else {
                    PortGrid::new(n, 1, g.w1(), g.w2())?
                };
                sc.channel = FasChannel::new(grid, base.channel.mvn_tol(), base.channel.seed())?;
            }
            Self::W => {
                let g = base.channel.grid();
                let grid = PortGrid::new(g.n1(), g.n2(), value, value)?;
                sc.channel = FasChannel::new(grid, base.channel.mvn_tol(), base.channel.seed())?;
            }
        }
        sc.validate()?;
        Ok(sc)
    }
}

fn positive_integer(axis: SweepAxis, value: f64) -> Result<usize> {
    if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::InvalidParams(format!("{} = {value} must be a positive integer", axis.name())))
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidAxis(s.to_string()))
    }
}

/// One simulation per value; value `i` runs with seed `mix_seed(seed, i)`.
pub fn simulate_sweep(cfg: &SimConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SimResult>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let point = SimConfig {
                scenario: axis.apply(&cfg.scenario, v)?,
                seed: mix_seed(cfg.seed, i as u64),
                ..cfg.clone()
            };
            simulate(&point)
        })
        .collect()
}
