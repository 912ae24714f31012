//! Best-port channel gain of a fluid antenna.
//!
//! Port gains are unit-mean exponential (Rayleigh fading); their dependence
//! is a Gaussian copula whose correlation matrix is the port correlation
//! matrix. Only gains are modeled, never phases.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::corr::{build_correlation, CorrelationMatrix, PortGrid};
use crate::error::{Error, Result};
use crate::mvn::{mvn_cdf_equicoordinate, MvnResult, DEFAULT_TOL};
use crate::specfun::{erfc, std_normal_quantile_unchecked};

/// CDF values are clamped into `[EPS, 1 - EPS]` before the normal quantile.
pub const QUANTILE_CLAMP: f64 = 1e-15;

/// `F(r) = 1 - e^{-r}`.
pub fn marginal_gain_cdf(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        -(-r).exp_m1()
    }
}

/// One draw of the best-port gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FasDraw {
    pub gain: f64,
    /// 1-based index of the selected port.
    pub port: usize,
}

#[derive(Debug, Clone)]
pub struct FasChannel {
    grid: PortGrid,
    corr: CorrelationMatrix,
    mvn_tol: f64,
    seed: u64,
}

impl FasChannel {
    pub fn new(grid: PortGrid, mvn_tol: f64, seed: u64) -> Result<Self> {
        let corr = build_correlation(&grid)?;
        Self::with_correlation(grid, corr, mvn_tol, seed)
    }

    /// Channel on `grid` with an explicitly supplied correlation matrix.
    pub fn with_correlation(grid: PortGrid, corr: CorrelationMatrix, mvn_tol: f64, seed: u64) -> Result<Self> {
        if corr.dim() != grid.port_count() {
            return Err(Error::InvalidParams(format!(
                "correlation matrix is {0}×{0} but the grid has {1} ports",
                corr.dim(),
                grid.port_count()
            )));
        }
        if mvn_tol.is_nan() || mvn_tol <= 0.0 {
            return Err(Error::InvalidParams(format!("mvn_tol = {mvn_tol} must be positive")));
        }
        Ok(Self { grid, corr, mvn_tol, seed })
    }

    /// Single fixed antenna.
    pub fn fixed() -> Self {
        Self {
            grid: PortGrid::single(),
            corr: CorrelationMatrix::identity(1),
            mvn_tol: DEFAULT_TOL,
            seed: 0,
        }
    }

    pub fn grid(&self) -> &PortGrid {
        &self.grid
    }

    pub fn corr(&self) -> &CorrelationMatrix {
        &self.corr
    }

    pub fn mvn_tol(&self) -> f64 {
        self.mvn_tol
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn port_count(&self) -> usize {
        self.corr.dim()
    }

    /// Normal-scale equicoordinate limit for gain threshold `r`.
    /// The upper half goes through the survival `e^{-r}` so large thresholds
    /// keep their precision.
    pub fn copula_limit(r: f64) -> f64 {
        let u = marginal_gain_cdf(r);
        if u <= 0.5 {
            std_normal_quantile_unchecked(u.max(QUANTILE_CLAMP))
        } else {
            -std_normal_quantile_unchecked((-r).exp().max(QUANTILE_CLAMP))
        }
    }

    /// `P(g_FAS ≤ r)` with the channel's own seed.
    pub fn fas_gain_cdf(&self, r: f64) -> Result<MvnResult> {
        self.fas_gain_cdf_seeded(r, self.seed)
    }

    pub fn fas_gain_cdf_seeded(&self, r: f64, seed: u64) -> Result<MvnResult> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::Domain { function: "fas_gain_cdf", value: r });
        }
        if r == 0.0 {
            return Ok(MvnResult { value: 0.0, error_estimate: 0.0, points_used: 0, converged: true });
        }
        let b = Self::copula_limit(r);
        mvn_cdf_equicoordinate(b, &self.corr, self.mvn_tol, seed)
    }

    /// Correlated standard-normal port layer `z = L ξ`.
    pub fn sample_gaussian_layer<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], xi: &mut [f64]) {
        let n = self.port_count();
        for x in xi.iter_mut().take(n) {
            *x = rng.sample(StandardNormal);
        }
        let l = self.corr.chol();
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..=i {
                s += l[(i, j)] * xi[j];
            }
            z[i] = s;
        }
    }

    /// Draws all port gains and returns the largest. `g = -ln(1 - Φ(z))` is
    /// increasing in `z`, so the best port is the largest Gaussian coordinate.
    pub fn sample_fas_gain<R: Rng + ?Sized>(&self, rng: &mut R) -> FasDraw {
        let n = self.port_count();
        let mut z = [0.0; 64];
        let mut xi = [0.0; 64];
        if n <= 64 {
            self.sample_gaussian_layer(rng, &mut z[..n], &mut xi[..n]);
            best_port(&z[..n])
        } else {
            let mut z = vec![0.0; n];
            let mut xi = vec![0.0; n];
            self.sample_gaussian_layer(rng, &mut z, &mut xi);
            best_port(&z)
        }
    }
}

/// Exp(1) gain with copula coordinate `z`: `-ln Φ(-z)`.
pub fn gain_from_normal(z: f64) -> f64 {
    -(0.5 * erfc(z * FRAC_1_SQRT_2)).ln()
}

fn best_port(z: &[f64]) -> FasDraw {
    let (idx, &zmax) = z
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one port");
    FasDraw { gain: gain_from_normal(zmax), port: idx + 1 }
}
