//! Multivariate normal orthant-type probabilities `P(Z ≤ b)`, `Z ~ N(0, R)`.
//!
//! Genz's separation-of-variables transform maps the integral onto the unit
//! cube of dimension `N - 1`; that is integrated with an extensible
//! Richtmyer (Kronecker) lattice under `K` independent random shifts, with
//! the baker's transform for periodization and antithetic pairing. The
//! spread of the per-shift estimates gives the error estimate.

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rayon::prelude::*;

use crate::corr::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::specfun::{normal_quantile_as241, std_normal_cdf};

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_SHIFTS: usize = 12;
/// Hard cap on integrand evaluations, summed over all shifts.
pub const DEFAULT_MAX_POINTS: usize = 1 << 22;

const INITIAL_POINTS_PER_SHIFT: usize = 64;
/// Inverse-CDF arguments are kept inside `[TINY, 1 - TINY]`.
const TINY: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnResult {
    pub value: f64,
    /// Three standard errors across the random shifts.
    pub error_estimate: f64,
    pub points_used: usize,
    /// `false` when the point budget ran out before `error_estimate ≤ tol`.
    pub converged: bool,
}

impl MvnResult {
    fn exact(value: f64) -> Self {
        Self { value, error_estimate: 0.0, points_used: 0, converged: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnOptions {
    pub tol: f64,
    pub seed: u64,
    pub shifts: usize,
    pub max_points: usize,
}

impl MvnOptions {
    pub fn new(tol: f64, seed: u64) -> Self {
        Self { tol, seed, shifts: DEFAULT_SHIFTS, max_points: DEFAULT_MAX_POINTS }
    }
}

impl Default for MvnOptions {
    fn default() -> Self {
        Self::new(DEFAULT_TOL, 0)
    }
}

/// `P(Z_1 ≤ b_1, …, Z_N ≤ b_N)` with `Z ~ N(0, corr)`. Entries of `upper`
/// may be infinite.
pub fn mvn_cdf(upper: &[f64], corr: &CorrelationMatrix, tol: f64, seed: u64) -> Result<MvnResult> {
    mvn_cdf_with(upper, corr, &MvnOptions::new(tol, seed))
}

/// [`mvn_cdf`] with every coordinate equal to `b`.
pub fn mvn_cdf_equicoordinate(b: f64, corr: &CorrelationMatrix, tol: f64, seed: u64) -> Result<MvnResult> {
    mvn_cdf(&vec![b; corr.dim()], corr, tol, seed)
}

pub fn mvn_cdf_with(upper: &[f64], corr: &CorrelationMatrix, opts: &MvnOptions) -> Result<MvnResult> {
    let dim = corr.dim();
    if upper.len() != dim {
        return Err(Error::InvalidParams(format!("{} limits for a {dim}-dimensional distribution", upper.len())));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 || opts.shifts < 2 {
        return Err(Error::InvalidParams(format!("tol = {} and shifts = {} (need tol > 0, shifts ≥ 2)", opts.tol, opts.shifts)));
    }
    if upper.iter().any(|b| b.is_nan()) {
        return Err(Error::InvalidParams("NaN integration limit".into()));
    }
    if upper.contains(&f64::NEG_INFINITY) {
        return Ok(MvnResult::exact(0.0));
    }

    // +∞ coordinates marginalize out. The rest are ordered by increasing limit.
    let mut active: Vec<usize> = (0..dim).filter(|&i| upper[i].is_finite()).collect();
    if active.is_empty() {
        return Ok(MvnResult::exact(1.0));
    }
    active.sort_by(|&i, &j| upper[i].total_cmp(&upper[j]).then(i.cmp(&j)));
    if active.len() == 1 {
        return Ok(MvnResult::exact(std_normal_cdf(upper[active[0]])));
    }
    let m = active.len();
    let sub = DMatrix::from_fn(m, m, |i, j| corr.get(active[i], active[j]));
    let chol = Cholesky::new(sub)
        .ok_or_else(|| Error::NotFactorizable("reordered correlation submatrix".into()))?
        .l();
    let limits: Vec<f64> = active.iter().map(|&i| upper[i]).collect();
    let integrand = GenzIntegrand::new(&chol, &limits);
    Ok(integrand.integrate(opts))
}

struct GenzIntegrand {
    dim: usize,
    /// Row-major strictly lower part of the Cholesky factor.
    lower: Vec<f64>,
    diag: Vec<f64>,
    limits: Vec<f64>,
    first: f64,
}

impl GenzIntegrand {
    fn new(chol: &DMatrix<f64>, limits: &[f64]) -> Self {
        let dim = limits.len();
        let mut lower = Vec::with_capacity(dim * (dim - 1) / 2);
        for i in 0..dim {
            for j in 0..i {
                lower.push(chol[(i, j)]);
            }
        }
        let diag: Vec<f64> = (0..dim).map(|i| chol[(i, i)]).collect();
        let first = std_normal_cdf(limits[0] / diag[0]);
        Self { dim, lower, diag, limits: limits.to_vec(), first }
    }

    /// Integrand at a point `w` of the `(dim - 1)`-cube; `y` is scratch.
    fn eval(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let mut e = self.first;
        let mut f = e;
        let mut row = 0;
        for i in 1..self.dim {
            if f == 0.0 {
                return 0.0;
            }
            let u = (w[i - 1] * e).clamp(TINY, 1.0 - f64::EPSILON / 2.0);
            y[i - 1] = normal_quantile_as241(u);
            let s: f64 = self.lower[row..row + i].iter().zip(&y[..i]).map(|(l, y)| l * y).sum();
            row += i;
            e = std_normal_cdf((self.limits[i] - s) / self.diag[i]);
            f *= e;
        }
        f
    }

    fn integrate(&self, opts: &MvnOptions) -> MvnResult {
        let cube = self.dim - 1;
        let generators = richtmyer_generators(cube);
        let shifts: Vec<Vec<f64>> = (0..opts.shifts)
            .map(|k| {
                let mut rng = substream(opts.seed, k as u64, 0);
                (0..cube).map(|_| rng.random::<f64>()).collect()
            })
            .collect();

        let mut sums = vec![0.0_f64; opts.shifts];
        let mut done = 0usize;
        let mut target = INITIAL_POINTS_PER_SHIFT;
        loop {
            let range = (done + 1)..=target;
            let partial: Vec<f64> = shifts
                .par_iter()
                .map(|shift| self.lattice_sum(&generators, shift, range.clone()))
                .collect();
            for (s, p) in sums.iter_mut().zip(partial) {
                *s += p;
            }
            done = target;

            let means: Vec<f64> = sums.iter().map(|s| s / done as f64).collect();
            let k = opts.shifts as f64;
            let mean = means.iter().sum::<f64>() / k;
            let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
            let error_estimate = 3.0 * (var / k).sqrt();
            let points_used = 2 * done * opts.shifts;
            let converged = error_estimate <= opts.tol;
            if converged || 4 * done * opts.shifts > opts.max_points {
                return MvnResult { value: mean.clamp(0.0, 1.0), error_estimate, points_used, converged };
            }
            target *= 2;
        }
    }

    /// Sum of antithetic-averaged integrand values over lattice points `range`.
    fn lattice_sum(&self, generators: &[f64], shift: &[f64], range: std::ops::RangeInclusive<usize>) -> f64 {
        let cube = generators.len();
        let mut w = vec![0.0; cube];
        let mut w_anti = vec![0.0; cube];
        let mut y = vec![0.0; cube];
        let mut sum = 0.0;
        for i in range {
            let fi = i as f64;
            for j in 0..cube {
                let x = (fi * generators[j] + shift[j]).fract();
                let baker = 1.0 - (2.0 * x - 1.0).abs();
                w[j] = baker;
                w_anti[j] = 1.0 - baker;
            }
            sum += 0.5 * (self.eval(&w, &mut y) + self.eval(&w_anti, &mut y));
        }
        sum
    }
}

/// `frac(sqrt(p_j))` for the first `count` primes.
fn richtmyer_generators(count: usize) -> Vec<f64> {
    primes(count).into_iter().map(|p| (p as f64).sqrt().fract()).collect()
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while out.len() < count {
        if out.iter().take_while(|&&p| p * p <= candidate).all(|&p| !candidate.is_multiple_of(p)) {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corr::{build_correlation, PortGrid};

    fn bivariate(rho: f64) -> CorrelationMatrix {
        CorrelationMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])).unwrap()
    }

    #[test]
    fn primes_are_primes() {
        assert_eq!(primes(8), vec![2, 3, 5, 7, 11, 13, 17, 19]);
    }

    #[test]
    fn univariate_median() {
        let r = mvn_cdf(&[0.0], &CorrelationMatrix::identity(1), 1e-4, 1).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.error_estimate, 0.0);
    }

    #[test]
    fn independent_trivariate_orthant() {
        let r = mvn_cdf(&[0.0; 3], &CorrelationMatrix::identity(3), 1e-5, 1).unwrap();
        assert!((r.value - 0.125).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn bivariate_orthant_half_correlation() {
        let expected = 0.25 + 0.5f64.asin() / (2.0 * std::f64::consts::PI);
        let r = mvn_cdf(&[0.0, 0.0], &bivariate(0.5), 1e-5, 3).unwrap();
        assert!((r.value - expected).abs() < 1e-5, "{r:?} vs {expected}");
        assert!(r.converged);
    }

    #[test]
    fn infinite_limits_short_circuit() {
        let r = build_correlation(&PortGrid::new(3, 3, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(mvn_cdf_equicoordinate(f64::INFINITY, &r, 1e-4, 0).unwrap().value, 1.0);
        assert_eq!(mvn_cdf_equicoordinate(f64::NEG_INFINITY, &r, 1e-4, 0).unwrap().value, 0.0);
        let mut b = vec![f64::INFINITY; 9];
        b[4] = 0.3;
        let v = mvn_cdf(&b, &r, 1e-4, 0).unwrap();
        assert_eq!(v.value, std_normal_cdf(0.3));
    }

    #[test]
    fn independent_equicoordinate_product() {
        // scipy: norm.cdf(1)**2
        let r = mvn_cdf_equicoordinate(1.0, &CorrelationMatrix::identity(2), 1e-6, 5).unwrap();
        assert!((r.value - 0.707_860_981_737_141).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn bad_inputs() {
        let r = CorrelationMatrix::identity(2);
        assert!(mvn_cdf(&[0.0], &r, 1e-4, 0).is_err());
        assert!(mvn_cdf(&[0.0, 0.0], &r, 0.0, 0).is_err());
        assert!(mvn_cdf(&[0.0, f64::NAN], &r, 1e-4, 0).is_err());
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let r = build_correlation(&PortGrid::new(3, 3, 1.0, 1.0).unwrap()).unwrap();
        let opts = MvnOptions { tol: 1e-12, seed: 0, shifts: 12, max_points: 20_000 };
        let res = mvn_cdf_with(&[0.2; 9], &r, &opts).unwrap();
        assert!(!res.converged);
        assert!(res.points_used <= 20_000);
        assert!(res.value > 0.0 && res.value < 1.0);
    }

    #[test]
    fn seed_reproducible() {
        let r = build_correlation(&PortGrid::new(3, 3, 1.0, 1.0).unwrap()).unwrap();
        let a = mvn_cdf_equicoordinate(0.4, &r, 1e-4, 11).unwrap();
        let b = mvn_cdf_equicoordinate(0.4, &r, 1e-4, 11).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.error_estimate.to_bits(), b.error_estimate.to_bits());
    }

    #[test]
    fn order_invariant() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 1.0, 0.5, -0.2, 0.5, 1.0]);
        let r = CorrelationMatrix::from_matrix(m.clone()).unwrap();
        // Same distribution with coordinates 0 and 2 swapped.
        let perm = [2, 1, 0];
        let swapped = CorrelationMatrix::from_matrix(DMatrix::from_fn(3, 3, |i, j| m[(perm[i], perm[j])])).unwrap();
        let a = mvn_cdf(&[0.1, -0.4, 0.9], &r, 1e-6, 2).unwrap();
        let b = mvn_cdf(&[0.9, -0.4, 0.1], &swapped, 1e-6, 2).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
