#![allow(dead_code)]

use fascache::adaptive;
use fascache::specfun::std_normal_cdf;
use nalgebra::DMatrix;

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `P(L ξ ≤ b)` for standard normal `ξ`, by nested adaptive Gauss-Kronrod
/// over the Cholesky coordinates. Intended for dimensions up to 3.
pub fn mvn_nested(b: &[f64], l: &DMatrix<f64>) -> f64 {
    let mut prefix = Vec::with_capacity(b.len());
    nested_level(b, l, &mut prefix)
}

fn nested_level(b: &[f64], l: &DMatrix<f64>, prefix: &mut Vec<f64>) -> f64 {
    let k = prefix.len();
    let shift: f64 = (0..k).map(|j| l[(k, j)] * prefix[j]).sum();
    let limit = (b[k] - shift) / l[(k, k)];
    if k + 1 == b.len() {
        return std_normal_cdf(limit);
    }
    let lo = -9.0;
    if limit <= lo {
        return 0.0;
    }
    let hi = limit.min(9.0);
    adaptive::integrate(
        |t| {
            prefix.push(t);
            let v = phi(t) * nested_level(b, l, prefix);
            prefix.pop();
            Ok(v)
        },
        lo,
        hi,
        1e-12,
        0.0,
        2000,
    )
    .expect("nested quadrature converges")
    .value
}

/// Kolmogorov-Smirnov distance between `samples` and `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
