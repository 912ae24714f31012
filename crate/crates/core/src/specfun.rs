//! Special functions and Gauss-Laguerre rule construction.
//!
//! Everything here is a pure function of its arguments. `erf`/`erfc` are the
//! correctly rounded-ish `libm` kernels; the inverses are built on top of them.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{Error, Result};

const J0_TAYLOR_THRESHOLD: f64 = 1e-4;
const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Zeroth-order spherical Bessel function of the first kind, `sin(x)/x`.
pub fn spherical_bessel_j0(x: f64) -> f64 {
    if x.abs() < J0_TAYLOR_THRESHOLD {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Initial guess for `erf^-1(x)`, |x| < 1, from Giles' single-precision
/// polynomial fit. `w` is `-ln((1 - x)(1 + x))`, passed in so callers working
/// from the complement can form it without cancellation.
fn erf_inv_guess(x: f64, w: f64) -> f64 {
    let p = if w < 5.0 {
        let w = w - 2.5;
        let mut p = 2.810_226_36e-8;
        p = 3.432_739_39e-7 + p * w;
        p = -3.523_387_7e-6 + p * w;
        p = -4.391_506_54e-6 + p * w;
        p = 2.185_808_7e-4 + p * w;
        p = -1.253_725_03e-3 + p * w;
        p = -4.177_681_64e-3 + p * w;
        p = 2.466_407_27e-1 + p * w;
        1.501_409_41 + p * w
    } else {
        let w = w.sqrt() - 3.0;
        let mut p = -2.002_142_57e-4;
        p = 1.009_505_58e-4 + p * w;
        p = 1.349_343_22e-3 + p * w;
        p = -3.673_428_44e-3 + p * w;
        p = 5.739_507_73e-3 + p * w;
        p = -7.622_461_3e-3 + p * w;
        p = 9.438_870_47e-3 + p * w;
        p = 1.001_674_06 + p * w;
        2.832_976_82 + p * w
    };
    p * x
}

/// Inverse error function on (-1, 1).
///
/// Rational starting value followed by Halley steps on `erf(y) - p`; one step
/// is normally enough, a second only fires when the guess lands far out in
/// the tail.
pub fn erf_inv(p: f64) -> Result<f64> {
    if p.is_nan() || p.abs() >= 1.0 {
        return Err(Error::Domain {
            function: "erf_inv",
            value: p,
        });
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p.abs() > 0.5 {
        // Work from the complement to keep the tail accurate.
        let q = 1.0 - p.abs();
        let y = erfc_inv_unchecked(q);
        return Ok(y.copysign(p));
    }
    let w = -((1.0 - p) * (1.0 + p)).ln();
    let mut y = erf_inv_guess(p, w);
    for _ in 0..3 {
        let f = erf(y) - p;
        let dy = TWO_OVER_SQRT_PI * (-y * y).exp();
        let step = f / dy;
        let step = step / (1.0 + y * step);
        y -= step;
        if step.abs() <= 1e-16 * y.abs() {
            break;
        }
    }
    Ok(y)
}

/// `y` with `erfc(y) = q`, for q in (0, 2). No domain check.
fn erfc_inv_unchecked(q: f64) -> f64 {
    if q > 1.0 {
        return -erfc_inv_unchecked(2.0 - q);
    }
    // q in (0, 1]: y >= 0. The single-precision fit degrades far into the
    // tail, so start from the AS 241 quantile there.
    let w = -(q.ln() + (2.0 - q).ln());
    let mut y = if w < 16.0 { erf_inv_guess(1.0 - q, w) } else { -FRAC_1_SQRT_2 * normal_quantile_as241(0.5 * q) };
    for _ in 0..4 {
        let f = erfc(y) - q;
        // d/dy erfc(y) = -2/sqrt(pi) e^{-y^2}; solve relative to q to keep
        // precision deep in the tail.
        let dy = -TWO_OVER_SQRT_PI * (-y * y).exp();
        if dy == 0.0 {
            break;
        }
        let step = f / dy;
        let step = step / (1.0 + y * step);
        y -= step;
        if step.abs() <= 1e-16 * y.abs().max(1e-300) {
            break;
        }
    }
    y
}

/// Standard normal quantile `sqrt(2) erf^-1(2u - 1)`, evaluated through the
/// complementary function so both tails keep full relative precision.
pub fn std_normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain {
            function: "std_normal_quantile",
            value: u,
        });
    }
    Ok(std_normal_quantile_unchecked(u))
}

/// Quantile without the domain check; callers guarantee 0 < u < 1.
#[inline]
pub(crate) fn std_normal_quantile_unchecked(u: f64) -> f64 {
    if u == 0.5 {
        return 0.0;
    }
    // Phi(x) = erfc(-x / sqrt 2) / 2  =>  x = -sqrt 2 erfc^-1(2u)
    -SQRT_2 * erfc_inv_unchecked(2.0 * u)
}

/// Normal quantile by Wichura's AS 241 (PPND16) rational approximations,
/// relative accuracy about 1e-16 without any iteration. Used in the hot loop
/// of the MVN integrand; callers guarantee 0 < u < 1.
#[allow(clippy::excessive_precision)]
pub(crate) fn normal_quantile_as241(u: f64) -> f64 {
    let q = u - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        let num = ((((((2_509.080_928_730_122_7 * r + 33_430.575_583_588_13) * r + 67_265.770_927_008_7) * r
            + 45_921.953_931_549_87)
            * r
            + 13_731.693_765_509_46)
            * r
            + 1_971.590_950_306_551_4)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((5_226.495_278_852_546 * r + 28_729.085_735_721_943) * r + 39_307.895_800_092_71) * r
            + 21_213.794_301_586_597)
            * r
            + 5_394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_91)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { u } else { 1.0 - u };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r + 2.417_807_251_774_506e-1) * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_8e-9 * r + 5.475_938_084_995_345e-4) * r + 1.519_866_656_361_645_7e-2) * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_758_8)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288e-7 * r + 2.711_555_568_743_487_6e-5) * r + 1.242_660_947_388_078_4e-3) * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_049e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_8e-15 * r + 1.421_511_758_316_446e-7) * r + 1.846_318_317_510_054_8e-5) * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Laguerre polynomial `L_k(x)` by the three-term recurrence.
pub fn laguerre(k: usize, x: f64) -> f64 {
    laguerre_pair(k, x).0
}

/// `(L_k(x), L_{k-1}(x))`, with `L_{-1} = 0`.
fn laguerre_pair(k: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for j in 1..=k {
        let jf = j as f64;
        let next = ((2.0 * jf - 1.0 - x) * cur - (jf - 1.0) * prev) / jf;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Gauss-Laguerre rule for the weight function `e^{-x}` on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `w_a e^{κ_a}`, formed in log space. These are the weights to use when
    /// the integrand does not carry the `e^{-x}` factor itself.
    scaled_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Standard weights `w_a`. For large orders the outermost ones underflow
    /// to zero; `scaled_weights` stays finite.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scaled_weights(&self) -> &[f64] {
        &self.scaled_weights
    }

    /// `∫₀^∞ e^{-x} f(x) dx`.
    pub fn integrate_weighted<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `∫₀^∞ f(x) dx` with the `e^{κ}` compensation folded into the weights.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.scaled_weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `max_k |Σ w κ^k - k!| / k!` over `k = 0..=k_max`.
    pub fn moment_residual(&self, k_max: usize) -> f64 {
        let mut factorial = 1.0_f64;
        let mut worst = 0.0_f64;
        for k in 0..=k_max {
            if k > 0 {
                factorial *= k as f64;
            }
            let moment = self.integrate_weighted(|x| x.powi(k as i32));
            worst = worst.max((moment - factorial).abs() / factorial);
        }
        worst
    }
}

const MAX_ORDER: usize = 200;
const NEWTON_MAX_ITER: usize = 100;

/// Nodes are the roots of `L_A`, found by Newton's method from the classical
/// asymptotic starting values; weights are `κ / ((A+1)² L_{A+1}(κ)²)`.
pub fn gauss_laguerre_rule(order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::QuadratureOrder(order));
    }
    let n = order as f64;
    let mut nodes: Vec<f64> = Vec::with_capacity(order);
    let mut z = 0.0_f64;
    for i in 0..order {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * n),
            1 => z + 15.0 / (1.0 + 2.5 * n),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        let mut converged = false;
        let mut prev_step = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITER {
            let (l_n, l_nm1) = laguerre_pair(order, z);
            let deriv = n * (l_n - l_nm1) / z;
            let step = l_n / deriv;
            z -= step;
            if !z.is_finite() {
                break;
            }
            let rel = step.abs() / z.abs();
            // Either quadratic convergence all the way down, or the step has
            // stalled at the round-off floor of the recurrence (large A).
            if rel <= 4.0 * f64::EPSILON || (rel <= 1e-10 && step.abs() >= 0.5 * prev_step) {
                converged = true;
                break;
            }
            prev_step = step.abs();
        }
        if !converged || z <= 0.0 || nodes.last().is_some_and(|&prev| z <= prev) {
            return Err(Error::RootFinding { order, index: i + 1 });
        }
        nodes.push(z);
    }

    let log_norm = 2.0 * (n + 1.0).ln();
    let mut weights = Vec::with_capacity(order);
    let mut scaled_weights = Vec::with_capacity(order);
    for &x in &nodes {
        let l_next = laguerre(order + 1, x);
        let log_w = x.ln() - log_norm - 2.0 * l_next.abs().ln();
        weights.push(log_w.exp());
        scaled_weights.push((log_w + x).exp());
    }
    Ok(QuadratureRule {
        order,
        nodes,
        weights,
        scaled_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;
    use proptest::prelude::*;

    #[test]
    fn j0_reference_values() {
        assert_eq!(spherical_bessel_j0(0.0), 1.0);
        assert!(spherical_bessel_j0(PI).abs() < 1e-15);
        assert_relative_eq!(spherical_bessel_j0(1.0), 0.841_470_984_807_897, epsilon = 1e-15);
    }

    #[test]
    fn j0_continuous_at_threshold() {
        let below = spherical_bessel_j0(J0_TAYLOR_THRESHOLD * (1.0 - 1e-12));
        let above = spherical_bessel_j0(J0_TAYLOR_THRESHOLD);
        assert!((below - above).abs() < 1e-13);
        let below = spherical_bessel_j0(-J0_TAYLOR_THRESHOLD * (1.0 - 1e-12));
        let above = spherical_bessel_j0(-J0_TAYLOR_THRESHOLD);
        assert!((below - above).abs() < 1e-13);
    }

    #[test]
    fn j0_range() {
        for i in 0..20_000 {
            let x = i as f64 * 0.01;
            let v = spherical_bessel_j0(x);
            assert!((-0.2173..=1.0).contains(&v), "j0({x}) = {v}");
        }
    }

    #[test]
    fn erf_inv_values() {
        assert_eq!(erf_inv(0.0).unwrap(), 0.0);
        assert_relative_eq!(erf_inv(erf(1.0)).unwrap(), 1.0, epsilon = 1e-14);
        // scipy.special.erfinv(0.95)
        assert_relative_eq!(erf_inv(0.95).unwrap(), 1.385_903_824_349_677_5, epsilon = 1e-14);
        assert!(erf_inv(1.0).is_err());
        assert!(erf_inv(-1.5).is_err());
        assert!(erf_inv(f64::NAN).is_err());
    }

    #[test]
    fn quantile_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        // scipy.special.ndtri(0.975)
        assert_relative_eq!(std_normal_quantile(0.975).unwrap(), 1.959_963_984_540_054, epsilon = 1e-13);
        assert!((std_normal_quantile(0.0228).unwrap() + 2.0).abs() < 1e-2);
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
    }

    #[test]
    fn quantile_round_trip_in_tails() {
        for &u in &[1e-12, 1e-9, 1e-6, 0.01, 0.3, 0.7, 0.99, 1.0 - 1e-9, 1.0 - 1e-12] {
            let x = std_normal_quantile(u).unwrap();
            let back = std_normal_cdf(x);
            assert!((back - u).abs() <= 1e-10 * u.min(1.0 - u).max(1e-300) + 1e-16, "u={u}");
        }
    }

    proptest! {
        #[test]
        fn erf_inv_round_trip(p in -0.999_999_999f64..0.999_999_999) {
            let y = erf_inv(p).unwrap();
            prop_assert!((erf(y) - p).abs() <= 1e-12 * p.abs().max(1e-300) + 1e-16);
            prop_assert_eq!(erf_inv(-p).unwrap(), -y);
        }

        #[test]
        fn quantile_inverts_cdf(u in 1e-12f64..(1.0 - 1e-12)) {
            let x = std_normal_quantile(u).unwrap();
            // Compare in whichever tail is exactly representable.
            let (reached, target) = if u < 0.5 {
                (std_normal_cdf(x), u)
            } else {
                (std_normal_cdf(-x), 1.0 - u)
            };
            let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
            prop_assert!((reached - target).abs() / density < 1e-9, "u={}", u);
        }
    }

    #[test]
    fn quantile_deep_tail() {
        // scipy.special.ndtri
        for (u, x) in [
            (1e-20, -9.262_340_089_798_409),
            (1e-50, -14.933_337_534_788_487),
            (1e-100, -21.273_453_560_965_322),
            (1e-300, -37.047_096_299_361_2),
        ] {
            let q = std_normal_quantile(u).unwrap();
            assert!((q - x).abs() < 1e-13 * x.abs(), "u={u}: {q}");
        }
    }

    #[test]
    fn as241_matches_iterated_quantile() {
        let mut u = 1e-300;
        while u < 1.0 {
            for v in [u, 1.0 - u] {
                if v > 0.0 && v < 1.0 {
                    let a = normal_quantile_as241(v);
                    let b = std_normal_quantile_unchecked(v);
                    assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0), "u={v}: {a} vs {b}");
                }
            }
            u *= 1.7;
        }
    }

    #[test]
    fn laguerre_low_orders() {
        assert_eq!(laguerre(0, 3.7), 1.0);
        assert_eq!(laguerre(1, 1.0), 0.0);
        assert_eq!(laguerre(2, 0.0), 1.0);
        for k in 0..30 {
            assert_relative_eq!(laguerre(k, 0.0), 1.0, epsilon = 1e-12);
        }
        // L_3(x) = (-x^3 + 9x^2 - 18x + 6) / 6
        let x = 1.3;
        assert_relative_eq!(laguerre(3, x), (-x * x * x + 9.0 * x * x - 18.0 * x + 6.0) / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn one_and_two_point_rules() {
        let r1 = gauss_laguerre_rule(1).unwrap();
        assert_relative_eq!(r1.nodes()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(r1.weights()[0], 1.0, epsilon = 1e-15);

        let r2 = gauss_laguerre_rule(2).unwrap();
        let s = 2f64.sqrt();
        assert_relative_eq!(r2.nodes()[0], 2.0 - s, epsilon = 1e-14);
        assert_relative_eq!(r2.nodes()[1], 2.0 + s, epsilon = 1e-14);
    }

    #[test]
    fn rule_order_bounds() {
        assert_eq!(gauss_laguerre_rule(0), Err(Error::QuadratureOrder(0)));
        assert_eq!(gauss_laguerre_rule(201), Err(Error::QuadratureOrder(201)));
    }

    #[test]
    fn moments_exact_up_to_degree_2a_minus_1() {
        for order in 1..=50 {
            let rule = gauss_laguerre_rule(order).unwrap();
            let sum: f64 = rule.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "A={order}: Σw = {sum}");
            let res = rule.moment_residual(2 * order - 1);
            assert!(res < 1e-9, "A={order}: residual {res}");
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!(rule.nodes()[0] > 0.0);
            assert!(rule.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn large_orders_build() {
        for order in [100, 150, 200] {
            let rule = gauss_laguerre_rule(order).unwrap();
            assert_eq!(rule.nodes().len(), order);
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
            let sum: f64 = rule.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-10, "A={order}: Σw = {sum}");
            assert!(rule.scaled_weights().iter().all(|w| w.is_finite() && *w > 0.0));
        }
    }

    #[test]
    fn scaled_weights_match_plain_weights() {
        let rule = gauss_laguerre_rule(30).unwrap();
        let plain = rule.integrate_weighted(|x| x * x * x);
        let scaled = rule.integrate(|x| x * x * x * (-x).exp());
        assert_relative_eq!(plain, 6.0, epsilon = 1e-11);
        assert_relative_eq!(scaled, 6.0, epsilon = 1e-11);
    }
}
