mod common;

use fascache::channel::{marginal_gain_cdf, FasChannel};
use fascache::corr::{CorrelationMatrix, PortGrid};
use fascache::net::{nearest_distance_cdf, sample_nearest_distance};
use fascache::rng::substream;

use common::ks_statistic;

fn nine_ports() -> FasChannel {
    FasChannel::new(PortGrid::square(3, 1.0).unwrap(), 1e-5, 4).unwrap()
}

#[test]
fn gain_cdf_nondecreasing() {
    let ch = nine_ports();
    let mut prev = ch.fas_gain_cdf(0.002).unwrap();
    for k in 2..=50 {
        let cur = ch.fas_gain_cdf(0.02 * k as f64 * k as f64 / 10.0).unwrap();
        assert!(cur.value >= prev.value - cur.error_estimate - prev.error_estimate, "{prev:?} -> {cur:?}");
        prev = cur;
    }
}

#[test]
fn more_independent_ports_never_raise_the_cdf() {
    for n in 1..8 {
        let a = FasChannel::with_correlation(PortGrid::new(n, 1, 1.0, 0.0).unwrap_or(PortGrid::single()), CorrelationMatrix::identity(n), 1e-5, 0).unwrap();
        let b = FasChannel::with_correlation(PortGrid::new(n + 1, 1, 1.0, 0.0).unwrap(), CorrelationMatrix::identity(n + 1), 1e-5, 0).unwrap();
        for r in [0.3, 1.0, 2.0] {
            let (fa, fb) = (a.fas_gain_cdf(r).unwrap(), b.fas_gain_cdf(r).unwrap());
            assert!(fb.value <= fa.value + fa.error_estimate + fb.error_estimate);
            assert!(marginal_gain_cdf(r).powi(n as i32 + 1) <= marginal_gain_cdf(r).powi(n as i32));
        }
    }
}

#[test]
fn gaussian_layer_reproduces_correlation() {
    let ch = nine_ports();
    let n = ch.port_count();
    let samples = 1_000_000;
    let mut rng = substream(10, 0, 0);
    let mut sum = vec![0.0; n];
    let mut cross = vec![0.0; n * n];
    let (mut z, mut xi) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..samples {
        ch.sample_gaussian_layer(&mut rng, &mut z, &mut xi);
        for i in 0..n {
            sum[i] += z[i];
            for j in 0..=i {
                cross[i * n + j] += z[i] * z[j];
            }
        }
    }
    let s = samples as f64;
    let cov = |i: usize, j: usize| cross[i * n + j] / s - sum[i] * sum[j] / (s * s);
    for i in 0..n {
        for j in 0..i {
            let pearson = cov(i, j) / (cov(i, i) * cov(j, j)).sqrt();
            assert!((pearson - ch.corr().get(i, j)).abs() < 0.01, "({i},{j}): {pearson} vs {}", ch.corr().get(i, j));
        }
    }
}

#[test]
fn sampler_matches_analytic_gain_cdf() {
    let ch = nine_ports();
    let mut rng = substream(21, 0, 0);
    let samples = 1_000_000;
    let mut g: Vec<f64> = (0..samples).map(|_| ch.sample_fas_gain(&mut rng).gain).collect();
    g.sort_by(f64::total_cmp);
    let mut worst: f64 = 0.0;
    for k in 1..=40 {
        let r = 0.15 * k as f64;
        let empirical = g.partition_point(|&x| x <= r) as f64 / samples as f64;
        let analytic = ch.fas_gain_cdf(r).unwrap();
        worst = worst.max((empirical - analytic.value).abs() - analytic.error_estimate);
    }
    assert!(worst < 0.002, "{worst}");
}

#[test]
fn distance_sampler_ks() {
    let (q, mu) = (0.4, 1e-2);
    let mut rng = substream(5, 0, 0);
    let mut d: Vec<f64> = (0..1_000_000).map(|_| sample_nearest_distance(q, mu, &mut rng).unwrap()).collect();
    let ks = ks_statistic(&mut d, |x| nearest_distance_cdf(x, q, mu).unwrap());
    assert!(ks < 0.002, "{ks}");
}
