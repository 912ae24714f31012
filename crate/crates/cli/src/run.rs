//! Sweep drivers behind the `scdp`, `cdd` and `mc` subcommands.

use fascache::mc::{simulate, Scenario, SimConfig, SimResult, SweepAxis};
use fascache::metrics::{
    asymptotic_delay_from_success, delay_from_success, scdp_adaptive, scdp_with, success_probability_adaptive,
    success_probability_with, CrossCheck, SuccessResult, WeightConvention,
};
use fascache::rng::mix_seed;
use fascache::specfun::{gauss_laguerre_rule, QuadratureRule};

use crate::config::{Curve, RunConfig};
use crate::CliError;

pub const SCDP_HEADER: [&str; 7] =
    ["curve", "axis_value", "scdp_analytic_gl", "scdp_analytic_adaptive", "scdp_mc", "mc_ci95", "flag"];
pub const CDD_HEADER: [&str; 7] =
    ["curve", "axis_value", "cdd_analytic_ms", "cdd_asymptotic_ms", "cdd_mc_ms", "mc_ci95", "flag"];
pub const MC_HEADER: [&str; 10] = [
    "curve",
    "axis_value",
    "scdp_mc",
    "scdp_ci95",
    "cdd_mc_ms",
    "cdd_ci95_ms",
    "cdd_conditional_ms",
    "per_round_success",
    "uncached_requests",
    "trials",
];

pub const FLAG_DISCREPANCY: &str = "discrepancy";
pub const FLAG_UNCONVERGED: &str = "mvn_unconverged";
pub const FLAG_UNCACHED: &str = "uncached";
pub const FLAG_INFINITE: &str = "infinite_delay";

/// CSV rows of one command, in sweep order.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Rows whose numerics failed.
    pub errors: usize,
    /// Rows whose two analytic paths disagree.
    pub discrepancies: usize,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), ..Self::default() }
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn num(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One sweep point: its scenario and a stable index for seeding.
struct Point {
    curve: String,
    axis_value: Option<f64>,
    scenario: Scenario,
    index: u64,
}

fn points(cfg: &RunConfig) -> Result<Vec<Point>, CliError> {
    let curves: Vec<Curve> = cfg.curves()?;
    let sweep = cfg.points()?;
    let mut out = Vec::with_capacity(curves.len() * sweep.len());
    for (ci, curve) in curves.iter().enumerate() {
        for (pi, &(axis, value)) in sweep.iter().enumerate() {
            let scenario = match axis {
                Some(a) => apply(a, &curve.scenario, value)?,
                None => curve.scenario.clone(),
            };
            out.push(Point {
                curve: curve.label.clone(),
                axis_value: axis.map(|_| value),
                scenario,
                index: ((ci as u64) << 32) | pi as u64,
            });
        }
    }
    Ok(out)
}

fn apply(axis: SweepAxis, sc: &Scenario, value: f64) -> Result<Scenario, CliError> {
    axis.apply(sc, value).map_err(|e| CliError::Config(format!("sweep {axis} = {value}: {e}")))
}

fn rule(cfg: &RunConfig) -> Result<QuadratureRule, CliError> {
    gauss_laguerre_rule(cfg.numerics.quad_order).map_err(|e| CliError::Config(e.to_string()))
}

fn monte_carlo(cfg: &RunConfig, sc: &Scenario, index: u64) -> Result<Option<SimResult>, CliError> {
    if cfg.mc.trials == 0 {
        return Ok(None);
    }
    let sim = SimConfig {
        scenario: sc.clone(),
        trials: cfg.mc.trials,
        seed: mix_seed(cfg.numerics.seed, index),
        fixed_distance: cfg.mc.fixed_distance,
    };
    Ok(Some(simulate(&sim)?))
}

fn flags(gl: &SuccessResult, check: Option<&CrossCheck>) -> Vec<&'static str> {
    let mut f = Vec::new();
    if check.is_some_and(|c| !c.agree) {
        f.push(FLAG_DISCREPANCY);
    }
    if !gl.converged || check.is_some_and(|c| !c.adaptive.converged) {
        f.push(FLAG_UNCONVERGED);
    }
    f
}

fn axis_cell(p: &Point) -> String {
    opt(p.axis_value)
}

fn error_row(table: &mut Table, p: &Point, e: &CliError) {
    let mut row = vec![p.curve.clone(), axis_cell(p)];
    row.resize(table.header.len() - 1, String::new());
    row.push(format!("error: {e}"));
    log::error!("{} @ {}: {e}", p.curve, axis_cell(p));
    table.rows.push(row);
    table.errors += 1;
}

/// SCDP sweep: Gauss-Laguerre, adaptive oracle and Monte-Carlo per point.
pub fn cmd_scdp(cfg: &RunConfig) -> Result<Table, CliError> {
    let rule = rule(cfg)?;
    let convention = WeightConvention::from(cfg.numerics.weights);
    let mut table = Table::new(&SCDP_HEADER);
    for p in points(cfg)? {
        let result = (|| -> Result<_, CliError> {
            let sc = &p.scenario;
            let gl = scdp_with(&sc.params, &sc.catalog, &sc.policy, &sc.channel, &rule, convention)?;
            let check = if cfg.numerics.adaptive {
                Some(CrossCheck::new(gl, scdp_adaptive(&sc.params, &sc.catalog, &sc.policy, &sc.channel)?))
            } else {
                None
            };
            Ok((gl, check, monte_carlo(cfg, sc, p.index)?))
        })();
        match result {
            Ok((gl, check, mc)) => {
                let f = flags(&gl, check.as_ref());
                table.discrepancies += f.contains(&FLAG_DISCREPANCY) as usize;
                table.rows.push(vec![
                    p.curve.clone(),
                    axis_cell(&p),
                    num(gl.value),
                    opt(check.map(|c| c.adaptive.value)),
                    opt(mc.as_ref().map(|m| m.scdp_hat)),
                    opt(mc.as_ref().map(|m| m.scdp_ci95)),
                    f.join(";"),
                ]);
            }
            Err(e) => error_row(&mut table, &p, &e),
        }
    }
    Ok(table)
}

/// Delay sweep for `catalog.content`, with the `M → ∞` limit alongside.
pub fn cmd_cdd(cfg: &RunConfig) -> Result<Table, CliError> {
    let rule = rule(cfg)?;
    let convention = WeightConvention::from(cfg.numerics.weights);
    let l = cfg.catalog.content;
    let mut table = Table::new(&CDD_HEADER);
    for p in points(cfg)? {
        let result = (|| -> Result<_, CliError> {
            let sc = &p.scenario;
            let gl = success_probability_with(l, &sc.params, &sc.policy, &sc.channel, &rule, convention)?;
            let check = if cfg.numerics.adaptive && sc.policy.q(l) > 0.0 {
                Some(CrossCheck::new(gl, success_probability_adaptive(l, &sc.params, &sc.policy, &sc.channel)?))
            } else {
                None
            };
            Ok((sc.clone(), gl, check, monte_carlo(cfg, sc, p.index)?))
        })();
        match result {
            Ok((sc, gl, check, mc)) => {
                let mut f = flags(&gl, check.as_ref());
                table.discrepancies += f.contains(&FLAG_DISCREPANCY) as usize;
                let t0 = sc.params.slot_time;
                let (d, d_inf) = if sc.policy.q(l) == 0.0 {
                    f.push(FLAG_UNCACHED);
                    (f64::INFINITY, f64::INFINITY)
                } else {
                    match (
                        delay_from_success(gl.value, t0, sc.params.max_arq),
                        asymptotic_delay_from_success(gl.value, t0),
                    ) {
                        (Some(d), Some(a)) => (d, a),
                        _ => {
                            f.push(FLAG_INFINITE);
                            (f64::INFINITY, f64::INFINITY)
                        }
                    }
                };
                let mc_ms = mc.as_ref().map(|m| 1e3 * m.cdd_hat).filter(|v| !v.is_nan());
                let mc_ci = mc.as_ref().map(|m| 1e3 * m.cdd_ci95).filter(|v| !v.is_nan());
                table.rows.push(vec![
                    p.curve.clone(),
                    axis_cell(&p),
                    num(1e3 * d),
                    num(1e3 * d_inf),
                    opt(mc_ms),
                    opt(mc_ci),
                    f.join(";"),
                ]);
            }
            Err(e) => error_row(&mut table, &p, &e),
        }
    }
    Ok(table)
}

/// Monte-Carlo only; runs even when `mc.trials` is 0 by falling back to 10⁵.
pub fn cmd_mc(cfg: &RunConfig) -> Result<Table, CliError> {
    let mut cfg = cfg.clone();
    if cfg.mc.trials == 0 {
        cfg.mc.trials = 100_000;
    }
    let mut table = Table::new(&MC_HEADER);
    for p in points(&cfg)? {
        let result = monte_carlo(&cfg, &p.scenario, p.index);
        match result {
            Ok(Some(m)) => table.rows.push(vec![
                p.curve.clone(),
                axis_cell(&p),
                num(m.scdp_hat),
                num(m.scdp_ci95),
                num(1e3 * m.cdd_hat),
                num(1e3 * m.cdd_ci95),
                num(1e3 * m.cdd_conditional),
                num(m.per_round_success_rate),
                m.uncached_requests.to_string(),
                m.trials_run.to_string(),
            ]),
            Ok(None) => unreachable!("trials forced positive"),
            Err(e) => error_row(&mut table, &p, &e),
        }
    }
    Ok(table)
}

/// Nodes, weights and the worst relative moment error of an order-`A` rule.
pub fn cmd_glrule(order: usize) -> Result<String, CliError> {
    if order == 0 {
        return Err(CliError::Usage("quadrature order must be at least 1".into()));
    }
    let rule = gauss_laguerre_rule(order).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = String::from("a,node,weight\n");
    for (a, (k, w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
        out.push_str(&format!("{},{k:.17e},{w:.17e}\n", a + 1));
    }
    // k! overflows past 170
    let k_max = (2 * order - 1).min(170);
    out.push_str(&format!("# moment residual max_k<={k_max} |sum w x^k - k!|/k! = {:.3e}\n", rule.moment_residual(k_max)));
    Ok(out)
}
