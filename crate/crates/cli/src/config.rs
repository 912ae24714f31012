//! TOML run configuration.
//!
//! Powers are given in dBm and the SNR threshold in dB (fields suffixed
//! `_dbm` / `_db`); everything else is SI. Conversion to the linear values
//! used by the library happens once, in [`RunConfig::scenario`].

use std::path::Path;

use fascache::channel::FasChannel;
use fascache::corr::PortGrid;
use fascache::mc::{Scenario, SweepAxis};
use fascache::metrics::{WeightConvention, DEFAULT_QUAD_ORDER};
use fascache::mvn::DEFAULT_TOL;
use fascache::net::{
    db_to_linear, dbm_to_watts, policy_constant, policy_top_k, policy_uniform, zipf_popularity, CachePolicy,
    NetworkParams,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// File stem of the outputs and title of the plot.
    #[serde(default = "default_name")]
    pub name: String,
    /// Directory for CSV and SVG outputs; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub catalog: CatalogSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub antenna: AntennaSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurveSection>,
}

fn default_name() -> String {
    "run".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    /// SBS intensity, m⁻².
    pub sbs_intensity: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub pathloss_exp: f64,
    pub pathloss_const: f64,
    pub eta_db: f64,
    /// ARQ round duration, s.
    pub slot_time: f64,
    pub max_arq: u32,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            sbs_intensity: 1e-2,
            tx_power_dbm: -30.0,
            noise_dbm: -60.0,
            pathloss_exp: 3.0,
            pathloss_const: 1.0,
            eta_db: 0.0,
            slot_time: 1e-3,
            max_arq: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatalogSection {
    pub contents: usize,
    pub zipf_exp: f64,
    /// Content whose delay the `cdd` command reports (1-based).
    pub content: usize,
}

impl Default for CatalogSection {
    fn default() -> Self {
        Self { contents: 100, zipf_exp: 1.0, content: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySection {
    TopK { capacity: usize },
    Uniform { capacity: usize },
    Constant { q: f64 },
    Explicit { probs: Vec<f64>, capacity: usize },
}

impl Default for PolicySection {
    fn default() -> Self {
        Self::TopK { capacity: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaSection {
    pub n1: usize,
    pub n2: usize,
    /// Aperture in wavelengths.
    pub w1: f64,
    pub w2: f64,
}

impl Default for AntennaSection {
    fn default() -> Self {
        Self { n1: 3, n2: 3, w1: 1.0, w2: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weights {
    #[default]
    Standard,
    AsPrinted,
}

impl From<Weights> for WeightConvention {
    fn from(w: Weights) -> Self {
        match w {
            Weights::Standard => WeightConvention::Standard,
            Weights::AsPrinted => WeightConvention::AsPrinted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    pub quad_order: usize,
    pub mvn_tol: f64,
    pub seed: u64,
    /// Also evaluate the adaptive-quadrature oracle.
    pub adaptive: bool,
    pub weights: Weights,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self { quad_order: DEFAULT_QUAD_ORDER, mvn_tol: DEFAULT_TOL, seed: 1, adaptive: true, weights: Weights::Standard }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    /// Monte-Carlo requests per point; 0 skips simulation.
    pub trials: u64,
    pub fixed_distance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: String,
    pub values: Vec<f64>,
}

/// Overrides applied on top of the base sections for one curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CurveSection {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sbs_intensity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_arq: Option<u32>,
}

/// A curve with its overrides resolved.
#[derive(Debug, Clone)]
pub struct Curve {
    pub label: String,
    pub scenario: Scenario,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: default_name(),
            out_dir: None,
            network: NetworkSection::default(),
            catalog: CatalogSection::default(),
            policy: PolicySection::default(),
            antenna: AntennaSection::default(),
            numerics: NumericsSection::default(),
            mc: McSection::default(),
            sweep: None,
            curves: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Checks everything that can be checked without running numerics.
    pub fn validate(&self) -> Result<(), CliError> {
        self.curves()?;
        if let Some(s) = &self.sweep {
            s.axis.parse::<SweepAxis>().map_err(|e| CliError::Config(e.to_string()))?;
        }
        let n = &self.numerics;
        if !(1..=200).contains(&n.quad_order) {
            return Err(CliError::Config(format!("numerics.quad_order = {} must be in 1..=200", n.quad_order)));
        }
        let content = self.catalog.content;
        if content == 0 || content > self.catalog.contents {
            return Err(CliError::Config(format!(
                "catalog.content = {content} must be in 1..={}",
                self.catalog.contents
            )));
        }
        Ok(())
    }

    pub fn axis(&self) -> Result<Option<SweepAxis>, CliError> {
        self.sweep
            .as_ref()
            .map(|s| s.axis.parse::<SweepAxis>().map_err(|e| CliError::Config(e.to_string())))
            .transpose()
    }

    fn policy(&self, q_override: Option<f64>) -> Result<CachePolicy, CliError> {
        let l = self.catalog.contents;
        let policy = match (q_override.as_ref(), &self.policy) {
            (Some(q), _) | (None, PolicySection::Constant { q }) => policy_constant(l, *q),
            (None, PolicySection::TopK { capacity }) => policy_top_k(l, *capacity),
            (None, PolicySection::Uniform { capacity }) => policy_uniform(l, *capacity),
            (None, PolicySection::Explicit { probs, capacity }) => CachePolicy::new(probs.clone(), *capacity),
        };
        policy.map_err(config_err)
    }

    /// Base scenario with the overrides of `curve` applied.
    fn scenario(&self, curve: &CurveSection) -> Result<Scenario, CliError> {
        let net = &self.network;
        let params = NetworkParams {
            sbs_intensity: curve.sbs_intensity.unwrap_or(net.sbs_intensity),
            tx_power: dbm_to_watts(net.tx_power_dbm),
            noise_power: dbm_to_watts(net.noise_dbm),
            pathloss_exp: net.pathloss_exp,
            pathloss_const: net.pathloss_const,
            snr_threshold: db_to_linear(curve.eta_db.unwrap_or(net.eta_db)),
            slot_time: net.slot_time,
            max_arq: curve.max_arq.unwrap_or(net.max_arq),
        };
        params.validate().map_err(config_err)?;
        let catalog = zipf_popularity(self.catalog.contents, self.catalog.zipf_exp).map_err(config_err)?;
        let policy = self.policy(curve.q)?;
        let a = &self.antenna;
        let n1 = curve.n1.unwrap_or(a.n1);
        let n2 = curve.n2.unwrap_or(a.n2);
        let channel = if n1 * n2 == 1 {
            FasChannel::fixed()
        } else {
            let grid =
                PortGrid::new(n1, n2, curve.w1.unwrap_or(a.w1), curve.w2.unwrap_or(a.w2)).map_err(config_err)?;
            FasChannel::new(grid, self.numerics.mvn_tol, self.numerics.seed).map_err(config_err)?
        };
        let sc = Scenario { params, catalog, policy, channel };
        sc.validate().map_err(config_err)?;
        Ok(sc)
    }

    /// Resolved curves; a config without `[[curves]]` has a single one.
    pub fn curves(&self) -> Result<Vec<Curve>, CliError> {
        if self.curves.is_empty() {
            let base = CurveSection { label: "default".into(), ..CurveSection::default() };
            return Ok(vec![Curve { label: base.label.clone(), scenario: self.scenario(&base)? }]);
        }
        self.curves
            .iter()
            .map(|c| Ok(Curve { label: c.label.clone(), scenario: self.scenario(c)? }))
            .collect()
    }

    /// Sweep values, or the single base point when there is no sweep.
    pub fn points(&self) -> Result<Vec<(Option<SweepAxis>, f64)>, CliError> {
        Ok(match (&self.sweep, self.axis()?) {
            (Some(s), Some(axis)) => s.values.iter().map(|&v| (Some(axis), v)).collect(),
            _ => vec![(None, f64::NAN)],
        })
    }
}

fn config_err(e: fascache::Error) -> CliError {
    CliError::Config(e.to_string())
}
