//! Figure-reproduction presets shipped with the binary.

use crate::config::RunConfig;
use crate::CliError;

pub const PRESETS: [(&str, &str); 5] = [
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
];

/// Source text of preset `name`.
pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn preset(name: &str) -> Result<RunConfig, CliError> {
    let src = preset_source(name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::Config(format!("unknown preset {name:?}; available: {}", known.join(", ")))
    })?;
    RunConfig::parse(src).map_err(|e| CliError::Config(format!("preset {name}: {e}")))
}

/// The subcommand a preset is meant for.
pub fn preset_command(name: &str) -> Option<&'static str> {
    match name {
        "fig2" | "fig3" | "fig4" => Some("scdp"),
        "fig5" | "fig6" => Some("cdd"),
        _ => None,
    }
}
