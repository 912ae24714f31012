use std::path::Path;
use std::process::{Command, Output};

use fascache_cli::config::{CurveSection, PolicySection, RunConfig, SweepSection};
use fascache_cli::plot::{emit_plot, PlotStyle};
use fascache_cli::presets::{preset, PRESETS};
use fascache_cli::run::{cmd_cdd, cmd_glrule, cmd_scdp, FLAG_DISCREPANCY, FLAG_UNCACHED};
use fascache_cli::CliError;

fn fascache(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fascache")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

const SMALL: &str = r#"
name = "small"

[policy]
kind = "constant"
q = 1.0

[antenna]
n1 = 2
n2 = 1
w1 = 0.5

[mc]
trials = 2000

[sweep]
axis = "eta_db"
values = [0.0, 10.0]

[[curves]]
label = "fixed"
n1 = 1
n2 = 1

[[curves]]
label = "pair"
"#;

#[test]
fn every_preset_parses_and_round_trips() {
    for (name, _) in PRESETS {
        let cfg = preset(name).unwrap();
        assert_eq!(cfg.name, name);
        let again = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg, "{name}");
    }
}

#[test]
fn round_trip_of_a_full_config() {
    let cfg = RunConfig {
        name: "x".into(),
        out_dir: Some("out".into()),
        policy: PolicySection::Explicit { probs: vec![1.0, 0.5, 0.0], capacity: 2 },
        sweep: Some(SweepSection { axis: "mu_s".into(), values: vec![1e-3, 1e-2] }),
        curves: vec![CurveSection { label: "a".into(), n1: Some(1), n2: Some(1), q: Some(0.5), ..Default::default() }],
        catalog: fascache_cli::config::CatalogSection { contents: 3, zipf_exp: 0.8, content: 2 },
        ..RunConfig::default()
    };
    let text = cfg.to_toml();
    assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
}

#[test]
fn defaults_are_the_reference_operating_point() {
    let cfg = RunConfig::parse("").unwrap();
    let sc = &cfg.curves().unwrap()[0].scenario;
    assert_eq!(sc.params, fascache::net::NetworkParams::default());
    assert_eq!(sc.catalog.count(), 100);
    assert_eq!(sc.policy.capacity(), 10);
    assert_eq!(sc.channel.port_count(), 9);
}

#[test]
fn config_errors_name_the_line() {
    let err = RunConfig::parse("[network]\nsbs_intensity = 0.01\nbogus = 3\n").unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, CliError::Config(_)));
    assert!(msg.contains("line 3"), "{msg}");
    assert!(RunConfig::parse("[network]\neta_db = \"high\"\n").is_err());
    assert!(RunConfig::parse("[sweep]\naxis = \"zeta\"\nvalues = [1.0]\n").is_err());
    assert!(RunConfig::parse("[network]\nsbs_intensity = -1.0\n").is_err());
    assert!(RunConfig::parse("[numerics]\nquad_order = 0\n").is_err());
}

#[test]
fn scdp_rows_follow_sweep_order() {
    let cfg = RunConfig::parse(SMALL).unwrap();
    let t = cmd_scdp(&cfg).unwrap();
    assert_eq!(t.header[..3], ["curve", "axis_value", "scdp_analytic_gl"]);
    let keys: Vec<(&str, &str)> = t.rows.iter().map(|r| (r[0].as_str(), r[1].as_str())).collect();
    assert_eq!(keys, [("fixed", "0"), ("fixed", "10"), ("pair", "0"), ("pair", "10")]);
    for r in &t.rows {
        let gl: f64 = r[2].parse().unwrap();
        let ad: f64 = r[3].parse().unwrap();
        assert!((gl - ad).abs() <= 2e-3 || r[6].contains(FLAG_DISCREPANCY));
        assert!(!r[4].is_empty() && !r[5].is_empty());
    }
    assert_eq!(t.errors, 0);
}

#[test]
fn cdd_single_round_is_one_slot_and_uncached_is_inf() {
    let mut cfg = RunConfig::parse(SMALL).unwrap();
    cfg.network.max_arq = 1;
    cfg.mc.trials = 0;
    let t = cmd_cdd(&cfg).unwrap();
    for r in &t.rows {
        assert_eq!(r[2], "1");
        assert!(r[4].is_empty());
    }
    let mut cfg = RunConfig::parse(SMALL).unwrap();
    cfg.policy = PolicySection::TopK { capacity: 1 };
    cfg.curves.clear();
    cfg.catalog.content = 5;
    cfg.sweep = None;
    cfg.mc.trials = 0;
    let t = cmd_cdd(&cfg).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.rows[0][2], "inf");
    assert!(t.rows[0][6].contains(FLAG_UNCACHED));
}

#[test]
fn glrule_output() {
    let one = cmd_glrule(1).unwrap();
    let rows: Vec<&str> = one.lines().collect();
    assert_eq!(rows[0], "a,node,weight");
    let fields: Vec<f64> = rows[1].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields, [1.0, 1.0, 1.0]);
    let five = cmd_glrule(5).unwrap();
    let residual: f64 = five.lines().last().unwrap().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(residual < 1e-10);
    assert!(matches!(cmd_glrule(0), Err(CliError::Usage(_))));
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = fascache(&["glrule", "3"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout).lines().count(), 5);
    assert_eq!(fascache(&["glrule", "0"]).status.code(), Some(2));
    assert_eq!(fascache(&["scdp", "--preset", "fig9"]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.toml", "[network]\nmax_arq = 0\n");
    assert_eq!(fascache(&["cdd", "--config", &bad]).status.code(), Some(2));
    assert_eq!(fascache(&["frobnicate"]).status.code(), Some(2));

    // The as-printed weights halve the GL value, which the adaptive oracle flags.
    let printed = write(
        dir.path(),
        "printed.toml",
        "[antenna]\nn1 = 1\nn2 = 1\n[numerics]\nweights = \"as_printed\"\n",
    );
    let out = fascache(&["scdp", "--config", &printed]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains(FLAG_DISCREPANCY));
    assert_eq!(fascache(&["scdp", "--config", &printed, "--strict"]).status.code(), Some(4));
}

#[test]
fn csv_files_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let out_s = out.display().to_string();
    let run = fascache(&["scdp", "--config", &cfg, "--out", &out_s, "--seed", "9", "--trials", "1000"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv_path = out.join("small_scdp.csv");
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("curve,axis_value,scdp_analytic_gl,scdp_analytic_adaptive,scdp_mc,mc_ci95,flag"));

    let plot = fascache(&["plot", csv_path.to_str().unwrap(), "--config", &cfg]);
    assert_eq!(plot.status.code(), Some(0), "{}", String::from_utf8_lossy(&plot.stderr));
    let svg = std::fs::read_to_string(out.join("small_scdp.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains("η (dB)"));

    let analytic_only = write(dir.path(), "a.csv", "curve,axis_value,cdd_analytic_ms,cdd_asymptotic_ms,flag\nx,1,1.0,1.0,\nx,2,1.5,2.0,\n");
    let s = emit_plot(Path::new(&analytic_only), &PlotStyle::for_axis("t", None), &dir.path().join("a.svg")).unwrap();
    assert_eq!((s.curves, s.points, s.mc_points), (1, 2, 0));
    assert!(std::fs::read_to_string(dir.path().join("a.svg")).unwrap().contains("CDD (ms)"));

    let empty = write(dir.path(), "empty.csv", "curve,axis_value,scdp_analytic_gl\n");
    assert!(matches!(
        emit_plot(Path::new(&empty), &PlotStyle::for_axis("t", None), &dir.path().join("e.svg")),
        Err(CliError::Plot(_))
    ));
    assert_eq!(fascache(&["plot", &empty]).status.code(), Some(2));
}
