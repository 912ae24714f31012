use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fascache_cli::config::RunConfig;
use fascache_cli::plot::{emit_plot, PlotStyle};
use fascache_cli::presets::preset;
use fascache_cli::run::{cmd_cdd, cmd_glrule, cmd_mc, cmd_scdp, Table};
use fascache_cli::CliError;

/// Delivery probability and ARQ delay of cached content in mm-wave small
/// cells with multi-port receivers.
#[derive(Parser)]
#[command(name = "fascache", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Successful-delivery probability sweep (CSV).
    Scdp(RunArgs),
    /// Delivery-delay sweep (CSV).
    Cdd(RunArgs),
    /// Monte-Carlo simulation only (CSV).
    Mc(RunArgs),
    /// Print Gauss-Laguerre nodes and weights.
    Glrule {
        /// Rule order A.
        #[arg(value_name = "A", required_unless_present = "quad_order")]
        order: Option<usize>,
        #[arg(long = "quad-order", value_name = "A")]
        quad_order: Option<usize>,
    },
    /// Render a sweep CSV as SVG.
    Plot {
        csv: PathBuf,
        #[command(flatten)]
        source: Source,
        /// Output directory; defaults to the CSV's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in figure preset (fig2 … fig6).
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<Option<RunConfig>, CliError> {
        match (&self.config, &self.preset) {
            (Some(p), _) => RunConfig::load(p).map(Some),
            (None, Some(name)) => preset(name).map(Some),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory; CSV goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo trials per point (0 disables simulation).
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long = "quad-order")]
    quad_order: Option<usize>,
    /// Exit with status 4 if any row carries a discrepancy flag.
    #[arg(long)]
    strict: bool,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = self.source.load()?.unwrap_or_default();
        if let Some(s) = self.seed {
            cfg.numerics.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.mc.trials = t;
        }
        if let Some(a) = self.quad_order {
            cfg.numerics.quad_order = a;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = Some(o.display().to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_table(table: &Table, cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    match &cfg.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = Path::new(dir).join(format!("{}_{command}.csv", cfg.name));
            let file = std::fs::File::create(&path)?;
            table.write_csv(file).map_err(|e| CliError::Io(e.to_string()))?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            table.write_csv(stdout.lock()).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

fn run_table(args: &RunArgs, command: &str, f: fn(&RunConfig) -> Result<Table, CliError>) -> Result<u8, CliError> {
    let cfg = args.config()?;
    let table = f(&cfg)?;
    write_table(&table, &cfg, command)?;
    if table.errors > 0 {
        eprintln!("{} row(s) failed numerically", table.errors);
        return Ok(3);
    }
    if table.discrepancies > 0 {
        eprintln!("{} row(s) flagged: Gauss-Laguerre and adaptive results disagree", table.discrepancies);
        if args.strict {
            return Ok(4);
        }
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Scdp(a) => run_table(&a, "scdp", cmd_scdp),
        Command::Cdd(a) => run_table(&a, "cdd", cmd_cdd),
        Command::Mc(a) => run_table(&a, "mc", cmd_mc),
        Command::Glrule { order, quad_order } => {
            let text = cmd_glrule(order.or(quad_order).unwrap_or(0))?;
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(0)
        }
        Command::Plot { csv, source, out } => {
            let cfg = source.load()?;
            let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plot".into());
            let (title, axis) = match &cfg {
                Some(c) => (c.name.clone(), c.axis()?),
                None => (stem.clone(), None),
            };
            let dir = out.unwrap_or_else(|| csv.parent().map(Path::to_path_buf).unwrap_or_default());
            std::fs::create_dir_all(&dir)?;
            let target = dir.join(format!("{stem}.svg"));
            let summary = emit_plot(&csv, &PlotStyle::for_axis(&title, axis), &target)?;
            eprintln!("wrote {} ({} curves, {} points)", target.display(), summary.curves, summary.points);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
