use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use zeno_switch::atomic::GeneratorMode;
use zeno_switch::driver::{run, sweep, Figure, RunConfig, Simulation, SweepParameter};
use zeno_switch::units::RateConvention;

/// Steady-state simulation of an EIT-controlled Zeno add-drop switch.
#[derive(Parser, Debug)]
#[command(name = "simulate", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Which figure data to write: fig4, fig5a, fig5b, fig5c, fig5d or all.
    #[arg(long, default_value = "all")]
    figure: String,
    /// Sweep one parameter over comma-separated values instead of a full run.
    #[arg(long, num_args = 2, value_names = ["PARAM", "VALUES"])]
    sweep: Option<Vec<String>>,
    #[arg(long)]
    convention: Option<RateConvention>,
    #[arg(long)]
    generator: Option<GeneratorMode>,
}

fn parse_values(list: &str) -> anyhow::Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| anyhow::anyhow!("bad sweep value `{s}`: {e}")))
        .collect()
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let mut config = RunConfig::load(&cli.config)?.with_overrides(std::env::vars())?;
    if let Some(c) = cli.convention {
        config.convention = c;
    }
    if let Some(g) = cli.generator {
        config.absorption.generator = g;
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    let base = cli.config.parent().map(|p| p.to_path_buf());

    if let Some(args) = cli.sweep {
        let parameter: SweepParameter = args[0].parse()?;
        let values = parse_values(&args[1])?;
        let (rows, path) = sweep(&config, base.as_deref(), parameter, &values, &out_dir)?;
        println!("{}", path.display());
        return Ok(rows.iter().all(|r| r.converged()));
    }

    let figures: Vec<Figure> = match cli.figure.as_str() {
        "all" => Figure::ALL.to_vec(),
        name => vec![name.parse().map_err(anyhow::Error::msg)?],
    };
    let sim = Simulation::new(config, base.as_deref())?;
    let outcome = run(&sim, &figures, &out_dir)?;
    for path in &outcome.files {
        println!("{}", path.display());
    }
    for (name, block) in [
        ("reference", &outcome.report.reference_design),
        ("equal_bandwidth", &outcome.report.equal_bandwidth),
        ("equal_contrast", &outcome.report.equal_contrast),
    ] {
        if let Some(e) = &block.error {
            eprintln!("{name}: {e}");
        }
    }
    Ok(outcome.report.converged)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: not every computation converged; see report");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
