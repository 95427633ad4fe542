use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use cellsort::io::{
    list_dumps, quant_csv, quantify_dumps, run_experiment, stability_report, sweep, write_atomic, Engine, RunConfig,
    FULL_T_END, KEYS,
};
use cellsort::params::{scenario_preset, PRESET_NAMES};
use cellsort::stability::{StabilityInput, ZGrid};
use clap::{Args, Parser, Subcommand};

/// Relative output paths resolve against this directory when it is set.
const OUTPUT_ROOT_VAR: &str = "CELLSORT_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "cellsort", version, about = "Two-species cell segregation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(ConfigArgs),
    /// Run one experiment per value of a numeric key.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Key to vary, e.g. params.inter_scale.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Write dispersion tables and critical scales.
    Stability {
        #[command(flatten)]
        config: ConfigArgs,
        /// Interspecies scales to tabulate.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4,8")]
        scales: Vec<f64>,
        #[arg(long, default_value_t = 4.0)]
        z_max: f64,
        #[arg(long, default_value_t = 400)]
        z_points: usize,
    },
    /// Quantify existing snapshot dumps.
    Quantify {
        /// Run directories or individual dump files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Optional config supplying the quantify.* settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Extra `key=value` overrides.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the scenario presets and their critical scales.
    Presets,
    /// List the configuration keys.
    Keys,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario preset, shorthand for `--set run.scenario=NAME`.
    #[arg(long)]
    preset: Option<String>,
    /// Engine, shorthand for `--set run.engine=ENGINE`.
    #[arg(long)]
    engine: Option<String>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory, shorthand for `--set run.output_dir=DIR`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run to the long reference horizon instead of the desk-scale default.
    #[arg(long)]
    full_length: bool,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut text = match &self.config {
            Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => String::new(),
        };
        let mut extra = Vec::new();
        if let Some(p) = &self.preset {
            extra.push(format!("run.scenario={p}"));
        }
        if let Some(e) = &self.engine {
            extra.push(format!("run.engine={e}"));
        }
        for line in extra {
            text = override_line(&text, &line)?;
        }
        let mut cfg = RunConfig::parse(&text)?;
        if self.full_length {
            cfg.t_end = FULL_T_END;
        }
        for kv in &self.overrides {
            let (k, v) = split_kv(kv)?;
            cfg.set(k, v)?;
        }
        if let Some(o) = &self.output {
            cfg.output_dir = o.clone();
        }
        cfg.output_dir = resolve_output(&cfg.output_dir);
        Ok(cfg)
    }
}

fn split_kv(kv: &str) -> Result<(&str, &str)> {
    kv.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| cellsort::Error::Config(format!("expected KEY=VALUE, got `{kv}`")).into())
}

/// Replace (or append) the line for `kv`'s key in config text, so that
/// keys resolved during parsing (scenario, engine) can be overridden.
fn override_line(text: &str, kv: &str) -> Result<String> {
    let (k, v) = split_kv(kv)?;
    let mut out: String = text
        .lines()
        .filter(|l| l.split_once('=').map(|(lk, _)| lk.trim()) != Some(k))
        .map(|l| format!("{l}\n"))
        .collect();
    out.push_str(&format!("{k} = {v}\n"));
    Ok(out)
}

fn resolve_output(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let m = run_experiment(&cfg)?;
            println!(
                "wrote {} snapshots to {} in {:.1} s",
                m.snapshots.len(),
                cfg.output_dir.display(),
                m.wall_clock_seconds
            );
        }
        Command::Sweep { config, axis, values } => {
            let cfg = config.resolve()?;
            let s = sweep(&cfg, &axis, &values)?;
            print!("{}", s.to_csv());
        }
        Command::Stability {
            config,
            scales,
            z_max,
            z_points,
        } => {
            let cfg = config.resolve()?;
            let z = ZGrid {
                lo: 0.0,
                hi: z_max,
                n: z_points,
            };
            for p in stability_report(&cfg.params, &scales, z, &cfg.output_dir, cfg.exec())? {
                println!("{}", p.display());
            }
        }
        Command::Quantify {
            inputs,
            config,
            overrides,
            output,
        } => {
            let text = match &config {
                Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                None => String::new(),
            };
            let mut cfg = RunConfig::parse(&text)?;
            for kv in &overrides {
                let (k, v) = split_kv(kv)?;
                cfg.set(k, v)?;
            }
            let mut files = Vec::new();
            for p in &inputs {
                if p.is_dir() {
                    files.extend(list_dumps(p)?);
                } else {
                    files.push(p.clone());
                }
            }
            let table = quant_csv(&quantify_dumps(&files, &cfg.quant, cfg.exec())?);
            match output {
                Some(o) => write_atomic(&resolve_output(&o), table.as_bytes())?,
                None => print!("{table}"),
            }
        }
        Command::Presets => {
            println!("name,kappa_aa,kappa_bb,base_kappa_ab,base_kappa_ba,s,regime,reported_s_star,s_star_periodic");
            for name in PRESET_NAMES {
                let sc = scenario_preset(name)?;
                let p = &sc.params;
                let s_star = StabilityInput::periodic(p.clone()).s_star_periodic()?;
                println!(
                    "{},{},{},{},{},{},{:?},{},{:.4}",
                    sc.name,
                    p.stiffness_aa,
                    p.stiffness_bb,
                    p.base_stiffness_ab,
                    p.base_stiffness_ba,
                    p.inter_scale,
                    sc.regime,
                    sc.expected_s_star.map_or("-".into(), |v| v.to_string()),
                    s_star
                );
            }
        }
        Command::Keys => {
            let defaults = RunConfig::new(Engine::Macro, Default::default());
            for k in KEYS {
                println!("{:32} {:12} {}", k.name, defaults.get(k.name).unwrap_or_default(), k.doc);
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<cellsort::Error>()) {
        Some(e) if e.is_numerical_guard() => 3,
        Some(
            cellsort::Error::Config(_)
            | cellsort::Error::InvalidParams(_)
            | cellsort::Error::UnknownPreset { .. }
            | cellsort::Error::Parse { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
