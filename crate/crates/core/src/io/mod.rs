//! Run configuration, dumps, manifests and the experiment harness.

mod config;
mod dump;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::continuum::{init_density, Grid, InitKind, MacroSolver};
use crate::error::{Error, Result};
use crate::micro::{MicroConfig, MicroSim};
use crate::par::{self, Exec};
use crate::params::PhysicalParams;
use crate::quantify::{quantify_density, quantify_particles, QuantReport, QuantSettings};
use crate::stability::{dispersion_csv, phase_diagram_csv, scale_scan_csv, StabilityInput, ZGrid};

pub use config::{find_key, Engine, GridFormat, InitChoice, Key, RunConfig, DEFAULT_T_END, FULL_T_END, KEYS};
pub use dump::{
    edges_from_csv, edges_name, edges_to_csv, grid_from_binary, grid_from_text, grid_to_binary, grid_to_text,
    particles_from_csv, particles_to_csv, read_dump, read_text, sha256_hex, snapshot_name, write_atomic, Dump,
    GridHeader, ParticleHeader,
};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const QUANT_CSV_NAME: &str = "quantifiers.csv";
pub const SUMMARY_CSV_NAME: &str = "summary.csv";

/// Record of one run, written last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputManifest {
    pub code_version: String,
    /// Canonical text of the fully resolved configuration.
    pub config: String,
    pub params_hash: String,
    pub complete: bool,
    pub error: Option<String>,
    /// Snapshot files, relative to the output directory.
    pub snapshots: Vec<String>,
    pub edge_lists: Vec<String>,
    pub quantifier_csv: Option<String>,
    pub started_unix_seconds: f64,
    pub wall_clock_seconds: f64,
}

impl OutputManifest {
    pub fn run_config(&self) -> Result<RunConfig> {
        RunConfig::parse(&self.config)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_NAME);
        let text = read_text(&path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Hash of the `params.*` block of the canonical configuration.
pub fn params_hash(cfg: &RunConfig) -> String {
    let block: String = cfg
        .entries()
        .into_iter()
        .filter(|(k, _)| k.starts_with("params."))
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    sha256_hex(&block)
}

pub fn quant_csv(rows: &[QuantReport]) -> String {
    let mut out = format!("{}\n", QuantReport::CSV_HEADER);
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Collects outputs while an engine runs; the first failure stops further
/// writes.
struct Recorder<'a> {
    cfg: &'a RunConfig,
    hash: String,
    snapshots: Vec<String>,
    edges: Vec<String>,
    rows: Vec<QuantReport>,
    failure: Option<Error>,
}

impl Recorder<'_> {
    fn attempt(&mut self, f: impl FnOnce(&mut Self) -> Result<()>) {
        if self.failure.is_none() {
            if let Err(e) = f(self) {
                self.failure = Some(e);
            }
        }
    }
}

/// Execute one experiment, writing snapshots, the quantifier table and,
/// last, the manifest.
pub fn run_experiment(cfg: &RunConfig) -> Result<OutputManifest> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let mut rec = Recorder {
        cfg,
        hash: params_hash(cfg),
        snapshots: Vec::new(),
        edges: Vec::new(),
        rows: Vec::new(),
        failure: None,
    };
    log::info!("{} run of {} to t = {} in {}", cfg.engine, cfg.scenario, cfg.t_end, dir.display());
    let outcome = match cfg.engine.micro_mode() {
        Some(mode) => run_micro(cfg, mode, &mut rec),
        None => run_density(cfg, &mut rec),
    };
    let outcome = outcome.and_then(|()| rec.failure.take().map_or(Ok(()), Err));
    let quantifier_csv = if cfg.quantify && outcome.is_ok() {
        write_atomic(&dir.join(QUANT_CSV_NAME), quant_csv(&rec.rows).as_bytes())?;
        Some(QUANT_CSV_NAME.to_string())
    } else {
        None
    };
    let manifest = OutputManifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.to_text(),
        params_hash: rec.hash,
        complete: outcome.is_ok(),
        error: outcome.as_ref().err().map(|e| e.to_string()),
        snapshots: rec.snapshots,
        edge_lists: rec.edges,
        quantifier_csv,
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
    };
    write_atomic(&dir.join(MANIFEST_NAME), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    outcome.map(|()| manifest)
}

fn run_micro(cfg: &RunConfig, mode: crate::micro::MicroMode, rec: &mut Recorder) -> Result<()> {
    let mc = MicroConfig {
        mode,
        dt: cfg.dt,
        seed: cfg.seed,
        params: cfg.params.clone(),
        snapshot_every: cfg.snapshot_stride,
        exec: cfg.exec(),
    };
    let mut sim = MicroSim::with_placement(mc, cfg.placement())?;
    sim.run_until(cfg.t_end, |snap| {
        rec.attempt(|r| {
            let c = r.cfg;
            let header = ParticleHeader {
                time: snap.state.time,
                step: snap.step,
                seed: c.seed,
                params_hash: r.hash.clone(),
                half_length: c.params.half_length,
            };
            let name = snapshot_name(snap.step, false, false);
            write_atomic(&c.output_dir.join(&name), particles_to_csv(&header, &snap.state)?.as_bytes())?;
            r.snapshots.push(name);
            if let Some(g) = &snap.graph {
                let name = edges_name(snap.step);
                write_atomic(&c.output_dir.join(&name), edges_to_csv(g).as_bytes())?;
                r.edges.push(name);
            }
            if c.quantify {
                r.rows.push(quantify_particles(&snap.state, c.params.half_length, &c.quant)?);
            }
            Ok(())
        })
    })
}

fn run_density(cfg: &RunConfig, rec: &mut Recorder) -> Result<()> {
    let grid = Grid::for_params(&cfg.params, cfg.n_cells)?;
    let mut solver = MacroSolver::new(cfg.params.clone(), grid, cfg.dt)?;
    solver.exec = cfg.exec();
    let kind = match cfg.init {
        InitChoice::HalfSplit => InitKind::HalfSplit,
        _ => InitKind::PerturbedUniform,
    };
    let mut field = init_density(grid, kind, cfg.init_amplitude, cfg.seed)?;
    let binary = cfg.grid_format == GridFormat::Binary;
    solver.run_until(&mut field, cfg.t_end, cfg.snapshot_stride, |step, f| {
        rec.attempt(|r| {
            let c = r.cfg;
            let header = GridHeader {
                time: f.time,
                step,
                seed: c.seed,
                params_hash: r.hash.clone(),
                half_length: f.grid.half_length,
                n_cells: f.grid.n_cells,
            };
            let name = snapshot_name(step, true, binary);
            let bytes = if binary {
                grid_to_binary(&header, f)?
            } else {
                grid_to_text(&header, f)?.into_bytes()
            };
            write_atomic(&c.output_dir.join(&name), &bytes)?;
            r.snapshots.push(name);
            if c.quantify {
                r.rows.push(quantify_density(f, &c.quant)?);
            }
            Ok(())
        })
    })
}

/// One row of a sweep summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub output_dir: PathBuf,
    /// Quantifiers of the final snapshot.
    pub last: Option<QuantReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

impl SweepSummary {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},status,{}\n", self.axis, QuantReport::CSV_HEADER);
        for r in &self.rows {
            match (&r.last, &r.error) {
                (Some(q), _) => out.push_str(&format!("{},ok,{}\n", r.value, q.csv_row())),
                (None, Some(e)) => out.push_str(&format!("{},error: {},,,,,,,\n", r.value, e.replace([',', '\n'], " "))),
                (None, None) => out.push_str(&format!("{},ok,,,,,,,\n", r.value)),
            }
        }
        out
    }
}

/// Run `template` once per value of the numeric key `axis`, each in its own
/// subdirectory, and write a summary sorted by value. Failed runs are
/// recorded and the sweep continues.
pub fn sweep(template: &RunConfig, axis: &str, values: &[f64]) -> Result<SweepSummary> {
    let key = find_key(axis).ok_or_else(|| Error::Config(format!("unknown sweep axis `{axis}`")))?;
    let numeric = !matches!(key.name, "run.scenario" | "run.output_dir")
        && template.get(axis).is_some_and(|v| v.parse::<f64>().is_ok());
    if !numeric {
        return Err(Error::Config(format!("sweep axis `{axis}` is not numeric")));
    }
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    let jobs: Vec<(f64, RunConfig)> = values
        .iter()
        .map(|&v| {
            let mut c = template.clone();
            c.output_dir = template.output_dir.join(format!("{axis}={v}"));
            (v, c)
        })
        .collect();
    let rows = par::map_jobs(template.exec(), jobs, |(v, mut c)| {
        let result = c.set(axis, &v.to_string()).and_then(|()| {
            run_experiment(&c)?;
            read_last_row(&c.output_dir)
        });
        match result {
            Ok(last) => SweepRow {
                value: v,
                output_dir: c.output_dir,
                last,
                error: None,
            },
            Err(e) => {
                log::warn!("sweep {axis} = {v} failed: {e}");
                SweepRow {
                    value: v,
                    output_dir: c.output_dir,
                    last: None,
                    error: Some(e.to_string()),
                }
            }
        }
    });
    let summary = SweepSummary {
        axis: axis.to_string(),
        rows,
    };
    write_atomic(&template.output_dir.join(SUMMARY_CSV_NAME), summary.to_csv().as_bytes())?;
    Ok(summary)
}

fn read_last_row(dir: &Path) -> Result<Option<QuantReport>> {
    let path = dir.join(QUANT_CSV_NAME);
    if !path.exists() {
        return Ok(None);
    }
    let text = read_text(&path)?;
    let Some(line) = text.lines().skip(1).last() else {
        return Ok(None);
    };
    let bad = || Error::Parse {
        path: path.clone(),
        msg: format!("bad row `{line}`"),
    };
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 7 {
        return Err(bad());
    }
    let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
    Ok(Some(QuantReport {
        time: num(0)?,
        n_green_clusters: f[1].parse().map_err(|_| bad())?,
        mean_elongation: num(2)?,
        q: num(3)?,
        q_colored: num(4)?,
        vf_green: num(5)?,
        vf_red: num(6)?,
    }))
}

/// Write the stability tables for `params` to `dir`:
/// `scale_scan.csv` (lambda at the first periodic mode versus s),
/// `dispersion.csv` (lambda versus z for each s), `thresholds.csv`
/// (whole-space and periodic s*) and `most_unstable.csv` (z*(s)).
pub fn stability_report(params: &PhysicalParams, scales: &[f64], z: ZGrid, dir: &Path, exec: Exec) -> Result<Vec<PathBuf>> {
    let input = StabilityInput::periodic(params.clone());
    input.validate()?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let p = dir.join(name);
        write_atomic(&p, text.as_bytes())?;
        written.push(p);
        Ok(())
    };
    put("scale_scan.csv", scale_scan_csv(&input, input.first_mode_z(), scales)?)?;
    let mut disp = String::from("s,z,lambda1,lambda2\n");
    for &s in scales {
        for line in dispersion_csv(&input.with_inter_scale(s), z)?.lines().skip(1) {
            disp.push_str(&format!("{s},{line}\n"));
        }
    }
    put("dispersion.csv", disp)?;
    let bg = 1.0 / params.domain_area();
    let whole = StabilityInput::whole_space(params.clone(), bg, bg).s_star_whole_space();
    let show = |r: Result<f64>| match r {
        Ok(v) => v.to_string(),
        Err(Error::NoThreshold) => "none".to_string(),
        Err(e) => format!("error: {e}"),
    };
    put(
        "thresholds.csv",
        format!("s_star_whole_space,s_star_periodic\n{},{}\n", show(whole), show(input.s_star_periodic())),
    )?;
    put("most_unstable.csv", phase_diagram_csv(&input, scales, z, exec)?)?;
    Ok(written)
}

/// Snapshot dumps in `dir`, sorted by name.
pub fn list_dumps(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("snap_")))
        .collect();
    out.sort();
    Ok(out)
}

/// Quantify existing dumps; rows come back sorted by time.
pub fn quantify_dumps(paths: &[PathBuf], settings: &QuantSettings, exec: Exec) -> Result<Vec<QuantReport>> {
    let mut rows = par::map_jobs(exec, paths.to_vec(), |p| -> Result<QuantReport> {
        match read_dump(&p)? {
            Dump::Particles { header, state } => quantify_particles(&state, header.half_length, settings),
            Dump::Density { field, .. } => quantify_density(&field, settings),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(rows)
}
