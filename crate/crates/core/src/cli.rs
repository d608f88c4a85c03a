//! Command-line front end.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{self, default_grids, linspace, STCA_HEADER};
use crate::design::{design_with_progress, DesignMode, DesignOptions, TraceRow};
use crate::error::{Error, Result};
use crate::filter::{design_filter, sinr};
use crate::io::{read_waveform_csv, write_filter_csv, write_table, write_waveform_csv};
use crate::scenario::{parse_config_with_warnings, Algorithm, ScenarioConfig};
use crate::spectral::{
    bands_from_config, esd_rows, feasibility_precheck, sector_precheck, sectors_from_config,
    PrecheckReport, ESD_HEADER,
};
use crate::stap::{workers_from_env, ArrayGeometry, StapModel, WaveformMatrix};

/// Success, with every constraint met and the design converged.
pub const EXIT_OK: i32 = 0;
/// I/O, parse or validation error.
pub const EXIT_ERROR: i32 = 1;
/// Completed with warnings: precheck failure, constraint violation or stall.
pub const EXIT_WARN: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "stapwave",
    version,
    about = "MIMO-STAP waveform and filter design"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlgorithmArg {
    Dk,
    Mm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Bands,
    Sectors,
}

impl From<ModeArg> for DesignMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Bands => DesignMode::Bands,
            ModeArg::Sectors => DesignMode::Sectors,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a waveform and filter; writes waveform.csv, filter.csv, trace.csv and manifest.json.
    Design {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured algorithm.
        #[arg(long, value_enum)]
        algorithm: Option<AlgorithmArg>,
        #[arg(long, value_enum, default_value = "bands")]
        mode: ModeArg,
        /// Overrides the configured seed of the random initializer.
        #[arg(long)]
        seed: Option<u64>,
        /// Run even when the feasibility precheck fails.
        #[arg(long)]
        force: bool,
        /// Log every N-th trace row (0 disables).
        #[arg(long, default_value_t = 0)]
        trace_every: usize,
    },
    /// Audit a waveform; writes audit.txt, audit.json, esd.csv and stca.csv.
    Evaluate {
        #[arg(long)]
        waveform: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the waveform's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "bands")]
        mode: ModeArg,
    },
    /// Energy spectral density of each antenna's code.
    Esd {
        #[arg(long)]
        waveform: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Frequency grid size; defaults to 4L.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Space-time cross-ambiguity of a waveform and its MVDR filter.
    Stca {
        #[arg(long)]
        waveform: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 181)]
        azimuth_points: usize,
        #[arg(long, default_value_t = 101)]
        doppler_points: usize,
    },
    /// Validate a config and run the spectral feasibility precheck.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "bands")]
        mode: ModeArg,
    },
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub seed: u64,
    pub algorithm: String,
    pub mode: String,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub final_sinr_db: f64,
    pub initial_sinr_db: f64,
    pub converged: bool,
    pub feasible: bool,
    pub warnings: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn run(command: Command) -> Result<i32> {
    match command {
        Command::Design {
            config,
            out,
            algorithm,
            mode,
            seed,
            force,
            trace_every,
        } => cmd_design(
            &config,
            &out,
            algorithm,
            mode.into(),
            seed,
            force,
            trace_every,
        ),
        Command::Evaluate {
            waveform,
            config,
            out,
            mode,
        } => {
            let out =
                out.unwrap_or_else(|| waveform.parent().map(Path::to_path_buf).unwrap_or_default());
            cmd_evaluate(&waveform, &config, &out, mode.into())
        }
        Command::Esd {
            waveform,
            out,
            points,
        } => {
            let s = read_waveform_csv(&waveform)?;
            write_esd(&out, &s, points)?;
            Ok(EXIT_OK)
        }
        Command::Stca {
            waveform,
            config,
            out,
            azimuth_points,
            doppler_points,
        } => {
            let (cfg, _) = load(&config)?;
            let s = read_waveform_csv(&waveform)?;
            let az = linspace(-90.0, 90.0, azimuth_points);
            let f = linspace(-0.5, 0.5, doppler_points);
            write_stca(&out, &cfg, &s, &az, &f)?;
            Ok(EXIT_OK)
        }
        Command::Check { config, mode } => {
            let (cfg, warnings) = load(&config)?;
            let report = precheck(&cfg, mode.into())?;
            print!("{}", report.summary());
            Ok(if report.feasible() && warnings.is_empty() {
                EXIT_OK
            } else {
                EXIT_WARN
            })
        }
    }
}

/// Read and validate a config, printing its warnings.
fn load(path: &Path) -> Result<(ScenarioConfig, Vec<String>)> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let (cfg, warnings) = parse_config_with_warnings(&text)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok((cfg, warnings))
}

fn precheck(cfg: &ScenarioConfig, mode: DesignMode) -> Result<PrecheckReport> {
    Ok(match mode {
        DesignMode::Bands => feasibility_precheck(&bands_from_config(cfg)?, cfg),
        DesignMode::Sectors => sector_precheck(&sectors_from_config(cfg)?, cfg),
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn cmd_design(
    config: &Path,
    out: &Path,
    algorithm: Option<AlgorithmArg>,
    mode: DesignMode,
    seed: Option<u64>,
    force: bool,
    trace_every: usize,
) -> Result<i32> {
    let started = unix_now();
    let (mut cfg, _) = load(config)?;
    if let Some(a) = algorithm {
        cfg.solver.algorithm = match a {
            AlgorithmArg::Dk => Algorithm::DkAdmm,
            AlgorithmArg::Mm => Algorithm::MmAdmm,
        };
    }
    if let Some(seed) = seed {
        cfg.solver.seed = seed;
    }
    let report = precheck(&cfg, mode)?;
    if !report.feasible() {
        eprint!("{}", report.summary());
        if !force {
            eprintln!("precheck failed; rerun with --force to design anyway");
            return Ok(EXIT_WARN);
        }
    }
    std::fs::create_dir_all(out)?;

    let mut opts = DesignOptions::from_config(&cfg);
    opts.mode = mode;
    let mut count = 0usize;
    let mut progress = |row: &TraceRow| {
        if trace_every > 0 && count.is_multiple_of(trace_every) {
            info!(
                "outer {} inner {} sinr {:.6} dB {}",
                row.outer_iter,
                row.inner_iter,
                row.sinr_db,
                row.flag()
            );
        }
        count += 1;
    };
    let result = design_with_progress(&cfg, &opts, &mut progress)?;

    let outputs = vec![
        out.join("waveform.csv"),
        out.join("filter.csv"),
        out.join("trace.csv"),
        out.join("manifest.json"),
    ];
    write_waveform_csv(&outputs[0], &result.s)?;
    write_filter_csv(&outputs[1], &result.w)?;
    write_table(
        &outputs[2],
        &result.trace.header(),
        &result.trace.csv_rows(),
    )?;
    let manifest = RunManifest {
        config_sha256: sha256_hex(&std::fs::read(config)?),
        seed: cfg.solver.seed,
        algorithm: cfg.solver.algorithm.to_string(),
        mode: mode.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: unix_now(),
        final_sinr_db: result.sinr_db,
        initial_sinr_db: result.initial_sinr_db,
        converged: result.converged,
        feasible: result.feasible,
        warnings: result.warnings.clone(),
        outputs: outputs.clone(),
    };
    std::fs::write(&outputs[3], serde_json::to_string_pretty(&manifest)?)?;

    println!(
        "SINR {:.4} dB (initial {:.4} dB), {} trace rows, feasible {}, converged {}",
        result.sinr_db,
        result.initial_sinr_db,
        result.trace.rows.len(),
        result.feasible,
        result.converged
    );
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(
        if result.feasible && result.converged && result.stalls == 0 {
            EXIT_OK
        } else {
            EXIT_WARN
        },
    )
}

fn cmd_evaluate(waveform: &Path, config: &Path, out: &Path, mode: DesignMode) -> Result<i32> {
    let (cfg, _) = load(config)?;
    let s = read_waveform_csv(waveform)?;
    let report = analysis::audit(&cfg, &s, mode)?;
    let model = StapModel::from_config(&cfg).with_workers(workers_from_env());
    let (w, _) = design_filter(&model, &s.vec_s())?;
    let sinr_db = sinr(&model, &w, &s.vec_s())?;

    if !out.as_os_str().is_empty() {
        std::fs::create_dir_all(out)?;
    }
    let mut text = report.to_text();
    text.push_str(&format!("sinr_db {sinr_db:e}\n"));
    std::fs::write(out.join("audit.txt"), &text)?;
    std::fs::write(out.join("audit.json"), report.to_json()?)?;
    write_esd(&out.join("esd.csv"), &s, None)?;
    let (az, f) = default_grids();
    write_stca(&out.join("stca.csv"), &cfg, &s, &az, &f)?;
    print!("{text}");
    Ok(if report.all_pass() {
        EXIT_OK
    } else {
        EXIT_WARN
    })
}

fn write_esd(path: &Path, s: &WaveformMatrix, points: Option<usize>) -> Result<()> {
    let header: Vec<String> = ESD_HEADER.iter().map(|h| h.to_string()).collect();
    let rows: Vec<Vec<String>> = esd_rows(s, points)
        .into_iter()
        .map(|(n, f, v)| vec![n.to_string(), format!("{f:e}"), format!("{v:e}")])
        .collect();
    write_table(path, &header, &rows)
}

fn write_stca(
    path: &Path,
    cfg: &ScenarioConfig,
    s: &WaveformMatrix,
    az: &[f64],
    f: &[f64],
) -> Result<()> {
    let model = StapModel::from_config(cfg).with_workers(workers_from_env());
    let (w, _) = design_filter(&model, &s.vec_s())?;
    let grid = analysis::stca(
        &ArrayGeometry::from_config(cfg),
        &w,
        s,
        az,
        f,
        workers_from_env(),
    )?;
    let header: Vec<String> = STCA_HEADER.iter().map(|h| h.to_string()).collect();
    let rows: Vec<Vec<String>> = grid
        .rows()
        .into_iter()
        .map(|(a, d, p)| vec![format!("{a:e}"), format!("{d:e}"), format!("{p:e}")])
        .collect();
    write_table(path, &header, &rows)
}
