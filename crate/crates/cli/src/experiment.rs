//! Runs, sweeps and data export.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nhota_core::metrics::{decay_window, min_prefix};
use nhota_core::problems::{read_bundle, write_bundle};
use nhota_core::{
    gen_diag_quad, gen_phase_retrieval, rate_fit, CompositeProblem, DiagQuadData, DiagQuadInstance,
    IterateTrace, PhaseParams, PhaseRetrievalData, RunFailure, Runner, TraceRow, Vector,
};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, ExperimentConfig, ProblemKind};

pub const TRACE_HEADER: &str = "k,f,R,M,step_norm,stationarity,inner_iters,backtracks,wall_millis";

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(PathBuf, io::Error),
    Run(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Run(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(path.to_path_buf(), e)
}

/// A problem instance built from a config, with everything a summary needs.
pub struct Instance {
    pub problem: CompositeProblem,
    pub x0: Vector,
    pub phase: Option<Arc<PhaseRetrievalData>>,
    /// Known optimal value (diagonal quadratic only).
    pub f_star: Option<f64>,
    pub data_hash: String,
}

fn hash_floats<'a>(parts: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        for v in part {
            hasher.update(v.to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

pub fn build_instance(cfg: &ExperimentConfig) -> Result<Instance, CliError> {
    let config_err =
        |e: nhota_core::NhotaError| CliError::Config(ConfigError::general(e.to_string()));
    match cfg.problem {
        ProblemKind::PhaseRetrieval => {
            let data = match &cfg.data_file {
                Some(path) => {
                    let file = File::open(path).map_err(io_at(path))?;
                    Arc::new(read_bundle(BufReader::new(file)).map_err(config_err)?)
                }
                None => {
                    let mut params = PhaseParams::new(cfg.n, cfg.m, cfg.seed)
                        .noise_scale(cfg.noise_scale)
                        .lambda(cfg.lambda);
                    params.a_variance = cfg.a_variance;
                    gen_phase_retrieval(params).map_err(config_err)?.data
                }
            };
            let problem = data.problem().map_err(config_err)?;
            // A is column-major in memory; hash it row by row.
            let a_rows: Vec<f64> = data.a.transpose().as_slice().to_vec();
            let data_hash = hash_floats([a_rows.as_slice(), data.y.as_slice()]);
            let x0 = match &cfg.x0 {
                Some(x0) if x0.len() != data.n() => {
                    return Err(ConfigError::general(format!(
                        "x0 has {} entries, need {}",
                        x0.len(),
                        data.n()
                    ))
                    .into())
                }
                Some(x0) => Vector::from_column_slice(x0),
                None => data.x0.clone(),
            };
            Ok(Instance {
                problem,
                x0,
                phase: Some(data),
                f_star: None,
                data_hash,
            })
        }
        ProblemKind::DiagQuadL1 => {
            let inst = match (&cfg.d, &cfg.c) {
                (Some(d), Some(c)) => {
                    let data = DiagQuadData::new(
                        Vector::from_column_slice(d),
                        Vector::from_column_slice(c),
                        cfg.lambda,
                    )
                    .map_err(config_err)?;
                    let x0 =
                        Vector::from_column_slice(cfg.x0.as_deref().unwrap_or(&vec![0.0; d.len()]));
                    DiagQuadInstance::from_data(data, x0).map_err(config_err)?
                }
                _ => {
                    let mut inst =
                        gen_diag_quad(cfg.n, cfg.seed, cfg.lambda).map_err(config_err)?;
                    if let Some(x0) = &cfg.x0 {
                        if x0.len() != cfg.n {
                            return Err(ConfigError::general(format!(
                                "x0 has {} entries, need {}",
                                x0.len(),
                                cfg.n
                            ))
                            .into());
                        }
                        inst.x0 = Vector::from_column_slice(x0);
                    }
                    inst
                }
            };
            let f_star = inst.problem.known_opt().map(|o| o.f);
            let data_hash = hash_floats([inst.data.d.as_slice(), inst.data.c.as_slice()]);
            Ok(Instance {
                problem: inst.problem,
                x0: inst.x0,
                phase: None,
                f_star,
                data_hash,
            })
        }
    }
}

pub fn format_row(row: &TraceRow, wall_clock: bool) -> String {
    let wall = if wall_clock {
        format!("{:e}", row.wall_millis)
    } else {
        "0".to_string()
    };
    format!(
        "{},{:e},{:e},{:e},{:e},{:e},{},{},{}",
        row.k,
        row.f,
        row.r,
        row.m,
        row.step_norm,
        row.stationarity,
        row.inner_iters,
        row.backtracks,
        wall
    )
}

/// Outcome of a single run, after the trace file is complete.
pub struct RunReport {
    pub u: f64,
    pub trace: IterateTrace,
    pub error: Option<String>,
}

/// Run once at reference weight `u`, streaming rows to `trace_path` and
/// writing the summary to `summary_path`.
pub fn run_one(
    cfg: &ExperimentConfig,
    inst: &Instance,
    u: f64,
    trace_path: &Path,
    summary_path: &Path,
) -> Result<RunReport, CliError> {
    let file = File::create(trace_path).map_err(io_at(trace_path))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{TRACE_HEADER}")
        .and_then(|_| out.flush())
        .map_err(io_at(trace_path))?;
    let mut write_err: Option<io::Error> = None;
    let result = Runner::new(&inst.problem, cfg.run_config(u))
        .observer(|row| {
            if write_err.is_none() {
                if let Err(e) =
                    writeln!(out, "{}", format_row(row, cfg.wall_clock)).and_then(|_| out.flush())
                {
                    write_err = Some(e);
                }
            }
        })
        .run(inst.x0.clone());
    if let Some(e) = write_err {
        return Err(CliError::Io(trace_path.to_path_buf(), e));
    }
    let (trace, error) = match result {
        Ok(t) => (t, None),
        Err(RunFailure { source, trace, .. }) => (trace, Some(source.to_string())),
    };
    let report = RunReport { u, trace, error };
    fs::write(summary_path, summary_text(cfg, inst, &report)).map_err(io_at(summary_path))?;
    Ok(report)
}

/// Log-log slope of the running minimum of stationarity over its decay
/// window, if the window is long enough.
pub fn fitted_rate(trace: &IterateTrace) -> Option<(f64, f64)> {
    let series = min_prefix(&trace.stationarity());
    rate_fit(&series, decay_window(&series))
        .ok()
        .map(|f| (f.slope, f.r2))
}

pub fn summary_text(cfg: &ExperimentConfig, inst: &Instance, report: &RunReport) -> String {
    let trace = &report.trace;
    let mut lines = Vec::new();
    let mut put = |k: &str, v: String| lines.push(format!("{k}={v}"));
    put(
        "status",
        match &report.error {
            Some(_) => "failed".to_string(),
            None => trace.status.to_string(),
        },
    );
    if let Some(e) = &report.error {
        put("error", e.replace('\n', " "));
    }
    put(
        "problem",
        match cfg.problem {
            ProblemKind::PhaseRetrieval => "phase_retrieval",
            ProblemKind::DiagQuadL1 => "diag_quad_l1",
        }
        .into(),
    );
    put("p", cfg.order.to_string());
    put("u", format!("{}", report.u));
    put("seed", cfg.seed.to_string());
    put("data_sha256", inst.data_hash.clone());
    if let Some(last) = trace.rows.last() {
        put("iterations", last.k.to_string());
        put("final_f", format!("{:e}", last.f));
        put("final_R", format!("{:e}", last.r));
        put("final_stationarity", format!("{:e}", last.stationarity));
        put(
            "stationarity_is_bound",
            last.stationarity_is_bound.to_string(),
        );
        put(
            "total_backtracks",
            trace
                .rows
                .iter()
                .map(|r| r.backtracks)
                .sum::<usize>()
                .to_string(),
        );
        put(
            "total_inner_iters",
            trace
                .rows
                .iter()
                .map(|r| r.inner_iters)
                .sum::<usize>()
                .to_string(),
        );
        put("M_max", format!("{:e}", trace.m_max()));
        if let Some(f_star) = inst.f_star {
            put("f_star", format!("{f_star:e}"));
            put("final_gap", format!("{:e}", last.f - f_star));
        }
    }
    match fitted_rate(trace) {
        Some((slope, r2)) => {
            put("fitted_slope", format!("{slope:e}"));
            put("fitted_r2", format!("{r2:e}"));
        }
        None => put("fitted_slope", "nan".into()),
    }
    put(
        "reference_violations",
        trace.reference_violations(1e-9).len().to_string(),
    );
    let mut text = lines.join("\n");
    text.push('\n');
    text
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_at(dir))
}

/// Single run at `cfg.u`. Returns the report; the caller maps failures to
/// exit codes.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let inst = build_instance(cfg)?;
    prepare_dir(&cfg.output_dir)?;
    run_one(
        cfg,
        &inst,
        cfg.u,
        &cfg.output_dir.join("trace.csv"),
        &cfg.output_dir.join("summary.txt"),
    )
}

fn u_label(u: f64) -> String {
    format!("u{u}")
}

/// One run per entry of `u_list` on shared data, in parallel, plus the wide
/// comparison table `comparison.csv`.
pub fn sweep_u(cfg: &ExperimentConfig) -> Result<Vec<RunReport>, CliError> {
    let inst = build_instance(cfg)?;
    prepare_dir(&cfg.output_dir)?;
    let results: Vec<Result<RunReport, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .u_list
            .iter()
            .map(|&u| {
                let inst = &inst;
                s.spawn(move || {
                    let label = u_label(u);
                    run_one(
                        cfg,
                        inst,
                        u,
                        &cfg.output_dir.join(format!("trace_{label}.csv")),
                        &cfg.output_dir.join(format!("summary_{label}.txt")),
                    )
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(CliError::Run("worker panicked".into())))
            })
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let path = cfg.output_dir.join("comparison.csv");
    let mut header = vec!["k".to_string()];
    for r in &reports {
        let label = u_label(r.u);
        header.push(format!("f_{label}"));
        header.push(format!("stationarity_{label}"));
    }
    let mut text = header.join(",");
    text.push('\n');
    let rows = reports
        .iter()
        .map(|r| r.trace.rows.len())
        .max()
        .unwrap_or(0);
    for k in 0..rows {
        let mut cells = vec![k.to_string()];
        for r in &reports {
            match r.trace.rows.get(k) {
                Some(row) => {
                    cells.push(format!("{:e}", row.f));
                    cells.push(format!("{:e}", row.stationarity));
                }
                None => {
                    cells.push(String::new());
                    cells.push(String::new());
                }
            }
        }
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(&path, text).map_err(io_at(&path))?;
    Ok(reports)
}

/// Write the phase-retrieval data bundle to `<output_dir>/data.csv`.
pub fn gen_data(cfg: &ExperimentConfig) -> Result<(PathBuf, String), CliError> {
    if cfg.problem != ProblemKind::PhaseRetrieval {
        return Err(
            ConfigError::general("gen-data supports problem = phase_retrieval only").into(),
        );
    }
    let inst = build_instance(cfg)?;
    prepare_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("data.csv");
    let file = File::create(&path).map_err(io_at(&path))?;
    let data = inst
        .phase
        .expect("phase retrieval instance carries its data");
    let mut out = BufWriter::new(file);
    write_bundle(&data, &mut out).map_err(|e| CliError::Run(e.to_string()))?;
    out.flush().map_err(io_at(&path))?;
    Ok((path, inst.data_hash))
}

/// Whether the `f` column is nonincreasing.
pub fn is_monotone(trace: &IterateTrace) -> bool {
    trace.rows.windows(2).all(|w| w[1].f <= w[0].f)
}
