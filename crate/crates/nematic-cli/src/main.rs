//! Command-line runner: verification checks, director-only runs, coupled
//! runs, and relaxation studies, all driven by the text config format.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 configuration
//! error, 3 the integration aborted on a numerical condition, 4 file I/O
//! error.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nematic::config::{RelaxKind, RunConfig, RunMode};
use nematic::diagnostics::EnergyReport;
use nematic::error::FlowError;
use nematic::flow::{self, FlowState};
use nematic::ledger::{self, LedgerMode, LedgerWriter};
use nematic::leslie::{self, ElState};
use nematic::snapshot::Snapshot;
use nematic::{init, verify};

#[derive(Parser)]
#[command(
    name = "nematic",
    version,
    about = "Nematic director dynamics on the 2D torus: gradient flows, the \
             coupled director-fluid system, and their energy ledgers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Path to a `key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created; must not already contain a run).
    #[arg(long)]
    out: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress per-row progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the built-in verification checks and report PASS/FAIL lines.
    Verify {
        /// Only run checks whose name contains this substring.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Integrate the director-only flow described by a config file.
    Flow(#[command(flatten)] RunArgs),
    /// Integrate the coupled director + velocity system.
    El(#[command(flatten)] RunArgs),
    /// Relaxation study: one penalized run per value in study.epsilons,
    /// with a summary table of norm deviations.
    GlStudy(#[command(flatten)] RunArgs),
}

enum CliError {
    Verify,
    Config(String),
    Abort(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verify => 1,
            CliError::Config(_) => 2,
            CliError::Abort(_) => 3,
            CliError::Io(_) => 4,
        }
    }
    fn message(&self) -> Option<&str> {
        match self {
            CliError::Verify => None,
            CliError::Config(m) | CliError::Abort(m) | CliError::Io(m) => Some(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<nematic::ConfigError> for CliError {
    fn from(e: nematic::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<nematic::FormatError> for CliError {
    fn from(e: nematic::FormatError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Config(c) => CliError::Config(c.to_string()),
            FlowError::Field(f) => CliError::Config(f.to_string()),
            FlowError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Abort(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Verify { filter } => cmd_verify(filter.as_deref()),
        Cmd::Flow(args) => cmd_flow(&args),
        Cmd::El(args) => cmd_el(&args),
        Cmd::GlStudy(args) => cmd_gl_study(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(m) = e.message() {
                eprintln!("error: {m}");
            }
            ExitCode::from(e.code())
        }
    }
}

fn cmd_verify(filter: Option<&str>) -> Result<(), CliError> {
    let reports = verify::run_checks(filter);
    if reports.is_empty() {
        return Err(CliError::Config(format!(
            "no verification check matches `{}`",
            filter.unwrap_or("")
        )));
    }
    let mut all_pass = true;
    for r in &reports {
        println!("{r}");
        all_pass &= r.pass;
    }
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Verify)
    }
}

/// Loads a config, applies the seed override, checks the expected mode.
fn load_config(args: &RunArgs, want: RunMode) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(&args.config)?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if cfg.mode != want {
        let (found, subcmd) = match cfg.mode {
            RunMode::Flow => ("flow", "flow"),
            RunMode::Coupled => ("el", "el"),
        };
        return Err(CliError::Config(format!(
            "config has run.mode = {found}; use the `{subcmd}` subcommand for it"
        )));
    }
    Ok(cfg)
}

/// Creates the run directory tree and echoes the canonical config into it.
fn prepare_out(out: &Path, cfg: &RunConfig, snapshots: bool) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    if snapshots {
        fs::create_dir_all(out.join("snapshots"))?;
    }
    fs::write(out.join("config.txt"), cfg.to_text())?;
    Ok(())
}

struct FlowFiles {
    ledger: LedgerWriter<BufWriter<File>>,
    snap_dir: PathBuf,
    quiet: bool,
}

impl FlowFiles {
    fn new(out: &Path, mode: LedgerMode, quiet: bool) -> Result<Self, CliError> {
        let file = File::create(out.join("ledger.tsv"))?;
        Ok(FlowFiles {
            ledger: LedgerWriter::new(BufWriter::new(file), mode)?,
            snap_dir: out.join("snapshots"),
            quiet,
        })
    }

    fn report(&mut self, r: &EnergyReport) -> std::io::Result<()> {
        self.ledger.write_row(r)?;
        if !self.quiet {
            println!(
                "t = {:<10.6} e_total = {:<12.6e} residual = {:+.3e}",
                r.time, r.e_total, r.residual
            );
        }
        Ok(())
    }
}

impl flow::RunObserver for FlowFiles {
    fn on_report(&mut self, r: &EnergyReport) -> std::io::Result<()> {
        self.report(r)
    }
    fn on_snapshot(&mut self, state: &FlowState) -> std::io::Result<()> {
        let path = self.snap_dir.join(format!("director_{:06}.nfld", state.step));
        Snapshot::from_vec3(&state.u, state.t)
            .save(path)
            .map_err(std::io::Error::other)
    }
}

impl leslie::ElObserver for FlowFiles {
    fn on_report(&mut self, r: &EnergyReport) -> std::io::Result<()> {
        self.report(r)
    }
    fn on_snapshot(&mut self, state: &ElState) -> std::io::Result<()> {
        let dir = self.snap_dir.join(format!("director_{:06}.nfld", state.step));
        Snapshot::from_vec3(&state.u, state.t)
            .save(dir)
            .map_err(std::io::Error::other)?;
        let vel = self.snap_dir.join(format!("velocity_{:06}.nfld", state.step));
        Snapshot::from_vec2(&state.v, state.t)
            .save(vel)
            .map_err(std::io::Error::other)
    }
}

fn write_events(out: &Path, events: &[nematic::diagnostics::SingularEvent]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(out.join("events.tsv"))?);
    ledger::write_events(&mut w, events)?;
    w.flush()?;
    Ok(())
}

fn finish_run(
    out: &Path,
    events: &[nematic::diagnostics::SingularEvent],
    abort: Option<&flow::AbortInfo>,
    quiet: bool,
    last: Option<&EnergyReport>,
) -> Result<(), CliError> {
    write_events(out, events)?;
    if !quiet {
        if let Some(r) = last {
            println!(
                "final: t = {:.6}, e_total = {:.6e}, residual = {:+.3e}, events = {}",
                r.time,
                r.e_total,
                r.residual,
                events.len()
            );
        }
    }
    if let Some(a) = abort {
        return Err(CliError::Abort(format!("aborted at t = {:.6}: {}", a.t, a.message)));
    }
    Ok(())
}

fn cmd_flow(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load_config(args, RunMode::Flow)?;
    let flow_cfg = cfg.flow_config()?;
    let u0 = init::director(flow_cfg.grid, &cfg.director_init(), cfg.seed)?;
    prepare_out(&args.out, &cfg, flow_cfg.snapshot_stride > 0)?;
    let mut obs = FlowFiles::new(&args.out, LedgerMode::Flow, args.quiet)?;
    let out = flow::run(&flow_cfg, &cfg.detector(), u0, &mut obs)?;
    obs.ledger.flush()?;
    Snapshot::from_vec3(&out.state.u, out.state.t).save(args.out.join("final_director.nfld"))?;
    finish_run(&args.out, &out.events, out.abort.as_ref(), args.quiet, out.reports.last())
}

fn cmd_el(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load_config(args, RunMode::Coupled)?;
    let grid = cfg.grid()?;
    let u0 = init::director(grid, &cfg.director_init(), cfg.seed)?;
    let v0 = init::velocity(grid, &cfg.velocity_init(), cfg.seed)?;
    let el_cfg = cfg.el_config(v0.max_abs())?;
    prepare_out(&args.out, &cfg, el_cfg.snapshot_stride > 0)?;
    let mut obs = FlowFiles::new(&args.out, LedgerMode::Coupled, args.quiet)?;
    let out = leslie::run(&el_cfg, &cfg.detector(), u0, v0, &mut obs)?;
    obs.ledger.flush()?;
    Snapshot::from_vec3(&out.state.u, out.state.t).save(args.out.join("final_director.nfld"))?;
    Snapshot::from_vec2(&out.state.v, out.state.t).save(args.out.join("final_velocity.nfld"))?;
    finish_run(&args.out, &out.events, out.abort.as_ref(), args.quiet, out.reports.last())
}

fn cmd_gl_study(args: &RunArgs) -> Result<(), CliError> {
    let base = load_config(args, RunMode::Flow)?;
    prepare_out(&args.out, &base, false)?;
    let mut summary = BufWriter::new(File::create(args.out.join("summary.tsv"))?);
    writeln!(
        summary,
        "epsilon\te_total\tw_integral\tgl_penalty\tnorm_deviation\tmin_norm\tmax_norm\tresidual"
    )?;
    for &eps in &base.epsilons {
        let mut cfg = base.clone();
        cfg.relax = RelaxKind::GinzburgLandau;
        cfg.epsilon = eps;
        let flow_cfg = cfg.flow_config()?;
        let sub = args.out.join(format!("eps_{eps}"));
        let u0 = init::director(flow_cfg.grid, &cfg.director_init(), cfg.seed)?;
        prepare_out(&sub, &cfg, flow_cfg.snapshot_stride > 0)?;
        let mut obs = FlowFiles::new(&sub, LedgerMode::Flow, true)?;
        if !args.quiet {
            println!("epsilon = {eps}: integrating to t = {} ...", flow_cfg.t_end);
        }
        let out = flow::run(&flow_cfg, &cfg.detector(), u0, &mut obs)?;
        obs.ledger.flush()?;
        Snapshot::from_vec3(&out.state.u, out.state.t).save(sub.join("final_director.nfld"))?;
        write_events(&sub, &out.events)?;
        if let Some(a) = &out.abort {
            return Err(CliError::Abort(format!(
                "epsilon = {eps} aborted at t = {:.6}: {}",
                a.t, a.message
            )));
        }
        let r = out.reports.last().expect("runs always report");
        // The logged penalty is (1/(4 eps^2)) Int (1-|u|^2)^2; undo the
        // prefactor to report the plain L2 deviation of the norm.
        let deviation = (4.0 * eps * eps * r.gl_penalty).sqrt();
        writeln!(
            summary,
            "{eps}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.e_total, r.w_integral, r.gl_penalty, deviation, r.min_norm, r.max_norm, r.residual
        )?;
        if !args.quiet {
            println!("epsilon = {eps}: ||1 - |u|^2|| = {deviation:.6e}");
        }
    }
    summary.flush()?;
    Ok(())
}
