//! Batch front end: `bound`, `sweep` and `audit`.
//!
//! Exit codes: 0 success, 1 runtime or I/O error, 2 config or hypothesis
//! error, 3 audit failure.

pub mod config;
pub mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{load_config, parse_config, ConfigFile, Overrides, ResolvedConfig, DEFAULT_SEED};
pub use report::{read_report_csv, write_report_csv, ReportRow, SweepSummary, REPORT_COLUMNS};

use crate::chaining::{hypothesis_check, ChainingBound, TailBoundReport};
use crate::error::{Error, Result};
use crate::metric::{IndexSpace, PartitionFamily};
use crate::montecarlo::{moment_audit, run_sweep, theory_applies, ModelSpec, MomentAuditRow, SupExperimentResult};
use crate::processes::{kernel_hoelder_audit, HoelderAudit};

#[derive(Debug, Parser)]
#[command(name = "chaining-lab", version, about = "Chaining tail bounds and Monte Carlo checks for Lévy-driven fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the tail bound per eps, no simulation.
    Bound(CommonArgs),
    /// Run the eps sweep: CSV of report rows plus a JSON summary.
    Sweep(CommonArgs),
    /// Kernel Hölder audit and Monte Carlo increment-moment audit.
    Audit(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML experiment config.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replicates per eps.
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub grid_exponent: Option<u32>,
    /// Output CSV; the sweep summary goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            replicates: self.reps,
            grid_exponent: self.grid_exponent,
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. }
        | Error::Hypothesis(_)
        | Error::InvalidParams(_)
        | Error::DivergentEntropy { .. }
        | Error::Domain(_)
        | Error::Model(_) => 2,
        Error::MisdeclaredKernel { .. } | Error::AuditFailed(_) => 3,
        Error::Runtime(_) | Error::Io(_) => 1,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Bound(args) => run_bound(args),
        Command::Sweep(args) => run_sweep_cmd(args),
        Command::Audit(args) => run_audit(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn partition_family(cfg: &ResolvedConfig) -> Result<PartitionFamily> {
    PartitionFamily::with_anchor(&IndexSpace::unit_interval(), cfg.experiment.n_max, cfg.experiment.t0)
}

/// Fails unless the parameters pass every hypothesis check and, for each
/// eps, the model's increment modulus has the form the bound needs.
fn require_hypotheses(cfg: &ResolvedConfig, family: &PartitionFamily, check_models: bool) -> Result<()> {
    let exp = &cfg.experiment;
    let report = hypothesis_check(&exp.params, family);
    if !report.all_passed() {
        let msg: Vec<String> = report.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        return Err(Error::Hypothesis(msg.join("; ")));
    }
    if check_models {
        for &eps in &exp.eps_list {
            let model = exp.model.at_eps(eps, exp.t0)?;
            if !theory_applies(&exp.params, &model) {
                let m = model.modulus();
                return Err(Error::Hypothesis(format!(
                    "at eps = {eps} the increment modulus has alpha = {} and the bound needs beta = 2 with alpha >= params.alpha = {} (beta = {})",
                    m.alpha, exp.params.alpha, exp.params.beta
                )));
            }
        }
    }
    Ok(())
}

/// Tail bound per eps; uses the `[[bound.rows]]` inputs when given.
pub fn bound_reports(cfg: &ResolvedConfig) -> Result<Vec<(Option<f64>, TailBoundReport)>> {
    let family = partition_family(cfg)?;
    let explicit = !cfg.bound_rows.is_empty();
    require_hypotheses(cfg, &family, !explicit)?;
    let bound = ChainingBound::new(&cfg.experiment.params, &family)?;
    if explicit {
        return cfg
            .bound_rows
            .iter()
            .map(|r| Ok((r.eps, bound.evaluate(r.b_eps, r.var_t0)?)))
            .collect();
    }
    let exp = &cfg.experiment;
    exp.eps_list
        .iter()
        .map(|&eps| {
            let model = exp.model.at_eps(eps, exp.t0)?;
            Ok((Some(eps), bound.evaluate(model.modulus().b_eps, model.var_t0(exp.t0))?))
        })
        .collect()
}

fn run_bound(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(&args.config, args.overrides())?;
    let rows = bound_reports(&cfg)?;
    match args.out.as_ref().or(cfg.output.csv.as_ref()) {
        Some(path) => report::write_bound_csv(create(path)?, &rows),
        None => report::write_bound_csv(io::stdout().lock(), &rows),
    }
}

/// Validates hypotheses (unless exploratory) and runs the sweep.
pub fn sweep(cfg: &ResolvedConfig) -> Result<SupExperimentResult> {
    let exp = &cfg.experiment;
    let family = partition_family(cfg)?;
    match exp.model {
        // the indicator is the counterexample: it always runs, without a theory bound
        ModelSpec::Indicator => {
            for &eps in &exp.eps_list {
                exp.model.at_eps(eps, exp.t0)?;
            }
        }
        ModelSpec::Cpp { .. } => {
            if cfg.exploratory {
                for &eps in &exp.eps_list {
                    exp.model.at_eps(eps, exp.t0)?;
                }
            } else {
                require_hypotheses(cfg, &family, true)?;
            }
        }
    }
    run_sweep(exp)
}

fn run_sweep_cmd(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(&args.config, args.overrides())?;
    let (csv_path, json_path) = match (&args.out, &cfg.output.csv) {
        (Some(out), _) => (Some(out.clone()), Some(out.with_extension("json"))),
        (None, Some(csv)) => (Some(csv.clone()), Some(cfg.output.json.clone().unwrap_or_else(|| csv.with_extension("json")))),
        (None, None) => (None, cfg.output.json.clone()),
    };
    // open outputs before spending minutes on the simulation
    let csv_out = csv_path.as_deref().map(create).transpose()?;
    let json_out = json_path.as_deref().map(create).transpose()?;

    let result = sweep(&cfg)?;
    let rows: Vec<ReportRow> = result.rows.iter().map(|r| ReportRow::from_sweep(r, result.seed)).collect();
    let summary = SweepSummary::new(&result);
    match csv_out {
        Some(w) => write_report_csv(w, &rows)?,
        None => write_report_csv(io::stdout().lock(), &rows)?,
    }
    match json_out {
        Some(w) => report::write_summary_json(w, &summary)?,
        None => report::write_summary_json(io::stderr().lock(), &summary)?,
    }
    if csv_path.is_some() {
        for row in &result.rows {
            eprintln!("eps = {}: {:.3} s", row.eps, row.runtime.as_secs_f64());
        }
        eprintln!("pass: {}", summary.pass);
    }
    Ok(())
}

/// Kernel audit (cpp only) and moment audit at the configured audit eps.
pub fn audit(cfg: &ResolvedConfig) -> Result<(Option<HoelderAudit>, Vec<MomentAuditRow>)> {
    let kernel_audit = match cfg.experiment.model {
        ModelSpec::Cpp { kernel, .. } => Some(kernel_hoelder_audit(&kernel, cfg.audit_kernel_samples)?),
        ModelSpec::Indicator => None,
    };
    let mut exp = cfg.experiment.clone();
    exp.replicates = cfg.audit_replicates;
    let moments = moment_audit(&exp, cfg.audit_eps, &cfg.audit_pairs)?;
    Ok((kernel_audit, moments))
}

/// Turns audit tables into an error naming the worst offender.
pub fn audit_verdict(kernel: Option<&HoelderAudit>, moments: &[MomentAuditRow]) -> Result<()> {
    if let Some(k) = kernel {
        k.check()?;
    }
    let worst = moments
        .iter()
        .filter(|r| r.violation)
        .max_by(|a, b| {
            let z = |r: &MomentAuditRow| (r.mc_moment - r.bound) / r.stderr.max(f64::MIN_POSITIVE);
            z(a).total_cmp(&z(b))
        });
    match worst {
        Some(r) => Err(Error::AuditFailed(format!(
            "increment moment {} at (s, t) = ({}, {}) exceeds bound {} by more than 4 stderr (stderr {})",
            r.mc_moment, r.s, r.t, r.bound, r.stderr
        ))),
        None => Ok(()),
    }
}

fn run_audit(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(&args.config, args.overrides())?;
    let out = args.out.as_ref().or(cfg.output.csv.as_ref());
    let writers = match out {
        Some(path) => {
            let kernel_path = path.with_extension("kernel.csv");
            Some((create(path)?, create(&kernel_path)?))
        }
        None => None,
    };
    let (kernel, moments) = audit(&cfg)?;
    match writers {
        Some((m, k)) => {
            report::write_moment_audit_csv(m, cfg.audit_eps, &moments)?;
            report::write_kernel_audit_csv(k, kernel.as_ref())?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            report::write_kernel_audit_csv(&mut stdout, kernel.as_ref())?;
            writeln!(stdout)?;
            report::write_moment_audit_csv(&mut stdout, cfg.audit_eps, &moments)?;
        }
    }
    audit_verdict(kernel.as_ref(), &moments)
}
