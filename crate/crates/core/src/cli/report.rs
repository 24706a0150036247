//! CSV and JSON output. Floats are written with 17 significant digits so
//! parsing a table gives back the exact values.

use std::io::Write;

use serde::Serialize;

use crate::chaining::TailBoundReport;
use crate::error::{Error, Result};
use crate::montecarlo::{MomentAuditRow, SupExperimentResult, SweepCheck, SweepRow};
use crate::processes::{HoelderAudit, KernelFamily};

pub const REPORT_COLUMNS: [&str; 11] = [
    "eps",
    "b_eps",
    "var_t0",
    "entropy_sum",
    "constant_C",
    "theory_bound",
    "empirical_prob",
    "ci_low",
    "ci_high",
    "replicates",
    "seed",
];

pub const BOUND_COLUMNS: [&str; 10] = [
    "eps",
    "b_eps",
    "var_t0",
    "entropy_sum",
    "constant_C",
    "chain_raw",
    "chain_bound",
    "center_bound",
    "total_bound",
    "theory_bound",
];

pub const MOMENT_AUDIT_COLUMNS: [&str; 8] = ["eps", "s", "t", "mc_moment", "stderr", "bound", "exact", "violation"];

pub const KERNEL_AUDIT_COLUMNS: [&str; 9] = [
    "family",
    "alpha",
    "c_omega_bar",
    "samples",
    "worst_ratio",
    "worst_s",
    "worst_t",
    "worst_omega",
    "passed",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str, column: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Runtime(format!("column {column}: cannot parse {field:?} as a float")))
}

fn parse_u64(field: &str, column: &str) -> Result<u64> {
    field
        .parse()
        .map_err(|_| Error::Runtime(format!("column {column}: cannot parse {field:?} as an integer")))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Runtime(format!("csv: {other:?}")),
    }
}

/// One sweep row as written to the CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportRow {
    pub eps: f64,
    pub b_eps: f64,
    pub var_t0: f64,
    pub entropy_sum: f64,
    pub constant_c: f64,
    pub theory_bound: f64,
    pub empirical_prob: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: u64,
    pub seed: u64,
}

impl ReportRow {
    pub fn from_sweep(row: &SweepRow, seed: u64) -> Self {
        ReportRow {
            eps: row.eps,
            b_eps: row.b_eps,
            var_t0: row.var_t0,
            entropy_sum: row.entropy_sum,
            constant_c: row.constant,
            theory_bound: row.theory_bound,
            empirical_prob: row.estimate.prob,
            ci_low: row.estimate.ci_low,
            ci_high: row.estimate.ci_high,
            replicates: row.estimate.replicates,
            seed,
        }
    }

    pub fn to_record(&self) -> Vec<String> {
        let mut out: Vec<String> = [
            self.eps,
            self.b_eps,
            self.var_t0,
            self.entropy_sum,
            self.constant_c,
            self.theory_bound,
            self.empirical_prob,
            self.ci_low,
            self.ci_high,
        ]
        .iter()
        .map(|&x| fmt_f64(x))
        .collect();
        out.push(self.replicates.to_string());
        out.push(self.seed.to_string());
        out
    }

    pub fn from_record(record: &csv::StringRecord) -> Result<Self> {
        if record.len() != REPORT_COLUMNS.len() {
            return Err(Error::Runtime(format!(
                "expected {} columns, found {}",
                REPORT_COLUMNS.len(),
                record.len()
            )));
        }
        let f = |i: usize| parse_f64(&record[i], REPORT_COLUMNS[i]);
        Ok(ReportRow {
            eps: f(0)?,
            b_eps: f(1)?,
            var_t0: f(2)?,
            entropy_sum: f(3)?,
            constant_c: f(4)?,
            theory_bound: f(5)?,
            empirical_prob: f(6)?,
            ci_low: f(7)?,
            ci_high: f(8)?,
            replicates: parse_u64(&record[9], REPORT_COLUMNS[9])?,
            seed: parse_u64(&record[10], REPORT_COLUMNS[10])?,
        })
    }
}

pub fn write_report_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.to_record()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a sweep CSV, checking the header.
pub fn read_report_csv<R: std::io::Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(REPORT_COLUMNS.iter().copied()) {
        return Err(Error::Runtime(format!("unexpected header {header:?}")));
    }
    r.records()
        .map(|rec| ReportRow::from_record(&rec.map_err(csv_err)?))
        .collect()
}

/// The JSON summary written next to a sweep CSV.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary<'a> {
    pub pass: bool,
    pub checks: Vec<SweepCheck>,
    pub theory_applicable: bool,
    pub model: &'a crate::montecarlo::ModelSpec,
    pub params: &'a crate::chaining::ChainingParams,
    pub sup_mode: crate::montecarlo::SupMode,
    pub seed: u64,
    pub grid_exponent: u32,
    pub rows: Vec<ReportRow>,
}

impl<'a> SweepSummary<'a> {
    pub fn new(result: &'a SupExperimentResult) -> Self {
        SweepSummary {
            pass: result.passed(),
            checks: result.checks(),
            theory_applicable: result.theory_applicable(),
            model: &result.model,
            params: &result.params,
            sup_mode: result.sup_mode,
            seed: result.seed,
            grid_exponent: result.grid_exponent,
            rows: result.rows.iter().map(|r| ReportRow::from_sweep(r, result.seed)).collect(),
        }
    }
}

pub fn write_summary_json<W: Write>(mut out: W, summary: &SweepSummary<'_>) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, summary).map_err(|e| Error::Runtime(format!("json: {e}")))?;
    writeln!(out)?;
    Ok(())
}

/// Rows of the `bound` command: every field of the report plus the
/// bound the command reports, `total_bound`.
pub fn write_bound_csv<W: Write>(out: W, rows: &[(Option<f64>, TailBoundReport)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BOUND_COLUMNS).map_err(csv_err)?;
    for (eps, r) in rows {
        let mut rec = vec![eps.map(fmt_f64).unwrap_or_default()];
        rec.extend(
            [
                r.b_eps,
                r.var_t0,
                r.entropy_sum,
                r.constant,
                r.chain_raw,
                r.chain_bound,
                r.center_bound,
                r.total_bound,
                r.total_bound,
            ]
            .iter()
            .map(|&x| fmt_f64(x)),
        );
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_moment_audit_csv<W: Write>(out: W, eps: f64, rows: &[MomentAuditRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MOMENT_AUDIT_COLUMNS).map_err(csv_err)?;
    for r in rows {
        let mut rec: Vec<String> = [eps, r.s, r.t, r.mc_moment, r.stderr, r.bound, r.exact]
            .iter()
            .map(|&x| fmt_f64(x))
            .collect();
        rec.push(r.violation.to_string());
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn family_name(family: &KernelFamily) -> String {
    match family {
        KernelFamily::Linear => "linear".into(),
        KernelFamily::Sinusoid => "sinusoid".into(),
        KernelFamily::Hoelder { p } => format!("hoelder(p={p})"),
    }
}

pub fn write_kernel_audit_csv<W: Write>(out: W, audit: Option<&HoelderAudit>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(KERNEL_AUDIT_COLUMNS).map_err(csv_err)?;
    if let Some(a) = audit {
        let mut rec = vec![family_name(&a.kernel.family)];
        rec.push(fmt_f64(a.kernel.alpha));
        rec.push(fmt_f64(a.kernel.c_omega_bar));
        rec.push(a.samples.to_string());
        rec.extend([a.worst_ratio, a.worst_s, a.worst_t, a.worst_omega].iter().map(|&x| fmt_f64(x)));
        rec.push(a.passed().to_string());
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
