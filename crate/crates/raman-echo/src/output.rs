//! Serialization of traces and run summaries.
//!
//! Everything here is byte-reproducible: floats go out as `{:.16e}` (17
//! significant digits, enough to round-trip f64 exactly), and the only
//! non-deterministic quantity, wall time, is excluded from serialized
//! summaries and reported on stderr instead.

use crate::analysis::{EchoReport, FitResult};
use crate::ensemble::EnsembleTrace;
use crate::scenarios::{ScenarioParams, Variant};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io;

pub const CSV_HEADER: &str = "t_us,re_S12,im_S12,abs_S12,re_P13,im_P13,pop1,pop2,pop3,pop4";

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("csv is missing required column '{column}'")]
    MissingColumn { column: String },
    #[error("csv has no data rows")]
    EmptyCsv,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// The pinned 10-column trace table.
pub fn trace_csv(trace: &EnsembleTrace) -> String {
    let mut out = String::with_capacity(trace.times.len() * 64);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for k in 0..trace.times.len() {
        let s = trace.s12[k];
        let p = trace.p13[k];
        let pop = trace.populations[k];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            num(trace.times[k]),
            num(s.re),
            num(s.im),
            num(s.norm()),
            num(p.re),
            num(p.im),
            num(pop[0]),
            num(pop[1]),
            num(pop[2]),
            num(pop[3]),
        ));
    }
    out
}

/// Same table for a single retained ensemble member.
pub fn member_csv(trace: &crate::propagate::TimeTrace) -> String {
    let mut out = String::with_capacity(trace.times.len() * 64);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for k in 0..trace.times.len() {
        let s = trace.rho12[k];
        let p = trace.rho13[k];
        let pop = trace.populations[k];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            num(trace.times[k]),
            num(s.re),
            num(s.im),
            num(s.norm()),
            num(p.re),
            num(p.im),
            num(pop[0]),
            num(pop[1]),
            num(pop[2]),
            num(pop[3]),
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub delay_us: f64,
    pub echo_time_us: f64,
    /// Bit end to echo peak: the storage interval the decay fit runs on.
    pub storage_interval_us: f64,
    pub efficiency: f64,
}

pub fn scan_csv(points: &[ScanPoint]) -> String {
    let mut out = String::from("delay_us,storage_interval_us,efficiency\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            num(p.delay_us),
            num(p.storage_interval_us),
            num(p.efficiency)
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Diagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_defect: f64,
    /// Max entrywise deviation between the exact and RK4 propagators on
    /// a representative member, when cross-validation ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_validation_dev: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub parameters: ScenarioParams,
    pub integrator: String,
    pub dt_us: f64,
    pub sample_interval_us: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub echo_report: Option<EchoReport>,
    /// Mirror-point efficiency per data bit, echo or not.
    pub efficiencies: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub storage_capacity_bits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<Vec<ScanPoint>>,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl RunSummary {
    pub fn new(scenario: Variant, parameters: ScenarioParams) -> RunSummary {
        RunSummary {
            scenario: scenario.tag().to_string(),
            parameters,
            integrator: String::new(),
            dt_us: 0.0,
            sample_interval_us: 0.0,
            echo_report: None,
            efficiencies: BTreeMap::new(),
            fit: None,
            storage_capacity_bits: None,
            scan: None,
            diagnostics: Diagnostics::default(),
            warnings: Vec::new(),
            wall_time_s: 0.0,
        }
    }
}

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.8e}")
    }
}

/// JSON with every float at 17 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, OutputError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

fn column_index(header: &str, name: &str) -> Result<usize, OutputError> {
    header
        .split(',')
        .position(|c| c.trim() == name)
        .ok_or_else(|| OutputError::MissingColumn {
            column: name.to_string(),
        })
}

/// A self-contained gnuplot script: the CSV rows ride along in a
/// datablock, so the script needs no companion files. Panel layout is
/// keyed by scenario: the optical-echo scenario shows the excited-state
/// coherence, everything else shows the spin coherence.
pub fn emit_plot(csv_text: &str, scenario: Variant, png_name: &str) -> Result<String, OutputError> {
    let mut lines = csv_text.lines();
    let header = lines.next().ok_or(OutputError::EmptyCsv)?;
    let body: Vec<&str> = lines.filter(|l| !l.trim().is_empty()).collect();
    if body.is_empty() {
        return Err(OutputError::EmptyCsv);
    }
    let t_col = column_index(header, "t_us")? + 1;
    let mut out = String::new();
    out.push_str("# generated by raman-echo; run with: gnuplot <this file>\n");
    out.push_str("set terminal pngcairo size 960,640\n");
    out.push_str(&format!("set output '{png_name}'\n"));
    out.push_str("set datafile separator ','\n");
    out.push_str("set xlabel 't (us)'\n");
    out.push_str("$DATA << EOD\n");
    for line in &body {
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("EOD\n");
    match scenario {
        Variant::Fig1b => {
            let im_p = column_index(header, "im_P13")? + 1;
            out.push_str("set ylabel 'Im rho13'\n");
            out.push_str(&format!(
                "plot $DATA using {t_col}:{im_p} with lines lw 2 title 'optical coherence'\n"
            ));
        }
        _ => {
            let abs_s = column_index(header, "abs_S12")? + 1;
            let im_s = column_index(header, "im_S12")? + 1;
            out.push_str("set multiplot layout 2,1\n");
            out.push_str("set ylabel '|S12|'\n");
            out.push_str(&format!(
                "plot $DATA using {t_col}:{abs_s} with lines lw 2 title 'spin coherence'\n"
            ));
            out.push_str("set ylabel 'Im S12'\n");
            out.push_str(&format!(
                "plot $DATA using {t_col}:{im_s} with lines lw 2 title 'quadrature'\n"
            ));
            out.push_str("unset multiplot\n");
        }
    }
    Ok(out)
}
