//! Echo detection, retrieval efficiency, decay fits and phase checks.
//!
//! The mirror rule: a frozen-shift rephasing segment spanning [c0, c1]
//! maps a feature written at time t to an echo at c1 + (c0 - t), i.e.
//! the reflection through the segment as if it had zero duration. All
//! expected echo positions below come from that rule.

use crate::model::ResolvedSequence;
use crate::propagate::TimeTrace;
use serde::Serialize;

/// Efficiencies above this are reported as cross-write contamination:
/// a later data pulse writing detuning-structured amplitude that lands
/// on an earlier bit's mirror point.
pub const CONTAMINATION_LIMIT: f64 = 1.02;

/// Minimum |S| for a peak to count as an echo.
pub const DETECTION_FLOOR: f64 = 1e-4;

/// Half-width of the normalized echo window used for shape comparison.
pub const SHAPE_HALF_WIDTH_US: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("sequence has no '{0}' marker")]
    MissingMarker(String),
    #[error("no samples inside the window around t = {0} us")]
    EmptyWindow(f64),
    #[error("exponential fit needs at least two positive samples, got {0}")]
    TooFewSamples(usize),
    #[error("signal does not decay; log-linear fit has slope {0}")]
    NotDecaying(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitWindow {
    pub label: String,
    pub start_us: f64,
    pub end_us: f64,
}

impl BitWindow {
    pub fn center_us(&self) -> f64 {
        0.5 * (self.start_us + self.end_us)
    }

    pub fn duration_us(&self) -> f64 {
        self.end_us - self.start_us
    }
}

/// Data windows from `bit_*` / `bit_*_end` marker pairs, in time order.
pub fn bit_windows(seq: &ResolvedSequence) -> Vec<BitWindow> {
    let mut out: Vec<BitWindow> = seq
        .markers
        .iter()
        .filter(|(name, _)| name.starts_with("bit_") && !name.ends_with("_end"))
        .filter_map(|(name, start)| {
            seq.marker(&format!("{name}_end")).map(|end| BitWindow {
                label: name.clone(),
                start_us: *start,
                end_us: end,
            })
        })
        .collect();
    out.sort_by(|a, b| a.start_us.total_cmp(&b.start_us));
    out
}

/// The [c0, c1] span of the rephasing, from the `rephase` marker to
/// `rephase_end`. For the locking chain this covers everything from the
/// first half flip to the end of the readout pulse.
pub fn rephase_span(seq: &ResolvedSequence) -> Result<(f64, f64), AnalysisError> {
    let c0 = seq
        .marker("rephase")
        .ok_or_else(|| AnalysisError::MissingMarker("rephase".into()))?;
    let c1 = seq
        .marker("rephase_end")
        .ok_or_else(|| AnalysisError::MissingMarker("rephase_end".into()))?;
    Ok((c0, c1))
}

pub fn mirror_time(c0: f64, c1: f64, t_us: f64) -> f64 {
    c1 + (c0 - t_us)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencyMetric {
    /// |S| at the bit end's mirror point over |S| at the bit end. The
    /// default: immune to echo-shape changes and exactly 1 for lossless
    /// uncontaminated storage.
    #[default]
    MirrorPoint,
    /// Peak |S| near the expected echo over |S| at the bit end. Reads
    /// above 1 even without contamination because the echo peak sits at
    /// the mirror of the bit center, where more of the bit has
    /// accumulated than at its end.
    PeakOverBitEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub metric: EfficiencyMetric,
    pub floor: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            metric: EfficiencyMetric::MirrorPoint,
            floor: DETECTION_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EchoPeak {
    pub label: String,
    pub bit_center_us: f64,
    pub bit_end_us: f64,
    pub expected_us: f64,
    pub time_us: f64,
    pub amplitude: f64,
    pub efficiency: f64,
    pub contaminated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EchoReport {
    pub echoes: Vec<EchoPeak>,
    /// Echoes replay last-in-first-out relative to the write order.
    pub time_reversed: bool,
}

fn nearest(times: &[f64], t: f64) -> usize {
    let mut best = 0;
    let mut dist = f64::INFINITY;
    for (k, tk) in times.iter().enumerate() {
        let d = (tk - t).abs();
        if d < dist {
            dist = d;
            best = k;
        }
    }
    best
}

fn peak_in(times: &[f64], signal: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    times
        .iter()
        .zip(signal)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, s)| (*t, *s))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

pub fn retrieval_efficiency(
    times: &[f64],
    abs_signal: &[f64],
    bit: &BitWindow,
    c0: f64,
    c1: f64,
    metric: EfficiencyMetric,
) -> f64 {
    let reference = abs_signal[nearest(times, bit.end_us)];
    let retrieved = match metric {
        EfficiencyMetric::MirrorPoint => abs_signal[nearest(times, mirror_time(c0, c1, bit.end_us))],
        EfficiencyMetric::PeakOverBitEnd => {
            let expected = mirror_time(c0, c1, bit.center_us());
            let half = bit.duration_us() / 2.0 + SHAPE_HALF_WIDTH_US;
            peak_in(times, abs_signal, expected - half, expected + half)
                .map(|(_, s)| s)
                .unwrap_or(0.0)
        }
    };
    retrieved / reference
}

/// Search each bit's mirror window for an echo. A bit contributes a peak
/// when the maximum clears `floor` and lands within half the bit
/// duration of the expected mirror time.
pub fn echo_report(
    times: &[f64],
    abs_signal: &[f64],
    seq: &ResolvedSequence,
    cfg: &AnalysisConfig,
) -> Result<EchoReport, AnalysisError> {
    let (c0, c1) = rephase_span(seq)?;
    let bits = bit_windows(seq);
    let mut echoes = Vec::new();
    for bit in &bits {
        let expected = mirror_time(c0, c1, bit.center_us());
        if expected <= c1 {
            continue;
        }
        let tol = bit.duration_us() / 2.0;
        let search = tol + SHAPE_HALF_WIDTH_US;
        let Some((t_peak, amp)) = peak_in(times, abs_signal, expected - search, expected + search)
        else {
            return Err(AnalysisError::EmptyWindow(expected));
        };
        if amp < cfg.floor || (t_peak - expected).abs() > tol {
            continue;
        }
        let efficiency = retrieval_efficiency(times, abs_signal, bit, c0, c1, cfg.metric);
        echoes.push(EchoPeak {
            label: bit.label.clone(),
            bit_center_us: bit.center_us(),
            bit_end_us: bit.end_us,
            expected_us: expected,
            time_us: t_peak,
            amplitude: amp,
            efficiency,
            contaminated: !(0.0..=CONTAMINATION_LIMIT).contains(&efficiency),
        });
    }
    // bits are in write order; reversed means the latest-written bit
    // echoes first
    let time_reversed = echoes.len() > 1
        && echoes
            .windows(2)
            .all(|pair| pair[1].time_us < pair[0].time_us);
    Ok(EchoReport {
        echoes,
        time_reversed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub amplitude: f64,
    pub tau_us: f64,
    pub r_squared: f64,
}

/// Least squares on ln(y) against x: y = amplitude * exp(-x / tau_us).
pub fn fit_exponential(x_us: &[f64], y: &[f64]) -> Result<FitResult, AnalysisError> {
    let points: Vec<(f64, f64)> = x_us
        .iter()
        .zip(y)
        .filter(|(_, y)| **y > 0.0)
        .map(|(x, y)| (*x, y.ln()))
        .collect();
    if points.len() < 2 {
        return Err(AnalysisError::TooFewSamples(points.len()));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|(x, _)| x).sum();
    let sy: f64 = points.iter().map(|(_, y)| y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    if slope >= 0.0 {
        return Err(AnalysisError::NotDecaying(slope));
    }
    let mean = sy / n;
    let ss_res: f64 = points
        .iter()
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|(_, y)| (y - mean).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(FitResult {
        amplitude: intercept.exp(),
        tau_us: -1.0 / slope,
        r_squared,
    })
}

/// Whole bits that fit into one decay time.
pub fn storage_capacity(tau_us: f64, bit_duration_us: f64) -> (u64, Option<String>) {
    if tau_us <= 0.0 || bit_duration_us <= 0.0 {
        return (0, Some("storage time and bit duration must be positive".into()));
    }
    let capacity = (tau_us / bit_duration_us).floor() as u64;
    if capacity == 0 {
        (
            0,
            Some(format!(
                "a {bit_duration_us} us bit outlasts the {tau_us} us storage time"
            )),
        )
    } else {
        (capacity, None)
    }
}

/// Peak-normalized echo profile on times relative to the peak.
pub fn echo_window(
    times: &[f64],
    abs_signal: &[f64],
    expected_us: f64,
    search_half_us: f64,
) -> Result<(Vec<f64>, Vec<f64>), AnalysisError> {
    let (t_peak, amp) = peak_in(
        times,
        abs_signal,
        expected_us - search_half_us,
        expected_us + search_half_us,
    )
    .ok_or(AnalysisError::EmptyWindow(expected_us))?;
    if amp <= 0.0 {
        return Err(AnalysisError::EmptyWindow(expected_us));
    }
    let mut rel = Vec::new();
    let mut norm = Vec::new();
    for (t, s) in times.iter().zip(abs_signal) {
        if (t - t_peak).abs() <= SHAPE_HALF_WIDTH_US {
            rel.push(t - t_peak);
            norm.push(s / amp);
        }
    }
    Ok((rel, norm))
}

/// Max pointwise deviation between two normalized echo profiles sampled
/// on the same relative grid.
pub fn shape_similarity(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)) -> f64 {
    let n = a.1.len().min(b.1.len());
    (0..n)
        .map(|k| (a.1[k] - b.1[k]).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseReport {
    /// |Re rho12(after) - Re rho12(before)| for the +delta member.
    pub re_recovery_err: f64,
    /// |Im rho12(after) + Im rho12(before)| for the +delta member.
    pub im_reversal_err: f64,
    /// |Im rho12(after) - Im rho12(before)| for the +delta member.
    pub im_recovery_err: f64,
    /// |Im rho12(+delta, after) - Im rho12(-delta, before)|: the
    /// rephasing exchanges the two halves of the detuning distribution.
    pub swap_err: f64,
}

pub fn phase_diagnostics(
    plus: &TimeTrace,
    minus: &TimeTrace,
    t_before_us: f64,
    t_after_us: f64,
) -> PhaseReport {
    let before = plus.rho12_at(t_before_us);
    let after = plus.rho12_at(t_after_us);
    let before_minus = minus.rho12_at(t_before_us);
    PhaseReport {
        re_recovery_err: (after.re - before.re).abs(),
        im_reversal_err: (after.im + before.im).abs(),
        im_recovery_err: (after.im - before.im).abs(),
        swap_err: (after.im - before_minus.im).abs(),
    }
}
