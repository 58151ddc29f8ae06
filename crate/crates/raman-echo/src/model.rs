//! Domain types: level systems, pulse segments, sequences, ensembles,
//! and validation. Levels are indexed 0..n internally; user-facing text
//! (DSL, JSON, diagnostics) uses the 1-based labels |1>..|4>.

use crate::units::to_angular;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub const MAX_LEVELS: usize = 4;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("area-specified segment has no active field")]
    AreaWithoutField,
    #[error("segment resolves to non-positive duration {0} us")]
    NonPositiveDuration(f64),
    #[error("field {field} drives |{lower}>-|{upper}> but the system has {levels} levels")]
    FieldDimension {
        field: FieldId,
        lower: usize,
        upper: usize,
        levels: usize,
    },
    #[error("gamma override indices ({0},{1}) out of range or equal")]
    BadOverride(usize, usize),
    #[error("validation failed: {0}")]
    Invalid(String),
    #[error("config: {0}")]
    Config(String),
}

/// Field identity. Each drives one fixed transition of the level scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldId {
    Probe,
    Coupling,
    Aux,
}

impl FieldId {
    pub fn name(self) -> &'static str {
        match self {
            FieldId::Probe => "probe",
            FieldId::Coupling => "coupling",
            FieldId::Aux => "aux",
        }
    }

    pub fn from_name(s: &str) -> Option<FieldId> {
        match s {
            "probe" => Some(FieldId::Probe),
            "coupling" => Some(FieldId::Coupling),
            "aux" => Some(FieldId::Aux),
            _ => None,
        }
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One optical transition |lower> <-> |upper>, driven by a named field.
/// Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub field: FieldId,
    pub lower: usize,
    pub upper: usize,
}

/// Level scheme with phenomenological relaxation.
///
/// `big_gamma[[i, j]]` is the population transfer rate |i> -> |j> in kHz.
/// `gamma[[i, j]]` is the symmetric coherence dephasing linewidth in kHz.
/// `shift_target` names the level whose energy carries the per-member
/// inhomogeneous shift delta (level 1 for spin broadening, level 2 for
/// optical broadening, 0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSystem {
    pub n_levels: usize,
    pub transitions: Vec<Transition>,
    pub big_gamma: ndarray::Array2<f64>,
    pub gamma: ndarray::Array2<f64>,
    pub shift_target: usize,
}

impl LevelSystem {
    /// Lambda scheme: Gamma31 = Gamma32 = 0.5 (gamma31 = gamma32 = 25),
    /// Gamma21 = 0, spin shift on |2>. `gamma21_khz` defaults to 1.
    pub fn three_level(gamma21_khz: f64) -> LevelSystem {
        let mut big_gamma = ndarray::Array2::zeros((3, 3));
        big_gamma[[2, 0]] = 0.5;
        big_gamma[[2, 1]] = 0.5;
        let mut gamma = ndarray::Array2::zeros((3, 3));
        set_sym(&mut gamma, 2, 0, 25.0);
        set_sym(&mut gamma, 2, 1, 25.0);
        set_sym(&mut gamma, 1, 0, gamma21_khz);
        LevelSystem {
            n_levels: 3,
            transitions: vec![
                Transition {
                    field: FieldId::Probe,
                    lower: 0,
                    upper: 2,
                },
                Transition {
                    field: FieldId::Coupling,
                    lower: 1,
                    upper: 2,
                },
            ],
            big_gamma,
            gamma,
            shift_target: 1,
        }
    }

    /// Two-level reduction for photon-echo control runs: only |1>-|3> is
    /// active (Gamma31 = 0.5, gamma31 = 2.5), the shift sits on |3>.
    pub fn photon_echo() -> LevelSystem {
        let mut sys = LevelSystem::three_level(0.0);
        sys.big_gamma[[2, 1]] = 0.0;
        set_sym(&mut sys.gamma, 2, 0, 2.5);
        set_sym(&mut sys.gamma, 2, 1, 0.0);
        sys.shift_target = 2;
        sys
    }

    /// Lambda scheme plus the auxiliary level |4>: Gamma34 = 0.5
    /// (gamma43 = 25), Gamma41 = Gamma42 = 0, gamma41 = gamma42 = 0.
    pub fn four_level(gamma21_khz: f64) -> LevelSystem {
        let three = LevelSystem::three_level(gamma21_khz);
        let mut big_gamma = ndarray::Array2::zeros((4, 4));
        let mut gamma = ndarray::Array2::zeros((4, 4));
        for i in 0..3 {
            for j in 0..3 {
                big_gamma[[i, j]] = three.big_gamma[[i, j]];
                gamma[[i, j]] = three.gamma[[i, j]];
            }
        }
        big_gamma[[2, 3]] = 0.5;
        set_sym(&mut gamma, 3, 2, 25.0);
        let mut transitions = three.transitions;
        transitions.push(Transition {
            field: FieldId::Aux,
            lower: 2,
            upper: 3,
        });
        LevelSystem {
            n_levels: 4,
            transitions,
            big_gamma,
            gamma,
            shift_target: 1,
        }
    }

    pub fn transition_for(&self, field: FieldId) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.field == field)
    }
}

fn set_sym(m: &mut ndarray::Array2<f64>, i: usize, j: usize, v: f64) {
    m[[i, j]] = v;
    m[[j, i]] = v;
}

/// Complex drive of one field during one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldDrive {
    pub amp_khz: f64,
    pub phase_rad: f64,
    pub det_khz: f64,
}

/// Segment length, either literal or by pulse area (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extent {
    DurationUs(f64),
    AreaRad(f64),
}

/// One rectangular pulse: a set of simultaneously active fields.
///
/// `freeze_shift` gates the per-member inhomogeneous shift out of the
/// Hamiltonian for the duration of the segment; rephasing-family pulses
/// and the lock window use it so stored detuning phase is conjugated or
/// held rather than advanced.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSegment {
    pub fields: BTreeMap<FieldId, FieldDrive>,
    pub extent: Extent,
    pub gamma_overrides: Vec<((usize, usize), f64)>,
    pub freeze_shift: bool,
}

impl PulseSegment {
    /// Generalized Rabi frequency sqrt(sum of squared amplitudes), kHz.
    pub fn generalized_rabi_khz(&self) -> f64 {
        self.fields
            .values()
            .map(|d| d.amp_khz * d.amp_khz)
            .sum::<f64>()
            .sqrt()
    }
}

/// Pulse area in radians: generalized Rabi (angular) times duration.
pub fn pulse_area(segment: &PulseSegment) -> Result<f64, ModelError> {
    match segment.extent {
        Extent::AreaRad(a) => {
            if segment.generalized_rabi_khz() == 0.0 {
                Err(ModelError::AreaWithoutField)
            } else {
                Ok(a)
            }
        }
        Extent::DurationUs(d) => Ok(to_angular(segment.generalized_rabi_khz()) * d),
    }
}

/// Sequence statement. Initial populations live on the sequence itself.
#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Pulse(PulseSegment),
    Wait {
        dur_us: f64,
        gamma_overrides: Vec<((usize, usize), f64)>,
        freeze_shift: bool,
    },
    /// Persistent gamma override taking effect for all later segments.
    Set { pair: (usize, usize), value_khz: f64 },
    /// Named marker at the current cursor time.
    Mark(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub initial_populations: [f64; MAX_LEVELS],
    pub stmts: Vec<Stmt>,
}

impl Default for PulseSequence {
    fn default() -> Self {
        PulseSequence {
            initial_populations: [1.0, 0.0, 0.0, 0.0],
            stmts: Vec::new(),
        }
    }
}

/// Convert every area-specified segment to an explicit duration.
/// Idempotent; fails on areas with no active field.
pub fn resolve_durations(seq: &PulseSequence) -> Result<PulseSequence, ModelError> {
    let mut out = seq.clone();
    for stmt in &mut out.stmts {
        if let Stmt::Pulse(seg) = stmt {
            if let Extent::AreaRad(a) = seg.extent {
                let omega = to_angular(seg.generalized_rabi_khz());
                if omega == 0.0 {
                    return Err(ModelError::AreaWithoutField);
                }
                let dur = a / omega;
                if dur <= 0.0 {
                    return Err(ModelError::NonPositiveDuration(dur));
                }
                seg.extent = Extent::DurationUs(dur);
            }
        }
    }
    Ok(out)
}

/// A segment placed on the absolute time axis, with persistent and
/// per-segment overrides merged. Fields empty means free evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSegment {
    pub t0: f64,
    pub t1: f64,
    pub fields: BTreeMap<FieldId, FieldDrive>,
    pub gamma_overrides: Vec<((usize, usize), f64)>,
    pub freeze_shift: bool,
    pub label: Option<String>,
}

impl ResolvedSegment {
    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSequence {
    pub initial_populations: [f64; MAX_LEVELS],
    pub segments: Vec<ResolvedSegment>,
    pub markers: Vec<(String, f64)>,
    pub total_time: f64,
}

impl ResolvedSequence {
    pub fn marker(&self, name: &str) -> Option<f64> {
        self.markers
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| *t)
    }
}

/// Place statements on the time axis. A marker immediately preceding a
/// pulse or wait also becomes that segment's label.
pub fn resolve(seq: &PulseSequence) -> Result<ResolvedSequence, ModelError> {
    let seq = resolve_durations(seq)?;
    let mut persistent: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut segments = Vec::new();
    let mut markers = Vec::new();
    let mut cursor = 0.0f64;
    let mut pending_label: Option<String> = None;
    for stmt in &seq.stmts {
        match stmt {
            Stmt::Mark(name) => {
                markers.push((name.clone(), cursor));
                pending_label = Some(name.clone());
            }
            Stmt::Set { pair, value_khz } => {
                persistent.insert(order_pair(*pair), *value_khz);
                pending_label = None;
            }
            Stmt::Wait {
                dur_us,
                gamma_overrides,
                freeze_shift,
            } => {
                if *dur_us <= 0.0 {
                    return Err(ModelError::NonPositiveDuration(*dur_us));
                }
                segments.push(ResolvedSegment {
                    t0: cursor,
                    t1: cursor + dur_us,
                    fields: BTreeMap::new(),
                    gamma_overrides: merge_overrides(&persistent, gamma_overrides),
                    freeze_shift: *freeze_shift,
                    label: pending_label.take(),
                });
                cursor += dur_us;
            }
            Stmt::Pulse(seg) => {
                let dur = match seg.extent {
                    Extent::DurationUs(d) => d,
                    Extent::AreaRad(_) => unreachable!("durations resolved above"),
                };
                if dur <= 0.0 {
                    return Err(ModelError::NonPositiveDuration(dur));
                }
                segments.push(ResolvedSegment {
                    t0: cursor,
                    t1: cursor + dur,
                    fields: seg.fields.clone(),
                    gamma_overrides: merge_overrides(&persistent, &seg.gamma_overrides),
                    freeze_shift: seg.freeze_shift,
                    label: pending_label.take(),
                });
                cursor += dur;
            }
        }
    }
    Ok(ResolvedSequence {
        initial_populations: seq.initial_populations,
        segments,
        markers,
        total_time: cursor,
    })
}

/// Coherence pairs are stored with the higher level first.
pub fn order_pair((i, j): (usize, usize)) -> (usize, usize) {
    if i >= j {
        (i, j)
    } else {
        (j, i)
    }
}

fn merge_overrides(
    persistent: &BTreeMap<(usize, usize), f64>,
    local: &[((usize, usize), f64)],
) -> Vec<((usize, usize), f64)> {
    let mut merged = persistent.clone();
    for (pair, v) in local {
        merged.insert(order_pair(*pair), *v);
    }
    merged.into_iter().collect()
}

/// Gaussian detuning distribution parameters, kHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub fwhm_khz: f64,
    pub spacing_khz: f64,
    pub truncation_khz: f64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            fwhm_khz: 200.0,
            spacing_khz: 2.0,
            truncation_khz: 250.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues
            .iter()
            .filter(|i| i.severity == Severity::Warning)
    }

    fn error(&mut self, message: String) {
        self.issues.push(Issue {
            severity: Severity::Error,
            message,
        });
    }

    fn warn(&mut self, message: String) {
        self.issues.push(Issue {
            severity: Severity::Warning,
            message,
        });
    }
}

/// Collect every invariant violation across system, sequence, and ensemble.
/// Positivity of the phenomenological model is warned about, not enforced.
pub fn validate(
    system: &LevelSystem,
    sequence: &PulseSequence,
    ensemble: &EnsembleSpec,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = system.n_levels;
    if !(3..=MAX_LEVELS).contains(&n) {
        report.error(format!("level count {n} outside supported 3..4"));
        return report;
    }
    if system.big_gamma.dim() != (n, n) || system.gamma.dim() != (n, n) {
        report.error("rate matrix dimensions do not match level count".into());
        return report;
    }
    for i in 0..n {
        if system.big_gamma[[i, i]] != 0.0 {
            report.error(format!("Gamma{}{} must be zero", i + 1, i + 1));
        }
        for j in 0..n {
            if system.big_gamma[[i, j]] < 0.0 {
                report.error(format!("Gamma{}{} negative", i + 1, j + 1));
            }
            if system.gamma[[i, j]] < 0.0 {
                report.error(format!("gamma{}{} negative", i + 1, j + 1));
            }
            if (system.gamma[[i, j]] - system.gamma[[j, i]]).abs() > 1e-12 {
                report.error(format!("gamma{}{} not symmetric", i + 1, j + 1));
            }
        }
    }
    let mut seen = Vec::new();
    for t in &system.transitions {
        if t.lower == t.upper || t.lower >= n || t.upper >= n {
            report.error(format!(
                "transition {} connects |{}>-|{}> outside the level scheme",
                t.field,
                t.lower + 1,
                t.upper + 1
            ));
        }
        if seen.contains(&t.field) {
            report.error(format!("duplicate field name {}", t.field));
        }
        seen.push(t.field);
    }
    if system.shift_target >= n {
        report.error(format!(
            "shift target |{}> outside the level scheme",
            system.shift_target + 1
        ));
    }

    // positivity risk: coherence decay slower than half the population loss
    for i in 0..n {
        for j in 0..i {
            let out_i: f64 = (0..n).map(|k| to_angular(system.big_gamma[[i, k]])).sum();
            let out_j: f64 = (0..n).map(|k| to_angular(system.big_gamma[[j, k]])).sum();
            let lower = 0.5 * (out_i + out_j);
            if crate::units::to_decay(system.gamma[[i, j]]) + 1e-15 < lower {
                report.warn(format!(
                    "gamma{}{} below the lifetime bound; density matrix may lose positivity",
                    i + 1,
                    j + 1
                ));
            }
        }
    }

    let pops = &sequence.initial_populations;
    let sum: f64 = pops.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        report.error(format!("population normalization: sum is {sum}"));
    }
    if pops.iter().any(|p| *p < 0.0 || *p > 1.0) {
        report.error("initial population outside [0, 1]".into());
    }
    if pops[n..].iter().any(|p| *p != 0.0) {
        report.error("initial population on a level outside the scheme".into());
    }

    let check_overrides = |report: &mut ValidationReport, ovs: &[((usize, usize), f64)]| {
        for ((i, j), v) in ovs {
            if i == j || *i >= n || *j >= n {
                report.error(format!("gamma override ({},{}) out of range", i + 1, j + 1));
            }
            if *v < 0.0 {
                report.error(format!("gamma override ({},{}) negative", i + 1, j + 1));
            }
        }
    };
    for stmt in &sequence.stmts {
        match stmt {
            Stmt::Pulse(seg) => {
                match seg.extent {
                    Extent::DurationUs(d) if d <= 0.0 => {
                        report.error(format!("segment duration {d} us not positive"))
                    }
                    Extent::AreaRad(a) => {
                        if a <= 0.0 {
                            report.error(format!("segment area {a} rad not positive"));
                        }
                        if seg.generalized_rabi_khz() == 0.0 {
                            report.error("area-specified segment has no active field".into());
                        }
                    }
                    _ => {}
                }
                for field in seg.fields.keys() {
                    if system.transition_for(*field).is_none() {
                        report.error(format!(
                            "field {field} has no transition in the {n}-level scheme"
                        ));
                    }
                }
                for drive in seg.fields.values() {
                    if drive.amp_khz < 0.0 {
                        report.error("negative field amplitude".into());
                    }
                }
                check_overrides(&mut report, &seg.gamma_overrides);
            }
            Stmt::Wait {
                dur_us,
                gamma_overrides,
                ..
            } => {
                if *dur_us <= 0.0 {
                    report.error(format!("wait duration {dur_us} us not positive"));
                }
                check_overrides(&mut report, gamma_overrides);
            }
            Stmt::Set { pair, value_khz } => {
                check_overrides(&mut report, &[(*pair, *value_khz)]);
            }
            Stmt::Mark(_) => {}
        }
    }

    if ensemble.spacing_khz <= 0.0 {
        report.error("ensemble spacing must be positive".into());
    }
    if ensemble.fwhm_khz < 0.0 {
        report.error("ensemble FWHM must be non-negative".into());
    }
    if ensemble.truncation_khz < ensemble.fwhm_khz {
        report.error("ensemble truncation below the FWHM".into());
    }
    report
}

// JSON configuration document.

#[derive(Debug, Serialize, Deserialize)]
pub struct ConfigFile {
    pub levels: usize,
    /// (field name, lower, upper) with 1-based level labels.
    pub transitions: Vec<(String, usize, usize)>,
    pub gamma: Vec<Vec<f64>>,
    pub big_gamma: Vec<Vec<f64>>,
    /// 1-based label of the level carrying the member shift.
    pub shift_target: usize,
    pub ensemble: EnsembleSpec,
    pub initial_populations: Vec<f64>,
}

impl ConfigFile {
    pub fn to_parts(&self) -> Result<(LevelSystem, EnsembleSpec, [f64; MAX_LEVELS]), ModelError> {
        let n = self.levels;
        if !(3..=MAX_LEVELS).contains(&n) {
            return Err(ModelError::Config(format!("levels = {n}, expected 3 or 4")));
        }
        let to_matrix = |rows: &Vec<Vec<f64>>, name: &str| -> Result<ndarray::Array2<f64>, ModelError> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(ModelError::Config(format!("{name} must be {n}x{n}")));
            }
            Ok(ndarray::Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
        };
        let gamma = to_matrix(&self.gamma, "gamma")?;
        let big_gamma = to_matrix(&self.big_gamma, "big_gamma")?;
        let mut transitions = Vec::new();
        for (name, lower, upper) in &self.transitions {
            let field = FieldId::from_name(name)
                .ok_or_else(|| ModelError::Config(format!("unknown field name {name:?}")))?;
            if *lower == 0 || *upper == 0 || *lower > n || *upper > n {
                return Err(ModelError::Config(format!(
                    "transition {name} levels ({lower},{upper}) out of range"
                )));
            }
            transitions.push(Transition {
                field,
                lower: lower - 1,
                upper: upper - 1,
            });
        }
        if self.shift_target == 0 || self.shift_target > n {
            return Err(ModelError::Config(format!(
                "shift_target {} out of range",
                self.shift_target
            )));
        }
        if self.initial_populations.len() > MAX_LEVELS {
            return Err(ModelError::Config("too many initial populations".into()));
        }
        let mut pops = [0.0; MAX_LEVELS];
        pops[..self.initial_populations.len()].copy_from_slice(&self.initial_populations);
        let system = LevelSystem {
            n_levels: n,
            transitions,
            big_gamma,
            gamma,
            shift_target: self.shift_target - 1,
        };
        Ok((system, self.ensemble, pops))
    }

    pub fn from_parts(
        system: &LevelSystem,
        ensemble: &EnsembleSpec,
        pops: &[f64; MAX_LEVELS],
    ) -> ConfigFile {
        let n = system.n_levels;
        ConfigFile {
            levels: n,
            transitions: system
                .transitions
                .iter()
                .map(|t| (t.field.name().to_string(), t.lower + 1, t.upper + 1))
                .collect(),
            gamma: (0..n)
                .map(|i| (0..n).map(|j| system.gamma[[i, j]]).collect())
                .collect(),
            big_gamma: (0..n)
                .map(|i| (0..n).map(|j| system.big_gamma[[i, j]]).collect())
                .collect(),
            shift_target: system.shift_target + 1,
            ensemble: *ensemble,
            initial_populations: pops[..n].to_vec(),
        }
    }
}
