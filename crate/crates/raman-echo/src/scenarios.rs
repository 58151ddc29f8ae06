//! Canned experiment builders.
//!
//! Every builder returns a self-contained [`Scenario`]: level system,
//! marked pulse sequence and ensemble spec. Timing convention shared by
//! all of them: three data windows start at t = 10, 20, 30 us, the
//! rephasing pulse starts at `delay_us`, and the capture window leaves
//! room for every mirror echo plus a 20 us tail.

use crate::model::{
    EnsembleSpec, Extent, FieldDrive, FieldId, LevelSystem, PulseSegment, PulseSequence, Stmt,
};
use crate::units::to_angular;
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const DATA_STARTS_US: [f64; 3] = [10.0, 20.0, 30.0];
pub const DATA_DUR_US: f64 = 3.0;
pub const DATA_AMP_KHZ: f64 = 17.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("rephasing delay {delay_us} us collides with data pulses ending at {data_end_us} us")]
    DelayCollidesWithData { delay_us: f64, data_end_us: f64 },
    #[error("lock time {lock_time_us} us is shorter than the {flip_us} us population flip")]
    LockShorterThanFlip { lock_time_us: f64, flip_us: f64 },
    #[error("invalid scenario parameter: {0}")]
    InvalidParameter(String),
}

/// External scenario tags, also used by the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Fig1a,
    Fig1b,
    Fig1c,
    Fig1d,
    Fig2,
    WeakProbe,
    Custom,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Fig1a,
        Variant::Fig1b,
        Variant::Fig1c,
        Variant::Fig1d,
        Variant::Fig2,
        Variant::WeakProbe,
        Variant::Custom,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Variant::Fig1a => "fig1a",
            Variant::Fig1b => "fig1b",
            Variant::Fig1c => "fig1c",
            Variant::Fig1d => "fig1d",
            Variant::Fig2 => "fig2",
            Variant::WeakProbe => "weak_probe",
            Variant::Custom => "custom",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.tag() == s)
            .ok_or_else(|| format!("unknown scenario '{s}' (expected one of fig1a, fig1b, fig1c, fig1d, fig2, weak_probe, custom)"))
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScenarioParams {
    pub variant: Variant,
    /// Rephasing pulse area in units of pi.
    pub area_pi: f64,
    /// Area of the readout pulse that ends the locked storage, in pi.
    pub final_area_pi: f64,
    /// Start of the rephasing pulse.
    pub delay_us: f64,
    /// Duration of the optically locked hold.
    pub lock_time_us: f64,
    /// Probe amplitude scale for the weak-probe variant.
    pub attenuation: f64,
    pub initial_populations: [f64; 4],
    pub gamma21_khz: f64,
    /// Rabi frequency defining rephasing pulse durations; the two Raman
    /// legs each carry generator / sqrt(2) so their two-photon area
    /// integrates the generator itself.
    pub raman_generator_khz: f64,
    pub retained_deltas_khz: Vec<f64>,
}

impl ScenarioParams {
    pub fn new(variant: Variant) -> ScenarioParams {
        ScenarioParams {
            variant,
            area_pi: if variant == Variant::Fig1b { 1.0 } else { 2.0 },
            final_area_pi: 3.0,
            delay_us: 60.0,
            lock_time_us: 1010.0,
            attenuation: 0.01,
            initial_populations: if variant == Variant::Fig1b {
                [1.0, 0.0, 0.0, 0.0]
            } else {
                [0.5, 0.5, 0.0, 0.0]
            },
            gamma21_khz: 1.0,
            raman_generator_khz: 2500.0,
            retained_deltas_khz: if variant == Variant::Fig1c {
                vec![-10.0, 10.0]
            } else {
                Vec::new()
            },
        }
    }
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams::new(Variant::Fig1a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: LevelSystem,
    pub sequence: PulseSequence,
    pub ensemble: EnsembleSpec,
    pub params: ScenarioParams,
}

fn drive(amp_khz: f64) -> FieldDrive {
    FieldDrive {
        amp_khz,
        det_khz: 0.0,
        phase_rad: 0.0,
    }
}

fn data_pulse(probe_khz: f64, coupling_khz: f64) -> Stmt {
    let mut fields = BTreeMap::new();
    fields.insert(FieldId::Probe, drive(probe_khz));
    fields.insert(FieldId::Coupling, drive(coupling_khz));
    Stmt::Pulse(PulseSegment {
        fields,
        extent: Extent::DurationUs(DATA_DUR_US),
        gamma_overrides: Vec::new(),
        freeze_shift: false,
    })
}

/// Balanced Raman pair carrying a two-photon area of `area_pi` pi at the
/// generator Rabi frequency. Frozen shift: the pulse is treated as
/// instantaneous on the inhomogeneous-dephasing clock.
fn raman_pulse(
    generator_khz: f64,
    area_pi: f64,
    gamma_overrides: Vec<((usize, usize), f64)>,
) -> Stmt {
    let each = generator_khz / std::f64::consts::SQRT_2;
    let mut fields = BTreeMap::new();
    fields.insert(FieldId::Probe, drive(each));
    fields.insert(FieldId::Coupling, drive(each));
    Stmt::Pulse(PulseSegment {
        fields,
        extent: Extent::AreaRad(area_pi * PI),
        gamma_overrides,
        freeze_shift: true,
    })
}

fn aux_flip(generator_khz: f64) -> Stmt {
    let mut fields = BTreeMap::new();
    fields.insert(FieldId::Aux, drive(generator_khz));
    Stmt::Pulse(PulseSegment {
        fields,
        extent: Extent::AreaRad(PI),
        gamma_overrides: vec![((1, 0), 0.0)],
        freeze_shift: true,
    })
}

fn wait(dur_us: f64) -> Stmt {
    Stmt::Wait {
        dur_us,
        gamma_overrides: Vec::new(),
        freeze_shift: false,
    }
}

fn check_common(params: &ScenarioParams) -> Result<(), ScenarioError> {
    if params.raman_generator_khz <= 0.0 {
        return Err(ScenarioError::InvalidParameter(
            "rephasing generator must be positive".into(),
        ));
    }
    if params.area_pi <= 0.0 || params.final_area_pi <= 0.0 {
        return Err(ScenarioError::InvalidParameter(
            "pulse areas must be positive".into(),
        ));
    }
    if params.attenuation < 0.0 {
        return Err(ScenarioError::InvalidParameter(
            "attenuation must be non-negative".into(),
        ));
    }
    Ok(())
}

fn data_end() -> f64 {
    DATA_STARTS_US[2] + DATA_DUR_US
}

fn push_data_bits(stmts: &mut Vec<Stmt>, probe_khz: f64, coupling_khz: f64) {
    let names = ["bit_a", "bit_b", "bit_c"];
    let mut cursor = 0.0;
    for (t0, name) in DATA_STARTS_US.iter().zip(names) {
        stmts.push(wait(t0 - cursor));
        stmts.push(Stmt::Mark(name.to_string()));
        stmts.push(data_pulse(probe_khz, coupling_khz));
        stmts.push(Stmt::Mark(format!("{name}_end")));
        cursor = t0 + DATA_DUR_US;
    }
}

fn rephase_duration_us(params: &ScenarioParams, area_pi: f64) -> f64 {
    area_pi * PI / to_angular(params.raman_generator_khz)
}

/// Three data windows, one Raman rephasing pulse, capture window sized
/// for all three mirror echoes. `probe/coupling` set the data amplitudes
/// so the weak-probe variant reuses this body.
fn triple_bit_with_data(
    params: &ScenarioParams,
    probe_khz: f64,
    coupling_khz: f64,
) -> Result<Scenario, ScenarioError> {
    check_common(params)?;
    if params.delay_us < data_end() {
        return Err(ScenarioError::DelayCollidesWithData {
            delay_us: params.delay_us,
            data_end_us: data_end(),
        });
    }
    let mut stmts = Vec::new();
    push_data_bits(&mut stmts, probe_khz, coupling_khz);
    if params.delay_us > data_end() {
        stmts.push(wait(params.delay_us - data_end()));
    }
    let overrides = if params.variant == Variant::Fig1c {
        // frozen-decay rephasing: the edge diagnostics compare member
        // coherences across this one segment
        vec![((1, 0), 0.0), ((2, 0), 0.0), ((2, 1), 0.0)]
    } else {
        Vec::new()
    };
    stmts.push(Stmt::Mark("rephase".to_string()));
    stmts.push(raman_pulse(
        params.raman_generator_khz,
        params.area_pi,
        overrides,
    ));
    stmts.push(Stmt::Mark("rephase_end".to_string()));
    stmts.push(wait(2.0 * (params.delay_us - DATA_STARTS_US[0]) + 20.0));
    Ok(Scenario {
        system: LevelSystem::three_level(params.gamma21_khz),
        sequence: PulseSequence {
            initial_populations: params.initial_populations,
            stmts,
        },
        ensemble: EnsembleSpec::default(),
        params: params.clone(),
    })
}

pub fn triple_bit_storage(params: &ScenarioParams) -> Result<Scenario, ScenarioError> {
    triple_bit_with_data(params, DATA_AMP_KHZ, DATA_AMP_KHZ)
}

/// Weak-probe readout: attenuated probe writes against a fixed 25 kHz
/// coupling; the rephasing pulse is unchanged.
pub fn weak_probe(params: &ScenarioParams) -> Result<Scenario, ScenarioError> {
    triple_bit_with_data(params, DATA_AMP_KHZ * params.attenuation, 25.0)
}

/// Two-pulse optical echo on the probe transition with the coupling off.
/// The excited state carries the inhomogeneous shift here, so the echo
/// appears on the optical coherence rather than the spin coherence.
pub fn photon_echo(params: &ScenarioParams) -> Result<Scenario, ScenarioError> {
    check_common(params)?;
    let data_dur = 10.0;
    let data_start = 10.0;
    if params.delay_us < data_start + data_dur {
        return Err(ScenarioError::DelayCollidesWithData {
            delay_us: params.delay_us,
            data_end_us: data_start + data_dur,
        });
    }
    let mut fields = BTreeMap::new();
    fields.insert(FieldId::Probe, drive(25.0));
    let mut reph_fields = BTreeMap::new();
    reph_fields.insert(FieldId::Probe, drive(params.raman_generator_khz));
    let mut stmts = vec![
        wait(data_start),
        Stmt::Mark("bit_a".to_string()),
        Stmt::Pulse(PulseSegment {
            fields,
            extent: Extent::DurationUs(data_dur),
            gamma_overrides: Vec::new(),
            freeze_shift: false,
        }),
        Stmt::Mark("bit_a_end".to_string()),
    ];
    stmts.push(wait(params.delay_us - data_start - data_dur));
    stmts.push(Stmt::Mark("rephase".to_string()));
    stmts.push(Stmt::Pulse(PulseSegment {
        fields: reph_fields,
        extent: Extent::AreaRad(params.area_pi * PI),
        gamma_overrides: Vec::new(),
        freeze_shift: true,
    }));
    stmts.push(Stmt::Mark("rephase_end".to_string()));
    let tau = rephase_duration_us(params, params.area_pi);
    stmts.push(wait(2.0 * params.delay_us + 20.0 - params.delay_us - tau));
    Ok(Scenario {
        system: LevelSystem::photon_echo(),
        sequence: PulseSequence {
            initial_populations: [1.0, 0.0, 0.0, 0.0],
            stmts,
        },
        ensemble: EnsembleSpec::default(),
        params: params.clone(),
    })
}

/// Storage with the spin coherence parked on the optical transition
/// between two auxiliary population flips: write, half rephase, park,
/// hold with the ground decay gated off, unpark, finish rephasing.
pub fn locking_protocol(params: &ScenarioParams) -> Result<Scenario, ScenarioError> {
    check_common(params)?;
    if params.delay_us < data_end() {
        return Err(ScenarioError::DelayCollidesWithData {
            delay_us: params.delay_us,
            data_end_us: data_end(),
        });
    }
    let flip_us = rephase_duration_us(params, 1.0);
    if params.lock_time_us < flip_us {
        return Err(ScenarioError::LockShorterThanFlip {
            lock_time_us: params.lock_time_us,
            flip_us,
        });
    }
    let mut stmts = Vec::new();
    push_data_bits(&mut stmts, DATA_AMP_KHZ, DATA_AMP_KHZ);
    if params.delay_us > data_end() {
        stmts.push(wait(params.delay_us - data_end()));
    }
    stmts.push(Stmt::Mark("rephase".to_string()));
    stmts.push(raman_pulse(params.raman_generator_khz, 1.0, Vec::new()));
    stmts.push(Stmt::Mark("lock_on".to_string()));
    stmts.push(aux_flip(params.raman_generator_khz));
    stmts.push(Stmt::Mark("lock_hold".to_string()));
    stmts.push(Stmt::Wait {
        dur_us: params.lock_time_us,
        gamma_overrides: vec![((1, 0), 0.0)],
        freeze_shift: true,
    });
    stmts.push(Stmt::Mark("lock_off".to_string()));
    stmts.push(aux_flip(params.raman_generator_khz));
    stmts.push(Stmt::Mark("final".to_string()));
    stmts.push(raman_pulse(
        params.raman_generator_khz,
        params.final_area_pi,
        Vec::new(),
    ));
    stmts.push(Stmt::Mark("rephase_end".to_string()));
    stmts.push(wait(2.0 * (params.delay_us - DATA_STARTS_US[0]) + 20.0));
    Ok(Scenario {
        system: LevelSystem::four_level(params.gamma21_khz),
        sequence: PulseSequence {
            initial_populations: params.initial_populations,
            stmts,
        },
        ensemble: EnsembleSpec::default(),
        params: params.clone(),
    })
}

/// Default delay grid for storage-time scans.
pub fn default_scan_delays_us() -> Vec<f64> {
    vec![60.0, 100.0, 150.0, 200.0, 300.0, 500.0]
}

pub fn build(params: &ScenarioParams) -> Result<Scenario, ScenarioError> {
    match params.variant {
        Variant::Fig1a | Variant::Fig1c | Variant::Fig1d => triple_bit_storage(params),
        Variant::Fig1b => photon_echo(params),
        Variant::Fig2 => locking_protocol(params),
        Variant::WeakProbe => weak_probe(params),
        Variant::Custom => Err(ScenarioError::InvalidParameter(
            "custom scenario needs a sequence file".into(),
        )),
    }
}
