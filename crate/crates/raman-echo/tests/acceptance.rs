//! Acceptance gate for the shipped simulator. One test per requirement,
//! each checked at its stated tolerance, so `cargo test --test acceptance`
//! prints one pass/fail line per requirement. Every gate also prints the
//! measured value (visible with `--nocapture`), and failure messages carry
//! the same numbers, so a red run reads as a report.
//!
//! Frozen reference values come from an independent prototype of the same
//! equations of motion; they pin the physics, while the `limit` arguments
//! are the shipped tolerances.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use raman_echo::analysis::{
    self, bit_windows, echo_report, echo_window, fit_exponential, mirror_time, phase_diagnostics,
    rephase_span, retrieval_efficiency, shape_similarity, AnalysisConfig, EfficiencyMetric,
};
use raman_echo::ensemble::{build_grid, sweep, sweep_from, SweepOptions};
use raman_echo::liouvillian::{superoperator, vec_rho};
use raman_echo::linalg::CMat;
use raman_echo::model::{
    resolve, resolve_durations, validate, EnsembleSpec, FieldDrive, FieldId, LevelSystem,
    PulseSequence, ResolvedSegment, ResolvedSequence, Stmt,
};
use raman_echo::propagate::cross_validate;
use raman_echo::scenarios::{self, default_scan_delays_us, ScenarioParams, Variant};
use raman_echo::seqdsl;
use raman_echo::{EnsembleTrace, PropagateOptions};

struct Run {
    system: LevelSystem,
    resolved: ResolvedSequence,
    trace: EnsembleTrace,
}

fn run_params(params: &ScenarioParams) -> Run {
    run_params_sampled(params, PropagateOptions::default().sample_interval_us)
}

fn run_params_sampled(params: &ScenarioParams, sample_interval_us: f64) -> Run {
    let scenario = scenarios::build(params).expect("scenario builds");
    let report = validate(&scenario.system, &scenario.sequence, &scenario.ensemble);
    assert!(
        !report.has_errors(),
        "shipped scenario must validate: {:?}",
        report.issues
    );
    let resolved = resolve_durations(&scenario.sequence)
        .and_then(|seq| resolve(&seq))
        .expect("sequence resolves");
    let (grid, warning) = build_grid(&scenario.ensemble);
    assert!(warning.is_none(), "default grid needs no rounding");
    let opts = SweepOptions {
        propagate: PropagateOptions {
            sample_interval_us,
            ..PropagateOptions::default()
        },
        retained_deltas_khz: params.retained_deltas_khz.clone(),
    };
    let trace = sweep(&scenario.system, &resolved, &grid, &opts).expect("sweep");
    Run {
        system: scenario.system,
        resolved,
        trace,
    }
}

fn fig1a() -> &'static Run {
    static REF: OnceLock<Run> = OnceLock::new();
    REF.get_or_init(|| run_params(&ScenarioParams::new(Variant::Fig1a)))
}

fn fig1b() -> &'static Run {
    static REF: OnceLock<Run> = OnceLock::new();
    REF.get_or_init(|| run_params(&ScenarioParams::new(Variant::Fig1b)))
}

fn fig1c() -> &'static Run {
    static REF: OnceLock<Run> = OnceLock::new();
    REF.get_or_init(|| run_params(&ScenarioParams::new(Variant::Fig1c)))
}

fn fig2() -> &'static Run {
    static REF: OnceLock<Run> = OnceLock::new();
    REF.get_or_init(|| run_params(&ScenarioParams::new(Variant::Fig2)))
}

fn weak_probe() -> &'static Run {
    static REF: OnceLock<Run> = OnceLock::new();
    REF.get_or_init(|| run_params(&ScenarioParams::new(Variant::WeakProbe)))
}

fn abs12(trace: &EnsembleTrace) -> Vec<f64> {
    trace.s12.iter().map(|z| z.norm()).collect()
}

/// Mirror-point efficiency of every written bit, keyed by bit label.
/// Reads fixed time points, so it works even when an echo is suppressed
/// below the peak-detection floor.
fn mirror_effs(run: &Run) -> BTreeMap<String, f64> {
    let (c0, c1) = rephase_span(&run.resolved).expect("rephasing markers");
    let signal = abs12(&run.trace);
    bit_windows(&run.resolved)
        .iter()
        .map(|bit| {
            let eff = retrieval_efficiency(
                &run.trace.times,
                &signal,
                bit,
                c0,
                c1,
                EfficiencyMetric::MirrorPoint,
            );
            (bit.label.clone(), eff)
        })
        .collect()
}

fn gate_below(what: &str, measured: f64, limit: f64) {
    assert!(
        measured < limit,
        "FAIL {what}: {measured:.3e} is not below {limit:.1e}"
    );
    println!("PASS {what}: {measured:.3e} < {limit:.1e}");
}

fn gate_close(what: &str, measured: f64, reference: f64, rel_tol: f64) {
    let rel = (measured - reference).abs() / reference.abs();
    assert!(
        rel < rel_tol,
        "FAIL {what}: {measured:.6} vs reference {reference:.6} (rel {rel:.3e}, tol {rel_tol:.1e})"
    );
    println!("PASS {what}: {measured:.6} matches {reference:.6} (rel {rel:.3e})");
}

/// Largest |Im P13| in the optical-echo window, the readout for the
/// photon-echo control scenario.
fn optical_echo_peak(run: &Run) -> (f64, f64) {
    let (c0, c1) = rephase_span(&run.resolved).expect("rephasing markers");
    let bit = &bit_windows(&run.resolved)[0];
    let expected = mirror_time(c0, c1, bit.center_us());
    run.trace
        .times
        .iter()
        .zip(&run.trace.p13)
        .filter(|(t, _)| (**t - expected).abs() <= 6.0)
        .map(|(t, p)| (*t, p.im.abs()))
        .fold((0.0, 0.0), |best, cand| if cand.1 > best.1 { cand } else { best })
}

#[test]
fn doubled_rephasing_area_suppresses_the_photon_echo() {
    let (t_pi, peak_pi) = optical_echo_peak(fig1b());
    let mut params = ScenarioParams::new(Variant::Fig1b);
    params.area_pi = 2.0;
    let two_pi = run_params(&params);
    let (_, peak_2pi) = optical_echo_peak(&two_pi);

    gate_close("pi-area photon echo peak", peak_pi, 0.12604, 1e-2);
    gate_close("pi-area photon echo time", t_pi, 106.7, 1e-2);
    gate_below(
        "photon echo at doubled area, relative to pi",
        peak_2pi / peak_pi,
        0.02,
    );
}

#[test]
fn retrieval_follows_the_mod_four_pi_area_law() {
    let e2 = mirror_effs(fig1a());
    let mut params = ScenarioParams::new(Variant::Fig1a);
    params.area_pi = 4.0;
    let e4 = mirror_effs(&run_params(&params));
    params.area_pi = 6.0;
    let e6 = mirror_effs(&run_params(&params));

    gate_close("2pi efficiency, last bit", e2["bit_c"], 0.8348, 1e-3);
    for bit in ["bit_a", "bit_b", "bit_c"] {
        gate_below(
            &format!("4pi/2pi efficiency ratio, {bit}"),
            e4[bit] / e2[bit],
            0.05,
        );
        gate_below(
            &format!("|6pi - 2pi| relative efficiency, {bit}"),
            (e6[bit] - e2[bit]).abs() / e2[bit],
            0.05,
        );
    }
}

#[test]
fn three_bits_retrieve_time_reversed_at_mirror_times() {
    let run = fig1a();
    let report = echo_report(
        &run.trace.times,
        &abs12(&run.trace),
        &run.resolved,
        &AnalysisConfig::default(),
    )
    .expect("echo report");
    assert_eq!(
        report.echoes.len(),
        3,
        "FAIL echo count: expected 3, found {}",
        report.echoes.len()
    );
    assert!(
        report.time_reversed,
        "FAIL ordering: echoes must come back last-written first"
    );
    println!("PASS three echoes, retrieved in reverse write order");
    for echo in &report.echoes {
        gate_below(
            &format!("|echo - mirror time| for {} (us)", echo.label),
            (echo.time_us - echo.expected_us).abs(),
            1.5,
        );
    }
    gate_close("bit_a echo time (us)", report.echoes[0].time_us, 108.9, 1e-3);
    gate_close("bit_b echo time (us)", report.echoes[1].time_us, 98.9, 1e-3);
    gate_close("bit_c echo time (us)", report.echoes[2].time_us, 88.9, 1e-3);
    gate_close("bit_a echo amplitude", report.echoes[0].amplitude, 0.01276, 1e-2);
    gate_close("bit_b echo amplitude", report.echoes[1].amplitude, 0.01485, 1e-2);
    gate_close("bit_c echo amplitude", report.echoes[2].amplitude, 0.01301, 1e-2);
}

fn scan_fit(gamma21_khz: f64) -> analysis::FitResult {
    let mut intervals = Vec::new();
    let mut effs = Vec::new();
    for delay in default_scan_delays_us() {
        let mut params = ScenarioParams::new(Variant::Fig1d);
        params.delay_us = delay;
        params.gamma21_khz = gamma21_khz;
        // every mirror point in the scan lands on the 0.2 us grid, so the
        // coarser sampling changes nothing except the wall time
        let run = run_params_sampled(&params, 0.2);
        let (c0, c1) = rephase_span(&run.resolved).unwrap();
        let first = &bit_windows(&run.resolved)[0];
        let eff = retrieval_efficiency(
            &run.trace.times,
            &abs12(&run.trace),
            first,
            c0,
            c1,
            EfficiencyMetric::MirrorPoint,
        );
        intervals.push(mirror_time(c0, c1, first.center_us()) - first.end_us);
        effs.push(eff);
    }
    fit_exponential(&intervals, &effs).expect("decaying efficiency fits")
}

#[test]
fn storage_lifetime_tracks_spin_coherence_decay() {
    let fit = scan_fit(1.0);
    assert!(
        fit.r_squared > 0.99,
        "FAIL fit quality: R^2 = {:.6}",
        fit.r_squared
    );
    println!("PASS exponential fit: R^2 = {:.6}", fit.r_squared);
    gate_close("fitted storage lifetime (us)", fit.tau_us, 318.31, 0.10);
    gate_close("lifetime against prototype (us)", fit.tau_us, 318.39, 5e-3);

    let doubled = scan_fit(2.0);
    gate_close(
        "lifetime ratio after doubling the spin decay rate",
        doubled.tau_us / fit.tau_us,
        0.5,
        0.05,
    );
}

#[test]
fn echo_shape_survives_long_storage() {
    let mut params = ScenarioParams::new(Variant::Fig1a);
    params.delay_us = 500.0;
    let long = run_params(&params);

    let profile = |run: &Run| {
        let (c0, c1) = rephase_span(&run.resolved).unwrap();
        let bit = &bit_windows(&run.resolved)[0];
        let expected = mirror_time(c0, c1, bit.center_us());
        echo_window(&run.trace.times, &abs12(&run.trace), expected, 4.0).expect("echo present")
    };
    let short_profile = profile(fig1a());
    let long_profile = profile(&long);
    let deviation = shape_similarity(&short_profile, &long_profile);
    gate_below(
        "normalized echo shape change, 60 us vs 500 us storage",
        deviation,
        0.05,
    );
    gate_close("shape deviation against prototype", deviation, 0.0016, 0.5);
}

#[test]
fn population_locking_preserves_the_area_law() {
    let reference = mirror_effs(fig1a());
    let locked = mirror_effs(fig2());

    let mut params = ScenarioParams::new(Variant::Fig2);
    params.final_area_pi = 1.0;
    let under = mirror_effs(&run_params(&params));
    params.final_area_pi = 7.0;
    let wrapped = mirror_effs(&run_params(&params));

    gate_close("locked 3pi efficiency, last bit", locked["bit_c"], 0.8183, 1e-3);
    for bit in ["bit_a", "bit_b", "bit_c"] {
        gate_close(
            &format!("locked 3pi retrieval vs unlocked reference, {bit}"),
            locked[bit] / reference[bit],
            1.0,
            0.05,
        );
        gate_below(
            &format!("locked pi retrieval relative to reference, {bit}"),
            under[bit] / reference[bit],
            0.05,
        );
        gate_below(
            &format!("|7pi - 3pi| relative efficiency, {bit}"),
            (wrapped[bit] - locked[bit]).abs() / locked[bit],
            0.05,
        );
    }
}

#[test]
fn spin_phase_reverses_and_recovers() {
    // rephasing diagnostics with decay frozen during the drive, read on
    // the two retained members at +-10 kHz
    let run2 = fig1c();
    let plus = run2.trace.retained_at(10.0).expect("+10 kHz member kept");
    let minus = run2.trace.retained_at(-10.0).expect("-10 kHz member kept");
    let (c0, c1) = rephase_span(&run2.resolved).unwrap();
    let d2 = phase_diagnostics(plus, minus, c0, c1);
    gate_below("Re rho12 recovery error across a 2pi drive", d2.re_recovery_err, 1e-3);
    gate_below("Im rho12 reversal error across a 2pi drive", d2.im_reversal_err, 1e-3);

    let mut params = ScenarioParams::new(Variant::Fig1c);
    params.area_pi = 4.0;
    let run4 = run_params(&params);
    let plus4 = run4.trace.retained_at(10.0).unwrap();
    let minus4 = run4.trace.retained_at(-10.0).unwrap();
    let (c0_4, c1_4) = rephase_span(&run4.resolved).unwrap();
    let d4 = phase_diagnostics(plus4, minus4, c0_4, c1_4);
    gate_below("Im rho12 recovery error across a 4pi drive", d4.im_recovery_err, 1e-3);

    // the locking window swaps the imaginary parts of opposite-detuning
    // members; checked away from the data pulses so no optical residue
    // leaks into the comparison
    let mut lock = ScenarioParams::new(Variant::Fig2);
    lock.delay_us = 150.0;
    lock.retained_deltas_khz = vec![-10.0, 10.0];
    let locked = run_params(&lock);
    let t_before = locked.resolved.marker("lock_on").unwrap();
    let t_after = locked.resolved.marker("final").unwrap();
    let lp = locked.trace.retained_at(10.0).unwrap();
    let lm = locked.trace.retained_at(-10.0).unwrap();
    let dl = phase_diagnostics(lp, lm, t_before, t_after);
    gate_below("Im rho12 swap error across the locked flip pair", dl.swap_err, 1e-3);

    // optical coherence parked on the auxiliary transition returns with
    // its sign flipped
    let k_before = lp.index_at(t_before);
    let k_after = lp.index_at(t_after);
    let flip = (lp.rho13[k_after] + lp.rho13[k_before]).norm();
    gate_below("parked optical coherence flip error", flip, 1e-3);
}

#[test]
fn weak_probe_readout_stays_linear() {
    let mut params = ScenarioParams::new(Variant::WeakProbe);
    params.attenuation = 1.0;
    let base = mirror_effs(&run_params(&params));
    let weak = mirror_effs(weak_probe());

    gate_close("full-strength efficiency, last bit", base["bit_c"], 0.83479, 1e-3);
    gate_close("attenuated efficiency, last bit", weak["bit_c"], 0.82607, 1e-3);
    gate_below(
        "efficiency change under 100x probe attenuation, last bit",
        (weak["bit_c"] - base["bit_c"]).abs() / base["bit_c"],
        0.10,
    );
    for bit in ["bit_a", "bit_b"] {
        println!(
            "info {bit}: full {:.5}, attenuated {:.5} (earlier bits carry cross-write \
             contributions at their mirror points)",
            base[bit], weak[bit]
        );
    }
}

#[test]
fn retrieval_ignores_the_initial_ground_state_balance() {
    let balanced = mirror_effs(fig1a());
    let mut params = ScenarioParams::new(Variant::Fig1a);
    params.initial_populations = [1.0, 0.0, 0.0, 0.0];
    let polarized = mirror_effs(&run_params(&params));

    gate_below(
        "efficiency change from polarizing the initial state, last bit",
        (polarized["bit_c"] - balanced["bit_c"]).abs() / balanced["bit_c"],
        0.05,
    );
    for bit in ["bit_a", "bit_b"] {
        println!(
            "info {bit}: balanced {:.5}, polarized {:.5} (mirror points of earlier bits \
             overlap later writes, which do depend on the initial state)",
            balanced[bit], polarized[bit]
        );
    }
}

/// A 50 kHz rephasing drive: same pulse areas, two orders of magnitude
/// slower, so the fixed-step integrator can be held to a tight bound.
fn gentle_fig1a() -> (LevelSystem, ResolvedSequence) {
    let mut params = ScenarioParams::new(Variant::Fig1a);
    params.raman_generator_khz = 50.0;
    let scenario = scenarios::build(&params).unwrap();
    let resolved = resolve_durations(&scenario.sequence)
        .and_then(|seq| resolve(&seq))
        .unwrap();
    (scenario.system, resolved)
}

#[test]
fn numerical_integrity_holds_across_the_shipped_scenarios() {
    // density-matrix invariants on every shipped scenario
    let mut shipped: Vec<(Variant, &Run)> = vec![
        (Variant::Fig1a, fig1a()),
        (Variant::Fig1b, fig1b()),
        (Variant::Fig1c, fig1c()),
        (Variant::Fig2, fig2()),
        (Variant::WeakProbe, weak_probe()),
    ];
    let scan_point = {
        let mut params = ScenarioParams::new(Variant::Fig1d);
        params.delay_us = 100.0;
        run_params(&params)
    };
    shipped.push((Variant::Fig1d, &scan_point));
    for (variant, run) in &shipped {
        gate_below(
            &format!("trace drift, {variant}"),
            run.trace.max_trace_drift,
            1e-9,
        );
        gate_below(
            &format!("hermiticity defect, {variant}"),
            run.trace.max_hermiticity_defect,
            1e-9,
        );
    }

    // the fixed-step integrator reproduces the exact propagator
    let (gentle_sys, gentle_seq) = gentle_fig1a();
    let dev = cross_validate(&gentle_sys, &gentle_seq, 10.0, 0.005, 0.1).unwrap();
    gate_below("RK4 vs exact, 50 kHz drive at dt = 0.005", dev, 1e-8);
    let sharp = fig1a();
    let dev_fine = cross_validate(&sharp.system, &sharp.resolved, 10.0, 0.001, 0.1).unwrap();
    gate_below("RK4 vs exact, impulsive drive at dt = 0.001", dev_fine, 1e-8);
    let dev_coarse = cross_validate(&sharp.system, &sharp.resolved, 10.0, 0.005, 0.1).unwrap();
    println!("info RK4 vs exact, impulsive drive at dt = 0.005: {dev_coarse:.2e} (needs the finer step)");

    // free-induction decay of a prepared coherence against the closed form
    let mut fid_seq = PulseSequence::default();
    fid_seq.stmts.push(Stmt::Wait {
        dur_us: 2.0,
        gamma_overrides: Vec::new(),
        freeze_shift: false,
    });
    let fid_resolved = resolve(&fid_seq).unwrap();
    let wide = EnsembleSpec {
        truncation_khz: 400.0,
        ..EnsembleSpec::default()
    };
    let (wide_grid, _) = build_grid(&wide);
    let mut rho0 = CMat::zeros((3, 3));
    rho0[[0, 0]] = C64::new(0.5, 0.0);
    rho0[[1, 1]] = C64::new(0.5, 0.0);
    rho0[[0, 1]] = C64::new(0.5, 0.0);
    rho0[[1, 0]] = C64::new(0.5, 0.0);
    let fid = sweep_from(
        &LevelSystem::three_level(0.0),
        &fid_resolved,
        &wide_grid,
        Some(&rho0),
        &SweepOptions::default(),
    )
    .unwrap();
    let ratio = fid.s12_at(2.0).norm() / fid.s12_at(0.0).norm();
    let envelope = raman_echo::ensemble::fid_envelope(200.0, 2.0);
    gate_below(
        "free-induction decay vs closed form, relative",
        (ratio - envelope).abs() / envelope,
        1e-3,
    );

    // the dark state is stationary under the symmetric two-field drive
    // once the ground coherence decay is overridden to zero
    let mut fields = BTreeMap::new();
    let drive = FieldDrive {
        amp_khz: 17.0,
        phase_rad: 0.0,
        det_khz: 0.0,
    };
    fields.insert(FieldId::Probe, drive);
    fields.insert(FieldId::Coupling, drive);
    let segment = ResolvedSegment {
        t0: 0.0,
        t1: 1.0,
        fields,
        gamma_overrides: vec![((1, 0), 0.0)],
        freeze_shift: false,
        label: None,
    };
    let l = superoperator(&LevelSystem::three_level(1.0), &segment, 0.0).unwrap();
    let mut dark = CMat::zeros((3, 3));
    dark[[0, 0]] = C64::new(0.5, 0.0);
    dark[[1, 1]] = C64::new(0.5, 0.0);
    dark[[0, 1]] = C64::new(-0.5, 0.0);
    dark[[1, 0]] = C64::new(-0.5, 0.0);
    let residue = l
        .dot(&vec_rho(&dark))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    gate_below("dark-state stationarity residue", residue, 1e-12);

    // every shipped sequence survives a round trip through its text form
    for variant in Variant::ALL {
        if variant == Variant::Custom {
            continue;
        }
        let scenario = scenarios::build(&ScenarioParams::new(variant)).unwrap();
        let text = seqdsl::format(&scenario.sequence);
        let reparsed = seqdsl::parse(&text)
            .unwrap_or_else(|e| panic!("FAIL round trip for {variant}: {e}"));
        assert_eq!(
            reparsed, scenario.sequence,
            "FAIL round trip for {variant}: reparse differs"
        );
        assert_eq!(
            seqdsl::format(&reparsed),
            text,
            "FAIL round trip for {variant}: format is not byte-stable"
        );
        println!("PASS sequence text round trip, {variant}");
    }

    // ensemble reduction is byte-identical whatever the thread count
    let reference = fig1a();
    for threads in [1usize, 3] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let (grid, _) = build_grid(&EnsembleSpec::default());
        let trace = pool
            .install(|| {
                sweep(
                    &reference.system,
                    &reference.resolved,
                    &grid,
                    &SweepOptions::default(),
                )
            })
            .unwrap();
        let identical = trace
            .s12
            .iter()
            .zip(&reference.trace.s12)
            .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits());
        assert!(
            identical,
            "FAIL determinism: {threads}-thread sweep differs from the reference"
        );
        println!("PASS bitwise determinism, {threads}-thread pool");
    }
}
