//! Watch a single ensemble member's spin coherence through the rephasing
//! drive: a 2 pi area flips the imaginary part (time reversal of the
//! accumulated detuning phase), a 4 pi area hands it back unchanged.
//!
//! Run with: cargo run --release --example phase_reversal

use raman_echo::analysis::{phase_diagnostics, rephase_span};
use raman_echo::ensemble::{build_grid, sweep, EnsembleTrace, SweepOptions};
use raman_echo::model::{resolve, resolve_durations, validate, ResolvedSequence};
use raman_echo::scenarios::{self, ScenarioParams, Variant};

fn run(area_pi: f64) -> (ResolvedSequence, EnsembleTrace) {
    let mut params = ScenarioParams::new(Variant::Fig1c);
    params.area_pi = area_pi;
    let scenario = scenarios::build(&params).unwrap();
    let report = validate(&scenario.system, &scenario.sequence, &scenario.ensemble);
    assert!(!report.has_errors(), "{:?}", report.issues);
    let resolved = resolve_durations(&scenario.sequence)
        .and_then(|seq| resolve(&seq))
        .unwrap();
    let (grid, _) = build_grid(&scenario.ensemble);
    let opts = SweepOptions {
        retained_deltas_khz: params.retained_deltas_khz.clone(),
        ..SweepOptions::default()
    };
    let trace = sweep(&scenario.system, &resolved, &grid, &opts).unwrap();
    (resolved, trace)
}

fn main() {
    for area_pi in [2.0, 4.0] {
        let (resolved, trace) = run(area_pi);
        let (c0, c1) = rephase_span(&resolved).unwrap();
        let plus = trace.retained_at(10.0).expect("+10 kHz member retained");
        let minus = trace.retained_at(-10.0).expect("-10 kHz member retained");

        let before = plus.rho12_at(c0);
        let after = plus.rho12_at(c1);
        println!("{} pi drive, +10 kHz member:", area_pi as u32);
        println!("  rho12 before {:+.6} {:+.6}i", before.re, before.im);
        println!("  rho12 after  {:+.6} {:+.6}i", after.re, after.im);

        let d = phase_diagnostics(plus, minus, c0, c1);
        if area_pi == 2.0 {
            println!("  Re recovery error {:.2e}, Im reversal error {:.2e}", d.re_recovery_err, d.im_reversal_err);
            println!("  the 2 pi drive conjugates the coherence: Im flips, Re survives");
        } else {
            println!("  Re recovery error {:.2e}, Im recovery error {:.2e}", d.re_recovery_err, d.im_recovery_err);
            println!("  the 4 pi drive is a full loop: the phase comes back untouched");
        }
    }
}
