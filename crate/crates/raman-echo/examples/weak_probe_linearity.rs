//! Attenuate the data pulses by two orders of magnitude: the normalized
//! retrieval efficiency of the last bit barely moves, so the readout is
//! linear in the probe field and weak coherent pulses store faithfully.
//!
//! Run with: cargo run --release --example weak_probe_linearity

use raman_echo::analysis::{bit_windows, rephase_span, retrieval_efficiency, EfficiencyMetric};
use raman_echo::ensemble::{build_grid, sweep, SweepOptions};
use raman_echo::model::{resolve, resolve_durations, validate};
use raman_echo::scenarios::{self, ScenarioParams, Variant};

fn last_bit_efficiency(attenuation: f64) -> f64 {
    let mut params = ScenarioParams::new(Variant::WeakProbe);
    params.attenuation = attenuation;
    let scenario = scenarios::build(&params).unwrap();
    let report = validate(&scenario.system, &scenario.sequence, &scenario.ensemble);
    assert!(!report.has_errors(), "{:?}", report.issues);
    let resolved = resolve_durations(&scenario.sequence)
        .and_then(|seq| resolve(&seq))
        .unwrap();
    let (grid, _) = build_grid(&scenario.ensemble);
    let trace = sweep(&scenario.system, &resolved, &grid, &SweepOptions::default()).unwrap();

    let (c0, c1) = rephase_span(&resolved).unwrap();
    let signal: Vec<f64> = trace.s12.iter().map(|z| z.norm()).collect();
    let last = bit_windows(&resolved).pop().unwrap();
    retrieval_efficiency(
        &trace.times,
        &signal,
        &last,
        c0,
        c1,
        EfficiencyMetric::MirrorPoint,
    )
}

fn main() {
    println!("last-bit retrieval efficiency vs data pulse attenuation:");
    println!("{:>12} {:>12}", "attenuation", "efficiency");
    let mut effs = Vec::new();
    for attenuation in [1.0, 0.1, 0.01] {
        let eff = last_bit_efficiency(attenuation);
        println!("{attenuation:>12} {eff:>12.6}");
        effs.push(eff);
    }
    let spread = effs
        .iter()
        .map(|e| (e - effs[0]).abs() / effs[0])
        .fold(0.0, f64::max);
    println!("relative spread over two decades of drive: {spread:.3e}");
    println!("the normalized efficiency is amplitude independent, so the");
    println!("protocol reads out weak pulses as faithfully as strong ones.");
}
