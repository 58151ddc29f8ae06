//! Scan the rephasing delay, read the first bit's mirror-point efficiency
//! at each storage interval and fit the exponential storage lifetime.
//! With gamma21 = 1 kHz the spin coherence time is 1/(pi kHz) = 318.31 us.
//!
//! Run with: cargo run --release --example storage_lifetime

use raman_echo::analysis::{
    bit_windows, fit_exponential, mirror_time, rephase_span, retrieval_efficiency,
    storage_capacity, EfficiencyMetric,
};
use raman_echo::ensemble::{build_grid, sweep, SweepOptions};
use raman_echo::model::{resolve, resolve_durations, validate};
use raman_echo::propagate::PropagateOptions;
use raman_echo::scenarios::{self, default_scan_delays_us, ScenarioParams, Variant};

const BIT_DURATION_US: f64 = 3.0;

fn main() {
    let mut intervals = Vec::new();
    let mut efficiencies = Vec::new();
    println!("{:>10} {:>13} {:>12}", "delay(us)", "interval(us)", "efficiency");
    for delay_us in default_scan_delays_us() {
        let mut params = ScenarioParams::new(Variant::Fig1d);
        params.delay_us = delay_us;
        let scenario = scenarios::build(&params).unwrap();
        let report = validate(&scenario.system, &scenario.sequence, &scenario.ensemble);
        assert!(!report.has_errors(), "{:?}", report.issues);
        let resolved = resolve_durations(&scenario.sequence)
            .and_then(|seq| resolve(&seq))
            .unwrap();
        let (grid, _) = build_grid(&scenario.ensemble);
        // every mirror point lands on the 0.2 us grid, so the coarse
        // sampling only saves wall time
        let opts = SweepOptions {
            propagate: PropagateOptions {
                sample_interval_us: 0.2,
                ..PropagateOptions::default()
            },
            ..SweepOptions::default()
        };
        let trace = sweep(&scenario.system, &resolved, &grid, &opts).unwrap();

        let (c0, c1) = rephase_span(&resolved).unwrap();
        let signal: Vec<f64> = trace.s12.iter().map(|z| z.norm()).collect();
        let first = &bit_windows(&resolved)[0];
        let eff = retrieval_efficiency(
            &trace.times,
            &signal,
            first,
            c0,
            c1,
            EfficiencyMetric::MirrorPoint,
        );
        let interval = mirror_time(c0, c1, first.center_us()) - first.end_us;
        println!("{delay_us:>10.0} {interval:>13.1} {eff:>12.6}");
        intervals.push(interval);
        efficiencies.push(eff);
    }

    let fit = fit_exponential(&intervals, &efficiencies).unwrap();
    println!("fitted lifetime: tau = {:.2} us (R^2 = {:.6})", fit.tau_us, fit.r_squared);
    println!("expected from gamma21 = 1 kHz: 318.31 us");
    let (bits, warning) = storage_capacity(fit.tau_us, BIT_DURATION_US);
    match warning {
        None => println!("one lifetime holds {bits} back-to-back {BIT_DURATION_US} us bits"),
        Some(w) => println!("{w}"),
    }
}
