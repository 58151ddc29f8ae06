//! Store three time-separated bits in a broadened spin ensemble, rephase
//! once with a 2 pi Raman drive, and read the echoes back in reverse
//! write order at the mirror times.
//!
//! Run with: cargo run --release --example triple_bit_echo

use raman_echo::analysis::{echo_report, AnalysisConfig};
use raman_echo::ensemble::{build_grid, sweep, SweepOptions};
use raman_echo::model::{resolve, resolve_durations, validate};
use raman_echo::scenarios::{self, ScenarioParams, Variant};

fn main() {
    let scenario = scenarios::build(&ScenarioParams::new(Variant::Fig1a)).unwrap();
    let report = validate(&scenario.system, &scenario.sequence, &scenario.ensemble);
    assert!(!report.has_errors(), "{:?}", report.issues);
    let resolved = resolve_durations(&scenario.sequence)
        .and_then(|seq| resolve(&seq))
        .unwrap();
    let (grid, _) = build_grid(&scenario.ensemble);
    let trace = sweep(&scenario.system, &resolved, &grid, &SweepOptions::default()).unwrap();

    let signal: Vec<f64> = trace.s12.iter().map(|z| z.norm()).collect();
    let echoes = echo_report(&trace.times, &signal, &resolved, &AnalysisConfig::default())
        .expect("echoes detected");

    println!("three bits written at 10, 20 and 30 us, rephased at 60 us:");
    println!(
        "{:<8} {:>12} {:>12} {:>12} {:>11} {:>11}",
        "bit", "written(us)", "echo(us)", "mirror(us)", "amplitude", "efficiency"
    );
    for e in &echoes.echoes {
        println!(
            "{:<8} {:>12.1} {:>12.1} {:>12.1} {:>11.5} {:>11.4}",
            e.label, e.bit_center_us, e.time_us, e.expected_us, e.amplitude, e.efficiency
        );
    }
    println!("replayed in reverse write order: {}", echoes.time_reversed);
    println!(
        "(the first two efficiencies read high: each echo overlaps the still",
    );
    println!(
        " rephasing tails of its neighbours, the last bit is read cleanly)",
    );
}
