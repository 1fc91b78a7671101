//! Monitors that aggregate over the whole network: everywhere, somewhere,
//! remote lights, the evacuation alert and the collision-course check.

use fcmon::monitors::{check_entry, entry};

fn main() {
    for name in [
        "evacuation",
        "everywhere",
        "somewhere",
        "remote-lights",
        "remote-evacuation-alert",
    ] {
        let e = entry(name).unwrap();
        let cfg = e.scenario_config().unwrap();
        let (_, report) = check_entry(&e, &cfg).unwrap();
        println!(
            "{:<24} {} ({} comparisons, {} mismatches)",
            name,
            if report.passed() { "pass" } else { "FAIL" },
            report.checked,
            report.mismatches
        );

        let mutant = e.mutated().unwrap();
        let (_, mutated) = check_entry(&mutant, &cfg).unwrap();
        println!(
            "{:<24} with {} -> {}: {}",
            "",
            e.meta.mutation.from,
            e.meta.mutation.to,
            if mutated.passed() { "still passes" } else { "detected" }
        );
    }
}
