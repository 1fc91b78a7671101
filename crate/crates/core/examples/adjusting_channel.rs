//! The self-adjusting channel: each device widens or narrows the channel
//! from its monitor's verdict. Prints the width range per round and whether
//! the two invariants hold.

use fcmon::monitors::{adjusting_status_consistent, adjusting_width_bounded, entry};
use fcmon::netsim::run;
use fcmon::value::LocalValue;

fn main() {
    let e = entry("adjusting-channel").unwrap();
    let cfg = e.scenario_config().unwrap();
    let consts = cfg.constants_map();
    let (minw, maxw) = (consts["MINW"].as_num().unwrap(), consts["MAXW"].as_num().unwrap());
    let program = e.program(&consts).unwrap();
    let result = run(&program, &cfg).unwrap();
    let n = result.devices.len();

    let (mut status_ok, mut width_ok) = (0, 0);
    for (i, chunk) in result.exports.chunks(n).enumerate() {
        let mut widths = Vec::new();
        for tree in chunk.iter().flatten() {
            status_ok += adjusting_status_consistent(tree, minw, maxw).is_ok() as usize;
            width_ok += adjusting_width_bounded(tree, maxw).is_ok() as usize;
            for ec in tree.frames("elliptic-channel") {
                widths.extend(ec.children[2].value.as_local().and_then(LocalValue::as_num));
            }
        }
        let lo = widths.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = widths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if i % 5 == 0 {
            println!("round {:>2}: width in [{}, {}]", i + 1, lo, hi);
        }
    }
    let total = result.exports.iter().flatten().count();
    println!("status equals the threshold verdict at {}/{} events", status_ok, total);
    println!("width within [1, {}] at {}/{} events", maxw, width_ok, total);
}
