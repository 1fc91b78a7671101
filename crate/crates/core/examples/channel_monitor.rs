//! The channel between two foci on a grid, and the monitor estimating how
//! many devices share each hop-count value.

use fcmon::monitors::{check_entry, entry};
use fcmon::value::{DeviceId, LocalValue, Value};

fn main() {
    let e = entry("elliptic-channel").unwrap();
    let cfg = e.scenario_config().unwrap();
    let (result, report) = check_entry(&e, &cfg).unwrap();
    println!("channel membership, WIDTH = {}:", cfg.constants_map()["WIDTH"]);
    for y in 0..10 {
        let row: String = (0..10)
            .map(|x| match &result.devices[&DeviceId(y * 10 + x)].value {
                Some(Value::Local(LocalValue::Bool(true))) => '#',
                _ => '.',
            })
            .collect();
        println!("  {}", row);
    }
    println!(
        "{}\n",
        if report.passed() {
            "matches the ellipse oracle"
        } else {
            "differs from the ellipse oracle"
        }
    );

    let e = entry("monitor").unwrap();
    let cfg = e.scenario_config().unwrap();
    let (_, report) = check_entry(&e, &cfg).unwrap();
    println!("{}", report);
}
