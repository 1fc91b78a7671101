//! The two local monitors: lights follow people within a room, and the
//! stereo alarm fires once its condition has failed for DELAY rounds.

use fcmon::monitors::{check_entry, entry};
use fcmon::netsim::TraceFormat;

fn main() {
    for name in ["lights", "stereo"] {
        let e = entry(name).unwrap();
        let cfg = e.scenario_config().unwrap();
        let (result, report) = check_entry(&e, &cfg).unwrap();
        println!("{}\n{}", e.meta.description, report.render(TraceFormat::Text));
        if name == "stereo" {
            println!("stereo verdicts at device 0:");
            for id in result.events.device_events(fcmon::value::DeviceId(0)) {
                let ev = result.events.event(id).unwrap();
                let v = result
                    .events
                    .value(id)
                    .map(fcmon::value::encode_value)
                    .unwrap_or_default();
                println!("  t={:>4} {}", ev.time, v);
            }
        }
        println!();
    }
}
