//! A scenario written inline: a reactive line network where a device dies
//! and later revives, printed as a line-record trace.

use fcmon::lang::load_program;
use fcmon::netsim::{run, ScenarioConfig, TraceFormat};

const SCENARIO: &str = r#"
seed = 3
until = 12.0

[topology]
kind = "edges"
devices = 5
edges = [[0, 1], [1, 2], [2, 3], [3, 4]]

[schedule]
policy = "periodic"
period = 1.0
jitter = 0.2

[link]
delay = { min = 0.05, max = 0.3 }
loss = 0.1

[sensors.source]
default = false
devices = { "0" = true }

[[env]]
time = 4.0
action = "kill"
device = 2

[[env]]
time = 8.0
action = "revive"
device = 2
"#;

fn main() {
    let cfg = ScenarioConfig::from_toml(SCENARIO).unwrap();
    let program = load_program(
        "rep (infinity) { (c) => mux(source(), 0, minHood(nbr{c + 1})) }",
        &cfg.constants_map(),
    )
    .unwrap();
    let result = run(&program, &cfg).unwrap();
    print!("{}", result.trace.render(TraceFormat::Records));
    println!("# final values");
    for (d, snap) in &result.devices {
        let v = snap
            .value
            .as_ref()
            .map(fcmon::value::encode_value)
            .unwrap_or_else(|| "-".into());
        println!("# device {} alive={} value={}", d.0, snap.alive, v);
    }
}
