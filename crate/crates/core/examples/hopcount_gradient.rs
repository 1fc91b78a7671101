//! The hop-count gradient on a synchronous grid, printed as a map after
//! each round until it matches breadth-first distances.

use std::collections::BTreeSet;

use fcmon::lang::load_program;
use fcmon::monitors::oracle_bfs;
use fcmon::netsim::{ScenarioConfig, TopologySpec, World};
use fcmon::value::{DeviceId, LocalValue, Value};

const W: u32 = 8;
const H: u32 = 5;

fn main() {
    let program = load_program(
        "def hopcount(source) { rep (infinity) { (c) => mux(source, 0, minHood(nbr{c + 1})) } }
         hopcount(source())",
        &Default::default(),
    )
    .unwrap();
    let mut cfg = ScenarioConfig::synchronous(
        1,
        14,
        TopologySpec::Grid {
            width: W,
            height: H,
            spacing: 1.0,
        },
    );
    cfg.set_sensor_default("source", LocalValue::Bool(false));
    cfg.set_sensor("source", 11, LocalValue::Bool(true));

    let mut world = World::new(&program, &cfg).unwrap();
    let oracle = oracle_bfs(&world.topology().graph(), &BTreeSet::from([DeviceId(11)]));
    for round in 1..=14 {
        while world.devices().iter().any(|d| d.fires < round) {
            if world.step().is_none() {
                break;
            }
        }
        let cell = |d: u32| match &world.device(DeviceId(d)).unwrap().last_value {
            Some(Value::Local(LocalValue::Num(n))) if n.is_finite() => format!("{:>3}", n),
            _ => "  .".to_string(),
        };
        let matches = (0..W * H).all(|d| {
            matches!(&world.device(DeviceId(d)).unwrap().last_value,
                Some(Value::Local(LocalValue::Num(n))) if *n == oracle[&DeviceId(d)])
        });
        println!("round {}{}", round, if matches { "  (equals BFS)" } else { "" });
        for y in 0..H {
            let row: Vec<String> = (0..W).map(|x| cell(y * W + x)).collect();
            println!("  {}", row.join(""));
        }
        if matches {
            break;
        }
    }
}
