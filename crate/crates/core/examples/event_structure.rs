//! Run the longest-chain program asynchronously with message loss, then
//! inspect the recorded event structure: the DAG, one event's causal past,
//! future and concurrent events, and agreement with the chain oracle.

use fcmon::monitors::{entry, oracle_longest_chain};
use fcmon::netsim::{render_events, run, EventId, TraceFormat};

fn main() {
    let e = entry("longest-chain").unwrap();
    let mut cfg = e.scenario_config().unwrap();
    cfg.rounds = Some(4);
    let program = e.program(&cfg.constants_map()).unwrap();
    let result = run(&program, &cfg).unwrap();
    let es = &result.events;

    for line in render_events(es, &result.exports, TraceFormat::Text).lines() {
        if !line.starts_with("export") {
            println!("{}", line);
        }
    }

    let pivot = EventId(es.len() as u32 / 2);
    let past = es.causal_past(pivot).unwrap();
    let future = es.causal_future(pivot).unwrap();
    let concurrent = es.concurrent(pivot).unwrap();
    let list = |s: &std::collections::BTreeSet<EventId>| s.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ");
    println!("\n{} on device {}:", pivot, es.event(pivot).unwrap().device.0);
    println!("  past       {}", list(&past));
    println!("  future     {}", list(&future));
    println!("  concurrent {}", list(&concurrent));
    assert_eq!(past.len() + future.len() + concurrent.len() + 1, es.len());

    let oracle = oracle_longest_chain(es).unwrap();
    let agree = es
        .ids()
        .filter(|id| es.value(*id).and_then(|v| v.as_local()).and_then(|v| v.as_num()) == Some(oracle[id.0 as usize]))
        .count();
    println!(
        "\n{} of {} event values equal the longest chain ending there",
        agree,
        es.len()
    );
}
