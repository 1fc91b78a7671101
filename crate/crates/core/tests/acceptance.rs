//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_RED` are expected to fail and the analysis of
//! each failure is kept outside the repository. The target exits non-zero
//! when any criterion's outcome differs from that expectation, in either
//! direction.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use fcmon::lang::{parse, pretty_print};
use fcmon::monitors::{
    adjusting_status_consistent, adjusting_width_bounded, check_entry, corpus, entry, oracle_bfs,
    samevalue_direct_model, CheckReport, CorpusEntry,
};
use fcmon::netsim::{run, EventId, ScenarioConfig, SimulationResult, TopologySpec, TraceFormat};
use fcmon::value::{DeviceId, LocalValue};

const KNOWN_RED: &[&str] = &["8", "adjusting-b"];

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

/// Every simulation in the suite goes through here so the event-structure
/// sanity checks of criterion 9 see all of them.
#[derive(Default)]
struct Sanity {
    runs: usize,
    events: usize,
    problems: Vec<String>,
}

impl Sanity {
    fn record(&mut self, label: &str, result: &SimulationResult) {
        self.runs += 1;
        let es = &result.events;
        self.events += es.len();
        if let Err(e) = es.topological_order() {
            self.problems.push(format!("{}: {}", label, e));
            return;
        }
        for id in es.ids() {
            let own = es.event(id).unwrap().device;
            let mut seen = BTreeSet::new();
            for p in es.predecessors(id) {
                let d = es.event(*p).unwrap().device;
                if d == own || !seen.insert(d) {
                    self.problems
                        .push(format!("{}: {} has a bad predecessor {}", label, id, p));
                }
            }
        }
        // The three-way partition is quadratic, so it is checked on an evenly
        // spread sample of events.
        let n = es.len();
        let step = (n / 12).max(1);
        for i in (0..n).step_by(step) {
            let e = EventId(i as u32);
            let past = es.causal_past(e).unwrap();
            let future = es.causal_future(e).unwrap();
            let concurrent = es.concurrent(e).unwrap();
            let disjoint =
                past.is_disjoint(&future) && past.is_disjoint(&concurrent) && future.is_disjoint(&concurrent);
            let covers = past.len() + future.len() + concurrent.len() + 1 == n;
            if !disjoint || !covers || past.contains(&e) || future.contains(&e) || concurrent.contains(&e) {
                self.problems.push(format!("{}: partition broken at {}", label, e));
            }
        }
    }
}

fn check(e: &CorpusEntry, cfg: &ScenarioConfig, sanity: &mut Sanity) -> CheckReport {
    let (result, report) = check_entry(e, cfg).unwrap_or_else(|err| panic!("{}: {}", e.name, err));
    sanity.record(&e.name, &result);
    report
}

fn only(cfg: &mut ScenarioConfig, sensor: &str, device: u32) {
    cfg.set_sensor_default(sensor, LocalValue::Bool(false));
    cfg.sensors.get_mut(sensor).unwrap().devices.clear();
    cfg.set_sensor(sensor, device, LocalValue::Bool(true));
}

fn summary(reports: &[CheckReport]) -> (bool, String) {
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{} seed {} ({}/{})", r.name, r.seed, r.mismatches, r.checked))
        .collect();
    let checked: usize = reports.iter().map(|r| r.checked).sum();
    if failed.is_empty() {
        (
            true,
            format!("{} runs, {} comparisons, all exact", reports.len(), checked),
        )
    } else {
        (
            false,
            format!(
                "{} of {} runs differ: {}",
                failed.len(),
                reports.len(),
                failed.join(", ")
            ),
        )
    }
}

fn criterion_1() -> (bool, String) {
    let mut bad = Vec::new();
    let entries = corpus();
    for e in &entries {
        let once = parse(&e.source).unwrap();
        let twice = parse(&pretty_print(&once)).unwrap();
        if once != twice {
            bad.push(e.name.clone());
        }
    }
    (
        bad.is_empty(),
        format!("{} corpus files, mismatched: {:?}", entries.len(), bad),
    )
}

fn criterion_2(s: &mut Sanity) -> (bool, String) {
    let hop = entry("hopcount").unwrap();
    let mut reports = vec![check(&hop, &hop.scenario_config().unwrap(), s)];
    let grid_horizon = reports[0].horizon;
    for seed in 0..20 {
        let mut cfg = ScenarioConfig::synchronous(
            1000 + seed,
            40,
            TopologySpec::RandomUnitDisk {
                devices: 30,
                radius: 0.3,
                side: 1.0,
            },
        );
        only(&mut cfg, "source", (seed % 30) as u32);
        reports.push(check(&hop, &cfg, s));
    }
    let (ok, detail) = summary(&reports);
    (
        ok && grid_horizon == Some(19),
        format!("grid horizon {:?}; {}", grid_horizon, detail),
    )
}

fn criterion_3(s: &mut Sanity) -> (bool, String) {
    let e = entry("longest-chain").unwrap();
    let base = e.scenario_config().unwrap();
    let mut reports = Vec::new();
    let mut circled = 0;
    for i in 0..50u64 {
        let mut cfg = base.clone();
        cfg.seed = 500 + i;
        cfg.link.loss = (i % 4) as f64 * 0.1;
        let (result, report) = check_entry(&e, &cfg).unwrap();
        s.record("longest-chain", &result);
        let es = &result.events;
        let num = |id: EventId| es.value(id).and_then(|v| v.as_local()).and_then(LocalValue::as_num);
        for id in es.ids() {
            let preds: Vec<f64> = es.predecessors(id).iter().filter_map(|p| num(*p)).collect();
            if preds.contains(&2.0) && preds.iter().all(|v| *v <= 2.0) && num(id) == Some(3.0) {
                circled += 1;
            }
        }
        reports.push(report);
    }
    let (ok, detail) = summary(&reports);
    (
        ok && circled > 0,
        format!("{}; {} events show predecessors {{2, ...}} giving 3", detail, circled),
    )
}

fn criterion_4(s: &mut Sanity) -> (bool, String) {
    let e = entry("parity").unwrap();
    let base = e.scenario_config().unwrap();
    let reports: Vec<_> = (0..20)
        .map(|i| {
            let mut cfg = base.clone();
            cfg.seed = 40 + i;
            check(&e, &cfg, s)
        })
        .collect();
    summary(&reports)
}

fn criterion_5(s: &mut Sanity) -> (bool, String) {
    let lights = entry("lights").unwrap();
    let lights_report = check(&lights, &lights.scenario_config().unwrap(), s);
    let stereo = entry("stereo").unwrap();
    let cfg = stereo.scenario_config().unwrap();
    let consts = cfg.constants_map();
    let (result, stereo_report) = check_entry(&stereo, &cfg).unwrap();
    s.record("stereo", &result);

    // Independent count at device 0: the condition first fails when the
    // level rises above THRESHOLD while device 1 still disagrees.
    let delay = consts["DELAY"].as_num().unwrap() as usize;
    let events = result.events.device_events(DeviceId(0));
    let verdict = |i: usize| {
        result
            .events
            .value(events[i])
            .and_then(|v| v.as_local())
            .and_then(LocalValue::as_bool)
    };
    let first_false = (0..events.len()).find(|i| verdict(*i) == Some(false));
    let last_hold = (0..events.len()).take_while(|i| {
        let level = result.events.event(events[*i]).unwrap().sensors["level"]
            .as_num()
            .unwrap();
        level <= consts["THRESHOLD"].as_num().unwrap()
    });
    let last_hold = last_hold.last();
    let flip_ok = matches!((first_false, last_hold), (Some(f), Some(h)) if f == h + delay);
    let (ok, detail) = summary(&[lights_report, stereo_report]);
    (
        ok && flip_ok,
        format!(
            "{}; stereo last holds at fire {:?} and flips at fire {:?} (DELAY {})",
            detail,
            last_hold.map(|h| h + 1),
            first_false.map(|f| f + 1),
            delay
        ),
    )
}

fn criterion_6(s: &mut Sanity) -> (bool, String) {
    let mut reports = Vec::new();
    for name in ["everywhere", "somewhere"] {
        let e = entry(name).unwrap();
        let base = e.scenario_config().unwrap();
        for i in 0..10 {
            let mut cfg = base.clone();
            cfg.seed = 70 + i;
            reports.push(check(&e, &cfg, s));
        }
    }
    summary(&reports)
}

fn criterion_7(s: &mut Sanity) -> (bool, String) {
    let mut reports = Vec::new();
    let mut sizes = Vec::new();
    for name in ["elliptic-channel", "channel"] {
        let e = entry(name).unwrap();
        let shipped = e.scenario_config().unwrap();
        for width in [0.0, 2.0, 4.0] {
            let mut corners = shipped.clone();
            only(&mut corners, "source", 0);
            only(&mut corners, "dest", 99);
            corners.sensors.get_mut("value").unwrap().devices.clear();
            corners.set_sensor("value", 0, LocalValue::Num(1000.0));
            let mut row = shipped.clone();
            for cfg in [&mut corners, &mut row] {
                cfg.set_constant("WIDTH", LocalValue::Num(width));
                let (result, report) = check_entry(&e, cfg).unwrap();
                s.record(name, &result);
                if name == "elliptic-channel" {
                    let inside = result
                        .final_values()
                        .values()
                        .filter(|v| v.as_local().and_then(LocalValue::as_bool) == Some(true))
                        .count();
                    sizes.push(inside);
                }
                reports.push(report);
            }
        }
    }
    let (ok, detail) = summary(&reports);
    (
        ok,
        format!(
            "{}; in-area sizes (corner foci, row foci) per width: {:?}",
            detail, sizes
        ),
    )
}

fn criterion_8(s: &mut Sanity) -> (bool, String) {
    let mut reports = Vec::new();
    let mut model_agree = (0, 0);
    for name in ["samevalue", "monitor"] {
        let e = entry(name).unwrap();
        let base = e.scenario_config().unwrap();
        for i in 0..10 {
            let mut cfg = base.clone();
            cfg.seed = 90 + i;
            let (result, report) = check_entry(&e, &cfg).unwrap();
            s.record(name, &result);
            if name == "samevalue" {
                let g = &result.graph;
                let src = |k: &str| -> BTreeSet<DeviceId> {
                    result
                        .devices
                        .iter()
                        .filter(|(_, d)| d.sensors[k] == LocalValue::Bool(true))
                        .map(|(i, _)| *i)
                        .collect()
                };
                let ds = oracle_bfs(g, &src("source"));
                let dd = oracle_bfs(g, &src("dest"));
                let values: BTreeMap<_, _> = ds.iter().map(|(d, v)| (*d, LocalValue::Num(*v))).collect();
                let model = samevalue_direct_model(g, &values, &dd);
                for (d, v) in result.final_values() {
                    model_agree.1 += 1;
                    if v.as_local().and_then(LocalValue::as_num) == Some(model[&d]) {
                        model_agree.0 += 1;
                    }
                }
            }
            reports.push(report);
        }
    }
    let (ok, detail) = summary(&reports);
    (
        ok,
        format!(
            "{}; the program's direct fixed point matches the interpreter at {}/{} devices",
            detail, model_agree.0, model_agree.1
        ),
    )
}

fn criterion_9(s: &Sanity) -> (bool, String) {
    (
        s.problems.is_empty() && s.runs > 0,
        format!(
            "{} simulations, {} events, problems: {:?}",
            s.runs,
            s.events,
            s.problems.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_10(s: &mut Sanity) -> (bool, String) {
    let mut differ = Vec::new();
    let entries = corpus();
    for e in &entries {
        let cfg = e.scenario_config().unwrap();
        let program = e.program(&cfg.constants_map()).unwrap();
        let a = run(&program, &cfg).unwrap();
        let b = run(&program, &cfg).unwrap();
        s.record(&e.name, &a);
        if a.trace.render(TraceFormat::Records) != b.trace.render(TraceFormat::Records)
            || a.trace.render(TraceFormat::Text) != b.trace.render(TraceFormat::Text)
        {
            differ.push(e.name.clone());
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("trace{}.txt", k));
        let code = fcmon::cli::run_cli_with(
            [
                "fcmon",
                "check",
                "longest-chain",
                "--format",
                "records",
                "--out",
                out.to_str().unwrap(),
            ],
            &mut Vec::new(),
            &mut Vec::new(),
        );
        assert_eq!(code, 0);
        files.push(std::fs::read(out).unwrap());
    }
    let cli_same = files[0] == files[1];
    (
        differ.is_empty() && cli_same,
        format!(
            "{} scenarios run twice, differing: {:?}; repeated CLI output identical: {}",
            entries.len(),
            differ,
            cli_same
        ),
    )
}

fn criterion_11() -> (bool, String) {
    let mut survivors = Vec::new();
    let mut already_red = Vec::new();
    for e in corpus() {
        let call = |extra: &[&str]| {
            let mut args = vec!["fcmon", "check", e.name.as_str()];
            args.extend_from_slice(extra);
            fcmon::cli::run_cli_with(args, &mut Vec::new(), &mut Vec::new())
        };
        if call(&[]) != 0 {
            already_red.push(e.name.clone());
        }
        if call(&["--mutate"]) != 1 {
            survivors.push(e.name.clone());
        }
    }
    (
        survivors.is_empty(),
        format!(
            "{} mutants, surviving: {:?}; vacuous where the original already fails: {:?}",
            corpus().len(),
            survivors,
            already_red
        ),
    )
}

fn adjusting(s: &mut Sanity) -> [(bool, String); 2] {
    let e = entry("adjusting-channel").unwrap();
    let cfg = e.scenario_config().unwrap();
    let consts = cfg.constants_map();
    let (minw, maxw) = (consts["MINW"].as_num().unwrap(), consts["MAXW"].as_num().unwrap());
    let program = e.program(&consts).unwrap();
    let result = run(&program, &cfg).unwrap();
    s.record("adjusting-channel", &result);
    let trees: Vec<_> = result.exports.iter().flatten().collect();
    let status_bad = trees
        .iter()
        .filter(|t| adjusting_status_consistent(t, minw, maxw).is_err())
        .count();
    let width_bad: Vec<String> = trees
        .iter()
        .filter_map(|t| adjusting_width_bounded(t, maxw).err())
        .collect();

    let mutant = e.mutated().unwrap();
    let mutated = run(&mutant.program(&consts).unwrap(), &cfg).unwrap();
    let mutant_caught = mutated
        .exports
        .iter()
        .flatten()
        .any(|t| adjusting_status_consistent(t, minw, maxw).is_err());
    [
        (
            status_bad == 0 && mutant_caught && !trees.is_empty(),
            format!(
                "{} events over {} rounds, {} inconsistent; mutant {} -> {} detected: {}",
                trees.len(),
                cfg.rounds.unwrap_or(0),
                status_bad,
                e.meta.mutation.from,
                e.meta.mutation.to,
                mutant_caught
            ),
        ),
        (
            width_bad.is_empty(),
            format!(
                "{} of {} events out of bounds, first: {}",
                width_bad.len(),
                trees.len(),
                width_bad.first().cloned().unwrap_or_default()
            ),
        ),
    ]
}

fn main() {
    let mut sanity = Sanity::default();
    let mut outcomes = Vec::new();
    let mut go =
        |id: &'static str, title: &'static str, limit: Option<Duration>, f: &mut dyn FnMut() -> (bool, String)| {
            let start = Instant::now();
            let (pass, mut detail) = f();
            let elapsed = start.elapsed();
            let mut pass = pass;
            if let Some(limit) = limit {
                if elapsed > limit {
                    pass = false;
                    detail.push_str(&format!("; took {:?}, limit {:?}", elapsed, limit));
                }
            }
            let o = Outcome {
                id,
                title,
                pass,
                detail,
                elapsed,
            };
            println!(
                "criterion {:<12} {:<4} {:<34} {:>9.2?}  {}",
                o.id,
                if o.pass { "PASS" } else { "FAIL" },
                o.title,
                o.elapsed,
                o.detail
            );
            outcomes.push(o);
        };

    go("1", "parser round trip", Some(Duration::from_secs(1)), &mut criterion_1);
    go("2", "hopcount equals BFS", Some(Duration::from_secs(5)), &mut || {
        criterion_2(&mut sanity)
    });
    go("3", "longest chain on async runs", None, &mut || {
        criterion_3(&mut sanity)
    });
    go("4", "alignment isolation (parity)", None, &mut || {
        criterion_4(&mut sanity)
    });
    go("5", "local monitors", None, &mut || criterion_5(&mut sanity));
    go("6", "everywhere / somewhere", None, &mut || criterion_6(&mut sanity));
    go("7", "channel equals ellipse", None, &mut || criterion_7(&mut sanity));
    go("8", "samevalue / monitor", None, &mut || criterion_8(&mut sanity));
    go("10", "determinism", None, &mut || criterion_10(&mut sanity));
    go("11", "negative controls", None, &mut criterion_11);
    let [status, width] = adjusting(&mut sanity);
    let mut status = Some(status);
    let mut width = Some(width);
    go("adjusting-a", "adjusting: status from estimates", None, &mut || {
        status.take().unwrap()
    });
    go("adjusting-b", "adjusting: width within [1, MAXW]", None, &mut || {
        width.take().unwrap()
    });
    go("9", "event-structure sanity", None, &mut || criterion_9(&sanity));

    let unexpected: Vec<&Outcome> = outcomes
        .iter()
        .filter(|o| o.pass == KNOWN_RED.contains(&o.id))
        .collect();
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!(
        "acceptance: {} of {} pass; expected failures: {:?}",
        passed,
        outcomes.len(),
        KNOWN_RED
    );
    if !unexpected.is_empty() {
        for o in unexpected {
            println!(
                "unexpected outcome for criterion {}: {}",
                o.id,
                if o.pass { "now passes" } else { "fails" }
            );
        }
        std::process::exit(1);
    }
}
