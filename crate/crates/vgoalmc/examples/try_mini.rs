use std::time::Instant;
use vgoalmc::equiv::bisimilar_ts;
use vgoalmc::lang::parse_spec;
use vgoalmc::ts::{build_ts, build_ts_naive, complete_self_loops, BuildOptions};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "crates/vgoalmc/fixtures/mini_move.vg".into());
    let verbose = std::env::args().nth(2).is_some();
    let text = std::fs::read_to_string(&path).unwrap();
    let spec = parse_spec(&text).unwrap();
    for d in vgoalmc::lang::validate(&spec) {
        println!("diag: {d}");
    }
    let t0 = Instant::now();
    let (ts, stats) = build_ts(&spec, &BuildOptions::default()).unwrap();
    println!(
        "memo:  states={} transitions={} expanded={} replayed={} ({:?})",
        stats.states, stats.transitions, stats.expanded, stats.replayed, t0.elapsed()
    );
    let t1 = Instant::now();
    let (naive, nstats) = build_ts_naive(&spec, &BuildOptions::default()).unwrap();
    println!(
        "naive: states={} transitions={} ({:?})",
        nstats.states, nstats.transitions, t1.elapsed()
    );
    if verbose {
        for (i, s) in ts.states.iter().enumerate() {
            println!("  {i}: {s} {}", if ts.finals.contains(&i) { "(final)" } else { "" });
        }
        for (s, a, d) in &ts.transitions {
            println!("  {s} --{a}--> {d}");
        }
    }
    let t2 = Instant::now();
    let r = bisimilar_ts(&complete_self_loops(&ts), &complete_self_loops(&naive)).unwrap();
    println!("bisimilar: {} ({:?})", r.equivalent, t2.elapsed());
    println!("finals: {} initial: {:?}", ts.finals.len(), ts.initial);
}
