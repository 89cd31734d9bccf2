use std::time::Instant;
use vgoalmc::lang::parse_spec;
use vgoalmc::ts::{build_ts, BuildOptions};

fn main() {
    let path = std::env::args().nth(1).expect("path");
    let cap: usize = std::env::args().nth(2).map(|s| s.parse().expect("cap")).unwrap_or(1_000_000);
    let text = std::fs::read_to_string(&path).unwrap();
    let spec = parse_spec(&text).unwrap();
    let t0 = Instant::now();
    match build_ts(&spec, &BuildOptions { state_cap: cap }) {
        Ok((_ts, stats)) => println!(
            "ok: states={} transitions={} expanded={} replayed={} in {:?}",
            stats.states, stats.transitions, stats.expanded, stats.replayed, t0.elapsed()
        ),
        Err(e) => println!("err after {:?}: {e}", t0.elapsed()),
    }
}
