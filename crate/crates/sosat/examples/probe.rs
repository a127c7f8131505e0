use std::time::Instant;
use sosat::cegis::{solve, SolverConfig};
use sosat::encodings::loops::{encode_safety, parse_loop_file};
use sosat::synth::StrategyKind;

fn main() {
    let text = std::fs::read_to_string("/tmp/count.loop").unwrap();
    let file = parse_loop_file(&text).unwrap();
    let f = encode_safety(&file.system, file.assertion.as_ref().unwrap(), file.width).unwrap();
    let inst = f.skolemize();
    let cfg = SolverConfig {
        strategies: vec![StrategyKind::Symbolic],
        deterministic: true,
        timeout: Some(std::time::Duration::from_secs(20)),
        ..SolverConfig::default()
    };
    let t = Instant::now();
    let r = solve(&inst, &cfg).unwrap();
    println!("verdict={} in {:?}", r.verdict.name(), t.elapsed());
    println!("stats: iters={} synth_ms={} verif_ms={} final l={} c={} w={}",
        r.stats.iterations, r.stats.synth_ms, r.stats.verif_ms,
        r.stats.final_length, r.stats.final_consts, r.stats.final_width);
    for e in r.log.events.iter().take(40) {
        println!("{:?}", e);
    }
}
