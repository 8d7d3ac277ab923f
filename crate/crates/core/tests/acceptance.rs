//! Runs the full reproduction suite and prints one PASS/FAIL line per
//! criterion, followed by its detail lines.

use treepark::repro::{Repro, CRITERIA, REPRO_SEED};

fn main() {
    let ids: Vec<u8> = match std::env::var("TREEPARK_CRITERIA") {
        Ok(list) => list
            .split(',')
            .map(|s| s.trim().parse().expect("criterion numbers"))
            .collect(),
        Err(_) => CRITERIA.iter().map(|(id, _)| *id).collect(),
    };
    let outcomes = Repro::new(REPRO_SEED)
        .run(&ids, |o| {
            println!("{}", o.summary_line());
            for d in &o.details {
                println!("      {d}");
            }
        })
        .expect("reproduction suite");
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed", outcomes.len());
}
