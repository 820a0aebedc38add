//! Acceptance battery: one PASS/FAIL line per criterion.
//!
//! `BIGJUMP_SUITE=quick` selects the reduced sizes; the default is the full
//! battery. `BIGJUMP_CRITERIA=4,5` restricts the run.

use bigjump_cli::run::DEFAULT_SEED;
use bigjump_cli::verify::{verify, Suite, VerifyOptions};
use std::process::ExitCode;

fn main() -> ExitCode {
    let suite = match std::env::var("BIGJUMP_SUITE").as_deref() {
        Ok("quick") => Suite::Quick,
        _ => Suite::Full,
    };
    let mut opts = VerifyOptions::new(suite, DEFAULT_SEED);
    if let Ok(list) = std::env::var("BIGJUMP_CRITERIA") {
        opts.only = list
            .split(',')
            .filter_map(|s| s.trim().parse().ok())
            .collect();
    }
    println!("acceptance battery ({suite:?}, seed {})", opts.seed);
    let results = verify(&opts, |r| {
        println!("{}", r.summary());
        for c in &r.checks {
            println!("    {c}");
        }
    });
    let failed: Vec<u8> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
