//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;

use padicx::checks;

fn main() -> ExitCode {
    let outcomes = checks::run_suite("all").expect("suite exists");
    assert_eq!(outcomes.len(), 14);
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!("{} of 14 criteria passed", 14 - failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
