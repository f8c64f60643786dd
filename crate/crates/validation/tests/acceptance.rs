//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Numeric arguments select a subset, e.g. `cargo test --test acceptance -- 4 5`.
//! Exits with status 1 when any selected criterion fails.

fn main() {
    let selected: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (i, criterion) in lmsm_validation::all().into_iter().enumerate() {
        let id = i as u8 + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let verdict = criterion();
        println!("{}", verdict.line());
        for line in &verdict.info {
            println!("    {line}");
        }
        if !verdict.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria PASS");
    } else {
        println!("acceptance: FAIL for criteria {failed:?}");
        std::process::exit(1);
    }
}
