use bosonic_ckp::cli::acceptance_criteria;
use std::time::Instant;

fn main() {
    let start = Instant::now();
    let criteria = acceptance_criteria(None);
    let mut failed = 0;
    for c in &criteria {
        let verdict = if c.pass() { "PASS" } else { "FAIL" };
        if !c.pass() {
            failed += 1;
        }
        println!("{verdict} {:>2} {}: {}", c.number, c.title, c.summary());
    }
    println!("{} of {} criteria pass ({:.1}s)", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
