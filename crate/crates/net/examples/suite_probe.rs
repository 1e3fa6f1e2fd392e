fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let report = groupsod_net::run_gradcheck_suite(seed).unwrap();
    let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
    for c in &failed {
        println!("FAIL {} rel_err={:.3e}", c.name, c.max_rel_err);
    }
    let worst = report.worst();
    println!(
        "seed={seed} elapsed={:.1}s passed={} worst={} ({:.3e})",
        report.seconds,
        report.passed(),
        worst.name,
        worst.max_rel_err
    );
}
