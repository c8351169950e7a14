//! Runs explicit Euler, implicit Euler and multiplicative splitting (MOS) to
//! the same steady state and compares iteration counts and time.
//!
//! ```text
//! cargo run --release --example scheme_comparison [SIZE]
//! ```

use std::time::Instant;

use osmosis::synthetic::random_field;
use osmosis::{canonical_drift, evolve, stable_timestep, SchemeConfig};

fn main() -> osmosis::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .map_or(64, |s| s.parse().expect("SIZE must be an integer"));
    let guide = random_field(n, n, 1.0, 255.0, 1);
    let start = random_field(n, n, 1.0, 255.0, 2);
    let d = canonical_drift(&guide)?;
    let steady = guide.scaled(start.total_mass() / guide.total_mass())?;
    let explicit_tau = stable_timestep(&d);

    println!("{n}x{n}, explicit stability limit tau = {explicit_tau:.4}");
    println!(
        "{:<9} {:>10} {:>8} {:>10} {:>10}",
        "scheme", "tau", "steps", "seconds", "error"
    );
    for cfg in [
        SchemeConfig::explicit(explicit_tau),
        SchemeConfig::implicit(1000.0, 1e-10),
        SchemeConfig::mos(1000.0),
    ] {
        let cfg = cfg.with_steady_tol(1e-10).with_max_steps(1_000_000);
        let t = Instant::now();
        let (u, report) = evolve(&start, &d, &cfg)?;
        let err = u.max_abs_diff(&steady) / steady.max();
        println!(
            "{:<9} {:>10.4} {:>8} {:>10.3} {:>10.2e}",
            cfg.scheme.to_string(),
            cfg.tau,
            report.iterations(),
            t.elapsed().as_secs_f64(),
            err
        );
    }
    Ok(())
}
