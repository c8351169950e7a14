//! Times single time steps of each scheme on synthetic images of growing
//! size.
//!
//! ```text
//! cargo run --release --example throughput [MEGAPIXELS...]
//! ```

use osmosis::bench::{reference_header, run_bench};
use osmosis::{Scheme, SchemeConfig};

fn main() -> osmosis::Result<()> {
    let sizes: Vec<usize> = {
        let args: Vec<usize> = std::env::args()
            .skip(1)
            .map(|s| (s.parse::<f64>().expect("sizes are megapixel counts") * 1e6) as usize)
            .collect();
        if args.is_empty() {
            vec![250_000, 1_000_000]
        } else {
            args
        }
    };
    let rows = run_bench(
        &sizes,
        &[Scheme::Explicit, Scheme::Implicit, Scheme::Mos],
        &SchemeConfig::default(),
        5,
        0,
    )?;
    for line in reference_header() {
        println!("# {line}");
    }
    println!(
        "{:<9} {:>11} {:>9} {:>12} {:>12}",
        "scheme", "pixels", "tau", "s/step", "pixels/s"
    );
    for r in &rows {
        println!(
            "{:<9} {:>11} {:>9.3} {:>12.5} {:>12.3e}",
            r.scheme, r.pixels, r.tau, r.seconds_per_iteration, r.pixels_per_second
        );
    }
    Ok(())
}
