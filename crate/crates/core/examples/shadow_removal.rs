//! Removes a synthetic multiplicative shadow and reports how closely the
//! result matches the unshadowed image.
//!
//! ```text
//! cargo run --release --example shadow_removal [OUT_DIR]
//! ```
//!
//! Writes `shadow_input.pgm`, `shadow_mask.pgm` and `shadow_output.pgm` to
//! `OUT_DIR` (default `target/examples-out`).

use std::path::PathBuf;

use osmosis::raster::{write_image, write_labels, BitDepth};
use osmosis::synthetic::{apply_gains, central_rect_mask, textured_ground_truth};
use osmosis::{remove_shadow, MultiChannelImage, PipelineParams};

fn main() -> osmosis::Result<()> {
    let out_dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or("target/examples-out".into()),
    );
    std::fs::create_dir_all(&out_dir).expect("create output directory");

    let n = 512;
    let truth = textured_ground_truth(n, n, 7);
    let mask = central_rect_mask(n, n, 0.4);
    let shadowed = MultiChannelImage::gray(apply_gains(&truth, &mask, &[1.0, 0.4]));

    let out = remove_shadow(&shadowed, &mask, &PipelineParams::default())?;
    let result = &out.image.channels()[0];
    let report = &out.reports[0];

    // Compare against the truth up to one global factor.
    let (num, den) = result
        .values()
        .iter()
        .zip(truth.values())
        .fold((0.0, 0.0), |(a, b), (u, g)| (a + u * g, b + g * g));
    let c = num / den;
    let (se, ss) = result
        .values()
        .iter()
        .zip(truth.values())
        .fold((0.0, 0.0), |(a, b), (u, g)| {
            (a + (u - c * g).powi(2), b + (c * g).powi(2))
        });

    println!(
        "{n}x{n} shadow (gain 0.4) removed in {} MOS steps, {:.2} s",
        report.iterations(),
        report.total_wall_time()
    );
    println!(
        "output = {c:.4} x truth, relative RMSE {:.3}%",
        100.0 * (se / ss).sqrt()
    );

    write_image(&shadowed, out_dir.join("shadow_input.pgm"), BitDepth::Eight)?;
    write_labels(&mask, out_dir.join("shadow_mask.pgm"))?;
    write_image(
        &out.image,
        out_dir.join("shadow_output.pgm"),
        BitDepth::Eight,
    )?;
    println!("images written to {}", out_dir.display());
    Ok(())
}
