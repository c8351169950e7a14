//! Evolves a colour image under the drift of a grayscale guide. Short runs
//! blend the two; a run to steadiness gives the guide's structure with the
//! colour image's per-channel mean.
//!
//! ```text
//! cargo run --release --example data_fusion [OUT_DIR]
//! ```

use std::path::PathBuf;

use osmosis::raster::{write_image, BitDepth};
use osmosis::synthetic::textured_ground_truth;
use osmosis::{fuse, ChannelKind, MultiChannelImage, PipelineParams, ScalarField, SchemeConfig};

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += (x - ma) * (y - mb);
        aa += (x - ma).powi(2);
        bb += (y - mb).powi(2);
    }
    ab / (aa * bb).sqrt()
}

fn main() -> osmosis::Result<()> {
    let out_dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or("target/examples-out".into()),
    );
    std::fs::create_dir_all(&out_dir).expect("create output directory");

    let (w, h) = (384, 256);
    let guide = MultiChannelImage::gray(textured_ground_truth(w, h, 21));
    // A flat, low-detail colour layer: horizontal colour ramps.
    let init = MultiChannelImage::new(
        (0..3)
            .map(|c| ScalarField::from_fn(w, h, |x, _| 60.0 + 40.0 * c as f64 + 0.1 * x as f64))
            .collect::<osmosis::Result<Vec<_>>>()?,
        ChannelKind::Rgb,
    )?;
    write_image(&init, out_dir.join("fusion_init.ppm"), BitDepth::Eight)?;
    write_image(&guide, out_dir.join("fusion_guide.pgm"), BitDepth::Eight)?;

    for (steps, tau) in [(1, 1.0), (1, 50.0), (5000, 1000.0)] {
        let p = PipelineParams {
            scheme: SchemeConfig::mos(tau)
                .with_steady_tol(1e-12)
                .with_max_steps(steps),
            ..PipelineParams::default()
        };
        let out = fuse(&init, &guide, &p)?;
        let red = &out.image.channels()[0];
        println!(
            "tau {tau:>6}, {:>4} step(s): red mean {:.3}, correlation with guide {:.4}, converged {}",
            out.reports[0].iterations(),
            red.mean(),
            correlation(red.values(), guide.channels()[0].values()),
            out.reports[0].converged
        );
        let name = format!("fusion_tau{tau}_steps{}.ppm", out.reports[0].iterations());
        write_image(&out.image, out_dir.join(name), BitDepth::Eight)?;
    }
    println!("images written to {}", out_dir.display());
    Ok(())
}
