//! Reads an image (PNG, PGM or PPM), reports its channels and writes 8- and
//! 16-bit copies. Without an argument a synthetic image is used.
//!
//! ```text
//! cargo run --release --example raster_io [IMAGE] [OUT_DIR]
//! ```

use std::path::PathBuf;

use osmosis::raster::{read_image_with_depth, write_image, BitDepth};
use osmosis::synthetic::textured_ground_truth;
use osmosis::MultiChannelImage;

fn main() -> osmosis::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out_dir = PathBuf::from(args.get(1).cloned().unwrap_or("target/examples-out".into()));
    std::fs::create_dir_all(&out_dir).expect("create output directory");

    let (img, depth) = match args.first() {
        Some(path) => read_image_with_depth(path)?,
        None => (
            MultiChannelImage::gray(textured_ground_truth(200, 120, 5)),
            BitDepth::Eight,
        ),
    };
    let (w, h) = img.dims();
    println!(
        "{w}x{h}, {:?}, {} channel(s), {depth:?}",
        img.kind(),
        img.channel_count()
    );
    for (c, ch) in img.channels().iter().enumerate() {
        println!(
            "channel {c}: min {:.1}, max {:.1}, mean {:.3}",
            ch.min(),
            ch.max(),
            ch.mean()
        );
    }

    let ext = if img.channel_count() == 1 {
        "pgm"
    } else {
        "ppm"
    };
    let p16 = out_dir.join(format!("raster_16bit.{ext}"));
    write_image(&img, &p16, BitDepth::Sixteen)?;
    write_image(&img, out_dir.join("raster_8bit.png"), BitDepth::Eight)?;

    // 16-bit PGM/PPM round trips integer samples exactly.
    let (back, _) = read_image_with_depth(&p16)?;
    let exact = back
        .channels()
        .iter()
        .zip(img.channels())
        .all(|(a, b)| a.max_abs_diff(&b.map(f64::round).unwrap()) == 0.0);
    println!(
        "16-bit round trip exact: {exact}; files in {}",
        out_dir.display()
    );
    Ok(())
}
