//! Deterministic synthetic inputs: textured ground truths, shadow and tile
//! layouts, random positive fields. Everything is seeded so benchmark and
//! verification runs are reproducible.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{LabelMap, ScalarField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent uniform samples in `[lo, hi)`.
pub fn random_field(width: usize, height: usize, lo: f64, hi: f64, seed: u64) -> ScalarField {
    let mut r = rng(seed);
    ScalarField::from_fn(width, height, |_, _| r.gen_range(lo..hi)).expect("valid random field")
}

/// A smooth positive image with structure at several scales, roughly in
/// `[70, 230]`: two broad waves, a mid-scale pattern and faint fine detail.
pub fn textured_ground_truth(width: usize, height: usize, seed: u64) -> ScalarField {
    let mut r = rng(seed);
    let size = width.max(height) as f64;
    // (amplitude, period range in pixels)
    let specs = [
        (35.0, 0.6 * size, 1.2 * size),
        (20.0, 0.25 * size, 0.5 * size),
        (8.0, (0.05 * size).max(16.0), (0.1 * size).max(24.0)),
        (3.0, 12.0, 20.0),
    ];
    let waves: Vec<_> = specs
        .iter()
        .map(|&(amp, plo, phi)| {
            let period: f64 = r.gen_range(plo..phi);
            let angle: f64 = r.gen_range(0.0..TAU);
            let phase: f64 = r.gen_range(0.0..TAU);
            (amp, angle.cos() / period, angle.sin() / period, phase)
        })
        .collect();
    ScalarField::from_fn(width, height, |x, y| {
        let (x, y) = (x as f64, y as f64);
        150.0
            + waves
                .iter()
                .map(|&(a, kx, ky, ph)| a * (TAU * (kx * x + ky * y) + ph).sin())
                .sum::<f64>()
    })
    .expect("valid texture")
}

/// An axis-aligned rectangle of ones covering the central part of the
/// image; `fraction` is its side relative to the image side.
pub fn central_rect_mask(width: usize, height: usize, fraction: f64) -> LabelMap {
    let (rw, rh) = (
        (width as f64 * fraction).round() as usize,
        (height as f64 * fraction).round() as usize,
    );
    let (x0, y0) = ((width - rw) / 2, (height - rh) / 2);
    LabelMap::from_fn(width, height, |x, y| {
        u32::from((x0..x0 + rw).contains(&x) && (y0..y0 + rh).contains(&y))
    })
    .expect("valid mask")
}

/// A filled disk of ones.
pub fn disk_mask(width: usize, height: usize, cx: f64, cy: f64, radius: f64) -> LabelMap {
    LabelMap::from_fn(width, height, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        u32::from(dx * dx + dy * dy <= radius * radius)
    })
    .expect("valid mask")
}

/// `cols x rows` equal tiles labelled row by row starting at 0.
pub fn grid_tiles(width: usize, height: usize, cols: usize, rows: usize) -> LabelMap {
    LabelMap::from_fn(width, height, |x, y| {
        let tx = (x * cols / width).min(cols - 1);
        let ty = (y * rows / height).min(rows - 1);
        (ty * cols + tx) as u32
    })
    .expect("valid tiles")
}

/// Multiplies each pixel by `gains[label]`.
pub fn apply_gains(field: &ScalarField, labels: &LabelMap, gains: &[f64]) -> ScalarField {
    let (w, _) = field.dims();
    let vals = field
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * gains[labels.get(i % w, i / w) as usize])
        .collect();
    ScalarField::new(field.width(), field.height(), vals).expect("valid scaled field")
}
