//! Builds the canonical drift of an image, gates it along a shadow mask and
//! tile seams, and prints the structural checks of the resulting operator.
//!
//! ```text
//! cargo run --release --example drift_inspection
//! ```

use osmosis::operators::{is_irreducible, off_diagonals_nonnegative};
use osmosis::synthetic::{disk_mask, grid_tiles, textured_ground_truth};
use osmosis::{
    apply_a, canonical_drift, column_sum_defect, gate_label_seams, gate_mask_boundary,
    stable_timestep, DriftField,
};

fn describe(name: &str, d: &DriftField) {
    let (zx, zy) = d.zeroed_faces();
    println!(
        "{name:<16} max|d|h {:.4}  zero faces {:>4}/{:<5} column-sum defect {:.1e}  off-diag >= 0 {}  irreducible {}  explicit tau <= {:.4}",
        d.max_scaled_magnitude(),
        zx + zy,
        d.d1().len() + d.d2().len(),
        column_sum_defect(d),
        off_diagonals_nonnegative(d),
        is_irreducible(d),
        stable_timestep(d)
    );
}

fn main() -> osmosis::Result<()> {
    let (w, h) = (96, 64);
    let v = textured_ground_truth(w, h, 3);
    let d = canonical_drift(&v)?;
    describe("canonical", &d);

    let mask = disk_mask(w, h, 48.0, 32.0, 20.0);
    describe("disk gate", &gate_mask_boundary(&d, &mask, 0)?);
    describe("disk gate, band 2", &gate_mask_boundary(&d, &mask, 2)?);
    describe(
        "3x2 tile seams",
        &gate_label_seams(&d, &grid_tiles(w, h, 3, 2))?,
    );

    // The guide is a steady state of its own canonical drift.
    let residual = apply_a(&v, &d)?;
    let worst = residual.values().iter().fold(0.0f64, |m, r| m.max(r.abs()));
    println!("max |A v| for the guide itself: {worst:.2e}");
    Ok(())
}
