//! Face-centered drift fields and their gating.
//!
//! `d1` lives on the vertical cell faces between horizontally adjacent
//! pixels: entry `y * (width - 1) + x` is the drift at `(x + 1/2, y)`.
//! `d2` lives on the horizontal faces between vertically adjacent pixels:
//! entry `y * width + x` is the drift at `(x, y + 1/2)`. Faces on the domain
//! boundary are not stored; they carry zero flux.

use crate::error::{Error, Result};
use crate::grid::{LabelMap, ScalarField};

#[derive(Clone, Debug, PartialEq)]
pub struct DriftField {
    width: usize,
    height: usize,
    h: f64,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl DriftField {
    pub fn zeros(width: usize, height: usize, h: f64) -> Result<Self> {
        Self::from_components(
            width,
            height,
            h,
            vec![0.0; (width.max(1) - 1) * height],
            vec![0.0; width * (height.max(1) - 1)],
        )
    }

    pub fn from_components(
        width: usize,
        height: usize,
        h: f64,
        d1: Vec<f64>,
        d2: Vec<f64>,
    ) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::GridTooSmall { width, height });
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive and finite, got {h}"
            )));
        }
        if d1.len() != (width - 1) * height || d2.len() != width * (height - 1) {
            return Err(Error::InvalidParameter(format!(
                "drift components have lengths {} and {}, expected {} and {}",
                d1.len(),
                d2.len(),
                (width - 1) * height,
                width * (height - 1)
            )));
        }
        if d1.iter().chain(&d2).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "drift contains non-finite entries".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            h,
            d1,
            d2,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// x-face components, `(width - 1) * height` entries.
    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    /// y-face components, `width * (height - 1)` entries.
    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    pub fn d1_mut(&mut self) -> &mut [f64] {
        &mut self.d1
    }

    pub fn d2_mut(&mut self) -> &mut [f64] {
        &mut self.d2
    }

    /// Drift at the face `(x + 1/2, y)`.
    #[inline]
    pub fn x_face(&self, x: usize, y: usize) -> f64 {
        self.d1[y * (self.width - 1) + x]
    }

    /// Drift at the face `(x, y + 1/2)`.
    #[inline]
    pub fn y_face(&self, x: usize, y: usize) -> f64 {
        self.d2[y * self.width + x]
    }

    /// `max |d| * h` over all faces. Values `<= 2` keep every off-diagonal
    /// coefficient of the discrete operator non-negative.
    pub fn max_scaled_magnitude(&self) -> f64 {
        self.d1
            .iter()
            .chain(&self.d2)
            .fold(0.0f64, |m, d| m.max(d.abs()))
            * self.h
    }

    pub fn zeroed_faces(&self) -> (usize, usize) {
        (
            self.d1.iter().filter(|&&d| d == 0.0).count(),
            self.d2.iter().filter(|&&d| d == 0.0).count(),
        )
    }
}

/// Discrete `grad log v` in ratio form, `2 (v1 - v0) / (h (v1 + v0))` per
/// face. With this choice the discrete flux `(v1 - v0)/h - d (v1 + v0)/2`
/// vanishes identically, so `v` is an exact steady state of the operator.
pub fn canonical_drift(v: &ScalarField) -> Result<DriftField> {
    v.ensure_positive()?;
    let (w, hgt) = v.dims();
    let h = v.spacing();
    let vals = v.values();
    let ratio = |a: f64, b: f64| 2.0 * (b - a) / (h * (b + a));

    let mut d1 = Vec::with_capacity((w - 1) * hgt);
    for row in vals.chunks_exact(w) {
        d1.extend(row.windows(2).map(|p| ratio(p[0], p[1])));
    }
    let mut d2 = Vec::with_capacity(w * (hgt - 1));
    for (top, bottom) in vals.chunks_exact(w).zip(vals.chunks_exact(w).skip(1)) {
        d2.extend(top.iter().zip(bottom).map(|(&a, &b)| ratio(a, b)));
    }
    DriftField::from_components(w, hgt, h, d1, d2)
}

/// Zeroes the drift on every face crossing a boundary of the binary `mask`.
/// With `band > 0`, faces up to `band` positions away from a crossing face
/// along the same grid line are zeroed too.
pub fn gate_mask_boundary(d: &DriftField, mask: &LabelMap, band: usize) -> Result<DriftField> {
    check_label_dims(d, mask)?;
    mask.ensure_binary()?;
    Ok(gate_where_labels_differ(d, mask, band))
}

/// Zeroes the drift on every face separating two different tile labels.
pub fn gate_label_seams(d: &DriftField, tiles: &LabelMap) -> Result<DriftField> {
    check_label_dims(d, tiles)?;
    Ok(gate_where_labels_differ(d, tiles, 0))
}

fn check_label_dims(d: &DriftField, labels: &LabelMap) -> Result<()> {
    if labels.dims() != d.dims() {
        return Err(Error::DimensionMismatch {
            what: "label map",
            expected: d.dims(),
            found: labels.dims(),
        });
    }
    Ok(())
}

fn gate_where_labels_differ(d: &DriftField, labels: &LabelMap, band: usize) -> DriftField {
    let (w, hgt) = d.dims();
    let mut out = d.clone();

    // x-faces: lines are rows, faces indexed by x in 0..w-1.
    let mut crossing = vec![false; w - 1];
    for y in 0..hgt {
        for (x, c) in crossing.iter_mut().enumerate() {
            *c = labels.get(x, y) != labels.get(x + 1, y);
        }
        let row = &mut out.d1[y * (w - 1)..(y + 1) * (w - 1)];
        zero_banded(row, &crossing, band, |k| k);
    }

    // y-faces: lines are columns, faces indexed by y in 0..hgt-1.
    let mut crossing = vec![false; hgt - 1];
    for x in 0..w {
        for (y, c) in crossing.iter_mut().enumerate() {
            *c = labels.get(x, y) != labels.get(x, y + 1);
        }
        zero_banded(&mut out.d2, &crossing, band, |k| k * w + x);
    }
    out
}

fn zero_banded(faces: &mut [f64], crossing: &[bool], band: usize, index: impl Fn(usize) -> usize) {
    let n = crossing.len();
    for (k, _) in crossing.iter().enumerate().filter(|(_, &c)| c) {
        let lo = k.saturating_sub(band);
        let hi = (k + band).min(n - 1);
        for j in lo..=hi {
            faces[index(j)] = 0.0;
        }
    }
}
