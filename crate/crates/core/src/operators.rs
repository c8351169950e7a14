//! The discrete osmosis operator `A = A1 + A2`.
//!
//! Each interior face between a pixel `lo` and its right (or lower)
//! neighbour `hi` carries two coupling coefficients:
//!
//! * `forward  = 1/h^2 + d/(2h)`, the weight of `u[lo]` in row `hi`,
//! * `backward = 1/h^2 - d/(2h)`, the weight of `u[hi]` in row `lo`,
//!
//! and the diagonal of each row collects the negated weights of its own
//! column, so every column of `A` sums to zero. Boundary faces carry no
//! flux, which is the discrete no-flux condition.

use rayon::prelude::*;

use crate::drift::DriftField;
use crate::error::{Error, Result};
use crate::grid::ScalarField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

#[inline]
pub(crate) fn forward_coeff(d: f64, h: f64) -> f64 {
    1.0 / (h * h) + d / (2.0 * h)
}

#[inline]
pub(crate) fn backward_coeff(d: f64, h: f64) -> f64 {
    1.0 / (h * h) - d / (2.0 * h)
}

fn check_dims(u: &ScalarField, d: &DriftField) -> Result<()> {
    if u.dims() != d.dims() {
        return Err(Error::DimensionMismatch {
            what: "drift field",
            expected: u.dims(),
            found: d.dims(),
        });
    }
    Ok(())
}

/// Matrix-free `(A1 + A2) u`.
///
/// Computed in flux form: each face flux is evaluated once and added to one
/// neighbour and subtracted from the other, so the output sums to zero up to
/// rounding for any `u` and `d`.
pub fn apply_a(u: &ScalarField, d: &DriftField) -> Result<ScalarField> {
    check_dims(u, d)?;
    let mut out = vec![0.0; u.len()];
    apply_a_into(u.values(), d, &mut out);
    Ok(ScalarField::from_parts(
        u.width(),
        u.height(),
        u.spacing(),
        out,
    ))
}

/// Rows handed to one rayon task, so that small images are not split into
/// tasks cheaper than their scheduling.
pub(crate) fn rows_per_task(width: usize) -> usize {
    (8192 / width).max(1)
}

pub(crate) fn apply_a_into(u: &[f64], d: &DriftField, out: &mut [f64]) {
    let (w, hgt) = d.dims();
    let h = d.spacing();
    let d1 = d.d1();
    let d2 = d.d2();

    out.par_chunks_mut(w)
        .with_min_len(rows_per_task(w))
        .enumerate()
        .for_each(|(y, row)| {
            let here = &u[y * w..(y + 1) * w];
            row.fill(0.0);
            for x in 0..w - 1 {
                let dd = d1[y * (w - 1) + x];
                let flux = backward_coeff(dd, h) * here[x + 1] - forward_coeff(dd, h) * here[x];
                row[x] += flux;
                row[x + 1] -= flux;
            }
            if y > 0 {
                let above = &u[(y - 1) * w..y * w];
                let faces = &d2[(y - 1) * w..y * w];
                for x in 0..w {
                    let flux = backward_coeff(faces[x], h) * here[x]
                        - forward_coeff(faces[x], h) * above[x];
                    row[x] -= flux;
                }
            }
            if y + 1 < hgt {
                let below = &u[(y + 1) * w..(y + 2) * w];
                let faces = &d2[y * w..(y + 1) * w];
                for x in 0..w {
                    let flux = backward_coeff(faces[x], h) * below[x]
                        - forward_coeff(faces[x], h) * here[x];
                    row[x] += flux;
                }
            }
        });
}

/// Explicit 5-point coefficients of `A`, one entry per pixel and neighbour.
///
/// Row `i` of `A` reads
/// `center[i] u[i] + west[i] u[i-1] + east[i] u[i+1] + north[i] u[i-w] + south[i] u[i+w]`;
/// coefficients pointing outside the grid are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    pub width: usize,
    pub height: usize,
    pub center: Vec<f64>,
    pub west: Vec<f64>,
    pub east: Vec<f64>,
    pub north: Vec<f64>,
    pub south: Vec<f64>,
}

impl Stencil {
    pub fn assemble(d: &DriftField) -> Self {
        let (w, hgt) = d.dims();
        let h = d.spacing();
        let n = w * hgt;
        let mut s = Stencil {
            width: w,
            height: hgt,
            center: vec![0.0; n],
            west: vec![0.0; n],
            east: vec![0.0; n],
            north: vec![0.0; n],
            south: vec![0.0; n],
        };
        for y in 0..hgt {
            for x in 0..w - 1 {
                let dd = d.x_face(x, y);
                let lo = y * w + x;
                s.east[lo] = backward_coeff(dd, h);
                s.west[lo + 1] = forward_coeff(dd, h);
            }
        }
        for y in 0..hgt - 1 {
            for x in 0..w {
                let dd = d.y_face(x, y);
                let lo = y * w + x;
                s.south[lo] = backward_coeff(dd, h);
                s.north[lo + w] = forward_coeff(dd, h);
            }
        }
        // Column i collects west[i+1], east[i-1], north[i+w], south[i-w].
        for i in 0..n {
            let (x, y) = (i % w, i / w);
            let mut out = 0.0;
            if x + 1 < w {
                out += s.west[i + 1];
            }
            if x > 0 {
                out += s.east[i - 1];
            }
            if y + 1 < hgt {
                out += s.north[i + w];
            }
            if y > 0 {
                out += s.south[i - w];
            }
            s.center[i] = -out;
        }
        s
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let w = self.width;
        (0..u.len())
            .map(|i| {
                let (x, y) = (i % w, i / w);
                let mut acc = self.center[i] * u[i];
                if x > 0 {
                    acc += self.west[i] * u[i - 1];
                }
                if x + 1 < w {
                    acc += self.east[i] * u[i + 1];
                }
                if y > 0 {
                    acc += self.north[i] * u[i - w];
                }
                if y + 1 < self.height {
                    acc += self.south[i] * u[i + w];
                }
                acc
            })
            .collect()
    }

    /// `A^T z`: the entry at pixel `i` is the dot product of column `i` with `z`.
    pub fn apply_transpose(&self, z: &[f64]) -> Vec<f64> {
        let w = self.width;
        (0..z.len())
            .map(|i| {
                let (x, y) = (i % w, i / w);
                let mut acc = self.center[i] * z[i];
                if x + 1 < w {
                    acc += self.west[i + 1] * z[i + 1];
                }
                if x > 0 {
                    acc += self.east[i - 1] * z[i - 1];
                }
                if y + 1 < self.height {
                    acc += self.north[i + w] * z[i + w];
                }
                if y > 0 {
                    acc += self.south[i - w] * z[i - w];
                }
                acc
            })
            .collect()
    }

    /// Largest `|column sum|`, evaluated as `A^T 1`.
    pub fn column_sum_defect(&self) -> f64 {
        let ones = vec![1.0; self.center.len()];
        self.apply_transpose(&ones)
            .into_iter()
            .fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn min_off_diagonal(&self) -> f64 {
        let w = self.width;
        let mut m = f64::INFINITY;
        for i in 0..self.center.len() {
            let (x, y) = (i % w, i / w);
            if x > 0 {
                m = m.min(self.west[i]);
            }
            if x + 1 < w {
                m = m.min(self.east[i]);
            }
            if y > 0 {
                m = m.min(self.north[i]);
            }
            if y + 1 < self.height {
                m = m.min(self.south[i]);
            }
        }
        m
    }
}

pub fn column_sum_defect(d: &DriftField) -> f64 {
    Stencil::assemble(d).column_sum_defect()
}

/// True when every off-diagonal coefficient `1/h^2 -+ d/(2h)` is `>= 0`,
/// i.e. `max |d| h <= 2`.
pub fn off_diagonals_nonnegative(d: &DriftField) -> bool {
    let h = d.spacing();
    d.d1()
        .iter()
        .chain(d.d2())
        .all(|&dd| forward_coeff(dd, h) >= 0.0 && backward_coeff(dd, h) >= 0.0)
}

/// True when every neighbour coupling is strictly positive in both
/// directions. The pixel grid is connected, so `A` is then irreducible.
/// Gating only removes the drift part of a coupling, never the diffusive
/// `1/h^2`, so gated canonical drifts stay irreducible.
pub fn is_irreducible(d: &DriftField) -> bool {
    let h = d.spacing();
    d.d1()
        .iter()
        .chain(d.d2())
        .all(|&dd| forward_coeff(dd, h) > 0.0 && backward_coeff(dd, h) > 0.0)
}

/// A batch of independent tridiagonal systems `I - tau A_axis`, one per grid
/// line along `axis`. Line `l` occupies `diag[l*n..(l+1)*n]` and
/// `lower[l*(n-1)..]`, `upper[l*(n-1)..]`; `lower[k]` sits at row `k+1`,
/// column `k` and `upper[k]` at row `k`, column `k+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSystem {
    pub axis: Axis,
    pub line_len: usize,
    pub line_count: usize,
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Borrowed view of one line of a [`LineSystem`].
#[derive(Clone, Copy, Debug)]
pub struct Tridiagonal<'a> {
    pub lower: &'a [f64],
    pub diag: &'a [f64],
    pub upper: &'a [f64],
}

impl LineSystem {
    pub fn line(&self, l: usize) -> Tridiagonal<'_> {
        let n = self.line_len;
        Tridiagonal {
            lower: &self.lower[l * (n - 1)..(l + 1) * (n - 1)],
            diag: &self.diag[l * n..(l + 1) * n],
            upper: &self.upper[l * (n - 1)..(l + 1) * (n - 1)],
        }
    }
}

pub fn assemble_lines(d: &DriftField, axis: Axis, tau: f64) -> Result<LineSystem> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive and finite, got {tau}"
        )));
    }
    let (w, hgt) = d.dims();
    let h = d.spacing();
    let (n, count) = match axis {
        Axis::X => (w, hgt),
        Axis::Y => (hgt, w),
    };
    let face = |line: usize, k: usize| match axis {
        Axis::X => d.x_face(k, line),
        Axis::Y => d.y_face(line, k),
    };

    let mut lower = Vec::with_capacity(count * (n - 1));
    let mut upper = Vec::with_capacity(count * (n - 1));
    let mut diag = vec![1.0; count * n];
    for line in 0..count {
        let dg = &mut diag[line * n..(line + 1) * n];
        for k in 0..n - 1 {
            let fw = tau * forward_coeff(face(line, k), h);
            let bw = tau * backward_coeff(face(line, k), h);
            lower.push(-fw);
            upper.push(-bw);
            dg[k] += fw;
            dg[k + 1] += bw;
        }
    }
    Ok(LineSystem {
        axis,
        line_len: n,
        line_count: count,
        lower,
        diag,
        upper,
    })
}
