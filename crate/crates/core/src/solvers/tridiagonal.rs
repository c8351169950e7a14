//! Thomas elimination for non-symmetric tridiagonal lines.
//!
//! No pivoting: the line matrices `I - tau A_axis` are column diagonally
//! dominant whenever `|d| h <= 2`, which keeps every pivot `>= 1`. A
//! relative pivot check still guards arbitrary user drifts.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operators::{rows_per_task, Axis, LineSystem, Tridiagonal};

fn pivot_is_degenerate(pivot: f64, scale: f64) -> bool {
    !(pivot.abs() > f64::EPSILON * scale)
}

/// Solves one tridiagonal system by forward elimination and back
/// substitution.
pub fn solve_tridiagonal(sys: Tridiagonal<'_>, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = sys.diag.len();
    if n < 2 || sys.lower.len() != n - 1 || sys.upper.len() != n - 1 || rhs.len() != n {
        return Err(Error::InvalidParameter(format!(
            "tridiagonal system of size {n} with lower/upper/rhs lengths {}/{}/{}",
            sys.lower.len(),
            sys.upper.len(),
            rhs.len()
        )));
    }
    let mut pivots = Vec::with_capacity(n);
    let mut x = rhs.to_vec();

    let scale = |k: usize| {
        sys.diag[k].abs()
            + if k > 0 { sys.lower[k - 1].abs() } else { 0.0 }
            + if k + 1 < n { sys.upper[k].abs() } else { 0.0 }
    };

    pivots.push(sys.diag[0]);
    if pivot_is_degenerate(sys.diag[0], scale(0)) {
        return Err(Error::ZeroPivot {
            line: 0,
            row: 0,
            pivot: sys.diag[0],
        });
    }
    for k in 1..n {
        let m = sys.lower[k - 1] / pivots[k - 1];
        let p = sys.diag[k] - m * sys.upper[k - 1];
        if pivot_is_degenerate(p, scale(k)) {
            return Err(Error::ZeroPivot {
                line: 0,
                row: k,
                pivot: p,
            });
        }
        pivots.push(p);
        x[k] -= m * x[k - 1];
    }
    x[n - 1] /= pivots[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = (x[k] - sys.upper[k] * x[k + 1]) / pivots[k];
    }
    Ok(x)
}

/// Precomputed LU factors for every line of a [`LineSystem`].
///
/// x-lines are stored line by line (each grid row is contiguous in the
/// image). y-lines are stored position-major, `coeff[k * lines + line]`, so
/// that one elimination step updates a whole image row at once.
#[derive(Clone, Debug)]
pub struct FactoredLines {
    axis: Axis,
    n: usize,
    lines: usize,
    /// Elimination multipliers for positions `1..n`.
    mult: Vec<f64>,
    inv_pivot: Vec<f64>,
    /// Super-diagonal for positions `0..n-1`.
    upper: Vec<f64>,
}

impl FactoredLines {
    pub fn factor(sys: &LineSystem) -> Result<Self> {
        let n = sys.line_len;
        let lines = sys.line_count;
        let mut mult = vec![0.0; lines * (n - 1)];
        let mut inv_pivot = vec![0.0; lines * n];
        let mut upper = vec![0.0; lines * (n - 1)];

        let position_major = sys.axis == Axis::Y;
        let at = |k: usize, l: usize, len: usize| {
            if position_major {
                k * lines + l
            } else {
                l * len + k
            }
        };

        for l in 0..lines {
            let t = sys.line(l);
            let scale = |k: usize| {
                t.diag[k].abs()
                    + if k > 0 { t.lower[k - 1].abs() } else { 0.0 }
                    + if k + 1 < n { t.upper[k].abs() } else { 0.0 }
            };
            let mut pivot = t.diag[0];
            if pivot_is_degenerate(pivot, scale(0)) {
                return Err(Error::ZeroPivot {
                    line: l,
                    row: 0,
                    pivot,
                });
            }
            inv_pivot[at(0, l, n)] = 1.0 / pivot;
            for k in 1..n {
                let m = t.lower[k - 1] / pivot;
                pivot = t.diag[k] - m * t.upper[k - 1];
                if pivot_is_degenerate(pivot, scale(k)) {
                    return Err(Error::ZeroPivot {
                        line: l,
                        row: k,
                        pivot,
                    });
                }
                mult[at(k - 1, l, n - 1)] = m;
                upper[at(k - 1, l, n - 1)] = t.upper[k - 1];
                inv_pivot[at(k, l, n)] = 1.0 / pivot;
            }
        }
        Ok(Self {
            axis: sys.axis,
            n,
            lines,
            mult,
            inv_pivot,
            upper,
        })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    /// Solves every line in place on a row-major image buffer.
    pub fn solve_image(&self, data: &mut [f64]) {
        assert_eq!(data.len(), self.n * self.lines);
        match self.axis {
            Axis::X => self.solve_rows(data),
            Axis::Y => self.solve_columns(data),
        }
    }

    fn solve_rows(&self, data: &mut [f64]) {
        let n = self.n;
        data.par_chunks_mut(n)
            .with_min_len(rows_per_task(n))
            .enumerate()
            .for_each(|(l, x)| {
                let mult = &self.mult[l * (n - 1)..(l + 1) * (n - 1)];
                let upper = &self.upper[l * (n - 1)..(l + 1) * (n - 1)];
                let inv = &self.inv_pivot[l * n..(l + 1) * n];
                for k in 1..n {
                    x[k] -= mult[k - 1] * x[k - 1];
                }
                x[n - 1] *= inv[n - 1];
                for k in (0..n - 1).rev() {
                    x[k] = (x[k] - upper[k] * x[k + 1]) * inv[k];
                }
            });
    }

    fn solve_columns(&self, data: &mut [f64]) {
        let width = self.lines;
        let threads = rayon::current_num_threads();
        if threads <= 1 || width < 2 * COLUMN_BLOCK {
            self.solve_column_block(data, width, 0, width);
            return;
        }
        // Each block of columns is copied out, solved and copied back. The
        // per-element arithmetic is the same as the in-place path, so the
        // result does not depend on the worker count.
        let blocks: Vec<(usize, Vec<f64>)> = (0..width)
            .step_by(COLUMN_BLOCK)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|x0| {
                let cols = COLUMN_BLOCK.min(width - x0);
                let mut buf = Vec::with_capacity(cols * self.n);
                for k in 0..self.n {
                    buf.extend_from_slice(&data[k * width + x0..k * width + x0 + cols]);
                }
                self.solve_column_block(&mut buf, cols, x0, cols);
                (x0, buf)
            })
            .collect();
        for (x0, buf) in blocks {
            let cols = buf.len() / self.n;
            for k in 0..self.n {
                data[k * width + x0..k * width + x0 + cols]
                    .copy_from_slice(&buf[k * cols..(k + 1) * cols]);
            }
        }
    }

    /// Solves columns `x0..x0+cols` stored in `buf` with row stride `stride`.
    fn solve_column_block(&self, buf: &mut [f64], stride: usize, x0: usize, cols: usize) {
        let n = self.n;
        let lines = self.lines;
        for k in 1..n {
            let (head, tail) = buf.split_at_mut(k * stride);
            let prev = &head[(k - 1) * stride..(k - 1) * stride + cols];
            let cur = &mut tail[..cols];
            let mult = &self.mult[(k - 1) * lines + x0..(k - 1) * lines + x0 + cols];
            for c in 0..cols {
                cur[c] -= mult[c] * prev[c];
            }
        }
        {
            let last = &mut buf[(n - 1) * stride..(n - 1) * stride + cols];
            let inv = &self.inv_pivot[(n - 1) * lines + x0..(n - 1) * lines + x0 + cols];
            for c in 0..cols {
                last[c] *= inv[c];
            }
        }
        for k in (0..n - 1).rev() {
            let (head, tail) = buf.split_at_mut((k + 1) * stride);
            let cur = &mut head[k * stride..k * stride + cols];
            let next = &tail[..cols];
            let upper = &self.upper[k * lines + x0..k * lines + x0 + cols];
            let inv = &self.inv_pivot[k * lines + x0..k * lines + x0 + cols];
            for c in 0..cols {
                cur[c] = (cur[c] - upper[c] * next[c]) * inv[c];
            }
        }
    }
}

const COLUMN_BLOCK: usize = 256;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let sys = Tridiagonal {
            lower: &[0.0, 0.0, 0.0],
            diag: &[1.0; 4],
            upper: &[0.0, 0.0, 0.0],
        };
        let rhs = [3.0, -1.0, 0.5, 7.0];
        assert_eq!(solve_tridiagonal(sys, &rhs).unwrap(), rhs);
    }

    #[test]
    fn neumann_line() {
        // Dense solve of [[2,-1,0],[-1,3,-1],[0,-1,2]] x = 1 gives x = 1.
        let sys = Tridiagonal {
            lower: &[-1.0, -1.0],
            diag: &[2.0, 3.0, 2.0],
            upper: &[-1.0, -1.0],
        };
        let x = solve_tridiagonal(sys, &[1.0, 1.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_pivot_reported() {
        let sys = Tridiagonal {
            lower: &[1.0],
            diag: &[1.0, 1.0],
            upper: &[1.0],
        };
        assert!(matches!(
            solve_tridiagonal(sys, &[1.0, 1.0]),
            Err(Error::ZeroPivot { row: 1, .. })
        ));
        let sys = Tridiagonal {
            lower: &[1.0],
            diag: &[0.0, 1.0],
            upper: &[1.0],
        };
        assert!(matches!(
            solve_tridiagonal(sys, &[1.0, 1.0]),
            Err(Error::ZeroPivot { row: 0, .. })
        ));
    }

    #[test]
    fn factored_matches_single_line_solves() {
        let n = 5;
        let lines = 3;
        let sys_for = |axis| LineSystem {
            axis,
            line_len: n,
            line_count: lines,
            lower: (0..lines * (n - 1))
                .map(|i| -0.1 - 0.05 * i as f64)
                .collect(),
            diag: (0..lines * n).map(|i| 2.0 + 0.1 * i as f64).collect(),
            upper: (0..lines * (n - 1))
                .map(|i| -0.3 + 0.01 * i as f64)
                .collect(),
        };
        let rhs: Vec<f64> = (0..n * lines).map(|i| (i as f64 * 0.7).cos()).collect();

        let x_sys = sys_for(Axis::X);
        let mut data = rhs.clone();
        FactoredLines::factor(&x_sys)
            .unwrap()
            .solve_image(&mut data);
        for l in 0..lines {
            let exp = solve_tridiagonal(x_sys.line(l), &rhs[l * n..(l + 1) * n]).unwrap();
            for k in 0..n {
                assert!((data[l * n + k] - exp[k]).abs() < 1e-14);
            }
        }

        // y-lines: line l is image column l, image width = lines.
        let y_sys = sys_for(Axis::Y);
        let mut data = rhs.clone();
        FactoredLines::factor(&y_sys)
            .unwrap()
            .solve_image(&mut data);
        for l in 0..lines {
            let col: Vec<f64> = (0..n).map(|k| rhs[k * lines + l]).collect();
            let exp = solve_tridiagonal(y_sys.line(l), &col).unwrap();
            for k in 0..n {
                assert!((data[k * lines + l] - exp[k]).abs() < 1e-14);
            }
        }
    }
}
