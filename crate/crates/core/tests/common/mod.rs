//! Independent oracles for the integration and acceptance tests. Nothing in
//! here calls into the library's operator or solver code.

#![allow(dead_code)]

use osmosis::{DriftField, LabelMap, ScalarField};

pub type Dense = Vec<Vec<f64>>;

/// Dense `A1` written straight from the five-point formula
/// `(u[i+1] - 2u[i] + u[i-1])/h^2 - (d+ (u[i+1]+u[i]) - d- (u[i]+u[i-1]))/(2h)`
/// with the terms of boundary faces dropped.
pub fn dense_a1(d: &DriftField) -> Dense {
    let (w, hgt) = d.dims();
    let h = d.spacing();
    let n = w * hgt;
    let mut a = vec![vec![0.0; n]; n];
    for y in 0..hgt {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                let dp = d.d1()[y * (w - 1) + x];
                a[i][i + 1] += 1.0 / (h * h) - dp / (2.0 * h);
                a[i][i] += -1.0 / (h * h) - dp / (2.0 * h);
            }
            if x > 0 {
                let dm = d.d1()[y * (w - 1) + x - 1];
                a[i][i - 1] += 1.0 / (h * h) + dm / (2.0 * h);
                a[i][i] += -1.0 / (h * h) + dm / (2.0 * h);
            }
        }
    }
    a
}

pub fn dense_a2(d: &DriftField) -> Dense {
    let (w, hgt) = d.dims();
    let h = d.spacing();
    let n = w * hgt;
    let mut a = vec![vec![0.0; n]; n];
    for y in 0..hgt {
        for x in 0..w {
            let i = y * w + x;
            if y + 1 < hgt {
                let dp = d.d2()[y * w + x];
                a[i][i + w] += 1.0 / (h * h) - dp / (2.0 * h);
                a[i][i] += -1.0 / (h * h) - dp / (2.0 * h);
            }
            if y > 0 {
                let dm = d.d2()[(y - 1) * w + x];
                a[i][i - w] += 1.0 / (h * h) + dm / (2.0 * h);
                a[i][i] += -1.0 / (h * h) + dm / (2.0 * h);
            }
        }
    }
    a
}

pub fn add(a: &Dense, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn dense_a(d: &DriftField) -> Dense {
    add(&dense_a1(d), &dense_a2(d))
}

/// `I + c M`.
pub fn identity_plus(m: &Dense, c: f64) -> Dense {
    m.iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, &v)| c * v + if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect()
}

pub fn matvec(m: &Dense, v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn lu_solve(m: &Dense, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut a: Dense = m.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, p);
        x.swap(k, p);
        assert!(a[k][k].abs() > 1e-300, "singular oracle matrix");
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                x[i] -= f * x[k];
            }
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / a[k][k];
    }
    x
}

/// Recursive pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Pixels at distance `> band` (Chebyshev) from any pixel with a different
/// label.
pub fn off_boundary(labels: &LabelMap, band: usize) -> Vec<bool> {
    let (w, h) = labels.dims();
    let mut keep = vec![true; w * h];
    for y in 0..h {
        for x in 0..w {
            let l = labels.get(x, y);
            let on_edge = (x + 1 < w && labels.get(x + 1, y) != l)
                || (y + 1 < h && labels.get(x, y + 1) != l);
            if on_edge {
                let (x0, x1) = (x.saturating_sub(band), (x + 1 + band).min(w - 1));
                let (y0, y1) = (y.saturating_sub(band), (y + 1 + band).min(h - 1));
                for yy in y0..=y1 {
                    for xx in x0..=x1 {
                        keep[yy * w + xx] = false;
                    }
                }
            }
        }
    }
    keep
}

/// Fits `out ~ c * truth` by least squares over the selected pixels and
/// returns `(c, relative RMSE)`.
pub fn scaled_rmse(out: &ScalarField, truth: &ScalarField, keep: &[bool]) -> (f64, f64) {
    let pairs = || {
        out.values()
            .iter()
            .zip(truth.values())
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(p, _)| p)
    };
    let (num, den) = pairs().fold((0.0, 0.0), |(a, b), (o, t)| (a + o * t, b + t * t));
    let c = num / den;
    let (se, ss) = pairs().fold((0.0, 0.0), |(a, b), (o, t)| {
        (a + (o - c * t).powi(2), b + (c * t).powi(2))
    });
    (c, (se / ss).sqrt())
}

/// Pearson correlation over the selected pixels.
pub fn correlation(a: &[f64], b: &[f64], keep: &[bool]) -> f64 {
    let sel: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|((&x, &y), _)| (x, y))
        .collect();
    let n = sel.len() as f64;
    let (mx, my) = sel
        .iter()
        .fold((0.0, 0.0), |(p, q), (x, y)| (p + x / n, q + y / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &sel {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Random drift with entries uniform in `(-bound, bound)`, grid spacing 1.
pub fn random_drift(w: usize, h: usize, bound: f64, seed: u64) -> DriftField {
    use rand::Rng;
    let mut r = osmosis::synthetic::rng(seed);
    let d1 = (0..(w - 1) * h)
        .map(|_| r.gen_range(-bound..bound))
        .collect();
    let d2 = (0..w * (h - 1))
        .map(|_| r.gen_range(-bound..bound))
        .collect();
    DriftField::from_components(w, h, 1.0, d1, d2).unwrap()
}
