//! Right-preconditioned BiCGSTAB for non-symmetric systems given only the
//! action of the matrix.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Iterations without halving the residual after which [`bicgstab`] gives up.
pub const STALL_WINDOW: usize = 100;

/// Solves `M x = b` where `apply(v, out)` writes `M v` and `precond(v, out)`
/// writes an approximation of `M^{-1} v`. `x` holds the initial guess on
/// entry and the solution on exit. The stopping test uses the true residual
/// `|b - M x|_2 / |b|_2`. Stagnation for [`STALL_WINDOW`] iterations ends
/// the solve early with [`Error::SolverNotConverged`].
pub fn bicgstab(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    opts: KrylovOptions,
) -> Result<KrylovOutcome> {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(KrylovOutcome {
            iterations: 0,
            rel_residual: 0.0,
        });
    }

    let mut r = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let true_residual =
        |apply: &mut dyn FnMut(&[f64], &mut [f64]), x: &[f64], r: &mut [f64], tmp: &mut [f64]| {
            apply(x, tmp);
            for i in 0..n {
                r[i] = b[i] - tmp[i];
            }
            norm(r) / b_norm
        };

    let mut rel = true_residual(&mut apply, x, &mut r, &mut tmp);
    if rel <= opts.rel_tol {
        return Ok(KrylovOutcome {
            iterations: 0,
            rel_residual: rel,
        });
    }

    let mut r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);

    let (mut mark, mut mark_it) = (rel, 0);
    for it in 1..=opts.max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            // Breakdown: restart the shadow residual from the current residual.
            rel = true_residual(&mut apply, x, &mut r, &mut tmp);
            r_hat.copy_from_slice(&r);
            p.fill(0.0);
            v.fill(0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            if rel <= opts.rel_tol {
                return Ok(KrylovOutcome {
                    iterations: it,
                    rel_residual: rel,
                });
            }
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut p_hat);
        apply(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 || !denom.is_finite() {
            rho = 0.0;
            continue;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / b_norm <= opts.rel_tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            rel = true_residual(&mut apply, x, &mut r, &mut tmp);
            if rel <= opts.rel_tol {
                return Ok(KrylovOutcome {
                    iterations: it,
                    rel_residual: rel,
                });
            }
            r_hat.copy_from_slice(&r);
            p.fill(0.0);
            v.fill(0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            continue;
        }
        precond(&s, &mut s_hat);
        apply(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        let rec = norm(&r) / b_norm;
        if rec < 0.5 * mark {
            (mark, mark_it) = (rec, it);
        } else if it - mark_it >= STALL_WINDOW {
            rel = true_residual(&mut apply, x, &mut r, &mut tmp);
            return Err(Error::SolverNotConverged {
                iterations: it,
                residual: rel,
            });
        }
        if rec <= opts.rel_tol {
            // Recurrence residuals drift from the true one; confirm.
            rel = true_residual(&mut apply, x, &mut r, &mut tmp);
            if rel <= opts.rel_tol {
                return Ok(KrylovOutcome {
                    iterations: it,
                    rel_residual: rel,
                });
            }
            r_hat.copy_from_slice(&r);
            p.fill(0.0);
            v.fill(0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
        } else if omega == 0.0 {
            rho = 0.0;
        }
    }
    rel = true_residual(&mut apply, x, &mut r, &mut tmp);
    Err(Error::SolverNotConverged {
        iterations: opts.max_iter,
        residual: rel,
    })
}

/// Restarted GMRES(`restart`) with right preconditioning, `M P^{-1} y = b`,
/// `x = P^{-1} y`. Slower per iteration and heavier in memory than
/// [`bicgstab`] but free of breakdowns; the stopping test again uses the true
/// residual.
pub fn gmres(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    restart: usize,
    opts: KrylovOptions,
) -> Result<KrylovOutcome> {
    let n = b.len();
    let m = restart.clamp(1, n.max(1));
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(KrylovOutcome {
            iterations: 0,
            rel_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    // Hessenberg columns, each of length m + 1.
    let mut hess = vec![vec![0.0; m + 1]; m];
    let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
    let mut g = vec![0.0; m + 1];
    let mut iterations = 0;

    loop {
        apply(x, &mut z);
        for i in 0..n {
            r[i] = b[i] - z[i];
        }
        let beta = norm(&r);
        let rel = beta / b_norm;
        if rel <= opts.rel_tol {
            return Ok(KrylovOutcome {
                iterations,
                rel_residual: rel,
            });
        }
        if iterations >= opts.max_iter {
            return Err(Error::SolverNotConverged {
                iterations,
                residual: rel,
            });
        }

        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.fill(0.0);
        g[0] = beta;
        let mut k = 0;
        while k < m && iterations < opts.max_iter {
            iterations += 1;
            precond(&basis[k], &mut z);
            let mut w = vec![0.0; n];
            apply(&z, &mut w);
            let col = &mut hess[k];
            col.fill(0.0);
            // Modified Gram-Schmidt, applied twice.
            for _ in 0..2 {
                for (j, q) in basis.iter().enumerate() {
                    let hj = dot(&w, q);
                    col[j] += hj;
                    for i in 0..n {
                        w[i] -= hj * q[i];
                    }
                }
            }
            let wn = norm(&w);
            col[k + 1] = wn;
            for j in 0..k {
                let t = cs[j] * col[j] + sn[j] * col[j + 1];
                col[j + 1] = -sn[j] * col[j] + cs[j] * col[j + 1];
                col[j] = t;
            }
            let rr = col[k].hypot(col[k + 1]);
            (cs[k], sn[k]) = if rr == 0.0 {
                (1.0, 0.0)
            } else {
                (col[k] / rr, col[k + 1] / rr)
            };
            col[k] = rr;
            col[k + 1] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k += 1;
            if wn == 0.0 || g[k].abs() <= opts.rel_tol * b_norm {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }

        // Back substitution for the k x k triangle, then x += P^{-1} V y.
        let mut y = g[..k].to_vec();
        for i in (0..k).rev() {
            for j in i + 1..k {
                y[i] -= hess[j][i] * y[j];
            }
            y[i] /= hess[i][i];
        }
        let mut vy = vec![0.0; n];
        for (q, &yj) in basis.iter().zip(&y) {
            for i in 0..n {
                vy[i] += yj * q[i];
            }
        }
        precond(&vy, &mut z);
        for i in 0..n {
            x[i] += z[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_nonsymmetric_system() {
        // [[4,1,0],[2,5,1],[0,3,6]]
        let m = [[4.0, 1.0, 0.0], [2.0, 5.0, 1.0], [0.0, 3.0, 6.0]];
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..3 {
                out[i] = (0..3).map(|j| m[i][j] * v[j]).sum();
            }
        };
        let ident = |v: &[f64], out: &mut [f64]| out.copy_from_slice(v);
        let b = [1.0, 2.0, 3.0];
        let mut x = [0.0; 3];
        let out = bicgstab(
            apply,
            ident,
            &b,
            &mut x,
            KrylovOptions {
                rel_tol: 1e-14,
                max_iter: 50,
            },
        )
        .unwrap();
        assert!(out.rel_residual <= 1e-14);
        let mut check = [0.0; 3];
        apply(&x, &mut check);
        for i in 0..3 {
            assert!((check[i] - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn gmres_solves_nonnormal_system() {
        // Upper bidiagonal with a dominant superdiagonal: strongly non-normal.
        let n = 24;
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                out[i] = 2.0 * v[i] + if i + 1 < n { 3.0 * v[i + 1] } else { 0.0 };
            }
        };
        let ident = |v: &[f64], out: &mut [f64]| out.copy_from_slice(v);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut x = vec![0.0; n];
        let opts = KrylovOptions {
            rel_tol: 1e-12,
            max_iter: 200,
        };
        let out = gmres(apply, ident, &b, &mut x, 30, opts).unwrap();
        assert!(out.rel_residual <= 1e-12);
        assert!(out.iterations <= n + 1);

        // Restarted on a diagonally dominant nonsymmetric operator.
        let tri = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let up = if i + 1 < n { 2.0 * v[i + 1] } else { 0.0 };
                let lo = if i > 0 { -v[i - 1] } else { 0.0 };
                out[i] = 4.0 * v[i] + up + lo;
            }
        };
        let mut y = vec![0.0; n];
        let out = gmres(tri, ident, &b, &mut y, 8, opts).unwrap();
        assert!(out.rel_residual <= 1e-12);
        assert!(out.iterations > 8);
        let mut r = vec![0.0; n];
        tri(&y, &mut r);
        let res = r
            .iter()
            .zip(&b)
            .map(|(a, c)| (a - c).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(res <= 1e-11 * b.iter().map(|c| c * c).sum::<f64>().sqrt());
    }

    #[test]
    fn reports_non_convergence() {
        let apply = |v: &[f64], out: &mut [f64]| {
            out[0] = v[0];
            out[1] = 1e-12 * v[1] + v[0];
        };
        let ident = |v: &[f64], out: &mut [f64]| out.copy_from_slice(v);
        let mut x = [0.0; 2];
        let r = bicgstab(
            apply,
            ident,
            &[1.0, 1.0],
            &mut x,
            KrylovOptions {
                rel_tol: 1e-15,
                max_iter: 1,
            },
        );
        assert!(matches!(
            r,
            Err(Error::SolverNotConverged { iterations: 1, .. })
        ));
    }
}
