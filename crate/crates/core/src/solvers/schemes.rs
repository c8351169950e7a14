use std::fmt;
use std::str::FromStr;

use log::debug;

use crate::drift::DriftField;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::operators::{apply_a_into, assemble_lines, backward_coeff, forward_coeff, Axis};

use super::krylov::{bicgstab, gmres, KrylovOptions};
use super::tridiagonal::FactoredLines;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Explicit,
    Implicit,
    Mos,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Explicit => "explicit",
            Scheme::Implicit => "implicit",
            Scheme::Mos => "mos",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "explicit" => Ok(Scheme::Explicit),
            "implicit" => Ok(Scheme::Implicit),
            "mos" => Ok(Scheme::Mos),
            other => Err(Error::InvalidParameter(format!(
                "unknown scheme '{other}' (expected explicit, implicit or mos)"
            ))),
        }
    }
}

/// Order of the two one-dimensional factors in a MOS step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SplitOrder {
    /// x-lines first, then y-lines.
    #[default]
    XThenY,
    YThenX,
}

impl fmt::Display for SplitOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitOrder::XThenY => "xy",
            SplitOrder::YThenX => "yx",
        })
    }
}

impl FromStr for SplitOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xy" => Ok(SplitOrder::XThenY),
            "yx" => Ok(SplitOrder::YThenX),
            other => Err(Error::InvalidParameter(format!(
                "unknown split order '{other}' (expected xy or yx)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub tau: f64,
    pub max_steps: usize,
    /// Stop once `|u_{k+1} - u_k|_1 / (tau |u_k|_1)` drops to this value.
    pub steady_tol: f64,
    /// Relative residual target of the implicit inner solve.
    pub linear_tol: f64,
    pub split_order: SplitOrder,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Mos,
            tau: 1000.0,
            max_steps: 5000,
            steady_tol: 1e-8,
            linear_tol: 1e-10,
            split_order: SplitOrder::XThenY,
        }
    }
}

impl SchemeConfig {
    pub fn mos(tau: f64) -> Self {
        Self {
            scheme: Scheme::Mos,
            tau,
            ..Self::default()
        }
    }

    pub fn implicit(tau: f64, linear_tol: f64) -> Self {
        Self {
            scheme: Scheme::Implicit,
            tau,
            linear_tol,
            ..Self::default()
        }
    }

    pub fn explicit(tau: f64) -> Self {
        Self {
            scheme: Scheme::Explicit,
            tau,
            ..Self::default()
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_steady_tol(mut self, steady_tol: f64) -> Self {
        self.steady_tol = steady_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        if !(self.steady_tol.is_finite() && self.steady_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "steady tolerance must be positive, got {}",
                self.steady_tol
            )));
        }
        if !(self.linear_tol.is_finite() && self.linear_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "linear tolerance must be positive, got {}",
                self.linear_tol
            )));
        }
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive and finite, got {tau}"
        )));
    }
    Ok(())
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

/// Largest explicit Euler step keeping `I + tau A` entrywise non-negative:
/// `1 / max_i(-a_ii)`.
pub fn stable_timestep(d: &DriftField) -> f64 {
    let (w, hgt) = d.dims();
    let h = d.spacing();
    let mut neg_diag = vec![0.0f64; w * hgt];
    for y in 0..hgt {
        for x in 0..w - 1 {
            let dd = d.x_face(x, y);
            neg_diag[y * w + x] += forward_coeff(dd, h);
            neg_diag[y * w + x + 1] += backward_coeff(dd, h);
        }
    }
    for y in 0..hgt - 1 {
        for x in 0..w {
            let dd = d.y_face(x, y);
            neg_diag[y * w + x] += forward_coeff(dd, h);
            neg_diag[(y + 1) * w + x] += backward_coeff(dd, h);
        }
    }
    let worst = neg_diag.into_iter().fold(0.0f64, f64::max);
    if worst > 0.0 {
        1.0 / worst
    } else {
        f64::INFINITY
    }
}

/// One explicit Euler step `u + tau A u`; rejects `tau` above
/// [`stable_timestep`].
pub fn step_explicit(u: &ScalarField, d: &DriftField, tau: f64) -> Result<ScalarField> {
    check_dims(u, d)?;
    check_tau(tau)?;
    let limit = stable_timestep(d);
    if tau > limit {
        return Err(Error::StabilityViolation { tau, limit });
    }
    let mut out = vec![0.0; u.len()];
    explicit_into(u.values(), d, tau, &mut out);
    Ok(ScalarField::from_parts(
        u.width(),
        u.height(),
        u.spacing(),
        out,
    ))
}

fn explicit_into(u: &[f64], d: &DriftField, tau: f64, out: &mut [f64]) {
    apply_a_into(u, d, out);
    for (o, &v) in out.iter_mut().zip(u) {
        *o = v + tau * *o;
    }
}

/// One fully implicit Euler step: solves `(I - tau A) w = u` with BiCGSTAB,
/// preconditioned by the MOS factorisation of the same operator, falling
/// back to restarted GMRES if BiCGSTAB stalls.
pub fn step_implicit(
    u: &ScalarField,
    d: &DriftField,
    tau: f64,
    linear_tol: f64,
) -> Result<ScalarField> {
    check_dims(u, d)?;
    let stepper = Stepper::new(d, &SchemeConfig::implicit(tau, linear_tol))?;
    stepper.step(u)
}

/// One multiplicative splitting step `(I - tau A2)^{-1} (I - tau A1)^{-1} u`.
pub fn step_mos(u: &ScalarField, d: &DriftField, tau: f64) -> Result<ScalarField> {
    check_dims(u, d)?;
    let stepper = Stepper::new(d, &SchemeConfig::mos(tau))?;
    stepper.step(u)
}

/// The MOS factor pair, ordered as they are applied.
#[derive(Clone, Debug)]
struct MosFactors {
    first: FactoredLines,
    second: FactoredLines,
}

impl MosFactors {
    fn new(d: &DriftField, tau: f64, order: SplitOrder) -> Result<Self> {
        let x = FactoredLines::factor(&assemble_lines(d, Axis::X, tau)?)?;
        let y = FactoredLines::factor(&assemble_lines(d, Axis::Y, tau)?)?;
        Ok(match order {
            SplitOrder::XThenY => Self {
                first: x,
                second: y,
            },
            SplitOrder::YThenX => Self {
                first: y,
                second: x,
            },
        })
    }

    fn apply_in_place(&self, data: &mut [f64]) {
        self.first.solve_image(data);
        self.second.solve_image(data);
    }
}

#[derive(Clone, Debug)]
enum Prepared {
    Explicit,
    Implicit {
        factors: MosFactors,
        linear_tol: f64,
    },
    Mos(MosFactors),
}

/// A time stepper bound to one drift field and configuration; line
/// factorisations are computed once and reused by every step.
#[derive(Clone, Debug)]
pub struct Stepper {
    drift: DriftField,
    tau: f64,
    prepared: Prepared,
}

/// GMRES restart length; memory is about this many extra image copies.
const GMRES_RESTART: usize = 30;
/// Inner iteration cap of each implicit solver.
const IMPLICIT_MAX_ITER: usize = 2000;

impl Stepper {
    pub fn new(d: &DriftField, cfg: &SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        let prepared = match cfg.scheme {
            Scheme::Explicit => {
                let limit = stable_timestep(d);
                if cfg.tau > limit {
                    return Err(Error::StabilityViolation {
                        tau: cfg.tau,
                        limit,
                    });
                }
                Prepared::Explicit
            }
            Scheme::Implicit => Prepared::Implicit {
                factors: MosFactors::new(d, cfg.tau, cfg.split_order)?,
                linear_tol: cfg.linear_tol,
            },
            Scheme::Mos => Prepared::Mos(MosFactors::new(d, cfg.tau, cfg.split_order)?),
        };
        Ok(Self {
            drift: d.clone(),
            tau: cfg.tau,
            prepared,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn drift(&self) -> &DriftField {
        &self.drift
    }

    pub fn step(&self, u: &ScalarField) -> Result<ScalarField> {
        check_dims(u, &self.drift)?;
        let mut out = vec![0.0; u.len()];
        self.step_into(u.values(), &mut out)?;
        Ok(ScalarField::from_parts(
            u.width(),
            u.height(),
            u.spacing(),
            out,
        ))
    }

    pub(crate) fn step_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.prepared {
            Prepared::Explicit => explicit_into(u, &self.drift, self.tau, out),
            Prepared::Mos(f) => {
                out.copy_from_slice(u);
                f.apply_in_place(out);
            }
            Prepared::Implicit {
                factors,
                linear_tol,
            } => {
                let d = &self.drift;
                let tau = self.tau;
                let apply = |v: &[f64], res: &mut [f64]| {
                    apply_a_into(v, d, res);
                    for (r, &x) in res.iter_mut().zip(v) {
                        *r = x - tau * *r;
                    }
                };
                let precond = |v: &[f64], res: &mut [f64]| {
                    res.copy_from_slice(v);
                    factors.apply_in_place(res);
                };
                out.copy_from_slice(u);
                factors.apply_in_place(out);
                let first = bicgstab(
                    apply,
                    precond,
                    u,
                    out,
                    KrylovOptions {
                        rel_tol: *linear_tol,
                        max_iter: IMPLICIT_MAX_ITER,
                    },
                );
                if let Err(Error::SolverNotConverged { residual, .. }) = first {
                    debug!(
                        "BiCGSTAB stalled at relative residual {residual:.3e}; retrying with GMRES"
                    );
                    out.copy_from_slice(u);
                    factors.apply_in_place(out);
                    gmres(
                        apply,
                        precond,
                        u,
                        out,
                        GMRES_RESTART,
                        KrylovOptions {
                            rel_tol: *linear_tol,
                            max_iter: IMPLICIT_MAX_ITER,
                        },
                    )?;
                } else {
                    first?;
                }
            }
        }
        Ok(())
    }
}
