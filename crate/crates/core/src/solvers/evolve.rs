use std::time::Instant;

use crate::drift::DriftField;
use crate::error::{Error, Result};
use crate::grid::{compensated_sum, ScalarField};

use super::schemes::{SchemeConfig, Stepper};

/// Diagnostics recorded after each step.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub total_mass: f64,
    pub min_value: f64,
    /// `|u_{k+1} - u_k|_1 / (tau |u_k|_1)`.
    pub update_norm: f64,
    /// Seconds spent in this step.
    pub wall_time: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvolveReport {
    pub initial_mass: f64,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl EvolveReport {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Largest `|mass_k - mass_0| / mass_0` over the run.
    pub fn max_relative_mass_drift(&self) -> f64 {
        self.records
            .iter()
            .map(|r| (r.total_mass - self.initial_mass).abs() / self.initial_mass.abs())
            .fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.min_value)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_wall_time(&self) -> f64 {
        self.records.iter().map(|r| r.wall_time).sum()
    }
}

/// Iterates the configured scheme from `f` until the normalised update drops
/// to `cfg.steady_tol` or `cfg.max_steps` steps have been taken.
pub fn evolve(
    f: &ScalarField,
    d: &DriftField,
    cfg: &SchemeConfig,
) -> Result<(ScalarField, EvolveReport)> {
    if f.dims() != d.dims() {
        return Err(Error::DimensionMismatch {
            what: "drift field",
            expected: f.dims(),
            found: d.dims(),
        });
    }
    f.ensure_positive()?;
    let stepper = Stepper::new(d, cfg)?;
    evolve_with(f, &stepper, cfg.max_steps, cfg.steady_tol, |_, _| {})
}

/// Like [`evolve`] with a prepared stepper; `observe` sees every state
/// after it is recorded.
pub fn evolve_with(
    f: &ScalarField,
    stepper: &Stepper,
    max_steps: usize,
    steady_tol: f64,
    mut observe: impl FnMut(&IterationRecord, &[f64]),
) -> Result<(ScalarField, EvolveReport)> {
    let tau = stepper.tau();
    let mut report = EvolveReport {
        initial_mass: compensated_sum(f.values()),
        records: Vec::new(),
        converged: false,
    };
    let mut u = f.values().to_vec();
    let mut next = vec![0.0; u.len()];

    for iteration in 1..=max_steps {
        let start = Instant::now();
        stepper.step_into(&u, &mut next)?;
        let wall_time = start.elapsed().as_secs_f64();

        let mut diff = 0.0;
        let mut norm = 0.0;
        let mut min_value = f64::INFINITY;
        for (a, b) in next.iter().zip(&u) {
            diff += (a - b).abs();
            norm += b.abs();
            min_value = min_value.min(*a);
        }
        let record = IterationRecord {
            iteration,
            total_mass: compensated_sum(&next),
            min_value,
            update_norm: diff / (tau * norm),
            wall_time,
        };
        std::mem::swap(&mut u, &mut next);
        observe(&record, &u);
        report.records.push(record);
        if record.update_norm <= steady_tol {
            report.converged = true;
            break;
        }
    }
    Ok((
        ScalarField::from_parts(f.width(), f.height(), f.spacing(), u),
        report,
    ))
}
