//! Temporal convergence study against the manufactured solution.

use crate::config::{steps_for, RunConfig};
use crate::error::{HarnessError, Result};
use crate::simulation::build_stepper;
use crate::table::{fmt_f64, TableWriter};
use mrsav_core::diagnostics::convergence_order;
use mrsav_core::{models, ForcingSpec, InitialData, InitialPreset, ManufacturedSolution, Spectral};
use ndarray::Array3;
use std::path::PathBuf;

pub const CONVERGENCE_FILE: &str = "convergence.csv";

#[derive(Clone, Debug, PartialEq)]
pub enum RowStatus {
    Ok,
    Diverged { step: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub steps: u64,
    pub status: RowStatus,
    /// Relative l-infinity errors at `t_end`; `None` for failed rows.
    pub err_omega: Option<f64>,
    pub err_psi: Option<f64>,
    pub order_omega: Option<f64>,
    pub order_psi: Option<f64>,
}

fn relative_linf(got: &Array3<f64>, exact: &Array3<f64>) -> f64 {
    let diff = got
        .iter()
        .zip(exact.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    diff / exact.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn manufactured_of(config: &RunConfig) -> Result<ManufacturedSolution> {
    let ForcingSpec::Manufactured(solution) = config.forcing_spec()? else {
        return Err(HarnessError::Config(
            "convergence studies need forcing.kind = \"manufactured\"".into(),
        ));
    };
    match (config.initial.preset.as_deref(), &config.initial.checkpoint) {
        (None | Some("manufactured"), None) => Ok(solution),
        _ => Err(HarnessError::Config(
            "convergence studies start from the exact solution; leave initial.preset unset or \"manufactured\"".into(),
        )),
    }
}

fn diverged_step(e: &mrsav_core::Error) -> Option<u64> {
    match e {
        mrsav_core::Error::Divergence { step, .. } => Some(*step),
        mrsav_core::Error::SingularScalarSolve { step, .. } => Some(*step),
        _ => None,
    }
}

/// Integrates the manufactured problem to `run.t_end` with step `dt` and
/// returns the relative l-infinity errors of `(omega, psi)`.
pub fn manufactured_errors(config: &RunConfig, dt: f64) -> Result<(f64, f64)> {
    let solution = manufactured_of(config)?;
    let stepper = build_stepper(config, dt)?;
    let spectral: &Spectral = stepper.spectral();
    let model = *stepper.model();
    let t_end = config.run.t_end;
    let steps = steps_for(t_end, dt)?;
    let omega0 = models::initial_condition(&InitialPreset::Manufactured(solution), spectral, &model)?;
    let end = stepper.run_trajectory(InitialData::Single { omega: omega0, q: 1.0 }, steps, &mut [])?;
    let psi = spectral.invert_elliptic(&end.omega, model.froude())?;
    let exact_omega = spectral.sample(|x, y, z| solution.vorticity(t_end, x, y, z, &model));
    let exact_psi = spectral.sample(|x, y, z| solution.stream_function(t_end, x, y, z));
    Ok((
        relative_linf(&spectral.inverse(&end.omega)?, &exact_omega),
        relative_linf(&spectral.inverse(&psi)?, &exact_psi),
    ))
}

/// Runs every step size in `convergence.dts`, writes `convergence.csv` into
/// the output directory and returns the table. Rows that diverge are kept
/// as failed rows; the study carries on with the remaining step sizes.
pub fn run_convergence_study(config: &RunConfig) -> Result<(Vec<ConvergenceRow>, PathBuf)> {
    let dts = config
        .convergence
        .as_ref()
        .ok_or_else(|| HarnessError::Config("missing [convergence] section with dts".into()))?
        .dts
        .clone();
    manufactured_of(config)?;
    let mut rows = Vec::with_capacity(dts.len());
    for &dt in &dts {
        let steps = steps_for(config.run.t_end, dt)?;
        let row = match manufactured_errors(config, dt) {
            Ok((eo, ep)) => ConvergenceRow {
                dt,
                steps,
                status: RowStatus::Ok,
                err_omega: Some(eo),
                err_psi: Some(ep),
                order_omega: None,
                order_psi: None,
            },
            Err(HarnessError::Core(e)) if diverged_step(&e).is_some() => ConvergenceRow {
                dt,
                steps,
                status: RowStatus::Diverged {
                    step: diverged_step(&e).unwrap_or_default(),
                },
                err_omega: None,
                err_psi: None,
                order_omega: None,
                order_psi: None,
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    for i in 1..rows.len() {
        let pair = |f: fn(&ConvergenceRow) -> Option<f64>| -> Result<Option<f64>> {
            match (f(&rows[i - 1]), f(&rows[i])) {
                (Some(a), Some(b)) => Ok(convergence_order(&[(rows[i - 1].dt, a), (rows[i].dt, b)])?[0]),
                _ => Ok(None),
            }
        };
        let (oo, op) = (pair(|r| r.err_omega)?, pair(|r| r.err_psi)?);
        rows[i].order_omega = oo;
        rows[i].order_psi = op;
    }

    let out = &config.output.dir;
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let path = out.join(CONVERGENCE_FILE);
    let meta = vec![
        ("model".to_string(), format!("{:?}", config.model_spec()?)),
        ("grid_modes".to_string(), format!("{:?}", config.grid.modes)),
        ("t_end".to_string(), fmt_f64(config.run.t_end)),
        ("gamma".to_string(), fmt_f64(config.gamma()?)),
        ("mode".to_string(), config.stepper.mode.name().to_string()),
        ("error_norm".to_string(), "relative l-infinity over collocation points".to_string()),
    ];
    let mut w = TableWriter::create(
        &path,
        &meta,
        &["dt", "steps", "err_omega", "order_omega", "err_psi", "order_psi", "diverged_at_step"],
    )?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "nan".into());
    for r in &rows {
        let diverged = match r.status {
            RowStatus::Ok => "nan".to_string(),
            RowStatus::Diverged { step } => step.to_string(),
        };
        w.row(&[
            fmt_f64(r.dt),
            r.steps.to_string(),
            opt(r.err_omega),
            opt(r.order_omega),
            opt(r.err_psi),
            opt(r.order_psi),
            diverged,
        ])?;
    }
    w.flush()?;
    Ok((rows, path))
}
