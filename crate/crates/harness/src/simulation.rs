//! Long-run driver: time series, periodic checkpoints, divergence handling.

use crate::checkpoint::{read_checkpoint_for, write_checkpoint, Checkpoint};
use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::table::{fmt_f64, TableWriter, SERIES_COLUMNS};
use mrsav_core::diagnostics::{field_norms, mode_trace};
use mrsav_core::{models, Spectral, Stepper, TwoLevelState, Wavevector};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const SERIES_FILE: &str = "series.csv";
pub const FINAL_CHECKPOINT: &str = "final.bin";
pub const DIVERGENCE_MARKER: &str = "DIVERGED";
pub const CONFIG_COPY: &str = "config.toml";

/// Stepper for `config` with time step `dt`.
pub fn build_stepper(config: &RunConfig, dt: f64) -> Result<Stepper> {
    config.validate()?;
    let grid = config.grid()?;
    let model = config.model_spec()?;
    let spectral = Arc::new(Spectral::new(grid));
    let forcing = config.forcing_spec()?.build(&spectral, &model)?;
    let mut params = config.stepper_params()?;
    params.dt = dt;
    Ok(Stepper::new(spectral, model, forcing, params, config.scheme())?)
}

/// One row of the time-series file.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub step: u64,
    pub t: f64,
    pub enstrophy: f64,
    pub palinstrophy: f64,
    pub q: f64,
    pub max_abs_omega: f64,
    pub mode_0_1_re: f64,
}

impl Sample {
    pub fn of(spectral: &Spectral, state: &TwoLevelState, dt: f64) -> Result<Sample> {
        let norms = field_norms(spectral, &state.omega)?;
        let k = if spectral.grid().dim() == 2 {
            Wavevector::new_2d(0, 1)
        } else {
            Wavevector::new_3d(0, 1, 0)
        };
        Ok(Sample {
            step: state.step,
            t: state.time(dt),
            enstrophy: norms.enstrophy,
            palinstrophy: norms.palinstrophy,
            q: state.q,
            max_abs_omega: spectral.max_abs_physical(&state.omega)?,
            mode_0_1_re: mode_trace(&state.omega, k)?.re,
        })
    }

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.step.to_string(),
            fmt_f64(self.t),
            fmt_f64(self.enstrophy),
            fmt_f64(self.palinstrophy),
            fmt_f64(self.enstrophy.sqrt()),
            fmt_f64(self.palinstrophy.sqrt()),
            fmt_f64(self.q),
            fmt_f64((self.q - 1.0).abs()),
            fmt_f64(self.max_abs_omega),
            fmt_f64(self.mode_0_1_re),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub final_state: TwoLevelState,
    pub series: PathBuf,
    pub final_checkpoint: PathBuf,
    pub checkpoints: Vec<PathBuf>,
}

pub fn checkpoint_name(step: u64) -> String {
    format!("checkpoint_{step:010}.bin")
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn is_divergence(e: &mrsav_core::Error) -> Option<(u64, f64)> {
    use mrsav_core::Error as E;
    match e {
        E::Divergence { step, time } => Some((*step, *time)),
        E::SingularScalarSolve { step, .. } => Some((*step, f64::NAN)),
        _ => None,
    }
}

/// Runs `config` to `run.t_end`, writing into `output.dir`:
/// `config.toml`, `series.csv`, periodic `checkpoint_*.bin` and `final.bin`.
/// A diverged run leaves the samples taken so far plus a `DIVERGED` marker
/// and returns [`HarnessError::Divergence`].
pub fn run_simulation(config: &RunConfig) -> Result<RunSummary> {
    let stepper = build_stepper(config, config.stepper.dt)?;
    let spectral = stepper.spectral().clone();
    let dt = config.stepper.dt;
    let total = config.total_steps()?;
    let out = &config.output.dir;
    create_dir(out)?;
    let config_path = out.join(CONFIG_COPY);
    std::fs::write(&config_path, config.to_toml_string())
        .map_err(|e| HarnessError::io(&config_path, e))?;
    let marker = out.join(DIVERGENCE_MARKER);
    if marker.exists() {
        std::fs::remove_file(&marker).map_err(|e| HarnessError::io(&marker, e))?;
    }

    let (mut state, restart) = match config.initial_preset()? {
        Some(preset) => {
            let omega = models::initial_condition(&preset, &spectral, stepper.model())?;
            (TwoLevelState::initial(omega, 1.0), None)
        }
        None => {
            let path = config.initial.checkpoint.as_ref().expect("checked by initial_preset");
            let cp = read_checkpoint_for(path, spectral.grid())?;
            if cp.dt != dt {
                return Err(HarnessError::Config(format!(
                    "checkpoint {} was written with dt = {}, configured dt = {dt}",
                    path.display(),
                    cp.dt
                )));
            }
            (cp.state, Some(path.clone()))
        }
    };
    if state.step >= total {
        return Err(HarnessError::Config(format!(
            "start step {} is already at or past t_end = {} ({total} steps)",
            state.step, config.run.t_end
        )));
    }

    let stride = config.run.sample_stride;
    let mut meta = vec![
        ("model".to_string(), format!("{:?}", stepper.model())),
        ("grid_modes".to_string(), format!("{:?}", &spectral.grid().modes()[..spectral.grid().dim()])),
        ("grid_lengths".to_string(), format!("{:?}", &spectral.grid().lengths()[..spectral.grid().dim()])),
        ("forcing".to_string(), format!("{:?}", config.forcing.kind)),
        ("mode".to_string(), config.stepper.mode.name().to_string()),
        ("dt".to_string(), fmt_f64(dt)),
        ("gamma".to_string(), fmt_f64(stepper.params().gamma)),
        ("dealias".to_string(), config.stepper.dealias.to_string()),
        ("sample_stride".to_string(), stride.to_string()),
        ("sample_interval".to_string(), fmt_f64(stride as f64 * dt)),
    ];
    match &restart {
        Some(p) => meta.push(("restart_from".to_string(), p.display().to_string())),
        None => meta.push((
            "initial".to_string(),
            config.initial.preset.clone().unwrap_or_else(|| "zero".into()),
        )),
    }
    let series_path = out.join(SERIES_FILE);
    let mut series = TableWriter::create(&series_path, &meta, &SERIES_COLUMNS)?;
    if restart.is_none() {
        series.row(&Sample::of(&spectral, &state, dt)?.fields())?;
    }

    let mut checkpoints = Vec::new();
    let save = |state: &TwoLevelState, path: &Path| {
        write_checkpoint(
            path,
            &Checkpoint {
                grid: *spectral.grid(),
                time: state.time(dt),
                dt,
                gamma: stepper.params().gamma,
                state: state.clone(),
            },
        )
    };
    while state.step < total {
        let next = if state.step == 0 {
            stepper.step_first_order(&state.omega, state.q)
        } else {
            stepper.step_bdf2(&state)
        };
        let failure = match next {
            Ok(s) if s.omega.max_abs() > config.run.blowup_threshold => {
                Some((s.step, s.time(dt), format!("vorticity exceeded {}", config.run.blowup_threshold)))
            }
            Ok(s) => {
                state = s;
                None
            }
            Err(e) => match is_divergence(&e) {
                Some((step, _)) => Some((step, step as f64 * dt, e.to_string())),
                None => return Err(e.into()),
            },
        };
        if let Some((step, time, reason)) = failure {
            series.comment(&format!("diverged at step {step} (t = {time}): {reason}"))?;
            series.flush()?;
            let text = format!("step: {step}\ntime: {time}\nreason: {reason}\n");
            std::fs::write(&marker, text).map_err(|e| HarnessError::io(&marker, e))?;
            return Err(HarnessError::Divergence { step, time });
        }
        if state.step % stride == 0 {
            series.row(&Sample::of(&spectral, &state, dt)?.fields())?;
        }
        if config.run.checkpoint_stride.is_some_and(|c| state.step % c == 0) {
            let p = out.join(checkpoint_name(state.step));
            save(&state, &p)?;
            checkpoints.push(p);
        }
    }
    series.flush()?;
    let final_checkpoint = out.join(FINAL_CHECKPOINT);
    save(&state, &final_checkpoint)?;
    Ok(RunSummary {
        final_state: state,
        series: series_path,
        final_checkpoint,
        checkpoints,
    })
}
