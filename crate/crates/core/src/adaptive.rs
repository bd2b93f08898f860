//! Scalar-gain MRAC with the MIT adaptation rule.
//!
//! The adaptive loop applies `u = θ·r` to the plant and adapts `θ` from the
//! tracking error against the reference model. Every sample of the run is
//! kept as a [`DatasetRecord`]; the (error, force) columns are what the
//! network controller is later trained on.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lti::{LtiError, LtiSystem};

#[derive(Debug, Error)]
pub enum MracError {
    #[error("adaptation diverged at t = {time} s ({reason}); {} records kept", records.len())]
    Divergence {
        time: f64,
        reason: String,
        records: Vec<DatasetRecord>,
    },
    #[error("plant and reference model must share a sample period ({plant} vs {model})")]
    SamplePeriodMismatch { plant: f64, model: f64 },
    #[error("invalid MRAC setting: {0}")]
    InvalidSetting(String),
    #[error(transparent)]
    Lti(#[from] LtiError),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot export an empty dataset")]
    Empty,
    #[error("dataset header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("dataset line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Adjustable feedforward gain and its adaptation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MitRuleState {
    pub theta: f64,
    pub gamma: f64,
}

impl MitRuleState {
    pub fn new(theta: f64, gamma: f64) -> Result<Self, MracError> {
        if !theta.is_finite() {
            return Err(MracError::InvalidSetting(format!("initial theta {theta}")));
        }
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(MracError::InvalidSetting(format!(
                "adaptation gain {gamma}"
            )));
        }
        Ok(Self { theta, gamma })
    }
}

/// One explicit-Euler step of dθ/dt = -γ·e·y_m.
pub fn mit_update(
    state: MitRuleState,
    error: f64,
    model_output: f64,
    dt: f64,
) -> Result<MitRuleState, MracError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(MracError::InvalidSetting(format!("time step {dt}")));
    }
    let theta = state.theta + dt * (-state.gamma * error * model_output);
    if !theta.is_finite() {
        return Err(MracError::Divergence {
            time: f64::NAN,
            reason: format!("theta became {theta}"),
            records: Vec::new(),
        });
    }
    Ok(MitRuleState { theta, ..state })
}

/// Commanded tip deflection as a function of time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trajectory {
    Step {
        amplitude: f64,
    },
    /// Starts at `+amplitude`, flips sign every half period.
    SquareWave {
        amplitude: f64,
        period: f64,
    },
}

impl Trajectory {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Trajectory::Step { amplitude } => amplitude,
            Trajectory::SquareWave { amplitude, period } => {
                if t.rem_euclid(period) < period / 2.0 {
                    amplitude
                } else {
                    -amplitude
                }
            }
        }
    }
}

/// Initial condition of the two systems at t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialCondition {
    /// Both systems start at zero state.
    Rest,
    /// Each system starts at its equilibrium for its own t = 0 input:
    /// the reference model already holds r(0) and the plant holds θ₀·r(0).
    #[default]
    Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MracSettings {
    pub gamma: f64,
    pub theta0: f64,
    pub duration: f64,
    pub blowup_limit: f64,
    pub initial: InitialCondition,
}

impl Default for MracSettings {
    fn default() -> Self {
        Self {
            gamma: 5e4,
            theta0: 0.0,
            duration: 20.0,
            blowup_limit: 1e6,
            initial: InitialCondition::Equilibrium,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetRecord {
    pub t: f64,
    pub r: f64,
    pub y_plant: f64,
    pub y_model: f64,
    pub e: f64,
    pub u: f64,
    pub theta: f64,
}

/// Number of periods covering `duration`, rejecting non-integral ratios
/// beyond rounding noise.
pub(crate) fn sample_count(duration: f64, dt: f64) -> Option<usize> {
    if !duration.is_finite() || duration <= 0.0 {
        return None;
    }
    let n = (duration / dt).round();
    ((n * dt - duration).abs() <= 1e-9 * duration.max(1.0)).then_some(n as usize)
}

/// Runs the adaptive loop for `duration` seconds, recording every sample
/// including t = 0 and t = duration.
///
/// The reference model is driven with `r / dc_gain(model)` so its output
/// settles on the commanded deflection regardless of the model's gain sign.
pub fn run_mrac(
    plant: &mut LtiSystem,
    model: &mut LtiSystem,
    trajectory: &Trajectory,
    settings: &MracSettings,
) -> Result<Vec<DatasetRecord>, MracError> {
    let dt = plant.dt();
    if (dt - model.dt()).abs() > 1e-15 {
        return Err(MracError::SamplePeriodMismatch {
            plant: dt,
            model: model.dt(),
        });
    }
    let steps = sample_count(settings.duration, dt)
        .ok_or_else(|| MracError::InvalidSetting(format!("duration {}", settings.duration)))?;
    if settings.blowup_limit.is_nan() || settings.blowup_limit <= 0.0 {
        return Err(MracError::InvalidSetting(format!(
            "blowup limit {}",
            settings.blowup_limit
        )));
    }
    let model_scale = 1.0 / model.dc_gain()?;
    let mut mit = MitRuleState::new(settings.theta0, settings.gamma)?;

    let r0 = trajectory.value(0.0);
    match settings.initial {
        InitialCondition::Rest => {
            plant.reset();
            model.reset();
        }
        InitialCondition::Equilibrium => {
            plant.settle(mit.theta * r0)?;
            model.settle(r0 * model_scale)?;
        }
    }

    let mut records = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let r = trajectory.value(t);
        let u = mit.theta * r;
        let y_model = model.output(r * model_scale);
        let y_plant = plant.output(u);
        let e = y_plant - y_model;
        records.push(DatasetRecord {
            t,
            r,
            y_plant,
            y_model,
            e,
            u,
            theta: mit.theta,
        });

        let limit = settings.blowup_limit;
        if !(mit.theta.abs() <= limit && e.abs() <= limit) {
            return Err(MracError::Divergence {
                time: t,
                reason: format!(
                    "|theta| = {:e}, |e| = {:e}, limit {limit:e}",
                    mit.theta.abs(),
                    e.abs()
                ),
                records,
            });
        }
        if k == steps {
            break;
        }
        mit = match mit_update(mit, e, y_model, dt) {
            Ok(next) => next,
            Err(_) => {
                return Err(MracError::Divergence {
                    time: t,
                    reason: "theta became non-finite".into(),
                    records,
                })
            }
        };
        model.step(r * model_scale)?;
        plant.step(u)?;
    }
    Ok(records)
}

pub const DATASET_HEADER: [&str; 7] = ["t", "r", "y_plant", "y_model", "e", "u_force_N", "theta"];

/// Writes the dataset CSV, optionally preceded by a `# ` comment line.
pub fn export_dataset(
    records: &[DatasetRecord],
    path: &Path,
    comment: Option<&str>,
) -> Result<(), DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut file = io::BufWriter::new(File::create(path)?);
    if let Some(comment) = comment {
        writeln!(file, "# {comment}")?;
    }
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(DATASET_HEADER)?;
    for rec in records {
        writer.write_record(
            [
                rec.t,
                rec.r,
                rec.y_plant,
                rec.y_model,
                rec.e,
                rec.u,
                rec.theta,
            ]
            .map(|v| v.to_string()),
        )?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(DATASET_HEADER) {
        return Err(DatasetError::Header {
            expected: DATASET_HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let mut values = [0.0; 7];
        for (slot, field) in values.iter_mut().zip(row.iter()) {
            *slot = field.trim().parse().map_err(|_| DatasetError::Parse {
                line,
                message: format!("`{field}` is not a number"),
            })?;
        }
        let [t, r, y_plant, y_model, e, u, theta] = values;
        records.push(DatasetRecord {
            t,
            r,
            y_plant,
            y_model,
            e,
            u,
            theta,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{realize, TransferFunction};

    fn first_order(gain: f64, dt: f64) -> LtiSystem {
        realize(
            &TransferFunction::new(vec![gain], vec![1.0, 1.0]).unwrap(),
            dt,
        )
        .unwrap()
    }

    #[test]
    fn zero_error_keeps_theta() {
        let s = MitRuleState::new(1.7, 3.0).unwrap();
        assert_eq!(mit_update(s, 0.0, 0.4, 1e-3).unwrap(), s);
    }

    #[test]
    fn one_step_arithmetic() {
        // 1 + 0.001 * (-1 * 0.1 * 0.5)
        let s = MitRuleState::new(1.0, 1.0).unwrap();
        let next = mit_update(s, 0.1, 0.5, 0.001).unwrap();
        assert!((next.theta - 0.99995).abs() < 1e-15);
    }

    #[test]
    fn update_guards() {
        let s = MitRuleState::new(1.0, 1.0).unwrap();
        assert!(matches!(
            mit_update(s, 0.1, 0.5, 0.0),
            Err(MracError::InvalidSetting(_))
        ));
        let huge = MitRuleState::new(1.0, f64::MAX).unwrap();
        assert!(matches!(
            mit_update(huge, f64::MAX, 2.0, 1.0),
            Err(MracError::Divergence { .. })
        ));
        assert!(MitRuleState::new(f64::NAN, 1.0).is_err());
        assert!(MitRuleState::new(0.0, -1.0).is_err());
    }

    #[test]
    fn square_wave_sign() {
        let w = Trajectory::SquareWave {
            amplitude: 2.0,
            period: 10.0,
        };
        assert_eq!(w.value(0.0), 2.0);
        assert_eq!(w.value(4.999), 2.0);
        assert_eq!(w.value(5.0), -2.0);
        assert_eq!(w.value(12.0), 2.0);
    }

    #[test]
    fn zero_trajectory_stays_at_rest() {
        let mut plant = first_order(1.0, 1e-3);
        let mut model = first_order(1.0, 1e-3);
        let settings = MracSettings {
            gamma: 1.0,
            duration: 2.0,
            ..MracSettings::default()
        };
        let recs = run_mrac(
            &mut plant,
            &mut model,
            &Trajectory::Step { amplitude: 0.0 },
            &settings,
        )
        .unwrap();
        assert_eq!(recs.len(), 2001);
        assert!(recs.iter().all(|r| r.e == 0.0 && r.u == 0.0));
    }

    #[test]
    fn theta_constant_without_error_and_without_gain() {
        let mut plant = first_order(1.0, 1e-3);
        let mut model = first_order(1.0, 1e-3);
        let settings = MracSettings {
            gamma: 0.0,
            theta0: 0.3,
            duration: 1.0,
            ..MracSettings::default()
        };
        let traj = Trajectory::Step { amplitude: 1.0 };
        let recs = run_mrac(&mut plant, &mut model, &traj, &settings).unwrap();
        assert!(recs.iter().all(|r| r.theta == 0.3));
    }

    #[test]
    fn records_are_self_consistent() {
        let mut plant = first_order(2.0, 1e-3);
        let mut model = first_order(1.0, 1e-3);
        let settings = MracSettings {
            gamma: 2.0,
            duration: 5.0,
            initial: InitialCondition::Rest,
            ..MracSettings::default()
        };
        let traj = Trajectory::SquareWave {
            amplitude: 1.0,
            period: 2.0,
        };
        let recs = run_mrac(&mut plant, &mut model, &traj, &settings).unwrap();
        for (k, rec) in recs.iter().enumerate() {
            assert_eq!(rec.e, rec.y_plant - rec.y_model);
            assert_eq!(rec.u, rec.theta * rec.r);
            assert_eq!(rec.t, k as f64 * 1e-3);
        }
    }

    #[test]
    fn divergence_keeps_partial_trace() {
        // the error envelope passes 0.5 early on, tripping the limit
        let mut plant = first_order(1.0, 1e-3);
        let mut model = first_order(1.0, 1e-3);
        let settings = MracSettings {
            gamma: 1.0,
            duration: 10.0,
            blowup_limit: 0.5,
            initial: InitialCondition::Rest,
            theta0: 0.0,
        };
        let traj = Trajectory::Step { amplitude: 1.0 };
        match run_mrac(&mut plant, &mut model, &traj, &settings) {
            Err(MracError::Divergence { records, time, .. }) => {
                assert!(!records.is_empty());
                assert_eq!(records.last().unwrap().t, time);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_periods_are_rejected() {
        let mut plant = first_order(1.0, 1e-3);
        let mut model = first_order(1.0, 2e-3);
        let err = run_mrac(
            &mut plant,
            &mut model,
            &Trajectory::Step { amplitude: 1.0 },
            &MracSettings::default(),
        )
        .unwrap_err();
        assert!(matches!(err, MracError::SamplePeriodMismatch { .. }));
    }

    #[test]
    fn dataset_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let recs: Vec<DatasetRecord> = (0..3)
            .map(|k| DatasetRecord {
                t: k as f64 * 1e-3,
                r: 0.025_587_263_3,
                y_plant: 1.0 / 3.0 * k as f64,
                y_model: -2.0e-7,
                e: 1.0 / 3.0 * k as f64 + 2.0e-7,
                u: 0.1 + 0.2,
                theta: std::f64::consts::PI,
            })
            .collect();
        export_dataset(&recs, &path, None).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(
            text.lines().next().unwrap(),
            "t,r,y_plant,y_model,e,u_force_N,theta"
        );
        assert_eq!(read_dataset(&path).unwrap(), recs);

        export_dataset(&recs, &path, Some("config-digest: abc")).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config-digest: abc\n"));
        assert_eq!(read_dataset(&path).unwrap(), recs);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = export_dataset(&[], &dir.path().join("d.csv"), None).unwrap_err();
        assert!(matches!(err, DatasetError::Empty));
    }

    #[test]
    fn wrong_header_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "t,e,u\n0,0,0\n").unwrap();
        assert!(matches!(
            read_dataset(&path),
            Err(DatasetError::Header { .. })
        ));
        std::fs::write(
            &path,
            "t,r,y_plant,y_model,e,u_force_N,theta\n0,0,0,0,x,0,0\n",
        )
        .unwrap();
        match read_dataset(&path) {
            Err(DatasetError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
