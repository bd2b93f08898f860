//! Network-controller loop around the wrist plant, the four motion
//! directions, and tendon-pair allocation.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptive::sample_count;
use crate::beam::{static_gain, BeamError, BeamParams};
use crate::lti::{realize, LtiError, LtiSystem, TransferFunction};
use crate::nn::{Network, NnError, Normalizer};

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("{direction}: simulation diverged at t = {time} s")]
    Divergence {
        direction: Direction,
        time: f64,
        trace: Box<SimTrace>,
    },
    #[error("plant and reference model must share a sample period ({plant} vs {model})")]
    SamplePeriodMismatch { plant: f64, model: f64 },
    #[error("controller network must map one input to one output, got {inputs} -> {outputs}")]
    ControllerShape { inputs: usize, outputs: usize },
    #[error("invalid loop setting: {0}")]
    InvalidSetting(String),
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Network(#[from] NnError),
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("trace has no samples")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[serde(rename = "radial")]
    RadialDeviation,
    #[serde(rename = "ulnar")]
    UlnarDeviation,
    Flexion,
    Extension,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::RadialDeviation,
        Direction::UlnarDeviation,
        Direction::Flexion,
        Direction::Extension,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Direction::RadialDeviation => "radial",
            Direction::UlnarDeviation => "ulnar",
            Direction::Flexion => "flexion",
            Direction::Extension => "extension",
        }
    }

    /// Tendon pair pulled for this motion.
    pub fn tendon_pair(&self) -> [Tendon; 2] {
        match self {
            Direction::RadialDeviation => [Tendon::T1, Tendon::T2],
            Direction::UlnarDeviation => [Tendon::T4, Tendon::T5],
            Direction::Extension => [Tendon::T1, Tendon::T4],
            Direction::Flexion => [Tendon::T2, Tendon::T5],
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "radial" | "radial_deviation" => Ok(Direction::RadialDeviation),
            "ulnar" | "ulnar_deviation" => Ok(Direction::UlnarDeviation),
            "flexion" => Ok(Direction::Flexion),
            "extension" => Ok(Direction::Extension),
            other => Err(format!(
                "unknown direction `{other}` (expected radial, ulnar, flexion or extension)"
            )),
        }
    }
}

/// The four peripheral tendons. The central tendon is not actuated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tendon {
    T1,
    T2,
    T4,
    T5,
}

impl Tendon {
    pub const ALL: [Tendon; 4] = [Tendon::T1, Tendon::T2, Tendon::T4, Tendon::T5];

    fn slot(self) -> usize {
        match self {
            Tendon::T1 => 0,
            Tendon::T2 => 1,
            Tendon::T4 => 2,
            Tendon::T5 => 3,
        }
    }
}

/// Tensions in newtons for tendons 1, 2, 4 and 5.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TendonCommand {
    tensions: [f64; 4],
    /// Set when the controller asked for a push and the pair went slack.
    pub slack: bool,
}

impl TendonCommand {
    pub fn tension(&self, tendon: Tendon) -> f64 {
        self.tensions[tendon.slot()]
    }

    pub fn tensions(&self) -> [f64; 4] {
        self.tensions
    }

    pub fn total(&self) -> f64 {
        self.tensions.iter().sum()
    }
}

/// Splits a pulling force equally across the direction's tendon pair.
pub fn allocate_tendons(direction: Direction, force: f64) -> TendonCommand {
    let mut cmd = TendonCommand::default();
    if force > 0.0 {
        for tendon in direction.tendon_pair() {
            cmd.tensions[tendon.slot()] = force / 2.0;
        }
    } else if force < 0.0 {
        cmd.slack = true;
    }
    cmd
}

/// Commanded tip deflection for a bend of `angle` rad on a constant-curvature
/// arc of the segment's length. Each direction is simulated in its own plane,
/// so the amplitude is the same positive value for all of them.
pub fn reference_for(
    _direction: Direction,
    angle: f64,
    params: &BeamParams,
) -> Result<f64, BeamError> {
    if !(angle > 0.0 && angle < std::f64::consts::FRAC_PI_2) {
        return Err(BeamError::AngleOutOfRange(angle));
    }
    let radius = params.length() / angle;
    Ok(radius * (1.0 - angle.cos()))
}

/// Wrist plant: the beam's static gain followed by a second-order lag.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    static_gain: f64,
    zeta: f64,
    omega_n: f64,
    system: LtiSystem,
}

impl PlantModel {
    pub fn new(params: &BeamParams, zeta: f64, omega_n: f64, dt: f64) -> Result<Self, LoopError> {
        if !(zeta > 0.0 && zeta.is_finite()) || !(omega_n > 0.0 && omega_n.is_finite()) {
            return Err(LoopError::InvalidSetting(format!(
                "plant damping {zeta} and natural frequency {omega_n} must be positive"
            )));
        }
        let gain = static_gain(params);
        let w2 = omega_n * omega_n;
        let tf = TransferFunction::new(vec![gain * w2], vec![1.0, 2.0 * zeta * omega_n, w2])?;
        Ok(Self {
            static_gain: gain,
            zeta,
            omega_n,
            system: realize(&tf, dt)?,
        })
    }

    pub fn static_gain(&self) -> f64 {
        self.static_gain
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn omega_n(&self) -> f64 {
        self.omega_n
    }

    pub fn system(&self) -> &LtiSystem {
        &self.system
    }

    pub fn system_mut(&mut self) -> &mut LtiSystem {
        &mut self.system
    }
}

/// Trained network plus the scaling it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct NnController {
    net: Network,
    normalizer: Normalizer,
}

impl NnController {
    pub fn new(net: Network, normalizer: Normalizer) -> Result<Self, LoopError> {
        if net.input_dim() != 1 || net.output_dim() != 1 {
            return Err(LoopError::ControllerShape {
                inputs: net.input_dim(),
                outputs: net.output_dim(),
            });
        }
        Ok(Self { net, normalizer })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    /// Tendon force commanded for a deflection error.
    pub fn force(&self, error: f64) -> Result<f64, NnError> {
        let scaled = self
            .net
            .eval_scalar(self.normalizer.normalize_input(error))?;
        Ok(self.normalizer.inverse_output(scaled))
    }

    /// One gradient step on ½e², using the plant's static gain as the
    /// sensitivity of the deflection to the force.
    fn adapt(&mut self, error: f64, plant_gain: f64, rate: f64) -> Result<(), NnError> {
        let x = self.normalizer.normalize_input(error);
        let jac = self.net.jacobian(&[x])?;
        let scale = rate * error * plant_gain * self.normalizer.output.span();
        let params: Vec<f64> = self
            .net
            .params()
            .iter()
            .zip(jac.row(0).iter())
            .map(|(p, g)| p - scale * g)
            .collect();
        self.net.set_params(&params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineAdaptation {
    pub enabled: bool,
    pub rate: f64,
}

impl Default for OnlineAdaptation {
    fn default() -> Self {
        Self {
            enabled: false,
            rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSettings {
    pub direction: Direction,
    /// Commanded bending angle, rad.
    pub angle: f64,
    pub duration: f64,
    pub online: OnlineAdaptation,
}

/// Uniformly sampled record of one closed-loop run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub dt: f64,
    pub direction: Option<Direction>,
    pub digest: Option<String>,
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub y_ref: Vec<f64>,
    pub y_plant: Vec<f64>,
    pub e: Vec<f64>,
    pub u_force: Vec<f64>,
    pub tendons: Vec<[f64; 4]>,
    /// True if the controller ever demanded a negative force.
    pub slack: bool,
}

impl SimTrace {
    /// Trace from bare signals; force and tendon columns are zero.
    pub fn from_signals(dt: f64, r: Vec<f64>, y_ref: Vec<f64>, y_plant: Vec<f64>) -> Self {
        assert!(r.len() == y_ref.len() && r.len() == y_plant.len());
        let n = r.len();
        Self {
            dt,
            direction: None,
            digest: None,
            t: (0..n).map(|k| k as f64 * dt).collect(),
            e: y_plant.iter().zip(&y_ref).map(|(p, m)| p - m).collect(),
            r,
            y_ref,
            y_plant,
            u_force: vec![0.0; n],
            tendons: vec![[0.0; 4]; n],
            slack: false,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0)
    }

    fn push(&mut self, t: f64, r: f64, y_ref: f64, y_plant: f64, u: f64, cmd: &TendonCommand) {
        self.t.push(t);
        self.r.push(r);
        self.y_ref.push(y_ref);
        self.y_plant.push(y_plant);
        self.e.push(y_plant - y_ref);
        self.u_force.push(u);
        self.tendons.push(cmd.tensions());
        self.slack |= cmd.slack;
    }
}

/// Runs the network controller against the plant for one direction.
///
/// Both systems start at rest and the commanded deflection steps at t = 0.
/// Per sample: read both outputs, form e = y_plant − y_ref, map e through the
/// network to a force, allocate it to the tendon pair, record, then advance
/// the reference model (input scaled by its inverse DC gain) and the plant
/// (input = total tendon tension).
pub fn run_nn_mrac(
    controller: &NnController,
    plant: &PlantModel,
    model: &LtiSystem,
    params: &BeamParams,
    settings: &LoopSettings,
) -> Result<SimTrace, LoopError> {
    let dt = plant.system().dt();
    if (dt - model.dt()).abs() > 1e-15 {
        return Err(LoopError::SamplePeriodMismatch {
            plant: dt,
            model: model.dt(),
        });
    }
    let steps = sample_count(settings.duration, dt)
        .ok_or_else(|| LoopError::InvalidSetting(format!("duration {}", settings.duration)))?;
    let direction = settings.direction;
    let target = if settings.angle == 0.0 {
        0.0
    } else {
        reference_for(direction, settings.angle, params)?
    };

    let mut plant_sys = plant.system().clone();
    let mut model_sys = model.clone();
    plant_sys.reset();
    model_sys.reset();
    let model_input = target / model_sys.dc_gain()?;
    let mut controller = controller.clone();

    let mut trace = SimTrace {
        dt,
        direction: Some(direction),
        ..SimTrace::default()
    };
    for k in 0..=steps {
        let t = k as f64 * dt;
        let y_ref = model_sys.output(model_input);
        let y_plant = plant_sys.output(0.0);
        let e = y_plant - y_ref;
        let u = controller.force(e)?;
        let cmd = allocate_tendons(direction, u);
        trace.push(t, target, y_ref, y_plant, u, &cmd);

        if !(y_plant.is_finite() && u.is_finite()) {
            return Err(LoopError::Divergence {
                direction,
                time: t,
                trace: Box::new(trace),
            });
        }
        if k == steps {
            break;
        }
        if settings.online.enabled {
            controller.adapt(e, plant.static_gain(), settings.online.rate)?;
        }
        model_sys.step(model_input)?;
        plant_sys.step(cmd.total())?;
    }
    Ok(trace)
}

/// Runs every direction with shared settings, one thread per direction.
pub fn run_all_directions(
    controller: &NnController,
    plant: &PlantModel,
    model: &LtiSystem,
    params: &BeamParams,
    settings: &LoopSettings,
) -> Result<BTreeMap<Direction, SimTrace>, LoopError> {
    let results: Vec<(Direction, Result<SimTrace, LoopError>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = Direction::ALL
            .iter()
            .map(|&direction| {
                let settings = LoopSettings {
                    direction,
                    ..*settings
                };
                scope.spawn(move || {
                    (
                        direction,
                        run_nn_mrac(controller, plant, model, params, &settings),
                    )
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("direction worker panicked"))
            .collect()
    });
    results
        .into_iter()
        .map(|(direction, result)| result.map(|trace| (direction, trace)))
        .collect()
}

pub const TRACE_HEADER: [&str; 10] = [
    "t",
    "r",
    "y_ref",
    "y_plant",
    "e",
    "u_force_N",
    "tendon1",
    "tendon2",
    "tendon4",
    "tendon5",
];

pub const PLOT_HEADER: [&str; 4] = ["t", "y_ref", "y_plant", "e"];

fn comment_line(trace: &SimTrace) -> Option<String> {
    let mut parts = Vec::new();
    if let Some(digest) = &trace.digest {
        parts.push(format!("config-digest: {digest}"));
    }
    if let Some(direction) = trace.direction {
        parts.push(format!("direction: {direction}"));
    }
    (!parts.is_empty()).then(|| format!("# {}", parts.join("; ")))
}

pub fn write_trace(trace: &SimTrace, path: &Path) -> Result<(), TraceError> {
    let mut file = io::BufWriter::new(File::create(path)?);
    if let Some(line) = comment_line(trace) {
        writeln!(file, "{line}")?;
    }
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(TRACE_HEADER)?;
    for k in 0..trace.len() {
        let [t1, t2, t4, t5] = trace.tendons[k];
        let row = [
            trace.t[k],
            trace.r[k],
            trace.y_ref[k],
            trace.y_plant[k],
            trace.e[k],
            trace.u_force[k],
            t1,
            t2,
            t4,
            t5,
        ];
        writer.write_record(row.map(|v| v.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Downsampled `t, y_ref, y_plant, e` columns for external plotting.
pub fn write_plot_data(trace: &SimTrace, path: &Path, stride: usize) -> Result<(), TraceError> {
    let mut file = io::BufWriter::new(File::create(path)?);
    if let Some(line) = comment_line(trace) {
        writeln!(file, "{line}")?;
    }
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(PLOT_HEADER)?;
    for k in (0..trace.len()).step_by(stride.max(1)) {
        let row = [trace.t[k], trace.y_ref[k], trace.y_plant[k], trace.e[k]];
        writer.write_record(row.map(|v| v.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<SimTrace, TraceError> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    let mut trace = SimTrace::default();
    if let Some(comment) = first.strip_prefix('#') {
        for part in comment.split(';') {
            match part.trim().split_once(':') {
                Some(("config-digest", v)) => trace.digest = Some(v.trim().to_string()),
                Some(("direction", v)) => trace.direction = v.trim().parse().ok(),
                _ => {}
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(TraceError::Header {
            expected: TRACE_HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let mut v = [0.0; 10];
        for (slot, field) in v.iter_mut().zip(row.iter()) {
            *slot = field.trim().parse().map_err(|_| TraceError::Parse {
                line,
                message: format!("`{field}` is not a number"),
            })?;
        }
        trace.t.push(v[0]);
        trace.r.push(v[1]);
        trace.y_ref.push(v[2]);
        trace.y_plant.push(v[3]);
        trace.e.push(v[4]);
        trace.u_force.push(v[5]);
        trace.tendons.push([v[6], v[7], v[8], v[9]]);
        trace.slack |= v[5] < 0.0;
    }
    if trace.is_empty() {
        return Err(TraceError::Empty);
    }
    trace.dt = if trace.len() > 1 {
        trace.t[1] - trace.t[0]
    } else {
        0.0
    };
    Ok(trace)
}
