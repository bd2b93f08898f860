//! The four workflow stages (dataset, train, simulate, evaluate) built from
//! a [`Config`]. Nothing here touches the filesystem.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::adaptive::{run_mrac, DatasetRecord, MracError, MracSettings, Trajectory};
use crate::beam::{BeamError, BeamParams};
use crate::closed_loop::{
    reference_for, run_all_directions, run_nn_mrac, Direction, LoopError, LoopSettings,
    NnController, OnlineAdaptation, PlantModel, SimTrace,
};
use crate::config::{Config, ConfigError, DirectionChoice};
use crate::lti::{realize, LtiError, LtiSystem, TransferFunction};
use crate::metrics::{evaluate, MetricsError, MetricsReport};
use crate::nn::{
    evaluate_regression, train_lm, Activation, LmOptions, Network, NnError, Regression, TrainError,
    TrainReport, TrainingSet,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Mrac(#[from] MracError),
    #[error(transparent)]
    Network(#[from] NnError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("controller layers {found:?} do not match the configured {expected:?}")]
    LayerMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
}

/// Plant, reference model and beam constants shared by every stage.
#[derive(Debug, Clone)]
pub struct Components {
    pub params: BeamParams,
    pub plant: PlantModel,
    pub reference: LtiSystem,
}

impl Components {
    pub fn from_config(config: &Config) -> Result<Self, PipelineError> {
        let params = config.beam.params()?;
        let dt = config.reference.dt;
        let tf = TransferFunction::new(config.reference.num.clone(), config.reference.den.clone())?;
        Ok(Self {
            params,
            plant: PlantModel::new(&params, config.plant.zeta, config.plant.omega_n, dt)?,
            reference: realize(&tf, dt)?,
        })
    }
}

pub fn angle_rad(config: &Config) -> f64 {
    config.control_loop.angle_deg.to_radians()
}

/// Runs the MIT-rule MRAC on the commanded step and returns every sample.
pub fn generate_dataset(config: &Config) -> Result<Vec<DatasetRecord>, PipelineError> {
    let c = Components::from_config(config)?;
    let amplitude = reference_for(Direction::UlnarDeviation, angle_rad(config), &c.params)?;
    let settings = MracSettings {
        gamma: config.mrac.gamma,
        theta0: config.mrac.theta0,
        duration: config.mrac.duration,
        blowup_limit: config.mrac.blowup_limit,
        initial: config.mrac.initial,
    };
    let mut plant = c.plant.system().clone();
    let mut reference = c.reference.clone();
    Ok(run_mrac(
        &mut plant,
        &mut reference,
        &Trajectory::Step { amplitude },
        &settings,
    )?)
}

/// (error → force) pairs from every `stride`-th record, min-max scaled.
pub fn training_set(records: &[DatasetRecord], stride: usize) -> Result<TrainingSet, NnError> {
    let (errors, forces): (Vec<f64>, Vec<f64>) = records
        .iter()
        .step_by(stride.max(1))
        .map(|r| (r.e, r.u))
        .unzip();
    TrainingSet::from_raw(&errors, &forces)
}

pub fn lm_options(config: &Config) -> LmOptions {
    LmOptions {
        max_epochs: config.nn.max_epochs,
        lambda0: config.nn.lambda0,
        goal_sse: config.nn.goal_sse,
        val_fraction: config.train.val_fraction,
        test_fraction: config.train.val_fraction,
        seed: config.nn.seed,
        ..LmOptions::default()
    }
}

pub fn initial_network(config: &Config) -> Result<Network, NnError> {
    Network::seeded(
        &config.nn.layers,
        Activation::Sigmoid,
        config.nn.output_activation,
        config.nn.seed,
    )
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub controller: NnController,
    pub report: TrainReport,
    /// Correlation and MSE over all pairs (train, validation and test).
    pub regression: Regression,
}

pub fn train_controller(
    config: &Config,
    records: &[DatasetRecord],
) -> Result<TrainOutcome, PipelineError> {
    let data = training_set(records, config.train.stride)?;
    let (net, report) = train_lm(&initial_network(config)?, &data, &lm_options(config))?;
    let regression = evaluate_regression(&net, &data)?;
    Ok(TrainOutcome {
        controller: NnController::new(net, *data.normalizer())?,
        report,
        regression,
    })
}

/// Plain `key = value` summary of a training run.
pub fn format_train_report(outcome: &TrainOutcome, digest: &str) -> String {
    let r = &outcome.report;
    let mut out = String::new();
    let _ = writeln!(out, "# config-digest: {digest}");
    let _ = writeln!(out, "epochs = {}", r.epochs);
    let _ = writeln!(out, "stop = \"{}\"", r.stop.as_str());
    let _ = writeln!(out, "gradient = {:e}", r.gradient_norm);
    let _ = writeln!(out, "final_lambda = {:e}", r.final_lambda);
    let _ = writeln!(out, "training_loss = {:e}", r.train_mse());
    let _ = writeln!(out, "validation_loss = {:e}", r.val_mse());
    let _ = writeln!(out, "test_loss = {:e}", r.test_mse());
    let _ = writeln!(out, "r_value = {}", outcome.regression.r);
    let _ = writeln!(out, "mse_all = {:e}", outcome.regression.mse);
    let _ = writeln!(
        out,
        "samples = {{ train = {}, validation = {}, test = {} }}",
        r.train_count, r.val_count, r.test_count
    );
    out
}

fn loop_settings(config: &Config, direction: Direction) -> LoopSettings {
    LoopSettings {
        direction,
        angle: angle_rad(config),
        duration: config.control_loop.duration,
        online: OnlineAdaptation {
            enabled: config.control_loop.online,
            rate: config.control_loop.eta,
        },
    }
}

/// Closed-loop runs for the chosen directions, stamped with the config
/// digest.
pub fn simulate(
    config: &Config,
    controller: &NnController,
    choice: DirectionChoice,
) -> Result<BTreeMap<Direction, SimTrace>, PipelineError> {
    let found = controller.network().sizes();
    if found != config.nn.layers.as_slice() {
        return Err(PipelineError::LayerMismatch {
            expected: config.nn.layers.clone(),
            found: found.to_vec(),
        });
    }
    let c = Components::from_config(config)?;
    let mut traces = match choice {
        DirectionChoice::All => run_all_directions(
            controller,
            &c.plant,
            &c.reference,
            &c.params,
            &loop_settings(config, Direction::UlnarDeviation),
        )?,
        DirectionChoice::One(direction) => {
            let settings = loop_settings(config, direction);
            let trace = run_nn_mrac(controller, &c.plant, &c.reference, &c.params, &settings)?;
            BTreeMap::from([(direction, trace)])
        }
    };
    let digest = config.digest();
    for trace in traces.values_mut() {
        trace.digest = Some(digest.clone());
    }
    Ok(traces)
}

pub fn evaluate_trace(config: &Config, trace: &SimTrace) -> Result<MetricsReport, MetricsError> {
    evaluate(trace, config.metrics.band, config.metrics.window)
}
