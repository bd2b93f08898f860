//! Levenberg–Marquardt on the sum of squared residuals.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::{Network, NnError, TrainingSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyData,
    #[error("network maps {inputs} -> {outputs}; training needs a 1 -> 1 network")]
    Shape { inputs: usize, outputs: usize },
    #[error("normal matrix stayed singular up to lambda = {0:e}")]
    Singular(f64),
    #[error("loss became non-finite at epoch {0}")]
    Divergence(usize),
    #[error("targets have zero variance; correlation is undefined")]
    ZeroVariance,
    #[error(transparent)]
    Network(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_epochs: usize,
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub lambda_max: f64,
    pub grad_tol: f64,
    /// Stop once the training SSE is at or below this value.
    pub goal_sse: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_epochs: 1000,
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.1,
            lambda_max: 1e10,
            grad_tol: 1e-14,
            goal_sse: 0.0,
            val_fraction: 0.15,
            test_fraction: 0.15,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    GradientTolerance,
    Goal,
    /// No damping up to `lambda_max` reduced the loss.
    LambdaCeiling,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::MaxEpochs => "max_epochs",
            StopReason::GradientTolerance => "gradient_tolerance",
            StopReason::Goal => "goal",
            StopReason::LambdaCeiling => "lambda_ceiling",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: usize,
    pub train_sse: f64,
    pub train_count: usize,
    pub val_sse: f64,
    pub val_count: usize,
    pub test_sse: f64,
    pub test_count: usize,
    pub final_lambda: f64,
    /// Euclidean norm of Jᵀr at the final parameters.
    pub gradient_norm: f64,
    pub stop: StopReason,
    /// Training SSE after each accepted epoch; entry 0 is the initial loss.
    pub train_history: Vec<f64>,
    pub val_history: Vec<f64>,
}

impl TrainReport {
    pub fn train_mse(&self) -> f64 {
        self.train_sse / self.train_count as f64
    }

    pub fn val_mse(&self) -> f64 {
        mean_or_zero(self.val_sse, self.val_count)
    }

    pub fn test_mse(&self) -> f64 {
        mean_or_zero(self.test_sse, self.test_count)
    }
}

fn mean_or_zero(sse: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sse / n as f64
    }
}

fn sse(net: &Network, data: &TrainingSet) -> f64 {
    data.inputs()
        .iter()
        .zip(data.targets())
        .map(|(&x, &y)| {
            let pred = net.eval_scalar(x).unwrap_or(f64::NAN);
            (y - pred).powi(2)
        })
        .sum()
}

/// SSE, JᵀJ and Jᵀr with residual r = target − prediction.
fn normal_equations(net: &Network, data: &TrainingSet) -> (f64, DMatrix<f64>, DVector<f64>) {
    let p = net.param_count();
    let n = data.len();
    let mut jac = DMatrix::zeros(n, p);
    let mut residuals = DVector::zeros(n);
    let mut row = vec![0.0; p];
    for (k, (&x, &y)) in data.inputs().iter().zip(data.targets()).enumerate() {
        let pred = net.value_and_gradient(&[x], &mut row);
        residuals[k] = y - pred;
        for (c, v) in row.iter().enumerate() {
            jac[(k, c)] = *v;
        }
    }
    let jtj = jac.tr_mul(&jac);
    let jtr = jac.tr_mul(&residuals);
    (residuals.norm_squared(), jtj, jtr)
}

/// Solves (JᵀJ + λI)·δ = Jᵀr; `None` if the damped matrix is not positive
/// definite.
pub fn lm_step(jtj: &DMatrix<f64>, jtr: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let mut damped = jtj.clone();
    for i in 0..damped.nrows() {
        damped[(i, i)] += lambda;
    }
    let step = damped.cholesky()?.solve(jtr);
    step.iter().all(|v| v.is_finite()).then_some(step)
}

/// Trains a copy of `net` on the training partition of `data`.
pub fn train_lm(
    net: &Network,
    data: &TrainingSet,
    opts: &LmOptions,
) -> Result<(Network, TrainReport), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    if net.input_dim() != 1 || net.output_dim() != 1 {
        return Err(TrainError::Shape {
            inputs: net.input_dim(),
            outputs: net.output_dim(),
        });
    }
    let split = data.split(opts.val_fraction, opts.test_fraction, opts.seed);
    let train = data.subset(&split.train);
    let val = data.subset(&split.validation);
    let test = data.subset(&split.test);

    let mut net = net.clone();
    let mut params = net.params();
    let mut lambda = opts.lambda0;
    let (mut loss, mut jtj, mut jtr) = normal_equations(&net, &train);
    if !loss.is_finite() {
        return Err(TrainError::Divergence(0));
    }
    let mut train_history = vec![loss];
    let mut val_history = vec![sse(&net, &val)];
    let mut epochs = 0;

    let stop = loop {
        if loss <= opts.goal_sse {
            break StopReason::Goal;
        }
        if jtr.norm() <= opts.grad_tol {
            break StopReason::GradientTolerance;
        }
        if epochs >= opts.max_epochs {
            break StopReason::MaxEpochs;
        }

        let mut accepted = None;
        let mut last_solve_failed = false;
        while lambda <= opts.lambda_max {
            match lm_step(&jtj, &jtr, lambda) {
                Some(delta) => {
                    last_solve_failed = false;
                    let candidate: Vec<f64> = params
                        .iter()
                        .zip(delta.iter())
                        .map(|(p, d)| p + d)
                        .collect();
                    if let Ok(trial) = net.with_params(&candidate) {
                        let trial_loss = sse(&trial, &train);
                        if trial_loss.is_finite() && trial_loss < loss {
                            accepted = Some((trial, candidate, trial_loss));
                            break;
                        }
                    }
                }
                None => last_solve_failed = true,
            }
            lambda *= opts.lambda_up;
        }

        let Some((trial, candidate, _)) = accepted else {
            if last_solve_failed {
                return Err(TrainError::Singular(lambda));
            }
            lambda = opts.lambda_max;
            break StopReason::LambdaCeiling;
        };
        lambda = (lambda * opts.lambda_down).max(f64::MIN_POSITIVE);
        net = trial;
        params = candidate;
        epochs += 1;
        (loss, jtj, jtr) = normal_equations(&net, &train);
        if !loss.is_finite() {
            return Err(TrainError::Divergence(epochs));
        }
        train_history.push(loss);
        val_history.push(sse(&net, &val));
    };

    let report = TrainReport {
        epochs,
        train_sse: loss,
        train_count: train.len(),
        val_sse: *val_history.last().unwrap(),
        val_count: val.len(),
        test_sse: sse(&net, &test),
        test_count: test.len(),
        final_lambda: lambda,
        gradient_norm: jtr.norm(),
        stop,
        train_history,
        val_history,
    };
    Ok((net, report))
}

/// Pearson correlation and mean squared error between network predictions
/// and targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub r: f64,
    pub mse: f64,
}

pub fn evaluate_regression(net: &Network, data: &TrainingSet) -> Result<Regression, TrainError> {
    let predictions = data
        .inputs()
        .iter()
        .map(|&x| net.eval_scalar(x))
        .collect::<Result<Vec<_>, _>>()?;
    regression_stats(&predictions, data.targets())
}

/// Constant predictions have no linear association with the targets and
/// give r = 0.
pub fn regression_stats(predictions: &[f64], targets: &[f64]) -> Result<Regression, TrainError> {
    if targets.is_empty() || predictions.len() != targets.len() {
        return Err(TrainError::EmptyData);
    }
    let n = targets.len() as f64;
    let mean_p = predictions.iter().sum::<f64>() / n;
    let mean_t = targets.iter().sum::<f64>() / n;
    let (mut cov, mut var_p, mut var_t, mut sq) = (0.0, 0.0, 0.0, 0.0);
    for (&p, &t) in predictions.iter().zip(targets) {
        let (dp, dt) = (p - mean_p, t - mean_t);
        cov += dp * dt;
        var_p += dp * dp;
        var_t += dt * dt;
        sq += (p - t) * (p - t);
    }
    if var_t == 0.0 {
        return Err(TrainError::ZeroVariance);
    }
    let r = if var_p == 0.0 {
        0.0
    } else {
        cov / (var_p.sqrt() * var_t.sqrt())
    };
    Ok(Regression { r, mse: sq / n })
}
