//! SISO transfer functions, their state-space realization, and fixed-step
//! RK4 simulation.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtiError {
    #[error("denominator must have a nonzero leading coefficient")]
    ZeroLeadingCoefficient,
    #[error("transfer function is improper: numerator degree {num} > denominator degree {den}")]
    Improper { num: usize, den: usize },
    #[error("transfer function coefficients must be finite")]
    NonFiniteCoefficient,
    #[error("sample period must be finite and positive, got {0}")]
    InvalidSamplePeriod(f64),
    #[error("input must be finite, got {0}")]
    NonFiniteInput(f64),
    #[error("system has a pole at the origin; DC gain is undefined")]
    NoDcGain,
    #[error(
        "analytic step response needs an underdamped second-order system with constant numerator"
    )]
    UnsupportedCase,
}

/// Rational transfer function, coefficients in descending powers of s.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TransferFunction {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self, LtiError> {
        if num.iter().chain(&den).any(|c| !c.is_finite()) {
            return Err(LtiError::NonFiniteCoefficient);
        }
        match den.first() {
            Some(&lead) if lead != 0.0 => {}
            _ => return Err(LtiError::ZeroLeadingCoefficient),
        }
        // leading zeros in the numerator do not change its degree
        let first_nonzero = num.iter().position(|&c| c != 0.0).unwrap_or(num.len());
        let num = if first_nonzero == num.len() {
            vec![0.0]
        } else {
            num[first_nonzero..].to_vec()
        };
        if num.len() > den.len() {
            return Err(LtiError::Improper {
                num: num.len() - 1,
                den: den.len() - 1,
            });
        }
        Ok(Self { num, den })
    }

    pub fn numerator(&self) -> &[f64] {
        &self.num
    }

    pub fn denominator(&self) -> &[f64] {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    /// Value at s = 0.
    pub fn dc_gain(&self) -> Result<f64, LtiError> {
        let den0 = *self.den.last().unwrap();
        if den0 == 0.0 {
            return Err(LtiError::NoDcGain);
        }
        Ok(*self.num.last().unwrap() / den0)
    }

    /// Evaluates the transfer function at a real frequency point.
    pub fn eval(&self, s: f64) -> f64 {
        let horner = |c: &[f64]| c.iter().fold(0.0, |acc, &x| acc * s + x);
        horner(&self.num) / horner(&self.den)
    }
}

/// Continuous-time state-space system stepped at a fixed period with
/// zero-order-held input.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    d: f64,
    state: DVector<f64>,
    dt: f64,
}

/// Controllable canonical realization of `tf`, starting at zero state.
pub fn realize(tf: &TransferFunction, dt: f64) -> Result<LtiSystem, LtiError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(LtiError::InvalidSamplePeriod(dt));
    }
    let n = tf.order();
    let lead = tf.den[0];
    let den: Vec<f64> = tf.den.iter().map(|c| c / lead).collect();
    // numerator padded to n + 1 coefficients
    let mut num = vec![0.0; n + 1 - tf.num.len()];
    num.extend(tf.num.iter().map(|c| c / lead));

    let d = num[0];
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        // last row: -a_n, ..., -a_1
        a[(n - 1, j)] = -den[n - j];
    }
    let mut b = DVector::zeros(n);
    if n > 0 {
        b[n - 1] = 1.0;
    }
    let c = DVector::from_iterator(n, (0..n).map(|j| num[n - j] - den[n - j] * d));
    Ok(LtiSystem {
        a,
        b,
        c,
        d,
        state: DVector::zeros(n),
        dt,
    })
}

impl LtiSystem {
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn order(&self) -> usize {
        self.state.len()
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }

    /// Output C·x + D·u for the current state.
    pub fn output(&self, u: f64) -> f64 {
        self.c.dot(&self.state) + self.d * u
    }

    pub fn reset(&mut self) {
        self.state.fill(0.0);
    }

    /// -C·A⁻¹·B + D.
    pub fn dc_gain(&self) -> Result<f64, LtiError> {
        if self.order() == 0 {
            return Ok(self.d);
        }
        let x = self.equilibrium(1.0)?;
        Ok(self.c.dot(&x) + self.d)
    }

    /// Puts the state at the equilibrium for a constant input `u`.
    pub fn settle(&mut self, u: f64) -> Result<(), LtiError> {
        self.state = self.equilibrium(u)?;
        Ok(())
    }

    fn equilibrium(&self, u: f64) -> Result<DVector<f64>, LtiError> {
        if self.order() == 0 {
            return Ok(DVector::zeros(0));
        }
        let rhs = -&self.b * u;
        self.a.clone().lu().solve(&rhs).ok_or(LtiError::NoDcGain)
    }

    /// Advances the state by one period with classical RK4 and returns the
    /// output after the update.
    pub fn step(&mut self, u: f64) -> Result<f64, LtiError> {
        if !u.is_finite() {
            return Err(LtiError::NonFiniteInput(u));
        }
        let h = self.dt;
        let bu = &self.b * u;
        let f = |x: &DVector<f64>| &self.a * x + &bu;
        let x = &self.state;
        let k1 = f(x);
        let k2 = f(&(x + &k1 * (h / 2.0)));
        let k3 = f(&(x + &k2 * (h / 2.0)));
        let k4 = f(&(x + &k3 * h));
        let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        self.state = next;
        Ok(self.output(u))
    }

    /// Simulates `samples` steps of a constant input
    /// from the current state, returning the output at t = 0, dt, 2dt, ...
    pub fn step_response(&mut self, u: f64, samples: usize) -> Result<Vec<f64>, LtiError> {
        let mut out = Vec::with_capacity(samples + 1);
        out.push(self.output(u));
        for _ in 0..samples {
            out.push(self.step(u)?);
        }
        Ok(out)
    }
}

/// Closed-form unit-step response of k·ωn²/(s² + 2ζωn·s + ωn²) with 0 < ζ < 1.
pub fn analytic_step_response(tf: &TransferFunction, t: f64) -> Result<f64, LtiError> {
    if tf.order() != 2 || tf.num.len() != 1 {
        return Err(LtiError::UnsupportedCase);
    }
    let lead = tf.den[0];
    let (a1, a0) = (tf.den[1] / lead, tf.den[2] / lead);
    if a0 <= 0.0 {
        return Err(LtiError::UnsupportedCase);
    }
    let wn = a0.sqrt();
    let zeta = a1 / (2.0 * wn);
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(LtiError::UnsupportedCase);
    }
    let k = tf.dc_gain()?;
    let sigma = zeta * wn;
    let wd = wn * (1.0 - zeta * zeta).sqrt();
    Ok(k * (1.0 - (-sigma * t).exp() * ((wd * t).cos() + sigma / wd * (wd * t).sin())))
}
