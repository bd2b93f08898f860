//! Finite-difference verification of the analytic Jacobian.

use nalgebra::DMatrix;

use super::{Network, NnError};

/// Central differences of every output with respect to every parameter.
pub fn finite_difference_jacobian(
    net: &Network,
    x: &[f64],
    step: f64,
) -> Result<DMatrix<f64>, NnError> {
    let params = net.params();
    let mut probe = net.clone();
    let mut shifted = params.clone();
    let mut jac = DMatrix::zeros(net.output_dim(), params.len());
    for k in 0..params.len() {
        shifted[k] = params[k] + step;
        probe.set_params(&shifted)?;
        let plus = probe.forward(x)?;
        shifted[k] = params[k] - step;
        probe.set_params(&shifted)?;
        let minus = probe.forward(x)?;
        shifted[k] = params[k];
        for o in 0..plus.len() {
            jac[(o, k)] = (plus[o] - minus[o]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// |a − b| / max(|a|, |b|, 1); entries below unit magnitude are compared
/// absolutely.
pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Number of Jacobian entries compared.
    pub entries: usize,
}

impl GradCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error.is_finite() && self.max_rel_error <= tol
    }
}

/// Compares the reverse-mode Jacobian against central differences at each
/// input. For every entry the smallest error over `steps` counts, which keeps
/// exactly affine networks free of truncation and rounding noise.
pub fn gradcheck(net: &Network, inputs: &[Vec<f64>], steps: &[f64]) -> Result<GradCheck, NnError> {
    let mut max_rel_error: f64 = 0.0;
    let mut entries = 0;
    for x in inputs {
        let analytic = net.jacobian(x)?;
        let mut best = DMatrix::from_element(analytic.nrows(), analytic.ncols(), f64::INFINITY);
        for &h in steps {
            let numeric = finite_difference_jacobian(net, x, h)?;
            for (i, (a, n)) in analytic.iter().zip(numeric.iter()).enumerate() {
                let err = relative_error(*a, *n);
                if err.is_nan() || best[i].is_nan() {
                    best[i] = f64::NAN;
                } else if err < best[i] {
                    best[i] = err;
                }
            }
        }
        entries += best.len();
        for &e in best.iter() {
            // NaN poisons the result so corrupted weights never pass
            if e.is_nan() || max_rel_error.is_nan() {
                max_rel_error = f64::NAN;
            } else {
                max_rel_error = max_rel_error.max(e);
            }
        }
    }
    Ok(GradCheck {
        max_rel_error,
        entries,
    })
}
