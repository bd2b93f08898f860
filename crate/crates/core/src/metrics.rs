//! Tracking metrics of a closed-loop trace: RMSE against the reference-model
//! output, band settling time and terminal steady-state error.

use thiserror::Error;

use crate::closed_loop::SimTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("trace has no samples")]
    EmptyTrace,
    #[error("final reference value is zero; the settling band is undefined")]
    ZeroReference,
    #[error("averaging window {window} s must be shorter than the trace ({duration} s)")]
    WindowTooLong { window: f64, duration: f64 },
    #[error("settling band must be a positive fraction, got {0}")]
    InvalidBand(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub rmse: f64,
    /// `None` when the output never stays inside the band.
    pub settling_time: Option<f64>,
    pub steady_state_error: f64,
    pub band: f64,
    pub window: f64,
}

impl MetricsReport {
    pub fn settled(&self) -> bool {
        self.settling_time.is_some()
    }
}

/// Root mean square of y_plant − y_ref.
pub fn rmse(trace: &SimTrace) -> Result<f64, MetricsError> {
    if trace.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let sum: f64 = trace
        .y_plant
        .iter()
        .zip(&trace.y_ref)
        .map(|(p, m)| (p - m) * (p - m))
        .sum();
    Ok((sum / trace.len() as f64).sqrt())
}

fn final_reference(trace: &SimTrace) -> Result<f64, MetricsError> {
    let r_final = *trace.r.last().ok_or(MetricsError::EmptyTrace)?;
    if r_final == 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    Ok(r_final)
}

/// Time of the first sample after which |y_plant − r_final| stays within
/// `band · |r_final|` for the rest of the trace.
pub fn settling_time(trace: &SimTrace, band: f64) -> Result<Option<f64>, MetricsError> {
    if band.is_nan() || band <= 0.0 {
        return Err(MetricsError::InvalidBand(band));
    }
    let r_final = final_reference(trace)?;
    let tol = band * r_final.abs();
    let last_outside = trace
        .y_plant
        .iter()
        .rposition(|y| (y - r_final).abs() > tol);
    Ok(match last_outside {
        None => Some(trace.t[0]),
        Some(k) if k + 1 == trace.len() => None,
        Some(k) => Some(trace.t[k + 1]),
    })
}

/// |mean(y_plant − r_final)| over samples with t ≥ t_end − window.
pub fn steady_state_error(trace: &SimTrace, window: f64) -> Result<f64, MetricsError> {
    let r_final = *trace.r.last().ok_or(MetricsError::EmptyTrace)?;
    let duration = trace.duration() - trace.t[0];
    if window.is_nan() || window <= 0.0 || window >= duration {
        return Err(MetricsError::WindowTooLong { window, duration });
    }
    let start = trace.duration() - window - 1e-9 * trace.dt.max(f64::EPSILON);
    let (sum, count) = trace
        .t
        .iter()
        .zip(&trace.y_plant)
        .filter(|(t, _)| **t >= start)
        .fold((0.0, 0usize), |(s, n), (_, y)| (s + (y - r_final), n + 1));
    Ok((sum / count as f64).abs())
}

pub fn evaluate(trace: &SimTrace, band: f64, window: f64) -> Result<MetricsReport, MetricsError> {
    Ok(MetricsReport {
        rmse: rmse(trace)?,
        settling_time: settling_time(trace, band)?,
        steady_state_error: steady_state_error(trace, window)?,
        band,
        window,
    })
}

/// Arithmetic mean of several reports; settling time is `None` if any run
/// failed to settle.
pub fn average(reports: &[MetricsReport]) -> Option<MetricsReport> {
    let first = reports.first()?;
    let n = reports.len() as f64;
    let settling = reports
        .iter()
        .map(|r| r.settling_time)
        .sum::<Option<f64>>()
        .map(|s| s / n);
    Some(MetricsReport {
        rmse: reports.iter().map(|r| r.rmse).sum::<f64>() / n,
        settling_time: settling,
        steady_state_error: reports.iter().map(|r| r.steady_state_error).sum::<f64>() / n,
        band: first.band,
        window: first.window,
    })
}
