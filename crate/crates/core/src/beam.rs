//! Cantilever model of the soft wrist segment.
//!
//! The segment is treated as a planar cantilever with shear-corrected
//! (Timoshenko) deflection under a tip load, plus constant-curvature tip
//! kinematics. Every function here is pure.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("beam parameter `{name}` must be finite and strictly positive, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("bending angle {0} rad is outside (-pi, pi) or not finite")]
    AngleOutOfRange(f64),
    #[error("axial position {x} m is outside [0, {length}]")]
    PositionOutOfRange { x: f64, length: f64 },
    #[error("load must be finite, got {0}")]
    NonFiniteLoad(f64),
}

/// Material and geometry constants of the wrist segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    youngs_modulus: f64,
    area_moment: f64,
    length: f64,
    shear_coeff: f64,
    cross_section_area: f64,
    shear_modulus: f64,
    curvature_radius: f64,
}

impl BeamParams {
    /// Arguments in the order E, I, L, K, A, G, R (SI units).
    pub fn new(
        youngs_modulus: f64,
        area_moment: f64,
        length: f64,
        shear_coeff: f64,
        cross_section_area: f64,
        shear_modulus: f64,
        curvature_radius: f64,
    ) -> Result<Self, BeamError> {
        for (name, value) in [
            ("E", youngs_modulus),
            ("I", area_moment),
            ("L", length),
            ("K", shear_coeff),
            ("A", cross_section_area),
            ("G", shear_modulus),
            ("R", curvature_radius),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(BeamError::InvalidParameter { name, value });
            }
        }
        Ok(Self {
            youngs_modulus,
            area_moment,
            length,
            shear_coeff,
            cross_section_area,
            shear_modulus,
            curvature_radius,
        })
    }

    pub fn youngs_modulus(&self) -> f64 {
        self.youngs_modulus
    }

    pub fn area_moment(&self) -> f64 {
        self.area_moment
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn shear_coeff(&self) -> f64 {
        self.shear_coeff
    }

    pub fn cross_section_area(&self) -> f64 {
        self.cross_section_area
    }

    pub fn shear_modulus(&self) -> f64 {
        self.shear_modulus
    }

    pub fn curvature_radius(&self) -> f64 {
        self.curvature_radius
    }

    /// Flexural rigidity E·I.
    pub fn flexural_rigidity(&self) -> f64 {
        self.youngs_modulus * self.area_moment
    }

    /// Shear rigidity K·A·G.
    pub fn shear_rigidity(&self) -> f64 {
        self.shear_coeff * self.cross_section_area * self.shear_modulus
    }

    pub fn with_curvature_radius(self, radius: f64) -> Result<Self, BeamError> {
        Self::new(
            self.youngs_modulus,
            self.area_moment,
            self.length,
            self.shear_coeff,
            self.cross_section_area,
            self.shear_modulus,
            radius,
        )
    }

    pub fn with_shear_modulus(self, shear_modulus: f64) -> Result<Self, BeamError> {
        Self::new(
            self.youngs_modulus,
            self.area_moment,
            self.length,
            self.shear_coeff,
            self.cross_section_area,
            shear_modulus,
            self.curvature_radius,
        )
    }

    pub fn with_youngs_modulus(self, youngs_modulus: f64) -> Result<Self, BeamError> {
        Self::new(
            youngs_modulus,
            self.area_moment,
            self.length,
            self.shear_coeff,
            self.cross_section_area,
            self.shear_modulus,
            self.curvature_radius,
        )
    }
}

impl Default for BeamParams {
    fn default() -> Self {
        Self {
            youngs_modulus: 1e6,
            area_moment: 1e-8,
            length: 0.1,
            shear_coeff: 0.9,
            cross_section_area: 1e-4,
            shear_modulus: 4e5,
            curvature_radius: 0.05,
        }
    }
}

/// Which closed form of the cantilever deflection curve to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileVariant {
    /// The literal closed form. It vanishes with zero slope at x = L, i.e. it
    /// is the clamped-at-L mirror of [`ProfileVariant::Corrected`].
    Paper,
    /// Clamped at x = 0, loaded at x = L.
    #[default]
    Corrected,
}

/// Planar position of the segment tip on its arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipPose {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
}

pub fn tip_pose(params: &BeamParams, alpha: f64) -> Result<TipPose, BeamError> {
    if !alpha.is_finite() || alpha.abs() >= PI {
        return Err(BeamError::AngleOutOfRange(alpha));
    }
    let r = params.curvature_radius;
    Ok(TipPose {
        x: r * alpha.sin(),
        y: r * (1.0 - alpha.cos()),
        alpha,
    })
}

/// Constant-curvature bending angle L / R.
pub fn angle_from_arc(params: &BeamParams) -> f64 {
    params.length / params.curvature_radius
}

fn check_load_and_position(params: &BeamParams, force: f64, x: f64) -> Result<(), BeamError> {
    if !force.is_finite() {
        return Err(BeamError::NonFiniteLoad(force));
    }
    if !(0.0..=params.length).contains(&x) {
        return Err(BeamError::PositionOutOfRange {
            x,
            length: params.length,
        });
    }
    Ok(())
}

/// Literal deflection curve under a tip load `force` at axial position `x`:
/// F(L − x)/(KAG) − Fx/(2EI)·(L² − x²/3) + FL³/(3EI).
///
/// The bending terms are evaluated in the factored form F(L − x)²(2L + x)/(6EI),
/// which avoids cancellation near x = L.
pub fn deflection_profile_paper(params: &BeamParams, force: f64, x: f64) -> Result<f64, BeamError> {
    check_load_and_position(params, force, x)?;
    let l = params.length;
    let shear = force * (l - x) / params.shear_rigidity();
    let bending = force * (l - x) * (l - x) * (2.0 * l + x) / (6.0 * params.flexural_rigidity());
    Ok(shear + bending)
}

/// Shear-corrected cantilever clamped at x = 0: F·x/(KAG) + F·x²(3L − x)/(6EI).
pub fn deflection_profile_corrected(
    params: &BeamParams,
    force: f64,
    x: f64,
) -> Result<f64, BeamError> {
    check_load_and_position(params, force, x)?;
    Ok(shear_component(params, force, x) + bending_component(params, force, x))
}

/// Bending part of the corrected profile.
pub fn bending_component(params: &BeamParams, force: f64, x: f64) -> f64 {
    force * x * x * (3.0 * params.length - x) / (6.0 * params.flexural_rigidity())
}

/// Shear part of the corrected profile.
pub fn shear_component(params: &BeamParams, force: f64, x: f64) -> f64 {
    force * x / params.shear_rigidity()
}

pub fn deflection_profile(
    params: &BeamParams,
    variant: ProfileVariant,
    force: f64,
    x: f64,
) -> Result<f64, BeamError> {
    match variant {
        ProfileVariant::Paper => deflection_profile_paper(params, force, x),
        ProfileVariant::Corrected => deflection_profile_corrected(params, force, x),
    }
}

/// Tip deflection M·L²/(2EI) with bending moment M = F·R.
pub fn tip_deflection_from_moment(params: &BeamParams, force: f64) -> f64 {
    let moment = force * params.curvature_radius;
    moment * params.length * params.length / (2.0 * params.flexural_rigidity())
}

/// Tip deflection per newton of tendon tension, R·L²/(2EI).
pub fn static_gain(params: &BeamParams) -> f64 {
    params.curvature_radius * params.length * params.length / (2.0 * params.flexural_rigidity())
}
