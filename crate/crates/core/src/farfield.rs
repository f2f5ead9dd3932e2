//! Scattering amplitudes and the identities they satisfy.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{norm, Point};
use crate::quad::SphereQuadrature;

/// Samples of the scattering amplitude `A(beta, alpha, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    pub directions: Vec<Point>,
    pub values: Vec<Complex64>,
}

impl FarField {
    pub fn new(directions: Vec<Point>, values: Vec<Complex64>) -> Result<Self> {
        if directions.len() != values.len() {
            return Err(Error::InvalidParameter("direction/value count mismatch".into()));
        }
        check_unit(&directions)?;
        Ok(FarField { directions, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `sup |self - other|` over shared directions.
    pub fn sup_distance(&self, other: &FarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub fn check_unit(directions: &[Point]) -> Result<()> {
    for d in directions {
        if (norm(d) - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidParameter(format!("direction {d:?} is not a unit vector")));
        }
    }
    Ok(())
}

/// Normalize a list of nonzero vectors.
pub fn unit_directions(raw: &[Point]) -> Vec<Point> {
    raw.iter()
        .map(|d| {
            let n = norm(d);
            [d[0] / n, d[1] / n, d[2] / n]
        })
        .collect()
}

/// Both sides of the optical theorem: `Im A(alpha, alpha)` and
/// `(k / 4 pi) int_{S^2} |A(beta, alpha)|^2 d beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalCheck {
    pub forward_imag: f64,
    pub cross_section_term: f64,
}

impl OpticalCheck {
    /// From amplitudes at the quadrature nodes of `sphere` and the forward value.
    pub fn from_samples(k: f64, sphere: &SphereQuadrature, values: &[Complex64], forward: Complex64) -> Self {
        let integral: f64 = values.iter().zip(&sphere.weights).map(|(v, w)| w * v.norm_sqr()).sum();
        OpticalCheck {
            forward_imag: forward.im,
            cross_section_term: k / (4.0 * std::f64::consts::PI) * integral,
        }
    }

    pub fn relative_residual(&self) -> f64 {
        let scale = self.forward_imag.abs().max(self.cross_section_term.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.forward_imag - self.cross_section_term).abs() / scale
        }
    }
}

/// Evaluate the optical theorem given an amplitude routine for a fixed
/// incident direction.
pub fn optical_theorem<F>(k: f64, alpha: Point, sphere: &SphereQuadrature, amplitude: F) -> OpticalCheck
where
    F: Fn(&[Point]) -> Vec<Complex64>,
{
    let mut dirs = sphere.directions.clone();
    dirs.push(alpha);
    let vals = amplitude(&dirs);
    OpticalCheck::from_samples(k, sphere, &vals[..sphere.len()], vals[sphere.len()])
}
