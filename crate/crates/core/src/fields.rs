//! Domains, scalar fields, wave parameters and the free-space kernels.
//!
//! Every point is a `[f64; 3]`. One-dimensional problems use the first
//! coordinate and leave the others at zero.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Default upper bound on the scatterer density `n(x)`.
///
/// Non-overlapping balls on a cubic packing need `n <= pi/6`.
pub const N_MAX_DEFAULT: f64 = 0.5;

#[inline]
pub fn dist(x: &Point, y: &Point) -> f64 {
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

#[inline]
pub fn dot(x: &Point, y: &Point) -> f64 {
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

#[inline]
pub fn norm(x: &Point) -> f64 {
    dot(x, x).sqrt()
}

/// A bounded region of space: the support `D` of the potential, or a
/// counting subregion.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundedDomain {
    /// Half-open box `min <= x < max` per axis.
    Box { min: Point, max: Point },
    /// Open ball `|x - center| < radius`.
    Ball { center: Point, radius: f64 },
}

impl BoundedDomain {
    pub fn unit_cube() -> Self {
        BoundedDomain::Box {
            min: [0.0; 3],
            max: [1.0; 3],
        }
    }

    pub fn new_box(min: Point, max: Point) -> Result<Self> {
        if (0..3).any(|i| !(max[i] > min[i]) || !min[i].is_finite() || !max[i].is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "box needs min < max on every axis, got {min:?} .. {max:?}"
            )));
        }
        Ok(BoundedDomain::Box { min, max })
    }

    pub fn new_ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(BoundedDomain::Ball { center, radius })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BoundedDomain::Box { min, max } => Self::new_box(min, max).map(|_| ()),
            BoundedDomain::Ball { center, radius } => Self::new_ball(center, radius).map(|_| ()),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            BoundedDomain::Box { min, max } => (0..3).map(|i| max[i] - min[i]).product(),
            BoundedDomain::Ball { radius, .. } => 4.0 * PI * radius.powi(3) / 3.0,
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        match self {
            BoundedDomain::Box { min, max } => (0..3).all(|i| x[i] >= min[i] && x[i] < max[i]),
            BoundedDomain::Ball { center, radius } => dist(x, center) < *radius,
        }
    }

    /// Distance from an interior point to the boundary; negative outside.
    pub fn depth(&self, x: &Point) -> f64 {
        match self {
            BoundedDomain::Box { min, max } => (0..3)
                .map(|i| (x[i] - min[i]).min(max[i] - x[i]))
                .fold(f64::INFINITY, f64::min),
            BoundedDomain::Ball { center, radius } => radius - dist(x, center),
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match *self {
            BoundedDomain::Box { min, max } => (min, max),
            BoundedDomain::Ball { center, radius } => (
                [center[0] - radius, center[1] - radius, center[2] - radius],
                [center[0] + radius, center[1] + radius, center[2] + radius],
            ),
        }
    }

    pub fn center(&self) -> Point {
        let (lo, hi) = self.bounding_box();
        [
            0.5 * (lo[0] + hi[0]),
            0.5 * (lo[1] + hi[1]),
            0.5 * (lo[2] + hi[2]),
        ]
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        dist(&lo, &hi)
    }
}

/// A continuous real function on a domain with declared bounds.
///
/// Implementations must be pure.
pub trait ScalarField: Send + Sync + fmt::Debug {
    fn eval(&self, x: &Point) -> f64;
    /// `(min, max)` over the whole space; every evaluation lies inside.
    fn bounds(&self) -> (f64, f64);
}

/// Built-in catalog of fields, selectable by name in configs.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`
    Gaussian {
        amplitude: f64,
        center: Point,
        width: f64,
    },
    /// `offset + amplitude * sin(2 pi frequency x[axis] + phase)`
    Sinusoid {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        #[serde(default)]
        axis: usize,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `depth` inside the open ball, zero outside.
    SphericalWell {
        depth: f64,
        center: Point,
        radius: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        match self {
            Profile::Gaussian { width, .. } if !(*width > 0.0) => bad("gaussian width must be > 0"),
            Profile::Sinusoid { axis, .. } if *axis > 2 => bad("sinusoid axis must be 0, 1 or 2"),
            Profile::SphericalWell { radius, .. } if !(*radius > 0.0) => {
                bad("spherical-well radius must be > 0")
            }
            _ => Ok(()),
        }
    }

    /// Distance over which the profile changes appreciably.
    pub fn length_scale(&self) -> f64 {
        match *self {
            Profile::Constant { .. } => f64::INFINITY,
            Profile::Gaussian { width, .. } => width,
            Profile::Sinusoid { frequency, .. } => 1.0 / frequency.abs(),
            Profile::SphericalWell { radius, .. } => radius,
        }
    }

    pub fn into_field(self) -> Arc<dyn ScalarField> {
        Arc::new(self)
    }
}

impl ScalarField for Profile {
    fn eval(&self, x: &Point) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let r = dist(x, &center);
                amplitude * (-r * r / (2.0 * width * width)).exp()
            }
            Profile::Sinusoid {
                offset,
                amplitude,
                axis,
                frequency,
                phase,
            } => offset + amplitude * (2.0 * PI * frequency * x[axis] + phase).sin(),
            Profile::SphericalWell {
                depth,
                center,
                radius,
            } => {
                if dist(x, &center) < radius {
                    depth
                } else {
                    0.0
                }
            }
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            Profile::Constant { value } => (value, value),
            Profile::Gaussian { amplitude, .. } | Profile::SphericalWell { depth: amplitude, .. } => {
                (amplitude.min(0.0), amplitude.max(0.0))
            }
            Profile::Sinusoid {
                offset, amplitude, ..
            } => (offset - amplitude.abs(), offset + amplitude.abs()),
        }
    }
}

/// `inner(x) / divisor`.
#[derive(Debug, Clone)]
pub struct Divided {
    pub inner: Arc<dyn ScalarField>,
    pub divisor: f64,
}

impl ScalarField for Divided {
    fn eval(&self, x: &Point) -> f64 {
        self.inner.eval(x) / self.divisor
    }

    fn bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.inner.bounds();
        let (a, b) = (lo / self.divisor, hi / self.divisor);
        (a.min(b), a.max(b))
    }
}

/// A closure with declared bounds.
pub struct FnField<F> {
    f: F,
    bounds: (f64, f64),
}

impl<F> FnField<F>
where
    F: Fn(&Point) -> f64 + Send + Sync + 'static,
{
    pub fn new(f: F, bounds: (f64, f64)) -> Arc<dyn ScalarField> {
        Arc::new(FnField { f, bounds })
    }
}

impl<F> fmt::Debug for FnField<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").field("bounds", &self.bounds).finish()
    }
}

impl<F> ScalarField for FnField<F>
where
    F: Fn(&Point) -> f64 + Send + Sync,
{
    fn eval(&self, x: &Point) -> f64 {
        (self.f)(x)
    }

    fn bounds(&self) -> (f64, f64) {
        self.bounds
    }
}

/// The engineered potential and its factorization `q = n A`.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub q: Arc<dyn ScalarField>,
    /// Scatterer density, dimensionless, per ball volume.
    pub n: Arc<dyn ScalarField>,
    /// Strength inside each ball.
    pub strength: Arc<dyn ScalarField>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Factorization {
    /// `n = level`, `A = q / level`.
    ConstantDensity,
    /// `A = level`, `n = q / level`.
    ConstantStrength,
}

/// Split `q` into a density and a strength field.
pub fn factorize_potential(
    q: Arc<dyn ScalarField>,
    strategy: Factorization,
    level: f64,
    n_max: f64,
) -> Result<PotentialSpec> {
    match strategy {
        Factorization::ConstantDensity => {
            if !(level > 0.0) {
                return Err(Error::InfeasibleFactorization(format!(
                    "constant density must be positive, got {level}"
                )));
            }
            if level > n_max {
                return Err(Error::InfeasibleFactorization(format!(
                    "density {level} exceeds n_max = {n_max}; balls would overlap"
                )));
            }
            Ok(PotentialSpec {
                n: Profile::Constant { value: level }.into_field(),
                strength: Arc::new(Divided {
                    inner: q.clone(),
                    divisor: level,
                }),
                q,
            })
        }
        Factorization::ConstantStrength => {
            if level == 0.0 || !level.is_finite() {
                return Err(Error::InfeasibleFactorization(
                    "constant strength must be nonzero".into(),
                ));
            }
            let (lo, hi) = q.bounds();
            if lo < 0.0 && hi > 0.0 {
                return Err(Error::InfeasibleFactorization(format!(
                    "q changes sign (bounds {lo} .. {hi}); n = q/A would go negative"
                )));
            }
            if (level > 0.0 && lo < 0.0) || (level < 0.0 && hi > 0.0) {
                return Err(Error::InfeasibleFactorization(format!(
                    "sign of A0 = {level} disagrees with q (bounds {lo} .. {hi})"
                )));
            }
            let n = Divided {
                inner: q.clone(),
                divisor: level,
            };
            let (_, n_hi) = n.bounds();
            if n_hi > n_max {
                return Err(Error::InfeasibleFactorization(format!(
                    "density reaches {n_hi}, above n_max = {n_max}"
                )));
            }
            Ok(PotentialSpec {
                n: Arc::new(n),
                strength: Profile::Constant { value: level }.into_field(),
                q,
            })
        }
    }
}

/// Wavenumber and incident direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveContext {
    pub k: f64,
    pub alpha: Point,
}

impl WaveContext {
    /// Normalizes `direction`.
    pub fn new(k: f64, direction: Point) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("wavenumber must be > 0, got {k}")));
        }
        let len = norm(&direction);
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::InvalidParameter("incident direction must be nonzero".into()));
        }
        Ok(WaveContext {
            k,
            alpha: [direction[0] / len, direction[1] / len, direction[2] / len],
        })
    }

    /// The smallness ratio `k a`.
    pub fn ka(&self, a: f64) -> f64 {
        self.k * a
    }

    pub fn incident(&self, x: &Point) -> Complex64 {
        incident_plane_wave(self, x)
    }
}

/// `exp(i k alpha . x)`
pub fn incident_plane_wave(ctx: &WaveContext, x: &Point) -> Complex64 {
    Complex64::from_polar(1.0, ctx.k * dot(&ctx.alpha, x))
}

/// Outgoing free-space Green function in 3D, `e^{ikr} / (4 pi r)`.
pub fn green3d(x: &Point, y: &Point, k: f64) -> Result<Complex64> {
    let r = dist(x, y);
    if r == 0.0 {
        return Err(Error::SingularKernel(*x));
    }
    Ok(Complex64::from_polar(1.0 / (4.0 * PI * r), k * r))
}

/// One-dimensional kernel `-e^{ik|x-y|} / (2ik)`.
pub fn green1d(x: f64, y: f64, k: f64) -> Result<Complex64> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("wavenumber must be > 0, got {k}")));
    }
    let phase = Complex64::from_polar(1.0, k * (x - y).abs());
    Ok(-phase / Complex64::new(0.0, 2.0 * k))
}

/// Regular lattice `origin + (i, j, l) * spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub spacing: f64,
    pub extents: [usize; 3],
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index, first axis fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        i + self.extents[0] * (j + self.extents[1] * l)
    }

    #[inline]
    pub fn node(&self, idx: usize) -> Point {
        let i = idx % self.extents[0];
        let j = (idx / self.extents[0]) % self.extents[1];
        let l = idx / (self.extents[0] * self.extents[1]);
        [
            self.origin[0] + i as f64 * self.spacing,
            self.origin[1] + j as f64 * self.spacing,
            self.origin[2] + l as f64 * self.spacing,
        ]
    }

    pub fn nodes(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// `per_axis^3` nodes spanning the closed box `[lo, hi]` (cubic boxes
    /// only use `hi[0] - lo[0]` for the spacing).
    pub fn spanning(lo: Point, hi: Point, per_axis: usize) -> GridSpec {
        let spacing = if per_axis > 1 {
            (hi[0] - lo[0]) / (per_axis - 1) as f64
        } else {
            0.0
        };
        GridSpec {
            origin: lo,
            spacing,
            extents: [per_axis; 3],
        }
    }
}

/// Complex samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl GridField {
    pub fn zeros(grid: GridSpec) -> Self {
        GridField {
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-14;

    #[test]
    fn green3d_static_and_half_wave() {
        let x = [0.0; 3];
        let y = [1.0, 0.0, 0.0];
        let g = green3d(&x, &y, 0.0).unwrap();
        assert!((g.re - 1.0 / (4.0 * PI)).abs() < EPS && g.im.abs() < EPS);
        assert!((g.re - 0.0795775).abs() < 1e-7);
        let g = green3d(&x, &y, PI).unwrap();
        assert!((g.re + 1.0 / (4.0 * PI)).abs() < EPS && g.im.abs() < EPS);
    }

    #[test]
    fn green3d_rejects_coincident_points() {
        assert!(matches!(
            green3d(&[0.3, 0.1, 0.2], &[0.3, 0.1, 0.2], 1.0),
            Err(Error::SingularKernel(_))
        ));
    }

    #[test]
    fn green3d_is_symmetric() {
        let pts = [[0.1, 0.2, 0.3], [0.9, -0.4, 0.0], [2.0, 1.0, -1.5], [0.0, 0.0, 1e-3]];
        for x in &pts {
            for y in &pts {
                if x != y {
                    assert_eq!(green3d(x, y, 1.7).unwrap(), green3d(y, x, 1.7).unwrap());
                }
            }
        }
    }

    #[test]
    fn green1d_values() {
        let g = green1d(0.3, 0.3, 1.0).unwrap();
        assert!(g.re.abs() < EPS && (g.im - 0.5).abs() < EPS);
        let g = green1d(0.0, PI, 1.0).unwrap();
        assert!(g.re.abs() < EPS && (g.im + 0.5).abs() < EPS);
        let g = green1d(1.0, 0.0, 2.0).unwrap();
        let want = -Complex64::from_polar(1.0, 2.0) / Complex64::new(0.0, 4.0);
        assert!((g - want).norm() < EPS);
        assert!(green1d(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn green1d_continuous_at_coincidence() {
        let at = green1d(0.5, 0.5, 3.0).unwrap();
        let near = green1d(0.5, 0.5 + 1e-12, 3.0).unwrap();
        assert!((at - near).norm() < 1e-11);
    }

    #[test]
    fn plane_wave() {
        let ctx = WaveContext::new(2.0, [0.0, 0.0, 3.0]).unwrap();
        assert!((norm(&ctx.alpha) - 1.0).abs() < EPS);
        assert_eq!(incident_plane_wave(&ctx, &[0.0; 3]), Complex64::new(1.0, 0.0));
        let quarter = incident_plane_wave(&ctx, &[5.0, -1.0, PI / 4.0]);
        assert!((quarter - Complex64::new(0.0, 1.0)).norm() < EPS);
        for i in 0..50 {
            let x = [i as f64 * 0.37, -(i as f64) * 1.3, i as f64 * i as f64 * 0.01];
            assert!((incident_plane_wave(&ctx, &x).norm() - 1.0).abs() < EPS);
        }
    }

    #[test]
    fn wave_context_rejects_bad_input() {
        assert!(WaveContext::new(0.0, [1.0, 0.0, 0.0]).is_err());
        assert!(WaveContext::new(1.0, [0.0; 3]).is_err());
    }

    #[test]
    fn factorize_constant_density() {
        let q = Profile::Constant { value: -2.0 }.into_field();
        let spec = factorize_potential(q, Factorization::ConstantDensity, 0.4, N_MAX_DEFAULT).unwrap();
        let x = [0.2, 0.3, 0.4];
        assert_eq!(spec.n.eval(&x), 0.4);
        assert!((spec.strength.eval(&x) + 5.0).abs() < EPS);

        let zero = Profile::Constant { value: 0.0 }.into_field();
        let spec = factorize_potential(zero, Factorization::ConstantDensity, 0.4, N_MAX_DEFAULT).unwrap();
        assert_eq!(spec.n.eval(&x), 0.4);
        assert_eq!(spec.strength.eval(&x), 0.0);
    }

    #[test]
    fn factorize_rejects_sign_change_and_overdensity() {
        let q = Profile::Sinusoid {
            offset: 0.0,
            amplitude: 1.0,
            axis: 0,
            frequency: 1.0,
            phase: 0.0,
        }
        .into_field();
        assert!(matches!(
            factorize_potential(q, Factorization::ConstantStrength, 1.0, N_MAX_DEFAULT),
            Err(Error::InfeasibleFactorization(_))
        ));
        let q = Profile::Constant { value: -1.0 }.into_field();
        assert!(factorize_potential(q.clone(), Factorization::ConstantDensity, 0.6, N_MAX_DEFAULT).is_err());
        // n = q/A0 = 1/... reaches 0.5 exactly: allowed; 0.6 is not.
        assert!(factorize_potential(q.clone(), Factorization::ConstantStrength, -2.0, N_MAX_DEFAULT).is_ok());
        assert!(factorize_potential(q.clone(), Factorization::ConstantStrength, -1.0, N_MAX_DEFAULT).is_err());
        assert!(factorize_potential(q, Factorization::ConstantStrength, 2.0, N_MAX_DEFAULT).is_err());
    }

    #[test]
    fn domains() {
        let cube = BoundedDomain::unit_cube();
        assert_eq!(cube.volume(), 1.0);
        assert!(cube.contains(&[0.0, 0.5, 0.999]));
        assert!(!cube.contains(&[1.0, 0.5, 0.5]));
        assert!((cube.depth(&[0.1, 0.5, 0.7]) - 0.1).abs() < EPS);
        let ball = BoundedDomain::new_ball([0.0; 3], 2.0).unwrap();
        assert!((ball.volume() - 32.0 * PI / 3.0).abs() < 1e-12);
        assert!(ball.contains(&[1.9, 0.0, 0.0]) && !ball.contains(&[2.0, 0.0, 0.0]));
        assert!(BoundedDomain::new_box([0.0; 3], [1.0, 0.0, 1.0]).is_err());
        assert!(BoundedDomain::new_ball([0.0; 3], 0.0).is_err());
    }

    #[test]
    fn grid_indexing_roundtrip() {
        let g = GridSpec {
            origin: [1.0, 2.0, 3.0],
            spacing: 0.5,
            extents: [3, 4, 5],
        };
        assert_eq!(g.len(), 60);
        let idx = g.index(2, 1, 3);
        assert_eq!(g.node(idx), [2.0, 2.5, 4.5]);
    }
}
