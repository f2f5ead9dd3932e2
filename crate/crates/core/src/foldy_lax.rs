//! The many-body problem for small balls.
//!
//! The field is written through the exact ball potential integrals
//!
//! ```text
//! u_M(x) = u0(x) - sum_m e^{ik|x - x_m|} / (4 pi) A_m u_m w(x, x_m, a)
//! ```
//!
//! and closed by collocation at the centers. The self term uses
//! `w(x_m, x_m, a) = 2 pi a^2`, giving the diagonal `1 + A_j a^2 / 2`.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::farfield::{check_unit, FarField};
use crate::fields::{dist, dot, GridField, GridSpec, Point, WaveContext};
use crate::kernel::{HelmholtzKernel, Sources};
use crate::krylov::{gmres, norm_inf, GmresConfig, LinearOperator};
use crate::placement::{Dim, ScattererCloud};

/// `int_{|y - center| < a} |x - y|^-1 dy`.
///
/// Outside the ball this is `V(a) / |x - center|`; inside it is
/// `2 pi (a^2 - |x - center|^2 / 3)`.
pub fn ball_kernel_weight(x: &Point, center: &Point, a: f64) -> f64 {
    let r = dist(x, center);
    if r >= a {
        4.0 * PI * a * a * a / (3.0 * r)
    } else {
        2.0 * PI * (a * a - r * r / 3.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Dense,
    Iterative,
}

impl std::str::FromStr for SolveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(SolveMode::Dense),
            "iterative" | "matrix-free" => Ok(SolveMode::Iterative),
            other => Err(Error::Config(format!("unknown solver mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub mode: SolveMode,
    pub gmres: GmresConfig,
    /// Max-norm relative residual required from the dense solve.
    pub dense_tol: f64,
    pub dense_cap: usize,
    pub ka_warn: f64,
    pub ka_limit: f64,
    /// Solve even when `ka` exceeds `ka_limit`.
    pub allow_large_ka: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            mode: SolveMode::Iterative,
            gmres: GmresConfig::default(),
            dense_tol: 1e-10,
            dense_cap: 8000,
            ka_warn: 0.1,
            ka_limit: 0.5,
            allow_large_ka: false,
        }
    }
}

impl SolverOptions {
    pub fn dense() -> Self {
        SolverOptions {
            mode: SolveMode::Dense,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub mode: SolveMode,
    pub iterations: usize,
    pub history: Vec<f64>,
    /// `||L u - u0||_inf / ||u0||_inf`
    pub residual: f64,
    pub ka: f64,
}

/// A solved Foldy–Lax system.
#[derive(Debug, Clone)]
pub struct FoldyLaxSystem {
    pub cloud: ScattererCloud,
    pub ctx: WaveContext,
    /// `u_M(x_m)`
    pub values: Vec<Complex64>,
    pub diagnostics: Diagnostics,
}

/// `(L u)_j = (1 + A_j a^2/2) u_j + sum_{m != j} g(x_j, x_m) A_m V(a) u_m`.
pub struct FoldyLaxOperator {
    sources: Sources,
    centers: Vec<Point>,
    diag: Vec<f64>,
    coupling: Vec<f64>,
    kernel: HelmholtzKernel,
}

impl FoldyLaxOperator {
    pub fn new(cloud: &ScattererCloud, k: f64) -> Self {
        let a = cloud.radius;
        let vol = cloud.ball_volume();
        let sources = Sources::from_points(&cloud.centers);
        let kernel = HelmholtzKernel::new(k, sources.extent());
        FoldyLaxOperator {
            diag: cloud.strengths.iter().map(|s| 1.0 + s * a * a / 2.0).collect(),
            coupling: cloud.strengths.iter().map(|s| s * vol).collect(),
            centers: cloud.centers.clone(),
            sources,
            kernel,
        }
    }

    /// Explicit matrix.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let m = self.centers.len();
        DMatrix::from_fn(m, m, |j, i| {
            if i == j {
                Complex64::new(self.diag[j], 0.0)
            } else {
                let r = dist(&self.centers[j], &self.centers[i]);
                self.kernel.value(r) * self.coupling[i]
            }
        })
    }
}

impl LinearOperator for FoldyLaxOperator {
    fn dim(&self) -> usize {
        self.centers.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let wr: Vec<f64> = x.iter().zip(&self.coupling).map(|(v, c)| v.re * c).collect();
        let wi: Vec<f64> = x.iter().zip(&self.coupling).map(|(v, c)| v.im * c).collect();
        y.par_iter_mut().enumerate().for_each(|(j, yj)| {
            let off = self
                .kernel
                .sum_except(&self.centers[j], &self.sources, &wr, &wi, j);
            *yj = x[j] * self.diag[j] + off;
        });
    }
}

fn check_ka(cloud: &ScattererCloud, ctx: &WaveContext, opts: &SolverOptions) -> Result<f64> {
    let ka = ctx.ka(cloud.radius);
    if ka > opts.ka_limit && !opts.allow_large_ka {
        return Err(Error::Regime {
            ka,
            limit: opts.ka_limit,
        });
    }
    if ka > opts.ka_warn {
        log::warn!("ka = {ka:.3} is outside the small-scatterer regime (warn above {})", opts.ka_warn);
    }
    Ok(ka)
}

/// Solve the collocated system with the incident plane wave as data.
pub fn assemble_and_solve(
    cloud: &ScattererCloud,
    ctx: &WaveContext,
    opts: &SolverOptions,
) -> Result<FoldyLaxSystem> {
    let rhs: Vec<Complex64> = cloud.centers.iter().map(|x| ctx.incident(x)).collect();
    solve_with_rhs(cloud, ctx, &rhs, opts)
}

/// Solve `L u = rhs` for an arbitrary right-hand side.
pub fn solve_with_rhs(
    cloud: &ScattererCloud,
    ctx: &WaveContext,
    rhs: &[Complex64],
    opts: &SolverOptions,
) -> Result<FoldyLaxSystem> {
    if cloud.dim != Dim::Three {
        return Err(Error::InvalidParameter("3D solver needs a 3D cloud".into()));
    }
    let ka = check_ka(cloud, ctx, opts)?;
    let m = cloud.len();
    let op = FoldyLaxOperator::new(cloud, ctx.k);
    let (values, iterations, history) = match opts.mode {
        SolveMode::Dense => {
            if m > opts.dense_cap {
                return Err(Error::Capacity {
                    m,
                    cap: opts.dense_cap,
                });
            }
            let values = if m == 0 {
                Vec::new()
            } else {
                let lu = op.to_dense().lu();
                let sol = lu
                    .solve(&DVector::from_column_slice(rhs))
                    .ok_or(Error::SingularSystem)?;
                sol.iter().copied().collect()
            };
            (values, 0, Vec::new())
        }
        SolveMode::Iterative => {
            let mut x = rhs.to_vec();
            let out = gmres(&op, rhs, &mut x, &opts.gmres)?;
            (x, out.iterations, out.history)
        }
    };
    let mut lu = vec![Complex64::new(0.0, 0.0); m];
    op.apply(&values, &mut lu);
    let scale = norm_inf(rhs);
    let residual = if scale == 0.0 {
        norm_inf(&lu)
    } else {
        lu.iter().zip(rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
    };
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let limit = match opts.mode {
        SolveMode::Dense => opts.dense_tol,
        SolveMode::Iterative => opts.gmres.tol,
    };
    if residual > limit {
        return Err(Error::NoConvergence {
            iterations,
            residual,
            history,
        });
    }
    Ok(FoldyLaxSystem {
        cloud: cloud.clone(),
        ctx: *ctx,
        values,
        diagnostics: Diagnostics {
            mode: opts.mode,
            iterations,
            history,
            residual,
            ka,
        },
    })
}

/// Bucket index of cell size `2a` for locating the balls near a point.
pub(crate) struct BallIndex {
    pitch: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl BallIndex {
    pub(crate) fn new(centers: &[Point], a: f64) -> Self {
        let pitch = 2.0 * a;
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, c) in centers.iter().enumerate() {
            buckets.entry(Self::key(c, pitch)).or_default().push(i);
        }
        BallIndex { pitch, buckets }
    }

    fn key(p: &Point, pitch: f64) -> [i64; 3] {
        [
            (p[0] / pitch).floor() as i64,
            (p[1] / pitch).floor() as i64,
            (p[2] / pitch).floor() as i64,
        ]
    }

    /// Indices of centers within `a` of `x`, sorted.
    pub(crate) fn near(&self, x: &Point, centers: &[Point], a: f64) -> Vec<usize> {
        let k = Self::key(x, self.pitch);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        out.extend(list.iter().copied().filter(|&i| dist(x, &centers[i]) < a));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Field generated by uniform balls carrying solved values:
/// `u(x) = u0(x) - sum_m e^{ik|x - c_m|} / (4 pi) s_m v_m w(x, c_m, a)`,
/// with far field `-(1/4pi) sum_m e^{-ik beta.c_m} s_m V(a) v_m`.
#[derive(Debug, Clone, Copy)]
pub struct BallExpansion<'a> {
    pub centers: &'a [Point],
    pub radius: f64,
    pub strengths: &'a [f64],
    pub values: &'a [Complex64],
}

impl BallExpansion<'_> {
    fn volume(&self) -> f64 {
        4.0 * PI * self.radius.powi(3) / 3.0
    }

    pub fn evaluate_at(&self, ctx: &WaveContext, points: &[Point]) -> Vec<Complex64> {
        let a = self.radius;
        let vol = self.volume();
        let k = ctx.k;
        let centers = self.centers;
        if centers.is_empty() {
            return points.iter().map(|x| ctx.incident(x)).collect();
        }
        let sources = Sources::from_points(centers);
        let mut all = centers.to_vec();
        all.extend_from_slice(points);
        let kernel = HelmholtzKernel::new(k, Sources::from_points(&all).extent());
        // weights of the outside branch
        let w: Vec<Complex64> = self
            .values
            .iter()
            .zip(self.strengths)
            .map(|(u, s)| u * s * vol)
            .collect();
        let wr: Vec<f64> = w.iter().map(|v| v.re).collect();
        let wi: Vec<f64> = w.iter().map(|v| v.im).collect();
        let index = BallIndex::new(centers, a);
        points
            .par_iter()
            .map(|x| {
                let near = index.near(x, centers, a);
                let mut acc = Complex64::new(0.0, 0.0);
                let mut start = 0;
                for &m in &near {
                    acc += kernel.sum(x, &sources, &wr, &wi, start..m);
                    let r = dist(x, &centers[m]);
                    let weight = ball_kernel_weight(x, &centers[m], a);
                    acc += Complex64::from_polar(weight / (4.0 * PI), k * r)
                        * self.strengths[m]
                        * self.values[m];
                    start = m + 1;
                }
                acc += kernel.sum(x, &sources, &wr, &wi, start..centers.len());
                ctx.incident(x) - acc
            })
            .collect()
    }

    pub fn far_field(&self, k: f64, directions: &[Point]) -> Result<FarField> {
        check_unit(directions)?;
        let vol = self.volume();
        let values = directions
            .par_iter()
            .map(|beta| {
                let s: Complex64 = self
                    .centers
                    .iter()
                    .zip(self.strengths)
                    .zip(self.values)
                    .map(|((x, a_m), u)| Complex64::from_polar(a_m * vol, -k * dot(beta, x)) * u)
                    .sum();
                -s / (4.0 * PI)
            })
            .collect();
        FarField::new(directions.to_vec(), values)
    }
}

impl FoldyLaxSystem {
    pub fn expansion(&self) -> BallExpansion<'_> {
        BallExpansion {
            centers: &self.cloud.centers,
            radius: self.cloud.radius,
            strengths: &self.cloud.strengths,
            values: &self.values,
        }
    }

    /// `u_M` at arbitrary points, inside or outside the balls.
    pub fn evaluate_at(&self, points: &[Point]) -> Vec<Complex64> {
        self.expansion().evaluate_at(&self.ctx, points)
    }

    pub fn evaluate_field(&self, grid: &GridSpec) -> GridField {
        GridField {
            grid: *grid,
            values: self.evaluate_at(&grid.nodes()),
        }
    }

    /// `A(beta) = -(1/4pi) sum_m e^{-ik beta.x_m} A_m V(a) u_m`.
    pub fn far_field(&self, directions: &[Point]) -> Result<FarField> {
        self.expansion().far_field(self.ctx.k, directions)
    }
}
