//! Nyström solver for the effective Lippmann–Schwinger equation
//!
//! ```text
//! u(x) = u0(x) - int_D e^{ik|x-y|} / (4 pi |x-y|) q(y) u(y) dy
//! ```
//!
//! Nodes are cell centers of a uniform grid covering the bounding box of
//! `D`. Each cell is replaced by the ball of equal volume, radius
//! `a_eff = (3 h^3 / 4 pi)^(1/3)`, so the self cell contributes
//! `a_eff^2 / 2` and off-grid evaluation uses the same ball weights as the
//! many-body field. The grid is then exactly a cloud of uniform balls.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::farfield::FarField;
use crate::fields::{BoundedDomain, GridField, GridSpec, Point, PotentialSpec, ScalarField, WaveContext};
use crate::foldy_lax::BallExpansion;
use crate::kernel::{HelmholtzKernel, Sources};
use crate::krylov::{gmres, norm_inf, GmresConfig, LinearOperator};

/// How `q` is transferred to the nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QSampling {
    /// `q(y_i)`; nodes outside `D` get zero.
    Node,
    /// Midpoint average of `q 1_D` over the cell with `per_axis^3` samples.
    CellAverage { per_axis: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matvec {
    Fft,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsOptions {
    pub gmres: GmresConfig,
    pub matvec: Matvec,
    pub sampling: QSampling,
    pub kh_limit: f64,
}

impl Default for LsOptions {
    fn default() -> Self {
        LsOptions {
            gmres: GmresConfig::default(),
            matvec: Matvec::Fft,
            sampling: QSampling::Node,
            kh_limit: 0.5,
        }
    }
}

/// The discretized potential on a cell-centered grid.
#[derive(Debug, Clone)]
pub struct LSDiscretization {
    /// Nodes `y_i` at cell centers.
    pub grid: GridSpec,
    /// Volume weight of every node, `h^3`.
    pub weight: f64,
    pub q: Vec<f64>,
    /// Radius of the ball with the volume of one cell.
    pub a_eff: f64,
    /// `int_{ball} |y_i - y|^-1 dy = 2 pi a_eff^2`.
    pub self_weight: f64,
}

impl LSDiscretization {
    pub fn new(q: &dyn ScalarField, domain: &BoundedDomain, h: f64, sampling: QSampling) -> Result<Self> {
        domain.validate()?;
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("grid spacing must be > 0, got {h}")));
        }
        let (lo, hi) = domain.bounding_box();
        let mut extents = [0usize; 3];
        let mut origin = [0.0; 3];
        for d in 0..3 {
            let len = hi[d] - lo[d];
            let n = ((len / h) - 1e-9).ceil().max(1.0) as usize;
            extents[d] = n;
            origin[d] = 0.5 * (lo[d] + hi[d]) - 0.5 * n as f64 * h + 0.5 * h;
        }
        let grid = GridSpec {
            origin,
            spacing: h,
            extents,
        };
        let nodes = grid.nodes();
        let values: Vec<f64> = match sampling {
            QSampling::Node => nodes
                .par_iter()
                .map(|y| if domain.contains(y) { q.eval(y) } else { 0.0 })
                .collect(),
            QSampling::CellAverage { per_axis } => {
                let s = per_axis.max(1);
                let step = h / s as f64;
                nodes
                    .par_iter()
                    .map(|y| {
                        let mut acc = 0.0;
                        for i in 0..s {
                            for j in 0..s {
                                for l in 0..s {
                                    let x = [
                                        y[0] - 0.5 * h + (i as f64 + 0.5) * step,
                                        y[1] - 0.5 * h + (j as f64 + 0.5) * step,
                                        y[2] - 0.5 * h + (l as f64 + 0.5) * step,
                                    ];
                                    if domain.contains(&x) {
                                        acc += q.eval(&x);
                                    }
                                }
                            }
                        }
                        acc / (s * s * s) as f64
                    })
                    .collect()
            }
        };
        let weight = h * h * h;
        let a_eff = (3.0 * weight / (4.0 * PI)).cbrt();
        Ok(LSDiscretization {
            grid,
            weight,
            q: values,
            a_eff,
            self_weight: 2.0 * PI * a_eff * a_eff,
        })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weight * self.len() as f64
    }

    /// Nodes carrying nonzero `q`.
    pub fn active(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.q[i] != 0.0).collect()
    }

    fn operator(&self, k: f64, matvec: Matvec) -> Box<dyn LinearOperator + '_> {
        match matvec {
            Matvec::Fft => Box::new(FftOperator::new(self, k)),
            Matvec::Direct => Box::new(DirectOperator::new(self, k)),
        }
    }
}

/// `(I + G_h Q) u` by direct summation over nodes with nonzero `q`.
struct DirectOperator<'a> {
    disc: &'a LSDiscretization,
    kernel: HelmholtzKernel,
    active: Vec<usize>,
    sources: Sources,
    nodes: Vec<Point>,
}

impl<'a> DirectOperator<'a> {
    fn new(disc: &'a LSDiscretization, k: f64) -> Self {
        let nodes = disc.grid.nodes();
        let active = disc.active();
        let pts: Vec<Point> = active.iter().map(|&i| nodes[i]).collect();
        let kernel = HelmholtzKernel::new(k, Sources::from_points(&nodes).extent());
        DirectOperator {
            disc,
            kernel,
            active,
            sources: Sources::from_points(&pts),
            nodes,
        }
    }
}

impl LinearOperator for DirectOperator<'_> {
    fn dim(&self) -> usize {
        self.disc.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let d = self.disc;
        let (wr, wi): (Vec<f64>, Vec<f64>) = self
            .active
            .iter()
            .map(|&j| {
                let w = x[j] * d.q[j] * d.weight;
                (w.re, w.im)
            })
            .unzip();
        let self_coef = d.self_weight / (4.0 * PI);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let target = &self.nodes[i];
            *yi = match self.active.binary_search(&i) {
                Ok(pos) => {
                    x[i] + self_coef * d.q[i] * x[i]
                        + self.kernel.sum_except(target, &self.sources, &wr, &wi, pos)
                }
                Err(_) => x[i] + self.kernel.sum(target, &self.sources, &wr, &wi, 0..self.active.len()),
            };
        });
    }
}

/// `(I + G_h Q) u` by circulant embedding on a grid padded to twice the size.
struct FftOperator<'a> {
    disc: &'a LSDiscretization,
    n: [usize; 3],
    p: [usize; 3],
    /// Transformed kernel, already divided by the padded size.
    khat: Vec<Complex64>,
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl<'a> FftOperator<'a> {
    fn new(disc: &'a LSDiscretization, k: f64) -> Self {
        let n = disc.grid.extents;
        let p = [2 * n[0], 2 * n[1], 2 * n[2]];
        let mut planner = FftPlanner::new();
        let fwd = [0, 1, 2].map(|d| planner.plan_fft_forward(p[d]));
        let inv = [0, 1, 2].map(|d| planner.plan_fft_inverse(p[d]));
        let h = disc.grid.spacing;
        let offset = |i: usize, d: usize| -> Option<f64> {
            if i < n[d] {
                Some(i as f64)
            } else if i > p[d] - n[d] {
                Some(i as f64 - p[d] as f64)
            } else {
                None
            }
        };
        let total = p[0] * p[1] * p[2];
        let self_coef = disc.self_weight / (4.0 * PI);
        let mut kern: Vec<Complex64> = (0..total)
            .into_par_iter()
            .map(|idx| {
                let i = idx % p[0];
                let j = (idx / p[0]) % p[1];
                let l = idx / (p[0] * p[1]);
                match (offset(i, 0), offset(j, 1), offset(l, 2)) {
                    (Some(a), Some(b), Some(c)) => {
                        if i == 0 && j == 0 && l == 0 {
                            Complex64::new(self_coef, 0.0)
                        } else {
                            let r = h * (a * a + b * b + c * c).sqrt();
                            Complex64::from_polar(disc.weight / (4.0 * PI * r), k * r)
                        }
                    }
                    _ => Complex64::new(0.0, 0.0),
                }
            })
            .collect();
        let full = [p[1], p[2]];
        transform(&mut kern, p, &fwd, full, p[2], p[0], p[1]);
        let scale = 1.0 / total as f64;
        kern.iter_mut().for_each(|v| *v *= scale);
        FftOperator {
            disc,
            n,
            p,
            khat: kern,
            fwd,
            inv,
        }
    }
}

impl LinearOperator for FftOperator<'_> {
    fn dim(&self) -> usize {
        self.disc.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let (n, p) = (self.n, self.p);
        let zero = Complex64::new(0.0, 0.0);
        let mut buf = vec![zero; p[0] * p[1] * p[2]];
        for l in 0..n[2] {
            for j in 0..n[1] {
                let src = n[0] * (j + n[1] * l);
                let dst = p[0] * (j + p[1] * l);
                for i in 0..n[0] {
                    buf[dst + i] = x[src + i] * self.disc.q[src + i];
                }
            }
        }
        // input lives in the first octant, only the first octant is read back
        transform(&mut buf, p, &self.fwd, [n[1], n[2]], n[2], p[0], p[1]);
        buf.par_iter_mut().zip(&self.khat).for_each(|(b, k)| *b *= k);
        transform_back(&mut buf, p, &self.inv, [n[1], n[2]], n[2]);
        for l in 0..n[2] {
            for j in 0..n[1] {
                let dst = n[0] * (j + n[1] * l);
                let src = p[0] * (j + p[1] * l);
                for i in 0..n[0] {
                    y[dst + i] = x[dst + i] + buf[src + i];
                }
            }
        }
    }
}

/// Forward 3D transform of data supported on `j < rows[0]`, `l < rows[1]`.
/// Axis-2 lines are limited to `i < i_lim`, `j < j_lim` (all of them when
/// the output is needed everywhere).
fn transform(
    buf: &mut [Complex64],
    p: [usize; 3],
    plans: &[Arc<dyn Fft<f64>>; 3],
    rows: [usize; 2],
    planes: usize,
    i_lim: usize,
    j_lim: usize,
) {
    axis0(buf, p, &*plans[0], rows[0], rows[1]);
    axis1(buf, p, &*plans[1], planes);
    axis2(buf, p, &*plans[2], i_lim, j_lim);
}

/// Inverse of [`transform`] when only the first octant of the result is needed.
fn transform_back(
    buf: &mut [Complex64],
    p: [usize; 3],
    plans: &[Arc<dyn Fft<f64>>; 3],
    rows: [usize; 2],
    planes: usize,
) {
    axis2(buf, p, &*plans[2], p[0], p[1]);
    axis1(buf, p, &*plans[1], planes);
    axis0(buf, p, &*plans[0], rows[0], rows[1]);
}

fn axis0(buf: &mut [Complex64], p: [usize; 3], fft: &dyn Fft<f64>, j_lim: usize, l_lim: usize) {
    let plane = p[0] * p[1];
    buf.par_chunks_mut(plane).take(l_lim).for_each(|chunk| {
        fft.process(&mut chunk[..p[0] * j_lim]);
    });
}

fn axis1(buf: &mut [Complex64], p: [usize; 3], fft: &dyn Fft<f64>, l_lim: usize) {
    let plane = p[0] * p[1];
    buf.par_chunks_mut(plane).take(l_lim).for_each(|chunk| {
        let mut tmp = vec![Complex64::new(0.0, 0.0); plane];
        for j in 0..p[1] {
            for i in 0..p[0] {
                tmp[i * p[1] + j] = chunk[i + p[0] * j];
            }
        }
        fft.process(&mut tmp);
        for j in 0..p[1] {
            for i in 0..p[0] {
                chunk[i + p[0] * j] = tmp[i * p[1] + j];
            }
        }
    });
}

fn axis2(buf: &mut [Complex64], p: [usize; 3], fft: &dyn Fft<f64>, i_lim: usize, j_lim: usize) {
    let plane = p[0] * p[1];
    let mut tmp = vec![Complex64::new(0.0, 0.0); i_lim * p[2]];
    for j in 0..j_lim {
        for l in 0..p[2] {
            let row = &buf[plane * l + p[0] * j..][..i_lim];
            for (i, v) in row.iter().enumerate() {
                tmp[i * p[2] + l] = *v;
            }
        }
        fft.process(&mut tmp);
        for l in 0..p[2] {
            let row = &mut buf[plane * l + p[0] * j..][..i_lim];
            for (i, v) in row.iter_mut().enumerate() {
                *v = tmp[i * p[2] + l];
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsDiagnostics {
    pub iterations: usize,
    pub history: Vec<f64>,
    /// `||(I + G_h Q) u - u0||_inf / ||u0||_inf`
    pub residual: f64,
    pub kh: f64,
}

/// A solved effective equation.
#[derive(Debug, Clone)]
pub struct EffectiveSolution {
    pub disc: LSDiscretization,
    pub ctx: WaveContext,
    /// `u_e` at the nodes.
    pub field: GridField,
    pub diagnostics: LsDiagnostics,
    centers: Vec<Point>,
    strengths: Vec<f64>,
    values: Vec<Complex64>,
}

/// Solve with `q` taken from the potential specification.
pub fn solve_ls(
    spec: &PotentialSpec,
    domain: &BoundedDomain,
    ctx: &WaveContext,
    h: f64,
    opts: &LsOptions,
) -> Result<EffectiveSolution> {
    solve_ls_field(&*spec.q, domain, ctx, h, opts)
}

pub fn solve_ls_field(
    q: &dyn ScalarField,
    domain: &BoundedDomain,
    ctx: &WaveContext,
    h: f64,
    opts: &LsOptions,
) -> Result<EffectiveSolution> {
    let kh = ctx.k * h;
    if kh > opts.kh_limit {
        return Err(Error::Resolution {
            kh,
            limit: opts.kh_limit,
        });
    }
    let disc = LSDiscretization::new(q, domain, h, opts.sampling)?;
    solve_discretized(disc, ctx, opts)
}

pub fn solve_discretized(disc: LSDiscretization, ctx: &WaveContext, opts: &LsOptions) -> Result<EffectiveSolution> {
    let kh = ctx.k * disc.grid.spacing;
    let nodes = disc.grid.nodes();
    let rhs: Vec<Complex64> = nodes.iter().map(|y| ctx.incident(y)).collect();
    let (values, iterations, history, residual) = {
        let op = disc.operator(ctx.k, opts.matvec);
        let mut x = rhs.clone();
        let out = gmres(&*op, &rhs, &mut x, &opts.gmres)?;
        let mut lu = vec![Complex64::new(0.0, 0.0); x.len()];
        op.apply(&x, &mut lu);
        let residual = lu.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
            / norm_inf(&rhs).max(f64::MIN_POSITIVE);
        (x, out.iterations, out.history, residual)
    };
    if residual > opts.gmres.tol {
        return Err(Error::NoConvergence {
            iterations,
            residual,
            history,
        });
    }
    log::debug!("ls: {} nodes, {iterations} iterations, residual {residual:.2e}", disc.len());
    let active = disc.active();
    let centers = active.iter().map(|&i| nodes[i]).collect();
    let strengths = active.iter().map(|&i| disc.q[i]).collect();
    let active_values = active.iter().map(|&i| values[i]).collect();
    Ok(EffectiveSolution {
        field: GridField {
            grid: disc.grid,
            values,
        },
        disc,
        ctx: *ctx,
        diagnostics: LsDiagnostics {
            iterations,
            history,
            residual,
            kh,
        },
        centers,
        strengths,
        values: active_values,
    })
}

impl EffectiveSolution {
    pub fn expansion(&self) -> BallExpansion<'_> {
        BallExpansion {
            centers: &self.centers,
            radius: self.disc.a_eff,
            strengths: &self.strengths,
            values: &self.values,
        }
    }

    /// The discretized integral applied at arbitrary points.
    pub fn evaluate_at(&self, points: &[Point]) -> Vec<Complex64> {
        self.expansion().evaluate_at(&self.ctx, points)
    }

    pub fn far_field(&self, directions: &[Point]) -> Result<FarField> {
        self.expansion().far_field(self.ctx.k, directions)
    }
}

/// `A(beta) = -(1/4pi) sum_i w_i e^{-ik beta.y_i} q_i u_i`.
pub fn far_field_effective(sol: &EffectiveSolution, directions: &[Point]) -> Result<FarField> {
    sol.far_field(directions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Profile;

    fn well(q0: f64, r: f64) -> Arc<dyn ScalarField> {
        Profile::SphericalWell {
            depth: q0,
            center: [0.0; 3],
            radius: r,
        }
        .into_field()
    }

    fn cube(r: f64) -> BoundedDomain {
        BoundedDomain::new_box([-r; 3], [r; 3]).unwrap()
    }

    #[test]
    fn weights_cover_the_box() {
        let q = Profile::Constant { value: 1.0 }.into_field();
        let disc = LSDiscretization::new(&*q, &BoundedDomain::unit_cube(), 0.1, QSampling::Node).unwrap();
        assert_eq!(disc.grid.extents, [10; 3]);
        assert!((disc.total_weight() - 1.0).abs() < 1e-10);
        let a = disc.a_eff;
        assert!((4.0 * PI * a.powi(3) / 3.0 - disc.weight).abs() < 1e-15);
        let w = crate::foldy_lax::ball_kernel_weight(&[0.0; 3], &[0.0; 3], a);
        assert!((w - disc.self_weight).abs() < 1e-14);
        assert!((disc.grid.node(0)[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn zero_potential_returns_incident_wave() {
        let ctx = WaveContext::new(1.0, [0.0, 0.0, 1.0]).unwrap();
        let q = Profile::Constant { value: 0.0 }.into_field();
        let sol = solve_ls_field(&*q, &cube(0.5), &ctx, 0.1, &LsOptions::default()).unwrap();
        for (y, u) in sol.field.grid.nodes().iter().zip(&sol.field.values) {
            assert_eq!(*u, ctx.incident(y));
        }
        let ff = sol.far_field(&[[1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(ff.values[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn fft_and_direct_matvecs_agree() {
        let q = Profile::Gaussian {
            amplitude: -2.0,
            center: [0.1, 0.0, -0.05],
            width: 0.3,
        }
        .into_field();
        let dom = BoundedDomain::new_box([-0.5, -0.4, -0.3], [0.5, 0.4, 0.3]).unwrap();
        let disc = LSDiscretization::new(&*q, &dom, 0.1, QSampling::Node).unwrap();
        assert_eq!(disc.grid.extents, [10, 8, 6]);
        let x: Vec<Complex64> = (0..disc.len())
            .map(|i| Complex64::new((i as f64 * 0.3).sin(), (i as f64 * 0.7).cos()))
            .collect();
        let mut a = vec![Complex64::new(0.0, 0.0); x.len()];
        let mut b = a.clone();
        disc.operator(1.7, Matvec::Fft).apply(&x, &mut a);
        disc.operator(1.7, Matvec::Direct).apply(&x, &mut b);
        let err = a.iter().zip(&b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "max difference {err}");
    }

    #[test]
    fn coarse_resolution_is_rejected() {
        let ctx = WaveContext::new(10.0, [1.0, 0.0, 0.0]).unwrap();
        let err = solve_ls_field(&*well(-1.0, 0.5), &cube(0.5), &ctx, 0.1, &LsOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Resolution { .. }));
    }

    #[test]
    fn evaluation_reproduces_node_values() {
        let ctx = WaveContext::new(1.0, [0.0, 0.6, 0.8]).unwrap();
        let sol = solve_ls_field(&*well(-1.0, 0.5), &cube(0.5), &ctx, 0.0625, &LsOptions::default()).unwrap();
        let nodes = sol.field.grid.nodes();
        let picks: Vec<usize> = (0..100).map(|i| (i * 7919) % nodes.len()).collect();
        let pts: Vec<Point> = picks.iter().map(|&i| nodes[i]).collect();
        let got = sol.evaluate_at(&pts);
        let scale = norm_inf(&sol.field.values);
        for (v, &i) in got.iter().zip(&picks) {
            let r = (v - sol.field.values[i]).norm() / scale;
            assert!(r <= 10.0 * sol.diagnostics.residual.max(1e-12), "node {i}: {r}");
        }
    }
}
