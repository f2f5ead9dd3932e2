//! The one-dimensional problem `u'' + k^2 u = q u` on the line.
//!
//! Scatterers are segments `(x_m - a, x_m + a)` of an interval. The kernel
//! is `e^{ik|x-y|} / (2ik)`, so the many-body system is
//!
//! ```text
//! u_M(x) = u0(x) + sum_m e^{ik|x - x_m|} / (2ik) A_m u_m 2a
//! ```
//!
//! with diagonal `1 + i A_j a / k` after collocation.

mod transfer;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{green1d, PotentialSpec, ScalarField, WaveContext};
use crate::krylov::{gmres, norm_inf, GmresConfig, LinearOperator};
use crate::placement::{place_interval, CountingLaw, Dim, PlacementParams, ScattererCloud};

pub use transfer::{transfer_matrix_solve, TransferMatrix, TransferSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval1D {
    pub c: f64,
    pub d: f64,
}

impl Interval1D {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        if !(c.is_finite() && d.is_finite() && c < d) {
            return Err(Error::InvalidParameter(format!("interval needs finite c < d, got ({c}, {d})")));
        }
        Ok(Interval1D { c, d })
    }

    pub fn len(&self) -> f64 {
        self.d - self.c
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.c && x < self.d
    }
}

/// Steps `values[i]` on `[breaks[i], breaks[i+1])`, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePotential1D {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewisePotential1D {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{} breakpoints for {} steps",
                breaks.len(),
                values.len()
            )));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("breakpoints must increase strictly".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("step values must be finite".into()));
        }
        Ok(PiecewisePotential1D { breaks, values })
    }

    pub fn constant(interval: &Interval1D, value: f64) -> Self {
        PiecewisePotential1D {
            breaks: vec![interval.c, interval.d],
            values: vec![value],
        }
    }

    /// The literal potential of a 1D cloud: `A_m` on each segment.
    pub fn from_cloud(cloud: &ScattererCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::InvalidParameter("empty cloud".into()));
        }
        let a = cloud.radius;
        let mut segs: Vec<(f64, f64)> = cloud
            .centers
            .iter()
            .zip(&cloud.strengths)
            .map(|(x, &s)| (x[0], s))
            .collect();
        segs.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut breaks = vec![segs[0].0 - a];
        let mut values = Vec::new();
        for (i, &(x, s)) in segs.iter().enumerate() {
            if i > 0 {
                let gap_lo = *breaks.last().unwrap();
                let lo = x - a;
                if lo < gap_lo - 1e-12 * a {
                    return Err(Error::InvalidParameter(format!("segments overlap near x = {x}")));
                }
                if lo > gap_lo {
                    values.push(0.0);
                    breaks.push(lo);
                }
            }
            values.push(s);
            breaks.push(x + a);
        }
        Self::new(breaks, values)
    }

    pub fn value(&self, x: f64) -> f64 {
        let b = &self.breaks;
        if x < b[0] || x >= b[b.len() - 1] {
            return 0.0;
        }
        self.values[b.partition_point(|&v| v <= x) - 1]
    }

    /// Exact mean over `[lo, hi]`.
    pub fn mean(&self, lo: f64, hi: f64) -> f64 {
        let mut acc = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let overlap = hi.min(self.breaks[i + 1]) - lo.max(self.breaks[i]);
            if overlap > 0.0 {
                acc += v * overlap;
            }
        }
        acc / (hi - lo)
    }

    pub fn support(&self) -> Interval1D {
        Interval1D {
            c: self.breaks[0],
            d: self.breaks[self.breaks.len() - 1],
        }
    }
}

impl ScalarField for PiecewisePotential1D {
    fn eval(&self, x: &[f64; 3]) -> f64 {
        self.value(x[0])
    }

    fn bounds(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((0.0f64, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// A potential on the line as seen by the Nyström solver.
pub trait LinePotential: Sync {
    fn value(&self, x: f64) -> f64;

    /// Node value for the quadrature cell `[lo, hi]` around `node`.
    fn cell_value(&self, _lo: f64, _hi: f64, node: f64) -> f64 {
        self.value(node)
    }
}

impl LinePotential for PiecewisePotential1D {
    fn value(&self, x: f64) -> f64 {
        PiecewisePotential1D::value(self, x)
    }

    // averaging keeps the trapezoid rule second order across jumps
    fn cell_value(&self, lo: f64, hi: f64, _node: f64) -> f64 {
        self.mean(lo, hi)
    }
}

/// A 3D field read along the first axis.
#[derive(Debug, Clone)]
pub struct OnAxis(pub Arc<dyn ScalarField>);

impl LinePotential for OnAxis {
    fn value(&self, x: f64) -> f64 {
        self.0.eval(&[x, 0.0, 0.0])
    }
}

/// Segments for density `n` and strength `A` on an interval.
pub fn place1d(
    interval: &Interval1D,
    n: Arc<dyn ScalarField>,
    a: f64,
    strength: &dyn ScalarField,
    params: &PlacementParams,
) -> Result<ScattererCloud> {
    let law = CountingLaw::new(n, a, Dim::One)?;
    Ok(place_interval(interval.c, interval.d, &law, strength, params)?.cloud)
}

fn check_line_context(ctx: &WaveContext) -> Result<()> {
    if ctx.alpha != [1.0, 0.0, 0.0] {
        return Err(Error::Unsupported(
            "1D problems take the wave e^{ikx} incident from the left".into(),
        ));
    }
    Ok(())
}

/// A solved segment system.
#[derive(Debug, Clone)]
pub struct FoldyLax1D {
    pub cloud: ScattererCloud,
    pub k: f64,
    pub values: Vec<Complex64>,
    pub residual: f64,
}

pub fn solve_fl_1d(cloud: &ScattererCloud, ctx: &WaveContext) -> Result<FoldyLax1D> {
    if cloud.dim != Dim::One {
        return Err(Error::InvalidParameter("1D solver needs a 1D cloud".into()));
    }
    check_line_context(ctx)?;
    let k = ctx.k;
    let a = cloud.radius;
    let m = cloud.len();
    let xs: Vec<f64> = cloud.centers.iter().map(|p| p[0]).collect();
    let coef = Complex64::new(0.0, 2.0 * k).inv() * (2.0 * a);
    let mat = DMatrix::from_fn(m, m, |j, l| {
        if j == l {
            Complex64::new(1.0, cloud.strengths[j] * a / k)
        } else {
            -Complex64::from_polar(1.0, k * (xs[j] - xs[l]).abs()) * coef * cloud.strengths[l]
        }
    });
    let rhs = DVector::from_iterator(m, xs.iter().map(|&x| Complex64::from_polar(1.0, k * x)));
    let sol = mat.clone().lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    let resid = &mat * &sol - &rhs;
    let scale = rhs.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let residual = resid.iter().map(|v| v.norm()).fold(0.0, f64::max) / scale;
    if !(residual <= 1e-10) {
        return Err(Error::SingularSystem);
    }
    Ok(FoldyLax1D {
        cloud: cloud.clone(),
        k,
        values: sol.iter().copied().collect(),
        residual,
    })
}

impl FoldyLax1D {
    pub fn evaluate(&self, x: f64) -> Complex64 {
        let k = self.k;
        let coef = Complex64::new(0.0, 2.0 * k).inv() * (2.0 * self.cloud.radius);
        let mut acc = Complex64::from_polar(1.0, k * x);
        for ((c, s), u) in self.cloud.centers.iter().zip(&self.cloud.strengths).zip(&self.values) {
            acc += Complex64::from_polar(1.0, k * (x - c[0]).abs()) * coef * *s * u;
        }
        acc
    }

    /// The same field written with the kernel `g = -e^{ik|x-y|} / (2ik)`.
    pub fn evaluate_with_green(&self, x: f64) -> Result<Complex64> {
        let mut acc = Complex64::from_polar(1.0, self.k * x);
        for ((c, s), u) in self.cloud.centers.iter().zip(&self.cloud.strengths).zip(&self.values) {
            acc -= green1d(x, c[0], self.k)? * *s * u * (2.0 * self.cloud.radius);
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ls1DOptions {
    pub gmres: GmresConfig,
    pub kh_limit: f64,
}

impl Default for Ls1DOptions {
    fn default() -> Self {
        Ls1DOptions {
            gmres: GmresConfig {
                tol: 1e-12,
                ..Default::default()
            },
            kh_limit: 0.2,
        }
    }
}

/// Trapezoid Nyström solution of the effective equation on an interval.
#[derive(Debug, Clone)]
pub struct Ls1DSolution {
    pub k: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub q: Vec<f64>,
    pub values: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
}

/// `(I - K W Q) u` with the Toeplitz kernel of a uniform grid.
struct ToeplitzOperator {
    /// `e^{ik h |i-j|} / (2ik)` by offset.
    phase: Vec<Complex64>,
    wq: Vec<f64>,
}

impl LinearOperator for ToeplitzOperator {
    fn dim(&self) -> usize {
        self.wq.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let s: Vec<Complex64> = x.iter().zip(&self.wq).map(|(v, w)| v * w).collect();
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, sj) in s.iter().enumerate() {
                acc += self.phase[i.abs_diff(j)] * sj;
            }
            *yi = x[i] - acc;
        }
    }
}

pub fn solve_ls_1d(
    q: &dyn LinePotential,
    interval: &Interval1D,
    ctx: &WaveContext,
    h: f64,
    opts: &Ls1DOptions,
) -> Result<Ls1DSolution> {
    check_line_context(ctx)?;
    let k = ctx.k;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("grid spacing must be > 0, got {h}")));
    }
    if k * h > opts.kh_limit {
        return Err(Error::Resolution {
            kh: k * h,
            limit: opts.kh_limit,
        });
    }
    let cells = (interval.len() / h).round().max(1.0) as usize;
    let h = interval.len() / cells as f64;
    let nodes: Vec<f64> = (0..=cells).map(|i| interval.c + i as f64 * h).collect();
    let mut weights = vec![h; cells + 1];
    weights[0] = 0.5 * h;
    weights[cells] = 0.5 * h;
    let qv: Vec<f64> = nodes
        .iter()
        .map(|&x| q.cell_value((x - 0.5 * h).max(interval.c), (x + 0.5 * h).min(interval.d), x))
        .collect();
    let coef = Complex64::new(0.0, 2.0 * k).inv();
    let op = ToeplitzOperator {
        phase: (0..=cells).map(|n| Complex64::from_polar(1.0, k * h * n as f64) * coef).collect(),
        wq: weights.iter().zip(&qv).map(|(w, v)| w * v).collect(),
    };
    let rhs: Vec<Complex64> = nodes.iter().map(|&x| Complex64::from_polar(1.0, k * x)).collect();
    let mut values = rhs.clone();
    let out = gmres(&op, &rhs, &mut values, &opts.gmres)?;
    let mut lu = vec![Complex64::new(0.0, 0.0); rhs.len()];
    op.apply(&values, &mut lu);
    let residual = lu.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / norm_inf(&rhs);
    if residual > opts.gmres.tol.max(1e-10) {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
            residual,
            history: out.history,
        });
    }
    Ok(Ls1DSolution {
        k,
        nodes,
        weights,
        q: qv,
        values,
        iterations: out.iterations,
        residual,
    })
}

impl Ls1DSolution {
    /// The discrete integral applied at `x`.
    pub fn evaluate(&self, x: f64) -> Complex64 {
        let k = self.k;
        let coef = Complex64::new(0.0, 2.0 * k).inv();
        let mut acc = Complex64::from_polar(1.0, k * x);
        for i in 0..self.nodes.len() {
            if self.q[i] != 0.0 {
                acc += Complex64::from_polar(1.0, k * (x - self.nodes[i]).abs())
                    * coef
                    * (self.weights[i] * self.q[i])
                    * self.values[i];
            }
        }
        acc
    }
}

/// One row of the 1D convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow1D {
    pub a: f64,
    pub m: usize,
    /// `sup |u_M - u_e|` over the probe.
    pub sup_error_vs_ue: f64,
    /// `sup |u_M - u_lit|`, `u_lit` the exact field of the literal segments.
    pub sup_error_vs_oracle: f64,
    /// `sup |u_lit - u_e|`.
    pub oracle_vs_ue: f64,
}

/// Probe points on the interval widened by a quarter length on each side,
/// skipping points within `2a` of a center.
pub fn probe_points_1d(interval: &Interval1D, count: usize, cloud: &ScattererCloud) -> Vec<f64> {
    let pad = 0.25 * interval.len();
    let lo = interval.c - pad;
    let step = (interval.len() + 2.0 * pad) / (count.max(2) - 1) as f64;
    let mut xs: Vec<f64> = cloud.centers.iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    let keep = 2.0 * cloud.radius;
    (0..count.max(2))
        .map(|i| lo + i as f64 * step)
        .filter(|&x| {
            let j = xs.partition_point(|&c| c < x);
            let near = |j: usize| xs.get(j).is_some_and(|&c| (c - x).abs() < keep);
            !(near(j) || (j > 0 && near(j - 1)))
        })
        .collect()
}

/// Settings of a 1D convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct Converge1D {
    pub interval: Interval1D,
    pub radii: Vec<f64>,
    /// Spacing for the effective solve.
    pub h: f64,
    pub probe_points: usize,
    pub params: PlacementParams,
}

pub fn converge_1d(spec: &PotentialSpec, ctx: &WaveContext, setup: &Converge1D) -> Result<Vec<ConvergenceRow1D>> {
    let effective = solve_ls_1d(&OnAxis(spec.q.clone()), &setup.interval, ctx, setup.h, &Ls1DOptions::default())?;
    let sup = |f: &dyn Fn(f64) -> f64, xs: &[f64]| xs.iter().map(|&x| f(x)).fold(0.0, f64::max);
    let mut rows = Vec::with_capacity(setup.radii.len());
    for &a in &setup.radii {
        let cloud = place1d(&setup.interval, spec.n.clone(), a, &*spec.strength, &setup.params)?;
        let probe = probe_points_1d(&setup.interval, setup.probe_points, &cloud);
        if cloud.is_empty() {
            let e = sup(&|x| (Complex64::from_polar(1.0, ctx.k * x) - effective.evaluate(x)).norm(), &probe);
            rows.push(ConvergenceRow1D {
                a,
                m: 0,
                sup_error_vs_ue: e,
                sup_error_vs_oracle: 0.0,
                oracle_vs_ue: e,
            });
            continue;
        }
        let fl = solve_fl_1d(&cloud, ctx)?;
        let oracle = transfer_matrix_solve(&PiecewisePotential1D::from_cloud(&cloud)?, ctx.k)?;
        rows.push(ConvergenceRow1D {
            a,
            m: cloud.len(),
            sup_error_vs_ue: sup(&|x| (fl.evaluate(x) - effective.evaluate(x)).norm(), &probe),
            sup_error_vs_oracle: sup(&|x| (fl.evaluate(x) - oracle.field(x)).norm(), &probe),
            oracle_vs_ue: sup(&|x| (oracle.field(x) - effective.evaluate(x)).norm(), &probe),
        });
        log::info!("1d a={a:e} M={} done", cloud.len());
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Profile;

    fn line(k: f64) -> WaveContext {
        WaveContext::new(k, [1.0, 0.0, 0.0]).unwrap()
    }

    fn constant(v: f64) -> Arc<dyn ScalarField> {
        Profile::Constant { value: v }.into_field()
    }

    #[test]
    fn constant_density_counts() {
        let unit = Interval1D::new(0.0, 1.0).unwrap();
        let a = 5e-4;
        let cloud = place1d(&unit, constant(0.2), a, &*constant(1.0), &PlacementParams::default()).unwrap();
        assert!((cloud.len() as f64 - 200.0).abs() <= 1.0);
        assert!((2.0 * a * cloud.len() as f64 - 0.2).abs() <= 2.0 * a);
        let finer = place1d(&unit, constant(0.2), a / 2.0, &*constant(1.0), &PlacementParams::default()).unwrap();
        assert!((finer.len() as f64 - 2.0 * cloud.len() as f64).abs() <= 1.0);
        let lit = PiecewisePotential1D::from_cloud(&cloud).unwrap();
        assert!((lit.mean(0.0, 1.0) - 0.2).abs() <= 2.0 * a);
    }

    #[test]
    fn single_segment_closed_form() {
        let (a, s, k, x) = (0.01, -3.0, 2.0, 0.3);
        let cloud = ScattererCloud::new(vec![[x, 0.0, 0.0]], a, vec![s], Dim::One).unwrap();
        let sol = solve_fl_1d(&cloud, &line(k)).unwrap();
        let want = Complex64::from_polar(1.0, k * x) / Complex64::new(1.0, s * a / k);
        assert!((sol.values[0] - want).norm() < 1e-15);
    }

    #[test]
    fn zero_strength_and_green_form_agree() {
        let unit = Interval1D::new(0.0, 1.0).unwrap();
        let cloud = place1d(&unit, constant(0.25), 0.01, &*constant(0.0), &PlacementParams::default()).unwrap();
        let sol = solve_fl_1d(&cloud, &line(2.0)).unwrap();
        for (c, u) in cloud.centers.iter().zip(&sol.values) {
            assert_eq!(*u, Complex64::from_polar(1.0, 2.0 * c[0]));
        }
        let cloud = place1d(&unit, constant(0.25), 0.01, &*constant(-2.0), &PlacementParams::default()).unwrap();
        let sol = solve_fl_1d(&cloud, &line(2.0)).unwrap();
        for x in [-0.2, 0.013, 0.5, 1.7] {
            let d = sol.evaluate(x) - sol.evaluate_with_green(x).unwrap();
            assert!(d.norm() < 1e-14);
        }
    }

    #[test]
    fn nystrom_matches_transfer_matrix_for_a_well() {
        let unit = Interval1D::new(0.0, 1.0).unwrap();
        let q = PiecewisePotential1D::constant(&unit, -1.0);
        let ls = solve_ls_1d(&q, &unit, &line(2.0), 1e-3, &Ls1DOptions::default()).unwrap();
        let tm = transfer_matrix_solve(&q, 2.0).unwrap();
        let t_ls = ls.evaluate(2.0) * Complex64::from_polar(1.0, -4.0);
        assert!((t_ls - tm.t).norm() < 1e-4, "{t_ls} vs {}", tm.t);
    }

    #[test]
    fn born_regime_matches_closed_form_first_term() {
        let unit = Interval1D::new(0.0, 1.0).unwrap();
        let (q0, k) = (1e-3, 2.0);
        let q = PiecewisePotential1D::constant(&unit, q0);
        let ls = solve_ls_1d(&q, &unit, &line(k), 1e-3, &Ls1DOptions::default()).unwrap();
        let ik2 = Complex64::new(0.0, 2.0 * k);
        for x in [0.0, 0.25, 0.6, 1.0] {
            let e = |t: f64| Complex64::from_polar(1.0, t);
            // int_0^1 e^{ik|x-y|} e^{iky} dy
            let integral = x * e(k * x) + e(-k * x) * (e(2.0 * k) - e(2.0 * k * x)) / ik2;
            let born = q0 / ik2 * integral;
            let diff = ls.evaluate(x) - e(k * x) - born;
            assert!(diff.norm() < 1e-6, "x={x}: {}", diff.norm());
        }
    }

    #[test]
    fn zero_potential_is_transparent() {
        let unit = Interval1D::new(-1.0, 2.0).unwrap();
        let ls = solve_ls_1d(&OnAxis(constant(0.0)), &unit, &line(3.0), 0.01, &Ls1DOptions::default()).unwrap();
        assert_eq!(ls.iterations, 0);
        assert_eq!(ls.evaluate(0.7), Complex64::from_polar(1.0, 3.0 * 0.7));
        assert!(matches!(
            solve_ls_1d(&OnAxis(constant(0.0)), &unit, &line(30.0), 0.01, &Ls1DOptions::default()),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn literal_potential_has_gaps() {
        let cloud = ScattererCloud::new(vec![[0.0; 3], [0.5, 0.0, 0.0]], 0.1, vec![2.0, 3.0], Dim::One).unwrap();
        let p = PiecewisePotential1D::from_cloud(&cloud).unwrap();
        assert_eq!(p.values, vec![2.0, 0.0, 3.0]);
        assert_eq!(p.value(0.05), 2.0);
        assert_eq!(p.value(0.3), 0.0);
        assert_eq!(p.value(0.45), 3.0);
        assert_eq!(p.value(0.7), 0.0);
    }
}
