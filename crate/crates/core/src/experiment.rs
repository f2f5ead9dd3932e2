//! Convergence studies: many-body fields against the effective field as
//! the scatterer radius shrinks.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;

use crate::config::{validate_config, ExperimentConfig, Severity};
use crate::effective::{solve_ls, EffectiveSolution};
use crate::error::{Error, Result};
use crate::farfield::OpticalCheck;
use crate::fields::{BoundedDomain, GridSpec, Point};
use crate::foldy_lax::{assemble_and_solve, BallIndex};
use crate::io::write_file;
use crate::oned::{converge_1d, Converge1D, ConvergenceRow1D};
use crate::placement::{place, CountingLaw, Dim, ScattererCloud};
use crate::quad::SphereQuadrature;

pub const REPORT_FILE: &str = "report.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const PLOT_FILE: &str = "convergence.gp";

pub const REPORT_HEADER: &str =
    "a,M,iterations,residual,probe_points,sup_error,l2_error,far_field_error,optical_residual";

/// One a-level of the 3D study.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub a: f64,
    pub m: usize,
    pub iterations: usize,
    pub residual: f64,
    /// Probe points kept after excluding the neighbourhoods of centers.
    pub probe_points: usize,
    pub sup_error: f64,
    /// Root mean square of `|u_M - u_e|` over the kept probe points.
    pub l2_error: f64,
    /// `sup_beta |A_M(beta) - A_e(beta)|` over the sphere quadrature.
    pub far_field_error: f64,
    /// Optical theorem residual of `A_M`.
    pub optical_residual: f64,
}

impl ReportRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.6e},{},{:.9e},{:.9e},{:.9e},{:.6e}",
            self.a,
            self.m,
            self.iterations,
            self.residual,
            self.probe_points,
            self.sup_error,
            self.l2_error,
            self.far_field_error,
            self.optical_residual
        )
    }
}

/// Wall-clock seconds per stage, kept out of the report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelTiming {
    pub a: f64,
    pub place: f64,
    pub solve: f64,
    pub compare: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    pub timings: Vec<LevelTiming>,
    pub effective_nodes: usize,
    pub effective_iterations: usize,
    pub effective_seconds: f64,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        s
    }

    pub fn timings_csv(&self) -> String {
        let mut s = format!("stage,a,seconds\neffective,,{:.3}\n", self.effective_seconds);
        for t in &self.timings {
            let _ = writeln!(s, "place,{},{:.3}\nsolve,{},{:.3}\ncompare,{},{:.3}", t.a, t.place, t.a, t.solve, t.a, t.compare);
        }
        s
    }

    pub fn sup_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sup_error).collect()
    }
}

/// `points_per_axis^3` lattice on the bounding box of `domain` scaled by
/// `scale` about its center.
pub fn probe_lattice(domain: &BoundedDomain, points_per_axis: usize, scale: f64) -> Vec<Point> {
    let (lo, hi) = domain.bounding_box();
    let c = domain.center();
    let n = points_per_axis.max(2);
    let mut pts = Vec::with_capacity(n * n * n);
    for l in 0..n {
        for j in 0..n {
            for i in 0..n {
                let idx = [i, j, l];
                pts.push([0, 1, 2].map(|d| {
                    let half = 0.5 * scale * (hi[d] - lo[d]);
                    c[d] - half + 2.0 * half * idx[d] as f64 / (n - 1) as f64
                }));
            }
        }
    }
    pts
}

/// Indices of `points` at distance at least `radius` from every center.
pub fn far_from_centers(points: &[Point], cloud: &ScattererCloud, radius: f64) -> Vec<usize> {
    if cloud.is_empty() || radius <= 0.0 {
        return (0..points.len()).collect();
    }
    let index = BallIndex::new(&cloud.centers, radius);
    (0..points.len())
        .filter(|&i| index.near(&points[i], &cloud.centers, radius).is_empty())
        .collect()
}

fn refuse_invalid(cfg: &ExperimentConfig) -> Result<()> {
    let errors: Vec<String> = validate_config(cfg)
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.to_string())
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(errors.join("; ")))
    }
}

/// Solve the effective equation for a 3D config.
pub fn solve_effective(cfg: &ExperimentConfig) -> Result<EffectiveSolution> {
    let spec = cfg.potential_spec()?;
    solve_ls(&spec, &cfg.domain()?, &cfg.wave_context()?, cfg.effective.h, &cfg.ls_options())
}

/// Place, solve and compare at every radius of the config.
///
/// `on_row` sees each finished level, so callers can flush partial results.
pub fn run_convergence_3d(
    cfg: &ExperimentConfig,
    on_row: &mut dyn FnMut(&ReportRow, &LevelTiming) -> Result<()>,
) -> Result<ConvergenceReport> {
    if cfg.dimension != 3 {
        return Err(Error::Config("run_convergence_3d needs dimension = 3".into()));
    }
    refuse_invalid(cfg)?;
    let spec = cfg.potential_spec().map_err(|e| e.at("factorization"))?;
    let domain = cfg.domain()?;
    let ctx = cfg.wave_context()?;
    let opts = cfg.solver_options()?;

    let t = Instant::now();
    let effective = solve_effective(cfg).map_err(|e| e.at("effective solve"))?;
    let probe = probe_lattice(&domain, cfg.probe.points_per_axis, cfg.probe.scale);
    let u_e = effective.evaluate_at(&probe);
    let sphere = SphereQuadrature::product(cfg.far_field.n_theta, cfg.far_field.n_phi);
    let mut dirs = sphere.directions.clone();
    dirs.push(ctx.alpha);
    let a_e = effective.far_field(&dirs).map_err(|e| e.at("effective far field"))?;
    let effective_seconds = t.elapsed().as_secs_f64();
    log::info!(
        "effective: {} nodes, {} iterations, {effective_seconds:.1}s",
        effective.disc.len(),
        effective.diagnostics.iterations
    );

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for &a in &cfg.scatterers.radii {
        let stage = |name: &str| format!("{name} (a = {a})");
        let t = Instant::now();
        let law = CountingLaw::new(spec.n.clone(), a, Dim::Three)?;
        let cloud = place(&domain, &law, &*spec.strength, &cfg.placement_params()).map_err(|e| e.at(&stage("placement")))?;
        let place_s = t.elapsed().as_secs_f64();
        log::info!("a = {a}: M = {}", cloud.len());

        let t = Instant::now();
        let fl = assemble_and_solve(&cloud, &ctx, &opts).map_err(|e| e.at(&stage("many-body solve")))?;
        let solve_s = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let keep = far_from_centers(&probe, &cloud, cfg.probe.exclusion * a);
        let pts: Vec<Point> = keep.iter().map(|&i| probe[i]).collect();
        let u_m = fl.evaluate_at(&pts);
        let diffs: Vec<f64> = keep.iter().zip(&u_m).map(|(&i, u)| (u - u_e[i]).norm()).collect();
        let sup_error = diffs.iter().cloned().fold(0.0, f64::max);
        let l2_error = if diffs.is_empty() {
            0.0
        } else {
            (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt()
        };
        let a_m = fl.far_field(&dirs).map_err(|e| e.at(&stage("far field")))?;
        let n = sphere.len();
        let far_field_error = a_m.values[..n]
            .iter()
            .zip(&a_e.values[..n])
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        let optical = OpticalCheck::from_samples(ctx.k, &sphere, &a_m.values[..n], a_m.values[n]);
        let compare_s = t.elapsed().as_secs_f64();

        let row = ReportRow {
            a,
            m: cloud.len(),
            iterations: fl.diagnostics.iterations,
            residual: fl.diagnostics.residual,
            probe_points: pts.len(),
            sup_error,
            l2_error,
            far_field_error,
            optical_residual: optical.relative_residual(),
        };
        let timing = LevelTiming {
            a,
            place: place_s,
            solve: solve_s,
            compare: compare_s,
        };
        log::info!("a = {a}: sup error {sup_error:.3e}, far-field error {far_field_error:.3e}");
        on_row(&row, &timing)?;
        rows.push(row);
        timings.push(timing);
    }
    Ok(ConvergenceReport {
        rows,
        timings,
        effective_nodes: effective.disc.len(),
        effective_iterations: effective.diagnostics.iterations,
        effective_seconds,
    })
}

pub const REPORT_1D_HEADER: &str = "a,M,sup_error_vs_ue,sup_error_vs_oracle,oracle_vs_ue";

pub fn run_convergence_1d(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow1D>> {
    if cfg.dimension != 1 {
        return Err(Error::Config("run_convergence_1d needs dimension = 1".into()));
    }
    refuse_invalid(cfg)?;
    let spec = cfg.potential_spec().map_err(|e| e.at("factorization"))?;
    let setup = Converge1D {
        interval: cfg.interval()?,
        radii: cfg.scatterers.radii.clone(),
        h: cfg.effective.h,
        probe_points: cfg.probe.points_1d,
        params: cfg.placement_params(),
    };
    converge_1d(&spec, &cfg.wave_context()?, &setup).map_err(|e| e.at("1d convergence"))
}

pub fn report_1d_csv(rows: &[ConvergenceRow1D]) -> String {
    let mut s = String::from(REPORT_1D_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:.9e},{:.9e},{:.9e}",
            r.a, r.m, r.sup_error_vs_ue, r.sup_error_vs_oracle, r.oracle_vs_ue
        );
    }
    s
}

/// Gnuplot script drawing the sup error and `M` against `a` on log-log axes
/// from `report.csv` in the same directory.
pub fn plot_script(report: &ConvergenceReport) -> String {
    format!(
        "# {rows} a-levels, data in {REPORT_FILE}
set datafile separator ','
set terminal pngcairo size 1200,500
set output 'convergence.png'
set multiplot layout 1,2
set logscale xy
set key top left
set xlabel 'a'
set ylabel 'sup |u_M - u_e|'
plot '{REPORT_FILE}' using 1:6 skip 1 with linespoints title 'sup error'
set ylabel 'M'
plot '{REPORT_FILE}' using 1:2 skip 1 with linespoints title 'M'
unset multiplot
",
        rows = report.rows.len()
    )
}

pub fn emit_plot_script(report: &ConvergenceReport, dir: &Path) -> Result<PathBuf> {
    write_file(dir, PLOT_FILE, &plot_script(report))
}

/// Sup norm of `|u - v|`.
pub fn sup_distance(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

/// Regular grid for writing fields: `per_axis^3` nodes over the bounding box.
pub fn output_grid(domain: &BoundedDomain, per_axis: usize) -> GridSpec {
    let (lo, hi) = domain.bounding_box();
    GridSpec::spanning(lo, hi, per_axis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(n: usize) -> ConvergenceReport {
        ConvergenceReport {
            rows: (0..n)
                .map(|i| ReportRow {
                    a: 0.04 / (1 << i) as f64,
                    m: 1000 << (3 * i),
                    iterations: 5,
                    residual: 1e-9,
                    probe_points: 700,
                    sup_error: 1e-2 / (1 << i) as f64,
                    l2_error: 1e-3,
                    far_field_error: 1e-3,
                    optical_residual: 1e-2,
                })
                .collect(),
            timings: Vec::new(),
            effective_nodes: 0,
            effective_iterations: 0,
            effective_seconds: 0.0,
        }
    }

    #[test]
    fn plot_script_has_two_curves_and_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(3);
        let p = emit_plot_script(&r, dir.path()).unwrap();
        let first = std::fs::read(&p).unwrap();
        emit_plot_script(&r, dir.path()).unwrap();
        assert_eq!(first, std::fs::read(&p).unwrap());
        let text = String::from_utf8(first).unwrap();
        assert_eq!(text.matches("\nplot ").count(), 2);
        assert!(text.contains("logscale xy"));
        let empty = emit_plot_script(&report(0), dir.path()).unwrap();
        assert!(std::fs::read_to_string(empty).unwrap().starts_with("# 0 a-levels"));
    }

    #[test]
    fn report_csv_columns_match_header() {
        let csv = report(2).to_csv();
        let cols = REPORT_HEADER.split(',').count();
        for line in csv.lines() {
            assert_eq!(line.split(',').count(), cols);
        }
        assert_eq!(REPORT_HEADER.split(',').nth(5), Some("sup_error"));
    }

    #[test]
    fn probe_lattice_spans_the_scaled_box() {
        let p = probe_lattice(&BoundedDomain::unit_cube(), 9, 1.2);
        assert_eq!(p.len(), 729);
        assert!((p[0][0] + 0.1).abs() < 1e-15);
        assert!((p[728][2] - 1.1).abs() < 1e-15);
    }
}
