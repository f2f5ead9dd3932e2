use std::f64::consts::PI;

use embedscat::effective::{solve_ls_field, LsOptions};
use embedscat::fields::{BoundedDomain, Point, Profile, WaveContext};
use embedscat::krylov::GmresConfig;
use num_complex::Complex64;

type Rotation = Box<dyn Fn(&Point) -> Point>;

fn well_domain(r: f64) -> BoundedDomain {
    BoundedDomain::new_box([-r; 3], [r; 3]).unwrap()
}

/// Rotation taking the z axis to `v` (Rodrigues).
fn rotate(v: &Point, axis: &Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    let d = axis[0] * v[0] + axis[1] * v[1] + axis[2] * v[2];
    let cr = [
        axis[1] * v[2] - axis[2] * v[1],
        axis[2] * v[0] - axis[0] * v[2],
        axis[0] * v[1] - axis[1] * v[0],
    ];
    [0, 1, 2].map(|i| v[i] * c + cr[i] * s + axis[i] * d * (1.0 - c))
}

#[test]
fn born_regime_matches_first_born_term() {
    let r = 0.5;
    let q = Profile::SphericalWell {
        depth: 0.01,
        center: [0.0; 3],
        radius: r,
    }
    .into_field();
    let ctx = WaveContext::new(1.0, [0.0, 0.0, 1.0]).unwrap();
    let opts = LsOptions {
        gmres: GmresConfig { tol: 1e-12, ..Default::default() },
        ..Default::default()
    };
    let sol = solve_ls_field(&*q, &well_domain(r), &ctx, r / 8.0, &opts).unwrap();
    // first Born term: the discrete integral applied to u0
    let nodes = sol.field.grid.nodes();
    let u0: Vec<Complex64> = nodes.iter().map(|y| ctx.incident(y)).collect();
    // the second Born term is ~1e-3 of the first, so stay away from the well
    let probe: Vec<Point> = (0..=30)
        .map(|i| {
            let t = PI * i as f64 / 30.0;
            [2.0 * r * t.sin(), 0.0, 2.0 * r * t.cos()]
        })
        .collect();
    let born = embedscat::foldy_lax::BallExpansion {
        centers: &nodes,
        radius: sol.disc.a_eff,
        strengths: &sol.disc.q,
        values: &u0,
    }
    .evaluate_at(&ctx, &probe);
    let full = sol.evaluate_at(&probe);
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..probe.len() {
        let u0 = ctx.incident(&probe[i]);
        let first = born[i] - u0;
        err = err.max((full[i] - u0 - first).norm());
        scale = scale.max(first.norm());
    }
    assert!(err / scale < 1e-3, "{}", err / scale);
}

fn random_unit(rnd: &mut impl FnMut() -> f64) -> Point {
    let z = 2.0 * rnd() - 1.0;
    let phi = 2.0 * PI * rnd();
    let s = (1.0 - z * z).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

fn lcg(mut seed: u64) -> impl FnMut() -> f64 {
    move || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (seed >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Amplitudes for the pairs `(R alpha, R beta)` over the given rotations.
fn rotated_amplitudes(rotations: &[Rotation]) -> Vec<Complex64> {
    let r = 0.5;
    let q = Profile::SphericalWell {
        depth: -1.0,
        center: [0.0; 3],
        radius: r,
    }
    .into_field();
    let theta: f64 = 0.9;
    let alpha0 = [0.0, 0.0, 1.0];
    let beta0 = [theta.sin(), 0.0, theta.cos()];
    let opts = LsOptions {
        gmres: GmresConfig { tol: 1e-12, ..Default::default() },
        ..Default::default()
    };
    rotations
        .iter()
        .map(|rot| {
            let ctx = WaveContext::new(1.0, rot(&alpha0)).unwrap();
            let b = rot(&beta0);
            let n = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            let sol = solve_ls_field(&*q, &well_domain(r), &ctx, r / 8.0, &opts).unwrap();
            sol.far_field(&[[b[0] / n, b[1] / n, b[2] / n]]).unwrap().values[0]
        })
        .collect()
}

fn spread(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| (a - amps[0]).norm()).fold(0.0, f64::max) / amps[0].norm()
}

#[test]
fn well_amplitude_is_invariant_under_grid_rotations() {
    // signed axis permutations map the cell-centered grid onto itself
    let mut rnd = lcg(7);
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut rotations: Vec<Rotation> = Vec::new();
    for _ in 0..20 {
        let p = perms[(rnd() * 6.0) as usize % 6];
        let s = [0, 1, 2].map(|_| if rnd() < 0.5 { -1.0 } else { 1.0 });
        rotations.push(Box::new(move |v: &Point| [s[0] * v[p[0]], s[1] * v[p[1]], s[2] * v[p[2]]]));
    }
    let d = spread(&rotated_amplitudes(&rotations));
    assert!(d < 1e-8, "spread {d:e}");
}

#[test]
fn well_amplitude_is_nearly_invariant_under_arbitrary_rotations() {
    let mut rnd = lcg(11);
    let mut rotations: Vec<Rotation> = Vec::new();
    for _ in 0..20 {
        let axis = random_unit(&mut rnd);
        let angle = 2.0 * PI * rnd();
        rotations.push(Box::new(move |v: &Point| rotate(v, &axis, angle)));
    }
    // limited by the cubic grid, not by the solver
    let d = spread(&rotated_amplitudes(&rotations));
    assert!(d < 1e-6, "spread {d:e}");
}

#[test]
fn far_field_is_reciprocal() {
    let q = Profile::Gaussian {
        amplitude: -2.0,
        center: [0.1, -0.05, 0.02],
        width: 0.2,
    }
    .into_field();
    let dom = BoundedDomain::new_box([-0.5; 3], [0.5; 3]).unwrap();
    let mut rnd = lcg(3);
    let opts = LsOptions {
        gmres: GmresConfig { tol: 1e-12, ..Default::default() },
        ..Default::default()
    };
    for _ in 0..3 {
        let alpha = random_unit(&mut rnd);
        let beta = random_unit(&mut rnd);
        let fwd = solve_ls_field(&*q, &dom, &WaveContext::new(2.0, alpha).unwrap(), 0.05, &opts).unwrap();
        let neg = |v: Point| [-v[0], -v[1], -v[2]];
        let back = solve_ls_field(&*q, &dom, &WaveContext::new(2.0, neg(beta)).unwrap(), 0.05, &opts).unwrap();
        let a = fwd.far_field(&[beta]).unwrap().values[0];
        let b = back.far_field(&[neg(alpha)]).unwrap().values[0];
        assert!((a - b).norm() <= 1e-6 * a.norm(), "{a} vs {b}");
    }
}

#[test]
fn grid_refinement_contracts() {
    let r = 0.5;
    let q = Profile::SphericalWell {
        depth: -1.0,
        center: [0.0; 3],
        radius: r,
    }
    .into_field();
    let ctx = WaveContext::new(1.0, [0.0, 0.0, 1.0]).unwrap();
    let probe: Vec<Point> = (0..=20)
        .map(|i| {
            let t = PI * i as f64 / 20.0;
            [2.0 * r * t.sin(), 0.0, 2.0 * r * t.cos()]
        })
        .collect();
    let fields: Vec<Vec<Complex64>> = [8.0, 16.0, 32.0]
        .iter()
        .map(|d| {
            solve_ls_field(&*q, &well_domain(r), &ctx, r / d, &LsOptions::default())
                .unwrap()
                .evaluate_at(&probe)
        })
        .collect();
    let change = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let c1 = change(&fields[0], &fields[1]);
    let c2 = change(&fields[1], &fields[2]);
    println!("refinement changes {c1:.3e} {c2:.3e}");
    assert!(c1 >= 1.5 * c2);
}
