//! Gauss–Legendre rules on intervals, boxes and the unit sphere.

use std::f64::consts::PI;

use crate::fields::Point;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for l in 2..=n {
        let p2 = ((2 * l - 1) as f64 * x * p1 - (l - 1) as f64 * p0) / l as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Legendre polynomials `P_0(x) .. P_lmax(x)`.
pub fn legendre_table(lmax: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(lmax + 1);
    p.push(1.0);
    if lmax >= 1 {
        p.push(x);
    }
    for l in 2..=lmax {
        let v = ((2 * l - 1) as f64 * x * p[l - 1] - (l - 1) as f64 * p[l - 2]) / l as f64;
        p.push(v);
    }
    p
}

/// Tensor Gauss–Legendre over `[lo, hi]` with `panels^3` sub-boxes of
/// `order^3` nodes each.
pub fn integrate_box<F>(f: F, lo: Point, hi: Point, panels: usize, order: usize) -> f64
where
    F: Fn(&Point) -> f64,
{
    let (x, w) = gauss_legendre(order);
    let axis = |d: usize| -> Vec<(f64, f64)> {
        let h = (hi[d] - lo[d]) / panels as f64;
        let mut out = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = lo[d] + (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                out.push((mid + 0.5 * h * xi, 0.5 * h * wi));
            }
        }
        out
    };
    let (ax, ay, az) = (axis(0), axis(1), axis(2));
    let mut total = 0.0;
    for &(z, wz) in &az {
        let mut plane = 0.0;
        for &(y, wy) in &ay {
            let mut line = 0.0;
            for &(xx, wx) in &ax {
                line += wx * f(&[xx, y, z]);
            }
            plane += wy * line;
        }
        total += wz * plane;
    }
    total
}

/// Integral over the ball `|x - center| < radius` in spherical coordinates.
pub fn integrate_ball<F>(f: F, center: Point, radius: f64, order: usize) -> f64
where
    F: Fn(&Point) -> f64,
{
    let (x, w) = gauss_legendre(order);
    let sphere = SphereQuadrature::product(order, 2 * order);
    let mut total = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        let r = 0.5 * radius * (xi + 1.0);
        let wr = 0.5 * radius * wi * r * r;
        let mut shell = 0.0;
        for (d, wd) in sphere.directions.iter().zip(&sphere.weights) {
            let p = [center[0] + r * d[0], center[1] + r * d[1], center[2] + r * d[2]];
            shell += wd * f(&p);
        }
        total += wr * shell;
    }
    total
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos(theta)`,
/// uniform in `phi`. Weights sum to `4 pi`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub directions: Vec<Point>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn product(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let mut directions = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let dphi = 2.0 * PI / n_phi as f64;
        for (ct, wt) in x.iter().zip(&w) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                directions.push([st * phi.cos(), st * phi.sin(), *ct]);
                weights.push(wt * dphi);
            }
        }
        SphereQuadrature { directions, weights }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // exact up to degree 2n - 1
            let deg = 2 * n - 1;
            let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32 - 1)).sum();
            let want = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((got - want).abs() < 1e-12, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn box_and_ball_integrals() {
        let v = integrate_box(|p| p[0] * p[1] * p[1], [0.0; 3], [1.0, 2.0, 3.0], 2, 4);
        assert!((v - 0.5 * 8.0 / 3.0 * 3.0).abs() < 1e-12);
        let v = integrate_ball(|p| p[2] * p[2], [0.3, 0.0, 0.0], 2.0, 12);
        // int z^2 over ball radius R = 4 pi R^5 / 15
        assert!((v - 4.0 * PI * 32.0 / 15.0).abs() < 1e-11);
    }

    #[test]
    fn sphere_rule_weights() {
        let s = SphereQuadrature::product(16, 32);
        assert_eq!(s.len(), 512);
        assert!((s.weights.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        for d in &s.directions {
            assert!((crate::fields::norm(d) - 1.0).abs() < 1e-14);
        }
        let z2: f64 = s.directions.iter().zip(&s.weights).map(|(d, w)| w * d[2] * d[2]).sum();
        assert!((z2 - 4.0 * PI / 3.0).abs() < 1e-12);
    }
}
