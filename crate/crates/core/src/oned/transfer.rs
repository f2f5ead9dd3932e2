//! Exact solution of `u'' + (k^2 - q) u = 0` for step potentials.
//!
//! Within a layer of constant `q` the state `(u, u')` evolves by the real
//! matrix `[[C, S], [-kappa^2 S, C]]` with `C = cos(kappa x)` and
//! `S = sin(kappa x) / kappa`. Both are real entire functions of
//! `kappa^2`, so evanescent layers and `kappa = 0` need no special casing.

use num_complex::Complex64;

use super::PiecewisePotential1D;
use crate::error::{Error, Result};

/// `(C, S)` for a layer of width `w` and `kappa^2 = k2`.
fn layer_functions(k2: f64, w: f64) -> (f64, f64) {
    let z = k2 * w * w;
    if z.abs() < 1e-6 {
        // cos and sinc series in z = kappa^2 w^2
        let c = 1.0 - z / 2.0 + z * z / 24.0;
        let s = w * (1.0 - z / 6.0 + z * z / 120.0);
        (c, s)
    } else if k2 > 0.0 {
        let kappa = k2.sqrt();
        let (sn, cs) = (kappa * w).sin_cos();
        (cs, sn / kappa)
    } else {
        let s = (-k2).sqrt();
        ((s * w).cosh(), (s * w).sinh() / s)
    }
}

/// Per-layer propagators and their product, left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub layers: Vec<[[f64; 2]; 2]>,
    pub total: [[f64; 2]; 2],
}

fn matmul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

impl TransferMatrix {
    pub fn new(q: &PiecewisePotential1D, k: f64) -> Self {
        let mut total = [[1.0, 0.0], [0.0, 1.0]];
        let mut layers = Vec::with_capacity(q.values.len());
        for (i, &v) in q.values.iter().enumerate() {
            let k2 = k * k - v;
            let (c, s) = layer_functions(k2, q.breaks[i + 1] - q.breaks[i]);
            let m = [[c, s], [-k2 * s, c]];
            total = matmul(&m, &total);
            layers.push(m);
        }
        TransferMatrix { layers, total }
    }
}

/// Scattering of `e^{ikx}` incident from the left.
#[derive(Debug, Clone)]
pub struct TransferSolution {
    pub k: f64,
    /// Reflection coefficient, `u = e^{ikx} + r e^{-ikx}` on the left.
    pub r: Complex64,
    /// Transmission coefficient, `u = t e^{ikx}` on the right.
    pub t: Complex64,
    pub matrix: TransferMatrix,
    potential: PiecewisePotential1D,
    /// `(u, u')` at the left edge of each layer.
    states: Vec<(Complex64, Complex64)>,
}

pub fn transfer_matrix_solve(q: &PiecewisePotential1D, k: f64) -> Result<TransferSolution> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("wavenumber must be > 0, got {k}")));
    }
    let matrix = TransferMatrix::new(q, k);
    let ik = Complex64::new(0.0, k);
    let n = q.values.len();
    // march back from a unit outgoing wave on the right
    let right = q.breaks[n];
    let mut state = {
        let e = Complex64::from_polar(1.0, k * right);
        (e, ik * e)
    };
    let mut states = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); n];
    for j in (0..n).rev() {
        let m = &matrix.layers[j];
        // inverse of a unit-determinant matrix
        let u = m[1][1] * state.0 - m[0][1] * state.1;
        let du = -m[1][0] * state.0 + m[0][0] * state.1;
        state = (u, du);
        states[j] = state;
    }
    let left = q.breaks[0];
    let incoming = 0.5 * (state.0 + state.1 / ik) * Complex64::from_polar(1.0, -k * left);
    let reflected = 0.5 * (state.0 - state.1 / ik) * Complex64::from_polar(1.0, k * left);
    let t = 1.0 / incoming;
    let r = reflected / incoming;
    for s in states.iter_mut() {
        s.0 *= t;
        s.1 *= t;
    }
    Ok(TransferSolution {
        k,
        r,
        t,
        matrix,
        potential: q.clone(),
        states,
    })
}

impl TransferSolution {
    /// Exact total field at `x`.
    pub fn field(&self, x: f64) -> Complex64 {
        let b = &self.potential.breaks;
        let k = self.k;
        if x < b[0] {
            return Complex64::from_polar(1.0, k * x) + self.r * Complex64::from_polar(1.0, -k * x);
        }
        if x >= b[b.len() - 1] {
            return self.t * Complex64::from_polar(1.0, k * x);
        }
        let j = b.partition_point(|&v| v <= x) - 1;
        let k2 = k * k - self.potential.values[j];
        let (c, s) = layer_functions(k2, x - b[j]);
        let (u, du) = self.states[j];
        u * c + du * s
    }

    pub fn flux_defect(&self) -> f64 {
        (self.r.norm_sqr() + self.t.norm_sqr() - 1.0).abs()
    }
}
