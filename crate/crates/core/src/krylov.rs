//! Restarted GMRES for complex systems given only a matrix-vector product.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `y = A x` for a square complex operator.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub restart: usize,
    pub max_iters: usize,
    /// Stop once `||b - A x||_2 <= tol * ||b||_inf`; this also bounds the
    /// max-norm relative residual by `tol`.
    pub tol: f64,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            restart: 50,
            max_iters: 500,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// Relative residual estimate after each iteration.
    pub history: Vec<f64>,
    /// True residual `||b - A x||_inf / ||b||_inf` at exit.
    pub residual: f64,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solve `A x = b`, starting from the supplied `x`.
pub fn gmres(
    op: &dyn LinearOperator,
    b: &[Complex64],
    x: &mut [Complex64],
    cfg: &GmresConfig,
) -> Result<GmresOutcome> {
    let n = op.dim();
    assert_eq!(b.len(), n, "rhs length");
    assert_eq!(x.len(), n, "solution length");
    let zero = Complex64::new(0.0, 0.0);
    let b_scale = norm_inf(b);
    let mut history = Vec::new();
    if b_scale == 0.0 {
        x.iter_mut().for_each(|v| *v = zero);
        return Ok(GmresOutcome {
            iterations: 0,
            history,
            residual: 0.0,
        });
    }
    let target = cfg.tol * b_scale;
    let m = cfg.restart.max(1).min(n.max(1));
    let mut r = vec![zero; n];
    let mut total = 0usize;

    loop {
        op.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm2(&r);
        if beta <= target {
            return Ok(GmresOutcome {
                iterations: total,
                history,
                residual: norm_inf(&r) / b_scale,
            });
        }
        if total >= cfg.max_iters {
            return Err(Error::NoConvergence {
                iterations: total,
                residual: norm_inf(&r) / b_scale,
                history,
            });
        }

        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![zero; m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![zero; m];
        let mut g = vec![zero; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut w = vec![zero; n];
        let mut steps = 0;

        for j in 0..m {
            op.apply(&basis[j], &mut w);
            // modified Gram–Schmidt
            for (i, v) in basis.iter().enumerate() {
                let hij = inner(v, &w);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm2(&w);
            h[j + 1][j] = Complex64::new(hn, 0.0);

            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i].conj() * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let (c, s) = givens(h[j][j], h[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            h[j][j] = c * h[j][j] + s * h[j + 1][j];
            h[j + 1][j] = zero;
            g[j + 1] = -s.conj() * g[j];
            g[j] *= c;

            steps = j + 1;
            total += 1;
            let est = g[j + 1].norm();
            history.push(est / b_scale);
            if est <= target || total >= cfg.max_iters || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }

        // back substitution on the triangular block
        let mut y = vec![zero; steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for k in i + 1..steps {
                acc -= h[i][k] * y[k];
            }
            y[i] = acc / h[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[k]) {
                *xi += yk * vi;
            }
        }
    }
}

/// Rotation zeroing `b` in `(a, b)`: returns real `c` and complex `s` with
/// `c a + s b = r`, `-conj(s) a + c b = 0`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, (b / bn).conj());
    }
    let r = an.hypot(bn);
    let c = an / r;
    let phase = a / an;
    let s = phase * b.conj() / r;
    (c, s)
}

/// Dense operator, used for small systems and tests.
pub struct DenseOperator {
    pub n: usize,
    /// Row-major.
    pub data: Vec<Complex64>,
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_matrix(n: usize) -> DenseOperator {
        let mut data = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let x = (i * 31 + j * 17) as f64;
                data[i * n + j] = c((x * 0.37).sin(), (x * 0.11).cos()) * (0.6 / n as f64);
            }
            data[i * n + i] += c(1.0, 0.2);
        }
        DenseOperator { n, data }
    }

    #[test]
    fn solves_small_dense_system() {
        let op = test_matrix(40);
        let xs: Vec<Complex64> = (0..40).map(|i| c(i as f64 * 0.1, -(i as f64).sqrt())).collect();
        let mut b = vec![c(0.0, 0.0); 40];
        op.apply(&xs, &mut b);
        let mut x = vec![c(0.0, 0.0); 40];
        let out = gmres(&op, &b, &mut x, &GmresConfig { tol: 1e-12, ..Default::default() }).unwrap();
        assert!(out.residual <= 1e-12);
        for (a, b) in x.iter().zip(&xs) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn restarts_still_converge() {
        let op = test_matrix(60);
        let b: Vec<Complex64> = (0..60).map(|i| c(1.0, i as f64 * 0.01)).collect();
        let mut x = vec![c(0.0, 0.0); 60];
        let cfg = GmresConfig { restart: 3, max_iters: 500, tol: 1e-10 };
        let out = gmres(&op, &b, &mut x, &cfg).unwrap();
        assert!(out.residual <= 1e-10);
        assert!(out.iterations > 3);
    }

    #[test]
    fn zero_rhs_and_iteration_cap() {
        let op = test_matrix(10);
        let mut x = vec![c(1.0, 1.0); 10];
        let out = gmres(&op, &[c(0.0, 0.0); 10], &mut x, &GmresConfig::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(x.iter().all(|v| v.norm() == 0.0));

        let b = vec![c(1.0, 0.0); 10];
        let mut x = vec![c(0.0, 0.0); 10];
        let cfg = GmresConfig { restart: 1, max_iters: 2, tol: 1e-15 };
        match gmres(&op, &b, &mut x, &cfg) {
            Err(Error::NoConvergence { iterations, history, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(history.len(), 2);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
