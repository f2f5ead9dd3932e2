//! Exact scattering by a spherical square well `q = q0` for `r < R`.
//!
//! Inside the well the radial solutions are `j_l(kappa r)` with
//! `kappa^2 = k^2 - q0`; outside they are `cos d_l j_l(kr) - sin d_l y_l(kr)`.
//! Matching logarithmic derivatives at `R` fixes the phase shifts `d_l`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{dot, norm, Point};
use crate::quad::legendre_table;

/// `j_0(x) .. j_lmax(x)`.
///
/// Upward recurrence is stable for `x > lmax`; below that the values come
/// from downward (Miller) recurrence normalised by `sum (2l+1) j_l^2 = 1`.
pub fn spherical_jn(lmax: usize, x: f64) -> Vec<f64> {
    let len = lmax.max(1) + 1;
    let mut out = vec![0.0; len];
    if x == 0.0 {
        out[0] = 1.0;
        out.truncate(lmax + 1);
        return out;
    }
    let (s, c) = x.sin_cos();
    if x > len as f64 {
        out[0] = s / x;
        out[1] = s / (x * x) - c / x;
        for l in 1..len - 1 {
            out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
        }
    } else {
        let start = len + 20 + x.ceil() as usize + (10.0 * (len as f64).sqrt()) as usize;
        let mut f = vec![0.0; start + 2];
        f[start] = 1e-30;
        for l in (1..=start).rev() {
            f[l - 1] = (2 * l + 1) as f64 / x * f[l] - f[l + 1];
            if f[l - 1].abs() > 1e100 {
                f.iter_mut().for_each(|v| *v *= 1e-100);
            }
        }
        let sum: f64 = f.iter().enumerate().map(|(l, v)| (2 * l + 1) as f64 * v * v).sum();
        let mut scale = 1.0 / sum.sqrt();
        let j0 = s / x;
        let j1 = s / (x * x) - c / x;
        let reference = if j0.abs() >= j1.abs() { (j0, f[0]) } else { (j1, f[1]) };
        if (reference.0 < 0.0) != (reference.1 < 0.0) {
            scale = -scale;
        }
        for l in 0..len {
            out[l] = f[l] * scale;
        }
    }
    out.truncate(lmax + 1);
    out
}

/// `y_0(x) .. y_lmax(x)` by upward recurrence, `x > 0`.
pub fn spherical_yn(lmax: usize, x: f64) -> Vec<f64> {
    let (s, c) = x.sin_cos();
    let mut out = Vec::with_capacity(lmax + 2);
    out.push(-c / x);
    out.push(-c / (x * x) - s / x);
    for l in 1..lmax {
        let next = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
        out.push(next);
    }
    out.truncate(lmax + 1);
    out
}

/// Derivatives from `f_l' = f_{l-1} - (l+1) f_l / x`, `f_0' = -f_1`.
fn derivatives(f: &[f64], next: f64, x: f64) -> Vec<f64> {
    (0..f.len())
        .map(|l| {
            if l == 0 {
                -f.get(1).copied().unwrap_or(next)
            } else {
                f[l - 1] - (l + 1) as f64 * f[l] / x
            }
        })
        .collect()
}

fn with_derivatives(lmax: usize, x: f64, bessel: fn(usize, f64) -> Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let f = bessel(lmax + 1, x);
    let d = derivatives(&f[..=lmax], f[lmax + 1], x);
    (f[..=lmax].to_vec(), d)
}

/// Phase shifts and the resulting fields for a spherical well centred at
/// the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialWaveOracle {
    pub q0: f64,
    pub radius: f64,
    pub k: f64,
    pub lmax: usize,
    pub kappa: f64,
    pub phase_shifts: Vec<f64>,
    /// Interior coefficients `c_l` of `j_l(kappa r)`.
    interior: Vec<Complex64>,
}

pub fn partial_wave_solve(q0: f64, radius: f64, k: f64, lmax: usize) -> Result<PartialWaveOracle> {
    if !(k > 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("need k > 0 and R > 0, got k={k}, R={radius}")));
    }
    let kappa2 = k * k - q0;
    if !(kappa2 > 0.0) {
        return Err(Error::Unsupported(format!(
            "interior wavenumber squared k^2 - q0 = {kappa2} is not positive"
        )));
    }
    let kappa = kappa2.sqrt();
    let (j_out, dj_out) = with_derivatives(lmax, k * radius, spherical_jn);
    let (y_out, dy_out) = with_derivatives(lmax, k * radius, spherical_yn);
    let (j_in, dj_in) = with_derivatives(lmax, kappa * radius, spherical_jn);
    let mut phase_shifts = Vec::with_capacity(lmax + 1);
    let mut interior = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        let num = k * dj_out[l] * j_in[l] - kappa * dj_in[l] * j_out[l];
        let den = k * dy_out[l] * j_in[l] - kappa * dj_in[l] * y_out[l];
        let delta = (num / den).atan();
        let (sd, cd) = delta.sin_cos();
        let e = Complex64::from_polar(1.0, delta);
        let c = if j_in[l].abs() >= dj_in[l].abs() {
            e * (cd * j_out[l] - sd * y_out[l]) / j_in[l]
        } else {
            e * k * (cd * dj_out[l] - sd * dy_out[l]) / (kappa * dj_in[l])
        };
        phase_shifts.push(delta);
        interior.push(c);
    }
    Ok(PartialWaveOracle {
        q0,
        radius,
        k,
        lmax,
        kappa,
        phase_shifts,
        interior,
    })
}

impl PartialWaveOracle {
    /// `(1/k) sum (2l+1) e^{i d_l} sin d_l P_l(cos theta)`.
    pub fn amplitude(&self, cos_theta: f64) -> Complex64 {
        let p = legendre_table(self.lmax, cos_theta);
        let s: Complex64 = self
            .phase_shifts
            .iter()
            .enumerate()
            .map(|(l, &d)| Complex64::from_polar(d.sin(), d) * ((2 * l + 1) as f64 * p[l]))
            .sum();
        s / self.k
    }

    /// Amplitude for outgoing direction `beta` and incident `alpha`.
    pub fn amplitude_between(&self, beta: &Point, alpha: &Point) -> Complex64 {
        self.amplitude(dot(beta, alpha).clamp(-1.0, 1.0))
    }

    /// Total field at `x` (relative to the well centre) for incidence along `alpha`.
    pub fn field(&self, x: &Point, alpha: &Point) -> Complex64 {
        let r = norm(x);
        let cos_t = if r == 0.0 { 1.0 } else { (dot(x, alpha) / r).clamp(-1.0, 1.0) };
        let p = legendre_table(self.lmax, cos_t);
        let mut i_pow = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        if r < self.radius {
            let j = spherical_jn(self.lmax, self.kappa * r);
            for l in 0..=self.lmax {
                acc += i_pow * self.interior[l] * j[l] * ((2 * l + 1) as f64 * p[l]);
                i_pow *= Complex64::i();
            }
        } else {
            let j = spherical_jn(self.lmax, self.k * r);
            let y = spherical_yn(self.lmax, self.k * r);
            for (l, &d) in self.phase_shifts.iter().enumerate() {
                let (sd, cd) = d.sin_cos();
                let radial = Complex64::from_polar(1.0, d) * (cd * j[l] - sd * y[l]);
                acc += i_pow * radial * ((2 * l + 1) as f64 * p[l]);
                i_pow *= Complex64::i();
            }
        }
        acc
    }
}
