//! Fast summation of `sum_m e^{ik r_m} / (4 pi r_m) w_m`.
//!
//! For `k r <= 3` the kernel is written as `C(r^2) / r + i S(r^2)` with
//! `C(s) = cos(k sqrt s)` and `S(s) = sin(k sqrt s) / sqrt s`, both
//! entire in `s`, so a fixed Horner polynomial replaces `sin_cos`. The
//! inner loop runs four SIMD lanes; the reduction order is fixed,
//! so results are reproducible run to run.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use wide::f64x4;

use crate::fields::Point;

const TERMS: usize = 14;
/// Largest `k r` for which the truncated series is accurate to ~1e-16.
const SERIES_LIMIT: f64 = 3.0;
/// Relative size of the first dropped series term.
const SERIES_TOL: f64 = 1e-17;

/// Source positions in structure-of-arrays layout.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sources {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Sources {
    pub fn from_points(points: &[Point]) -> Self {
        Sources {
            x: points.iter().map(|p| p[0]).collect(),
            y: points.iter().map(|p| p[1]).collect(),
            z: points.iter().map(|p| p[2]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Largest distance between any source and the bounding box corners,
    /// an upper bound on all pairwise distances.
    pub fn extent(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let span = |v: &[f64]| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        };
        let (dx, dy, dz) = (span(&self.x), span(&self.y), span(&self.z));
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Helmholtz kernel evaluator for a fixed wavenumber and distance range.
#[derive(Debug, Clone)]
pub struct HelmholtzKernel {
    pub k: f64,
    series: Option<([f64; TERMS], [f64; TERMS])>,
    terms: usize,
}

impl HelmholtzKernel {
    /// `max_dist` bounds every distance the kernel will see.
    pub fn new(k: f64, max_dist: f64) -> Self {
        let series = if k * max_dist <= SERIES_LIMIT {
            let mut c = [0.0; TERMS];
            let mut s = [0.0; TERMS];
            let k2 = k * k;
            // c_j = (-k^2)^j / (2j)! / 4pi,  s_j = k (-k^2)^j / (2j+1)! / 4pi
            let mut fact_even = 1.0; // (2j)!
            let mut pow = 1.0; // (-k^2)^j
            for j in 0..TERMS {
                if j > 0 {
                    fact_even *= (2 * j - 1) as f64 * (2 * j) as f64;
                    pow *= -k2;
                }
                c[j] = pow / fact_even / (4.0 * PI);
                s[j] = k * pow / (fact_even * (2 * j + 1) as f64) / (4.0 * PI);
            }
            Some((c, s))
        } else {
            None
        };
        // (k r)^(2N) / (2N)! bounds the first dropped term
        let x2 = (k * max_dist).powi(2);
        let mut terms = 8;
        let mut bound = x2.powi(8) / (1..=16).map(|i| i as f64).product::<f64>();
        while terms < TERMS && bound > SERIES_TOL {
            bound *= x2 / ((2 * terms + 1) * (2 * terms + 2)) as f64;
            terms += 2;
            bound *= x2 / ((2 * terms - 1) * (2 * terms)) as f64;
        }
        HelmholtzKernel {
            k,
            series,
            terms: terms.min(TERMS),
        }
    }

    /// `e^{ikr} / (4 pi r)` for one pair, `r > 0`.
    #[inline]
    pub fn value(&self, r: f64) -> Complex64 {
        Complex64::from_polar(1.0 / (4.0 * PI * r), self.k * r)
    }

    /// `sum_{m in range} g(target, x_m) w_m` with `w = wr + i wi`.
    pub fn sum(
        &self,
        target: &Point,
        src: &Sources,
        wr: &[f64],
        wi: &[f64],
        range: Range<usize>,
    ) -> Complex64 {
        let xs = &src.x[range.clone()];
        let ys = &src.y[range.clone()];
        let zs = &src.z[range.clone()];
        let wr = &wr[range.clone()];
        let wi = &wi[range];
        match &self.series {
            Some((c, s)) => match self.terms {
                8 => series_sum::<8>(c, s, target, xs, ys, zs, wr, wi),
                10 => series_sum::<10>(c, s, target, xs, ys, zs, wr, wi),
                12 => series_sum::<12>(c, s, target, xs, ys, zs, wr, wi),
                _ => series_sum::<TERMS>(c, s, target, xs, ys, zs, wr, wi),
            },
            None => {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..xs.len() {
                    let dx = target[0] - xs[i];
                    let dy = target[1] - ys[i];
                    let dz = target[2] - zs[i];
                    let r = (dx * dx + dy * dy + dz * dz).sqrt();
                    acc += self.value(r) * Complex64::new(wr[i], wi[i]);
                }
                acc
            }
        }
    }

    /// As [`sum`](Self::sum) over all sources except `skip`.
    pub fn sum_except(
        &self,
        target: &Point,
        src: &Sources,
        wr: &[f64],
        wi: &[f64],
        skip: usize,
    ) -> Complex64 {
        self.sum(target, src, wr, wi, 0..skip) + self.sum(target, src, wr, wi, skip + 1..src.len())
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn series_sum<const N: usize>(
    c: &[f64; TERMS],
    s: &[f64; TERMS],
    t: &Point,
    xs: &[f64],
    ys: &[f64],
    zs: &[f64],
    wr: &[f64],
    wi: &[f64],
) -> Complex64 {
    const L: usize = 4;
    let n = xs.len();
    let body = n / L * L;
    let (tx, ty, tz) = (f64x4::splat(t[0]), f64x4::splat(t[1]), f64x4::splat(t[2]));
    let cs: [f64x4; N] = std::array::from_fn(|j| f64x4::splat(c[j]));
    let ss: [f64x4; N] = std::array::from_fn(|j| f64x4::splat(s[j]));
    let mut re = f64x4::ZERO;
    let mut im = f64x4::ZERO;
    let load = |v: &[f64]| f64x4::new([v[0], v[1], v[2], v[3]]);
    let chunks = xs[..body]
        .chunks_exact(L)
        .zip(ys[..body].chunks_exact(L))
        .zip(zs[..body].chunks_exact(L))
        .zip(wr[..body].chunks_exact(L))
        .zip(wi[..body].chunks_exact(L));
    for ((((cx, cy), cz), cwr), cwi) in chunks {
        let dx = tx - load(cx);
        let dy = ty - load(cy);
        let dz = tz - load(cz);
        let r2 = dx * dx + dy * dy + dz * dz;
        let mut cv = cs[N - 1];
        let mut sv = ss[N - 1];
        for j in (0..N - 1).rev() {
            cv = cv * r2 + cs[j];
            sv = sv * r2 + ss[j];
        }
        let re_k = cv / r2.sqrt();
        let (w_re, w_im) = (load(cwr), load(cwi));
        re += re_k * w_re - sv * w_im;
        im += re_k * w_im + sv * w_re;
    }
    let re = re.to_array();
    let im = im.to_array();
    let mut tail = Complex64::new(0.0, 0.0);
    for i in body..n {
        let dx = t[0] - xs[i];
        let dy = t[1] - ys[i];
        let dz = t[2] - zs[i];
        let r2 = dx * dx + dy * dy + dz * dz;
        let mut cv = c[N - 1];
        let mut sv = s[N - 1];
        for j in (0..N - 1).rev() {
            cv = cv * r2 + c[j];
            sv = sv * r2 + s[j];
        }
        let kern = Complex64::new(cv / r2.sqrt(), sv);
        tail += kern * Complex64::new(wr[i], wi[i]);
    }
    Complex64::new((re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3])) + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_direct_kernel() {
        let k = 1.3;
        let kern = HelmholtzKernel::new(k, 3.0 / k);
        assert!(kern.series.is_some());
        for i in 1..=300 {
            let r = i as f64 * 0.01 / k;
            let src = Sources::from_points(&[[r, 0.0, 0.0]]);
            let got = kern.sum(&[0.0; 3], &src, &[1.0], &[0.0], 0..1);
            let want = Complex64::from_polar(1.0 / (4.0 * PI * r), k * r);
            assert!((got - want).norm() <= 1e-14 * want.norm(), "r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn lanes_and_tail_agree_with_fallback() {
        let pts: Vec<Point> = (0..23)
            .map(|i| {
                let t = i as f64;
                [(t * 0.7).sin(), (t * 1.3).cos(), 0.05 * t]
            })
            .collect();
        let src = Sources::from_points(&pts);
        let wr: Vec<f64> = (0..23).map(|i| 1.0 + 0.1 * i as f64).collect();
        let wi: Vec<f64> = (0..23).map(|i| -0.3 * i as f64).collect();
        let target = [0.11, -0.2, 0.33];
        let fast = HelmholtzKernel::new(0.5, src.extent() + 1.0);
        let slow = HelmholtzKernel::new(0.5, 1e6);
        assert!(fast.series.is_some() && slow.series.is_none());
        let a = fast.sum(&target, &src, &wr, &wi, 0..23);
        let b = slow.sum(&target, &src, &wr, &wi, 0..23);
        assert!((a - b).norm() < 1e-13 * b.norm());
        let a = fast.sum_except(&target, &src, &wr, &wi, 5);
        let b = slow.sum(&target, &src, &wr, &wi, 0..5) + slow.sum(&target, &src, &wr, &wi, 6..23);
        assert!((a - b).norm() < 1e-13 * b.norm());
    }
}
