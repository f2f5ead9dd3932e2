//! Deterministic placement of scatterer centers under the counting law
//! `N(cell) = V(a)^-1 * int_cell n dx`, and the Riemann-sum check that
//! follows from it.
//!
//! The domain is cut into cells of side roughly `cell_scale * sqrt(a)`.
//! Each cell's real-valued target count is rounded with error diffusion
//! (the fractional residue carries to the next cell in lexicographic
//! order) and the rounded count is laid out on a regular sub-lattice
//! whose pitch never drops below `2a`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{dist, BoundedDomain, Point, ScalarField};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Three,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Three => 3,
        }
    }
}

/// Ball volume `4 pi a^3 / 3` in 3D, segment length `2a` in 1D.
pub fn ball_volume(a: f64, dim: Dim) -> f64 {
    match dim {
        Dim::Three => 4.0 * PI * a * a * a / 3.0,
        Dim::One => 2.0 * a,
    }
}

#[derive(Debug, Clone)]
pub struct CountingLaw {
    pub n: Arc<dyn ScalarField>,
    pub a: f64,
    pub dim: Dim,
}

impl CountingLaw {
    pub fn new(n: Arc<dyn ScalarField>, a: f64, dim: Dim) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("radius must be > 0, got {a}")));
        }
        Ok(CountingLaw { n, a, dim })
    }

    pub fn ball_volume(&self) -> f64 {
        ball_volume(self.a, self.dim)
    }
}

/// Centers, common radius and per-scatterer strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererCloud {
    pub centers: Vec<Point>,
    pub radius: f64,
    pub strengths: Vec<f64>,
    pub dim: Dim,
}

impl ScattererCloud {
    pub fn new(centers: Vec<Point>, radius: f64, strengths: Vec<f64>, dim: Dim) -> Result<Self> {
        if centers.len() != strengths.len() {
            return Err(Error::InvalidParameter(format!(
                "{} centers but {} strengths",
                centers.len(),
                strengths.len()
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be > 0, got {radius}")));
        }
        Ok(ScattererCloud {
            centers,
            radius,
            strengths,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn ball_volume(&self) -> f64 {
        ball_volume(self.radius, self.dim)
    }

    /// Smallest pairwise center distance (infinite for fewer than two).
    ///
    /// Uses a uniform bucket grid of pitch `2a`, so only neighbouring
    /// buckets are compared.
    pub fn min_separation(&self) -> f64 {
        if self.centers.len() < 2 {
            return f64::INFINITY;
        }
        let pitch = 2.0 * self.radius;
        let key = |p: &Point| -> [i64; 3] {
            [
                (p[0] / pitch).floor() as i64,
                (p[1] / pitch).floor() as i64,
                (p[2] / pitch).floor() as i64,
            ]
        };
        let mut buckets: std::collections::HashMap<[i64; 3], Vec<usize>> = Default::default();
        for (i, p) in self.centers.iter().enumerate() {
            buckets.entry(key(p)).or_default().push(i);
        }
        let mut best = f64::INFINITY;
        for (i, p) in self.centers.iter().enumerate() {
            let k = key(p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(list) = buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                            for &j in list {
                                if j > i {
                                    best = best.min(dist(p, &self.centers[j]));
                                }
                            }
                        }
                    }
                }
            }
        }
        if best.is_infinite() {
            // every pair is further apart than one bucket
            best = pitch;
        }
        best
    }

    /// Plain-text form: header `# dim=3 a=<a> M=<M>`, then `x y z A_m`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(64 * (self.len() + 1));
        let _ = writeln!(
            out,
            "# dim={} a={} M={}",
            self.dim.as_usize(),
            self.radius,
            self.len()
        );
        for (c, s) in self.centers.iter().zip(&self.strengths) {
            let _ = writeln!(out, "{} {} {} {}", c[0], c[1], c[2], s);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut radius = None;
        let mut expected = None;
        let mut centers = Vec::new();
        let mut strengths = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            if let Some(rest) = line.strip_prefix('#') {
                for tok in rest.split_whitespace() {
                    let Some((key, val)) = tok.split_once('=') else {
                        continue;
                    };
                    match key {
                        "dim" => {
                            dim = Some(match val {
                                "1" => Dim::One,
                                "3" => Dim::Three,
                                _ => return Err(perr(format!("unsupported dim {val}"))),
                            })
                        }
                        "a" => radius = Some(val.parse::<f64>().map_err(|e| perr(e.to_string()))?),
                        "M" => {
                            expected = Some(val.parse::<usize>().map_err(|e| perr(e.to_string()))?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(e.to_string()))?;
            if vals.len() != 4 {
                return Err(perr(format!("expected 4 columns, found {}", vals.len())));
            }
            centers.push([vals[0], vals[1], vals[2]]);
            strengths.push(vals[3]);
        }
        let (Some(dim), Some(radius)) = (dim, radius) else {
            return Err(Error::Parse {
                line: 1,
                msg: "missing '# dim=.. a=..' header".into(),
            });
        };
        if let Some(m) = expected {
            if m != centers.len() {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("header says M={m}, found {} rows", centers.len()),
                });
            }
        }
        ScattererCloud::new(centers, radius, strengths, dim)
    }
}

/// Knobs of the placement scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementParams {
    /// Cell side is `cell_scale * sqrt(a)` before snapping to the domain.
    pub cell_scale: f64,
    /// Midpoint samples per axis when integrating `n` over a cell.
    pub samples_per_axis: usize,
}

impl Default for PlacementParams {
    fn default() -> Self {
        PlacementParams {
            cell_scale: 2.0,
            samples_per_axis: 6,
        }
    }
}

/// One partition cell as used by the placement.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub index: Vec<usize>,
    pub lo: Point,
    pub hi: Point,
    /// `V(a)^-1 * int_{cell ∩ D} n dx` (midpoint rule).
    pub target: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct Placement {
    pub cloud: ScattererCloud,
    pub cells: Vec<CellRecord>,
    /// Residue left after the last cell.
    pub residue: f64,
}

/// Place centers in a 3D domain.
pub fn place(
    domain: &BoundedDomain,
    law: &CountingLaw,
    strength: &dyn ScalarField,
    params: &PlacementParams,
) -> Result<ScattererCloud> {
    place_with_cells(domain, law, strength, params).map(|p| p.cloud)
}

/// As [`place`], also returning the partition and per-cell counts.
pub fn place_with_cells(
    domain: &BoundedDomain,
    law: &CountingLaw,
    strength: &dyn ScalarField,
    params: &PlacementParams,
) -> Result<Placement> {
    domain.validate()?;
    if law.dim != Dim::Three {
        return Err(Error::InvalidParameter("3D placement needs a 3D counting law".into()));
    }
    let (lo, hi) = domain.bounding_box();
    let side = params.cell_scale * law.a.sqrt();
    let base: Vec<usize> = (0..3)
        .map(|d| (((hi[d] - lo[d]) / side).round() as usize).max(1))
        .collect();

    // Rounding of the cell count can leave a lattice that is one slot
    // short; nearby cell counts are tried in a fixed order.
    let mut first_err = None;
    for delta in [0i64, 1, -1, 2, -2, 3] {
        let cells: Vec<usize> = base
            .iter()
            .map(|&p| (p as i64 + delta).max(1) as usize)
            .collect();
        if delta != 0 && cells.iter().zip(&base).all(|(c, b)| c == b) {
            continue;
        }
        match place_on_partition(domain, law, strength, params, [cells[0], cells[1], cells[2]]) {
            Ok(p) => return Ok(p),
            Err(e @ Error::Placement { .. }) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(first_err.expect("at least one attempt"))
}

fn place_on_partition(
    domain: &BoundedDomain,
    law: &CountingLaw,
    strength: &dyn ScalarField,
    params: &PlacementParams,
    cells: [usize; 3],
) -> Result<Placement> {
    let (lo, hi) = domain.bounding_box();
    let a = law.a;
    let vol = law.ball_volume();
    let size = [
        (hi[0] - lo[0]) / cells[0] as f64,
        (hi[1] - lo[1]) / cells[1] as f64,
        (hi[2] - lo[2]) / cells[2] as f64,
    ];
    let caps = size.map(|s| max_slots(s, a));
    let q = params.samples_per_axis.max(1);
    let sub = size.map(|s| s / q as f64);
    let sub_vol = sub[0] * sub[1] * sub[2];

    let mut centers = Vec::new();
    let mut records = Vec::with_capacity(cells.iter().product());
    let mut carry = 0.0;

    for i0 in 0..cells[0] {
        for i1 in 0..cells[1] {
            for i2 in 0..cells[2] {
                let c_lo = [
                    lo[0] + i0 as f64 * size[0],
                    lo[1] + i1 as f64 * size[1],
                    lo[2] + i2 as f64 * size[2],
                ];
                let c_hi = [c_lo[0] + size[0], c_lo[1] + size[1], c_lo[2] + size[2]];

                let mut integral = 0.0;
                let mut inside = 0usize;
                for s0 in 0..q {
                    for s1 in 0..q {
                        for s2 in 0..q {
                            let p = [
                                c_lo[0] + (s0 as f64 + 0.5) * sub[0],
                                c_lo[1] + (s1 as f64 + 0.5) * sub[1],
                                c_lo[2] + (s2 as f64 + 0.5) * sub[2],
                            ];
                            if domain.contains(&p) {
                                integral += law.n.eval(&p);
                                inside += 1;
                            }
                        }
                    }
                }
                let target = (integral * sub_vol / vol).max(0.0);
                let wanted = target + carry;
                let mut count = wanted.round().max(0.0) as usize;
                let index = vec![i0, i1, i2];

                let mut placed = Vec::new();
                if count > 0 {
                    let capacity: usize = caps.iter().product();
                    let frac = inside as f64 / (q * q * q) as f64;
                    let need = if inside == q * q * q || frac <= 0.0 {
                        count
                    } else {
                        (count as f64 / frac).ceil() as usize
                    };
                    let overfull = || Error::Placement {
                        cell: index.clone(),
                        needed: count,
                        capacity,
                    };
                    let dims = choose_lattice(need.min(capacity), caps, size).ok_or_else(overfull)?;
                    let slots = lattice_slots(c_lo, size, dims);
                    let valid: Vec<Point> = slots
                        .iter()
                        .copied()
                        .filter(|p| domain.contains(p) && domain.depth(p) >= a)
                        .collect();
                    if valid.len() == slots.len() {
                        if slots.len() < count {
                            return Err(overfull());
                        }
                        placed = select_symmetric(&slots, count);
                    } else {
                        // clipped cell: the shortfall is re-diffused through the carry
                        count = count.min(valid.len());
                        placed = select_strided(&valid, count);
                    }
                }
                carry = wanted - count as f64;
                centers.extend_from_slice(&placed);
                records.push(CellRecord {
                    index,
                    lo: c_lo,
                    hi: c_hi,
                    target,
                    count,
                });
            }
        }
    }

    let strengths = centers.iter().map(|c| strength.eval(c)).collect();
    Ok(Placement {
        cloud: ScattererCloud::new(centers, a, strengths, Dim::Three)?,
        cells: records,
        residue: carry,
    })
}

/// Largest `m` with `side / m` strictly above `2a`.
fn max_slots(side: f64, a: f64) -> usize {
    (side / (2.0 * a) * (1.0 - 1e-12)).floor() as usize
}

/// Sub-lattice shape with at least `count` slots, every pitch at least
/// `2a`, preferring few spare slots and near-isotropic pitch.
fn choose_lattice(count: usize, caps: [usize; 3], size: [f64; 3]) -> Option<[usize; 3]> {
    if count == 0 {
        return Some([1, 1, 1]);
    }
    let mut best: Option<([usize; 3], bool, usize, f64)> = None;
    for m0 in 1..=caps[0] {
        for m1 in 1..=caps[1] {
            let m2 = count.div_ceil(m0 * m1).max(1);
            if m2 > caps[2] {
                continue;
            }
            let dims = [m0, m1, m2];
            let pitch = [size[0] / m0 as f64, size[1] / m1 as f64, size[2] / m2 as f64];
            let aspect = pitch.iter().cloned().fold(0.0, f64::max)
                / pitch.iter().cloned().fold(f64::INFINITY, f64::min);
            let product = m0 * m1 * m2;
            let ok = aspect <= 2.0 + 1e-12;
            let better = match &best {
                None => true,
                Some((_, bok, bp, ba)) => {
                    if ok != *bok {
                        ok
                    } else if ok {
                        (product, aspect) < (*bp, *ba)
                    } else {
                        (aspect, product) < (*ba, *bp)
                    }
                }
            };
            if better {
                best = Some((dims, ok, product, aspect));
            }
        }
    }
    best.map(|b| b.0)
}

fn lattice_slots(lo: Point, size: [f64; 3], dims: [usize; 3]) -> Vec<Point> {
    let pitch = [
        size[0] / dims[0] as f64,
        size[1] / dims[1] as f64,
        size[2] / dims[2] as f64,
    ];
    let mut out = Vec::with_capacity(dims.iter().product());
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                out.push([
                    lo[0] + (i as f64 + 0.5) * pitch[0],
                    lo[1] + (j as f64 + 0.5) * pitch[1],
                    lo[2] + (k as f64 + 0.5) * pitch[2],
                ]);
            }
        }
    }
    out
}

/// Drop slots in point-reflected pairs (index `i` and `len-1-i`) so the
/// kept set stays centred on the cell.
fn select_symmetric(slots: &[Point], count: usize) -> Vec<Point> {
    let p = slots.len();
    let remove = p - count;
    if remove == 0 {
        return slots.to_vec();
    }
    let mut drop = vec![false; p];
    let pairs = remove / 2;
    let mut single = remove % 2 == 1;
    if single && p % 2 == 1 {
        drop[(p - 1) / 2] = true;
        single = false;
    }
    let half = p / 2;
    let picks = pairs + usize::from(single);
    for k in 0..picks {
        let idx = ((k as f64 + 0.5) * half as f64 / picks as f64).floor() as usize;
        drop[idx] = true;
        if k < pairs {
            drop[p - 1 - idx] = true;
        }
    }
    slots
        .iter()
        .zip(&drop)
        .filter(|(_, d)| !**d)
        .map(|(s, _)| *s)
        .collect()
}

fn select_strided(slots: &[Point], count: usize) -> Vec<Point> {
    if count == 0 {
        return Vec::new();
    }
    let len = slots.len();
    (0..count)
        .map(|k| slots[((k as f64 + 0.5) * len as f64 / count as f64).floor() as usize])
        .collect()
}

/// Place centers on the interval `(c, d)` with segments `(x_m - a, x_m + a)`.
pub fn place_interval(
    c: f64,
    d: f64,
    law: &CountingLaw,
    strength: &dyn ScalarField,
    params: &PlacementParams,
) -> Result<Placement> {
    if !(d > c) {
        return Err(Error::InvalidParameter(format!("interval needs c < d, got ({c}, {d})")));
    }
    if law.dim != Dim::One {
        return Err(Error::InvalidParameter("interval placement needs a 1D counting law".into()));
    }
    let a = law.a;
    let vol = law.ball_volume();
    let side = params.cell_scale * a.sqrt();
    let cells = (((d - c) / side).round() as usize).max(1);
    let size = (d - c) / cells as f64;
    let cap = max_slots(size, a);
    let q = params.samples_per_axis.max(1);
    let mut centers = Vec::new();
    let mut records = Vec::with_capacity(cells);
    let mut carry = 0.0;
    for i in 0..cells {
        let lo = c + i as f64 * size;
        let integral: f64 = (0..q)
            .map(|s| law.n.eval(&[lo + (s as f64 + 0.5) * size / q as f64, 0.0, 0.0]))
            .sum::<f64>()
            * size
            / q as f64;
        let target = (integral / vol).max(0.0);
        let wanted = target + carry;
        let count = wanted.round().max(0.0) as usize;
        if count > cap {
            return Err(Error::Placement {
                cell: vec![i],
                needed: count,
                capacity: cap,
            });
        }
        let pitch = size / count.max(1) as f64;
        for j in 0..count {
            centers.push([lo + (j as f64 + 0.5) * pitch, 0.0, 0.0]);
        }
        carry = wanted - count as f64;
        records.push(CellRecord {
            index: vec![i],
            lo: [lo, 0.0, 0.0],
            hi: [lo + size, 0.0, 0.0],
            target,
            count,
        });
    }
    let strengths = centers.iter().map(|x| strength.eval(x)).collect();
    Ok(Placement {
        cloud: ScattererCloud::new(centers, a, strengths, Dim::One)?,
        cells: records,
        residue: carry,
    })
}

/// Number of centers inside `region`.
pub fn count_in_region(cloud: &ScattererCloud, region: &BoundedDomain) -> usize {
    cloud.centers.iter().filter(|c| region.contains(c)).count()
}

/// Number of centers with `lo <= x < hi` (1D clouds).
pub fn count_in_interval(cloud: &ScattererCloud, lo: f64, hi: f64) -> usize {
    cloud.centers.iter().filter(|c| c[0] >= lo && c[0] < hi).count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannRow {
    pub a: f64,
    pub m: usize,
    /// `sum_m f(x_m) V(a)`
    pub sum: f64,
    /// `int_D f n dx`
    pub integral: f64,
    pub rel_error: f64,
}

/// Reference integral `int_D f n dx` by composite Gauss–Legendre
/// (`panels * order` nodes per axis).
pub fn reference_integral(
    f: &dyn ScalarField,
    n: &dyn ScalarField,
    domain: &BoundedDomain,
    panels: usize,
    order: usize,
) -> f64 {
    match *domain {
        BoundedDomain::Box { min, max } => {
            quad::integrate_box(|p| f.eval(p) * n.eval(p), min, max, panels, order)
        }
        BoundedDomain::Ball { center, radius } => {
            quad::integrate_ball(|p| f.eval(p) * n.eval(p), center, radius, panels * order)
        }
    }
}

/// Compare `sum_m f(x_m) V(a)` against `int_D f n dx` along a decreasing
/// radius sequence. The reference uses 64 nodes per axis.
pub fn riemann_limit_check(
    f: &dyn ScalarField,
    n: Arc<dyn ScalarField>,
    domain: &BoundedDomain,
    radii: &[f64],
    params: &PlacementParams,
) -> Result<Vec<RiemannRow>> {
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("radius sequence must be strictly decreasing".into()));
    }
    let integral = reference_integral(f, n.as_ref(), domain, 8, 8);
    let unit = crate::fields::Profile::Constant { value: 1.0 };
    radii
        .iter()
        .map(|&a| {
            let law = CountingLaw::new(n.clone(), a, Dim::Three)?;
            let cloud = place(domain, &law, &unit, params)?;
            let vol = law.ball_volume();
            let sum: f64 = cloud.centers.iter().map(|c| f.eval(c) * vol).sum();
            let rel_error = if integral != 0.0 {
                (sum - integral).abs() / integral.abs()
            } else {
                (sum - integral).abs()
            };
            Ok(RiemannRow {
                a,
                m: cloud.len(),
                sum,
                integral,
                rel_error,
            })
        })
        .collect()
}

/// True when every step satisfies `e[i+1] <= (1 + slack) e[i]`.
pub fn non_increasing_with_slack(errors: &[f64], slack: f64) -> bool {
    errors.windows(2).all(|w| w[1] <= (1.0 + slack) * w[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Profile;

    fn constant(v: f64) -> Arc<dyn ScalarField> {
        Profile::Constant { value: v }.into_field()
    }

    #[test]
    fn ball_volume_by_dimension() {
        assert!((ball_volume(0.02, Dim::Three) - 3.351032163829113e-5).abs() < 1e-18);
        assert_eq!(ball_volume(1e-3, Dim::One), 2e-3);
    }

    #[test]
    fn unit_cube_constant_density_count() {
        let law = CountingLaw::new(constant(0.3), 0.02, Dim::Three).unwrap();
        let p = place_with_cells(&BoundedDomain::unit_cube(), &law, &Profile::Constant { value: 1.0 }, &PlacementParams::default()).unwrap();
        let m = p.cloud.len();
        let ratio = m as f64 * law.ball_volume() / 0.3;
        assert!((0.99..=1.01).contains(&ratio), "M = {m}, ratio {ratio}");
        assert!((m as f64 - 0.3 / law.ball_volume()).abs() <= p.cells.len() as f64);
        assert!(p.cloud.min_separation() >= 2.0 * law.a);
        for cell in &p.cells {
            assert!((cell.count as f64 - cell.target).abs() <= 1.0 + 1e-9, "{cell:?}");
        }
    }

    #[test]
    fn zero_density_gives_empty_cloud() {
        let law = CountingLaw::new(constant(0.0), 0.02, Dim::Three).unwrap();
        let cloud = place(&BoundedDomain::unit_cube(), &law, &Profile::Constant { value: 1.0 }, &PlacementParams::default()).unwrap();
        assert!(cloud.is_empty());
    }

    #[test]
    fn overdense_cell_is_reported() {
        let law = CountingLaw::new(constant(0.9), 0.02, Dim::Three).unwrap();
        let err = place(&BoundedDomain::unit_cube(), &law, &Profile::Constant { value: 1.0 }, &PlacementParams::default()).unwrap_err();
        assert!(matches!(err, Error::Placement { .. }), "{err}");
    }

    #[test]
    fn interval_counts() {
        let law = CountingLaw::new(constant(0.2), 1e-3, Dim::One).unwrap();
        let p = place_interval(0.0, 1.0, &law, &Profile::Constant { value: 1.0 }, &PlacementParams::default()).unwrap();
        assert_eq!(p.cloud.len(), 100);
        assert!(p.cloud.min_separation() >= 2e-3);
    }

    #[test]
    fn ball_domain_keeps_balls_inside() {
        let dom = BoundedDomain::new_ball([0.0; 3], 0.5).unwrap();
        let law = CountingLaw::new(constant(0.3), 0.02, Dim::Three).unwrap();
        let p = place_with_cells(&dom, &law, &Profile::Constant { value: 1.0 }, &PlacementParams::default()).unwrap();
        for c in &p.cloud.centers {
            assert!(dom.depth(c) >= 0.02);
        }
        let want = 0.3 * dom.volume() / law.ball_volume();
        let got = p.cloud.len() as f64;
        assert!((got / want - 1.0).abs() < 0.03, "{got} vs {want}");
        assert!(p.cloud.min_separation() >= 0.04);
    }

    #[test]
    fn symmetric_selection_keeps_centroid() {
        let slots = lattice_slots([0.0; 3], [1.0; 3], [4, 4, 3]);
        for count in [1usize, 10, 17, 30, 47, 48] {
            let kept = select_symmetric(&slots, count);
            assert_eq!(kept.len(), count);
            let mut c = [0.0; 3];
            for p in &kept {
                for d in 0..3 {
                    c[d] += p[d] / count as f64;
                }
            }
            // at most one unpaired removal: offset bounded by one pitch / count
            for d in 0..3 {
                assert!((c[d] - 0.5).abs() <= 0.5 / count as f64 + 1e-12, "{count}: {c:?}");
            }
        }
    }

    #[test]
    fn cloud_text_roundtrip() {
        let cloud = ScattererCloud::new(vec![[0.1, 0.2, 0.3], [1.0 / 3.0, 0.5, 0.7]], 0.01, vec![-2.5, 1e-17], Dim::Three).unwrap();
        let text = cloud.to_text();
        assert!(text.starts_with("# dim=3 a=0.01 M=2\n"));
        assert_eq!(ScattererCloud::from_text(&text).unwrap(), cloud);
        assert!(ScattererCloud::from_text("0 0 0 1\n").is_err());
        assert!(ScattererCloud::from_text("# dim=3 a=0.1 M=2\n0 0 0 1\n").is_err());
    }

    #[test]
    fn riemann_trivial_cases() {
        let rows = riemann_limit_check(&Profile::Constant { value: 1.0 }, constant(0.3), &BoundedDomain::unit_cube(), &[0.04, 0.02], &PlacementParams::default()).unwrap();
        for r in &rows {
            assert!((r.integral - 0.3).abs() < 1e-13);
            // M V(a) differs from int n by at most the half-unit residue
            assert!((r.sum - 0.3).abs() <= 0.5 * ball_volume(r.a, Dim::Three) + 1e-12);
        }
        let fx = crate::fields::FnField::new(|p: &Point| p[0], (0.0, 1.0));
        let rows = riemann_limit_check(fx.as_ref(), constant(0.3), &BoundedDomain::unit_cube(), &[0.04, 0.02, 0.01], &PlacementParams::default()).unwrap();
        for r in &rows {
            assert!((r.integral - 0.15).abs() < 1e-13);
            assert!(r.rel_error < 1e-2, "{r:?}");
        }
        assert!(riemann_limit_check(fx.as_ref(), constant(0.3), &BoundedDomain::unit_cube(), &[0.02, 0.04], &PlacementParams::default()).is_err());
    }
}
