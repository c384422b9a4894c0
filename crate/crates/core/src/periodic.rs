//! Periodic orbits on `T^4`: Newton solves, eigenvalue moduli of the
//! return cocycle, center classification and spectra comparison.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::cohomology::ConjugacyMap;
use crate::error::{invalid, Error, Result};
use crate::linalg::{orthonormalize, Mat4, Vec4};
use crate::maps::{reduce, torus_distance, Bump, PerturbedMap, Point4, SkewProduct, TorusMap};
use crate::torus::{periodic_points_linear, EigenQuadruple, RationalTorusPoint, DEFAULT_ENUMERATION_CAP};

pub const NEWTON_TOL: f64 = 1e-13;
/// Residual accepted when Newton stagnates at rounding level.
pub const NEWTON_ACCEPT: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
pub const CLASS_TOL: f64 = 1e-8;
pub const HYPERBOLICITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterClass {
    Expanding,
    Contracting,
    Neutral,
}

impl CenterClass {
    pub fn name(&self) -> &'static str {
        match self {
            CenterClass::Expanding => "expanding",
            CenterClass::Contracting => "contracting",
            CenterClass::Neutral => "neutral",
        }
    }
}

/// Classification by the weak pair `mu * lam` against `1 +- tol`.
pub fn classify_moduli(m: &EigenQuadruple, tol: f64) -> CenterClass {
    let p = m.mu * m.lam;
    if p > 1.0 + tol {
        CenterClass::Expanding
    } else if p < 1.0 - tol {
        CenterClass::Contracting
    } else {
        CenterClass::Neutral
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub period: usize,
    pub points: Vec<Point4>,
    /// Moduli of the eigenvalues of `DF^n` at `points[0]`, ascending.
    pub eigmoduli: EigenQuadruple,
    pub center_class: CenterClass,
    pub residual: f64,
}

pub fn classify_center(orbit: &PeriodicOrbit) -> CenterClass {
    classify_moduli(&orbit.eigmoduli, CLASS_TOL)
}

/// Orbit `z, F z, .., F^{n-1} z` and `F^n z`.
fn orbit_of<F: TorusMap + ?Sized>(f: &F, z: Point4, n: usize) -> (Vec<Point4>, Point4) {
    let mut pts = Vec::with_capacity(n);
    let mut w = z;
    for _ in 0..n {
        pts.push(w);
        w = f.step(w);
    }
    (pts, w)
}

/// `DF^n(z)` as a plain product.
fn return_differential<F: TorusMap + ?Sized>(f: &F, pts: &[Point4]) -> Mat4 {
    let mut p = Mat4::identity();
    for z in pts {
        p = f.differential(*z) * p;
    }
    p
}

/// Integer vector `m` of the lifted equation `F~^n(z) = z + m`.
pub type Itinerary = [i128; 4];

/// `L_0 s` on integer vectors.
fn linear_shift(skew: &SkewProduct, s: &Itinerary) -> Itinerary {
    let (a, b) = (skew.a.matrix(), skew.b.matrix());
    let m = |r: &[i64; 2], x: i128, y: i128| r[0] as i128 * x + r[1] as i128 * y;
    [m(&a[0], s[0], s[1]), m(&a[1], s[0], s[1]), m(&b[0], s[2], s[3]), m(&b[1], s[2], s[3])]
}

/// Reduced orbit `z, .., F^{n-1} z`, the reduced endpoint `e` and the
/// integer shift `s` with `F~^n(z) = e + s`.
fn lifted_orbit<F: TorusMap + ?Sized>(f: &F, z: Point4, n: usize) -> (Vec<Point4>, Point4, Itinerary) {
    let skew = f.skew();
    let mut pts = Vec::with_capacity(n);
    let mut w = z;
    let mut shift = [0i128; 4];
    for _ in 0..n {
        pts.push(w);
        let u = f.lift_step(w);
        let r = reduce(u);
        shift = linear_shift(skew, &shift);
        for i in 0..4 {
            shift[i] += (u[i] - r[i]).round() as i128;
        }
        w = r;
    }
    (pts, w, shift)
}

fn lifted_residual(z: &Point4, end: &Point4, shift: &Itinerary, m: &Itinerary) -> Vec4 {
    Vec4::from_fn(|i, _| (end[i] - z[i]) + (shift[i] - m[i]) as f64)
}

/// Itinerary at `to = from - k` for integer `k`, using
/// `F~^n(z + k) = F~^n(z) + L_0^n k`.
fn rebase(skew: &SkewProduct, m: &Itinerary, from: &Point4, to: &Point4, n: usize) -> Itinerary {
    let k: Itinerary = core::array::from_fn(|i| (from[i] - to[i]).round() as i128);
    if k == [0; 4] {
        return *m;
    }
    let mut p = k;
    for _ in 0..n {
        p = linear_shift(skew, &p);
    }
    core::array::from_fn(|i| m[i] - (p[i] - k[i]))
}

/// Itinerary of a linear-model periodic point, in exact arithmetic.
pub fn linear_itinerary(skew: &SkewProduct, seed: &RationalTorusPoint, n: usize) -> Result<Itinerary> {
    let overflow = Error::IntegerOverflow { context: "linear itinerary" };
    let pa = crate::torus::mat_pow(skew.a.matrix(), n as u32).ok_or(overflow.clone())?;
    let pb = crate::torus::mat_pow(skew.b.matrix(), n as u32).ok_or(overflow)?;
    let v = seed.num.map(|x| x as i128);
    let d = seed.den as i128;
    let img = |m: &[[i64; 2]; 2], x: i128, y: i128, row: usize| m[row][0] as i128 * x + m[row][1] as i128 * y;
    let full = [img(&pa, v[0], v[1], 0), img(&pa, v[0], v[1], 1), img(&pb, v[2], v[3], 0), img(&pb, v[2], v[3], 1)];
    let mut m = [0i128; 4];
    for i in 0..4 {
        let diff = full[i] - v[i];
        if diff % d != 0 {
            return Err(invalid("seed is not periodic for the linear model"));
        }
        m[i] = diff / d;
    }
    Ok(m)
}

/// Damped Newton for the lifted equation `F~^n(z) = z + m`. Returns the
/// reduced point and the closing residual in the max metric.
pub fn find_periodic_point_lifted<F: TorusMap + ?Sized>(f: &F, seed: Point4, n: usize, m: &Itinerary) -> Result<(Point4, f64)> {
    if n == 0 {
        return Err(invalid("period must be at least 1"));
    }
    let mut z = reduce(seed);
    let mut m = rebase(f.skew(), m, &seed, &z, n);
    let (mut pts, end, shift) = lifted_orbit(f, z, n);
    let mut r = lifted_residual(&z, &end, &shift, &m);
    let mut res = r.amax();
    for _ in 0..NEWTON_MAX_ITER {
        if res <= NEWTON_TOL {
            return Ok((z, res));
        }
        let j = return_differential(f, &pts) - Mat4::identity();
        let delta = match j.lu().solve(&(-r)) {
            Some(d) => d,
            None => return Err(Error::NewtonDiverged { residual: res }),
        };
        let mut t = 1.0;
        let mut accepted = false;
        // At rounding level only the full step is worth trying.
        let tries = if res <= NEWTON_ACCEPT { 1 } else { 30 };
        for _ in 0..tries {
            let raw: Point4 = core::array::from_fn(|i| z[i] + t * delta[i]);
            let trial = reduce(raw);
            // Moving across a cell boundary changes the itinerary.
            let tm = rebase(f.skew(), &m, &raw, &trial, n);
            let (tp, te, ts) = lifted_orbit(f, trial, n);
            let tr = lifted_residual(&trial, &te, &ts, &tm);
            let tres = tr.amax();
            if tres < res {
                z = trial;
                m = tm;
                pts = tp;
                r = tr;
                res = tres;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res <= NEWTON_ACCEPT {
        Ok((z, res))
    } else {
        Err(Error::NewtonDiverged { residual: res })
    }
}

/// Newton for `F^n(z) = z` from a seed that is already close to periodic:
/// the itinerary is read off the nearest lift at the seed.
pub fn find_periodic_point<F: TorusMap + ?Sized>(f: &F, seed: Point4, n: usize) -> Result<(Point4, f64)> {
    if n == 0 {
        return Err(invalid("period must be at least 1"));
    }
    let z = reduce(seed);
    let (_, end, shift) = lifted_orbit(f, z, n);
    let m: Itinerary = core::array::from_fn(|i| shift[i] + (end[i] - z[i]).round() as i128);
    find_periodic_point_lifted(f, z, n, &m)
}

/// Continues a linear-model periodic point to `F`, keeping its itinerary.
pub fn find_periodic_point_from<F: TorusMap + ?Sized>(f: &F, seed: &RationalTorusPoint, n: usize) -> Result<(Point4, f64)> {
    let m = linear_itinerary(f.skew(), seed, n)?;
    find_periodic_point_lifted(f, seed.to_f64(), n, &m)
}

pub const EIGEN_TOL: f64 = 1e-13;
pub const EIGEN_MAX_STEPS: usize = 20_000;

/// Moduli of the eigenvalues of `ds[n-1] ... ds[0]` by periodic orthogonal
/// iteration, ascending. Assumes the moduli are distinct.
pub fn cocycle_moduli(ds: &[Mat4]) -> Result<[f64; 4]> {
    if ds.is_empty() {
        return Err(invalid("empty cocycle"));
    }
    let mut q: Vec<Vec4> = (0..4).map(|i| Vec4::from_fn(|r, _| if r == i { 1.0 } else { 0.0 })).collect();
    // Generic start so no column begins inside an invariant subspace.
    let mix = Mat4::new(
        1.0, 0.31, -0.27, 0.18, //
        0.23, 1.0, 0.41, -0.35, //
        -0.19, 0.29, 1.0, 0.37, //
        0.33, -0.21, 0.26, 1.0,
    );
    for c in q.iter_mut() {
        *c = mix * *c;
    }
    orthonormalize(&mut q);
    let mut prev = [f64::NAN; 4];
    let mut settled = 0;
    let sweeps = (EIGEN_MAX_STEPS / ds.len()).max(2);
    for _ in 0..sweeps {
        let mut logs = [0.0f64; 4];
        for d in ds {
            for c in q.iter_mut() {
                *c = d * *c;
            }
            let diag = orthonormalize(&mut q);
            for k in 0..4 {
                logs[k] += diag[k].ln();
            }
        }
        let change = (0..4)
            .map(|k| (logs[k] - prev[k]).abs() / logs[k].abs().max(1.0))
            .fold(0.0, f64::max);
        prev = logs;
        if change < EIGEN_TOL {
            settled += 1;
            if settled >= 2 {
                let mut m = logs.map(f64::exp);
                m.sort_by(|a, b| a.partial_cmp(b).unwrap());
                return Ok(m);
            }
        } else {
            settled = 0;
        }
    }
    Err(Error::EigenNotConverged)
}

fn quadruple_from_moduli(m: [f64; 4]) -> Result<EigenQuadruple> {
    for v in m {
        if (v - 1.0).abs() < HYPERBOLICITY_TOL {
            return Err(Error::HyperbolicityLost { modulus: v });
        }
    }
    if !(m[1] < 1.0 && m[2] > 1.0) {
        let worst = if (m[1] - 1.0).abs() < (m[2] - 1.0).abs() { m[1] } else { m[2] };
        return Err(Error::HyperbolicityLost { modulus: worst });
    }
    Ok(EigenQuadruple { mu_hat: m[0], mu: m[1], lam: m[2], lam_hat: m[3] })
}

/// Periodic orbit through the Newton solution started at `seed`, with the
/// eigenvalue moduli of its return map.
pub fn find_periodic_orbit<F: TorusMap + ?Sized>(f: &F, seed: Point4, n: usize) -> Result<PeriodicOrbit> {
    let (z, _) = find_periodic_point(f, seed, n)?;
    orbit_through(f, z, n)
}

/// Orbit record for the continuation of a linear-model periodic point.
pub fn find_periodic_orbit_from<F: TorusMap + ?Sized>(f: &F, seed: &RationalTorusPoint, n: usize) -> Result<PeriodicOrbit> {
    let (z, _) = find_periodic_point_from(f, seed, n)?;
    orbit_through(f, z, n)
}

/// Builds the orbit record through a point already known to be periodic.
pub fn orbit_through<F: TorusMap + ?Sized>(f: &F, z: Point4, n: usize) -> Result<PeriodicOrbit> {
    let (points, _) = orbit_of(f, z, n);
    let residual = (0..n)
        .map(|i| torus_distance(&f.step(points[i]), &points[(i + 1) % n]))
        .fold(0.0, f64::max);
    let ds: Vec<Mat4> = points.iter().map(|p| f.differential(*p)).collect();
    let eigmoduli = quadruple_from_moduli(cocycle_moduli(&ds)?)?;
    let center_class = classify_moduli(&eigmoduli, CLASS_TOL);
    Ok(PeriodicOrbit { period: n, points, eigmoduli, center_class, residual })
}

/// Eigenvalue moduli of `(A^n, B^n)` in ascending order.
pub fn linear_moduli(skew: &SkewProduct, n: usize) -> EigenQuadruple {
    let r = skew.linear_rates();
    let n = n as i32;
    EigenQuadruple { mu_hat: r[0].powi(n), mu: r[1].powi(n), lam: r[2].powi(n), lam_hat: r[3].powi(n) }
}

/// Linear-model periodic points of period dividing `n`, as seeds.
pub fn linear_seeds(skew: &SkewProduct, n: usize) -> Result<Vec<RationalTorusPoint>> {
    periodic_points_linear(&skew.a, &skew.b, n as u32, DEFAULT_ENUMERATION_CAP)
}

/// Number of pairwise distinct points (torus max metric, tolerance `tol`).
/// Points are split into chains of nearby values one coordinate at a time,
/// so only points that agree to within a chain in every coordinate get
/// compared pairwise.
pub fn count_distinct(points: &[Point4], tol: f64) -> usize {
    let pts: Vec<Point4> = points.iter().map(|p| reduce(*p)).collect();
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    distinct_in(&pts, &mut idx, 0, tol)
}

fn distinct_in(pts: &[Point4], idx: &mut [usize], coord: usize, tol: f64) -> usize {
    if idx.len() <= 1 {
        return idx.len();
    }
    if coord == 4 {
        // Greedy representatives.
        let mut reps: Vec<usize> = Vec::new();
        for &i in idx.iter() {
            if !reps.iter().any(|&r| torus_distance(&pts[r], &pts[i]) <= tol) {
                reps.push(i);
            }
        }
        return reps.len();
    }
    idx.sort_by(|&a, &b| pts[a][coord].partial_cmp(&pts[b][coord]).unwrap());
    let n = idx.len();
    let mut cuts: Vec<usize> = Vec::new();
    for k in 1..n {
        if pts[idx[k]][coord] - pts[idx[k - 1]][coord] > tol {
            cuts.push(k);
        }
    }
    let wraps = pts[idx[0]][coord] + 1.0 - pts[idx[n - 1]][coord] <= tol;
    if cuts.is_empty() {
        return distinct_in(pts, idx, coord + 1, tol);
    }
    if wraps {
        // The last chain continues the first one across 0 = 1.
        idx.rotate_left(*cuts.last().unwrap());
        let shift = n - cuts.pop().unwrap();
        for c in cuts.iter_mut() {
            *c += shift;
        }
    }
    let mut total = 0;
    let mut lo = 0;
    for &c in cuts.iter().chain(core::iter::once(&n)) {
        total += distinct_in(pts, &mut idx[lo..c], coord + 1, tol);
        lo = c;
    }
    total
}

#[derive(Debug, Clone, Copy)]
pub enum Matcher<'a> {
    /// `G = h o F o h^-1`; F-orbits are carried to G by `h`.
    Conjugacy(&'a ConjugacyMap),
    /// Follow each F-orbit along the straight-line homotopy to `G`.
    Continuation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectraPair {
    pub orbit_f: PeriodicOrbit,
    pub orbit_g: PeriodicOrbit,
    pub max_relative_eig_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectraComparison {
    pub pairs: Vec<SpectraPair>,
    pub max_gap: f64,
    pub periods_checked: usize,
}

pub fn relative_gap(a: &EigenQuadruple, b: &EigenQuadruple) -> f64 {
    let x = a.as_array();
    let y = b.as_array();
    (0..4).map(|i| ((x[i] - y[i]) / x[i]).abs()).fold(0.0, f64::max)
}

/// `(1 - t) F + t G`: interpolated `phi`, bumps of `F` scaled by `1 - t`
/// and bumps of `G` scaled by `t`.
pub fn homotopy(f: &PerturbedMap, g: &PerturbedMap, t: f64) -> Result<PerturbedMap> {
    if f.base.a != g.base.a || f.base.b != g.base.b {
        return Err(invalid("homotopy needs a common linear part"));
    }
    let phi = f.base.phi.linear_combination(1.0 - t, &g.base.phi, t);
    let base = SkewProduct::new(f.base.a.clone(), f.base.b.clone(), phi);
    let frame = base.frame();
    let mut bumps: Vec<Bump> = Vec::with_capacity(f.bumps.len() + g.bumps.len());
    for b in &f.bumps {
        if t < 1.0 {
            bumps.push(b.scaled(1.0 - t, &frame)?);
        }
    }
    for b in &g.bumps {
        if t > 0.0 {
            bumps.push(b.scaled(t, &frame)?);
        }
    }
    Ok(PerturbedMap::new(base, bumps))
}

pub const MIN_CONTINUATION_STEP: f64 = 1.0 / 4096.0;

/// Continues the periodic point `z` of `F` to `G` with adaptive step
/// halving along the straight-line homotopy.
pub fn continue_point(f: &PerturbedMap, g: &PerturbedMap, z: Point4, n: usize) -> Result<Point4> {
    let mut t = 0.0;
    let mut h = 0.25;
    let mut z = z;
    while t < 1.0 {
        let t1 = (t + h).min(1.0);
        let m = homotopy(f, g, t1)?;
        match find_periodic_point(&m, z, n) {
            Ok((w, _)) if torus_distance(&w, &z) < 0.1 => {
                z = w;
                t = t1;
                h = (h * 2.0).min(0.25);
            }
            _ => {
                h *= 0.5;
                if h < MIN_CONTINUATION_STEP {
                    return Err(Error::MatchFailed { period: n });
                }
            }
        }
    }
    Ok(z)
}

/// Matches every F-orbit of period `<= max_period` (seeded from the linear
/// model) with a G-orbit and compares eigenvalue moduli.
pub fn compare_spectra(f: &PerturbedMap, g: &PerturbedMap, matcher: Matcher<'_>, max_period: usize) -> Result<SpectraComparison> {
    if f.base.a != g.base.a || f.base.b != g.base.b {
        return Err(invalid("maps must share the linear part"));
    }
    if let Matcher::Conjugacy(_) = matcher {
        if !f.bumps.is_empty() || !g.bumps.is_empty() {
            return Err(invalid("conjugacy matching needs two unperturbed skew products"));
        }
    }
    let mut pairs = Vec::new();
    let mut max_gap = 0.0f64;
    for n in 1..=max_period {
        let seeds = linear_seeds(&f.base, n)?;
        for s in &seeds {
            let of = find_periodic_orbit_from(f, s, n)?;
            let gz = match matcher {
                Matcher::Conjugacy(h) => {
                    let w = h.apply(of.points[0]);
                    find_periodic_point(g, w, n).map_err(|_| Error::MatchFailed { period: n })?.0
                }
                Matcher::Continuation => continue_point(f, g, of.points[0], n)?,
            };
            let og = orbit_through(g, gz, n)?;
            let gap = relative_gap(&of.eigmoduli, &og.eigmoduli);
            max_gap = max_gap.max(gap);
            pairs.push(SpectraPair { orbit_f: of, orbit_g: og, max_relative_eig_gap: gap });
        }
    }
    Ok(SpectraComparison { pairs, max_gap, periods_checked: max_period })
}
