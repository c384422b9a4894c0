//! Skew products `L_phi(x, y) = (A x, B y + phi(x))` on `T^4`, localized
//! bump perturbations of them, and the pointwise dominated splitting.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fourier::TrigMap;
use crate::linalg::{line_angle, orthonormalize, Mat4, Vec4};
use crate::torus::{EigenQuadruple, ToralAutomorphism};

pub type Point4 = [f64; 4];

#[inline]
pub fn wrap01(t: f64) -> f64 {
    let r = t - t.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of `t mod 1` in `[-1/2, 1/2)`.
#[inline]
pub fn wrap_centered(t: f64) -> f64 {
    t - (t + 0.5).floor()
}

pub fn reduce(z: Point4) -> Point4 {
    z.map(wrap01)
}

/// Max-metric distance on `T^4`, minimized over deck translations.
pub fn torus_distance(a: &Point4, b: &Point4) -> f64 {
    (0..4).map(|i| wrap_centered(a[i] - b[i]).abs()).fold(0.0, f64::max)
}

/// Componentwise `a - b` lifted to `[-1/2, 1/2)^4`.
pub fn torus_difference(a: &Point4, b: &Point4) -> Vec4 {
    Vec4::from_fn(|i, _| wrap_centered(a[i] - b[i]))
}

/// Columns `(e_s(A), 0)`, `(0, e_s(B))`, `(0, e_u(B))`, `(e_u(A), 0)`: the
/// eigenframe of the linear map in strong-stable, weak-stable,
/// weak-unstable, strong-unstable order.
pub fn linear_frame(a: &ToralAutomorphism, b: &ToralAutomorphism) -> Mat4 {
    let (sa, ua, sb, ub) = (a.e_s(), a.e_u(), b.e_s(), b.e_u());
    Mat4::new(
        sa[0], 0.0, 0.0, ua[0], //
        sa[1], 0.0, 0.0, ua[1], //
        0.0, sb[0], ub[0], 0.0, //
        0.0, sb[1], ub[1], 0.0,
    )
}

pub trait TorusMap {
    fn skew(&self) -> &SkewProduct;
    /// `F(z)` reduced mod 1.
    fn step(&self, z: Point4) -> Point4;
    /// The continuous lift of `F` at `z`, not reduced. Satisfies
    /// `lift_step(z + k) = lift_step(z) + L_0 k` for integer `k`.
    fn lift_step(&self, z: Point4) -> Point4;
    fn step_inverse(&self, z: Point4) -> Result<Point4>;
    fn differential(&self, z: Point4) -> Mat4;
    fn jacobian(&self, z: Point4) -> f64 {
        self.differential(z).determinant()
    }
    fn c1_norm_bound(&self) -> f64 {
        0.0
    }
}

/// `F^n(z)`; negative `n` iterates the inverse.
pub fn apply<F: TorusMap + ?Sized>(f: &F, z: Point4, n: i64) -> Result<Point4> {
    let mut w = reduce(z);
    if n >= 0 {
        for _ in 0..n {
            w = f.step(w);
        }
    } else {
        for _ in 0..n.unsigned_abs() {
            w = f.step_inverse(w)?;
        }
    }
    Ok(w)
}

/// Differential together with its determinant.
pub fn differential<F: TorusMap + ?Sized>(f: &F, z: Point4) -> (Mat4, f64) {
    let d = f.differential(z);
    let det = d.determinant();
    (d, det)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewProduct {
    pub a: ToralAutomorphism,
    pub b: ToralAutomorphism,
    pub phi: TrigMap,
}

impl SkewProduct {
    pub fn new(a: ToralAutomorphism, b: ToralAutomorphism, phi: TrigMap) -> Self {
        Self { a, b, phi }
    }

    pub fn linear(a: ToralAutomorphism, b: ToralAutomorphism) -> Self {
        Self::new(a, b, TrigMap::new())
    }

    pub fn frame(&self) -> Mat4 {
        linear_frame(&self.a, &self.b)
    }

    /// Eigenvalues of the linear part, `(lam_A, mu_B, 1/mu_B, 1/lam_A)`.
    pub fn linear_rates(&self) -> [f64; 4] {
        [self.a.small_eig(), self.b.small_eig(), self.b.large_eig(), self.a.large_eig()]
    }

    /// `L_phi` on an unreduced lift.
    #[inline]
    pub fn lift(&self, z: Point4) -> Point4 {
        let x = self.a.apply([z[0], z[1]]);
        let y = self.b.apply([z[2], z[3]]);
        let p = self.phi.eval([z[0], z[1]]);
        [x[0], x[1], y[0] + p[0], y[1] + p[1]]
    }
}

impl TorusMap for SkewProduct {
    fn skew(&self) -> &SkewProduct {
        self
    }

    fn step(&self, z: Point4) -> Point4 {
        reduce(self.lift(z))
    }

    fn lift_step(&self, z: Point4) -> Point4 {
        self.lift(z)
    }

    fn step_inverse(&self, z: Point4) -> Result<Point4> {
        let x = self.a.apply_inverse([z[0], z[1]]);
        let p = self.phi.eval(x);
        let y = self.b.apply_inverse([z[2] - p[0], z[3] - p[1]]);
        Ok(reduce([x[0], x[1], y[0], y[1]]))
    }

    fn differential(&self, z: Point4) -> Mat4 {
        let am = self.a.matrix();
        let bm = self.b.matrix();
        let g = self.phi.gradient([z[0], z[1]]);
        let mut d = Mat4::zeros();
        for i in 0..2 {
            for j in 0..2 {
                d[(i, j)] = am[i][j] as f64;
                d[(i + 2, j + 2)] = bm[i][j] as f64;
                d[(i + 2, j)] = g[i][j];
            }
        }
        d
    }

    fn jacobian(&self, _z: Point4) -> f64 {
        1.0
    }
}

/// Quintic smoothstep profile: 1 at 0, vanishing to second order at 1.
#[inline]
pub fn bump_profile(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// `rho'(s) / s`, finite at `s = 0`.
#[inline]
fn bump_profile_dlog(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        -30.0 * s * (1.0 - s) * (1.0 - s)
    }
}

/// `max_s rho(s) + s |rho'(s)|` and `max_s s rho(s)` over `[0, 1]`.
fn profile_constants() -> (f64, f64) {
    let mut k1 = 0.0f64;
    let mut k0 = 0.0f64;
    for i in 0..=4096 {
        let s = i as f64 / 4096.0;
        k1 = k1.max(bump_profile(s) + s * s * bump_profile_dlog(s).abs());
        k0 = k0.max(s * bump_profile(s));
    }
    // Grid maxima, padded for the spacing.
    (k1 * (1.0 + 1e-3), k0 * (1.0 + 1e-3))
}

/// Displacement `d(z) = rho(|delta| / r) M delta` with `delta` the nearest
/// lift of `z - center` and `M = Fr diag(coeffs) Fr^-1` in the linear
/// eigenframe `Fr` (strong-stable, weak-stable, weak-unstable,
/// strong-unstable).
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: Point4,
    pub radius: f64,
    pub coeffs: [f64; 4],
    stretch: Mat4,
    sup_displacement: f64,
    sup_derivative: f64,
}

impl Bump {
    pub fn new(center: Point4, radius: f64, coeffs: [f64; 4], frame: &Mat4) -> Result<Self> {
        if !(radius > 0.0 && radius < 0.5) {
            return Err(invalid(alloc::format!("bump radius {radius} outside (0, 1/2)")));
        }
        if center.iter().chain(coeffs.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("bump center and coefficients must be finite"));
        }
        let inv = frame.try_inverse().ok_or_else(|| invalid("singular eigenframe"))?;
        let stretch = frame * Mat4::from_diagonal(&Vec4::from(coeffs)) * inv;
        let norm = crate::linalg::spectral_norm(&stretch);
        let (k1, k0) = profile_constants();
        let sup_derivative = norm * k1;
        let sup_displacement = norm * radius * k0;
        if sup_derivative >= 0.5 {
            return Err(invalid(alloc::format!(
                "bump derivative bound {sup_derivative} must stay below 1/2"
            )));
        }
        Ok(Self { center: reduce(center), radius, coeffs, stretch, sup_displacement, sup_derivative })
    }

    pub fn sup_displacement(&self) -> f64 {
        self.sup_displacement
    }

    pub fn sup_derivative(&self) -> f64 {
        self.sup_derivative
    }

    pub fn scaled(&self, t: f64, frame: &Mat4) -> Result<Self> {
        Self::new(self.center, self.radius, self.coeffs.map(|c| c * t), frame)
    }

    #[inline]
    fn offset(&self, z: &Point4) -> (Vec4, f64) {
        let d = torus_difference(z, &self.center);
        let s = d.norm() / self.radius;
        (d, s)
    }

    pub fn contains(&self, z: &Point4) -> bool {
        self.offset(z).1 < 1.0
    }

    pub fn displacement(&self, z: &Point4) -> Vec4 {
        let (d, s) = self.offset(z);
        if s >= 1.0 {
            return Vec4::zeros();
        }
        self.stretch * d * bump_profile(s)
    }

    pub fn derivative(&self, z: &Point4) -> Mat4 {
        let (d, s) = self.offset(z);
        if s >= 1.0 {
            return Mat4::zeros();
        }
        let r2 = self.radius * self.radius;
        let inner = Mat4::identity() * bump_profile(s) + d * d.transpose() * (bump_profile_dlog(s) / r2);
        self.stretch * inner
    }
}

/// `F = L_phi o (id + sum_i d_i)` for bumps `d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedMap {
    pub base: SkewProduct,
    pub bumps: Vec<Bump>,
    c1_norm_bound: f64,
}

pub const INVERSE_NEWTON_TOL: f64 = 1e-13;

impl PerturbedMap {
    pub fn new(base: SkewProduct, bumps: Vec<Bump>) -> Self {
        let c1_norm_bound = bumps.iter().map(|b| b.sup_displacement + b.sup_derivative).sum();
        Self { base, bumps, c1_norm_bound }
    }

    /// Builds the bumps from `(center, radius, coeffs)` in the base's frame.
    pub fn from_specs(base: SkewProduct, specs: &[(Point4, f64, [f64; 4])]) -> Result<Self> {
        let frame = base.frame();
        let bumps = specs
            .iter()
            .map(|(c, r, k)| Bump::new(*c, *r, *k, &frame))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(base, bumps))
    }

    pub fn unperturbed(base: SkewProduct) -> Self {
        Self::new(base, Vec::new())
    }

    fn inside_any(&self, z: &Point4) -> bool {
        self.bumps.iter().any(|b| b.contains(z))
    }

    /// `z + sum_i d_i(z)` on a lift.
    fn push(&self, z: &Point4) -> Point4 {
        let mut w = *z;
        for b in &self.bumps {
            let d = b.displacement(z);
            for i in 0..4 {
                w[i] += d[i];
            }
        }
        w
    }

    fn push_derivative(&self, z: &Point4) -> Mat4 {
        let mut m = Mat4::identity();
        for b in &self.bumps {
            m += b.derivative(z);
        }
        m
    }

    /// Solves `u + sum_i d_i(u) = w` by Newton.
    fn pull(&self, w: Point4) -> Result<Point4> {
        if !self.inside_any(&w) && self.bumps.iter().all(|b| torus_distance(&w, &b.center) >= b.radius + b.sup_displacement) {
            return Ok(w);
        }
        let mut u = w;
        let mut res = f64::INFINITY;
        for _ in 0..60 {
            let pu = self.push(&u);
            let r = torus_difference(&pu, &w);
            res = r.amax();
            if res <= INVERSE_NEWTON_TOL {
                return Ok(reduce(u));
            }
            let j = self.push_derivative(&u);
            let step = j.lu().solve(&r).ok_or(Error::InverseNewtonDiverged { residual: res })?;
            for i in 0..4 {
                u[i] -= step[i];
            }
        }
        let r = torus_difference(&self.push(&u), &w).amax();
        if r <= 4.0 * INVERSE_NEWTON_TOL {
            return Ok(reduce(u));
        }
        Err(Error::InverseNewtonDiverged { residual: res.min(r) })
    }
}

impl TorusMap for PerturbedMap {
    fn skew(&self) -> &SkewProduct {
        &self.base
    }

    fn step(&self, z: Point4) -> Point4 {
        if self.bumps.is_empty() {
            return self.base.step(z);
        }
        self.base.step(self.push(&z))
    }

    fn lift_step(&self, z: Point4) -> Point4 {
        if self.bumps.is_empty() {
            return self.base.lift(z);
        }
        self.base.lift(self.push(&z))
    }

    fn step_inverse(&self, z: Point4) -> Result<Point4> {
        let w = self.base.step_inverse(z)?;
        if self.bumps.is_empty() {
            return Ok(w);
        }
        self.pull(w)
    }

    fn differential(&self, z: Point4) -> Mat4 {
        if !self.inside_any(&z) {
            return self.base.differential(z);
        }
        let w = self.push(&z);
        self.base.differential(w) * self.push_derivative(&z)
    }

    fn jacobian(&self, z: Point4) -> f64 {
        if !self.inside_any(&z) {
            return 1.0;
        }
        self.push_derivative(&z).determinant()
    }

    fn c1_norm_bound(&self) -> f64 {
        self.c1_norm_bound
    }
}

/// Threshold on `c1_norm_bound` below which cone fields are assumed to
/// persist.
pub const DEFAULT_C1_THRESHOLD: f64 = 0.05;
pub const DEFAULT_SPLITTING_DEPTH: usize = 60;
pub const COLLAPSE_ANGLE: f64 = 1e-6;
pub const MIN_FRAME_ANGLE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingOptions {
    pub depth: usize,
    pub c1_threshold: f64,
    /// Double the depth until rates change by less than this (relative);
    /// `None` runs the given depth once.
    pub adaptive_tol: Option<f64>,
    pub max_depth: usize,
}

impl Default for SplittingOptions {
    fn default() -> Self {
        Self { depth: DEFAULT_SPLITTING_DEPTH, c1_threshold: DEFAULT_C1_THRESHOLD, adaptive_tol: None, max_depth: 960 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplittingFrame {
    pub point: Point4,
    pub e_ss: Vec4,
    pub e_ws: Vec4,
    pub e_wu: Vec4,
    pub e_uu: Vec4,
    /// Growth rates along the four legs. Not validated as a quadruple.
    pub rates: EigenQuadruple,
    pub depth: usize,
}

impl SplittingFrame {
    pub fn legs(&self) -> [Vec4; 4] {
        [self.e_ss, self.e_ws, self.e_wu, self.e_uu]
    }

    pub fn min_pairwise_angle(&self) -> f64 {
        let l = self.legs();
        let mut m = f64::INFINITY;
        for i in 0..4 {
            for j in i + 1..4 {
                m = m.min(line_angle(&l[i], &l[j]));
            }
        }
        m
    }
}

// Fixed generic starting vectors, off every invariant direction of the
// linear examples.
const SEEDS: [[f64; 4]; 3] = [
    [0.4717, -0.3183, 0.6931, 0.2718],
    [-0.2236, 0.5772, 0.1414, -0.7071],
    [0.3333, 0.1732, -0.4142, 0.6180],
];

fn seed(i: usize) -> Vec4 {
    Vec4::from(SEEDS[i])
}

/// Pushes a `k`-plane through the differentials `ds` in order, returning an
/// orthonormal basis at the end.
fn iterate_plane(ds: &[Mat4], k: usize) -> Vec<Vec4> {
    let mut cols: Vec<Vec4> = (0..k).map(seed).collect();
    orthonormalize(&mut cols);
    for d in ds {
        for c in cols.iter_mut() {
            *c = d * *c;
        }
        orthonormalize(&mut cols);
    }
    cols
}

/// The line in `span(plane)` lying in the hyperplane spanned by `hyper`.
fn intersect(plane: &[Vec4], hyper: &[Vec4]) -> Result<Vec4> {
    let h = [hyper[0], hyper[1], hyper[2]];
    let n = crate::linalg::hyperplane_normal(&h);
    let (a, b) = (n.dot(&plane[0]), n.dot(&plane[1]));
    let conditioning = a.hypot(b);
    if conditioning < COLLAPSE_ANGLE {
        return Err(Error::SplittingCollapse { angle: conditioning });
    }
    let v = plane[0] * b - plane[1] * a;
    Ok(v.normalize())
}

fn orient(v: Vec4, reference: Vec4) -> Vec4 {
    if v.dot(&reference) < 0.0 {
        -v
    } else {
        v
    }
}

/// Mean log growth of coordinate `leg` (in the linear frame) of `v`
/// pushed through `ds`.
fn frame_rate(ds: &[Mat4], v: Vec4, frame_inv: &Mat4, leg: usize) -> f64 {
    let mut v = v;
    let mut total = 0.0;
    for d in ds {
        let c0 = (frame_inv * v)[leg];
        let w = d * v;
        let c1 = (frame_inv * w)[leg];
        total += (c1 / c0).abs().ln();
        v = w / w.norm();
    }
    (total / ds.len() as f64).exp()
}

fn splitting_at_depth<F: TorusMap + ?Sized>(f: &F, z: Point4, depth: usize) -> Result<SplittingFrame> {
    let z = reduce(z);
    let frame = f.skew().frame();
    let frame_inv = frame.try_inverse().ok_or_else(|| invalid("singular eigenframe"))?;
    // Backward orbit z_{-depth} .. z_{-1} and forward orbit z_0 .. z_{depth-1}.
    let mut back = Vec::with_capacity(depth);
    let mut w = z;
    for _ in 0..depth {
        w = f.step_inverse(w)?;
        back.push(w);
    }
    let mut fwd = Vec::with_capacity(depth);
    let mut w = z;
    for _ in 0..depth {
        fwd.push(w);
        w = f.step(w);
    }
    // Forward differentials arriving at z, oldest first.
    let into_z: Vec<Mat4> = back.iter().rev().map(|p| f.differential(*p)).collect();
    let fwd_d: Vec<Mat4> = fwd.iter().map(|p| f.differential(*p)).collect();
    // Inverse differentials walking back from z_depth to z.
    let mut back_to_z = Vec::with_capacity(depth);
    for d in fwd_d.iter().rev() {
        back_to_z.push(d.try_inverse().ok_or(Error::SplittingCollapse { angle: 0.0 })?);
    }
    let e_uu = iterate_plane(&into_z, 1)[0];
    let unstable = iterate_plane(&into_z, 2);
    let cu3 = iterate_plane(&into_z, 3);
    let e_ss = iterate_plane(&back_to_z, 1)[0];
    let stable = iterate_plane(&back_to_z, 2);
    let cs3 = iterate_plane(&back_to_z, 3);
    let e_wu = intersect(&unstable, &cs3)?;
    let e_ws = intersect(&stable, &cu3)?;
    let col = |i: usize| Vec4::from_fn(|r, _| frame[(r, i)]);
    let e_ss = orient(e_ss, col(0));
    let e_ws = orient(e_ws, col(1));
    let e_wu = orient(e_wu, col(2));
    let e_uu = orient(e_uu, col(3));
    // Backward differentials along z_{-1}, z_{-2}, ... for the stable legs.
    let mut back_d = Vec::with_capacity(depth);
    for p in &back {
        back_d.push(f.differential(*p).try_inverse().ok_or(Error::SplittingCollapse { angle: 0.0 })?);
    }
    let rates = EigenQuadruple {
        mu_hat: 1.0 / frame_rate(&back_d, e_ss, &frame_inv, 0),
        mu: 1.0 / frame_rate(&back_d, e_ws, &frame_inv, 1),
        lam: frame_rate(&fwd_d, e_wu, &frame_inv, 2),
        lam_hat: frame_rate(&fwd_d, e_uu, &frame_inv, 3),
    };
    let out = SplittingFrame { point: z, e_ss, e_ws, e_wu, e_uu, rates, depth };
    let m = out.min_pairwise_angle();
    if m < MIN_FRAME_ANGLE {
        return Err(Error::SplittingCollapse { angle: m });
    }
    Ok(out)
}

/// The four invariant directions at `z` by subspace iteration.
pub fn compute_splitting<F: TorusMap + ?Sized>(f: &F, z: Point4, opts: &SplittingOptions) -> Result<SplittingFrame> {
    if f.c1_norm_bound() > opts.c1_threshold {
        return Err(invalid(alloc::format!(
            "C1 bound {} exceeds the splitting threshold {}",
            f.c1_norm_bound(),
            opts.c1_threshold
        )));
    }
    if opts.depth == 0 {
        return Err(invalid("splitting depth must be positive"));
    }
    let mut frame = splitting_at_depth(f, z, opts.depth)?;
    let Some(tol) = opts.adaptive_tol else {
        return Ok(frame);
    };
    let mut depth = opts.depth;
    while depth * 2 <= opts.max_depth {
        depth *= 2;
        let next = splitting_at_depth(f, z, depth)?;
        let a = frame.rates.as_array();
        let b = next.rates.as_array();
        let change = (0..4).map(|i| ((a[i] - b[i]) / b[i]).abs()).fold(0.0, f64::max);
        frame = next;
        if change < tol {
            break;
        }
    }
    Ok(frame)
}

/// `max_* angle(DF(z) e_*(z), e_*(F(z)))`.
pub fn invariance_defect<F: TorusMap + ?Sized>(f: &F, at: &SplittingFrame, next: &SplittingFrame) -> f64 {
    let d = f.differential(at.point);
    at.legs()
        .iter()
        .zip(next.legs().iter())
        .map(|(v, w)| line_angle(&(d * v), w))
        .fold(0.0, f64::max)
}
