//! The twisted cohomological equation `psi o A - B psi = g` on `T^2`, the
//! conjugacy shear it produces, and two regularity estimators for `psi`.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fit::fit_line;
use crate::fourier::{checked_pushforward, is_half_plane, Coef, TrigMap};
use crate::torus::ToralAutomorphism;

pub const DEFAULT_TRUNC_EPS: f64 = 1e-13;
pub const DEFAULT_ORBIT_CAP: usize = 400;
pub const DEFAULT_RESIDUAL_GRID: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub trunc_eps: f64,
    /// Longest frequency orbit followed before giving up.
    pub orbit_cap: usize,
    /// Side of the square grid used to measure the residual.
    pub residual_grid: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            trunc_eps: DEFAULT_TRUNC_EPS,
            orbit_cap: DEFAULT_ORBIT_CAP,
            residual_grid: DEFAULT_RESIDUAL_GRID,
        }
    }
}

impl SolveOptions {
    pub fn with_trunc_eps(trunc_eps: f64) -> Self {
        Self { trunc_eps, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohomologySolution {
    pub psi: TrigMap,
    pub residual_sup: f64,
    pub truncation_eps: f64,
    pub predicted_alpha: f64,
    /// Longest orbit segment used for any term of `g`.
    pub orbit_steps: usize,
}

/// Coordinates of `v` in the basis `(e_s, e_u)`.
fn split(b: &ToralAutomorphism, v: Coef) -> (Complex64, Complex64) {
    let (es, eu) = (b.e_s(), b.e_u());
    let det = es[0] * eu[1] - eu[0] * es[1];
    let s = (v[0] * eu[1] - v[1] * eu[0]) / det;
    let u = (v[1] * es[0] - v[0] * es[1]) / det;
    (s, u)
}

fn along(e: [f64; 2], a: Complex64) -> Coef {
    [a * e[0], a * e[1]]
}

/// `log mu_B / log lam_A`.
pub fn predicted_alpha(a: &ToralAutomorphism, b: &ToralAutomorphism) -> f64 {
    b.small_eig().ln() / a.small_eig().ln()
}

/// Solves `psi o A - B psi = g`.
///
/// The `e_u(B)` component uses `psi_u = -sum_{n>=0} mu^{n+1} g_u o A^n` and
/// the `e_s(B)` component `psi_s = sum_{n>=1} mu^{n-1} g_s o A^{-n}`, both
/// realized by moving coefficients along `A^T`-orbits and stopping once the
/// term falls below `trunc_eps`.
pub fn solve_cohomology(
    a: &ToralAutomorphism,
    b: &ToralAutomorphism,
    g: &TrigMap,
    opts: &SolveOptions,
) -> Result<CohomologySolution> {
    let lam = a.small_eig();
    let mu = b.small_eig();
    if !(lam < mu) {
        return Err(invalid(alloc::format!(
            "base must contract more strongly than the fiber (lam_A = {lam}, mu_B = {mu})"
        )));
    }
    if !(opts.trunc_eps >= 0.0) {
        return Err(invalid("truncation epsilon must be nonnegative"));
    }
    let (es, eu) = (b.e_s(), b.e_u());
    let mut psi = TrigMap::new();
    let mut orbit_steps = 0;
    for (k, c) in g.terms() {
        let (cs, cu) = split(b, *c);
        if *k == [0, 0] {
            let denom = 1.0 - mu;
            if denom.abs() < f64::EPSILON {
                return Err(Error::MeanObstruction);
            }
            psi.add_pair([0, 0], along(eu, cu * (-mu / denom)));
            psi.add_pair([0, 0], along(es, cs / denom));
            continue;
        }
        if !is_half_plane(*k) {
            continue;
        }
        // Unstable component, forward along the orbit.
        let mut w = mu;
        let mut n = 0usize;
        while w * cu.norm() >= opts.trunc_eps {
            if n >= opts.orbit_cap {
                return Err(Error::NoConvergence { cap: opts.orbit_cap });
            }
            let kk = checked_pushforward(a, *k, n as i32).ok_or(Error::IntegerOverflow { context: "frequency orbit" })?;
            psi.add_pair(kk, along(eu, cu * -w));
            w *= mu;
            n += 1;
        }
        orbit_steps = orbit_steps.max(n);
        // Stable component, backward along the orbit.
        let mut w = 1.0;
        let mut n = 1usize;
        while w * cs.norm() >= opts.trunc_eps {
            if n > opts.orbit_cap {
                return Err(Error::NoConvergence { cap: opts.orbit_cap });
            }
            let kk = checked_pushforward(a, *k, -(n as i32)).ok_or(Error::IntegerOverflow { context: "frequency orbit" })?;
            psi.add_pair(kk, along(es, cs * w));
            w *= mu;
            n += 1;
        }
        orbit_steps = orbit_steps.max(n - 1);
    }
    psi.set_truncation_eps(opts.trunc_eps);
    let residual_sup = functional_residual(&psi, g, a, b, opts.residual_grid);
    Ok(CohomologySolution {
        psi,
        residual_sup,
        truncation_eps: opts.trunc_eps,
        predicted_alpha: predicted_alpha(a, b),
        orbit_steps,
    })
}

/// `sup |psi(A x) - B psi(x) - g(x)|` (max norm) over the grid `i / n`.
pub fn functional_residual(psi: &TrigMap, g: &TrigMap, a: &ToralAutomorphism, b: &ToralAutomorphism, n: usize) -> f64 {
    let bm = b.matrix();
    let mut sup = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let x = [i as f64 / n as f64, j as f64 / n as f64];
            let pa = psi.eval(a.apply(x));
            let p = psi.eval(x);
            let gx = g.eval(x);
            for r in 0..2 {
                let bp = bm[r][0] as f64 * p[0] + bm[r][1] as f64 * p[1];
                sup = sup.max((pa[r] - bp - gx[r]).abs());
            }
        }
    }
    sup
}

/// The shear `h(x, y) = (x, y + psi(x))` on `T^4`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugacyMap {
    pub psi: TrigMap,
    /// Sup-norm residual of `h o L_phi0 - L_phi1 o h` on the check grid.
    pub residual_sup: f64,
}

fn wrap(t: f64) -> f64 {
    t - t.floor()
}

impl ConjugacyMap {
    pub fn identity() -> Self {
        Self { psi: TrigMap::new(), residual_sup: 0.0 }
    }

    pub fn apply(&self, z: [f64; 4]) -> [f64; 4] {
        let p = self.psi.eval([z[0], z[1]]);
        [z[0], z[1], wrap(z[2] + p[0]), wrap(z[3] + p[1])]
    }

    pub fn apply_inverse(&self, z: [f64; 4]) -> [f64; 4] {
        let p = self.psi.eval([z[0], z[1]]);
        [z[0], z[1], wrap(z[2] - p[0]), wrap(z[3] - p[1])]
    }

    /// `self o first`.
    pub fn compose(&self, first: &ConjugacyMap) -> ConjugacyMap {
        ConjugacyMap {
            psi: &self.psi + &first.psi,
            residual_sup: self.residual_sup + first.residual_sup,
        }
    }
}

/// The conjugacy `h` with `h o L_phi0 = L_phi1 o h`.
pub fn build_conjugacy(
    phi0: &TrigMap,
    phi1: &TrigMap,
    a: &ToralAutomorphism,
    b: &ToralAutomorphism,
    opts: &SolveOptions,
) -> Result<ConjugacyMap> {
    let g = phi1 - phi0;
    let sol = solve_cohomology(a, b, &g, opts)?;
    Ok(ConjugacyMap { psi: sol.psi, residual_sup: sol.residual_sup })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HolderMethod {
    Increments,
    FourierDecay,
}

impl HolderMethod {
    pub fn name(&self) -> &'static str {
        match self {
            HolderMethod::Increments => "increments",
            HolderMethod::FourierDecay => "fourier_decay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderOptions {
    /// Dyadic exponents `j` with `h = 2^-j`, inclusive.
    pub scales: (u32, u32),
    pub samples: usize,
}

impl Default for HolderOptions {
    fn default() -> Self {
        Self { scales: (3, 22), samples: 1 << 12 }
    }
}

/// Estimates above this are indistinguishable from Lipschitz for a
/// first-difference estimator.
pub const SATURATION_ALPHA: f64 = 0.95;
pub const TRUSTED_R2: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderSample {
    /// Increment `h` or frequency norm `|k|`.
    pub scale: f64,
    /// Increment sup `M(h)` or coefficient norm `|c_k|`.
    pub value: f64,
    /// Residual of the log-log fit at this sample.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub alpha_hat: f64,
    pub method: HolderMethod,
    pub fit_r2: f64,
    pub scale_range: (f64, f64),
    pub trusted: bool,
    pub samples: Vec<HolderSample>,
}

/// Two-dimensional R2 low-discrepancy sequence.
pub fn r2_point(i: usize) -> [f64; 2] {
    const G: f64 = 1.324_717_957_244_746;
    let a1 = 1.0 / G;
    let a2 = 1.0 / (G * G);
    let t = i as f64;
    [wrap(0.5 + a1 * t), wrap(0.5 + a2 * t)]
}

pub fn estimate_holder(
    psi: &TrigMap,
    method: HolderMethod,
    a: &ToralAutomorphism,
    opts: &HolderOptions,
) -> Result<HolderEstimate> {
    if !psi.is_nonconstant() {
        return Err(invalid("regularity of a constant map is undefined"));
    }
    let (xs, ys, scales): (Vec<f64>, Vec<f64>, Vec<(f64, f64)>) = match method {
        HolderMethod::Increments => {
            let e = a.e_u();
            let base: Vec<[f64; 2]> = (0..opts.samples).map(r2_point).collect();
            let at_base: Vec<[f64; 2]> = base.iter().map(|x| psi.eval(*x)).collect();
            let floor = 1e-13 * psi.coefficient_mass().max(1e-300);
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut sc = Vec::new();
            for j in opts.scales.0..=opts.scales.1 {
                let h = libm::ldexp(1.0, -(j as i32));
                let m = base
                    .iter()
                    .zip(&at_base)
                    .map(|(x, p)| {
                        let q = psi.eval([x[0] + h * e[0], x[1] + h * e[1]]);
                        (q[0] - p[0]).hypot(q[1] - p[1])
                    })
                    .fold(0.0, f64::max);
                if m > floor && m.is_finite() {
                    xs.push(h.ln());
                    ys.push(m.ln());
                    sc.push((h, m));
                }
            }
            (xs, ys, sc)
        }
        HolderMethod::FourierDecay => {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut sc = Vec::new();
            for (k, c) in psi.spectrum() {
                if c > 0.0 {
                    xs.push(-k.ln());
                    ys.push(c.ln());
                    sc.push((k, c));
                }
            }
            (xs, ys, sc)
        }
    };
    if xs.len() < 4 {
        return Err(Error::InsufficientScales { usable: xs.len() });
    }
    let f = fit_line(&xs, &ys).ok_or(Error::InsufficientScales { usable: 1 })?;
    let samples = scales
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(&(scale, value), (x, y))| HolderSample { scale, value, residual: y - f.predict(*x) })
        .collect();
    let lo = scales.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = scales.iter().map(|s| s.0).fold(0.0, f64::max);
    let alpha_hat = f.slope.clamp(0.0, 1.5);
    let trusted = f.r2 >= TRUSTED_R2 && alpha_hat > 0.0 && alpha_hat < SATURATION_ALPHA;
    Ok(HolderEstimate { alpha_hat, method, fit_r2: f.r2, scale_range: (lo, hi), trusted, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::pushforward_frequency;
    use crate::torus::hyperbolic_eigen;

    fn pair() -> (ToralAutomorphism, ToralAutomorphism) {
        (hyperbolic_eigen([[3, 1], [2, 1]]).unwrap(), hyperbolic_eigen([[2, 1], [1, 1]]).unwrap())
    }

    #[test]
    fn single_mode_coefficient_law() {
        let (a, b) = pair();
        let g = TrigMap::cosine_mode([1, 0], b.e_u());
        let sol = solve_cohomology(&a, &b, &g, &SolveOptions::default()).unwrap();
        let mu = b.small_eig();
        for n in 0..=20 {
            let k = pushforward_frequency(&a, [1, 0], n);
            let c = sol.psi.cosine_coefficient(k);
            let expect = -mu.powi(n + 1);
            assert!((c[0] - expect * b.e_u()[0]).abs() < 1e-12);
            assert!((c[1] - expect * b.e_u()[1]).abs() < 1e-12);
        }
        assert!(sol.residual_sup < 1e-9);
        assert!((sol.predicted_alpha - 0.7307).abs() < 1e-3);
    }

    #[test]
    fn zero_and_constant_data() {
        let (a, b) = pair();
        let sol = solve_cohomology(&a, &b, &TrigMap::zero(), &SolveOptions::default()).unwrap();
        assert!(sol.psi.is_empty());
        assert_eq!(sol.residual_sup, 0.0);
        let c = 0.7;
        let eu = b.e_u();
        let g = TrigMap::constant([c * eu[0], c * eu[1]]);
        let sol = solve_cohomology(&a, &b, &g, &SolveOptions::default()).unwrap();
        let mu = b.small_eig();
        let v = sol.psi.cosine_coefficient([0, 0]);
        let expect = -c / (1.0 / mu - 1.0);
        assert!((v[0] - expect * eu[0]).abs() < 1e-14 && (v[1] - expect * eu[1]).abs() < 1e-14);
        assert!(sol.residual_sup < 1e-14);
    }

    #[test]
    fn stable_component_is_solved() {
        let (a, b) = pair();
        let g = TrigMap::sine_mode([1, 1], b.e_s());
        let sol = solve_cohomology(&a, &b, &g, &SolveOptions::default()).unwrap();
        assert!(sol.residual_sup < 1e-12);
    }

    #[test]
    fn order_of_hyperbolicity_checked() {
        let (a, b) = pair();
        let g = TrigMap::cosine_mode([1, 0], [1.0, 0.0]);
        assert!(matches!(solve_cohomology(&b, &a, &g, &SolveOptions::default()), Err(Error::InvalidInput(_))));
        let opts = SolveOptions { trunc_eps: 0.0, orbit_cap: 50, ..SolveOptions::default() };
        assert!(matches!(
            solve_cohomology(&a, &b, &g, &opts),
            Err(Error::NoConvergence { .. }) | Err(Error::IntegerOverflow { .. })
        ));
    }

    #[test]
    fn pure_mode_regularity_saturates() {
        let (a, _) = pair();
        let psi = TrigMap::cosine_mode([1, 0], [1.0, 0.0]);
        let est = estimate_holder(&psi, HolderMethod::Increments, &a, &HolderOptions::default()).unwrap();
        assert!((est.alpha_hat - 1.0).abs() < 0.05);
        assert!(!est.trusted);
        assert!(matches!(
            estimate_holder(&psi, HolderMethod::FourierDecay, &a, &HolderOptions::default()),
            Err(Error::InsufficientScales { usable: 1 })
        ));
    }
}
