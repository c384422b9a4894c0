//! Periodic orbits `p_n` that make `n` local passes and one excursion
//! through the gluing, their periods and the asymptotic fits.
//!
//! With `w = Pi_bar(z)` the orbit condition is `L^n w = z`. Instead of
//! iterating `L^n` (entries as large as `lam_hat^n`) the solve uses the
//! two-point form: unknowns `u = (eta_z, eta_hat_z, xi_hat_w, xi_w)`,
//!
//!   z = (mu_hat^n xi_hat_w, mu^n xi_w, eta_z, eta_hat_z)
//!   w = (xi_hat_w, xi_w, lam^-n eta_z, lam_hat^-n eta_hat_z)
//!
//! so `L^n w = z` holds by construction and Newton works on
//! `Pi_bar(z(u)) - w(u) = 0`, whose Jacobian stays bounded in `n`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::model::{compute_pp, compute_templates, LocalModel, DEFAULT_TAIL_EPS};
use crate::error::{invalid, Error, Result};
use crate::fit::{aitken, fit_line, usable_tail_start};
use crate::linalg::{Mat4, Vec4};
use crate::maps::Point4;
use crate::sum::{DoubleWord, Scalar};

pub const SHADOW_NEWTON_TOL: f64 = 1e-13;
pub const SHADOW_MAX_ITER: usize = 100;
/// Seed offset for the uniqueness probes.
pub const PROBE_OFFSET: f64 = 0.05;
/// Distance between Newton solutions above which they count as distinct.
pub const DISTINCT_SOLUTIONS: f64 = 1e-9;
/// Number of trailing extrapolated values averaged into `omega_fit`.
pub const TAIL_AVERAGE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Double,
    /// Double-word arithmetic, about 106 bits.
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowingOptions {
    pub precision: Precision,
    pub uniqueness_check: bool,
    pub tail_eps: f64,
}

impl Default for ShadowingOptions {
    fn default() -> Self {
        Self { precision: Precision::Double, uniqueness_check: true, tail_eps: DEFAULT_TAIL_EPS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowingOrbit {
    pub n: usize,
    /// Point near `q` on the section.
    pub p: Point4,
    /// `Pi_bar(p)`, near `q'`.
    pub p_prime: Point4,
    /// `T_n = sum_{l<n} tau(L^l p') + T' + tau_bar(p)`.
    pub period: f64,
    /// `T_n - n T - T'`, accumulated directly from the small terms.
    pub correction: f64,
    pub taubar: f64,
    pub residual: f64,
    pub iterations: usize,
}

struct Neumaier<S> {
    sum: S,
    comp: S,
}

impl<S: Scalar> Neumaier<S> {
    fn new() -> Self {
        Self { sum: S::zero(), comp: S::zero() }
    }

    fn add(&mut self, x: S) {
        let t = self.sum + x;
        if self.sum.magnitude() >= x.magnitude() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> S {
        self.sum + self.comp
    }
}

struct Powers<S> {
    mu_hat: S,
    mu: S,
    lam_inv: S,
    lam_hat_inv: S,
}

impl<S: Scalar> Powers<S> {
    fn new(m: &LocalModel, n: usize) -> Self {
        let e = m.eig;
        let n = n as i32;
        Self {
            mu_hat: S::from_f64(e.mu_hat).ipow(n),
            mu: S::from_f64(e.mu).ipow(n),
            lam_inv: S::from_f64(e.lam).ipow(-n),
            lam_hat_inv: S::from_f64(e.lam_hat).ipow(-n),
        }
    }

    fn z(&self, u: &[S; 4]) -> [S; 4] {
        [self.mu_hat * u[2], self.mu * u[3], u[0], u[1]]
    }

    fn w(&self, u: &[S; 4]) -> [S; 4] {
        [u[2], u[3], self.lam_inv * u[0], self.lam_hat_inv * u[1]]
    }
}

fn residual<S: Scalar>(m: &LocalModel, pw: &Powers<S>, u: &[S; 4]) -> ([S; 4], f64) {
    let z = pw.z(u);
    let w = pw.w(u);
    let img = m.gluing.map(&z);
    let r: [S; 4] = core::array::from_fn(|i| img[i] - w[i]);
    let size = r.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max);
    (r, size)
}

fn jacobian(m: &LocalModel, pw: &Powers<f64>, u: &[f64; 4]) -> Mat4 {
    let d = m.gluing.differential(&pw.z(u));
    let mut dz = Mat4::zeros();
    dz[(2, 0)] = 1.0;
    dz[(3, 1)] = 1.0;
    dz[(0, 2)] = pw.mu_hat;
    dz[(1, 3)] = pw.mu;
    let mut dw = Mat4::zeros();
    dw[(2, 0)] = pw.lam_inv;
    dw[(3, 1)] = pw.lam_hat_inv;
    dw[(0, 2)] = 1.0;
    dw[(1, 3)] = 1.0;
    d * dz - dw
}

/// Damped Newton on the two-point residual. The Jacobian is formed in
/// binary64; the residual and the iterate carry the full precision of `S`.
fn newton<S: Scalar>(m: &LocalModel, n: usize, seed: [f64; 4]) -> Result<([S; 4], f64, usize)> {
    let pw = Powers::<S>::new(m, n);
    let pw64 = Powers::<f64>::new(m, n);
    let tol = SHADOW_NEWTON_TOL * (S::epsilon() / f64::EPSILON);
    let accept = 10.0 * tol;
    let mut u: [S; 4] = seed.map(S::from_f64);
    let (mut r, mut res) = residual(m, &pw, &u);
    let mut it = 0;
    while it < SHADOW_MAX_ITER {
        if res <= tol {
            break;
        }
        it += 1;
        let j = jacobian(m, &pw64, &u.map(Scalar::to_f64));
        let rhs = -Vec4::from_fn(|i, _| r[i].to_f64());
        let delta = match j.lu().solve(&rhs) {
            Some(d) if d.iter().all(|x| x.is_finite()) => d,
            _ => return Err(Error::NewtonDiverged { residual: res }),
        };
        let tries = if res <= accept { 1 } else { 30 };
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..tries {
            let trial: [S; 4] = core::array::from_fn(|i| u[i] + S::from_f64(t * delta[i]));
            let (tr, tres) = residual(m, &pw, &trial);
            if tres < res {
                u = trial;
                r = tr;
                res = tres;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if res <= accept {
        Ok((u, res, it))
    } else {
        Err(Error::NewtonDiverged { residual: res })
    }
}

fn seed(m: &LocalModel) -> [f64; 4] {
    let g = &m.gluing;
    [g.eta_inf(), g.eta_hat_inf(), g.xi_hat_inf(), g.xi_inf()]
}

fn assemble<S: Scalar>(m: &LocalModel, n: usize, u: [S; 4], res: f64, iterations: usize) -> ShadowingOrbit {
    let pw = Powers::<S>::new(m, n);
    let z = pw.z(&u);
    let e = m.eig;
    let mut acc = Neumaier::<S>::new();
    // L^l w = (mu_hat^l xi_hat_w, mu^l xi_w, lam^(l-n) eta_z, lam_hat^(l-n) eta_hat_z)
    let (mh, mu, la, lh) = (S::from_f64(e.mu_hat), S::from_f64(e.mu), S::from_f64(e.lam), S::from_f64(e.lam_hat));
    let ni = n as i32;
    for l in 0..ni {
        let x = [mh.ipow(l) * u[2], mu.ipow(l) * u[3], la.ipow(l - ni) * u[0], lh.ipow(l - ni) * u[1]];
        acc.add(m.tau.excess(&x));
    }
    let taubar = m.gluing.taubar(&z);
    acc.add(taubar);
    let correction = acc.value();
    let period = S::from_f64(n as f64) * S::from_f64(m.tau.t()) + S::from_f64(m.gluing.t_prime()) + correction;
    ShadowingOrbit {
        n,
        p: z.map(Scalar::to_f64),
        p_prime: m.gluing.map(&z).map(Scalar::to_f64),
        period: period.to_f64(),
        correction: correction.to_f64(),
        taubar: taubar.to_f64(),
        residual: res,
        iterations,
    }
}

fn solve_at(m: &LocalModel, n: usize, start: [f64; 4], precision: Precision) -> Result<ShadowingOrbit> {
    match precision {
        Precision::Double => {
            let (u, res, it) = newton::<f64>(m, n, start)?;
            Ok(assemble(m, n, u, res, it))
        }
        Precision::Extended => {
            let (u, res, it) = newton::<DoubleWord>(m, n, start)?;
            Ok(assemble(m, n, u, res, it))
        }
    }
}

/// The shadowing orbit with `n` local passes, Newton-seeded at `q`.
pub fn find_shadowing_orbit(m: &LocalModel, n: usize, opts: &ShadowingOptions) -> Result<ShadowingOrbit> {
    if n == 0 {
        return Err(invalid("number of local passes must be at least 1"));
    }
    let s = seed(m);
    let orbit = solve_at(m, n, s, opts.precision)?;
    if opts.uniqueness_check {
        for k in 0..4 {
            let mut probe = s;
            probe[k] += if k % 2 == 0 { PROBE_OFFSET } else { -PROBE_OFFSET };
            if let Ok(other) = solve_at(m, n, probe, Precision::Double) {
                let d = (0..4).map(|i| (other.p[i] - orbit.p[i]).abs()).fold(0.0, f64::max);
                if d > DISTINCT_SOLUTIONS {
                    return Err(Error::UniquenessSuspect { distance: d });
                }
            }
        }
    }
    Ok(orbit)
}

/// Smallest `n <= n_max` for which Newton seeded at `q` converges.
pub fn find_n0(m: &LocalModel, n_max: usize) -> Result<usize> {
    let s = seed(m);
    let mut last = f64::INFINITY;
    for n in 1..=n_max {
        match newton::<f64>(m, n, s) {
            Ok(_) => return Ok(n),
            Err(Error::NewtonDiverged { residual }) => last = residual,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NewtonDiverged { residual: last })
}

/// `gamma = 2 log lam / (log lam - log mu)`.
pub fn gamma(m: &LocalModel) -> f64 {
    let (lm, ll) = (m.eig.mu.ln(), m.eig.lam.ln());
    2.0 * ll / (ll - lm)
}

/// `theta = mu^gamma`, the error rate of the period expansion.
pub fn theta(m: &LocalModel) -> f64 {
    m.eig.mu.powf(gamma(m))
}

/// `ell_n = floor(-log mu / (log lam - log mu) n)`, the split where
/// `mu^(n - ell) ~ lam^(-ell)`.
pub fn ell(m: &LocalModel, n: usize) -> usize {
    let (lm, ll) = (m.eig.mu.ln(), m.eig.lam.ln());
    (-lm / (ll - lm) * n as f64).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionRow {
    pub n: usize,
    pub period: f64,
    pub omega_hat: f64,
    /// `omega_hat - omega_fit`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub n_min: usize,
    pub n_max: usize,
    pub rows: Vec<ExpansionRow>,
    pub omega_fit: f64,
    pub omega_closed: f64,
    pub t_ws: f64,
    pub pp: f64,
    /// Slope of `log |omega_hat_n - omega_fit|` against `n`.
    pub residual_rate: Option<f64>,
    pub theta: f64,
    pub gamma: f64,
    /// First `n` whose extrapolated value entered the tail average.
    pub usable_from: usize,
}

impl ExpansionReport {
    pub fn relative_gap(&self) -> f64 {
        let d = (self.omega_fit - self.omega_closed).abs();
        if self.omega_closed == 0.0 {
            d
        } else {
            d / self.omega_closed.abs()
        }
    }
}

/// Relative size below which a difference of consecutive estimates is
/// treated as rounding noise.
const NOISE_FLOOR: f64 = 1e-12;

fn noise_floor(seq: &[f64]) -> f64 {
    NOISE_FLOOR * seq.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE)
}

/// Tail average of the Aitken-accelerated sequence over its usable part.
/// Returns the estimate and the index of the first value used.
pub fn extrapolate_limit(seq: &[f64]) -> (f64, usize) {
    if seq.is_empty() {
        return (f64::NAN, 0);
    }
    let floor = noise_floor(seq);
    let start = usable_tail_start(seq, floor);
    let acc = aitken(seq);
    // acc[k] is built from seq[k..k + 3].
    let offset = if seq.len() >= 3 { 2 } else { 0 };
    let usable: Vec<(usize, f64)> = acc.iter().enumerate().filter(|(k, _)| *k >= start).map(|(k, v)| (k + offset, *v)).collect();
    let pool = if usable.is_empty() { alloc::vec![(seq.len() - 1, seq[seq.len() - 1])] } else { usable };
    let tail = &pool[pool.len().saturating_sub(TAIL_AVERAGE)..];
    let mean = tail.iter().map(|(_, v)| v).sum::<f64>() / tail.len() as f64;
    (mean, tail[0].0)
}

/// Slope of `log |r_i|` against `x_i` over entries above `floor`.
fn decay_slope(xs: &[f64], rs: &[f64], floor: f64) -> Option<f64> {
    let (fx, fy): (Vec<f64>, Vec<f64>) = xs.iter().zip(rs).filter(|(_, r)| r.abs() > floor).map(|(x, r)| (*x, r.abs().ln())).unzip();
    if fx.len() < 3 {
        return None;
    }
    fit_line(&fx, &fy).map(|f| f.slope)
}

pub fn shadowing_family(m: &LocalModel, n_min: usize, n_max: usize, opts: &ShadowingOptions) -> Result<Vec<ShadowingOrbit>> {
    (n_min..=n_max).map(|n| find_shadowing_orbit(m, n, opts)).collect()
}

/// Periods `T_n` for `n_min <= n <= n_max` against the leading term
/// `omega mu^n` of `T_n - n T - T'`.
pub fn expansion_experiment(m: &LocalModel, n_min: usize, n_max: usize, opts: &ShadowingOptions) -> Result<ExpansionReport> {
    if n_max < n_min + 8 {
        return Err(invalid("expansion needs n_max - n_min >= 8"));
    }
    m.require_center_expanding()?;
    let orbits = shadowing_family(m, n_min, n_max, opts)?;
    expansion_from_orbits(m, &orbits, opts.tail_eps)
}

pub fn expansion_from_orbits(m: &LocalModel, orbits: &[ShadowingOrbit], tail_eps: f64) -> Result<ExpansionReport> {
    let templates = compute_templates(m)?;
    let pp = compute_pp(m, tail_eps)?;
    let omega_closed = m.gluing.xi_inf() * (templates.t_ws - pp);
    let mu = m.eig.mu;
    let hats: Vec<f64> = orbits.iter().map(|o| o.correction / mu.powi(o.n as i32)).collect();
    let (omega_fit, first) = extrapolate_limit(&hats);
    let rows: Vec<ExpansionRow> = orbits
        .iter()
        .zip(&hats)
        .map(|(o, h)| ExpansionRow { n: o.n, period: o.period, omega_hat: *h, residual: h - omega_fit })
        .collect();
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let rs: Vec<f64> = rows.iter().map(|r| r.residual).collect();
    let residual_rate = decay_slope(&ns, &rs, noise_floor(&hats) * 10.0);
    Ok(ExpansionReport {
        n_min: orbits.first().map_or(0, |o| o.n),
        n_max: orbits.last().map_or(0, |o| o.n),
        rows,
        omega_fit,
        omega_closed,
        t_ws: templates.t_ws,
        pp,
        residual_rate,
        theta: theta(m),
        gamma: gamma(m),
        usable_from: orbits.get(first).map_or(0, |o| o.n),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionReport {
    /// `(n, tau_bar(p_n), tau_bar(p_n) / mu^n)`.
    pub rows: Vec<(usize, f64, f64)>,
    /// `xi_inf t_ws`.
    pub leading: f64,
    /// Relative error of the last ratio against `leading` (absolute when
    /// `leading` is zero).
    pub error_at_last: f64,
    /// Decay exponent of `tau_bar(p_n) - leading mu^n`, positive when
    /// decaying.
    pub residual_rate: Option<f64>,
    /// `min(2 |log mu|, log lam)`.
    pub expected_rate: f64,
}

/// Isolates the excursion term `tau_bar(p_n)` and compares it with
/// `xi_inf t_ws mu^n`.
pub fn excursion_term_check(m: &LocalModel, n_min: usize, n_max: usize, opts: &ShadowingOptions) -> Result<ExcursionReport> {
    if n_max < n_min + 2 {
        return Err(invalid("excursion check needs at least three values of n"));
    }
    let orbits = shadowing_family(m, n_min, n_max, opts)?;
    excursion_from_orbits(m, &orbits)
}

pub fn excursion_from_orbits(m: &LocalModel, orbits: &[ShadowingOrbit]) -> Result<ExcursionReport> {
    let t = compute_templates(m)?;
    let leading = m.gluing.xi_inf() * t.t_ws;
    let mu = m.eig.mu;
    let rows: Vec<(usize, f64, f64)> = orbits.iter().map(|o| (o.n, o.taubar, o.taubar / mu.powi(o.n as i32))).collect();
    let last = rows.last().map_or(0.0, |r| r.2);
    let error_at_last = if leading == 0.0 { last.abs() } else { ((last - leading) / leading).abs() };
    let ns: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
    let rs: Vec<f64> = rows.iter().map(|(n, tb, _)| tb - leading * mu.powi(*n as i32)).collect();
    let floor = rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max) * 1e-13 + f64::MIN_POSITIVE;
    let residual_rate = decay_slope(&ns, &rs, floor).map(|s| -s);
    Ok(ExcursionReport {
        rows,
        leading,
        error_at_last,
        residual_rate,
        expected_rate: (2.0 * mu.ln().abs()).min(m.eig.lam.ln()),
    })
}

/// Fitted decay exponents of `|p_n - q|` and of the stable coordinates
/// of `p_n` after removing `(mu_hat^n xi_hat_inf, mu^n xi_inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowingDecay {
    pub distance: Option<f64>,
    pub xi_hat: Option<f64>,
    pub xi: Option<f64>,
}

pub fn shadowing_decay(m: &LocalModel, orbits: &[ShadowingOrbit]) -> ShadowingDecay {
    let q = m.gluing.q();
    let e = m.eig;
    let ns: Vec<f64> = orbits.iter().map(|o| o.n as f64).collect();
    let dist: Vec<f64> = orbits.iter().map(|o| (0..4).map(|i| (o.p[i] - q[i]).abs()).fold(0.0, f64::max)).collect();
    let xh: Vec<f64> = orbits.iter().map(|o| o.p[0] - e.mu_hat.powi(o.n as i32) * m.gluing.xi_hat_inf()).collect();
    let x: Vec<f64> = orbits.iter().map(|o| o.p[1] - e.mu.powi(o.n as i32) * m.gluing.xi_inf()).collect();
    ShadowingDecay {
        distance: decay_slope(&ns, &dist, 0.0),
        xi_hat: decay_slope(&ns, &xh, f64::MIN_POSITIVE * 1e10),
        xi: decay_slope(&ns, &x, f64::MIN_POSITIVE * 1e10),
    }
}
