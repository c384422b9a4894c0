//! Sparse trigonometric maps `T^2 -> R^2` and frequency orbits.
//!
//! A `TrigMap` stores `phi(x) = sum_k c_k e^{2 pi i <k, x>}` with complex
//! 2-vector coefficients keyed by integer frequency. Both `k` and `-k` are
//! stored; the reality condition `c_{-k} = conj(c_k)` is checked on
//! construction.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::sum::CompensatedSum;
use crate::torus::ToralAutomorphism;

pub type Freq = [i64; 2];
pub type Coef = [Complex64; 2];

const TAU: f64 = core::f64::consts::TAU;

/// Imaginary residue above which `evaluate` reports a reality violation.
pub const REALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigMap {
    terms: BTreeMap<Freq, Coef>,
    truncation_eps: f64,
}

fn neg_freq(k: Freq) -> Freq {
    [-k[0], -k[1]]
}

fn conj2(c: Coef) -> Coef {
    [c[0].conj(), c[1].conj()]
}

fn coef_norm(c: &Coef) -> f64 {
    (c[0].norm_sqr() + c[1].norm_sqr()).sqrt()
}

/// Whether `k` is the representative of `{k, -k}` (lexicographically positive).
pub fn is_half_plane(k: Freq) -> bool {
    k[0] > 0 || (k[0] == 0 && k[1] > 0)
}

/// `x = m 2^e` with `m` an integer of at most 53 bits.
fn decompose(x: f64) -> (i64, i32) {
    let (f, e) = libm::frexp(x);
    ((f * 9007199254740992.0) as i64, e - 53)
}

/// `k x mod 1`, computed from the exact binary expansion of `x`.
#[inline]
fn frac_mul(k: i64, x: f64) -> f64 {
    if k == 0 || x == 0.0 {
        return 0.0;
    }
    let (m, e) = decompose(x);
    if e >= 0 {
        return 0.0;
    }
    let p = k as i128 * m as i128;
    let s = -e;
    if s >= 127 {
        return libm::ldexp(p as f64, e);
    }
    let r = p & ((1i128 << s) - 1);
    libm::ldexp(r as f64, e)
}

/// `<k, x> mod 1`, reduced to `[-1/2, 1/2]`.
#[inline]
pub fn phase(k: Freq, x: [f64; 2]) -> f64 {
    let t = frac_mul(k[0], x[0]) + frac_mul(k[1], x[1]);
    t - t.round()
}

impl TrigMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(v: [f64; 2]) -> Self {
        let mut m = Self::new();
        m.terms.insert([0, 0], [Complex64::new(v[0], 0.0), Complex64::new(v[1], 0.0)]);
        m.prune_zeros();
        m
    }

    /// `v cos(2 pi <k, x>)`.
    pub fn cosine_mode(k: Freq, v: [f64; 2]) -> Self {
        if k == [0, 0] {
            return Self::constant(v);
        }
        let c = [Complex64::new(v[0] / 2.0, 0.0), Complex64::new(v[1] / 2.0, 0.0)];
        let mut m = Self::new();
        m.terms.insert(k, c);
        m.terms.insert(neg_freq(k), c);
        m
    }

    /// `v sin(2 pi <k, x>)`.
    pub fn sine_mode(k: Freq, v: [f64; 2]) -> Self {
        if k == [0, 0] {
            return Self::new();
        }
        let c = [Complex64::new(0.0, -v[0] / 2.0), Complex64::new(0.0, -v[1] / 2.0)];
        let mut m = Self::new();
        m.terms.insert(k, c);
        m.terms.insert(neg_freq(k), conj2(c));
        m
    }

    /// Builds a map from explicit terms. Every frequency must appear with
    /// its mirror and conjugate coefficient, and the zero frequency must be
    /// real.
    pub fn from_terms<I: IntoIterator<Item = (Freq, Coef)>>(terms: I, truncation_eps: f64) -> Result<Self> {
        let mut map: BTreeMap<Freq, Coef> = BTreeMap::new();
        for (k, c) in terms {
            if map.insert(k, c).is_some() {
                return Err(invalid(alloc::format!("duplicate frequency {:?}", k)));
            }
        }
        for (k, c) in &map {
            let tol = 1e-12 * (1.0 + coef_norm(c));
            let mirror = map
                .get(&neg_freq(*k))
                .ok_or_else(|| invalid(alloc::format!("frequency {:?} has no mirror term", k)))?;
            let d = [mirror[0] - c[0].conj(), mirror[1] - c[1].conj()];
            if coef_norm(&d) > tol {
                return Err(Error::RealityViolation { imag: coef_norm(&d) });
            }
        }
        if !(truncation_eps >= 0.0) {
            return Err(invalid("truncation epsilon must be nonnegative"));
        }
        let mut m = Self { terms: map, truncation_eps };
        m.prune_zeros();
        Ok(m)
    }

    /// Adds `c` at `k` and `conj(c)` at `-k`. At `k = 0` only the real part
    /// is kept.
    pub fn add_pair(&mut self, k: Freq, c: Coef) {
        if k == [0, 0] {
            let e = self.terms.entry(k).or_insert([Complex64::new(0.0, 0.0); 2]);
            e[0] += Complex64::new(c[0].re, 0.0);
            e[1] += Complex64::new(c[1].re, 0.0);
            return;
        }
        for (kk, cc) in [(k, c), (neg_freq(k), conj2(c))] {
            let e = self.terms.entry(kk).or_insert([Complex64::new(0.0, 0.0); 2]);
            e[0] += cc[0];
            e[1] += cc[1];
        }
    }

    fn prune_zeros(&mut self) {
        self.terms.retain(|_, c| coef_norm(c) != 0.0);
    }

    /// Drops terms with `|c_k| < eps` and records `eps`.
    pub fn truncate(&mut self, eps: f64) {
        self.terms.retain(|_, c| coef_norm(c) >= eps);
        self.truncation_eps = self.truncation_eps.max(eps);
    }

    pub fn truncation_eps(&self) -> f64 {
        self.truncation_eps
    }

    pub fn set_truncation_eps(&mut self, eps: f64) {
        self.truncation_eps = eps;
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in increasing lexicographic order of frequency.
    pub fn terms(&self) -> impl Iterator<Item = (&Freq, &Coef)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, k: Freq) -> Coef {
        self.terms.get(&k).copied().unwrap_or([Complex64::new(0.0, 0.0); 2])
    }

    /// Coefficient of `cos(2 pi <k, x>)` in the real expansion, i.e.
    /// `2 Re c_k` for `k != 0` and `c_0` at the origin.
    pub fn cosine_coefficient(&self, k: Freq) -> [f64; 2] {
        let c = self.coefficient(k);
        if k == [0, 0] {
            [c[0].re, c[1].re]
        } else {
            [2.0 * c[0].re, 2.0 * c[1].re]
        }
    }

    /// Coefficient of `sin(2 pi <k, x>)`, i.e. `-2 Im c_k`.
    pub fn sine_coefficient(&self, k: Freq) -> [f64; 2] {
        if k == [0, 0] {
            return [0.0; 2];
        }
        let c = self.coefficient(k);
        [-2.0 * c[0].im, -2.0 * c[1].im]
    }

    pub fn max_frequency(&self) -> i64 {
        self.terms.keys().map(|k| k[0].abs().max(k[1].abs())).max().unwrap_or(0)
    }

    /// Sum of `|c_k|` over all terms, a bound for the sup norm.
    pub fn coefficient_mass(&self) -> f64 {
        self.terms.values().map(coef_norm).sum()
    }

    pub fn is_nonconstant(&self) -> bool {
        self.terms.keys().any(|k| *k != [0, 0])
    }

    fn sum_terms(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let mut acc = [CompensatedSum::new(); 4];
        for (k, c) in &self.terms {
            let (s, co) = libm::sincos(TAU * phase(*k, x));
            let e = Complex64::new(co, s);
            let v0 = c[0] * e;
            let v1 = c[1] * e;
            acc[0].add(v0.re);
            acc[1].add(v1.re);
            acc[2].add(v0.im);
            acc[3].add(v1.im);
        }
        [[acc[0].value(), acc[1].value()], [acc[2].value(), acc[3].value()]]
    }

    /// `phi(x)`, checking that the imaginary residue is negligible.
    pub fn evaluate(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        let [re, im] = self.sum_terms(x);
        let imag = im[0].abs().max(im[1].abs());
        if imag > REALITY_TOL {
            return Err(Error::RealityViolation { imag });
        }
        Ok(re)
    }

    /// `phi(x)` without the reality check. Maps built through the public
    /// constructors are real by construction.
    #[inline]
    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        let mut acc = [CompensatedSum::new(); 2];
        for (k, c) in &self.terms {
            let (s, co) = libm::sincos(TAU * phase(*k, x));
            acc[0].add(c[0].re * co - c[0].im * s);
            acc[1].add(c[1].re * co - c[1].im * s);
        }
        [acc[0].value(), acc[1].value()]
    }

    /// Jacobian matrix `D phi(x)`, row `i` is the gradient of component `i`.
    pub fn gradient(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let mut acc = [[CompensatedSum::new(); 2]; 2];
        for (k, c) in &self.terms {
            if *k == [0, 0] {
                continue;
            }
            let (s, co) = libm::sincos(TAU * phase(*k, x));
            // d/dx_j of c e^{2 pi i <k,x>} = 2 pi i k_j c e^{...}; real part.
            for i in 0..2 {
                let re = -(c[i].re * s + c[i].im * co) * TAU;
                acc[i][0].add(re * k[0] as f64);
                acc[i][1].add(re * k[1] as f64);
            }
        }
        [
            [acc[0][0].value(), acc[0][1].value()],
            [acc[1][0].value(), acc[1][1].value()],
        ]
    }

    /// `x -> phi(M x)` for an integer matrix `M`: the term at `k` moves to
    /// `M^T k`.
    pub fn compose_linear(&self, m: &crate::torus::IMat2) -> Result<Self> {
        let mut out = Self { terms: BTreeMap::new(), truncation_eps: self.truncation_eps };
        let mt = crate::torus::transpose(m);
        for (k, c) in &self.terms {
            let kk = apply_int(&mt, *k).ok_or(Error::IntegerOverflow { context: "frequency transport" })?;
            let e = out.terms.entry(kk).or_insert([Complex64::new(0.0, 0.0); 2]);
            e[0] += c[0];
            e[1] += c[1];
        }
        out.prune_zeros();
        Ok(out)
    }

    /// `x -> M phi(x)` for a real 2x2 matrix.
    pub fn map_values(&self, m: [[f64; 2]; 2]) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            let c0 = c[0] * m[0][0] + c[1] * m[0][1];
            let c1 = c[0] * m[1][0] + c[1] * m[1][1];
            *c = [c0, c1];
        }
        out.prune_zeros();
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            c[0] *= a;
            c[1] *= a;
        }
        out.prune_zeros();
        out
    }

    /// `a self + b other`.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            terms.insert(*k, [c[0] * a, c[1] * a]);
        }
        for (k, c) in &other.terms {
            let e = terms.entry(*k).or_insert([Complex64::new(0.0, 0.0); 2]);
            e[0] += c[0] * b;
            e[1] += c[1] * b;
        }
        let mut out = Self { terms, truncation_eps: self.truncation_eps.max(other.truncation_eps) };
        out.prune_zeros();
        out
    }

    /// Largest coefficient difference to `other` over the union of supports.
    pub fn max_coefficient_gap(&self, other: &Self) -> f64 {
        let d = self.linear_combination(1.0, other, -1.0);
        d.terms.values().map(coef_norm).fold(0.0, f64::max)
    }

    /// `(|k|, |c_k|)` over half-plane representatives, in key order.
    pub fn spectrum(&self) -> Vec<(f64, f64)> {
        self.terms
            .iter()
            .filter(|(k, _)| is_half_plane(**k))
            .map(|(k, c)| (((k[0] as f64).powi(2) + (k[1] as f64).powi(2)).sqrt(), coef_norm(c)))
            .collect()
    }
}

impl Add for &TrigMap {
    type Output = TrigMap;
    fn add(self, o: &TrigMap) -> TrigMap {
        self.linear_combination(1.0, o, 1.0)
    }
}

impl Sub for &TrigMap {
    type Output = TrigMap;
    fn sub(self, o: &TrigMap) -> TrigMap {
        self.linear_combination(1.0, o, -1.0)
    }
}

impl Neg for &TrigMap {
    type Output = TrigMap;
    fn neg(self) -> TrigMap {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &TrigMap {
    type Output = TrigMap;
    fn mul(self, a: f64) -> TrigMap {
        self.scale(a)
    }
}

fn apply_int(m: &crate::torus::IMat2, k: Freq) -> Option<Freq> {
    Some([
        m[0][0].checked_mul(k[0])?.checked_add(m[0][1].checked_mul(k[1])?)?,
        m[1][0].checked_mul(k[0])?.checked_add(m[1][1].checked_mul(k[1])?)?,
    ])
}

/// `(A^T)^n k` in exact integer arithmetic, or `None` on overflow.
pub fn checked_pushforward(a: &ToralAutomorphism, k: Freq, n: i32) -> Option<Freq> {
    let mt = if n >= 0 {
        crate::torus::transpose(a.matrix())
    } else {
        crate::torus::transpose(&a.inverse_matrix())
    };
    let mut v = k;
    for _ in 0..n.unsigned_abs() {
        v = apply_int(&mt, v)?;
    }
    Some(v)
}

/// `(A^T)^n k`. Panics if the result does not fit in `i64`.
pub fn pushforward_frequency(a: &ToralAutomorphism, k: Freq, n: i32) -> Freq {
    checked_pushforward(a, k, n).expect("frequency overflow")
}

/// The forward orbit `(A^T)^n k0`, `n = 0..=len`. Mirror frequencies
/// `-(A^T)^n k0` are implied.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyOrbit {
    pub seed: Freq,
    pub elements: Vec<Freq>,
    /// `min_n |elements[n]| lam^n`, the constant in `|k_n| >= K lam^{-n}`.
    pub growth_constant: f64,
}

impl FrequencyOrbit {
    pub fn new(a: &ToralAutomorphism, seed: Freq, len: usize) -> Result<Self> {
        if seed == [0, 0] {
            return Err(invalid("orbit seed must be a nonzero frequency"));
        }
        let mt = crate::torus::transpose(a.matrix());
        let mut elements = Vec::with_capacity(len + 1);
        let mut v = seed;
        elements.push(v);
        for _ in 0..len {
            v = apply_int(&mt, v).ok_or(Error::IntegerOverflow { context: "frequency orbit" })?;
            elements.push(v);
        }
        let lam = a.small_eig();
        let growth_constant = elements
            .iter()
            .enumerate()
            .map(|(n, k)| (k[0] as f64).hypot(k[1] as f64) * lam.powi(n as i32))
            .fold(f64::INFINITY, f64::min);
        Ok(Self { seed, elements, growth_constant })
    }

    pub fn norm(&self, n: usize) -> f64 {
        let k = self.elements[n];
        (k[0] as f64).hypot(k[1] as f64)
    }
}
