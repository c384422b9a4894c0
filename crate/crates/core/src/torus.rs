//! Hyperbolic automorphisms of the 2-torus: eigendata, exact periodic
//! points of the linear product map and the non-resonance scan.

use alloc::vec::Vec;
use num_integer::Integer;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type IMat2 = [[i64; 2]; 2];

/// Default cap on the number of periodic points `periodic_points_linear`
/// will enumerate.
pub const DEFAULT_ENUMERATION_CAP: u64 = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ToralAutomorphism {
    matrix: IMat2,
    trace: i64,
    small_eig: f64,
    large_eig: f64,
    e_s: [f64; 2],
    e_u: [f64; 2],
}

fn checked_det(m: &IMat2) -> Option<i64> {
    m[0][0]
        .checked_mul(m[1][1])?
        .checked_sub(m[0][1].checked_mul(m[1][0])?)
}

pub fn mat_mul(a: &IMat2, b: &IMat2) -> Option<IMat2> {
    let mut out = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0]
                .checked_mul(b[0][j])?
                .checked_add(a[i][1].checked_mul(b[1][j])?)?;
        }
    }
    Some(out)
}

/// `m^n` for `n >= 0` with overflow checking.
pub fn mat_pow(m: &IMat2, n: u32) -> Option<IMat2> {
    let mut acc = [[1, 0], [0, 1]];
    let mut base = *m;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mat_mul(&acc, &base)?;
        }
        e >>= 1;
        if e > 0 {
            base = mat_mul(&base, &base)?;
        }
    }
    Some(acc)
}

pub fn transpose(m: &IMat2) -> IMat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// Unit eigenvector for eigenvalue `l`, oriented so that its first nonzero
/// component is positive.
fn eigvec(m: &IMat2, l: f64) -> [f64; 2] {
    let (a, b, c, d) = (m[0][0] as f64, m[0][1] as f64, m[1][0] as f64, m[1][1] as f64);
    let v1 = [b, l - a];
    let v2 = [l - d, c];
    let n1 = v1[0].hypot(v1[1]);
    let n2 = v2[0].hypot(v2[1]);
    let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    let mut v = [v[0] / n, v[1] / n];
    let lead = if v[0] != 0.0 { v[0] } else { v[1] };
    if lead < 0.0 {
        v = [-v[0], -v[1]];
    }
    v
}

impl ToralAutomorphism {
    pub fn matrix(&self) -> &IMat2 {
        &self.matrix
    }
    pub fn det(&self) -> i64 {
        1
    }
    pub fn trace(&self) -> i64 {
        self.trace
    }
    /// The contracting eigenvalue, in `(0, 1)`.
    pub fn small_eig(&self) -> f64 {
        self.small_eig
    }
    pub fn large_eig(&self) -> f64 {
        self.large_eig
    }
    pub fn e_s(&self) -> [f64; 2] {
        self.e_s
    }
    pub fn e_u(&self) -> [f64; 2] {
        self.e_u
    }

    pub fn inverse_matrix(&self) -> IMat2 {
        let m = &self.matrix;
        [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
    }

    /// `M^n` for any integer `n`.
    pub fn power(&self, n: i32) -> Option<IMat2> {
        if n >= 0 {
            mat_pow(&self.matrix, n as u32)
        } else {
            mat_pow(&self.inverse_matrix(), n.unsigned_abs())
        }
    }

    /// `M x` on real coordinates, without reduction mod 1.
    #[inline]
    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let m = &self.matrix;
        [
            m[0][0] as f64 * x[0] + m[0][1] as f64 * x[1],
            m[1][0] as f64 * x[0] + m[1][1] as f64 * x[1],
        ]
    }

    #[inline]
    pub fn apply_inverse(&self, x: [f64; 2]) -> [f64; 2] {
        let m = &self.matrix;
        [
            m[1][1] as f64 * x[0] - m[0][1] as f64 * x[1],
            -(m[1][0] as f64) * x[0] + m[0][0] as f64 * x[1],
        ]
    }

    /// `|det(M^n - I)|`, the number of points of period dividing `n`.
    pub fn periodic_count(&self, n: u32) -> Result<u64> {
        let p = mat_pow(&self.matrix, n).ok_or(Error::IntegerOverflow { context: "matrix power" })?;
        let d = shifted_det(&p).ok_or(Error::IntegerOverflow { context: "determinant" })?;
        Ok(d.unsigned_abs())
    }
}

fn shifted_det(p: &IMat2) -> Option<i64> {
    let n = [[p[0][0].checked_sub(1)?, p[0][1]], [p[1][0], p[1][1].checked_sub(1)?]];
    checked_det(&n)
}

/// Eigendata of a hyperbolic matrix in SL(2, Z) with positive eigenvalues.
pub fn hyperbolic_eigen(matrix: IMat2) -> Result<ToralAutomorphism> {
    let det = checked_det(&matrix).ok_or(Error::IntegerOverflow { context: "determinant" })?;
    let trace = matrix[0][0]
        .checked_add(matrix[1][1])
        .ok_or(Error::IntegerOverflow { context: "trace" })?;
    if trace.abs() <= 2 {
        return Err(Error::NotHyperbolic { trace });
    }
    if det != 1 {
        return Err(Error::NotUnimodular { det });
    }
    if trace < 0 {
        return Err(Error::NegativeEigenvalues { trace });
    }
    let t = trace as f64;
    let disc = (t * t - 4.0).sqrt();
    let large_eig = (t + disc) / 2.0;
    let small_eig = 2.0 / (t + disc);
    Ok(ToralAutomorphism {
        matrix,
        trace,
        small_eig,
        large_eig,
        e_s: eigvec(&matrix, small_eig),
        e_u: eigvec(&matrix, large_eig),
    })
}

/// Eigenvalues `mu_hat < mu < 1 < lam < lam_hat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenQuadruple {
    pub mu_hat: f64,
    pub mu: f64,
    pub lam: f64,
    pub lam_hat: f64,
}

impl EigenQuadruple {
    pub fn new(mu_hat: f64, mu: f64, lam: f64, lam_hat: f64) -> Result<Self> {
        let q = Self { mu_hat, mu, lam, lam_hat };
        if !(0.0 < mu_hat && mu_hat < mu && mu < 1.0 && 1.0 < lam && lam < lam_hat && lam_hat.is_finite()) {
            return Err(crate::error::invalid(alloc::format!(
                "eigenvalues must satisfy 0 < mu_hat < mu < 1 < lam < lam_hat, got {:?}",
                q.as_array()
            )));
        }
        Ok(q)
    }

    pub fn from_array(v: [f64; 4]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.mu_hat, self.mu, self.lam, self.lam_hat]
    }

    /// `(lam_A, mu_B, 1/mu_B, 1/lam_A)` for the linear skew product over
    /// `A` in the base and `B` in the fiber.
    pub fn of_skew_product(a: &ToralAutomorphism, b: &ToralAutomorphism) -> Result<Self> {
        Self::new(a.small_eig, b.small_eig, b.large_eig, a.large_eig)
    }

    /// `(1/lam_hat, 1/lam, 1/mu, 1/mu_hat)`.
    pub fn inverted(&self) -> Self {
        Self {
            mu_hat: 1.0 / self.lam_hat,
            mu: 1.0 / self.lam,
            lam: 1.0 / self.mu,
            lam_hat: 1.0 / self.mu_hat,
        }
    }

    pub fn center_product(&self) -> f64 {
        self.mu * self.lam
    }
}

/// A relation `lambda_i = Lambda^alpha` among the eigenvalues.
/// `index` is zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resonance {
    pub index: usize,
    pub alpha: [i32; 4],
}

pub const DEFAULT_RESONANCE_RTOL: f64 = 1e-9;

/// Every `(i, alpha)` with `|alpha|_1 <= max_degree`, `alpha != e_i` and
/// `|lambda_i - Lambda^alpha| < rtol * lambda_i`.
pub fn check_nonresonance(q: &EigenQuadruple, max_degree: u32, rtol: f64) -> Vec<Resonance> {
    let l = q.as_array();
    let d = max_degree as i32;
    let mut out = Vec::new();
    let mut alphas = Vec::new();
    for a0 in -d..=d {
        for a1 in -d..=d {
            for a2 in -d..=d {
                for a3 in -d..=d {
                    let a = [a0, a1, a2, a3];
                    if a.iter().map(|x| x.abs()).sum::<i32>() <= d {
                        alphas.push(a);
                    }
                }
            }
        }
    }
    for i in 0..4 {
        for a in &alphas {
            let mut unit = [0; 4];
            unit[i] = 1;
            if *a == unit {
                continue;
            }
            let p: f64 = (0..4).map(|k| l[k].powi(a[k])).product();
            if (l[i] - p).abs() < rtol * l[i] {
                out.push(Resonance { index: i, alpha: *a });
            }
        }
    }
    out
}

/// A point of the 4-torus with rational coordinates `num[i] / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalTorusPoint {
    pub num: [u64; 4],
    pub den: u64,
}

impl RationalTorusPoint {
    pub fn to_f64(&self) -> [f64; 4] {
        let d = self.den as f64;
        [
            self.num[0] as f64 / d,
            self.num[1] as f64 / d,
            self.num[2] as f64 / d,
            self.num[3] as f64 / d,
        ]
    }

    /// Image under the linear product map `(x, y) -> (A x, B y)`, exactly.
    pub fn apply_linear(&self, a: &IMat2, b: &IMat2) -> Self {
        let d = self.den as i128;
        let n = self.num.map(|x| x as i128);
        let img = |m: &IMat2, x: i128, y: i128| {
            (
                (m[0][0] as i128 * x + m[0][1] as i128 * y).rem_euclid(d) as u64,
                (m[1][0] as i128 * x + m[1][1] as i128 * y).rem_euclid(d) as u64,
            )
        };
        let (x0, x1) = img(a, n[0], n[1]);
        let (y0, y1) = img(b, n[2], n[3]);
        Self { num: [x0, x1, y0, y1], den: self.den }
    }

    /// Exact test of `L_0^n(z) = z` for the linear product map.
    pub fn is_periodic(&self, a: &ToralAutomorphism, b: &ToralAutomorphism, n: u32) -> Result<bool> {
        let pa = mat_pow(a.matrix(), n).ok_or(Error::IntegerOverflow { context: "matrix power" })?;
        let pb = mat_pow(b.matrix(), n).ok_or(Error::IntegerOverflow { context: "matrix power" })?;
        let d = self.den as i128;
        let n = self.num.map(|x| x as i128);
        let check = |m: &IMat2, x: i128, y: i128| -> Option<bool> {
            let u = (m[0][0] as i128).checked_mul(x)?.checked_add((m[0][1] as i128).checked_mul(y)?)?;
            let v = (m[1][0] as i128).checked_mul(x)?.checked_add((m[1][1] as i128).checked_mul(y)?)?;
            Some((u - x).rem_euclid(d) == 0 && (v - y).rem_euclid(d) == 0)
        };
        let ok_a = check(&pa, n[0], n[1]).ok_or(Error::IntegerOverflow { context: "periodicity check" })?;
        let ok_b = check(&pb, n[2], n[3]).ok_or(Error::IntegerOverflow { context: "periodicity check" })?;
        Ok(ok_a && ok_b)
    }
}

/// Solutions `x` in `[0,1)^2` of `(M^n - I) x` in `Z^2`, as numerators over
/// `|det(M^n - I)|`.
fn periodic_points_factor(m: &IMat2, n: u32) -> Result<(Vec<[i64; 2]>, i64)> {
    let ovf = |context| Error::IntegerOverflow { context };
    let p = mat_pow(m, n).ok_or(ovf("matrix power"))?;
    let nm = [
        [p[0][0].checked_sub(1).ok_or(ovf("matrix power"))?, p[0][1]],
        [p[1][0], p[1][1].checked_sub(1).ok_or(ovf("matrix power"))?],
    ];
    let det = checked_det(&nm).ok_or(ovf("determinant"))?;
    let dabs = det.checked_abs().ok_or(ovf("determinant"))?;
    // Column Hermite form: N U = [[h11, 0], [h21, h22]] with U unimodular.
    let g = nm[0][0].gcd(&nm[0][1]);
    let h11 = g;
    // Second column of N U for U = [[x, -b/g], [y, a/g]], x a + y b = g.
    let (a, b) = (nm[0][0] / g, nm[0][1] / g);
    let h22 = (nm[1][0] as i128 * -(b as i128) + nm[1][1] as i128 * a as i128).abs();
    if h11 as i128 * h22 != dabs as i128 {
        return Err(ovf("Hermite normal form"));
    }
    let h22 = h22 as i64;
    let adj = [[nm[1][1], -nm[0][1]], [-nm[1][0], nm[0][0]]];
    let sign = det.signum() as i128;
    let mut out = Vec::with_capacity(dabs as usize);
    for i in 0..h11 {
        for j in 0..h22 {
            let u = (adj[0][0] as i128 * i as i128 + adj[0][1] as i128 * j as i128) * sign;
            let v = (adj[1][0] as i128 * i as i128 + adj[1][1] as i128 * j as i128) * sign;
            out.push([u.rem_euclid(dabs as i128) as i64, v.rem_euclid(dabs as i128) as i64]);
        }
    }
    Ok((out, dabs))
}

/// All points with `L_0^n(z) = z` for the linear product map, where
/// `L_0(x, y) = (A x, B y)`. The list has `|det(A^n - I)| |det(B^n - I)|`
/// entries, ordered lexicographically by the base then the fiber factor.
pub fn periodic_points_linear(
    a: &ToralAutomorphism,
    b: &ToralAutomorphism,
    n: u32,
    cap: u64,
) -> Result<Vec<RationalTorusPoint>> {
    if n == 0 {
        return Err(crate::error::invalid("period must be at least 1"));
    }
    let ca = a.periodic_count(n)?;
    let cb = b.periodic_count(n)?;
    let count = ca as u128 * cb as u128;
    if count > cap as u128 {
        return Err(Error::EnumerationCapExceeded { count, cap });
    }
    let (pa, da) = periodic_points_factor(a.matrix(), n)?;
    let (pb, db) = periodic_points_factor(b.matrix(), n)?;
    let den = da.lcm(&db);
    let (sa, sb) = (den / da, den / db);
    let mut out = Vec::with_capacity(count as usize);
    for xa in &pa {
        for xb in &pb {
            out.push(RationalTorusPoint {
                num: [
                    (xa[0] * sa) as u64,
                    (xa[1] * sa) as u64,
                    (xb[0] * sb) as u64,
                    (xb[1] * sb) as u64,
                ],
                den: den as u64,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    const A: IMat2 = [[3, 1], [2, 1]];
    const B: IMat2 = [[2, 1], [1, 1]];

    #[test]
    fn cat_map_eigendata() {
        let b = hyperbolic_eigen(B).unwrap();
        assert!((b.small_eig() - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((b.small_eig() * b.large_eig() - 1.0).abs() < 1e-14);
        let a = hyperbolic_eigen(A).unwrap();
        assert!((a.small_eig() - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        for t in [&a, &b] {
            for (l, v) in [(t.small_eig(), t.e_s()), (t.large_eig(), t.e_u())] {
                let mv = t.apply(v);
                assert!((mv[0] - l * v[0]).abs() < 1e-12 && (mv[1] - l * v[1]).abs() < 1e-12);
                assert!(v[0] > 0.0);
            }
        }
    }

    #[test]
    fn degenerate_matrices_are_rejected() {
        assert_eq!(hyperbolic_eigen([[1, 1], [1, 0]]), Err(Error::NotHyperbolic { trace: 1 }));
        assert_eq!(hyperbolic_eigen([[3, 1], [1, 0]]), Err(Error::NotUnimodular { det: -1 }));
        assert_eq!(hyperbolic_eigen([[-2, 1], [1, -1]]), Err(Error::NegativeEigenvalues { trace: -3 }));
        assert!(matches!(hyperbolic_eigen([[1, 1], [0, 1]]), Err(Error::NotHyperbolic { .. })));
    }

    #[test]
    fn linear_periodic_counts() {
        let a = hyperbolic_eigen(A).unwrap();
        let b = hyperbolic_eigen(B).unwrap();
        let pts = periodic_points_linear(&a, &b, 1, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().any(|p| p.num == [0; 4]));
        let pts = periodic_points_linear(&b, &b, 2, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(pts.len(), 25);
        let set: BTreeSet<_> = pts.iter().map(|p| p.to_f64().map(f64::to_bits)).collect();
        assert_eq!(set.len(), 25);
        for p in &pts {
            assert!(p.is_periodic(&b, &b, 2).unwrap());
        }
    }

    #[test]
    fn enumeration_cap() {
        let a = hyperbolic_eigen(A).unwrap();
        let b = hyperbolic_eigen(B).unwrap();
        let err = periodic_points_linear(&a, &b, 6, 1000).unwrap_err();
        assert_eq!(err, Error::EnumerationCapExceeded { count: 2700 * 320, cap: 1000 });
    }

    #[test]
    fn resonance_examples() {
        let q = EigenQuadruple::new(0.25, 0.5, 2.0, 4.0).unwrap();
        let r = check_nonresonance(&q, 3, DEFAULT_RESONANCE_RTOL);
        assert!(r.contains(&Resonance { index: 3, alpha: [0, 0, 2, 0] }));
        assert!(r.contains(&Resonance { index: 3, alpha: [-1, 0, 0, 0] }));
        let q = EigenQuadruple::new(0.2679, 0.3820, 2.6180, 3.7321).unwrap();
        assert!(check_nonresonance(&q, 3, DEFAULT_RESONANCE_RTOL).is_empty());
    }

    #[test]
    fn exact_skew_product_eigenvalues_are_resonant() {
        // lam_A * (1/lam_A) = 1 and mu_B = (1/mu_B)^{-1} hold algebraically.
        let a = hyperbolic_eigen(A).unwrap();
        let b = hyperbolic_eigen(B).unwrap();
        let q = EigenQuadruple::of_skew_product(&a, &b).unwrap();
        let r = check_nonresonance(&q, 3, DEFAULT_RESONANCE_RTOL);
        assert!(r.contains(&Resonance { index: 1, alpha: [0, 0, -1, 0] }));
    }
}
