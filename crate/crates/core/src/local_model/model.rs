//! The section model: linear return map `diag(mu_hat, mu, lam, lam_hat)`
//! with return time `tau`, and a gluing branch `(Pi_bar, T' + tau_bar)`
//! from a neighborhood of `q` on the unstable plane to one of `q'` on the
//! stable plane.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::poly::{Monomial, Poly4};
use crate::error::{invalid, Error, Result};
use crate::linalg::{cond2, mat4_from_rows, Mat2, Mat4, Vec2};
use crate::maps::Point4;
use crate::sum::{CompensatedSum, Scalar};
use crate::torus::{check_nonresonance, EigenQuadruple, DEFAULT_RESONANCE_RTOL};

/// Condition number of the unstable block above which the gluing is
/// treated as tangent.
pub const TRANSVERSALITY_MAX_COND: f64 = 1e6;
pub const DEFAULT_TAIL_EPS: f64 = 1e-17;
const MAX_SERIES_TERMS: usize = 1_000_000;

/// `tau = T + sum c xi_hat^i xi^j eta^k eta_hat^l` over mixed monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnTime {
    t: f64,
    mixed: Poly4,
}

impl ReturnTime {
    pub fn new(t: f64, mixed: Poly4) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("return time T must be positive"));
        }
        for m in mixed.terms() {
            let e = m.exps;
            if e[0] + e[1] == 0 || e[2] + e[3] == 0 {
                return Err(invalid(alloc::format!("monomial {e:?} is not mixed stable x unstable")));
            }
            if m.degree() > 3 {
                return Err(invalid(alloc::format!("monomial {e:?} has degree above 3")));
            }
            if !m.coef.is_finite() {
                return Err(invalid("non-finite coefficient"));
            }
        }
        Ok(Self { t, mixed })
    }

    pub fn constant(t: f64) -> Result<Self> {
        Self::new(t, Poly4::zero())
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn mixed(&self) -> &Poly4 {
        &self.mixed
    }

    pub fn value(&self, x: &Point4) -> f64 {
        self.t + self.mixed.value(x)
    }

    /// `tau - T`.
    pub fn excess<S: Scalar>(&self, x: &[S; 4]) -> S {
        self.mixed.eval(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gluing {
    q: Point4,
    q_prime: Point4,
    t_prime: f64,
    linear: Mat4,
    quadratic: [Poly4; 4],
    taubar_linear: [f64; 4],
    taubar_quadratic: Poly4,
}

fn check_quadratic(p: &Poly4, what: &str) -> Result<()> {
    if p.terms().iter().any(|m| m.degree() != 2 || !m.coef.is_finite()) {
        return Err(invalid(alloc::format!("{what} must consist of finite degree-2 monomials")));
    }
    Ok(())
}

impl Gluing {
    /// `q = (0, 0, eta[0], eta[1])`, `q' = (xi[0], xi[1], 0, 0)`.
    /// `Pi_bar(z) = q' + linear (z - q) + quadratic(z - q)` and
    /// `tau_bar(z) = taubar_linear . (z - q) + taubar_quadratic(z - q)`.
    pub fn new(
        eta: [f64; 2],
        xi: [f64; 2],
        t_prime: f64,
        linear: [[f64; 4]; 4],
        quadratic: [Poly4; 4],
        taubar_linear: [f64; 4],
        taubar_quadratic: Poly4,
    ) -> Result<Self> {
        if !eta.iter().all(|e| e.abs() < 1.0) || !xi.iter().all(|x| x.abs() < 1.0) {
            return Err(invalid("q and q' must lie in (-1, 1)^4"));
        }
        if !(t_prime > 0.0 && t_prime.is_finite()) {
            return Err(invalid("excursion time T' must be positive"));
        }
        if linear.iter().flatten().chain(taubar_linear.iter()).any(|x| !x.is_finite()) {
            return Err(invalid("non-finite gluing data"));
        }
        for p in &quadratic {
            check_quadratic(p, "gluing map quadratic part")?;
        }
        check_quadratic(&taubar_quadratic, "excursion time quadratic part")?;
        let g = Self {
            q: [0.0, 0.0, eta[0], eta[1]],
            q_prime: [xi[0], xi[1], 0.0, 0.0],
            t_prime,
            linear: mat4_from_rows(&linear),
            quadratic,
            taubar_linear,
            taubar_quadratic,
        };
        g.unstable_block()?;
        Ok(g)
    }

    /// Affine gluing with no quadratic terms.
    pub fn affine(eta: [f64; 2], xi: [f64; 2], t_prime: f64, linear: [[f64; 4]; 4], taubar_linear: [f64; 4]) -> Result<Self> {
        Self::new(eta, xi, t_prime, linear, Default::default(), taubar_linear, Poly4::zero())
    }

    pub fn q(&self) -> Point4 {
        self.q
    }
    pub fn q_prime(&self) -> Point4 {
        self.q_prime
    }
    pub fn eta_inf(&self) -> f64 {
        self.q[2]
    }
    pub fn eta_hat_inf(&self) -> f64 {
        self.q[3]
    }
    pub fn xi_hat_inf(&self) -> f64 {
        self.q_prime[0]
    }
    pub fn xi_inf(&self) -> f64 {
        self.q_prime[1]
    }
    pub fn t_prime(&self) -> f64 {
        self.t_prime
    }
    /// `D Pi_bar(q)`.
    pub fn linear(&self) -> &Mat4 {
        &self.linear
    }
    pub fn quadratic(&self) -> &[Poly4; 4] {
        &self.quadratic
    }
    /// `D tau_bar(q)`.
    pub fn taubar_linear(&self) -> [f64; 4] {
        self.taubar_linear
    }
    pub fn taubar_quadratic(&self) -> &Poly4 {
        &self.taubar_quadratic
    }

    /// The block of `D Pi_bar(q)` taking the unstable plane to the
    /// unstable coordinates, after the transversality check.
    pub fn unstable_block(&self) -> Result<Mat2> {
        let l = &self.linear;
        let b = Mat2::new(l[(2, 2)], l[(2, 3)], l[(3, 2)], l[(3, 3)]);
        let c = cond2(&b);
        if !(c < TRANSVERSALITY_MAX_COND) {
            return Err(Error::TransversalityFailure { condition: c });
        }
        Ok(b)
    }

    fn offset<S: Scalar>(&self, z: &[S; 4]) -> [S; 4] {
        core::array::from_fn(|i| z[i] - S::from_f64(self.q[i]))
    }

    pub fn map<S: Scalar>(&self, z: &[S; 4]) -> [S; 4] {
        let d = self.offset(z);
        core::array::from_fn(|i| {
            let mut acc = S::from_f64(self.q_prime[i]);
            for j in 0..4 {
                acc += S::from_f64(self.linear[(i, j)]) * d[j];
            }
            acc + self.quadratic[i].eval(&d)
        })
    }

    pub fn differential(&self, z: &Point4) -> Mat4 {
        let d: Point4 = core::array::from_fn(|i| z[i] - self.q[i]);
        let mut m = self.linear;
        for i in 0..4 {
            if self.quadratic[i].terms().is_empty() {
                continue;
            }
            let g = self.quadratic[i].gradient(&d);
            for j in 0..4 {
                m[(i, j)] += g[j];
            }
        }
        m
    }

    pub fn taubar<S: Scalar>(&self, z: &[S; 4]) -> S {
        let d = self.offset(z);
        let mut acc = S::zero();
        for j in 0..4 {
            acc += S::from_f64(self.taubar_linear[j]) * d[j];
        }
        acc + self.taubar_quadratic.eval(&d)
    }

    pub fn taubar_gradient(&self, z: &Point4) -> [f64; 4] {
        let d: Point4 = core::array::from_fn(|i| z[i] - self.q[i]);
        let g = self.taubar_quadratic.gradient(&d);
        core::array::from_fn(|j| self.taubar_linear[j] + g[j])
    }

    /// Copy with every parameter interpolated linearly towards `other`.
    pub fn lerp(&self, other: &Self, t: f64) -> Result<Self> {
        let mix = |a: f64, b: f64| (1.0 - t) * a + t * b;
        let lin = self.linear * (1.0 - t) + other.linear * t;
        let mut rows = [[0.0; 4]; 4];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = lin[(i, j)];
            }
        }
        Self::new(
            [mix(self.q[2], other.q[2]), mix(self.q[3], other.q[3])],
            [mix(self.q_prime[0], other.q_prime[0]), mix(self.q_prime[1], other.q_prime[1])],
            mix(self.t_prime, other.t_prime),
            rows,
            core::array::from_fn(|i| self.quadratic[i].lerp(&other.quadratic[i], t)),
            core::array::from_fn(|j| mix(self.taubar_linear[j], other.taubar_linear[j])),
            self.taubar_quadratic.lerp(&other.taubar_quadratic, t),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    pub eig: EigenQuadruple,
    pub tau: ReturnTime,
    pub gluing: Gluing,
}

impl LocalModel {
    /// Rejects eigenvalues with a resonance of order at most 3.
    pub fn new(eig: EigenQuadruple, tau: ReturnTime, gluing: Gluing) -> Result<Self> {
        let r = check_nonresonance(&eig, 3, DEFAULT_RESONANCE_RTOL);
        if !r.is_empty() {
            return Err(Error::Resonant { count: r.len() });
        }
        Ok(Self { eig, tau, gluing })
    }

    pub fn center_product(&self) -> f64 {
        self.eig.center_product()
    }

    pub fn is_center_expanding(&self) -> bool {
        self.center_product() > 1.0
    }

    /// `L^l x` for any integer `l`.
    pub fn linear_power<S: Scalar>(&self, x: &[S; 4], l: i32) -> [S; 4] {
        let e = self.eig.as_array();
        core::array::from_fn(|i| S::from_f64(e[i]).ipow(l) * x[i])
    }

    pub fn require_center_expanding(&self) -> Result<()> {
        if self.is_center_expanding() {
            Ok(())
        } else {
            Err(Error::DivergentSeries { product: self.center_product() })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateData {
    pub t_ws: f64,
    pub t_ss: f64,
    /// Tangent vectors at `q` that `D Pi_bar(q)` sends into the stable
    /// plane: `(0, 1, *, *)` and `(1, 0, *, *)`.
    pub v_ws: [f64; 4],
    pub v_ss: [f64; 4],
    /// Change of the templates under one step of iterative refinement of
    /// the 2x2 solve.
    pub refinement_change: f64,
}

fn stable_lift(l: &Mat4, b: &Mat2, col: usize) -> ([f64; 4], f64) {
    let lu = b.lu();
    let rhs = -Vec2::new(l[(2, col)], l[(3, col)]);
    let x = lu.solve(&rhs).unwrap_or_else(Vec2::zeros);
    let r = rhs - b * x;
    let dx = lu.solve(&r).unwrap_or_else(Vec2::zeros);
    let mut v = [0.0; 4];
    v[col] = 1.0;
    v[2] = x[0];
    v[3] = x[1];
    (v, dx.amax())
}

/// Temporal tilts of the weak- and strong-stable directions at `q`:
/// `t = D tau_bar(q) . v` with `D Pi_bar(q) v` in the stable plane.
pub fn compute_templates(m: &LocalModel) -> Result<TemplateData> {
    let g = &m.gluing;
    let b = g.unstable_block()?;
    let dt = g.taubar_linear();
    let (v_ws, c_ws) = stable_lift(g.linear(), &b, 1);
    let (v_ss, c_ss) = stable_lift(g.linear(), &b, 0);
    let dot = |v: &[f64; 4]| (0..4).map(|i| dt[i] * v[i]).sum::<f64>();
    let scale = dt[2].abs().max(dt[3].abs());
    Ok(TemplateData {
        t_ws: dot(&v_ws),
        t_ss: dot(&v_ss),
        v_ws,
        v_ss,
        refinement_change: scale * c_ws.max(c_ss),
    })
}

fn xi_monomials(tau: &ReturnTime) -> Vec<Monomial> {
    tau.mixed().terms().iter().filter(|m| m.exps[0] == 0 && m.exps[1] == 1).copied().collect()
}

/// `P_p = -sum_{l >= 1} mu^{-l} d_xi tau(0, 0, lam^{-l} eta_inf, lam_hat^{-l} eta_hat_inf)`,
/// summed until the term bound `(mu lam)^{-l} * mass` drops below
/// `tail_eps`.
pub fn compute_pp(m: &LocalModel, tail_eps: f64) -> Result<f64> {
    m.require_center_expanding()?;
    let e = m.eig;
    let (eta, eta_hat) = (m.gluing.eta_inf(), m.gluing.eta_hat_inf());
    let terms = xi_monomials(&m.tau);
    // d_xi of c xi eta^k eta_hat^l at (0, 0, eta, eta_hat).
    let base: Vec<f64> = terms.iter().map(|t| t.coef * eta.powi(t.exps[2] as i32) * eta_hat.powi(t.exps[3] as i32)).collect();
    let mass: f64 = base.iter().map(|b| b.abs()).sum();
    if mass == 0.0 {
        return Ok(0.0);
    }
    // Per-monomial ratio 1 / (mu lam^k lam_hat^l) <= 1 / (mu lam).
    let ratios: Vec<f64> = terms
        .iter()
        .map(|t| 1.0 / (e.mu * e.lam.powi(t.exps[2] as i32) * e.lam_hat.powi(t.exps[3] as i32)))
        .collect();
    let decay = 1.0 / m.center_product();
    let mut acc = CompensatedSum::new();
    let mut bound = mass;
    for l in 1..=MAX_SERIES_TERMS {
        bound *= decay;
        let mut term = CompensatedSum::new();
        for (c, r) in base.iter().zip(&ratios) {
            term.add(c * r.powi(l as i32));
        }
        let t = term.value();
        debug_assert!(t.abs() <= bound * (1.0 + 1e-9));
        acc.add(-t);
        if bound < tail_eps {
            return Ok(acc.value());
        }
    }
    Err(Error::DivergentSeries { product: m.center_product() })
}

/// Geometric-series closed form of `compute_pp`.
pub fn pp_closed_form(m: &LocalModel) -> Result<f64> {
    m.require_center_expanding()?;
    let e = m.eig;
    let (eta, eta_hat) = (m.gluing.eta_inf(), m.gluing.eta_hat_inf());
    Ok(xi_monomials(&m.tau)
        .iter()
        .map(|t| {
            let (k, l) = (t.exps[2] as i32, t.exps[3] as i32);
            -t.coef * eta.powi(k) * eta_hat.powi(l) / (e.mu * e.lam.powi(k) * e.lam_hat.powi(l) - 1.0)
        })
        .sum())
}

/// `zeta = t_ws - P_p`, the leading coefficient per unit `xi_inf`.
pub fn zeta(m: &LocalModel, tail_eps: f64) -> Result<f64> {
    Ok(compute_templates(m)?.t_ws - compute_pp(m, tail_eps)?)
}

/// `omega = xi_inf (t_ws - P_p)`.
pub fn omega_closed(m: &LocalModel, tail_eps: f64) -> Result<f64> {
    Ok(m.gluing.xi_inf() * zeta(m, tail_eps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn eig() -> EigenQuadruple {
        EigenQuadruple::new(0.55, 0.8, 4.0, 7.5).unwrap()
    }

    const ID: [[f64; 4]; 4] = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];

    fn model(tau: Poly4, linear: [[f64; 4]; 4], dtb: [f64; 4]) -> LocalModel {
        let g = Gluing::affine([0.4, 0.3], [0.2, 0.5], 2.0, linear, dtb).unwrap();
        LocalModel::new(eig(), ReturnTime::new(1.0, tau).unwrap(), g).unwrap()
    }

    #[test]
    fn return_time_axes_are_constant() {
        assert!(ReturnTime::new(1.0, Poly4::new(vec![Monomial::new([0, 1, 0, 0], 1.0)])).is_err());
        assert!(ReturnTime::new(1.0, Poly4::new(vec![Monomial::new([1, 1, 1, 1], 1.0)])).is_err());
        let tau = ReturnTime::new(1.0, Poly4::new(vec![Monomial::new([1, 1, 1, 0], 0.7), Monomial::new([0, 1, 0, 1], -0.2)])).unwrap();
        assert_eq!(tau.value(&[0.3, -0.2, 0.0, 0.0]), 1.0);
        assert_eq!(tau.value(&[0.0, 0.0, 0.6, 0.1]), 1.0);
    }

    #[test]
    fn templates_block_diagonal() {
        let m = model(Poly4::zero(), ID, [0.0; 4]);
        let t = compute_templates(&m).unwrap();
        assert_eq!((t.t_ws, t.t_ss), (0.0, 0.0));
        let m = model(Poly4::zero(), ID, [0.1, 0.2, 0.3, 0.4]);
        let t = compute_templates(&m).unwrap();
        assert_eq!(t.v_ws, [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(t.t_ws, 0.2);
        assert_eq!(t.t_ss, 0.1);
    }

    #[test]
    fn templates_with_coupling_match_finite_differences() {
        let lin = [[1.1, 0.2, 0.05, 0.0], [0.1, 0.9, 0.0, 0.07], [0.3, -0.4, 1.2, 0.1], [0.2, 0.25, -0.15, 0.8]];
        let m = model(Poly4::zero(), lin, [0.1, 0.2, 0.3, 0.4]);
        let t = compute_templates(&m).unwrap();
        assert!(t.refinement_change < 1e-12);
        // Move off q along xi, then correct the unstable coordinates so the
        // image lands on the stable plane; the tau_bar change per unit xi
        // is the template.
        let g = &m.gluing;
        let h = 1e-6;
        let q = g.q();
        let mut z = [q[0], q[1] + h, q[2], q[3]];
        for _ in 0..5 {
            let w = g.map(&z);
            let d = g.differential(&z);
            let b = Mat2::new(d[(2, 2)], d[(2, 3)], d[(3, 2)], d[(3, 3)]);
            let s = b.lu().solve(&Vec2::new(-w[2], -w[3])).unwrap();
            z[2] += s[0];
            z[3] += s[1];
        }
        let fd = g.taubar(&z) / h;
        assert!((fd - t.t_ws).abs() < 1e-6, "{fd} vs {}", t.t_ws);
        assert!(t.t_ws != 0.2);
    }

    #[test]
    fn tangent_gluing_is_rejected() {
        let mut lin = ID;
        lin[3][3] = 0.0;
        lin[3][2] = 0.0;
        let err = Gluing::affine([0.4, 0.3], [0.2, 0.5], 2.0, lin, [0.0; 4]).unwrap_err();
        assert!(matches!(err, Error::TransversalityFailure { .. }));
    }

    #[test]
    fn pp_closed_forms() {
        let c = 0.3;
        let m = model(Poly4::new(vec![Monomial::new([0, 1, 1, 0], c)]), ID, [0.0; 4]);
        let pp = compute_pp(&m, DEFAULT_TAIL_EPS).unwrap();
        let expect = -c * 0.4 / (0.8 * 4.0 - 1.0);
        assert!((pp - expect).abs() < 1e-15, "{pp} vs {expect}");
        let m = model(Poly4::new(vec![Monomial::new([1, 0, 1, 0], c), Monomial::new([0, 2, 1, 0], c)]), ID, [0.0; 4]);
        assert_eq!(compute_pp(&m, DEFAULT_TAIL_EPS).unwrap(), 0.0);
        let m = model(Poly4::new(vec![Monomial::new([0, 1, 1, 1], c)]), ID, [0.0; 4]);
        let pp = compute_pp(&m, DEFAULT_TAIL_EPS).unwrap();
        let expect = -c * 0.4 * 0.3 / (0.8 * 4.0 * 7.5 - 1.0);
        assert!((pp - expect).abs() < 1e-16);
        assert!((pp - pp_closed_form(&m).unwrap()).abs() < 1e-16);
    }

    #[test]
    fn center_contracting_series_diverges() {
        let e = EigenQuadruple::new(0.3, 0.45, 2.1, 5.3).unwrap();
        let g = Gluing::affine([0.4, 0.3], [0.2, 0.5], 2.0, ID, [0.0; 4]).unwrap();
        let tau = ReturnTime::new(1.0, Poly4::new(vec![Monomial::new([0, 1, 1, 0], 0.3)])).unwrap();
        let m = LocalModel::new(e, tau, g).unwrap();
        assert!(matches!(compute_pp(&m, DEFAULT_TAIL_EPS), Err(Error::DivergentSeries { .. })));
    }

    #[test]
    fn resonant_model_is_rejected() {
        let e = EigenQuadruple::new(0.25, 0.5, 2.0, 4.0).unwrap();
        let g = Gluing::affine([0.4, 0.3], [0.2, 0.5], 2.0, ID, [0.0; 4]).unwrap();
        let err = LocalModel::new(e, ReturnTime::constant(1.0).unwrap(), g).unwrap_err();
        assert!(matches!(err, Error::Resonant { .. }));
    }
}
