//! Coarse charts: a change of coordinates `x = S(x_hat)` that keeps the
//! invariant axes and planes of the linear model but does not linearize
//! it. In the new chart the return map is `S^-1 L S`, the return time is
//! `tau o S` and the gluing is `S^-1 Pi_bar S`.

#[allow(unused_imports)]
use num_traits::Float;

use super::model::{zeta, LocalModel, TRANSVERSALITY_MAX_COND};
use super::poly::Poly4;
use crate::error::{invalid, Error, Result};
use crate::linalg::{cond2, mat4_from_rows, Mat2, Mat4, Vec2, Vec4};
use crate::maps::Point4;

/// Tolerance for the numerical adaptedness checks.
pub const ADAPTED_TOL: f64 = 1e-12;
const INVERSE_TOL: f64 = 1e-15;
const MAX_CHART_TERMS: usize = 100_000;

/// `S(x) = linear x + nonlinear(x)` with `nonlinear` of degree >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Shear {
    linear: Mat4,
    nonlinear: [Poly4; 4],
}

impl Shear {
    pub fn new(linear: [[f64; 4]; 4], nonlinear: [Poly4; 4]) -> Result<Self> {
        for p in &nonlinear {
            if p.terms().iter().any(|m| m.degree() < 2 || !m.coef.is_finite()) {
                return Err(invalid("shear nonlinear part must have degree >= 2"));
            }
        }
        let linear = mat4_from_rows(&linear);
        if linear.iter().any(|x| !x.is_finite()) || linear.determinant() == 0.0 {
            return Err(invalid("shear linear part must be invertible"));
        }
        Ok(Self { linear, nonlinear })
    }

    pub fn identity() -> Self {
        Self { linear: Mat4::identity(), nonlinear: Default::default() }
    }

    pub fn linear(&self) -> &Mat4 {
        &self.linear
    }

    pub fn nonlinear(&self) -> &[Poly4; 4] {
        &self.nonlinear
    }

    pub fn apply(&self, x: &Point4) -> Point4 {
        let v = self.linear * Vec4::from_column_slice(x);
        core::array::from_fn(|i| v[i] + self.nonlinear[i].value(x))
    }

    pub fn differential(&self, x: &Point4) -> Mat4 {
        let mut d = self.linear;
        for i in 0..4 {
            let g = self.nonlinear[i].gradient(x);
            for j in 0..4 {
                d[(i, j)] += g[j];
            }
        }
        d
    }

    /// `S^-1(y)` by Newton from the linear inverse.
    pub fn inverse(&self, y: &Point4) -> Result<Point4> {
        let lin_inv = self.linear.try_inverse().ok_or_else(|| invalid("singular shear"))?;
        let v = lin_inv * Vec4::from_column_slice(y);
        let mut x: Point4 = core::array::from_fn(|i| v[i]);
        let mut res = f64::INFINITY;
        for _ in 0..60 {
            let sx = self.apply(&x);
            let r = Vec4::from_fn(|i, _| sx[i] - y[i]);
            res = r.amax();
            if res <= INVERSE_TOL * (1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
                return Ok(x);
            }
            let step = self.differential(&x).lu().solve(&r).ok_or(Error::NewtonDiverged { residual: res })?;
            for i in 0..4 {
                x[i] -= step[i];
            }
        }
        if res < 1e-12 {
            Ok(x)
        } else {
            Err(Error::NewtonDiverged { residual: res })
        }
    }

    /// The axis, plane and tangency conditions of a coarse chart,
    /// checked on sample points.
    pub fn check_adapted(&self) -> Result<()> {
        let samples = [-0.9, -0.5, -0.2, 0.3, 0.6, 0.95];
        let tol = |v: &Point4| ADAPTED_TOL * (1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        let vanish = |v: &Point4, idx: &[usize]| idx.iter().all(|&i| v[i].abs() <= tol(v));
        let fail = |condition| Err(Error::ChartNotAdapted { condition });
        for &a in &samples {
            for &b in &samples {
                if !vanish(&self.apply(&[a, b, 0.0, 0.0]), &[2, 3]) {
                    return fail("stable plane");
                }
                if !vanish(&self.apply(&[0.0, 0.0, a, b]), &[0, 1]) {
                    return fail("unstable plane");
                }
            }
            if !vanish(&self.apply(&[a, 0.0, 0.0, 0.0]), &[1, 2, 3]) {
                return fail("strong-stable axis");
            }
            if !vanish(&self.apply(&[0.0, 0.0, 0.0, a]), &[0, 1, 2]) {
                return fail("strong-unstable axis");
            }
        }
        let d0 = self.differential(&[0.0; 4]);
        let col = |j: usize| -> Point4 { core::array::from_fn(|i| d0[(i, j)]) };
        let ws = col(1);
        if !vanish(&ws, &[0, 2, 3]) || !(ws[1] > 0.0) {
            return fail("weak-stable tangency");
        }
        let wu = col(2);
        if !vanish(&wu, &[0, 1, 3]) || !(wu[2] > 0.0) {
            return fail("weak-unstable tangency");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseChartReport {
    /// Second stable coordinate of `q'` in the new chart.
    pub xi_inf_circ: f64,
    pub eta_inf_circ: [f64; 2],
    pub t_ws_hat: f64,
    pub pp_hat: f64,
    /// `t_ws_hat - pp_hat`.
    pub zeta_hat: f64,
    /// The same quantity in the linearizing chart.
    pub zeta: f64,
    /// The expansion coefficient the sign is compared against.
    pub omega: f64,
    pub signs_agree: bool,
}

impl CoarseChartReport {
    pub fn zeta_ratio(&self) -> f64 {
        self.zeta_hat / self.zeta
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Recomputes `xi_inf` and `zeta` in the chart `x = S(x_hat)` and compares
/// `sign(xi_inf_circ * zeta_hat)` with `sign(omega)`.
pub fn coarse_chart_check(m: &LocalModel, shear: &Shear, omega: f64, tail_eps: f64) -> Result<CoarseChartReport> {
    shear.check_adapted()?;
    m.require_center_expanding()?;
    let g = &m.gluing;
    let q = g.q();
    let q_hat = shear.inverse(&q)?;
    let qp_hat = shear.inverse(&g.q_prime())?;
    let ds_q = shear.differential(&q_hat);
    let ds_qp_inv = shear
        .differential(&qp_hat)
        .try_inverse()
        .ok_or_else(|| invalid("shear differential is singular at q'"))?;

    // Template in the new chart.
    let dpi = ds_qp_inv * g.linear() * ds_q;
    let b = Mat2::new(dpi[(2, 2)], dpi[(2, 3)], dpi[(3, 2)], dpi[(3, 3)]);
    let c = cond2(&b);
    if !(c < TRANSVERSALITY_MAX_COND) {
        return Err(Error::TransversalityFailure { condition: c });
    }
    let x = b.lu().solve(&-Vec2::new(dpi[(2, 1)], dpi[(3, 1)])).ok_or(Error::TransversalityFailure { condition: c })?;
    let v_hat = Vec4::new(0.0, 1.0, x[0], x[1]);
    let dtb = g.taubar_linear();
    let t_ws_hat = Vec4::from_column_slice(&dtb).dot(&(ds_q * v_hat));

    // Series along the backward orbit of q_hat, weighted by the xi-entry
    // of D(S^-1 L^-l S) at q_hat.
    let e = m.eig.as_array();
    let e_xi_q = ds_q.column(1).into_owned();
    let mut acc = crate::sum::CompensatedSum::new();
    let mut small = 0;
    for l in 1..=MAX_CHART_TERMS {
        let li = l as i32;
        let xl: Point4 = core::array::from_fn(|i| e[i].powi(-li) * q[i]);
        let xl_hat = shear.inverse(&xl)?;
        let ds_l = shear.differential(&xl_hat);
        let ds_l_inv = ds_l.try_inverse().ok_or_else(|| invalid("shear differential is singular"))?;
        let back = Vec4::from_fn(|i, _| e[i].powi(-li) * e_xi_q[i]);
        let weight = (ds_l_inv * back)[1];
        let grad = Vec4::from_column_slice(&m.tau.mixed().gradient(&xl));
        let d2 = grad.dot(&ds_l.column(1));
        let term = weight * d2;
        acc.add(-term);
        if term.abs() <= tail_eps * (1.0 + acc.value().abs()) {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
        if l == MAX_CHART_TERMS {
            return Err(Error::DivergentSeries { product: m.center_product() });
        }
    }
    let pp_hat = acc.value();
    let zeta_hat = t_ws_hat - pp_hat;
    let xi_inf_circ = qp_hat[1];
    Ok(CoarseChartReport {
        xi_inf_circ,
        eta_inf_circ: [q_hat[2], q_hat[3]],
        t_ws_hat,
        pp_hat,
        zeta_hat,
        zeta: zeta(m, tail_eps)?,
        omega,
        signs_agree: sign(xi_inf_circ * zeta_hat) == sign(omega),
    })
}
