//! Sparse polynomials in four variables `(xi_hat, xi, eta, eta_hat)`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::sum::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub exps: [u32; 4],
    pub coef: f64,
}

impl Monomial {
    pub fn new(exps: [u32; 4], coef: f64) -> Self {
        Self { exps, coef }
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn eval<S: Scalar>(&self, x: &[S; 4]) -> S {
        let mut v = S::from_f64(self.coef);
        for i in 0..4 {
            if self.exps[i] > 0 {
                v = v * x[i].ipow(self.exps[i] as i32);
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly4 {
    terms: Vec<Monomial>,
}

impl Poly4 {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef == 0.0)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).min().unwrap_or(0)
    }

    pub fn eval<S: Scalar>(&self, x: &[S; 4]) -> S {
        let mut acc = S::zero();
        for t in &self.terms {
            acc += t.eval(x);
        }
        acc
    }

    pub fn value(&self, x: &[f64; 4]) -> f64 {
        self.eval(x)
    }

    pub fn partial(&self, i: usize, x: &[f64; 4]) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            let e = t.exps[i];
            if e == 0 {
                continue;
            }
            let mut v = t.coef * e as f64;
            for k in 0..4 {
                let p = if k == i { e - 1 } else { t.exps[k] };
                v *= x[k].powi(p as i32);
            }
            acc += v;
        }
        acc
    }

    pub fn gradient(&self, x: &[f64; 4]) -> [f64; 4] {
        core::array::from_fn(|i| self.partial(i, x))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { terms: self.terms.iter().map(|t| Monomial::new(t.exps, t.coef * c)).collect() }
    }

    /// `(1 - t) self + t other`, matching monomials by exponent.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        let mut terms: Vec<Monomial> = self.terms.iter().map(|m| Monomial::new(m.exps, m.coef * (1.0 - t))).collect();
        for m in &other.terms {
            match terms.iter_mut().find(|x| x.exps == m.exps) {
                Some(x) => x.coef += t * m.coef,
                None => terms.push(Monomial::new(m.exps, t * m.coef)),
            }
        }
        Self { terms }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sum::DoubleWord;
    use alloc::vec;

    #[test]
    fn evaluation_and_gradient() {
        let p = Poly4::new(vec![Monomial::new([0, 1, 1, 0], 0.3), Monomial::new([1, 0, 1, 1], -2.0)]);
        let x = [0.5, -0.25, 2.0, 3.0];
        assert_eq!(p.value(&x), 0.3 * -0.25 * 2.0 - 2.0 * 0.5 * 2.0 * 3.0);
        let g = p.gradient(&x);
        let h = 1e-6;
        for i in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (p.value(&xp) - p.value(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8, "{i}: {fd} vs {}", g[i]);
        }
        let xd = x.map(DoubleWord::from_f64);
        assert_eq!(p.eval(&xd).to_f64(), p.value(&x));
    }

    #[test]
    fn lerp_merges_monomials() {
        let a = Poly4::new(vec![Monomial::new([0, 1, 1, 0], 1.0)]);
        let b = Poly4::new(vec![Monomial::new([0, 1, 1, 0], 3.0), Monomial::new([1, 0, 0, 1], 2.0)]);
        let m = a.lerp(&b, 0.5);
        assert_eq!(m.terms().len(), 2);
        assert_eq!(m.terms()[0].coef, 2.0);
        assert_eq!(m.terms()[1].coef, 1.0);
    }
}
