//! One-parameter families of local models and the scan for sign changes
//! of the expansion coefficient.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::model::{zeta, LocalModel, ReturnTime};
use super::shadowing::{expansion_experiment, ShadowingOptions};
use crate::error::{invalid, Error, Result};
use crate::torus::EigenQuadruple;

/// `|zeta|` below which the leading coefficient counts as vanished.
pub const ZETA_MIN: f64 = 1e-9;
/// Values below this fraction of the largest one are treated as zero
/// when reading off signs.
pub const SIGN_ZERO_REL: f64 = 1e-8;

/// Linear interpolation of every parameter between two models.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily {
    pub start: LocalModel,
    pub end: LocalModel,
}

impl ModelFamily {
    pub fn new(start: LocalModel, end: LocalModel) -> Self {
        Self { start, end }
    }

    pub fn at(&self, s: f64) -> Result<LocalModel> {
        let (a, b) = (&self.start, &self.end);
        let mix = |x: f64, y: f64| (1.0 - s) * x + s * y;
        let ea = a.eig.as_array();
        let eb = b.eig.as_array();
        let eig = EigenQuadruple::from_array(core::array::from_fn(|i| mix(ea[i], eb[i])))?;
        let tau = ReturnTime::new(mix(a.tau.t(), b.tau.t()), a.tau.mixed().lerp(b.tau.mixed(), s))?;
        let gluing = a.gluing.lerp(&b.gluing, s)?;
        LocalModel::new(eig, tau, gluing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyPoint {
    pub s: f64,
    pub xi_inf: f64,
    pub zeta: f64,
    pub omega_fit: f64,
    pub omega_closed: f64,
}

/// A sign change between consecutive nonzero grid values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub lo: f64,
    pub hi: f64,
}

impl Crossing {
    pub fn contains(&self, s: f64) -> bool {
        self.lo <= s && s <= self.hi
    }

    fn overlaps(&self, o: &Crossing) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignScanReport {
    pub points: Vec<FamilyPoint>,
    pub omega_crossings: Vec<Crossing>,
    pub xi_crossings: Vec<Crossing>,
    /// Every omega crossing meets a xi crossing and vice versa.
    pub consistent: bool,
}

/// Brackets of sign changes; values within `SIGN_ZERO_REL` of the largest
/// magnitude are skipped.
pub fn sign_changes(grid: &[f64], values: &[f64]) -> Vec<Crossing> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = Vec::new();
    let mut prev: Option<(f64, bool)> = None;
    for (s, v) in grid.iter().zip(values) {
        if v.abs() <= SIGN_ZERO_REL * scale || *v == 0.0 {
            continue;
        }
        let pos = *v > 0.0;
        if let Some((ps, pp)) = prev {
            if pp != pos {
                out.push(Crossing { lo: ps, hi: *s });
            }
        }
        prev = Some((*s, pos));
    }
    out
}

/// Runs the expansion at each grid point of the family and reports the
/// sign changes of `omega` next to those of `xi_inf`.
pub fn family_sign_scan<F>(family: F, grid: &[f64], n_min: usize, n_max: usize, opts: &ShadowingOptions) -> Result<SignScanReport>
where
    F: Fn(f64) -> Result<LocalModel>,
{
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("grid must be strictly increasing with at least two points"));
    }
    let mut points = Vec::with_capacity(grid.len());
    for &s in grid {
        let m = family(s)?;
        let z = zeta(&m, opts.tail_eps)?;
        if z.abs() < ZETA_MIN {
            return Err(Error::ZetaVanished { s, zeta: z });
        }
        let rep = expansion_experiment(&m, n_min, n_max, opts)?;
        points.push(FamilyPoint { s, xi_inf: m.gluing.xi_inf(), zeta: z, omega_fit: rep.omega_fit, omega_closed: rep.omega_closed });
    }
    let omega: Vec<f64> = points.iter().map(|p| p.omega_fit).collect();
    let xi: Vec<f64> = points.iter().map(|p| p.xi_inf).collect();
    let omega_crossings = sign_changes(grid, &omega);
    let xi_crossings = sign_changes(grid, &xi);
    let consistent = omega_crossings.len() == xi_crossings.len()
        && omega_crossings.iter().all(|c| xi_crossings.iter().any(|x| c.overlaps(x)))
        && xi_crossings.iter().all(|x| omega_crossings.iter().any(|c| c.overlaps(x)));
    Ok(SignScanReport { points, omega_crossings, xi_crossings, consistent })
}
