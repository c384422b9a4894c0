//! Suspension flows over a base map with roof `K + log J`. Only the
//! bookkeeping is done here: roof values and flow periods of periodic
//! orbits, which are sums of the roof along the base orbit.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::maps::{Point4, SkewProduct, TorusMap};
use crate::periodic::PeriodicOrbit;
use crate::sum::ExactSum;

/// Orbit residual above which `flow_period` refuses the orbit.
pub const ORBIT_RESIDUAL_MAX: f64 = 1e-10;
/// Points per axis of the grid on which roof positivity is verified.
pub const ROOF_GRID: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SuspensionConfig<F> {
    pub k: f64,
    pub base: F,
}

/// `4 log lam_hat` of the linear part.
pub fn default_k(skew: &SkewProduct) -> f64 {
    4.0 * skew.a.large_eig().ln()
}

impl<F: TorusMap> SuspensionConfig<F> {
    /// Checks the roof on a `ROOF_GRID^4` grid plus any extra points
    /// (bump centers, for instance).
    pub fn new(k: f64, base: F, extra: &[Point4]) -> Result<Self> {
        if !k.is_finite() {
            return Err(invalid("K must be finite"));
        }
        let cfg = Self { k, base };
        let g = ROOF_GRID;
        let h = 1.0 / g as f64;
        for i in 0..g.pow(4) {
            let z = [(i % g) as f64 * h, (i / g % g) as f64 * h, (i / (g * g) % g) as f64 * h, (i / (g * g * g)) as f64 * h];
            cfg.roof(z)?;
        }
        for z in extra {
            cfg.roof(*z)?;
        }
        Ok(cfg)
    }

    pub fn with_default_k(base: F, extra: &[Point4]) -> Result<Self> {
        let k = default_k(base.skew());
        Self::new(k, base, extra)
    }

    pub fn roof(&self, z: Point4) -> Result<f64> {
        let v = self.k + self.base.jacobian(z).ln();
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::NonpositiveRoof { value: v })
        }
    }

    pub fn flow_period(&self, orbit: &PeriodicOrbit) -> Result<FlowPeriodicOrbit> {
        if !(orbit.residual < ORBIT_RESIDUAL_MAX) {
            return Err(invalid(alloc::format!("orbit residual {:e} too large for a flow period", orbit.residual)));
        }
        let roofs = orbit.points.iter().map(|z| self.roof(*z)).collect::<Result<Vec<_>>>()?;
        let mut acc = ExactSum::new();
        acc.extend(roofs);
        Ok(FlowPeriodicOrbit { base_orbit: orbit.clone(), flow_period: acc.value() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowPeriodicOrbit {
    pub base_orbit: PeriodicOrbit,
    /// `n K + sum_i log J(points[i])`.
    pub flow_period: f64,
}
