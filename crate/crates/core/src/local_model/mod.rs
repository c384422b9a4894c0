//! A linear hyperbolic fixed point of a section map with return time
//! `tau`, glued to itself along a homoclinic excursion. Periods of the
//! shadowing orbits are computed by Newton and compared with the
//! closed-form leading coefficient `xi_inf (t_ws - P_p)`.

mod chart;
mod family;
mod model;
mod poly;
mod shadowing;

pub use chart::{coarse_chart_check, CoarseChartReport, Shear, ADAPTED_TOL};
pub use family::{family_sign_scan, sign_changes, Crossing, FamilyPoint, ModelFamily, SignScanReport, SIGN_ZERO_REL, ZETA_MIN};
pub use model::{
    compute_pp, compute_templates, omega_closed, pp_closed_form, zeta, Gluing, LocalModel, ReturnTime, TemplateData,
    DEFAULT_TAIL_EPS, TRANSVERSALITY_MAX_COND,
};
pub use poly::{Monomial, Poly4};
pub use shadowing::{
    ell, excursion_from_orbits, excursion_term_check, expansion_experiment, expansion_from_orbits, extrapolate_limit,
    find_n0, find_shadowing_orbit, gamma, shadowing_decay, shadowing_family, theta, ExcursionReport, ExpansionReport,
    ExpansionRow, Precision, ShadowingDecay, ShadowingOptions, ShadowingOrbit, SHADOW_MAX_ITER, SHADOW_NEWTON_TOL,
};
