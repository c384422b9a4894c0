//! Versioned JSON documents read and written by the command-line driver.
//!
//! Input documents carry `"schema_version": 1` at the top level. Documents
//! that can also appear nested (maps, local models) accept an optional
//! version there. Unknown fields are rejected everywhere.

use llave_core::fourier::TrigMap;
use llave_core::linalg::mat4_to_rows;
use llave_core::local_model::{Gluing, LocalModel, Monomial, Poly4, ReturnTime, Shear};
use llave_core::maps::{PerturbedMap, SkewProduct};
use llave_core::torus::{hyperbolic_eigen, EigenQuadruple, IMat2};
use llave_core::{Error, Result};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn check_version(v: Option<u32>, required: bool) -> Result<()> {
    match v {
        Some(SCHEMA_VERSION) => Ok(()),
        Some(other) => Err(invalid(format!("unsupported schema_version {other} (expected {SCHEMA_VERSION})"))),
        None if required => Err(invalid("missing schema_version")),
        None => Ok(()),
    }
}

/// Top-level documents expose their version so `parse` can check it.
pub trait Versioned {
    fn schema_version(&self) -> Option<u32>;
}

/// Parses a top-level document and checks its version.
pub fn parse<T: DeserializeOwned + Versioned>(text: &str) -> Result<T> {
    let doc: T = serde_json::from_str(text).map_err(|e| invalid(format!("schema: {e}")))?;
    check_version(doc.schema_version(), true)?;
    Ok(doc)
}

macro_rules! versioned {
    ($($t:ty),*) => {$(
        impl Versioned for $t {
            fn schema_version(&self) -> Option<u32> {
                Some(self.schema_version)
            }
        }
    )*};
}

macro_rules! optionally_versioned {
    ($($t:ty),*) => {$(
        impl Versioned for $t {
            fn schema_version(&self) -> Option<u32> {
                self.schema_version
            }
        }
    )*};
}

// ---------------------------------------------------------------- inputs

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub k: [i64; 2],
    pub re: [f64; 2],
    pub im: [f64; 2],
}

/// `phi(x) = sum_k (re + i im) e^{2 pi i <k, x>}`; both `k` and `-k` listed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigMapDoc {
    pub terms: Vec<TermDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_eps: Option<f64>,
}

impl TrigMapDoc {
    pub fn to_core(&self) -> Result<TrigMap> {
        TrigMap::from_terms(
            self.terms
                .iter()
                .map(|t| (t.k, [Complex64::new(t.re[0], t.im[0]), Complex64::new(t.re[1], t.im[1])])),
            self.truncation_eps.unwrap_or(0.0),
        )
    }

    pub fn from_core(f: &TrigMap) -> Self {
        Self {
            terms: f
                .terms()
                .map(|(k, c)| TermDoc { k: *k, re: [c[0].re, c[1].re], im: [c[0].im, c[1].im] })
                .collect(),
            truncation_eps: Some(f.truncation_eps()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixPairDoc {
    pub schema_version: u32,
    #[serde(rename = "A")]
    pub a: IMat2,
    #[serde(rename = "B")]
    pub b: IMat2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohomologyDoc {
    pub schema_version: u32,
    #[serde(rename = "A")]
    pub a: IMat2,
    #[serde(rename = "B")]
    pub b: IMat2,
    pub g: TrigMapDoc,
}

pub const BUMP_PROFILE: &str = "quintic";

fn default_profile() -> String {
    BUMP_PROFILE.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpDoc {
    pub center: [f64; 4],
    pub radius: f64,
    /// Stretch along (strong-stable, weak-stable, weak-unstable, strong-unstable).
    pub coefficients: [f64; 4],
}

/// A skew product `L_phi` with optional localized bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(rename = "A")]
    pub a: IMat2,
    #[serde(rename = "B")]
    pub b: IMat2,
    #[serde(default)]
    pub phi: TrigMapDoc,
    #[serde(default = "default_profile")]
    pub bump_profile: String,
    #[serde(default)]
    pub bumps: Vec<BumpDoc>,
    /// Roof constant of the suspension; defaults to `4 log lam_hat`.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

impl MapDoc {
    pub fn to_core(&self) -> Result<PerturbedMap> {
        check_version(self.schema_version, false)?;
        if self.bump_profile != BUMP_PROFILE {
            return Err(invalid(format!("unknown bump profile {:?}", self.bump_profile)));
        }
        let base = SkewProduct::new(hyperbolic_eigen(self.a)?, hyperbolic_eigen(self.b)?, self.phi.to_core()?);
        let specs: Vec<_> = self.bumps.iter().map(|b| (b.center, b.radius, b.coefficients)).collect();
        PerturbedMap::from_specs(base, &specs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatcherDoc {
    Conjugacy,
    Continuation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraDoc {
    pub schema_version: u32,
    #[serde(rename = "F")]
    pub f: MapDoc,
    #[serde(rename = "G")]
    pub g: MapDoc,
    pub matcher: MatcherDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialDoc {
    /// Exponents of `(xi_hat, xi, eta, eta_hat)`.
    pub exps: [u32; 4],
    pub coef: f64,
}

fn poly(terms: &[MonomialDoc]) -> Poly4 {
    Poly4::new(terms.iter().map(|m| Monomial::new(m.exps, m.coef)).collect())
}

fn poly_doc(p: &Poly4) -> Vec<MonomialDoc> {
    p.terms().iter().map(|m| MonomialDoc { exps: m.exps, coef: m.coef }).collect()
}

fn poly4(v: &[Vec<MonomialDoc>], what: &str) -> Result<[Poly4; 4]> {
    match v.len() {
        0 => Ok(Default::default()),
        4 => Ok(core::array::from_fn(|i| poly(&v[i]))),
        n => Err(invalid(format!("{what} needs 4 components, got {n}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluingDoc {
    /// `(0, 0, eta_inf, eta_hat_inf)`.
    pub q: [f64; 4],
    /// `(xi_hat_inf, xi_inf, 0, 0)`.
    pub q_prime: [f64; 4],
    #[serde(rename = "T_prime")]
    pub t_prime: f64,
    pub linear: [[f64; 4]; 4],
    #[serde(default)]
    pub quadratic: Vec<Vec<MonomialDoc>>,
    pub taubar_linear: [f64; 4],
    #[serde(default)]
    pub taubar_quadratic: Vec<MonomialDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalModelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    /// `(mu_hat, mu, lam, lam_hat)`.
    pub eig: [f64; 4],
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(default)]
    pub tau_terms: Vec<MonomialDoc>,
    pub gluing: GluingDoc,
}

impl LocalModelDoc {
    pub fn to_core(&self) -> Result<LocalModel> {
        check_version(self.schema_version, false)?;
        let g = &self.gluing;
        if g.q[0] != 0.0 || g.q[1] != 0.0 {
            return Err(invalid("q must lie on the unstable axis plane (0, 0, eta, eta_hat)"));
        }
        if g.q_prime[2] != 0.0 || g.q_prime[3] != 0.0 {
            return Err(invalid("q_prime must lie on the stable plane (xi_hat, xi, 0, 0)"));
        }
        let gluing = Gluing::new(
            [g.q[2], g.q[3]],
            [g.q_prime[0], g.q_prime[1]],
            g.t_prime,
            g.linear,
            poly4(&g.quadratic, "quadratic")?,
            g.taubar_linear,
            poly(&g.taubar_quadratic),
        )?;
        let tau = ReturnTime::new(self.t, poly(&self.tau_terms))?;
        LocalModel::new(EigenQuadruple::from_array(self.eig)?, tau, gluing)
    }

    pub fn from_core(m: &LocalModel) -> Self {
        let g = &m.gluing;
        let quad = g.quadratic();
        Self {
            schema_version: None,
            eig: m.eig.as_array(),
            t: m.tau.t(),
            tau_terms: poly_doc(m.tau.mixed()),
            gluing: GluingDoc {
                q: g.q(),
                q_prime: g.q_prime(),
                t_prime: g.t_prime(),
                linear: mat4_to_rows(g.linear()),
                quadratic: if quad.iter().all(Poly4::is_zero) { Vec::new() } else { quad.iter().map(poly_doc).collect() },
                taubar_linear: g.taubar_linear(),
                taubar_quadratic: poly_doc(g.taubar_quadratic()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShearDoc {
    pub name: String,
    pub linear: [[f64; 4]; 4],
    #[serde(default)]
    pub nonlinear: Vec<Vec<MonomialDoc>>,
}

impl ShearDoc {
    pub fn to_core(&self) -> Result<Shear> {
        Shear::new(self.linear, poly4(&self.nonlinear, "nonlinear")?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShearsDoc {
    pub schema_version: u32,
    pub model: LocalModelDoc,
    pub shears: Vec<ShearDoc>,
}

/// Every parameter interpolated linearly from `start` (s = 0) to `end` (s = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    pub schema_version: u32,
    pub start: LocalModelDoc,
    pub end: LocalModelDoc,
}

versioned!(MatrixPairDoc, CohomologyDoc, SpectraDoc, ShearsDoc, FamilyDoc);
optionally_versioned!(MapDoc, LocalModelDoc);

// --------------------------------------------------------------- reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomorphismDoc {
    pub matrix: IMat2,
    pub det: i64,
    pub trace: i64,
    pub small_eig: f64,
    pub large_eig: f64,
    pub e_s: [f64; 2],
    pub e_u: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceDoc {
    /// One-based eigenvalue index.
    pub index: usize,
    pub alpha: [i32; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenReport {
    pub schema_version: u32,
    #[serde(rename = "A")]
    pub a: AutomorphismDoc,
    #[serde(rename = "B")]
    pub b: AutomorphismDoc,
    /// `(lam_A, mu_B, 1/mu_B, 1/lam_A)`.
    pub quadruple: [f64; 4],
    pub resonances: Vec<ResonanceDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitCoefficient {
    pub seed: [i64; 2],
    pub n: usize,
    pub k: [i64; 2],
    /// Cosine-series coefficient of `psi` at `k`, in the `(e_s, e_u)` basis of B.
    pub cos_s: f64,
    pub cos_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohomologyReport {
    pub schema_version: u32,
    pub psi: TrigMapDoc,
    pub residual_sup: f64,
    pub truncation_eps: f64,
    pub predicted_alpha: f64,
    pub orbit_steps: usize,
    pub orbit_coefficients: Vec<OrbitCoefficient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSampleDoc {
    pub scale: f64,
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderEstimateDoc {
    pub method: String,
    pub alpha_hat: f64,
    pub fit_r2: f64,
    pub scale_range: [f64; 2],
    pub trusted: bool,
    pub samples: Vec<HolderSampleDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderReport {
    pub schema_version: u32,
    pub predicted_alpha: f64,
    pub estimates: Vec<HolderEstimateDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodCensus {
    pub period: usize,
    /// `|det(A^n - I)| |det(B^n - I)|`.
    pub expected: u64,
    /// Distinct Newton solutions from the linear seeds.
    pub found: u64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingDoc {
    pub depth: usize,
    pub e_ss: [f64; 4],
    pub e_ws: [f64; 4],
    pub e_wu: [f64; 4],
    pub e_uu: [f64; 4],
    pub rates: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitDoc {
    pub period: usize,
    pub points: Vec<[f64; 4]>,
    pub eigmoduli: [f64; 4],
    pub center_class: String,
    pub residual: f64,
    pub splitting: SplittingDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicReport {
    pub schema_version: u32,
    pub census: Vec<PeriodCensus>,
    /// Orbit records for periods with at most `detail_cap` points.
    pub detail_cap: usize,
    pub orbits: Vec<OrbitDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraRow {
    pub period: usize,
    pub point: [f64; 4],
    pub moduli_f: [f64; 4],
    pub moduli_g: [f64; 4],
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraReport {
    pub schema_version: u32,
    pub max_gap: f64,
    pub periods_checked: usize,
    pub pairs: Vec<SpectraRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowOrbitRow {
    pub period: usize,
    pub point: [f64; 4],
    pub flow_period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuspensionReport {
    pub schema_version: u32,
    #[serde(rename = "K")]
    pub k: f64,
    pub orbits: Vec<FlowOrbitRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionRowDoc {
    pub n: usize,
    #[serde(rename = "T_n")]
    pub t_n: f64,
    pub omega_hat_n: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionReportDoc {
    pub schema_version: u32,
    pub n_min: usize,
    pub n_max: usize,
    pub omega_fit: f64,
    pub omega_closed: f64,
    pub relative_gap: f64,
    pub t_ws: f64,
    pub pp: f64,
    pub residual_rate: Option<f64>,
    pub theta: f64,
    pub gamma: f64,
    pub usable_from: usize,
    pub rows: Vec<ExpansionRowDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyPointDoc {
    pub s: f64,
    pub xi_inf: f64,
    pub zeta: f64,
    pub omega_fit: f64,
    pub omega_closed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignScanReportDoc {
    pub schema_version: u32,
    pub points: Vec<FamilyPointDoc>,
    pub omega_crossings: Vec<[f64; 2]>,
    pub xi_crossings: Vec<[f64; 2]>,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartRow {
    pub shear: String,
    pub xi_inf_circ: f64,
    pub t_ws_hat: f64,
    pub pp_hat: f64,
    pub zeta_hat: f64,
    pub zeta: f64,
    pub omega: f64,
    pub signs_agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseCheckReport {
    pub schema_version: u32,
    pub omega_fit: f64,
    pub charts: Vec<ChartRow>,
}

versioned!(
    EigenReport,
    CohomologyReport,
    HolderReport,
    PeriodicReport,
    SpectraReport,
    SuspensionReport,
    ExpansionReportDoc,
    SignScanReportDoc,
    CoarseCheckReport
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_or_wrong_version_is_rejected() {
        let e = parse::<MatrixPairDoc>(r#"{"A":[[2,1],[1,1]],"B":[[2,1],[1,1]]}"#).unwrap_err();
        assert_eq!(e.kind(), "InvalidInput");
        let e = parse::<MatrixPairDoc>(r#"{"schema_version":2,"A":[[2,1],[1,1]],"B":[[2,1],[1,1]]}"#).unwrap_err();
        assert!(e.to_string().contains("schema_version 2"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = parse::<MatrixPairDoc>(r#"{"schema_version":1,"A":[[2,1],[1,1]],"B":[[2,1],[1,1]],"C":1}"#).unwrap_err();
        assert!(e.to_string().contains("unknown field"));
    }

    #[test]
    fn trig_map_round_trip() {
        let f = &TrigMap::cosine_mode([1, 2], [0.5, -0.25]) + &TrigMap::sine_mode([3, -1], [0.1, 0.0]);
        let doc = TrigMapDoc::from_core(&f);
        assert_eq!(doc.to_core().unwrap(), f);
    }

    #[test]
    fn one_sided_trig_map_is_rejected() {
        let doc = TrigMapDoc { terms: vec![TermDoc { k: [1, 0], re: [1.0, 0.0], im: [0.0, 0.0] }], truncation_eps: None };
        assert!(doc.to_core().is_err());
    }
}
