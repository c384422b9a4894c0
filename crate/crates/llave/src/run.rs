//! Command pipelines. Each command is a pure function of its input
//! document and the overrides; rendering to CSV/JSON is separate.

use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use llave_core::cohomology::{
    build_conjugacy, estimate_holder, solve_cohomology, HolderMethod, HolderOptions, SolveOptions, DEFAULT_TRUNC_EPS,
};
use llave_core::fourier::{checked_pushforward, is_half_plane};
use llave_core::local_model::{
    coarse_chart_check, expansion_experiment, family_sign_scan, ModelFamily, Precision, ShadowingOptions,
    DEFAULT_TAIL_EPS,
};
use llave_core::maps::{compute_splitting, PerturbedMap, Point4, SplittingOptions, TorusMap, DEFAULT_SPLITTING_DEPTH};
use llave_core::periodic::{
    compare_spectra, count_distinct, find_periodic_orbit_from, find_periodic_point_from, linear_seeds, orbit_through, Matcher,
};
use llave_core::suspension::SuspensionConfig;
use llave_core::torus::{check_nonresonance, hyperbolic_eigen, EigenQuadruple, ToralAutomorphism, DEFAULT_RESONANCE_RTOL};
use llave_core::{Error, ErrorClass, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::report::{json, num, opt_num, Csv};
use crate::schema::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Eigen,
    Cohomology,
    Holder,
    Periodic,
    Spectra,
    Suspension,
    Expansion,
    Signscan,
    CoarseCheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Cohomology => "cohomology",
            Command::Holder => "holder",
            Command::Periodic => "periodic",
            Command::Spectra => "spectra",
            Command::Suspension => "suspension",
            Command::Expansion => "expansion",
            Command::Signscan => "signscan",
            Command::CoarseCheck => "coarse-check",
        }
    }

    /// Override keys the command understands.
    fn accepts(&self) -> &'static [&'static str] {
        match self {
            Command::Eigen => &["format"],
            Command::Cohomology => &["trunc-eps", "grid", "format"],
            Command::Holder => &["trunc-eps", "format"],
            Command::Periodic => &["max-period", "depth", "format"],
            Command::Spectra => &["max-period", "trunc-eps", "format"],
            Command::Suspension => &["max-period", "format"],
            Command::Expansion => &["n-min", "n-max", "tail-eps", "precision", "format"],
            Command::Signscan => &["n-min", "n-max", "tail-eps", "precision", "grid", "format"],
            Command::CoarseCheck => &["n-min", "n-max", "tail-eps", "precision", "format"],
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Eigen | Command::Cohomology | Command::Periodic => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Double,
    Extended,
}

/// Tolerance and parameter overrides. Keys a command does not use are
/// rejected rather than ignored.
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct Overrides {
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub trunc_eps: Option<f64>,
    #[arg(long)]
    pub tail_eps: Option<f64>,
    /// Splitting iteration depth.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub max_period: Option<usize>,
    /// Residual grid side (cohomology) or number of family samples (signscan).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_enum)]
    pub precision: Option<PrecisionArg>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Overrides {
    fn supplied(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let mut mark = |set: bool, k: &'static str| {
            if set {
                v.push(k)
            }
        };
        mark(self.n_min.is_some(), "n-min");
        mark(self.n_max.is_some(), "n-max");
        mark(self.trunc_eps.is_some(), "trunc-eps");
        mark(self.tail_eps.is_some(), "tail-eps");
        mark(self.depth.is_some(), "depth");
        mark(self.max_period.is_some(), "max-period");
        mark(self.grid.is_some(), "grid");
        mark(self.precision.is_some(), "precision");
        mark(self.format.is_some(), "format");
        v
    }

    pub fn check(&self, cmd: Command) -> Result<()> {
        for k in self.supplied() {
            if !cmd.accepts().contains(&k) {
                return Err(Error::InvalidInput(format!("option --{k} does not apply to {}", cmd.name())));
            }
        }
        let positive = |x: Option<f64>, k: &str| match x {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(Error::InvalidInput(format!("--{k} must be positive"))),
            _ => Ok(()),
        };
        positive(self.trunc_eps, "trunc-eps")?;
        positive(self.tail_eps, "tail-eps")?;
        for (v, k) in [(self.depth, "depth"), (self.max_period, "max-period"), (self.n_min, "n-min")] {
            if v == Some(0) {
                return Err(Error::InvalidInput(format!("--{k} must be at least 1")));
            }
        }
        if matches!(self.grid, Some(g) if g < 2) {
            return Err(Error::InvalidInput("--grid must be at least 2".into()));
        }
        Ok(())
    }

    fn shadowing(&self) -> ShadowingOptions {
        ShadowingOptions {
            precision: match self.precision {
                Some(PrecisionArg::Extended) => Precision::Extended,
                _ => Precision::Double,
            },
            tail_eps: self.tail_eps.unwrap_or(DEFAULT_TAIL_EPS),
            ..Default::default()
        }
    }

    fn solve(&self) -> SolveOptions {
        let mut o = SolveOptions::with_trunc_eps(self.trunc_eps.unwrap_or(DEFAULT_TRUNC_EPS));
        if let Some(g) = self.grid {
            o.residual_grid = g;
        }
        o
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Core(Error),
    Io { path: PathBuf, message: String },
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Core(e)
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    schema_version: u32,
    error: &'a str,
    class: &'a str,
    message: String,
}

impl RunError {
    /// 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(e) if e.class() == ErrorClass::Numerical => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Core(e) => e.kind(),
            RunError::Io { .. } => "Io",
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        let (class, message) = match self {
            RunError::Core(e) => (if e.class() == ErrorClass::Numerical { "numerical" } else { "validation" }, e.to_string()),
            RunError::Io { path, message } => ("validation", format!("{}: {message}", path.display())),
        };
        serde_json::to_string(&ErrorRecord { schema_version: SCHEMA_VERSION, error: self.kind(), class, message })
            .expect("error record serializes")
    }
}

/// Rendered report plus a one-line human summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub report: String,
    pub summary: String,
}

/// Reads the input, runs the command and writes the report if an output
/// path is given. The report text is returned either way.
pub fn run(cfg: &RunConfig) -> std::result::Result<Output, RunError> {
    let text = fs::read_to_string(&cfg.input)
        .map_err(|e| RunError::Io { path: cfg.input.clone(), message: e.to_string() })?;
    let out = execute(cfg.command, &text, &cfg.overrides)?;
    if let Some(p) = &cfg.output {
        fs::write(p, &out.report).map_err(|e| RunError::Io { path: p.clone(), message: e.to_string() })?;
    }
    Ok(out)
}

/// Runs a command on input text.
pub fn execute(cmd: Command, text: &str, ov: &Overrides) -> Result<Output> {
    ov.check(cmd)?;
    let format = ov.format.unwrap_or(cmd.default_format());
    let csv_unavailable = || Err(Error::InvalidInput(format!("{} has no csv report", cmd.name())));
    match cmd {
        Command::Eigen => {
            let r = eigen(&parse(text)?)?;
            let summary = format!(
                "A: small_eig {} B: small_eig {} resonances {}",
                num(r.a.small_eig),
                num(r.b.small_eig),
                r.resonances.len()
            );
            match format {
                Format::Json => Ok(Output { report: json(&r), summary }),
                Format::Csv => csv_unavailable(),
            }
        }
        Command::Cohomology => {
            let r = cohomology(&parse(text)?, ov)?;
            let summary = format!(
                "terms {} residual_sup {} predicted_alpha {}",
                r.psi.terms.len(),
                num(r.residual_sup),
                num(r.predicted_alpha)
            );
            match format {
                Format::Json => Ok(Output { report: json(&r), summary }),
                Format::Csv => csv_unavailable(),
            }
        }
        Command::Holder => {
            let r = holder(&parse(text)?, ov)?;
            let summary = r
                .estimates
                .iter()
                .map(|e| format!("{} alpha_hat {} r2 {}", e.method, num(e.alpha_hat), num(e.fit_r2)))
                .chain([format!("predicted {}", num(r.predicted_alpha))])
                .collect::<Vec<_>>()
                .join("; ");
            let report = match format {
                Format::Json => json(&r),
                Format::Csv => {
                    let mut c = Csv::new(&["method", "scale", "value", "residual"]);
                    for e in &r.estimates {
                        for s in &e.samples {
                            c.push(vec![e.method.clone(), num(s.scale), num(s.value), num(s.residual)]);
                        }
                    }
                    c.render()
                }
            };
            Ok(Output { report, summary })
        }
        Command::Periodic => {
            let r = periodic(&parse(text)?, ov)?;
            let summary = r
                .census
                .iter()
                .map(|c| format!("n={} found {}/{}", c.period, c.found, c.expected))
                .collect::<Vec<_>>()
                .join("; ");
            match format {
                Format::Json => Ok(Output { report: json(&r), summary }),
                Format::Csv => csv_unavailable(),
            }
        }
        Command::Spectra => {
            let r = spectra(&parse(text)?, ov)?;
            let summary = format!("pairs {} max_gap {}", r.pairs.len(), num(r.max_gap));
            let report = match format {
                Format::Json => json(&r),
                Format::Csv => {
                    let mut c = Csv::new(&[
                        "period", "x1", "x2", "y1", "y2", "f_mu_hat", "f_mu", "f_lam", "f_lam_hat", "g_mu_hat", "g_mu",
                        "g_lam", "g_lam_hat", "gap",
                    ]);
                    for p in &r.pairs {
                        let mut row = vec![p.period.to_string()];
                        row.extend(p.point.iter().chain(&p.moduli_f).chain(&p.moduli_g).map(|x| num(*x)));
                        row.push(num(p.gap));
                        c.push(row);
                    }
                    c.render()
                }
            };
            Ok(Output { report, summary })
        }
        Command::Suspension => {
            let r = suspension(&parse(text)?, ov)?;
            let summary = format!("K {} orbits {}", num(r.k), r.orbits.len());
            let report = match format {
                Format::Json => json(&r),
                Format::Csv => {
                    let mut c = Csv::new(&["period", "x1", "x2", "y1", "y2", "flow_period"]);
                    for o in &r.orbits {
                        let mut row = vec![o.period.to_string()];
                        row.extend(o.point.iter().map(|x| num(*x)));
                        row.push(num(o.flow_period));
                        c.push(row);
                    }
                    c.render()
                }
            };
            Ok(Output { report, summary })
        }
        Command::Expansion => {
            let r = expansion(&parse(text)?, ov)?;
            let summary = format!(
                "omega_fit {} omega_closed {} relative_gap {} residual_rate {} theta {}",
                num(r.omega_fit),
                num(r.omega_closed),
                num(r.relative_gap),
                opt_num(r.residual_rate),
                num(r.theta)
            );
            let report = match format {
                Format::Json => json(&r),
                Format::Csv => expansion_csv(&r.rows).render(),
            };
            Ok(Output { report, summary })
        }
        Command::Signscan => {
            let r = signscan(&parse(text)?, ov)?;
            let br = |v: &[[f64; 2]]| v.iter().map(|c| format!("[{}, {}]", c[0], c[1])).collect::<Vec<_>>().join(" ");
            let summary = format!(
                "omega crossings {} ({}) xi crossings {} ({}) consistent {}",
                r.omega_crossings.len(),
                br(&r.omega_crossings),
                r.xi_crossings.len(),
                br(&r.xi_crossings),
                r.consistent
            );
            let report = match format {
                Format::Json => json(&r),
                Format::Csv => {
                    let mut c = Csv::new(&["s", "xi_inf", "zeta", "omega_fit", "omega_closed"]);
                    for p in &r.points {
                        c.push([p.s, p.xi_inf, p.zeta, p.omega_fit, p.omega_closed].iter().map(|x| num(*x)).collect());
                    }
                    c.render()
                }
            };
            Ok(Output { report, summary })
        }
        Command::CoarseCheck => {
            let r = coarse_check(&parse(text)?, ov)?;
            let agree = r.charts.iter().filter(|c| c.signs_agree).count();
            let summary = format!("omega_fit {} signs agree {}/{}", num(r.omega_fit), agree, r.charts.len());
            let report = match format {
                Format::Json => json(&r),
                Format::Csv => {
                    let mut c = Csv::new(&["shear", "xi_inf_circ", "t_ws_hat", "pp_hat", "zeta_hat", "zeta", "omega", "signs_agree"]);
                    for ch in &r.charts {
                        let mut row = vec![ch.shear.clone()];
                        row.extend([ch.xi_inf_circ, ch.t_ws_hat, ch.pp_hat, ch.zeta_hat, ch.zeta, ch.omega].iter().map(|x| num(*x)));
                        row.push(ch.signs_agree.to_string());
                        c.push(row);
                    }
                    c.render()
                }
            };
            Ok(Output { report, summary })
        }
    }
}

pub fn expansion_csv(rows: &[ExpansionRowDoc]) -> Csv {
    let mut c = Csv::new(&["n", "T_n", "omega_hat_n", "residual"]);
    for r in rows {
        c.push(vec![r.n.to_string(), num(r.t_n), num(r.omega_hat_n), num(r.residual)]);
    }
    c
}

// ---------------------------------------------------------------- commands

fn automorphism(t: &ToralAutomorphism) -> AutomorphismDoc {
    AutomorphismDoc {
        matrix: *t.matrix(),
        det: t.det(),
        trace: t.trace(),
        small_eig: t.small_eig(),
        large_eig: t.large_eig(),
        e_s: t.e_s(),
        e_u: t.e_u(),
    }
}

pub fn eigen(doc: &MatrixPairDoc) -> Result<EigenReport> {
    let a = hyperbolic_eigen(doc.a)?;
    let b = hyperbolic_eigen(doc.b)?;
    let q = EigenQuadruple::of_skew_product(&a, &b)?;
    let resonances = check_nonresonance(&q, 3, DEFAULT_RESONANCE_RTOL)
        .into_iter()
        .map(|r| ResonanceDoc { index: r.index + 1, alpha: r.alpha })
        .collect();
    Ok(EigenReport {
        schema_version: SCHEMA_VERSION,
        a: automorphism(&a),
        b: automorphism(&b),
        quadruple: q.as_array(),
        resonances,
    })
}

/// Number of orbit steps listed per seed frequency.
pub const ORBIT_REPORT_LEN: usize = 21;

pub fn cohomology(doc: &CohomologyDoc, ov: &Overrides) -> Result<CohomologyReport> {
    let a = hyperbolic_eigen(doc.a)?;
    let b = hyperbolic_eigen(doc.b)?;
    let g = doc.g.to_core()?;
    let sol = solve_cohomology(&a, &b, &g, &ov.solve())?;
    let (es, eu) = (b.e_s(), b.e_u());
    let det = es[0] * eu[1] - eu[0] * es[1];
    let mut orbit_coefficients = Vec::new();
    for (k0, _) in g.terms().filter(|(k, _)| is_half_plane(**k)) {
        for n in 0..ORBIT_REPORT_LEN {
            let Some(k) = checked_pushforward(&a, *k0, n as i32) else { break };
            let c = sol.psi.cosine_coefficient(k);
            orbit_coefficients.push(OrbitCoefficient {
                seed: *k0,
                n,
                k,
                cos_s: (c[0] * eu[1] - c[1] * eu[0]) / det,
                cos_u: (c[1] * es[0] - c[0] * es[1]) / det,
            });
        }
    }
    Ok(CohomologyReport {
        schema_version: SCHEMA_VERSION,
        psi: TrigMapDoc::from_core(&sol.psi),
        residual_sup: sol.residual_sup,
        truncation_eps: sol.truncation_eps,
        predicted_alpha: sol.predicted_alpha,
        orbit_steps: sol.orbit_steps,
        orbit_coefficients,
    })
}

pub fn holder(doc: &CohomologyDoc, ov: &Overrides) -> Result<HolderReport> {
    let a = hyperbolic_eigen(doc.a)?;
    let b = hyperbolic_eigen(doc.b)?;
    let sol = solve_cohomology(&a, &b, &doc.g.to_core()?, &ov.solve())?;
    let estimates = [HolderMethod::Increments, HolderMethod::FourierDecay]
        .par_iter()
        .map(|m| estimate_holder(&sol.psi, *m, &a, &HolderOptions::default()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(|e| HolderEstimateDoc {
            method: e.method.name().to_string(),
            alpha_hat: e.alpha_hat,
            fit_r2: e.fit_r2,
            scale_range: [e.scale_range.0, e.scale_range.1],
            trusted: e.trusted,
            samples: e.samples.iter().map(|s| HolderSampleDoc { scale: s.scale, value: s.value, residual: s.residual }).collect(),
        })
        .collect();
    Ok(HolderReport { schema_version: SCHEMA_VERSION, predicted_alpha: sol.predicted_alpha, estimates })
}

pub const DEFAULT_MAX_PERIOD: usize = 3;
/// Periods with more points than this only get a census line.
pub const DETAIL_CAP: usize = 64;
/// Two Newton solutions closer than this are the same point.
pub const DISTINCT_TOL: f64 = 1e-9;

/// Continues every linear-model periodic point of period dividing `n`.
pub fn census(map: &PerturbedMap, n: usize) -> Result<(PeriodCensus, Vec<Point4>)> {
    let seeds = linear_seeds(&map.base, n)?;
    let found: Vec<(Point4, f64)> =
        seeds.par_iter().map(|s| find_periodic_point_from(map, s, n)).collect::<Result<Vec<_>>>()?;
    let points: Vec<Point4> = found.iter().map(|p| p.0).collect();
    let max_residual = found.iter().map(|p| p.1).fold(0.0, f64::max);
    let c = PeriodCensus {
        period: n,
        expected: seeds.len() as u64,
        found: count_distinct(&points, DISTINCT_TOL) as u64,
        max_residual,
    };
    Ok((c, points))
}

fn arr(v: &llave_core::linalg::Vec4) -> [f64; 4] {
    [v[0], v[1], v[2], v[3]]
}

pub fn periodic(doc: &MapDoc, ov: &Overrides) -> Result<PeriodicReport> {
    let map = doc.to_core()?;
    let sopts = SplittingOptions { depth: ov.depth.unwrap_or(DEFAULT_SPLITTING_DEPTH), ..Default::default() };
    let mut census_rows = Vec::new();
    let mut orbits = Vec::new();
    for n in 1..=ov.max_period.unwrap_or(DEFAULT_MAX_PERIOD) {
        let (c, points) = census(&map, n)?;
        if points.len() <= DETAIL_CAP {
            let detailed = points
                .par_iter()
                .map(|z| {
                    let o = orbit_through(&map, *z, n)?;
                    let s = compute_splitting(&map, o.points[0], &sopts)?;
                    Ok(OrbitDoc {
                        period: n,
                        points: o.points.clone(),
                        eigmoduli: o.eigmoduli.as_array(),
                        center_class: o.center_class.name().to_string(),
                        residual: o.residual,
                        splitting: SplittingDoc {
                            depth: s.depth,
                            e_ss: arr(&s.e_ss),
                            e_ws: arr(&s.e_ws),
                            e_wu: arr(&s.e_wu),
                            e_uu: arr(&s.e_uu),
                            rates: s.rates.as_array(),
                        },
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            orbits.extend(detailed);
        }
        census_rows.push(c);
    }
    Ok(PeriodicReport { schema_version: SCHEMA_VERSION, census: census_rows, detail_cap: DETAIL_CAP, orbits })
}

pub fn spectra(doc: &SpectraDoc, ov: &Overrides) -> Result<SpectraReport> {
    let f = doc.f.to_core()?;
    let g = doc.g.to_core()?;
    let max_period = ov.max_period.unwrap_or(4);
    let cmp = match doc.matcher {
        MatcherDoc::Conjugacy => {
            let h = build_conjugacy(&f.base.phi, &g.base.phi, &f.base.a, &f.base.b, &ov.solve())?;
            compare_spectra(&f, &g, Matcher::Conjugacy(&h), max_period)?
        }
        MatcherDoc::Continuation => compare_spectra(&f, &g, Matcher::Continuation, max_period)?,
    };
    Ok(SpectraReport {
        schema_version: SCHEMA_VERSION,
        max_gap: cmp.max_gap,
        periods_checked: cmp.periods_checked,
        pairs: cmp
            .pairs
            .iter()
            .map(|p| SpectraRow {
                period: p.orbit_f.period,
                point: p.orbit_f.points[0],
                moduli_f: p.orbit_f.eigmoduli.as_array(),
                moduli_g: p.orbit_g.eigmoduli.as_array(),
                gap: p.max_relative_eig_gap,
            })
            .collect(),
    })
}

pub fn suspension(doc: &MapDoc, ov: &Overrides) -> Result<SuspensionReport> {
    let map = doc.to_core()?;
    let centers: Vec<Point4> = map.bumps.iter().map(|b| b.center).collect();
    let cfg = match doc.k {
        Some(k) => SuspensionConfig::new(k, map, &centers)?,
        None => SuspensionConfig::with_default_k(map, &centers)?,
    };
    let mut orbits = Vec::new();
    for n in 1..=ov.max_period.unwrap_or(2) {
        let seeds = linear_seeds(&cfg.base.skew().clone(), n)?;
        let rows = seeds
            .par_iter()
            .map(|s| {
                let o = find_periodic_orbit_from(&cfg.base, s, n)?;
                let fp = cfg.flow_period(&o)?;
                Ok(FlowOrbitRow { period: n, point: o.points[0], flow_period: fp.flow_period })
            })
            .collect::<Result<Vec<_>>>()?;
        orbits.extend(rows);
    }
    Ok(SuspensionReport { schema_version: SCHEMA_VERSION, k: cfg.k, orbits })
}

pub const DEFAULT_N_MIN: usize = 15;
pub const DEFAULT_N_MAX: usize = 45;

fn n_range(ov: &Overrides, n_max_default: usize) -> (usize, usize) {
    (ov.n_min.unwrap_or(DEFAULT_N_MIN), ov.n_max.unwrap_or(n_max_default))
}

pub fn expansion(doc: &LocalModelDoc, ov: &Overrides) -> Result<ExpansionReportDoc> {
    let m = doc.to_core()?;
    let (lo, hi) = n_range(ov, DEFAULT_N_MAX);
    let r = expansion_experiment(&m, lo, hi, &ov.shadowing())?;
    Ok(ExpansionReportDoc {
        schema_version: SCHEMA_VERSION,
        n_min: r.n_min,
        n_max: r.n_max,
        omega_fit: r.omega_fit,
        omega_closed: r.omega_closed,
        relative_gap: r.relative_gap(),
        t_ws: r.t_ws,
        pp: r.pp,
        residual_rate: r.residual_rate,
        theta: r.theta,
        gamma: r.gamma,
        usable_from: r.usable_from,
        rows: r
            .rows
            .iter()
            .map(|x| ExpansionRowDoc { n: x.n, t_n: x.period, omega_hat_n: x.omega_hat, residual: x.residual })
            .collect(),
    })
}

pub const DEFAULT_FAMILY_GRID: usize = 11;

pub fn signscan(doc: &FamilyDoc, ov: &Overrides) -> Result<SignScanReportDoc> {
    let family = ModelFamily::new(doc.start.to_core()?, doc.end.to_core()?);
    let k = ov.grid.unwrap_or(DEFAULT_FAMILY_GRID);
    let grid: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
    let (lo, hi) = n_range(ov, 40);
    let r = family_sign_scan(|s| family.at(s), &grid, lo, hi, &ov.shadowing())?;
    Ok(SignScanReportDoc {
        schema_version: SCHEMA_VERSION,
        points: r
            .points
            .iter()
            .map(|p| FamilyPointDoc { s: p.s, xi_inf: p.xi_inf, zeta: p.zeta, omega_fit: p.omega_fit, omega_closed: p.omega_closed })
            .collect(),
        omega_crossings: r.omega_crossings.iter().map(|c| [c.lo, c.hi]).collect(),
        xi_crossings: r.xi_crossings.iter().map(|c| [c.lo, c.hi]).collect(),
        consistent: r.consistent,
    })
}

pub fn coarse_check(doc: &ShearsDoc, ov: &Overrides) -> Result<CoarseCheckReport> {
    let m = doc.model.to_core()?;
    let (lo, hi) = n_range(ov, DEFAULT_N_MAX);
    let opts = ov.shadowing();
    let rep = expansion_experiment(&m, lo, hi, &opts)?;
    let charts = doc
        .shears
        .iter()
        .map(|s| {
            let c = coarse_chart_check(&m, &s.to_core()?, rep.omega_fit, opts.tail_eps)?;
            Ok(ChartRow {
                shear: s.name.clone(),
                xi_inf_circ: c.xi_inf_circ,
                t_ws_hat: c.t_ws_hat,
                pp_hat: c.pp_hat,
                zeta_hat: c.zeta_hat,
                zeta: c.zeta,
                omega: c.omega,
                signs_agree: c.signs_agree,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoarseCheckReport { schema_version: SCHEMA_VERSION, omega_fit: rep.omega_fit, charts })
}
