use llave_core::local_model::*;
use llave_core::torus::EigenQuadruple;
use llave_core::Error;

const LIN: [[f64; 4]; 4] = [
    [1.0, 0.1, 0.05, 0.0],
    [0.05, 0.9, 0.0, 0.1],
    [0.2, -0.1, 1.1, 0.2],
    [0.1, 0.15, -0.1, 0.95],
];

fn eig() -> EigenQuadruple {
    EigenQuadruple::new(0.55, 0.8, 4.0, 7.5).unwrap()
}

fn single_monomial(xi_inf: f64) -> LocalModel {
    let tau = ReturnTime::new(1.0, Poly4::new(vec![Monomial::new([0, 1, 1, 0], 0.3)])).unwrap();
    let g = Gluing::affine([0.5, 0.3], [0.2, xi_inf], 2.0, LIN, [0.0, 0.2, 0.0, 0.0]).unwrap();
    LocalModel::new(eig(), tau, g).unwrap()
}

#[test]
fn expansion_matches_closed_form() {
    let m = single_monomial(0.4);
    let rep = expansion_experiment(&m, 15, 45, &ShadowingOptions::default()).unwrap();
    let expect = 0.4 * (0.2 + 0.3 * 0.5 / (0.8 * 4.0 - 1.0));
    assert!((rep.omega_closed - expect).abs() < 1e-14, "{} vs {expect}", rep.omega_closed);
    assert!(rep.relative_gap() < 1e-3, "gap {}", rep.relative_gap());
    let th = theta(&m);
    assert!(th > 0.64 && th < 0.8);
    let bound = (th / 0.8).ln();
    let rate = rep.residual_rate.unwrap();
    assert!(rate <= bound + 0.15 * bound.abs());
}

#[test]
fn trivial_model_has_exact_periods() {
    let g = Gluing::affine([0.5, 0.3], [0.2, 0.4], 2.0, LIN, [0.0; 4]).unwrap();
    let m = LocalModel::new(eig(), ReturnTime::constant(1.0).unwrap(), g).unwrap();
    let rep = expansion_experiment(&m, 5, 40, &ShadowingOptions::default()).unwrap();
    for r in &rep.rows {
        assert!((r.period - r.n as f64 - 2.0).abs() < 1e-12);
        assert!(r.omega_hat.abs() < 1e-10);
    }
    assert_eq!(rep.omega_fit, 0.0);
    assert_eq!(rep.omega_closed, 0.0);
}

#[test]
fn excursion_term_leading_coefficient() {
    let m = single_monomial(0.4);
    let rep = excursion_term_check(&m, 15, 45, &ShadowingOptions::default()).unwrap();
    let t = compute_templates(&m).unwrap();
    assert!((rep.leading - 0.4 * t.t_ws).abs() < 1e-15);
    assert!(rep.error_at_last < 1e-3, "{}", rep.error_at_last);
    let rate = rep.residual_rate.unwrap();
    assert!(rate >= 0.9 * rep.expected_rate);
}

#[test]
fn shadowing_orbits_approach_q() {
    let m = single_monomial(0.4);
    let orbits = shadowing_family(&m, 10, 40, &ShadowingOptions::default()).unwrap();
    let d = shadowing_decay(&m, &orbits);
    let lm = 0.8f64.ln();
    assert!(d.distance.unwrap() <= lm + 0.05 * lm.abs());
    let xh = d.xi_hat.unwrap();
    let x = d.xi.unwrap();
    let exp_xh = 0.55f64.ln() + lm;
    assert!((xh - exp_xh).abs() <= 0.05 * exp_xh.abs(), "{xh} vs {exp_xh}");
    assert!((x - 2.0 * lm).abs() <= 0.05 * 2.0 * lm.abs(), "{x}");
}

#[test]
fn extended_precision_agrees() {
    let m = single_monomial(0.4);
    let ext = ShadowingOptions { precision: Precision::Extended, ..Default::default() };
    for n in [10, 25, 40] {
        let a = find_shadowing_orbit(&m, n, &ShadowingOptions::default()).unwrap();
        let b = find_shadowing_orbit(&m, n, &ext).unwrap();
        assert!((a.correction - b.correction).abs() <= 1e-14 * 0.8f64.powi(n as i32), "{n}");
        assert!(b.residual < 1e-26);
    }
}

#[test]
fn newton_is_deterministic() {
    let m = single_monomial(0.4);
    let a = find_shadowing_orbit(&m, 30, &ShadowingOptions::default()).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let m = m.clone();
            std::thread::spawn(move || find_shadowing_orbit(&m, 30, &ShadowingOptions::default()).unwrap())
        })
        .collect();
    for h in handles {
        let b = h.join().unwrap();
        assert_eq!(a.period.to_bits(), b.period.to_bits());
        assert_eq!(a.p.map(f64::to_bits), b.p.map(f64::to_bits));
    }
}

#[test]
fn n0_is_small() {
    let m = single_monomial(0.4);
    let n0 = find_n0(&m, 50).unwrap();
    assert!(n0 >= 1 && n0 <= 15);
}

#[test]
fn theta_window() {
    for e in [[0.55, 0.8, 4.0, 7.5], [0.3, 0.7, 1.6, 3.1], [0.1, 0.95, 1.1, 9.0]] {
        let q = EigenQuadruple::from_array(e).unwrap();
        let g = Gluing::affine([0.5, 0.3], [0.2, 0.4], 2.0, LIN, [0.0; 4]).unwrap();
        let m = LocalModel::new(q, ReturnTime::constant(1.0).unwrap(), g).unwrap();
        let (th, ga) = (theta(&m), gamma(&m));
        assert!(th > e[1] * e[1] && th < e[1]);
        assert!(ga > 1.0 && ga < 2.0);
    }
    let m = single_monomial(0.4);
    // mu^(n - ell) ~ lam^-ell
    let n = 40;
    let l = ell(&m, n) as i32;
    let r = (0.8f64.powi(n as i32 - l) * 4.0f64.powi(l)).ln().abs();
    assert!(r < 4.0f64.ln() + 0.8f64.ln().abs());
}

fn shears() -> Vec<Shear> {
    let id = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    let diag = [[2.0, 0.0, 0.0, 0.0], [0.0, 0.5, 0.0, 0.0], [0.0, 0.0, 1.5, 0.0], [0.0, 0.0, 0.0, 0.8]];
    let p = |terms: Vec<([u32; 4], f64)>| Poly4::new(terms.into_iter().map(|(e, c)| Monomial::new(e, c)).collect());
    vec![
        Shear::identity(),
        Shear::new(diag, Default::default()).unwrap(),
        Shear::new(id, [Poly4::zero(), Poly4::zero(), Poly4::zero(), p(vec![([0, 0, 2, 0], 0.7)])]).unwrap(),
        Shear::new(id, [p(vec![([0, 2, 0, 0], -0.5)]), Poly4::zero(), Poly4::zero(), Poly4::zero()]).unwrap(),
        Shear::new(
            diag,
            [Poly4::zero(), p(vec![([0, 1, 1, 0], 0.4), ([1, 1, 0, 0], 0.2)]), p(vec![([0, 0, 1, 1], 0.3)]), p(vec![([0, 0, 2, 0], -0.6)])],
        )
        .unwrap(),
    ]
}

#[test]
fn coarse_charts_preserve_the_sign() {
    for xi in [0.4, -0.3] {
        let m = single_monomial(xi);
        let rep = expansion_experiment(&m, 15, 45, &ShadowingOptions::default()).unwrap();
        for (k, s) in shears().iter().enumerate() {
            let c = coarse_chart_check(&m, s, rep.omega_fit, DEFAULT_TAIL_EPS).unwrap();
            assert!(c.signs_agree, "shear {k}");
            assert!(c.zeta_ratio().abs() > 1e-3 && c.zeta_ratio().abs() < 1e3);
        }
    }
    let m = single_monomial(0.4);
    let c = coarse_chart_check(&m, &Shear::identity(), 1.0, DEFAULT_TAIL_EPS).unwrap();
    assert_eq!(c.xi_inf_circ, 0.4);
    assert!((c.zeta_hat - c.zeta).abs() < 1e-15);
}

#[test]
fn non_adapted_charts_are_rejected() {
    let m = single_monomial(0.4);
    let flip = [[1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    let s = Shear::new(flip, Default::default()).unwrap();
    assert_eq!(coarse_chart_check(&m, &s, 1.0, DEFAULT_TAIL_EPS).unwrap_err(), Error::ChartNotAdapted { condition: "weak-stable tangency" });
    let id = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    let bent = Shear::new(id, [Poly4::zero(), Poly4::new(vec![Monomial::new([2, 0, 0, 0], 0.3)]), Poly4::zero(), Poly4::zero()]).unwrap();
    assert_eq!(coarse_chart_check(&m, &bent, 1.0, DEFAULT_TAIL_EPS).unwrap_err(), Error::ChartNotAdapted { condition: "strong-stable axis" });
}

fn family() -> ModelFamily {
    ModelFamily::new(single_monomial(-0.5 + 1e-300), single_monomial(0.5))
}

#[test]
fn family_scan_finds_one_crossing() {
    let f = family();
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let rep = family_sign_scan(|s| f.at(s), &grid, 15, 40, &ShadowingOptions::default()).unwrap();
    assert_eq!(rep.omega_crossings.len(), 1);
    assert!(rep.omega_crossings[0].contains(0.5));
    assert!(rep.consistent);
}

#[test]
fn constant_family_has_no_crossing() {
    let grid: Vec<f64> = (0..=4).map(|i| i as f64 / 4.0).collect();
    let rep = family_sign_scan(|_| Ok(single_monomial(0.3)), &grid, 15, 30, &ShadowingOptions::default()).unwrap();
    assert!(rep.omega_crossings.is_empty());
}

#[test]
fn vanishing_zeta_is_reported() {
    // zeta(s) = 0.2 s - 0.1 + 0.3 * 0.5 / 2.2 * (s-dependent b)
    let make = |s: f64| {
        let tau = ReturnTime::new(1.0, Poly4::new(vec![Monomial::new([0, 1, 1, 0], 0.3)])).unwrap();
        let pp = -0.3 * 0.5 / (0.8 * 4.0 - 1.0);
        let b = pp + (s - 0.5);
        let g = Gluing::affine([0.5, 0.3], [0.2, 0.4], 2.0, LIN, [0.0, b, 0.0, 0.0])?;
        LocalModel::new(eig(), tau, g)
    };
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let err = family_sign_scan(make, &grid, 15, 30, &ShadowingOptions::default()).unwrap_err();
    assert!(matches!(err, Error::ZetaVanished { s, .. } if s == 0.5), "{err:?}");
}

#[test]
fn divergent_series_for_center_contracting_model() {
    let e = EigenQuadruple::new(0.3, 0.45, 2.1, 5.3).unwrap();
    let g = Gluing::affine([0.5, 0.3], [0.2, 0.4], 2.0, LIN, [0.0; 4]).unwrap();
    let m = LocalModel::new(e, ReturnTime::constant(1.0).unwrap(), g).unwrap();
    assert!(matches!(expansion_experiment(&m, 10, 20, &ShadowingOptions::default()), Err(Error::DivergentSeries { .. })));
}
