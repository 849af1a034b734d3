mod common;

use std::f64::consts::PI;

use htp_core::disc_solver::{
    c_nu, field_at, field_grid, jacobi_anger, norms, norms_by_mode, recommended_truncation,
    solve_modal, solve_plane_wave, traces, transmission_residuals, FieldPart, Grid, ModalSolution,
    ModalSource, PlaneWave, VolumeSource, DEFAULT_NODES,
};
use htp_core::quadrature::{trapezoid_angles, Composite};
use htp_core::specfun::{bessel_j, hankel1, Scaled};
use htp_core::{Error, Params};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn jp(nu: i32, z: Complex64) -> Complex64 {
    (bessel_j(nu - 1, z).unwrap() - bessel_j(nu + 1, z).unwrap()) * 0.5
}

fn hp(nu: i32, z: Complex64) -> Complex64 {
    (hankel1(nu - 1, z).unwrap() - hankel1(nu + 1, z).unwrap()) * 0.5
}

/// The closed-form interior and exterior fields for `f_i = c_ν J_ν(kr)`,
/// `n_o = a_i = a_o = A_D = 1`, evaluated directly at radius `r`.
fn closed_form(nu: i32, n_i: f64, a_n: f64, k: f64, r: f64) -> (Complex64, Complex64) {
    let cn = c_nu(nu, k).unwrap();
    let k: Complex64 = k.into();
    let s = n_i.sqrt();
    let (j, h) = (bessel_j(nu, k).unwrap(), hankel1(nu, k).unwrap());
    let (jd, hd) = (jp(nu, k), hp(nu, k));
    let js = bessel_j(nu, k * s).unwrap();
    let jsd = jp(nu, k * s);
    let ratio = (a_n * jd * h - hd * j) / (a_n * s * jsd * h - js * hd);
    let pre = cn / (k * k * (n_i - 1.0));
    let ui = pre * (bessel_j(nu, k * r).unwrap() - bessel_j(nu, k * s * r).unwrap() * ratio);
    let uo = pre * hankel1(nu, k * r).unwrap() / h * (j - js * ratio);
    (ui, uo)
}

#[test]
fn matches_closed_form_for_contrast_three() {
    for (nu, k) in [(0, 1.0), (3, 2.5), (7, 4.2)] {
        let p = Params::contrast(3.0, 1.0, k);
        let src = ModalSource::volume(nu, c_nu(nu, k).unwrap().into(), k);
        let sol = solve_modal(&p, &src).unwrap();
        let [ui, _, uo, _] = traces(&p, &sol).unwrap();
        let (want_i, want_o) = closed_form(nu, 3.0, 1.0, k, 1.0);
        assert!(
            (ui - want_i).norm() < 1e-12 * want_i.norm(),
            "{ui} vs {want_i}"
        );
        assert!(
            (uo - want_o).norm() < 1e-12 * want_o.norm(),
            "{uo} vs {want_o}"
        );
        for r in [0.3, 0.8] {
            let got = field_at(&p, &[sol], r, 0.0, FieldPart::Solution).unwrap();
            let want = closed_form(nu, 3.0, 1.0, k, r).0;
            assert!((got - want).norm() < 1e-12 * want.norm().max(1e-3));
        }
        let (d, n) = transmission_residuals(&p, &sol).unwrap();
        assert!(d < 1e-10 && n < 1e-10);
    }
}

#[test]
fn interior_coefficient_has_contrast_factor() {
    let (nu, k) = (2, 1.3);
    let p = Params::contrast(3.0, 1.0, k);
    let sol = solve_modal(&p, &ModalSource::volume(nu, c(1.0, 0.0), k)).unwrap();
    let part = sol.particular.unwrap();
    assert!((part.c - 1.0 / (k * k * 2.0)).norm() < 1e-15);
}

#[test]
fn unit_coefficients_zero_data() {
    let p = Params::unit(1.0);
    for nu in -3..=3 {
        let sol = solve_modal(&p, &ModalSource::zero(nu)).unwrap();
        let rep = norms(&p, &[sol], DEFAULT_NODES).unwrap();
        assert_eq!(rep.weighted_energy, 0.0);
    }
}

#[test]
fn degenerate_particular_solution() {
    let p = Params::unit(1.0);
    let e = solve_modal(&p, &ModalSource::volume(0, c(1.0, 0.0), 1.0)).unwrap_err();
    assert!(matches!(e, Error::Precondition(_)));
    let ok = Params { n_i: 3.0, ..p };
    assert!(solve_modal(&ok, &ModalSource::volume(0, c(1.0, 0.0), 1.0)).is_ok());
}

#[test]
fn rejects_lower_half_plane_k() {
    let p = Params::unit(1.0).with_k(c(1.0, -0.01));
    assert!(solve_modal(&p, &ModalSource::zero(0)).is_err());
}

#[test]
fn bessel_square_closed_form() {
    // u_i = J_0(r): ‖u‖² = π (J_0(1)² + J_1(1)²), ‖∇u‖² = π (J_1(1)² − J_2(1) J_0(1)).
    let p = Params::unit(1.0);
    let sol = ModalSolution {
        a_int: Scaled::ONE,
        ..ModalSolution::zero(0)
    };
    let rep = norms(&p, &[sol], DEFAULT_NODES).unwrap();
    let j = |n| bessel_j(n, c(1.0, 0.0)).unwrap().re;
    let l2 = PI * (j(0).powi(2) + j(1).powi(2));
    let h1 = PI * (j(1).powi(2) - j(2) * j(0));
    assert!((rep.l2_int.powi(2) - l2).abs() < 1e-13 * l2);
    assert!((rep.h1semi_int.powi(2) - h1).abs() < 1e-13 * h1);
    assert!(rep.doubling_change < 1e-9);
}

#[test]
fn exterior_norms_match_simpson() {
    let p = Params {
        n_o: 2.0,
        a_o: 0.5,
        r_report: 2.5,
        ..Params::unit(1.7)
    };
    let nu = 4;
    let sol = ModalSolution {
        b_ext: Scaled::from_c64(c(0.3, 0.2)),
        ..ModalSolution::zero(nu)
    };
    let rep = norms(&p, &[sol], DEFAULT_NODES).unwrap();
    let kap = p.kappa_o();
    let b = c(0.3, 0.2);
    let l2 = 2.0
        * PI
        * common::simpson(
            |r| (b * hankel1(nu, kap * r).unwrap()).norm_sqr() * r,
            1.0,
            2.5,
            4000,
        );
    let h1 = 2.0
        * PI
        * common::simpson(
            |r| {
                let u = b * hankel1(nu, kap * r).unwrap();
                let du = b * kap * hp(nu, kap * r);
                (du.norm_sqr() + (nu * nu) as f64 * u.norm_sqr() / (r * r)) * r
            },
            1.0,
            2.5,
            4000,
        );
    assert!((rep.l2_ext.powi(2) - l2).abs() < 1e-10 * l2);
    assert!((rep.h1semi_ext.powi(2) - h1).abs() < 1e-10 * h1);
}

#[test]
fn c_nu_normalizes() {
    for (nu, k) in [(0, 0.5), (3, 2.0), (14, 1.77945199481921), (20, 15.0)] {
        let cn = c_nu(nu, k).unwrap();
        assert!(cn.is_finite() && cn > 0.0);
        let q = 2.0
            * PI
            * common::simpson(
                |r| (cn * bessel_j(nu, (k * r).into()).unwrap().re).powi(2) * r,
                0.0,
                1.0,
                20000,
            );
        assert!((q - 1.0).abs() < 1e-10, "nu={nu}: {q}");
        let src = VolumeSource {
            c: cn.into(),
            beta: k,
        };
        let closed = htp_core::disc_solver::volume_source_norm_sq(nu, &src).unwrap();
        assert!((closed - 1.0).abs() < 1e-12);
    }
}

#[test]
fn plane_wave_zero_amplitude() {
    let p = Params {
        n_i: 4.0,
        ..Params::unit(2.0)
    };
    let wave = PlaneWave {
        amplitude: c(0.0, 0.0),
        angle: 0.3,
    };
    let sol = solve_plane_wave(&p, &wave, recommended_truncation(&p, 2.0)).unwrap();
    assert!(sol
        .modes
        .iter()
        .all(|m| m.a_int.is_zero() && m.b_ext.is_zero()));
}

#[test]
fn invisible_obstacle_scatters_nothing() {
    let p = Params {
        n_i: 2.0,
        n_o: 2.0,
        a_i: 0.5,
        a_o: 0.5,
        ..Params::unit(3.0)
    };
    let wave = PlaneWave {
        amplitude: c(1.0, 0.0),
        angle: 1.0,
    };
    let sol = solve_plane_wave(&p, &wave, recommended_truncation(&p, 2.0)).unwrap();
    for m in &sol.modes {
        assert!(m.b_ext.is_zero() && m.a_int.is_zero());
    }
    let inc = field_at(&p, &sol.modes, 1.5, -0.4, FieldPart::Total).unwrap();
    let kap = p.kappa_o().re;
    let want = Complex64::from_polar(1.0, kap * (1.5 * 1f64.cos() - 0.4 * 1f64.sin()));
    assert!((inc - want).norm() < 1e-12);
}

#[test]
fn plane_wave_transmission_residuals() {
    let p = Params {
        n_i: 5.0,
        a_d: 1.2,
        a_n: 0.8,
        a_i: 1.5,
        ..Params::unit(3.0)
    };
    let wave = PlaneWave {
        amplitude: c(1.0, 0.5),
        angle: 0.7,
    };
    let sol = solve_plane_wave(&p, &wave, recommended_truncation(&p, 2.0)).unwrap();
    for m in &sol.modes {
        let (d, n) = transmission_residuals(&p, m).unwrap();
        assert!(d < 1e-10 && n < 1e-10, "nu={} {d:e} {n:e}", m.nu);
    }
    // Total field: continuous scaled traces across r = 1 with A_D, A_N jumps.
    let (x, y) = (0.6f64.cos(), 0.6f64.sin());
    let inside = field_at(
        &p,
        &sol.modes,
        x * (1.0 - 1e-12),
        y * (1.0 - 1e-12),
        FieldPart::Total,
    )
    .unwrap();
    let outside = field_at(
        &p,
        &sol.modes,
        x * (1.0 + 1e-12),
        y * (1.0 + 1e-12),
        FieldPart::Total,
    )
    .unwrap();
    assert!((outside - inside * p.a_d).norm() < 1e-9 * outside.norm());
}

#[test]
fn truncation_too_small_is_reported() {
    let p = Params {
        n_i: 4.0,
        ..Params::unit(5.0)
    };
    let wave = PlaneWave {
        amplitude: c(1.0, 0.0),
        angle: 0.0,
    };
    let e = solve_plane_wave(&p, &wave, 3).unwrap_err();
    assert!(matches!(e, Error::Truncation { tail_bound } if tail_bound > 1e-12));
}

#[test]
fn whispering_gallery_concentrates_near_interface() {
    let p = Params {
        n_i: 100.0,
        r_report: 2.0 * 2f64.sqrt(),
        ..Params::unit(1.77945199481921)
    };
    let wave = PlaneWave {
        amplitude: c(1.0, 0.0),
        angle: PI / 6.0,
    };
    let sol = solve_plane_wave(&p, &wave, recommended_truncation(&p, p.r_report)).unwrap();
    let ring_max = |r0: f64, r1: f64| {
        let mut m: f64 = 0.0;
        for i in 0..=20 {
            let r = r0 + (r1 - r0) * i as f64 / 20.0;
            for t in trapezoid_angles(90) {
                let v =
                    field_at(&p, &sol.modes, r * t.cos(), r * t.sin(), FieldPart::Total).unwrap();
                m = m.max(v.norm());
            }
        }
        m
    };
    let near = ring_max(0.8, 1.2);
    let far = ring_max(1.5, 2.0);
    assert!(near > 10.0 * far, "near {near} far {far}");
}

#[test]
fn orthogonality_against_angular_quadrature() {
    let p = Params {
        n_i: 2.0,
        ..Params::unit(2.0)
    };
    let sols: Vec<_> = [(0, c(1.0, 0.0)), (2, c(0.0, 0.5)), (-3, c(0.2, -0.4))]
        .iter()
        .map(|&(nu, amp)| solve_modal(&p, &ModalSource::volume(nu, amp, 1.1)).unwrap())
        .collect();
    let rep = norms(&p, &sols, DEFAULT_NODES).unwrap();
    let per = norms_by_mode(&p, &sols, DEFAULT_NODES).unwrap();
    let sum: f64 = per.iter().map(|r| r.l2_int.powi(2)).sum();
    assert!((sum - rep.l2_int.powi(2)).abs() < 1e-12 * sum);

    let rule = Composite::new(0.0, 1.0, 1.0, 40);
    let thetas = trapezoid_angles(16);
    let mut direct = 0.0;
    for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
        for &t in &thetas {
            let v = field_at(&p, &sols, r * t.cos(), r * t.sin(), FieldPart::Solution).unwrap();
            direct += w * r * v.norm_sqr() * 2.0 * PI / thetas.len() as f64;
        }
    }
    assert!((direct - sum).abs() < 1e-12 * sum, "{direct} vs {sum}");
}

#[test]
fn finite_difference_pde_residual() {
    let p = Params {
        n_i: 3.0,
        a_i: 1.5,
        ..Params::unit(2.0)
    };
    let src = ModalSource::volume(2, c(1.0, 0.3), 0.9);
    let sol = solve_modal(&p, &src).unwrap();
    let u = |x: f64, y: f64| field_at(&p, &[sol], x, y, FieldPart::Solution).unwrap();
    let f = |x: f64, y: f64| {
        let (r, t) = (x.hypot(y), y.atan2(x));
        src.volume.unwrap().c
            * bessel_j(2, (0.9 * r).into()).unwrap()
            * Complex64::from_polar(1.0, 2.0 * t)
    };
    let residual = |h: f64, x: f64, y: f64| {
        let lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - u(x, y) * 4.0) / (h * h);
        (lap * p.a_i + u(x, y) * p.k.norm_sqr() * p.n_i - f(x, y)).norm()
    };
    for (x, y) in [(0.2, 0.3), (-0.5, 0.1), (0.1, -0.6)] {
        let (r1, r2) = (residual(1e-2, x, y), residual(5e-3, x, y));
        assert!(r1 < 1e-3, "{r1}");
        assert!((r1 / r2 - 4.0).abs() < 0.5, "ratio {}", r1 / r2);
    }
}

#[test]
fn field_grid_single_mode_definition() {
    let p = Params {
        n_i: 2.0,
        ..Params::unit(1.5)
    };
    let sol = solve_modal(&p, &ModalSource::boundary(3, c(1.0, 0.0), c(0.0, 0.0))).unwrap();
    let g = Grid::square(2.0, 9);
    let fg = field_grid(&p, &[sol], &g, FieldPart::Solution).unwrap();
    let (ix, iy) = (7, 2);
    let (x, y) = (g.x(ix), g.y(iy));
    let (r, t) = (x.hypot(y), y.atan2(x));
    let want = (sol.b_ext * htp_core::specfun::hankel1_scaled(3, p.kappa_o() * r).unwrap())
        .to_c64()
        * Complex64::from_polar(1.0, 3.0 * t);
    assert!((fg.at(ix, iy) - want).norm() < 1e-14 * want.norm());
    let zero = field_grid(&p, &[ModalSolution::zero(3)], &g, FieldPart::Solution).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}

#[test]
fn field_grid_matches_pointwise() {
    let p = Params {
        n_i: 4.0,
        r_report: 3.0,
        ..Params::unit(2.0)
    };
    let wave = PlaneWave {
        amplitude: c(1.0, 0.5),
        angle: 0.3,
    };
    let sol = solve_plane_wave(&p, &wave, recommended_truncation(&p, 3.0)).unwrap();
    let g = Grid {
        x_min: -1.7,
        x_max: 2.0,
        y_min: -2.0,
        y_max: 2.0,
        nx: 12,
        ny: 9,
    };
    for part in [FieldPart::Solution, FieldPart::Total] {
        let fg = field_grid(&p, &sol.modes, &g, part).unwrap();
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let want = field_at(&p, &sol.modes, g.x(ix), g.y(iy), part).unwrap();
                assert_eq!(fg.at(ix, iy), want, "({ix}, {iy})");
            }
        }
    }
}

#[test]
fn serialization_round_trip() {
    let p = Params {
        n_i: 3.0,
        ..Params::unit(2.0)
    };
    let sol = solve_modal(&p, &ModalSource::volume(4, c(1.0, 0.0), 1.0)).unwrap();
    let text = serde_json::to_string(&sol).unwrap();
    let back: ModalSolution = serde_json::from_str(&text).unwrap();
    assert_eq!(back, sol);
}

#[test]
fn jacobi_anger_coefficient_phase() {
    let w = PlaneWave {
        amplitude: c(2.0, 0.0),
        angle: 0.0,
    };
    assert_eq!(jacobi_anger(&w, 1), c(0.0, 2.0));
    assert_eq!(jacobi_anger(&w, -2), c(-2.0, 0.0));
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| c(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_in_data(nu in -8i32..=8, k in 0.3f64..20.0, n_i in 0.2f64..5.0, lam in complex(),
                      cv in complex(), gd in complex(), gn in complex()) {
        prop_assume!(lam.norm() > 1e-3);
        let p = Params { n_i, ..Params::unit(k) };
        let beta = 0.7 * k;
        prop_assume!((n_i - 0.49).abs() > 1e-3);
        let src = ModalSource { nu, volume: Some(VolumeSource { c: cv, beta }), g_d: gd, g_n: gn };
        let a = solve_modal(&p, &src).unwrap();
        let b = solve_modal(&p, &src.scaled(lam)).unwrap();
        let sa = a.a_int.scale(lam) - b.a_int;
        let sb = a.b_ext.scale(lam) - b.b_ext;
        prop_assert!(sa.abs() <= 1e-12 * b.a_int.abs().max(1e-300));
        prop_assert!(sb.abs() <= 1e-12 * b.b_ext.abs().max(1e-300));
    }

    #[test]
    fn transmission_holds(nu in -20i32..=20, k in 0.3f64..30.0, n_i in 0.2f64..10.0, a_i in 0.2f64..5.0,
                          a_d in 0.2f64..5.0, a_n in 0.2f64..5.0, gd in complex(), gn in complex()) {
        let p = Params { n_i, a_i, a_d, a_n, ..Params::unit(k) };
        let sol = solve_modal(&p, &ModalSource::boundary(nu, gd, gn)).unwrap();
        let (d, n) = transmission_residuals(&p, &sol).unwrap();
        prop_assert!(d < 1e-10 && n < 1e-10, "{:e} {:e}", d, n);
    }

    #[test]
    fn norms_nonnegative_and_certified(nu in 0i32..=10, k in 0.5f64..30.0, n_i in 0.2f64..5.0) {
        let p = Params { n_i, ..Params::unit(k) };
        let sol = solve_modal(&p, &ModalSource::boundary(nu, c(1.0, 0.0), c(0.5, 0.0))).unwrap();
        let rep = norms(&p, &[sol], DEFAULT_NODES).unwrap();
        prop_assert!(rep.l2_int >= 0.0 && rep.h1semi_ext >= 0.0 && rep.weighted_energy > 0.0);
        prop_assert!(rep.doubling_change < 1e-9);
    }
}
