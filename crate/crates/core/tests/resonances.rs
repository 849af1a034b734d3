use std::f64::consts::PI;

use htp_core::resonances::*;
use htp_core::{Error, Params};
use num_complex::Complex64;
use proptest::prelude::*;

fn whispering() -> Params {
    Params::contrast(100.0, 1.0, 1.0)
}

#[test]
fn reproduces_reference_zeros() {
    let p = whispering();
    let r = find_resonance(&p, 14, 1).unwrap();
    assert!((r.k.re - 1.77945199481921).abs() < 1e-10, "{}", r.k);
    assert!(r.verified && r.k.im < 0.0);
    let r = find_resonance(&p, 10, 5).unwrap();
    assert!((r.k.re - 2.75679178324354).abs() < 1e-10, "{}", r.k);
    assert_eq!(r.m, 5);
    assert!(r.verified && r.k.im < 0.0);
}

#[test]
fn seeded_refinement_matches_search() {
    let p = whispering();
    let seed = seed_resonance(14, 1, 100.0).unwrap();
    assert!((seed.re - 1.847).abs() < 1e-3);
    let r = refine_resonance(14, seed, &p).unwrap();
    assert!((r.k.re - 1.77945199481921).abs() < 1e-10);
    assert_eq!(r.m, 0);
}

#[test]
fn seeds_increase_in_m_and_approach_leading_term() {
    let s: Vec<f64> = (1..=6)
        .map(|m| seed_resonance(12, m, 3.0).unwrap().re)
        .collect();
    assert!(s.windows(2).all(|w| w[0] < w[1]));
    let ratio = seed_resonance(5000, 1, 4.0).unwrap().re / 5000.0;
    assert!((ratio - 0.5).abs() < 0.01);
}

#[test]
fn no_contrast_has_no_zeros() {
    let p = Params::contrast(1.0, 1.0, 1.0);
    for k in [
        Complex64::new(0.3, 0.0),
        Complex64::new(5.0, -1.0),
        Complex64::new(12.0, 0.5),
    ] {
        let f = f_nu(&p, 7, k).unwrap().to_c64();
        let wronskian = Complex64::new(0.0, -2.0 / PI) / k;
        assert!(
            (f - wronskian).norm() < 1e-11 * wronskian.norm(),
            "{k}: {f}"
        );
    }
    assert!(matches!(find_resonance(&p, 2, 1), Err(Error::NotFound(_))));
}

#[test]
fn conjugate_symmetry_in_upper_half_plane() {
    let p = Params::contrast(2.0, 1.3, 1.0);
    for (nu, k) in [
        (3, Complex64::new(3.2, 0.4)),
        (0, Complex64::new(0.7, 2.0)),
        (11, Complex64::new(6.0, 0.1)),
    ] {
        let f = f_nu(&p, nu, k).unwrap().to_c64();
        let g = f_nu(&p, nu, -k.conj()).unwrap().to_c64().conj();
        assert!((f - g).norm() < 1e-11 * f.norm(), "nu={nu}: {f} vs {g}");
    }
}

#[test]
fn argument_principle_counts_found_zeros() {
    let p = whispering();
    let rs = find_resonances(&p, 10, 5).unwrap();
    let lo = rs[0].k.re - 0.05;
    let hi = rs[4].k.re + 0.05;
    assert_eq!(count_zeros(&p, 10, (lo, hi), (-0.5, 0.05)).unwrap(), 5);
    let mid = 0.5 * (rs[1].k.re + rs[2].k.re);
    assert_eq!(count_zeros(&p, 10, (lo, mid), (-0.5, 0.05)).unwrap(), 2);
}

#[test]
fn ordering_and_residuals() {
    let p = Params::contrast(3.0, 1.0, 1.0);
    let rs = find_resonances(&p, 6, 4).unwrap();
    for (i, r) in rs.iter().enumerate() {
        assert_eq!(r.m, i + 1);
        assert!(r.verified && r.k.im < 0.0);
        assert!(r.residual < RESIDUAL_TOL);
    }
    assert!(rs.windows(2).all(|w| w[0].k.re < w[1].k.re));
}

#[test]
fn serialization_round_trip_keeps_zero() {
    let p = Params::contrast(3.0, 1.0, 1.0);
    for nu in [4, 30] {
        let r = find_resonance(&p, nu, 1).unwrap();
        let back: Resonance = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        let e = f_nu_derivatives(&p, nu, back.k).unwrap();
        let scale_free = e.f.abs() / (e.df.abs() * back.k.norm());
        assert!(scale_free < RESIDUAL_TOL);
    }
}

#[test]
fn strip_below_axis_when_nontrapping() {
    let s = scan_strip(&Params::contrast(0.5, 1.0, 1.0), 1..=12, 1..=2).unwrap();
    assert!(s.condition_holds);
    assert!(s.failures.is_empty(), "{:?}", s.failures);
    assert_eq!(s.resonances.len(), 24);
    let delta = s.delta.unwrap();
    assert!(delta > 0.0);
    assert!(s.resonances.iter().all(|r| r.k.im <= -delta));
    let order: Vec<(i32, usize)> = s.resonances.iter().map(|r| (r.nu, r.m)).collect();
    let mut sorted = order.clone();
    sorted.sort();
    assert_eq!(order, sorted);
}

#[test]
fn whispering_family_approaches_axis() {
    let s = scan_strip(&Params::contrast(3.0, 1.0, 1.0), 10..=30, 1..=1).unwrap();
    assert!(!s.condition_holds);
    assert_eq!(s.delta, None);
    assert_eq!(s.first_im_decreasing, Some(true));
    assert_eq!(s.first_re_increasing, Some(true));
}

#[test]
#[allow(clippy::reversed_empty_ranges)]
fn empty_scan() {
    let s = scan_strip(&whispering(), 5..=4, 1..=3).unwrap();
    assert!(s.resonances.is_empty() && s.failures.is_empty());
}

#[test]
fn family_precondition() {
    let p = Params {
        a_i: 2.0,
        ..whispering()
    };
    assert!(matches!(
        find_resonance(&p, 3, 1),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        scan_strip(&p, 1..=2, 1..=1),
        Err(Error::Precondition(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refined_zeros_lie_below_axis(n_i in 1.5f64..20.0, nu in 1i32..25) {
        let p = Params::contrast(n_i, 1.0, 1.0);
        let r = find_resonance(&p, nu, 1).unwrap();
        prop_assert!(r.k.im < 0.0 && r.k.re > 0.0);
        prop_assert!(r.verified);
        prop_assert!(r.residual < RESIDUAL_TOL);
    }
}
