//! Acceptance gate: one line per criterion, nonzero exit if any fails.

mod common;

use std::f64::consts::{FRAC_PI_4, PI};
use std::process::ExitCode;
use std::time::Instant;

use htp_core::certify::{
    blowup_sweep, certification_suite, rhs_volume_bound, BlowupEntry, Bound, MARGIN_TOL,
};
use htp_core::disc_solver::{
    field_grid, recommended_truncation, solve_plane_wave, FieldPart, Grid, PlaneWave,
};
use htp_core::morawetz::{identity_suite, SuiteSizes};
use htp_core::resonances::{find_resonance, scan_strip};
use htp_core::specfun::{airy_zeros, bessel_j, cylinder_eval};
use htp_core::Params;
use num_complex::Complex64;

const SEED: u64 = 20261015;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn resonance_reproduction() -> Outcome {
    let p = Params::contrast(100.0, 1.0, 1.0);
    let mut notes = Vec::new();
    let mut ok = true;
    for (nu, m, want) in [(14, 1, 1.77945199481921), (10, 5, 2.75679178324354)] {
        let r = find_resonance(&p, nu, m).map_err(|e| format!("nu={nu} m={m}: {e}"))?;
        let err = (r.k.re - want).abs();
        ok &= err < 1e-10 && r.verified;
        notes.push(format!(
            "k[{nu},{m}]={:.15}{:+.2e}i err={err:.1e}",
            r.k.re, r.k.im
        ));
    }
    verdict(ok, notes.join(", "))
}

fn sensitivity() -> Outcome {
    let wave = PlaneWave {
        amplitude: Complex64::new(1.0, 0.0),
        angle: PI / 6.0,
    };
    let grid = Grid::square(2.0, 400);
    let peak = |k: f64| -> Result<f64, String> {
        let p = Params {
            n_i: 100.0,
            r_report: 2.0 * 2f64.sqrt(),
            ..Params::unit(k)
        };
        let sol = solve_plane_wave(&p, &wave, recommended_truncation(&p, p.r_report))
            .map_err(|e| e.to_string())?;
        Ok(field_grid(&p, &sol.modes, &grid, FieldPart::Total)
            .map_err(|e| e.to_string())?
            .max_abs())
    };
    let (near, off) = (peak(1.77945199481921)?, peak(1.779451994815)?);
    let ratio = near / off;
    verdict(
        ratio >= 100.0,
        format!("max|u| {near:.4e} vs {off:.4e}, ratio {ratio:.1}"),
    )
}

fn blowup_trend() -> Outcome {
    let entries = blowup_sweep(3.0, 1.0, 0..=64).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for e in entries {
        match e {
            BlowupEntry::Row(r) => rows.push(r),
            BlowupEntry::Failed { nu, error } => return Err(format!("nu={nu}: {error}")),
        }
    }
    let f_ok = rows.iter().all(|r| (r.f_norm - 1.0).abs() < 1e-10);
    let tail: Vec<_> = rows.iter().filter(|r| r.nu >= 10).collect();
    let increasing = tail.windows(2).all(|w| w[1].combined > w[0].combined);
    let xs: Vec<f64> = rows.iter().map(|r| r.nu as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.combined.ln()).collect();
    let (slope, r2) = least_squares(&xs, &ys);
    verdict(
        f_ok && increasing && slope > 0.0 && r2 >= 0.9,
        format!(
            "{} rows, |f_i|=1: {f_ok}, increasing for nu>=10: {increasing}, slope {slope:.3}, R^2 {r2:.4}, combined {:.2e} -> {:.2e}",
            rows.len(),
            rows[0].combined,
            rows[rows.len() - 1].combined
        ),
    )
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

fn bound_certification() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for bound in [Bound::Volume, Bound::Boundary, Bound::Perturbed] {
        let r = certification_suite(bound, 200, SEED);
        ok &= r.failures.is_empty() && r.min_relative_margin >= -MARGIN_TOL;
        notes.push(format!(
            "{bound:?}: {} cases, {} failures, min margin/rhs {:.3}",
            r.cases,
            r.failures.len(),
            r.min_relative_margin
        ));
    }
    verdict(ok, notes.join("; "))
}

fn resonance_free_strip() -> Outcome {
    let s =
        scan_strip(&Params::contrast(0.5, 1.0, 1.0), 1..=30, 1..=3).map_err(|e| e.to_string())?;
    let delta = s.delta.unwrap_or(f64::NAN);
    let below = s.resonances.iter().all(|r| r.verified && r.k.im <= -delta);
    let strip_ok = s.condition_holds
        && s.failures.is_empty()
        && delta > 0.0
        && below
        && s.resonances.len() == 90;

    let t =
        scan_strip(&Params::contrast(3.0, 1.0, 1.0), 10..=64, 1..=1).map_err(|e| e.to_string())?;
    let decreasing = t.failures.is_empty() && t.first_im_decreasing == Some(true);
    let last = t.resonances.last().map(|r| r.k.im).unwrap_or(f64::NAN);
    verdict(
        strip_ok && decreasing,
        format!(
            "n_i=0.5: {} zeros, delta {delta:.4}, failures {}; n_i=3: |Im k| decreasing {decreasing}, Im k[64,1] {last:.2e}",
            s.resonances.len(),
            s.failures.len()
        ),
    )
}

fn identities() -> Outcome {
    let r = identity_suite(&SuiteSizes::default(), SEED);
    let notes: Vec<String> = r
        .checks
        .iter()
        .map(|c| format!("{} {}x worst {:.2e}", c.name, c.trials, c.worst))
        .collect();
    verdict(r.passed(), notes.join(", "))
}

fn special_functions() -> Outcome {
    // Frozen extended-precision table plus on-the-fly exact series, |z| <= 20, nu <= 30.
    let mut worst_oracle: f64 = 0.0;
    for (n, z, j, h) in common::bessel_oracle_table() {
        let got = cylinder_eval(n, z).map_err(|e| e.to_string())?.unscaled();
        let next = bessel_j(n + 1, z).map_err(|e| e.to_string())?;
        let envelope = (j.norm_sqr() + next.norm_sqr()).sqrt();
        worst_oracle = worst_oracle
            .max((got[0] - j).norm() / envelope)
            .max((got[2] - h).norm() / h.norm());
    }
    for n in [0u32, 1, 7, 15, 30] {
        for i in 0..12 {
            let z = Complex64::from_polar(
                0.05 + 19.95 * i as f64 / 11.0,
                FRAC_PI_4 * (i as f64 / 5.5 - 1.0),
            );
            let (want, want_next) = (
                common::bessel_j_series(n, z),
                common::bessel_j_series(n + 1, z),
            );
            let got = bessel_j(n as i32, z).map_err(|e| e.to_string())?;
            worst_oracle = worst_oracle
                .max((got - want).norm() / (want.norm_sqr() + want_next.norm_sqr()).sqrt());
        }
    }

    // Wronskian over the whole wedge |Im z| <= |Re z|, 1e-3 <= |z| <= 1e3.
    let (mut worst_upper, mut worst_lower): (f64, f64) = (0.0, 0.0);
    let (mut bad, mut total, mut shallowest_bad) = (0usize, 0usize, f64::INFINITY);
    for n in [0, 1, 2, 5, 10, 30, 60, 100, 200] {
        for ir in 0..=30 {
            let r = 10f64.powf(-3.0 + 6.0 * ir as f64 / 30.0);
            for ia in 0..=16 {
                let z = Complex64::from_polar(r, FRAC_PI_4 * (ia as f64 / 8.0 - 1.0));
                let w = cylinder_eval(n, z)
                    .map_err(|e| format!("n={n} z={z}: {e}"))?
                    .wronskian_residual();
                total += 1;
                if z.im >= 0.0 {
                    worst_upper = worst_upper.max(w);
                } else {
                    worst_lower = worst_lower.max(w);
                }
                if w.is_nan() || w >= 1e-10 {
                    bad += 1;
                    shallowest_bad = shallowest_bad.min(-z.im);
                }
            }
        }
    }

    let reference = common::airy_zeros_bisection(30);
    let table = airy_zeros(30).map_err(|e| e.to_string())?;
    let worst_airy = table
        .zeros
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let ok = worst_oracle < 1e-12 && bad == 0 && worst_airy < 1e-10;
    let mut note = format!(
        "oracle worst {worst_oracle:.1e}; Wronskian worst Im>=0 {worst_upper:.1e}, Im<0 {worst_lower:.1e}, {bad}/{total} points >= 1e-10"
    );
    if bad > 0 {
        note += &format!(" (from Im z = -{shallowest_bad:.2})");
    }
    note += &format!("; Airy zeros worst {worst_airy:.1e}");
    verdict(ok, note)
}

fn constant_41() -> Outcome {
    let p = Params {
        r_report: 2.0,
        ..Params::unit(1.0)
    };
    let v = rhs_volume_bound(&p, 1.0, 0.0)
        .map_err(|e| e.to_string())?
        .value;
    verdict(v == 41.0, format!("rhs = {v}"))
}

fn verdict(ok: bool, note: String) -> Outcome {
    if ok {
        Ok(note)
    } else {
        Err(note)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("resonance reproduction", resonance_reproduction),
        ("sensitivity near resonance", sensitivity),
        ("blow-up trend", blowup_trend),
        ("bound certification", bound_certification),
        ("resonance-free strip", resonance_free_strip),
        ("identity suite", identities),
        ("special-function accuracy", special_functions),
        ("hand-arithmetic constant", constant_41),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(note) => println!("PASS {} {name} ({secs:.1}s): {note}", i + 1),
            Err(note) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {note}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
