//! Complex zeros of
//! `F_ν(k) = A_N √n_i J'_ν(√n_i k) H^(1)_ν(k) − H^(1)'_ν(k) J_ν(√n_i k)`,
//! the scattering resonances of the disc with `n_o = a_i = a_o = A_D = 1`.
//!
//! Zeros are counted with the argument principle, isolated by bisection of
//! the counting rectangle, and polished by Newton's method. Resonances that
//! sit within `1e-6 |k|` of the real axis are finished from real-axis data,
//! where `Re F_ν` is available to full relative accuracy.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::check_conditions;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::specfun::{airy_zeros, CylinderTable, Scaled, MAX_ZEROS};

/// Newton stops once `|step| < NEWTON_TOL |k|`.
pub const NEWTON_TOL: f64 = 1e-13;
pub const MAX_NEWTON: usize = 100;
/// Below this `|Im k| / |k|` the imaginary part is recovered from real-axis
/// values.
pub const NEAR_REAL: f64 = 1e-6;
/// Scale-free residual bound `|F| / (|F'| |k|)` for an accepted zero.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Boundary nodes of the first winding-number pass.
pub const WINDING_NODES: usize = 512;
/// Smallest half-width of the isolating box, relative to `|k|`.
pub const MIN_BOX: f64 = 1e-8;
/// Imaginary part of the seeds.
pub const SEED_IM: f64 = -1e-3;

const MAX_WINDING_NODES: usize = 1 << 16;
const PHASE_STEP: f64 = PI / 4.0;
const SEARCH_WINDOW: f64 = 0.5;
const SEARCH_START: f64 = 1e-2;
const UPPER_MARGIN: f64 = 0.05;
const LEAF_SIZE: f64 = 0.05;

/// A refined zero of `F_ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub nu: i32,
    /// Position in the ordering of [`find_resonances`], 1-based; 0 for zeros
    /// refined from a seed without an ordered search.
    pub m: usize,
    pub k: Complex64,
    /// `|F_ν(k)| / (|F_ν'(k)| |k|)`.
    pub residual: f64,
    pub newton_iters: usize,
    /// Winding number of `F_ν` around an isolating box equals one.
    pub verified: bool,
    pub winding: f64,
    /// Half-width of the isolating box.
    pub box_half_width: f64,
}

/// `F_ν` and its first two derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FEval {
    pub f: Scaled,
    pub df: Scaled,
    pub d2f: Scaled,
}

fn check_family(params: &Params) -> Result<()> {
    params.validate()?;
    let fixed = [
        ("n_o", params.n_o),
        ("a_i", params.a_i),
        ("a_o", params.a_o),
        ("A_D", params.a_d),
    ];
    for (name, v) in fixed {
        if v != 1.0 {
            return Err(Error::Precondition(format!(
                "resonance search needs {name} = 1, got {v}"
            )));
        }
    }
    Ok(())
}

/// `f`, `f'`, `f''`, `f'''` for a solution of Bessel's equation of order `ν`.
fn bessel_jet(nu: f64, z: Complex64, f: Scaled, df: Scaled) -> [Scaled; 4] {
    let zi = 1.0 / z;
    let q = 1.0 - nu * nu * zi * zi;
    let d2 = -(df.scale(zi) + f.scale(q));
    let d3 =
        -(d2.scale(zi) - df.scale(zi * zi) + df.scale(q) + f.scale(2.0 * nu * nu * zi * zi * zi));
    [f, df, d2, d3]
}

fn evaluate(params: &Params, nu: i32, k: Complex64) -> Result<FEval> {
    if k.norm() == 0.0 {
        return Err(Error::Singularity("F_nu is singular at k = 0".into()));
    }
    let n = nu.unsigned_abs() as usize;
    let s = params.n_i.sqrt();
    let jt = CylinderTable::bessel_only(n, k * s)?;
    let ht = CylinderTable::new(n, k)?;
    let nf = nu as f64;
    let [j0, j1, j2, j3] = bessel_jet(nf, k * s, jt.j(nu), jt.jp(nu));
    let [h0, h1, h2, h3] = bessel_jet(nf, k, ht.h(nu), ht.hp(nu));
    let a = Complex64::new(params.a_n * s, 0.0);
    let s1 = Complex64::new(s, 0.0);
    let s2 = Complex64::new(s * s, 0.0);
    let two = Complex64::new(2.0, 0.0);
    // d/dk of J(sk) brings a factor s per derivative.
    let f = (j1 * h0).scale(a) - h1 * j0;
    let df = (j2 * h0).scale(a * s1) + (j1 * h1).scale(a) - h2 * j0 - (h1 * j1).scale(s1);
    let d2f = (j3 * h0).scale(a * s2) + (j2 * h1).scale(a * s1 * two) + (j1 * h2).scale(a)
        - h3 * j0
        - (h2 * j1).scale(s1 * two)
        - (h1 * j2).scale(s2);
    Ok(FEval { f, df, d2f })
}

/// `F_ν(k)` in scaled form. The family is `n_o = a_i = a_o = A_D = 1`.
pub fn f_nu(params: &Params, nu: i32, k: Complex64) -> Result<Scaled> {
    check_family(params)?;
    Ok(evaluate(params, nu, k)?.f)
}

/// `F_ν`, `F_ν'`, `F_ν''` from Bessel's equation.
pub fn f_nu_derivatives(params: &Params, nu: i32, k: Complex64) -> Result<FEval> {
    check_family(params)?;
    evaluate(params, nu, k)
}

/// `(ν + 2^{-1/3} α_m ν^{1/3}) / √n_i + i·SEED_IM`.
pub fn seed_resonance(nu: i32, m: usize, n_i: f64) -> Result<Complex64> {
    if nu < 1 {
        return Err(Error::Domain(format!("seeds need nu >= 1, got {nu}")));
    }
    if m == 0 || m > MAX_ZEROS {
        return Err(Error::Domain(format!(
            "m must be in 1..={MAX_ZEROS}, got {m}"
        )));
    }
    if !(n_i.is_finite() && n_i > 0.0) {
        return Err(Error::Domain(format!("n_i must be positive, got {n_i}")));
    }
    let alpha = airy_zeros(m)?.zeros[m - 1];
    let v = nu as f64;
    let re = (v + 2f64.powf(-1.0 / 3.0) * alpha * v.cbrt()) / n_i.sqrt();
    Ok(Complex64::new(re, SEED_IM))
}

fn newton_step(params: &Params, nu: i32, k: Complex64) -> Result<(Complex64, FEval)> {
    let e = evaluate(params, nu, k)?;
    if e.df.is_zero() || !e.df.is_finite() {
        let h = 1e-7 * k.norm();
        let fp = evaluate(params, nu, k + h)?.f;
        let fm = evaluate(params, nu, k - h)?.f;
        let d = (fp - fm).scale(Complex64::new(0.5 / h, 0.0));
        return Ok(((e.f / d).to_c64(), e));
    }
    Ok(((e.f / e.df).to_c64(), e))
}

struct Newton {
    k: Complex64,
    iters: usize,
    last_step: f64,
}

fn newton(params: &Params, nu: i32, start: Complex64) -> Result<Newton> {
    let mut k = start;
    let mut trace = Vec::new();
    for it in 1..=MAX_NEWTON {
        let (step, _) = newton_step(params, nu, k)?;
        k -= step;
        let s = step.norm();
        trace.push((k.re, k.im));
        if !(k.re.is_finite() && k.im.is_finite()) || k.norm() == 0.0 {
            break;
        }
        if s < NEWTON_TOL * k.norm() {
            return Ok(Newton {
                k,
                iters: it,
                last_step: s,
            });
        }
    }
    let last_step = trace
        .windows(2)
        .last()
        .map(|w| Complex64::new(w[1].0 - w[0].0, w[1].1 - w[0].1).norm())
        .unwrap_or(f64::NAN);
    Err(Error::Convergence {
        iterations: MAX_NEWTON,
        last_step,
        trace,
    })
}

/// Replaces the imaginary part of a near-real zero using real-axis values:
/// Newton on `Im F_ν` along the axis, then the quadratic Taylor fixed point
/// `δ = −(F + F''δ²/2)/F'` from the real root.
fn polish_near_real(params: &Params, nu: i32, k: Complex64) -> Result<Complex64> {
    let mut x = k.re;
    for _ in 0..50 {
        let e = evaluate(params, nu, x.into())?;
        let q = e.f.to_c64().im;
        let dq = e.df.to_c64().im;
        let dx = q / dq;
        x -= dx;
        if !(dx.abs() > 1e-16 * x.abs()) {
            break;
        }
    }
    let e = evaluate(params, nu, x.into())?;
    let (f, df, d2f) = (e.f, e.df, e.d2f);
    let mut delta = -(f / df).to_c64();
    for _ in 0..8 {
        let corr = d2f.scale(0.5 * delta * delta);
        delta = -((f + corr) / df).to_c64();
    }
    Ok(Complex64::new(x, 0.0) + delta)
}

/// Winding number of `F_ν` around the square of half-width `hw` centred at
/// `c`, by the trapezoid rule on `F'/F`, doubling the node count until the
/// value is within 0.01 of an integer and stable.
pub fn winding_number(params: &Params, nu: i32, c: Complex64, hw: f64) -> Result<f64> {
    check_family(params)?;
    let mut n = WINDING_NODES;
    let mut prev: Option<f64> = None;
    loop {
        let w = winding_trapezoid(params, nu, c, hw, n)?;
        let near_int = (w - w.round()).abs() < 0.01;
        if near_int && prev.is_some_and(|p| (p - w).abs() < 0.01) {
            return Ok(w);
        }
        if n >= MAX_WINDING_NODES {
            return Ok(w);
        }
        prev = Some(w);
        n *= 2;
    }
}

fn winding_trapezoid(params: &Params, nu: i32, c: Complex64, hw: f64, n: usize) -> Result<f64> {
    let per_side = n / 4;
    let corners = [
        c + Complex64::new(hw, -hw),
        c + Complex64::new(hw, hw),
        c + Complex64::new(-hw, hw),
        c + Complex64::new(-hw, -hw),
    ];
    let mut acc = Complex64::new(0.0, 0.0);
    for side in 0..4 {
        let (a, b) = (corners[side], corners[(side + 1) % 4]);
        let h = (b - a) / per_side as f64;
        let terms = (0..per_side)
            .into_par_iter()
            .map(|j| {
                let z = a + h * j as f64;
                let e = evaluate(params, nu, z)?;
                let w = if j == 0 { 0.5 } else { 1.0 };
                Ok((e.df / e.f).to_c64() * w)
            })
            .collect::<Result<Vec<_>>>()?;
        let end = evaluate(params, nu, b)?;
        acc += (terms.iter().sum::<Complex64>() + (end.df / end.f).to_c64() * 0.5) * h;
    }
    Ok((acc / Complex64::new(0.0, 2.0 * PI)).re)
}

fn scale_free_residual(params: &Params, nu: i32, k: Complex64) -> Result<f64> {
    let e = evaluate(params, nu, k)?;
    if e.f.is_zero() {
        return Ok(0.0);
    }
    Ok((e.f.ln_abs() - e.df.ln_abs() - k.norm().ln()).exp())
}

fn finish(params: &Params, nu: i32, run: Newton) -> Result<Resonance> {
    let mut k = run.k;
    let mut step = run.last_step;
    if k.im.abs() < NEAR_REAL * k.norm() {
        let polished = polish_near_real(params, nu, k)?;
        step = step.max((polished - k).norm().min(NEAR_REAL * k.norm()));
        k = polished;
    }
    let residual = scale_free_residual(params, nu, k)?;
    if !(residual < RESIDUAL_TOL) {
        return Err(Error::Convergence {
            iterations: run.iters,
            last_step: step,
            trace: vec![(k.re, k.im)],
        });
    }
    let hw = (10.0 * step).max(MIN_BOX * k.norm());
    let winding = winding_number(params, nu, k, hw)?;
    let verified = (winding - 1.0).abs() < 0.01;
    Ok(Resonance {
        nu,
        m: 0,
        k,
        residual,
        newton_iters: run.iters,
        verified,
        winding,
        box_half_width: hw,
    })
}

/// Newton from `seed`, near-real polishing, then an argument-principle
/// isolation check. A winding number other than one is an error.
pub fn refine_resonance(nu: i32, seed: Complex64, params: &Params) -> Result<Resonance> {
    check_family(params)?;
    let run = newton(params, nu, seed)?;
    let r = finish(params, nu, run)?;
    if !r.verified {
        return Err(Error::Isolation { winding: r.winding });
    }
    Ok(r)
}

/// Depth of the strip searched for resonances: `1.5 h + 0.1` where
/// `h = |ln|(A_N√n_i + 1)/(A_N√n_i − 1)|| / (2√n_i)` is the limiting depth of
/// the high-frequency family, capped at 5.
pub fn strip_depth(params: &Params) -> f64 {
    let s = params.n_i.sqrt();
    let q = params.a_n * s;
    let h = ((q + 1.0) / (q - 1.0)).abs().ln().abs() / (2.0 * s);
    1.5 * h.min(5.0) + 0.1
}

/// Accumulated phase change of `F_ν` along the segment `a → b`.
fn phase_change(params: &Params, nu: i32, a: Complex64, b: Complex64) -> Result<f64> {
    let pieces = ((b - a).norm() / (LEAF_SIZE / 2.0)).ceil().max(1.0) as usize;
    let pts: Vec<Complex64> = (0..=pieces)
        .map(|j| a + (b - a) * (j as f64 / pieces as f64))
        .collect();
    let vals = pts
        .par_iter()
        .map(|&z| evaluate(params, nu, z).map(|e| e.f))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for j in 0..pieces {
        total += refine_phase(params, nu, pts[j], vals[j], pts[j + 1], vals[j + 1], 0)?;
    }
    Ok(total)
}

fn arg_ratio(fb: Scaled, fa: Scaled) -> f64 {
    (fb.m / fa.m).arg()
}

fn refine_phase(
    params: &Params,
    nu: i32,
    a: Complex64,
    fa: Scaled,
    b: Complex64,
    fb: Scaled,
    depth: usize,
) -> Result<f64> {
    let d = arg_ratio(fb, fa);
    if depth >= 60 {
        return Ok(d);
    }
    let mid = 0.5 * (a + b);
    let fm = evaluate(params, nu, mid)?.f;
    let (d1, d2) = (arg_ratio(fm, fa), arg_ratio(fb, fm));
    if d.abs() < PHASE_STEP
        && d1.abs() < PHASE_STEP
        && d2.abs() < PHASE_STEP
        && (d1 + d2 - d).abs() < 1e-6
    {
        return Ok(d);
    }
    Ok(refine_phase(params, nu, a, fa, mid, fm, depth + 1)?
        + refine_phase(params, nu, mid, fm, b, fb, depth + 1)?)
}

/// Rectangle `[x0, x1] × [y0, y1]` with cached edge phases.
#[derive(Clone, Copy, Debug)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn corner(&self, i: usize) -> Complex64 {
        match i {
            0 => Complex64::new(self.x0, self.y0),
            1 => Complex64::new(self.x1, self.y0),
            2 => Complex64::new(self.x1, self.y1),
            _ => Complex64::new(self.x0, self.y1),
        }
    }

    fn count(&self, params: &Params, nu: i32) -> Result<i64> {
        let mut total = 0.0;
        for i in 0..4 {
            total += phase_change(params, nu, self.corner(i), self.corner((i + 1) % 4))?;
        }
        Ok((total / (2.0 * PI)).round() as i64)
    }

    fn split(&self) -> [Rect; 2] {
        if self.x1 - self.x0 >= self.y1 - self.y0 {
            let xm = 0.5 * (self.x0 + self.x1);
            [Rect { x1: xm, ..*self }, Rect { x0: xm, ..*self }]
        } else {
            let ym = 0.5 * (self.y0 + self.y1);
            [Rect { y1: ym, ..*self }, Rect { y0: ym, ..*self }]
        }
    }

    fn size(&self) -> f64 {
        (self.x1 - self.x0).max(self.y1 - self.y0)
    }

    fn contains(&self, z: Complex64, pad: f64) -> bool {
        z.re >= self.x0 - pad
            && z.re <= self.x1 + pad
            && z.im >= self.y0 - pad
            && z.im <= self.y1 + pad
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

/// Number of zeros of `F_ν` in the rectangle `re × im`, by the argument
/// principle. No zero may lie on the boundary.
pub fn count_zeros(params: &Params, nu: i32, re: (f64, f64), im: (f64, f64)) -> Result<i64> {
    check_family(params)?;
    if !(re.0 < re.1 && im.0 < im.1) {
        return Err(Error::Domain(format!("empty rectangle {re:?} x {im:?}")));
    }
    let rect = Rect {
        x0: re.0,
        x1: re.1,
        y0: im.0,
        y1: im.1,
    };
    rect.count(params, nu)
}

/// Locates the `count` zeros inside `rect` (a count already established by
/// the argument principle), with Newton runs for each.
fn isolate(params: &Params, nu: i32, rect: Rect, count: i64, out: &mut Vec<Newton>) -> Result<()> {
    if count <= 0 {
        return Ok(());
    }
    if count == 1 && rect.size() <= LEAF_SIZE {
        if let Ok(run) = newton(params, nu, rect.center()) {
            if rect.contains(run.k, 1e-9 * run.k.norm()) {
                out.push(run);
                return Ok(());
            }
        }
    }
    if rect.size() < 1e-10 {
        return Err(Error::NotFound(format!(
            "zero cluster of multiplicity {count} near {} not resolved",
            rect.center()
        )));
    }
    let [a, b] = rect.split();
    let ca = a.count(params, nu)?;
    isolate(params, nu, a, ca, out)?;
    isolate(params, nu, b, count - ca, out)
}

/// The first `count` zeros of `F_ν` with `Re k > 0` in the strip
/// `−strip_depth ≤ Im k < 0`, ordered by increasing real part.
pub fn find_resonances(params: &Params, nu: i32, count: usize) -> Result<Vec<Resonance>> {
    check_family(params)?;
    let depth = strip_depth(params);
    let re_limit =
        (2.0 * nu.unsigned_abs() as f64 + 10.0 * count as f64 + 20.0) / params.n_i.sqrt().min(1.0);
    let mut found: Vec<Newton> = Vec::new();
    let mut x0 = SEARCH_START;
    while found.len() < count {
        if x0 > re_limit {
            return Err(Error::NotFound(format!(
                "only {} zeros of F_{nu} with Re k < {re_limit:.1}",
                found.len()
            )));
        }
        let rect = Rect {
            x0,
            x1: x0 + SEARCH_WINDOW,
            y0: -depth,
            y1: UPPER_MARGIN,
        };
        let n = rect.count(params, nu)?;
        let mut here = Vec::new();
        isolate(params, nu, rect, n, &mut here)?;
        here.sort_by(|a, b| a.k.re.total_cmp(&b.k.re));
        found.extend(here);
        x0 += SEARCH_WINDOW;
    }
    found.truncate(count);
    found
        .into_iter()
        .enumerate()
        .map(|(i, run)| {
            let mut r = finish(params, nu, run)?;
            r.m = i + 1;
            Ok(r)
        })
        .collect()
}

/// `k_{ν,m}`: the `m`-th zero in the ordering of [`find_resonances`].
pub fn find_resonance(params: &Params, nu: i32, m: usize) -> Result<Resonance> {
    if m == 0 {
        return Err(Error::Domain("m is 1-based".into()));
    }
    Ok(find_resonances(params, nu, m)?.pop().expect("m zeros"))
}

/// Outcome of a strip scan over a family of `(ν, m)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StripScan {
    /// Sorted by `ν`, then `m`.
    pub resonances: Vec<Resonance>,
    pub failures: Vec<ScanFailure>,
    /// Largest `Im k` over the verified resonances.
    pub max_im: Option<f64>,
    pub condition_holds: bool,
    /// `−max_im` when the parameters satisfy `n_i/n_o ≤ A_D/A_N ≤ a_i/a_o`
    /// and every verified resonance lies strictly below the axis.
    pub delta: Option<f64>,
    /// Whether `|Im k_{ν,1}|` strictly decreases along increasing `ν`.
    pub first_im_decreasing: Option<bool>,
    /// Whether `Re k_{ν,1}` strictly increases along increasing `ν`.
    pub first_re_increasing: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanFailure {
    pub nu: i32,
    pub error: String,
}

/// Resonances `k_{ν,m}` for every `ν` and `m` in range, with strip statistics.
pub fn scan_strip(
    params: &Params,
    nus: RangeInclusive<i32>,
    ms: RangeInclusive<usize>,
) -> Result<StripScan> {
    check_family(params)?;
    let condition_holds = check_conditions(params).nontrapping;
    if nus.is_empty() || ms.is_empty() || *ms.start() == 0 {
        return Ok(StripScan {
            condition_holds,
            ..StripScan::default()
        });
    }
    let m_hi = *ms.end();
    let rows: Vec<(i32, Result<Vec<Resonance>>)> = nus
        .clone()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|nu| (nu, find_resonances(params, nu, m_hi)))
        .collect();
    let mut scan = StripScan {
        condition_holds,
        ..StripScan::default()
    };
    for (nu, row) in rows {
        match row {
            Ok(rs) => scan
                .resonances
                .extend(rs.into_iter().filter(|r| ms.contains(&r.m))),
            Err(e) => scan.failures.push(ScanFailure {
                nu,
                error: e.to_string(),
            }),
        }
    }
    scan.max_im = scan
        .resonances
        .iter()
        .filter(|r| r.verified)
        .map(|r| r.k.im)
        .reduce(f64::max);
    scan.delta = match scan.max_im {
        Some(m) if condition_holds && m < 0.0 => Some(-m),
        _ => None,
    };
    let firsts: Vec<&Resonance> = scan.resonances.iter().filter(|r| r.m == 1).collect();
    if firsts.len() >= 2 {
        scan.first_im_decreasing =
            Some(firsts.windows(2).all(|w| w[1].k.im.abs() < w[0].k.im.abs()));
        scan.first_re_increasing = Some(firsts.windows(2).all(|w| w[1].k.re > w[0].k.re));
    }
    Ok(scan)
}
