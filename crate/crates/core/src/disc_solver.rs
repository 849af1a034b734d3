//! Mode-by-mode solution of the transmission problem on the unit disc.
//!
//! In the Fourier mode `e^{iνθ}` the interior field is
//! `A J_ν(κ_i r) + c' J_ν(β r)` and the exterior field is `B H^(1)_ν(κ_o r)`,
//! where `κ_{i,o} = k sqrt(n_{i,o}/a_{i,o})` and the second interior term is
//! the particular solution for `f_i = c J_ν(β r) e^{iνθ}`. Matching both
//! transmission conditions at `r = 1` is a 2×2 linear system for `(A, B)`.
//! Coefficients are kept in [`Scaled`] form so that high orders at small
//! arguments cost nothing in range.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Params, DISC_RADIUS};
use crate::quadrature::{pairwise_sum, Composite};
use crate::specfun::{CylinderTable, Scaled};

/// Relative transmission-residual tolerance for an accepted solve.
pub const TRANSMISSION_TOL: f64 = 1e-10;
/// Gauss–Legendre nodes per radial panel.
pub const DEFAULT_NODES: usize = 64;
/// Largest accepted relative change under node doubling.
pub const QUADRATURE_TOL: f64 = 1e-8;
/// Largest accepted plane-wave truncation tail.
pub const TRUNCATION_TOL: f64 = 1e-12;

/// Interior volume source `f_i = c J_ν(β r) e^{iνθ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeSource {
    pub c: Complex64,
    pub beta: f64,
}

/// Data of one Fourier mode: `f_i` (optional), `g_D = g_d e^{iνθ}` and
/// `g_N = g_n e^{iνθ}`. The exterior source `f_o` is always zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalSource {
    pub nu: i32,
    pub volume: Option<VolumeSource>,
    pub g_d: Complex64,
    pub g_n: Complex64,
}

impl ModalSource {
    pub fn zero(nu: i32) -> Self {
        ModalSource {
            nu,
            volume: None,
            g_d: Complex64::new(0.0, 0.0),
            g_n: Complex64::new(0.0, 0.0),
        }
    }

    pub fn volume(nu: i32, c: Complex64, beta: f64) -> Self {
        ModalSource {
            volume: Some(VolumeSource { c, beta }),
            ..Self::zero(nu)
        }
    }

    pub fn boundary(nu: i32, g_d: Complex64, g_n: Complex64) -> Self {
        ModalSource {
            g_d,
            g_n,
            ..Self::zero(nu)
        }
    }

    /// Every datum multiplied by `lambda`.
    pub fn scaled(&self, lambda: Complex64) -> Self {
        ModalSource {
            nu: self.nu,
            volume: self.volume.map(|v| VolumeSource {
                c: v.c * lambda,
                beta: v.beta,
            }),
            g_d: self.g_d * lambda,
            g_n: self.g_n * lambda,
        }
    }
}

/// Incident plane wave `amplitude · exp(i κ_o (x cos φ + y sin φ))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave {
    pub amplitude: Complex64,
    pub angle: f64,
}

/// Interior particular solution `c' J_ν(β r)` with `c' = c / (k² n_i − a_i β²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particular {
    pub c: Complex64,
    pub beta: f64,
}

/// Solved coefficients of one mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalSolution {
    pub nu: i32,
    /// Coefficient of `J_ν(κ_i r)` inside.
    pub a_int: Scaled,
    /// Coefficient of `H^(1)_ν(κ_o r)` outside.
    pub b_ext: Scaled,
    pub particular: Option<Particular>,
    /// Jacobi–Anger coefficient of `J_ν(κ_o r)` when the mode belongs to a
    /// plane-wave scattering solve; the total field adds it everywhere.
    pub incident: Option<Complex64>,
    pub source: ModalSource,
    /// Frobenius condition number of the column-normalized 2×2 system.
    pub condition: f64,
    /// Largest relative transmission residual at `r = 1`.
    pub residual: f64,
}

impl ModalSolution {
    pub fn zero(nu: i32) -> Self {
        ModalSolution {
            nu,
            a_int: Scaled::ZERO,
            b_ext: Scaled::ZERO,
            particular: None,
            incident: None,
            source: ModalSource::zero(nu),
            condition: 1.0,
            residual: 0.0,
        }
    }
}

/// Which field `field_grid` and the radial evaluators return.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldPart {
    /// The unknown `u` of the boundary value problem.
    Solution,
    /// `u` plus the incident wave of plane-wave solves (transmitted field
    /// inside, incident plus scattered outside).
    Total,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Region {
    Interior,
    Exterior,
}

/// `k² n_i − a_i β²`, rejected when it (nearly) vanishes.
fn particular_denominator(params: &Params, beta: f64) -> Result<Complex64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let k2n = params.k * params.k * params.n_i;
    let den = k2n - params.a_i * beta * beta;
    if den.norm() <= 1e-12 * k2n.norm() {
        return Err(Error::Precondition(format!(
            "beta^2 = {} equals n_i k^2 / a_i: no non-resonant particular solution",
            beta * beta
        )));
    }
    Ok(den)
}

fn ln_hypot(a: Scaled, b: Scaled) -> f64 {
    let (la, lb) = (a.ln_abs(), b.ln_abs());
    let (hi, lo) = if la >= lb { (la, lb) } else { (lb, la) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + 0.5 * (2.0 * (lo - hi)).exp().ln_1p()
}

fn rel(res: Scaled, scales: &[Scaled]) -> f64 {
    let top = scales
        .iter()
        .map(|s| s.ln_abs())
        .fold(f64::NEG_INFINITY, f64::max);
    if res.is_zero() {
        return 0.0;
    }
    if top == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    (res.ln_abs() - top).exp()
}

/// Solves one mode. Requires valid parameters with `Im k >= 0`.
pub fn solve_modal(params: &Params, source: &ModalSource) -> Result<ModalSolution> {
    params.validate_for_solve()?;
    let nu = source.nu;
    let n = nu.unsigned_abs() as usize;
    let (kap_i, kap_o) = (params.kappa_i(), params.kappa_o());
    let inner = CylinderTable::bessel_only(n, kap_i)?;
    let outer = CylinderTable::new(n, kap_o)?;
    let (j, jp) = (inner.j(nu), inner.jp(nu));
    let (h, hp) = (outer.h(nu), outer.hp(nu));

    let c = |z: Complex64| Scaled::from_c64(z);
    let a_d = c(params.a_d.into());
    let dir_h = h;
    let dir_j = -(j * a_d);
    let neu_h = hp.scale(params.a_o * kap_o);
    let neu_j = -jp.scale(params.a_n * params.a_i * kap_i);

    let mut d1 = c(source.g_d);
    let mut d2 = c(source.g_n);
    let mut particular = None;
    let (mut pj_dir, mut pj_neu) = (Scaled::ZERO, Scaled::ZERO);
    if let Some(v) = source.volume {
        let den = particular_denominator(params, v.beta)?;
        let p = v.c / den;
        let bt = CylinderTable::bessel_only(n, v.beta.into())?;
        pj_dir = bt.j(nu).scale(p * params.a_d);
        pj_neu = bt.jp(nu).scale(p * params.a_n * params.a_i * v.beta);
        d1 = d1 + pj_dir;
        d2 = d2 + pj_neu;
        particular = Some(Particular { c: p, beta: v.beta });
    }

    let det = dir_h * neu_j - dir_j * neu_h;
    let f_nu = (det.ln_abs() - params.k.norm().ln()).exp();
    if det.is_zero() || !det.is_finite() {
        return Err(Error::NearResonance {
            f_nu,
            residual: f64::INFINITY,
        });
    }
    let b = (d1 * neu_j - dir_j * d2) / det;
    let a = (dir_h * d2 - neu_h * d1) / det;

    let r_dir = dir_h * b + dir_j * a - d1;
    let r_neu = neu_h * b + neu_j * a - d2;
    let residual = rel(r_dir, &[dir_h * b, dir_j * a, pj_dir, c(source.g_d)])
        .max(rel(r_neu, &[neu_h * b, neu_j * a, pj_neu, c(source.g_n)]));
    if residual > TRANSMISSION_TOL {
        return Err(Error::NearResonance { f_nu, residual });
    }
    let ln_cols = ln_hypot(dir_h, neu_h) + ln_hypot(dir_j, neu_j);
    let condition = 2.0 * (ln_cols - det.ln_abs()).exp();

    Ok(ModalSolution {
        nu,
        a_int: a,
        b_ext: b,
        particular,
        incident: None,
        source: *source,
        condition,
        residual,
    })
}

/// `c_ν = (π (J_ν(k)² − J_{ν+1}(k) J_{ν−1}(k)))^{-1/2}`, the constant making
/// `‖c_ν J_ν(k r) e^{iνθ}‖_{L²(B_1)} = 1`.
pub fn c_nu(nu: i32, k: f64) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    let n = nu.unsigned_abs() as usize;
    let t = CylinderTable::bessel_only(n + 1, k.into())?;
    let rad = t.j(nu) * t.j(nu) - t.j(nu + 1) * t.j(nu - 1);
    if !(rad.m.re > 0.0) {
        return Err(Error::Domain(format!(
            "radicand {} is not positive at nu={nu}, k={k}",
            rad.to_c64()
        )));
    }
    let ln_c = -0.5 * (PI.ln() + rad.ln_abs());
    let v = ln_c.exp();
    if !v.is_finite() {
        return Err(Error::AccuracyLoss {
            estimate: f64::INFINITY,
            context: format!("c_nu overflows at nu={nu}, k={k}"),
        });
    }
    Ok(v)
}

/// `‖c J_ν(β r) e^{iνθ}‖²_{L²(B_1)} = π |c|² (J_ν(β)² − J_{ν+1}(β) J_{ν−1}(β))`.
pub fn volume_source_norm_sq(nu: i32, src: &VolumeSource) -> Result<f64> {
    let n = nu.unsigned_abs() as usize;
    let t = CylinderTable::bessel_only(n + 1, src.beta.into())?;
    let rad = t.j(nu) * t.j(nu) - t.j(nu + 1) * t.j(nu - 1);
    Ok(PI * src.c.norm_sqr() * rad.to_c64().re)
}

/// Truncation order for plane-wave expansions evaluated out to `r_eval`:
/// `⌈s + 8 s^{1/3} + 20⌉` with `s = sqrt(n_i/a_i) k r_eval`.
pub fn recommended_truncation(params: &Params, r_eval: f64) -> usize {
    let s = (params.n_i / params.a_i).sqrt() * params.k.norm() * r_eval;
    (s + 8.0 * s.cbrt() + 20.0).ceil() as usize
}

/// Modal solutions of a plane-wave scattering problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveSolution {
    pub wave: PlaneWave,
    pub nu_max: usize,
    /// Modes `-nu_max ..= nu_max` in increasing order.
    pub modes: Vec<ModalSolution>,
    /// Estimated size of the discarded modes on `r <= R`.
    pub tail_bound: f64,
}

/// The boundary value problem satisfied by the scattered field `u = u^T − u^I`
/// of one incident mode `a_ν J_ν(κ_o r) e^{iνθ}`:
/// `f_i = k²(a_i n_o/a_o − n_i) u^I`, `g_D = (A_D − 1) u^I`,
/// `g_N = (A_N − 1) a_i ∂_r u^I`.
pub fn scattering_source(params: &Params, nu: i32, a_nu: Complex64) -> Result<ModalSource> {
    let k = params.validate_real_k()?;
    let kap_o = params.kappa_o().re;
    let n = nu.unsigned_abs() as usize;
    let t = CylinderTable::bessel_only(n, kap_o.into())?;
    let (j, jp) = (t.j(nu).to_c64(), t.jp(nu).to_c64());
    let contrast = k * k * (params.a_i * params.n_o / params.a_o - params.n_i);
    let volume = (contrast != 0.0).then(|| VolumeSource {
        c: a_nu * contrast,
        beta: kap_o,
    });
    Ok(ModalSource {
        nu,
        volume,
        g_d: a_nu * (params.a_d - 1.0) * j,
        g_n: a_nu * (params.a_n - 1.0) * params.a_i * kap_o * jp,
    })
}

/// Jacobi–Anger coefficient `amplitude · i^ν e^{−iνφ}`.
pub fn jacobi_anger(wave: &PlaneWave, nu: i32) -> Complex64 {
    let i_pow = match nu.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    wave.amplitude * i_pow * Complex64::from_polar(1.0, -(nu as f64) * wave.angle)
}

/// Solves plane-wave scattering for modes `|ν| <= nu_max`. Fails with a
/// truncation error when the discarded tail on `r <= R` exceeds
/// [`TRUNCATION_TOL`].
pub fn solve_plane_wave(
    params: &Params,
    wave: &PlaneWave,
    nu_max: usize,
) -> Result<PlaneWaveSolution> {
    params.validate_real_k()?;
    let tail_bound = truncation_tail(params, wave, nu_max)?;
    if tail_bound > TRUNCATION_TOL {
        return Err(Error::Truncation { tail_bound });
    }
    let top = nu_max as i32;
    let modes = (-top..=top)
        .into_par_iter()
        .map(|nu| {
            let a_nu = jacobi_anger(wave, nu);
            let src = scattering_source(params, nu, a_nu)?;
            let mut sol = solve_modal(params, &src)?;
            sol.incident = Some(a_nu);
            Ok(sol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PlaneWaveSolution {
        wave: *wave,
        nu_max,
        modes,
        tail_bound,
    })
}

fn truncation_tail(params: &Params, wave: &PlaneWave, nu_max: usize) -> Result<f64> {
    let s = params
        .kappa_i()
        .norm()
        .max(params.kappa_o().norm() * params.r_report);
    let t = CylinderTable::bessel_only(nu_max + 2, s.into())?;
    let next = t
        .j(nu_max as i32 + 1)
        .abs()
        .max(t.j(nu_max as i32 + 2).abs());
    Ok(4.0 * wave.amplitude.norm() * next)
}

/// Bessel tables at the arguments needed for one radius.
struct RadialTables {
    nmax: usize,
    tables: Vec<(Complex64, bool, CylinderTable)>,
}

impl RadialTables {
    fn new(nmax: usize) -> Self {
        RadialTables {
            nmax,
            tables: Vec::new(),
        }
    }

    fn get(&mut self, z: Complex64, hankel: bool) -> Result<&CylinderTable> {
        let pos = self
            .tables
            .iter()
            .position(|(w, h, _)| *w == z && (*h || !hankel));
        let idx = match pos {
            Some(i) => i,
            None => {
                let t = if hankel {
                    CylinderTable::new(self.nmax, z)?
                } else {
                    CylinderTable::bessel_only(self.nmax, z)?
                };
                self.tables.push((z, hankel, t));
                self.tables.len() - 1
            }
        };
        Ok(&self.tables[idx].2)
    }
}

/// Mode amplitudes `(u_ν(r), ∂_r u_ν(r))` (without the angular factor).
fn radial_values(
    params: &Params,
    sols: &[ModalSolution],
    r: f64,
    region: Region,
    part: FieldPart,
    tabs: &mut RadialTables,
) -> Result<Vec<(Complex64, Complex64)>> {
    let (kap_i, kap_o) = (params.kappa_i(), params.kappa_o());
    let mut out = Vec::with_capacity(sols.len());
    for s in sols {
        let nu = s.nu;
        let (mut u, mut du) = match region {
            Region::Interior => {
                let t = tabs.get(kap_i * r, false)?;
                let mut u = (s.a_int * t.j(nu)).to_c64();
                let mut du = (s.a_int * t.jp(nu)).to_c64() * kap_i;
                if let Some(p) = s.particular {
                    let t = tabs.get((p.beta * r).into(), false)?;
                    u += t.j(nu).to_c64() * p.c;
                    du += t.jp(nu).to_c64() * p.c * p.beta;
                }
                (u, du)
            }
            Region::Exterior => {
                let t = tabs.get(kap_o * r, true)?;
                let u = (s.b_ext * t.h(nu)).to_c64();
                let du = (s.b_ext * t.hp(nu)).to_c64() * kap_o;
                (u, du)
            }
        };
        if let (FieldPart::Total, Some(a)) = (part, s.incident) {
            let t = tabs.get(kap_o * r, false)?;
            u += t.j(nu).to_c64() * a;
            du += t.jp(nu).to_c64() * a * kap_o;
        }
        out.push((u, du));
    }
    Ok(out)
}

fn max_order(sols: &[ModalSolution]) -> usize {
    sols.iter()
        .map(|s| s.nu.unsigned_abs() as usize)
        .max()
        .unwrap_or(0)
}

/// Interior and exterior traces `(u_i, ∂_r u_i, u_o, ∂_r u_o)` of one mode at
/// `r = 1`.
pub fn traces(params: &Params, sol: &ModalSolution) -> Result<[Complex64; 4]> {
    let sols = std::slice::from_ref(sol);
    let mut tabs = RadialTables::new(max_order(sols));
    let (ui, dui) = radial_values(
        params,
        sols,
        DISC_RADIUS,
        Region::Interior,
        FieldPart::Solution,
        &mut tabs,
    )?[0];
    let (uo, duo) = radial_values(
        params,
        sols,
        DISC_RADIUS,
        Region::Exterior,
        FieldPart::Solution,
        &mut tabs,
    )?[0];
    Ok([ui, dui, uo, duo])
}

/// Relative residuals of the Dirichlet and Neumann transmission conditions,
/// re-evaluated from the stored coefficients.
pub fn transmission_residuals(params: &Params, sol: &ModalSolution) -> Result<(f64, f64)> {
    let [ui, dui, uo, duo] = traces(params, sol)?;
    let (g_d, g_n) = (sol.source.g_d, sol.source.g_n);
    let dir_terms = [uo.norm(), (ui * params.a_d).norm(), g_d.norm()];
    let neu_a = params.a_n * params.a_i;
    let neu_terms = [(duo * params.a_o).norm(), (dui * neu_a).norm(), g_n.norm()];
    let scale = |t: &[f64]| t.iter().cloned().fold(0.0, f64::max);
    let frac = |r: f64, s: f64| if r == 0.0 { 0.0 } else { r / s };
    let dir = frac((uo - ui * params.a_d - g_d).norm(), scale(&dir_terms));
    let neu = frac(
        (duo * params.a_o - dui * neu_a - g_n).norm(),
        scale(&neu_terms),
    );
    Ok((dir, neu))
}

/// Norms of a (multi-mode) solution on `B_1` and `D_R = B_R \ B̄_1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// `‖u_i‖_{B_1}`
    pub l2_int: f64,
    /// `‖∇u_i‖_{B_1}`
    pub h1semi_int: f64,
    /// `‖u_o‖_{D_R}`
    pub l2_ext: f64,
    /// `‖∇u_o‖_{D_R}`
    pub h1semi_ext: f64,
    /// `a_i‖∇u_i‖² + k²n_i‖u_i‖² + (a_o‖∇u_o‖² + k²n_o‖u_o‖²)/(A_D A_N)`
    pub weighted_energy: f64,
    pub quadrature_nodes: usize,
    /// Largest relative change of the squared norms when the panel count is
    /// doubled.
    pub doubling_change: f64,
}

impl NormReport {
    fn from_squares(params: &Params, sq: [f64; 4], nodes: usize, change: f64) -> Self {
        let k2 = params.k.norm_sqr();
        let interior = params.a_i * sq[1] + k2 * params.n_i * sq[0];
        let exterior = params.a_o * sq[3] + k2 * params.n_o * sq[2];
        NormReport {
            l2_int: sq[0].sqrt(),
            h1semi_int: sq[1].sqrt(),
            l2_ext: sq[2].sqrt(),
            h1semi_ext: sq[3].sqrt(),
            weighted_energy: interior + exterior / (params.a_d * params.a_n),
            quadrature_nodes: nodes,
            doubling_change: change,
        }
    }

    /// `a_i‖∇u_i‖² + k²n_i‖u_i‖²`.
    pub fn interior_energy(&self, params: &Params) -> f64 {
        params.a_i * self.h1semi_int.powi(2)
            + params.k.norm_sqr() * params.n_i * self.l2_int.powi(2)
    }

    /// `(a_o‖∇u_o‖² + k²n_o‖u_o‖²)/(A_D A_N)`.
    pub fn exterior_energy(&self, params: &Params) -> f64 {
        (params.a_o * self.h1semi_ext.powi(2)
            + params.k.norm_sqr() * params.n_o * self.l2_ext.powi(2))
            / (params.a_d * params.a_n)
    }
}

fn panel_length(params: &Params) -> f64 {
    let ratio = (params.n_i / params.a_i).max(params.n_o / params.a_o);
    (2.0 * PI / (params.k.norm() * ratio.sqrt())).min(1.0)
}

/// Squared norms `[‖u_i‖², ‖∇u_i‖², ‖u_o‖², ‖∇u_o‖²]` of each mode.
fn mode_squares(
    params: &Params,
    sols: &[ModalSolution],
    int_rule: &Composite,
    ext_rule: &Composite,
) -> Result<Vec<[f64; 4]>> {
    let nmax = max_order(sols);
    let nus: Vec<f64> = sols.iter().map(|s| s.nu as f64).collect();
    let node_terms = |rule: &Composite, region: Region| -> Result<Vec<Vec<[f64; 2]>>> {
        rule.nodes
            .par_iter()
            .zip(rule.weights.par_iter())
            .map(|(&r, &w)| {
                let mut tabs = RadialTables::new(nmax);
                let vals = radial_values(params, sols, r, region, FieldPart::Solution, &mut tabs)?;
                Ok(vals
                    .iter()
                    .zip(&nus)
                    .map(|((u, du), nu)| {
                        let u2 = u.norm_sqr();
                        [w * u2 * r, w * (du.norm_sqr() + nu * nu * u2 / (r * r)) * r]
                    })
                    .collect())
            })
            .collect()
    };
    let inner = node_terms(int_rule, Region::Interior)?;
    let outer = node_terms(ext_rule, Region::Exterior)?;
    let column = |rows: &[Vec<[f64; 2]>], m: usize, c: usize| -> f64 {
        let v: Vec<f64> = rows.iter().map(|row| row[m][c]).collect();
        2.0 * PI * pairwise_sum(&v)
    };
    Ok((0..sols.len())
        .map(|m| {
            [
                column(&inner, m, 0),
                column(&inner, m, 1),
                column(&outer, m, 0),
                column(&outer, m, 1),
            ]
        })
        .collect())
}

fn sum_modes(per_mode: &[[f64; 4]]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (c, slot) in out.iter_mut().enumerate() {
        let v: Vec<f64> = per_mode.iter().map(|m| m[c]).collect();
        *slot = pairwise_sum(&v);
    }
    out
}

fn rules(params: &Params, nodes: usize) -> (Composite, Composite) {
    let len = panel_length(params);
    (
        Composite::new(0.0, DISC_RADIUS, len, nodes),
        Composite::new(DISC_RADIUS, params.r_report, len, nodes),
    )
}

/// Per-mode norm reports, each certified by panel doubling.
pub fn norms_by_mode(
    params: &Params,
    sols: &[ModalSolution],
    nodes: usize,
) -> Result<Vec<NormReport>> {
    let (ri, ro) = rules(params, nodes);
    let coarse = mode_squares(params, sols, &ri, &ro)?;
    let fine = mode_squares(
        params,
        sols,
        &ri.refined(0.0, DISC_RADIUS),
        &ro.refined(DISC_RADIUS, params.r_report),
    )?;
    coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| {
            let change = doubling_change(c, f);
            if change > QUADRATURE_TOL {
                return Err(Error::Quadrature { change });
            }
            Ok(NormReport::from_squares(
                params,
                *c,
                ri.len() + ro.len(),
                change,
            ))
        })
        .collect()
}

fn doubling_change(c: &[f64; 4], f: &[f64; 4]) -> f64 {
    c.iter()
        .zip(f)
        .map(|(a, b)| {
            let d = (a - b).abs();
            if d == 0.0 {
                0.0
            } else {
                d / a.abs().max(b.abs())
            }
        })
        .fold(0.0, f64::max)
}

/// Norms of the sum of the given modes. Modes are orthogonal in `θ`, so the
/// squared norms are sums of per-mode squared norms.
pub fn norms(params: &Params, sols: &[ModalSolution], nodes: usize) -> Result<NormReport> {
    params.validate()?;
    if nodes == 0 {
        return Err(Error::Domain(
            "quadrature needs at least one node per panel".into(),
        ));
    }
    let (ri, ro) = rules(params, nodes);
    let coarse = sum_modes(&mode_squares(params, sols, &ri, &ro)?);
    let fine = sum_modes(&mode_squares(
        params,
        sols,
        &ri.refined(0.0, DISC_RADIUS),
        &ro.refined(DISC_RADIUS, params.r_report),
    )?);
    let change = doubling_change(&coarse, &fine);
    if change > QUADRATURE_TOL {
        return Err(Error::Quadrature { change });
    }
    Ok(NormReport::from_squares(
        params,
        coarse,
        ri.len() + ro.len(),
        change,
    ))
}

/// A rectangular grid of `nx × ny` points including the corners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    /// `[-extent, extent]²` with `n × n` points.
    pub fn square(extent: f64, n: usize) -> Self {
        Grid {
            x_min: -extent,
            x_max: extent,
            y_min: -extent,
            y_max: extent,
            nx: n,
            ny: n,
        }
    }

    fn coord(lo: f64, hi: f64, n: usize, j: usize) -> f64 {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * j as f64 / (n - 1) as f64
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        Self::coord(self.x_min, self.x_max, self.nx, j)
    }

    pub fn y(&self, j: usize) -> f64 {
        Self::coord(self.y_min, self.y_max, self.ny, j)
    }
}

/// Sampled field, row-major with `x` varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl FieldGrid {
    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[iy * self.grid.nx + ix]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Value of the modal series at one point.
pub fn field_at(
    params: &Params,
    sols: &[ModalSolution],
    x: f64,
    y: f64,
    part: FieldPart,
) -> Result<Complex64> {
    let mut tabs = RadialTables::new(max_order(sols));
    point_value(params, sols, x, y, part, &mut tabs)
}

fn point_value(
    params: &Params,
    sols: &[ModalSolution],
    x: f64,
    y: f64,
    part: FieldPart,
    tabs: &mut RadialTables,
) -> Result<Complex64> {
    let r = x.hypot(y);
    let theta = y.atan2(x);
    let region = if r <= DISC_RADIUS {
        Region::Interior
    } else {
        Region::Exterior
    };
    let vals = radial_values(params, sols, r, region, part, tabs)?;
    Ok(sols
        .iter()
        .zip(vals)
        .map(|(s, (u, _))| u * Complex64::from_polar(1.0, s.nu as f64 * theta))
        .sum())
}

/// Samples the modal series on a grid, using the interior representation for
/// `r <= 1` and the exterior one beyond.
pub fn field_grid(
    params: &Params,
    sols: &[ModalSolution],
    grid: &Grid,
    part: FieldPart,
) -> Result<FieldGrid> {
    params.validate()?;
    if grid.nx == 0 || grid.ny == 0 {
        return Err(Error::Domain(
            "grid needs at least one point per axis".into(),
        ));
    }
    let nmax = max_order(sols);
    // Radial profiles depend only on r, so points are grouped by the exact
    // bits of r; a symmetric grid has about 8x fewer radii than points.
    let mut points: Vec<(u64, usize)> = (0..grid.nx * grid.ny)
        .map(|i| {
            let r = grid.x(i % grid.nx).hypot(grid.y(i / grid.nx));
            (r.to_bits(), i)
        })
        .collect();
    points.sort_unstable();
    let mut groups: Vec<&[(u64, usize)]> = Vec::new();
    let mut start = 0;
    for end in 1..=points.len() {
        if end == points.len() || points[end].0 != points[start].0 {
            groups.push(&points[start..end]);
            start = end;
        }
    }
    let sampled = groups
        .par_iter()
        .map(|group| {
            let r = f64::from_bits(group[0].0);
            let region = if r <= DISC_RADIUS {
                Region::Interior
            } else {
                Region::Exterior
            };
            let mut tabs = RadialTables::new(nmax);
            let vals = radial_values(params, sols, r, region, part, &mut tabs)?;
            Ok(group
                .iter()
                .map(|&(_, i)| {
                    let theta = grid.y(i / grid.nx).atan2(grid.x(i % grid.nx));
                    let u = sols
                        .iter()
                        .zip(&vals)
                        .map(|(s, (u, _))| u * Complex64::from_polar(1.0, s.nu as f64 * theta))
                        .sum();
                    (i, u)
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.nx * grid.ny];
    for (i, u) in sampled.into_iter().flatten() {
        values[i] = u;
    }
    Ok(FieldGrid {
        grid: *grid,
        values,
    })
}
