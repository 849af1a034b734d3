//! Wavenumber-explicit a priori bounds for the disc transmission problem:
//! their hypotheses, their right-hand sides, and numerical certification
//! against exactly computed solution norms.
//!
//! Three bounds are available:
//!
//! * [`Bound::Volume`]: volume data only, under
//!   `n_i/n_o ≤ A_D/A_N ≤ a_i/a_o`.
//! * [`Bound::Boundary`]: volume and interface data, under the strict form
//!   of the same chain, with the star-shapedness parameter `γ`.
//! * [`Bound::Perturbed`]: volume data only, allowing `n_i/n_o` above
//!   `A_D/A_N` by a `k`-dependent amount, with the interior energy weighted
//!   by `G`.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disc_solver::{
    c_nu, norms, recommended_truncation, solve_modal, solve_plane_wave, volume_source_norm_sq,
    ModalSolution, ModalSource, NormReport, PlaneWave, DEFAULT_NODES,
};
use crate::error::{Error, Result};
use crate::params::{Params, DIAM, DIM, GAMMA};
use crate::resonances::find_resonance;

/// Relative slack below which a negative margin is treated as roundoff.
pub const MARGIN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Volume,
    Boundary,
    Perturbed,
}

impl std::str::FromStr for Bound {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volume" => Ok(Bound::Volume),
            "boundary" => Ok(Bound::Boundary),
            "perturbed" => Ok(Bound::Perturbed),
            _ => Err(Error::Domain(format!(
                "unknown bound {s:?}; expected volume, boundary or perturbed"
            ))),
        }
    }
}

/// Which hypotheses hold, with their slacks (nonnegative when satisfied).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    /// `n_i/n_o ≤ A_D/A_N ≤ a_i/a_o`.
    pub nontrapping: bool,
    /// `A_D/A_N − n_i/n_o`.
    pub lower_slack: f64,
    /// `a_i/a_o − A_D/A_N`.
    pub upper_slack: f64,
    /// Both inequalities strict.
    pub strict: bool,
    /// `(n_o/n_i)(n_i/n_o − A_D/A_N)(d + √(d² + 4n_i(k diam)²/a_i))`.
    pub product: f64,
    /// `product < 1` and `A_D/A_N ≤ a_i/a_o`.
    pub perturbative: bool,
    /// `(1 − product)/2`.
    pub g: f64,
}

/// Hypotheses of the three bounds at `k = |params.k|`.
pub fn check_conditions(params: &Params) -> ConditionVerdict {
    let ratio = params.a_d / params.a_n;
    let lower_slack = ratio - params.n_i / params.n_o;
    let upper_slack = params.a_i / params.a_o - ratio;
    let d = DIM as f64;
    let kd = params.k.norm() * DIAM;
    let root = (d * d + 4.0 * params.n_i * kd * kd / params.a_i).sqrt();
    let product = (params.n_o / params.n_i) * (params.n_i / params.n_o - ratio) * (d + root);
    ConditionVerdict {
        nontrapping: lower_slack >= 0.0 && upper_slack >= 0.0,
        lower_slack,
        upper_slack,
        strict: lower_slack > 0.0 && upper_slack > 0.0,
        product,
        perturbative: product < 1.0 && upper_slack >= 0.0,
        g: 0.5 * (1.0 - product),
    }
}

/// Data norms entering the bounds. All are `L²` norms, not squares.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DataNorms {
    /// `‖f_i‖_{B_1}`
    pub f_i: f64,
    /// `‖f_o‖_{D_R}`
    pub f_o: f64,
    /// `‖∇_T g_D‖_Γ`
    pub grad_t_g_d: f64,
    /// `‖g_D‖_Γ`
    pub g_d: f64,
    /// `‖g_N‖_Γ`
    pub g_n: f64,
}

impl DataNorms {
    pub fn volume(f_i: f64, f_o: f64) -> Self {
        DataNorms {
            f_i,
            f_o,
            ..Self::default()
        }
    }

    /// Norms of a sum of modal data; distinct modes are orthogonal on both
    /// `B_1` and `Γ`, and each modal boundary norm is a closed form on the
    /// circle.
    pub fn of_modes(sources: &[ModalSource]) -> Result<Self> {
        let (mut fi, mut gd, mut tgd, mut gn) = (0.0, 0.0, 0.0, 0.0);
        for s in sources {
            if let Some(v) = &s.volume {
                fi += volume_source_norm_sq(s.nu, v)?;
            }
            let nu2 = (s.nu as f64).powi(2);
            gd += 2.0 * PI * s.g_d.norm_sqr();
            tgd += 2.0 * PI * nu2 * s.g_d.norm_sqr();
            gn += 2.0 * PI * s.g_n.norm_sqr();
        }
        Ok(DataNorms {
            f_i: fi.sqrt(),
            f_o: 0.0,
            grad_t_g_d: tgd.sqrt(),
            g_d: gd.sqrt(),
            g_n: gn.sqrt(),
        })
    }

    pub fn has_boundary_data(&self) -> bool {
        self.grad_t_g_d != 0.0 || self.g_d != 0.0 || self.g_n != 0.0
    }
}

/// One coefficient × squared data norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub coefficient: f64,
    pub norm_sq: f64,
    pub contribution: f64,
}

/// A bound's right-hand side, itemized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rhs {
    pub value: f64,
    pub terms: Vec<Term>,
}

impl Rhs {
    fn from_terms(items: Vec<(&str, f64, f64)>) -> Self {
        let terms: Vec<Term> = items
            .into_iter()
            .map(|(name, coefficient, norm_sq)| Term {
                name: name.to_string(),
                coefficient,
                norm_sq,
                contribution: coefficient * norm_sq,
            })
            .collect();
        let value = terms.iter().map(|t| t.contribution).sum();
        Rhs { value, terms }
    }
}

fn real_k(params: &Params) -> Result<f64> {
    params.validate_real_k()
}

/// `(2√(n_o/a_o) R + (d−1)/k)²`.
fn radial_factor(params: &Params, k: f64) -> f64 {
    let d = DIM as f64;
    (2.0 * (params.n_o / params.a_o).sqrt() * params.r_report + (d - 1.0) / k).powi(2)
}

fn volume_terms(params: &Params, k: f64, f_i: f64, f_o: f64) -> Vec<(&'static str, f64, f64)> {
    let rf = radial_factor(params, k);
    let r = params.r_report;
    let c_fi = 4.0 * DIAM * DIAM / params.a_i + rf / params.n_i;
    let c_fo = (4.0 * r * r / params.a_o + rf / params.n_o) / (params.a_d * params.a_n);
    vec![("|f_i|^2", c_fi, f_i * f_i), ("|f_o|^2", c_fo, f_o * f_o)]
}

/// Right-hand side of the volume-data bound. Computed whether or not the
/// hypotheses hold.
pub fn rhs_volume_bound(params: &Params, f_i: f64, f_o: f64) -> Result<Rhs> {
    let k = real_k(params)?;
    Ok(Rhs::from_terms(volume_terms(params, k, f_i, f_o)))
}

/// Right-hand side of the bound with interface data, for a domain
/// star-shaped with respect to the ball of radius `γ diam`. The
/// denominators `a_i A_N − a_o A_D` and `n_o A_D − n_i A_N` must be
/// positive.
pub fn rhs_boundary_bound(params: &Params, gamma: f64, data: &DataNorms) -> Result<Rhs> {
    let k = real_k(params)?;
    if !(gamma > 0.0 && gamma <= 0.5) {
        return Err(Error::Domain(format!(
            "gamma must lie in (0, 1/2], got {gamma}"
        )));
    }
    let (ai, ao, ni, no, ad, an) = (
        params.a_i, params.a_o, params.n_i, params.n_o, params.a_d, params.a_n,
    );
    let da = ai * an - ao * ad;
    let dn = no * ad - ni * an;
    if !(da > 0.0 && dn > 0.0) {
        return Err(Error::Inapplicable(format!(
            "interface-data bound needs a_i A_N > a_o A_D and n_o A_D > n_i A_N (got {da:e}, {dn:e})"
        )));
    }
    let d = DIM as f64;
    let r = params.r_report;
    let tail = no * r * r + ao * (d - 1.0).powi(2) / (4.0 * k * k);
    let c_tgd =
        2.0 * DIAM * ao * ((3.0 + 2.0 * gamma) * ai * an + 2.0 * ao * ad) / (ad * an * gamma * da);
    let c_kgd = 2.0
        * (2.0 * DIAM * no * no / (gamma * an * dn)
            + (3.0 + gamma) * ai * tail / (gamma * ad * DIAM * da));
    let c_gn = 2.0 / (gamma * ao * an * ad)
        * (DIAM * (4.0 * ai * an + 2.0 * ao * ad) / da + 2.0 * ad * tail / (DIAM * dn));
    let mut items = volume_terms(params, k, data.f_i, data.f_o);
    items.push(("|grad_T g_D|^2", c_tgd, data.grad_t_g_d.powi(2)));
    items.push(("k^2 |g_D|^2", c_kgd, (k * data.g_d).powi(2)));
    items.push(("|g_N|^2", c_gn, data.g_n.powi(2)));
    Ok(Rhs::from_terms(items))
}

/// `G` and the right-hand side of the perturbed bound, whose left-hand side
/// weights the interior energy by `G`. `G ≤ 0` leaves the bound empty.
pub fn rhs_perturbed_bound(params: &Params, f_i: f64, f_o: f64) -> Result<(f64, Rhs)> {
    let k = real_k(params)?;
    let g = check_conditions(params).g;
    if !(g > 0.0) {
        return Err(Error::Inapplicable(format!("G = {g:e} is not positive")));
    }
    Ok((g, Rhs::from_terms(volume_terms(params, k, f_i, f_o))))
}

/// Data for [`certify`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Source {
    Modal(Vec<ModalSource>),
    PlaneWave(PlaneWave),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: Bound,
    pub verdict: ConditionVerdict,
    pub data: DataNorms,
    pub norms: NormReport,
    /// `G` for the perturbed bound, else 1.
    pub interior_weight: f64,
    pub lhs_value: f64,
    pub rhs_value: f64,
    pub margin: f64,
    /// The hypotheses of `bound` hold for these parameters and data.
    pub certifying: bool,
    pub breakdown: Vec<Term>,
}

fn solve_source(params: &Params, source: &Source) -> Result<(Vec<ModalSolution>, DataNorms)> {
    match source {
        Source::Modal(modes) => {
            let sols = modes
                .par_iter()
                .map(|s| solve_modal(params, s))
                .collect::<Result<Vec<_>>>()?;
            Ok((sols, DataNorms::of_modes(modes)?))
        }
        Source::PlaneWave(wave) => {
            let nu_max = recommended_truncation(params, params.r_report);
            let sol = solve_plane_wave(params, wave, nu_max)?;
            let data: Vec<ModalSource> = sol.modes.iter().map(|m| m.source).collect();
            Ok((sol.modes, DataNorms::of_modes(&data)?))
        }
    }
}

/// Solves, measures the bound's left-hand side, and compares it with the
/// right-hand side. A margin below `−MARGIN_TOL · rhs` while the hypotheses
/// hold is a falsification error.
pub fn certify(params: &Params, source: &Source, bound: Bound) -> Result<BoundReport> {
    real_k(params)?;
    let verdict = check_conditions(params);
    let (sols, data) = solve_source(params, source)?;
    let norms = norms(params, &sols, DEFAULT_NODES)?;
    let (rhs, weight, certifying) = match bound {
        Bound::Volume => (
            rhs_volume_bound(params, data.f_i, data.f_o)?,
            1.0,
            verdict.nontrapping && !data.has_boundary_data(),
        ),
        Bound::Boundary => (
            rhs_boundary_bound(params, GAMMA, &data)?,
            1.0,
            verdict.strict,
        ),
        Bound::Perturbed => {
            let (g, rhs) = rhs_perturbed_bound(params, data.f_i, data.f_o)?;
            (rhs, g, verdict.perturbative && !data.has_boundary_data())
        }
    };
    let lhs = weight * norms.interior_energy(params) + norms.exterior_energy(params);
    let margin = rhs.value - lhs;
    if certifying && margin < -MARGIN_TOL * rhs.value {
        return Err(Error::Falsification {
            margin,
            rhs: rhs.value,
        });
    }
    Ok(BoundReport {
        bound,
        verdict,
        data,
        norms,
        interior_weight: weight,
        lhs_value: lhs,
        rhs_value: rhs.value,
        margin,
        certifying,
        breakdown: rhs.terms,
    })
}

/// One row of [`blowup_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupRow {
    pub nu: i32,
    /// `Re k_{ν,1}`.
    pub k: f64,
    /// `‖f_i‖`, one by construction.
    pub f_norm: f64,
    /// `k √n_i ‖u_i‖`
    pub l2_int_weighted: f64,
    /// `√a_i ‖∇u_i‖`
    pub h1_int: f64,
    /// `k √n_o ‖u_o‖_{D_R}`
    pub l2_ext_weighted: f64,
    /// `√a_o ‖∇u_o‖_{D_R}`
    pub h1_ext: f64,
    /// Square root of the weighted energy.
    pub combined: f64,
    /// Right-hand side of the volume bound evaluated with the same data.
    pub volume_rhs: f64,
}

/// Outcome of one `ν`: a row, or the error that prevented it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BlowupEntry {
    Row(BlowupRow),
    Failed { nu: i32, error: String },
}

/// Norms of the solution driven by the unit-norm source
/// `f_i = c_ν J_ν(kr) e^{iνθ}` at `k = Re k_{ν,1}`, for each `ν`, with
/// `n_o = a_i = a_o = A_D = 1` and `R = 2`.
pub fn blowup_sweep(n_i: f64, a_n: f64, nus: RangeInclusive<i32>) -> Result<Vec<BlowupEntry>> {
    if !(n_i > 1.0) {
        return Err(Error::Domain(format!(
            "blow-up sweeps need n_i > 1, got {n_i}"
        )));
    }
    let base = Params::contrast(n_i, a_n, 1.0);
    base.validate()?;
    let rows = nus
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|nu| match blowup_row(&base, nu) {
            Ok(r) => BlowupEntry::Row(r),
            Err(e) => BlowupEntry::Failed {
                nu,
                error: e.to_string(),
            },
        })
        .collect();
    Ok(rows)
}

fn blowup_row(base: &Params, nu: i32) -> Result<BlowupRow> {
    let k = find_resonance(base, nu, 1)?.k.re;
    let params = base.with_k(k.into());
    let c = c_nu(nu, k)?;
    let src = ModalSource::volume(nu, c.into(), k);
    let data = DataNorms::of_modes(&[src])?;
    let sol = solve_modal(&params, &src)?;
    let n = norms(&params, &[sol], DEFAULT_NODES)?;
    Ok(BlowupRow {
        nu,
        k,
        f_norm: data.f_i,
        l2_int_weighted: k * params.n_i.sqrt() * n.l2_int,
        h1_int: params.a_i.sqrt() * n.h1semi_int,
        l2_ext_weighted: k * params.n_o.sqrt() * n.l2_ext,
        h1_ext: params.a_o.sqrt() * n.h1semi_ext,
        combined: n.weighted_energy.sqrt(),
        volume_rhs: rhs_volume_bound(&params, data.f_i, 0.0)?.value,
    })
}

/// Outcome of a randomized certification suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub bound: Bound,
    pub seed: u64,
    pub cases: usize,
    /// Smallest `margin / rhs` over the cases that certified.
    pub min_relative_margin: f64,
    pub failures: Vec<SuiteFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteFailure {
    pub case: usize,
    pub params: Params,
    pub source: Source,
    pub error: String,
    pub falsification: bool,
}

/// A random parameter set satisfying the hypotheses of `bound`, with
/// `k ∈ [0.5, 50]` log-uniform, and a modal source of one to three modes.
/// Three quarters of the perturbed cases have `product ∈ (0.05, 0.95)`;
/// the rest have `product ≤ 0`, where `G > 1/2`.
pub fn sample_case(bound: Bound, rng: &mut impl Rng) -> Result<(Params, Source)> {
    let k = (rng.gen_range(0.5f64.ln()..50f64.ln())).exp();
    let n_o = rng.gen_range(0.5..2.0);
    let a_o = rng.gen_range(0.5..2.0);
    let a_d = rng.gen_range(0.5..2.0);
    let a_n = rng.gen_range(0.5..2.0);
    let ratio = a_d / a_n;
    let closed = |rng: &mut dyn rand::RngCore| {
        if rng.gen_bool(0.15) {
            1.0
        } else {
            rng.gen_range(0.2..1.0)
        }
    };
    let (t_n, t_a) = match bound {
        Bound::Boundary => (rng.gen_range(0.2..0.95), rng.gen_range(0.2..0.95)),
        _ => (closed(rng), closed(rng)),
    };
    let mut a_i = a_o * ratio / t_a;
    while a_i / a_o < ratio {
        a_i = next_up(a_i);
    }
    let mut n_i = n_o * ratio * t_n;
    while n_i / n_o > ratio {
        n_i = next_down(n_i);
    }
    let mut params = Params {
        n_i,
        n_o,
        a_i,
        a_o,
        a_d,
        a_n,
        k: k.into(),
        r_report: rng.gen_range(1.2..3.0),
    };
    if bound == Bound::Perturbed && rng.gen_bool(0.75) {
        params.n_i = perturbed_n_i(&params, rng.gen_range(0.05..0.95))?;
    }
    let modes = rng.gen_range(1..=3);
    let mut used = Vec::new();
    let mut sources = Vec::new();
    while sources.len() < modes {
        let nu: i32 = rng.gen_range(-40..=40);
        if used.contains(&nu) {
            continue;
        }
        used.push(nu);
        let kap = params.kappa_i().re;
        let t = if rng.gen_bool(0.5) {
            rng.gen_range(0.3..0.85)
        } else {
            rng.gen_range(1.15..2.0)
        };
        let beta = kap * t;
        let c = Complex64::from_polar(
            c_nu(nu, beta)? * rng.gen_range(0.1..3.0),
            rng.gen_range(0.0..2.0 * PI),
        );
        let mut src = ModalSource::volume(nu, c, beta);
        if bound == Bound::Boundary {
            src.g_d = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            src.g_n = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * k;
        }
        sources.push(src);
    }
    Ok((params, Source::Modal(sources)))
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// `n_i` at which the perturbed-bound product equals `target ∈ (0, 1)`;
/// the product increases from zero at `n_i = n_o A_D/A_N`.
fn perturbed_n_i(params: &Params, target: f64) -> Result<f64> {
    let lo0 = params.n_o * params.a_d / params.a_n;
    let product = |n_i: f64| check_conditions(&Params { n_i, ..*params }).product;
    let (mut lo, mut hi) = (lo0, 2.0 * lo0);
    while product(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if product(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let n_i = 0.5 * (lo + hi);
    if !(n_i > lo0) {
        return Err(Error::Domain(format!(
            "no n_i above {lo0} reaches product {target}"
        )));
    }
    Ok(n_i)
}

/// Certifies `cases` random parameter sets for `bound`. Case `j` draws from
/// its own generator seeded with `seed + j`, so results do not depend on
/// scheduling.
pub fn certification_suite(bound: Bound, cases: usize, seed: u64) -> SuiteReport {
    let outcomes: Vec<(usize, Option<f64>, Option<SuiteFailure>)> = (0..cases)
        .into_par_iter()
        .map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(case as u64));
            let (params, source) = match sample_case(bound, &mut rng) {
                Ok(x) => x,
                Err(e) => {
                    let failure = SuiteFailure {
                        case,
                        params: Params::unit(1.0),
                        source: Source::Modal(Vec::new()),
                        error: e.to_string(),
                        falsification: false,
                    };
                    return (case, None, Some(failure));
                }
            };
            match certify(&params, &source, bound) {
                Ok(r) if r.certifying => (case, Some(r.margin / r.rhs_value), None),
                Ok(_) => (
                    case,
                    None,
                    Some(SuiteFailure {
                        case,
                        params,
                        source,
                        error: "sampled case does not satisfy the hypotheses".into(),
                        falsification: false,
                    }),
                ),
                Err(e) => (
                    case,
                    None,
                    Some(SuiteFailure {
                        case,
                        params,
                        source,
                        falsification: e.is_falsification(),
                        error: e.to_string(),
                    }),
                ),
            }
        })
        .collect();
    let min_relative_margin = outcomes
        .iter()
        .filter_map(|o| o.1)
        .fold(f64::INFINITY, f64::min);
    SuiteReport {
        bound,
        seed,
        cases,
        min_relative_margin,
        failures: outcomes.into_iter().filter_map(|o| o.2).collect(),
    }
}
