//! Numerical checks of the Morawetz multiplier identities, the radiating
//! inequality on `Γ_R`, and the weighted trace inequality on the unit disc.
//!
//! Pointwise identities are evaluated twice from the same exact jet
//! (value, gradient, Hessian): once as the product `2 Re{conj(Mv) Lv}` and
//! once by expanding the divergence term by term. Integrated identities are
//! evaluated by Gauss–Legendre × trapezoid quadrature with node doubling.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{pairwise_sum, trapezoid_angles, Composite};
use crate::specfun::{cylinder_eval, CylinderTable};

/// Floor of the denominator in relative residuals.
pub const REL_FLOOR: f64 = 1e-14;
pub const POINTWISE_TOL: f64 = 1e-11;
pub const INTEGRATED_TOL: f64 = 1e-9;
/// Slack of the radiating inequality, relative to its largest term.
pub const RADIATING_SLACK: f64 = 1e-12;
pub const TRACE_SLACK: f64 = 1e-10;

const QUAD_ORDER: usize = 16;
const MAX_LEVELS: usize = 7;
const QUAD_TOL: f64 = 1e-13;

type C = Complex64;

fn c0() -> C {
    C::new(0.0, 0.0)
}

/// Value, gradient and Hessian of a complex field at a point of `R^d`;
/// unused components are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub d: usize,
    pub v: C,
    pub grad: [C; 3],
    pub hess: [[C; 3]; 3],
}

impl Jet {
    pub fn laplacian(&self) -> C {
        (0..self.d).map(|j| self.hess[j][j]).sum()
    }

    pub fn grad_norm_sq(&self) -> f64 {
        self.grad[..self.d].iter().map(|g| g.norm_sqr()).sum()
    }

    fn add(&mut self, o: &Jet) {
        self.v += o.v;
        for j in 0..3 {
            self.grad[j] += o.grad[j];
            for l in 0..3 {
                self.hess[j][l] += o.hess[j][l];
            }
        }
    }
}

/// A twice differentiable complex field with exact derivatives.
pub trait Field: Sync {
    fn dim(&self) -> usize;
    fn jet(&self, x: &[f64; 3]) -> Result<Jet>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: C,
    pub powers: [u32; 3],
}

/// `p(x) e^{i w·x}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveTerm {
    pub poly: Vec<Monomial>,
    pub freq: [f64; 3],
}

/// A finite sum of polynomial-times-plane-wave terms in `d ∈ {2, 3}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    pub d: usize,
    pub terms: Vec<WaveTerm>,
}

pub const MAX_DEGREE: u32 = 6;

impl TestField {
    pub fn new(d: usize, terms: Vec<WaveTerm>) -> Result<Self> {
        if !(d == 2 || d == 3) {
            return Err(Error::Domain(format!(
                "test fields live in d = 2 or 3, got {d}"
            )));
        }
        for t in &terms {
            for m in &t.poly {
                if m.powers.iter().sum::<u32>() > MAX_DEGREE
                    || m.powers[d..].iter().any(|&p| p != 0)
                {
                    return Err(Error::Domain(format!(
                        "monomial {:?} outside degree {MAX_DEGREE} in d = {d}",
                        m.powers
                    )));
                }
            }
            if t.freq[d..].iter().any(|&w| w != 0.0) {
                return Err(Error::Domain(format!(
                    "frequency {:?} has components beyond d = {d}",
                    t.freq
                )));
            }
        }
        Ok(TestField { d, terms })
    }

    pub fn zero(d: usize) -> Self {
        TestField {
            d,
            terms: Vec::new(),
        }
    }

    /// `amplitude · e^{i w·x}`.
    pub fn plane_wave(d: usize, amplitude: C, freq: [f64; 3]) -> Result<Self> {
        let poly = vec![Monomial {
            coeff: amplitude,
            powers: [0; 3],
        }];
        TestField::new(d, vec![WaveTerm { poly, freq }])
    }

    pub fn constant(d: usize, value: C) -> Result<Self> {
        TestField::plane_wave(d, value, [0.0; 3])
    }

    /// One to three terms, each with up to four monomials of total degree
    /// at most six, coefficients in the unit square and frequencies in
    /// `[-max_freq, max_freq]^d`.
    pub fn random(d: usize, max_freq: f64, rng: &mut impl Rng) -> Result<Self> {
        let nterms = rng.gen_range(1..=3);
        let mut terms = Vec::with_capacity(nterms);
        for _ in 0..nterms {
            let nmono = rng.gen_range(1..=4);
            let mut poly = Vec::with_capacity(nmono);
            for _ in 0..nmono {
                let mut powers = [0u32; 3];
                let mut budget = rng.gen_range(0..=MAX_DEGREE);
                for p in powers.iter_mut().take(d) {
                    let e = rng.gen_range(0..=budget);
                    *p = e;
                    budget -= e;
                }
                let coeff = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                poly.push(Monomial { coeff, powers });
            }
            let mut freq = [0.0; 3];
            for w in freq.iter_mut().take(d) {
                *w = rng.gen_range(-max_freq..max_freq);
            }
            terms.push(WaveTerm { poly, freq });
        }
        TestField::new(d, terms)
    }
}

/// `∂^o x^p` for a single coordinate.
fn mono_factor(x: f64, p: u32, o: u32) -> f64 {
    if o > p {
        return 0.0;
    }
    let mut c = 1.0;
    for j in 0..o {
        c *= (p - j) as f64;
    }
    c * x.powi((p - o) as i32)
}

fn mono_deriv(m: &Monomial, x: &[f64; 3], orders: [u32; 3]) -> C {
    let mut f = 1.0;
    for i in 0..3 {
        f *= mono_factor(x[i], m.powers[i], orders[i]);
    }
    m.coeff * f
}

fn unit(j: usize) -> [u32; 3] {
    let mut o = [0; 3];
    o[j] = 1;
    o
}

impl Field for TestField {
    fn dim(&self) -> usize {
        self.d
    }

    fn jet(&self, x: &[f64; 3]) -> Result<Jet> {
        let d = self.d;
        let mut out = Jet {
            d,
            v: c0(),
            grad: [c0(); 3],
            hess: [[c0(); 3]; 3],
        };
        for t in &self.terms {
            let mut p = c0();
            let mut dp = [c0(); 3];
            let mut ddp = [[c0(); 3]; 3];
            for m in &t.poly {
                p += mono_deriv(m, x, [0; 3]);
                for j in 0..d {
                    dp[j] += mono_deriv(m, x, unit(j));
                    for l in 0..d {
                        let mut o = unit(j);
                        o[l] += 1;
                        ddp[j][l] += mono_deriv(m, x, o);
                    }
                }
            }
            let phase: f64 = (0..d).map(|j| t.freq[j] * x[j]).sum();
            let e = C::from_polar(1.0, phase);
            let iw: Vec<C> = (0..3).map(|j| C::new(0.0, t.freq[j])).collect();
            let mut term = Jet {
                d,
                v: p * e,
                grad: [c0(); 3],
                hess: [[c0(); 3]; 3],
            };
            for j in 0..d {
                term.grad[j] = (dp[j] + iw[j] * p) * e;
                for l in 0..d {
                    term.hess[j][l] =
                        (ddp[j][l] + iw[l] * dp[j] + iw[j] * dp[l] + iw[j] * iw[l] * p) * e;
                }
            }
            out.add(&term);
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesselKind {
    J,
    H,
}

/// `Z_ν(κr) e^{iνθ}` in the plane, with `Z = J_ν` or `H^(1)_ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselMode {
    pub nu: i32,
    pub kappa: f64,
    pub kind: BesselKind,
    pub amplitude: C,
}

impl Field for BesselMode {
    fn dim(&self) -> usize {
        2
    }

    /// With `D± = ∂_x ± i∂_y`, `D+ (Z_ν e^{iνθ}) = −κ Z_{ν+1} e^{i(ν+1)θ}`
    /// and `D− (Z_ν e^{iνθ}) = κ Z_{ν−1} e^{i(ν−1)θ}`.
    fn jet(&self, x: &[f64; 3]) -> Result<Jet> {
        let (r, th) = (x[0].hypot(x[1]), x[1].atan2(x[0]));
        let k = self.kappa;
        let n = self.nu;
        let top = (n.unsigned_abs() + 2) as usize;
        let z = |m: i32| -> Result<C> {
            if r == 0.0 {
                return match self.kind {
                    BesselKind::J => Ok(if m == 0 { C::new(1.0, 0.0) } else { c0() }),
                    BesselKind::H => Err(Error::Singularity("Hankel mode at the origin".into())),
                };
            }
            let t = match self.kind {
                BesselKind::J => CylinderTable::bessel_only(top, C::new(k * r, 0.0))?,
                BesselKind::H => CylinderTable::new(top, C::new(k * r, 0.0))?,
            };
            let v = match self.kind {
                BesselKind::J => t.j(m),
                BesselKind::H => t.h(m),
            };
            Ok(v.to_c64() * C::from_polar(1.0, m as f64 * th))
        };
        let (zm2, zm1, z0, zp1, zp2) = (z(n - 2)?, z(n - 1)?, z(n)?, z(n + 1)?, z(n + 2)?);
        let a = self.amplitude;
        let dp = -k * zp1;
        let dm = k * zm1;
        let dpp = k * k * zp2;
        let dmm = k * k * zm2;
        let dpm = -k * k * z0;
        let i = C::new(0.0, 1.0);
        let hxx = (dpp + 2.0 * dpm + dmm) / 4.0;
        let hyy = -(dpp - 2.0 * dpm + dmm) / 4.0;
        let hxy = (dpp - dmm) / (4.0 * i);
        Ok(Jet {
            d: 2,
            v: a * z0,
            grad: [a * (dp + dm) / 2.0, a * (dp - dm) / (2.0 * i), c0()],
            hess: [
                [a * hxx, a * hxy, c0()],
                [a * hxy, a * hyy, c0()],
                [c0(); 3],
            ],
        })
    }
}

/// Coefficients of the multiplier `Mv = x·∇v − ikβv + αv` and the operator
/// `Lv = aΔv + k²n v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierParams {
    pub a: f64,
    pub n: f64,
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Discretization {
    Pointwise {
        points: usize,
    },
    Quadrature {
        radial_nodes: usize,
        angular_nodes: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    /// Sides at the worst point, or the integrated sides.
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    /// `|lhs − rhs| / max(|lhs|, |rhs|, REL_FLOOR)`, worst over points.
    pub rel_residual: f64,
    pub discretization: Discretization,
}

fn rel(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(REL_FLOOR)
}

fn dot_x(x: &[f64; 3], g: &[C; 3], d: usize) -> C {
    (0..d).map(|j| g[j] * x[j]).sum()
}

fn multiplier(j: &Jet, x: &[f64; 3], p: &MultiplierParams) -> C {
    dot_x(x, &j.grad, j.d) - C::new(0.0, p.k * p.beta) * j.v + p.alpha * j.v
}

/// `2 Re{conj(Mv) Lv}`.
fn morawetz_product(j: &Jet, x: &[f64; 3], p: &MultiplierParams) -> f64 {
    let lv = p.a * j.laplacian() + p.k * p.k * p.n * j.v;
    2.0 * (multiplier(j, x, p).conj() * lv).re
}

/// Divergence of `2Re{conj(Mv) a∇v} + x(k²n|v|² − a|∇v|²)` expanded
/// term by term, plus the two bulk terms.
fn morawetz_expanded(j: &Jet, x: &[f64; 3], p: &MultiplierParams) -> f64 {
    let d = j.d;
    let df = d as f64;
    let mv = multiplier(j, x, p);
    let shift = C::new(1.0 + p.alpha, -p.k * p.beta);
    let mut flux = 0.0;
    for jj in 0..d {
        let mut dm = shift * j.grad[jj];
        for l in 0..d {
            dm += x[l] * j.hess[l][jj];
        }
        flux += (dm.conj() * j.grad[jj]).re;
    }
    flux += (mv.conj() * j.laplacian()).re;
    let flux = 2.0 * p.a * flux;
    let k2n = p.k * p.k * p.n;
    let s = k2n * j.v.norm_sqr() - p.a * j.grad_norm_sq();
    let mut x_grad_s = 0.0;
    for jj in 0..d {
        let mut ds = 2.0 * k2n * (j.v.conj() * j.grad[jj]).re;
        for l in 0..d {
            ds -= 2.0 * p.a * (j.grad[l].conj() * j.hess[jj][l]).re;
        }
        x_grad_s += x[jj] * ds;
    }
    flux + df * s + x_grad_s
        - (2.0 * p.alpha - df + 2.0) * p.a * j.grad_norm_sq()
        - (df - 2.0 * p.alpha) * k2n * j.v.norm_sqr()
}

fn worst_over_points(
    v: &dyn Field,
    points: &[[f64; 3]],
    f: impl Fn(&Jet, &[f64; 3]) -> Result<(f64, f64)> + Sync,
) -> Result<IdentityResidual> {
    let pairs = points
        .par_iter()
        .map(|x| f(&v.jet(x)?, x))
        .collect::<Result<Vec<_>>>()?;
    let mut out = IdentityResidual {
        lhs: 0.0,
        rhs: 0.0,
        abs_residual: 0.0,
        rel_residual: 0.0,
        discretization: Discretization::Pointwise {
            points: points.len(),
        },
    };
    for (l, r) in pairs {
        let e = rel(l, r);
        if e > out.rel_residual || (e == out.rel_residual && out.abs_residual == 0.0) {
            out.lhs = l;
            out.rhs = r;
            out.rel_residual = e;
        }
        out.abs_residual = out.abs_residual.max((l - r).abs());
    }
    Ok(out)
}

/// Both sides of `2Re{conj(Mv) Lv} = div[...] − (2α−d+2)a|∇v|² − (d−2α)nk²|v|²`
/// at each point.
pub fn check_morawetz_pointwise(
    v: &dyn Field,
    p: &MultiplierParams,
    points: &[[f64; 3]],
) -> Result<IdentityResidual> {
    worst_over_points(v, points, |j, x| {
        Ok((morawetz_product(j, x, p), morawetz_expanded(j, x, p)))
    })
}

/// `r(v_r − iκv + (α/r)v)`.
fn ludwig_multiplier(j: &Jet, x: &[f64; 3], kappa: f64, alpha: f64, r: f64) -> C {
    dot_x(x, &j.grad, j.d) - C::new(0.0, kappa * r) * j.v + alpha * j.v
}

fn ludwig_sides(j: &Jet, x: &[f64; 3], kappa: f64, alpha: f64) -> Result<(f64, f64)> {
    let d = j.d;
    let df = d as f64;
    let r = x[..d].iter().map(|c| c * c).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(Error::Domain(
            "the radial multiplier is undefined at r = 0".into(),
        ));
    }
    let m = ludwig_multiplier(j, x, kappa, alpha, r);
    let lhs = 2.0 * (m.conj() * (j.laplacian() + kappa * kappa * j.v)).re;

    let ik = C::new(0.0, kappa);
    let mut flux = 0.0;
    for jj in 0..d {
        let mut dm = (1.0 + alpha) * j.grad[jj] - ik * (x[jj] / r) * j.v - ik * r * j.grad[jj];
        for l in 0..d {
            dm += x[l] * j.hess[l][jj];
        }
        flux += (dm.conj() * j.grad[jj]).re;
    }
    flux += (m.conj() * j.laplacian()).re;
    let k2 = kappa * kappa;
    let g2 = j.grad_norm_sq();
    let s = k2 * j.v.norm_sqr() - g2;
    let mut x_grad_s = 0.0;
    for jj in 0..d {
        let mut ds = 2.0 * k2 * (j.v.conj() * j.grad[jj]).re;
        for l in 0..d {
            ds -= 2.0 * (j.grad[l].conj() * j.hess[jj][l]).re;
        }
        x_grad_s += x[jj] * ds;
    }
    let vr = dot_x(x, &j.grad, d) / r;
    let rhs = 2.0 * flux + df * s + x_grad_s + (2.0 * alpha - (df - 1.0)) * s
        - (g2 - vr.norm_sqr())
        - (vr - ik * j.v).norm_sqr();
    Ok((lhs, rhs))
}

/// The Morawetz–Ludwig identity with `Lv = Δv + κ²v` at each point;
/// points must avoid the origin.
pub fn check_morawetz_ludwig(
    v: &dyn Field,
    kappa: f64,
    alpha: f64,
    points: &[[f64; 3]],
) -> Result<IdentityResidual> {
    worst_over_points(v, points, |j, x| ludwig_sides(j, x, kappa, alpha))
}

/// Integration domain in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Disc { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl Domain {
    fn radii(&self) -> Result<(f64, f64)> {
        let (a, b) = match *self {
            Domain::Disc { radius } => (0.0, radius),
            Domain::Annulus { inner, outer } => (inner, outer),
        };
        if !(a >= 0.0 && b > a && b.is_finite()) {
            return Err(Error::Domain(format!("invalid domain {self:?}")));
        }
        Ok((a, b))
    }
}

/// `(∫_D g, ∫_D |g|)` in polar coordinates.
fn volume_integral(
    v: &dyn Field,
    (a, b): (f64, f64),
    panels: usize,
    nth: usize,
    g: &(dyn Fn(&Jet, &[f64; 3]) -> f64 + Sync),
) -> Result<(f64, f64)> {
    let rule = Composite::with_panels(a, b, panels, QUAD_ORDER);
    let angles = trapezoid_angles(nth);
    let dth = 2.0 * PI / nth as f64;
    let rows = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .map(|(&r, &w)| {
            let mut s = Vec::with_capacity(nth);
            for &t in &angles {
                let x = [r * t.cos(), r * t.sin(), 0.0];
                s.push(g(&v.jet(&x)?, &x));
            }
            let abs: Vec<f64> = s.iter().map(|x| x.abs()).collect();
            Ok((
                w * r * dth * pairwise_sum(&s),
                w * r * dth * pairwise_sum(&abs),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let vals: Vec<f64> = rows.iter().map(|x| x.0).collect();
    let abss: Vec<f64> = rows.iter().map(|x| x.1).collect();
    Ok((pairwise_sum(&vals), pairwise_sum(&abss)))
}

/// Boundary integrand `g(jet, x, normal)`.
type FluxIntegrand<'a> = dyn Fn(&Jet, &[f64; 3], &[f64; 3]) -> f64 + Sync + 'a;

/// `(∫_{|x|=ρ} g ds, ∫ |g| ds)`, where `g` receives the outward normal of
/// the domain (`sign = ±1` times `x̂`).
fn circle_integral(
    v: &dyn Field,
    rho: f64,
    sign: f64,
    nth: usize,
    g: &FluxIntegrand<'_>,
) -> Result<(f64, f64)> {
    let ds = rho * 2.0 * PI / nth as f64;
    let vals = trapezoid_angles(nth)
        .par_iter()
        .map(|&t| {
            let x = [rho * t.cos(), rho * t.sin(), 0.0];
            let nu = [sign * t.cos(), sign * t.sin(), 0.0];
            Ok(g(&v.jet(&x)?, &x, &nu))
        })
        .collect::<Result<Vec<_>>>()?;
    let abs: Vec<f64> = vals.iter().map(|x| x.abs()).collect();
    Ok((ds * pairwise_sum(&vals), ds * pairwise_sum(&abs)))
}

/// Volume side `2Re{conj(Mv)Lv} + (2α−d+2)a|∇v|² + (d−2α)nk²|v|²`.
fn integrated_volume_density(j: &Jet, x: &[f64; 3], p: &MultiplierParams) -> f64 {
    let df = j.d as f64;
    morawetz_product(j, x, p)
        + (2.0 * p.alpha - df + 2.0) * p.a * j.grad_norm_sq()
        + (df - 2.0 * p.alpha) * p.n * p.k * p.k * j.v.norm_sqr()
}

/// Boundary side `(x·ν)(a|∂_ν v|² − a|∇_T v|² + k²n|v|²)
/// + 2Re{(x·conj(∇_T v) + ikβ conj(v) + α conj(v)) a ∂_ν v}`.
fn integrated_boundary_density(j: &Jet, x: &[f64; 3], nu: &[f64; 3], p: &MultiplierParams) -> f64 {
    let d = j.d;
    let dn: C = (0..d).map(|i| j.grad[i] * nu[i]).sum();
    let mut gt = [c0(); 3];
    for i in 0..d {
        gt[i] = j.grad[i] - dn * nu[i];
    }
    let gt2: f64 = gt[..d].iter().map(|g| g.norm_sqr()).sum();
    let x_nu: f64 = (0..d).map(|i| x[i] * nu[i]).sum();
    let x_gt: C = (0..d).map(|i| gt[i].conj() * x[i]).sum();
    let conj_v = j.v.conj();
    let w = x_gt + C::new(0.0, p.k * p.beta) * conj_v + p.alpha * conj_v;
    x_nu * (p.a * dn.norm_sqr() - p.a * gt2 + p.k * p.k * p.n * j.v.norm_sqr())
        + 2.0 * (w * p.a * dn).re
}

fn certified<F>(mut level: F) -> Result<(f64, f64, usize, usize)>
where
    F: FnMut(usize) -> Result<(f64, f64, usize, usize)>,
{
    let mut prev = level(0)?;
    let mut change = f64::INFINITY;
    for l in 1..=MAX_LEVELS {
        let cur = level(l)?;
        change = (cur.0 - prev.0).abs() / cur.1.max(REL_FLOOR);
        if change <= QUAD_TOL {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature { change })
}

/// The integrated identity on a disc or annulus in the plane: the volume
/// integral of `2Re{conj(Mv)Lv} + (2α−d+2)a|∇v|² + (d−2α)nk²|v|²` against
/// the boundary flux. Each side is certified by node doubling.
pub fn check_morawetz_integrated(
    v: &dyn Field,
    domain: Domain,
    p: &MultiplierParams,
) -> Result<IdentityResidual> {
    if v.dim() != 2 {
        return Err(Error::Domain("integrated checks are planar".into()));
    }
    let radii = domain.radii()?;
    let vol = |j: &Jet, x: &[f64; 3]| integrated_volume_density(j, x, p);
    let bnd = |j: &Jet, x: &[f64; 3], nu: &[f64; 3]| integrated_boundary_density(j, x, nu, p);
    let lhs = certified(|l| {
        let (panels, nth) = (2usize << l, 64usize << l);
        let (s, a) = volume_integral(v, radii, panels, nth, &vol)?;
        Ok((s, a, panels * QUAD_ORDER, nth))
    })?;
    let rhs = certified(|l| {
        let nth = 64usize << l;
        let (mut s, mut a) = circle_integral(v, radii.1, 1.0, nth, &bnd)?;
        if radii.0 > 0.0 {
            let (s2, a2) = circle_integral(v, radii.0, -1.0, nth, &bnd)?;
            s += s2;
            a += a2;
        }
        Ok((s, a, 0, nth))
    })?;
    Ok(IdentityResidual {
        lhs: lhs.0,
        rhs: rhs.0,
        abs_residual: (lhs.0 - rhs.0).abs(),
        rel_residual: rel(lhs.0, rhs.0),
        discretization: Discretization::Quadrature {
            radial_nodes: lhs.2,
            angular_nodes: lhs.3.max(rhs.3),
        },
    })
}

/// Value of the radiating expression on `Γ_R` and the magnitude of its
/// largest term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiatingCheck {
    pub value: f64,
    pub scale: f64,
}

/// For `u = Σ c_ν H^(1)_ν(κr) e^{iνθ}` in the plane, evaluates
/// `∫_{Γ_R} R(|u_r|² − |∇_T u|² + κ²|u|²) − 2κR Im∫ ū u_r + Re∫ ū u_r`
/// by angular orthogonality. A value above `RADIATING_SLACK · scale` is an
/// invariant violation.
pub fn check_radiating_inequality(
    coeffs: &[(i32, C)],
    kappa: f64,
    r: f64,
    r0: f64,
) -> Result<RadiatingCheck> {
    if !(kappa > 0.0 && r0 > 0.0 && r > r0 && r.is_finite()) {
        return Err(Error::Domain(format!(
            "need kappa > 0 and R > R0 > 0, got {kappa}, {r}, {r0}"
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    let (mut ur2, mut ut2, mut u2, mut uur) = (0.0, 0.0, 0.0, c0());
    for &(nu, c) in coeffs {
        if !seen.insert(nu) {
            return Err(Error::Domain(format!("mode {nu} repeated")));
        }
        let e = cylinder_eval(nu, C::new(kappa * r, 0.0))?;
        let [_, _, h, hp] = e.unscaled();
        let w = 2.0 * PI * r * c.norm_sqr();
        let dh = kappa * hp;
        ur2 += w * dh.norm_sqr();
        ut2 += w * (nu as f64 / r).powi(2) * h.norm_sqr();
        u2 += w * h.norm_sqr();
        uur += w * h.conj() * dh;
    }
    let d = 2.0;
    let terms = [
        r * ur2,
        -r * ut2,
        r * kappa * kappa * u2,
        -2.0 * kappa * r * uur.im,
        (d - 1.0) * uur.re,
    ];
    let value = terms.iter().sum::<f64>();
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if value > RADIATING_SLACK * scale {
        return Err(Error::InvariantViolation {
            what: "radiating inequality on Γ_R".into(),
            value,
        });
    }
    Ok(RadiatingCheck { value, scale })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// `∫_Γ (x·n)|w|² ≤ (d+ε)‖w‖² + (1/ε) diam² ‖∇w‖²` on the unit disc,
/// returning `rhs − lhs`. A margin below `−TRACE_SLACK` is an invariant
/// violation.
pub fn check_trace_inequality(w: &dyn Field, eps: f64) -> Result<TraceCheck> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    if w.dim() != 2 {
        return Err(Error::Domain("the trace check is on the unit disc".into()));
    }
    let l2 = |j: &Jet, _: &[f64; 3]| j.v.norm_sqr();
    let h1 = |j: &Jet, _: &[f64; 3]| j.grad_norm_sq();
    let trace =
        |j: &Jet, x: &[f64; 3], nu: &[f64; 3]| (x[0] * nu[0] + x[1] * nu[1]) * j.v.norm_sqr();
    let vol = |g: &(dyn Fn(&Jet, &[f64; 3]) -> f64 + Sync)| {
        certified(|l| {
            let (s, a) = volume_integral(w, (0.0, 1.0), 1usize << l, 64usize << l, g)?;
            Ok((s, a, 0, 0))
        })
        .map(|x| x.0)
    };
    let w2 = vol(&l2)?;
    let g2 = vol(&h1)?;
    let lhs = certified(|l| {
        let (s, a) = circle_integral(w, 1.0, 1.0, 64usize << l, &trace)?;
        Ok((s, a, 0, 0))
    })?
    .0;
    let diam = 2.0;
    let rhs = (2.0 + eps) * w2 + diam * diam / eps * g2;
    let margin = rhs - lhs;
    if margin < -TRACE_SLACK {
        return Err(Error::InvariantViolation {
            what: "weighted trace inequality".into(),
            value: margin,
        });
    }
    Ok(TraceCheck { lhs, rhs, margin })
}

/// Trial counts of [`identity_suite`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSizes {
    pub pointwise: usize,
    pub ludwig: usize,
    pub integrated: usize,
    pub radiating: usize,
    pub trace: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        SuiteSizes {
            pointwise: 1000,
            ludwig: 1000,
            integrated: 100,
            radiating: 100,
            trace: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub seed: u64,
    pub error: String,
}

/// Distribution of one check over its randomized trials. `worst` is the
/// largest relative residual (identities), the largest `value / scale`
/// (radiating), or the smallest margin (trace).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckStats {
    pub name: String,
    pub trials: usize,
    pub worst: f64,
    pub worst_seed: Option<u64>,
    pub median: f64,
    pub tolerance: f64,
    pub failures: Vec<TrialFailure>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentitySuiteReport {
    pub seed: u64,
    pub checks: Vec<CheckStats>,
}

impl IdentitySuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn random_point(d: usize, rng: &mut impl Rng, min_r: f64) -> [f64; 3] {
    loop {
        let mut x = [0.0; 3];
        for c in x.iter_mut().take(d) {
            *c = rng.gen_range(-2.0..2.0);
        }
        if x.iter().map(|c| c * c).sum::<f64>().sqrt() >= min_r {
            return x;
        }
    }
}

fn random_params(rng: &mut impl Rng) -> MultiplierParams {
    MultiplierParams {
        a: rng.gen_range(0.2..3.0),
        n: rng.gen_range(0.2..3.0),
        k: rng.gen_range(0.1..10.0),
        alpha: rng.gen_range(-2.0..2.0),
        beta: rng.gen_range(-3.0..3.0),
    }
}

/// Runs `trials` independent trials; trial `j` uses the generator seeded
/// with `seed + j`. Larger `score` is worse, except when `lower_is_worse`.
fn run_trials<F>(
    name: &str,
    trials: usize,
    seed: u64,
    tolerance: f64,
    lower_is_worse: bool,
    trial: F,
) -> CheckStats
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let results: Vec<(u64, Result<f64>)> = (0..trials as u64)
        .into_par_iter()
        .map(|j| {
            let s = seed.wrapping_add(j);
            (s, trial(&mut ChaCha8Rng::seed_from_u64(s)))
        })
        .collect();
    let mut scores = Vec::new();
    let mut failures = Vec::new();
    let mut worst: Option<(f64, u64)> = None;
    for (s, r) in results {
        match r {
            Ok(x) => {
                scores.push(x);
                let worse = match worst {
                    None => true,
                    Some((w, _)) => {
                        if lower_is_worse {
                            x < w
                        } else {
                            x > w
                        }
                    }
                };
                if worse {
                    worst = Some((x, s));
                }
            }
            Err(e) => failures.push(TrialFailure {
                seed: s,
                error: e.to_string(),
            }),
        }
    }
    scores.sort_by(f64::total_cmp);
    let median = scores.get(scores.len() / 2).copied().unwrap_or(f64::NAN);
    let (w, ws) = worst.map_or((f64::NAN, None), |(w, s)| (w, Some(s)));
    let within = if lower_is_worse {
        w >= tolerance
    } else {
        w < tolerance
    };
    CheckStats {
        name: name.into(),
        trials,
        worst: w,
        worst_seed: ws,
        median,
        tolerance,
        passed: failures.is_empty() && (trials == 0 || within),
        failures,
    }
}

/// Randomized trials of every check. Sub-suites draw from disjoint seed
/// ranges derived from `seed`.
pub fn identity_suite(sizes: &SuiteSizes, seed: u64) -> IdentitySuiteReport {
    const STRIDE: u64 = 1 << 32;
    let pointwise = run_trials(
        "morawetz_pointwise",
        sizes.pointwise,
        seed,
        POINTWISE_TOL,
        false,
        |rng| {
            let d = rng.gen_range(2..=3);
            let v = TestField::random(d, 4.0, rng)?;
            let p = random_params(rng);
            let x = random_point(d, rng, 0.0);
            Ok(check_morawetz_pointwise(&v, &p, &[x])?.rel_residual)
        },
    );
    let ludwig = run_trials(
        "morawetz_ludwig",
        sizes.ludwig,
        seed.wrapping_add(STRIDE),
        POINTWISE_TOL,
        false,
        |rng| {
            let d = rng.gen_range(2..=3);
            let v = TestField::random(d, 4.0, rng)?;
            let kappa = rng.gen_range(0.1..10.0);
            let alpha = rng.gen_range(-2.0..2.0);
            let x = random_point(d, rng, 0.1);
            Ok(check_morawetz_ludwig(&v, kappa, alpha, &[x])?.rel_residual)
        },
    );
    let integrated = run_trials(
        "morawetz_integrated",
        sizes.integrated,
        seed.wrapping_add(2 * STRIDE),
        INTEGRATED_TOL,
        false,
        |rng| {
            let v = TestField::random(2, 3.0, rng)?;
            let p = random_params(rng);
            let domain = if rng.gen_bool(0.5) {
                Domain::Disc {
                    radius: rng.gen_range(0.5..2.0),
                }
            } else {
                let inner = rng.gen_range(0.3..1.2);
                Domain::Annulus {
                    inner,
                    outer: inner + rng.gen_range(0.3..1.0),
                }
            };
            Ok(check_morawetz_integrated(&v, domain, &p)?.rel_residual)
        },
    );
    let radiating = run_trials(
        "radiating_inequality",
        sizes.radiating,
        seed.wrapping_add(3 * STRIDE),
        RADIATING_SLACK,
        false,
        |rng| {
            let mut coeffs = Vec::new();
            let mut nus: Vec<i32> = (-12..=12).collect();
            for _ in 0..10 {
                let nu = nus.swap_remove(rng.gen_range(0..nus.len()));
                coeffs.push((
                    nu,
                    C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                ));
            }
            let kappa = rng.gen_range(0.2..10.0);
            let r0 = rng.gen_range(0.2..2.0);
            let r = r0 * rng.gen_range(1.01..3.0);
            let c = check_radiating_inequality(&coeffs, kappa, r, r0)?;
            Ok(c.value / c.scale)
        },
    );
    let trace = run_trials(
        "trace_inequality",
        sizes.trace,
        seed.wrapping_add(4 * STRIDE),
        -TRACE_SLACK,
        true,
        |rng| {
            let w = TestField::random(2, 3.0, rng)?;
            let eps = [0.1, 1.0, 10.0][rng.gen_range(0..3)];
            Ok(check_trace_inequality(&w, eps)?.margin)
        },
    );
    IdentitySuiteReport {
        seed,
        checks: vec![pointwise, ludwig, integrated, radiating, trace],
    }
}
