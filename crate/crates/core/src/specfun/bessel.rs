//! Integer-order Bessel and Hankel functions of complex argument.
//!
//! `J_n` comes from Miller's backward recurrence normalized by the
//! Jacobi–Anger sum for `exp(∓iz)`, with the sign chosen so that no
//! cancellation occurs. `H^(1)_n` is built from order-0/1 seeds (power series,
//! Steed's continued fraction, or the Hankel expansion) followed by forward
//! recurrence. Near and below the real axis `H^(1) = J + iY` is used with `Y`
//! recurred forward on its own, which keeps the real part of `H^(1)` accurate
//! in the evanescent range.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::scaled::{ldexp, Scaled};
use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest supported order.
pub const MAX_ORDER: u32 = 10_000;
/// Largest supported argument modulus.
pub const MAX_ARG: f64 = 1.0e5;

const RESCALE_EXP: i32 = 500;
const SERIES_RADIUS: f64 = 2.0;
const ASYMPTOTIC_RADIUS: f64 = 30.0;
const DIRECT_HANKEL_IM: f64 = 0.25;
const TINY_ARG: f64 = 1.0e-100;

fn i() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

fn check_arg(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    let a = z.norm();
    if a > MAX_ARG {
        return Err(Error::AccuracyLoss {
            estimate: f64::EPSILON * a,
            context: format!("|z| = {a:.3e} beyond supported range {MAX_ARG:.0e}"),
        });
    }
    Ok(())
}

fn check_order(n: u32) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::Domain(format!("order {n} exceeds {MAX_ORDER}")));
    }
    Ok(())
}

fn start_order(nmax: usize, az: f64) -> usize {
    nmax.max(az.ceil() as usize) + 20 + (10.0 * az.sqrt()).ceil() as usize
}

fn too_big(p: Complex64) -> bool {
    p.re.abs().max(p.im.abs()) > ldexp(1.0, RESCALE_EXP)
}

fn shrink(p: Complex64) -> Complex64 {
    Complex64::new(ldexp(p.re, -RESCALE_EXP), ldexp(p.im, -RESCALE_EXP))
}

/// `J_0(z), ..., J_nmax(z)`.
pub fn j_sequence(nmax: usize, z: Complex64) -> Result<Vec<Scaled>> {
    check_order(nmax as u32)?;
    check_arg(z)?;
    let az = z.norm();
    if az == 0.0 {
        let mut v = vec![Scaled::ZERO; nmax + 1];
        v[0] = Scaled::ONE;
        return Ok(v);
    }
    if az < TINY_ARG {
        let half = Scaled::from_c64(z / 2.0);
        let mut t = Scaled::ONE;
        let mut v = Vec::with_capacity(nmax + 1);
        v.push(t);
        for n in 1..=nmax {
            t = (t * half).scale(Complex64::new(1.0 / n as f64, 0.0));
            v.push(t);
        }
        return Ok(v);
    }

    let top = start_order(nmax, az);
    let two_over_z = 2.0 / z;
    // Jacobi–Anger weight c^n with |exp(∓iz)| = exp(|Im z|).
    let upper = z.im >= 0.0;
    let unit = |n: usize| -> Complex64 {
        let k = n % 4;
        match (upper, k) {
            (_, 0) => Complex64::new(1.0, 0.0),
            (_, 2) => Complex64::new(-1.0, 0.0),
            (true, 1) | (false, 3) => Complex64::new(0.0, -1.0),
            _ => Complex64::new(0.0, 1.0),
        }
    };

    let mut store = vec![Scaled::ZERO; nmax + 1];
    let mut p_next = Complex64::new(0.0, 0.0);
    let mut p = Complex64::new(1.0, 0.0);
    let mut e = 0i32;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut n = top;
    loop {
        if n <= nmax {
            store[n] = Scaled::new(p, e);
        }
        let w = if n == 0 { 1.0 } else { 2.0 };
        sum += unit(n) * p * w;
        if n == 0 {
            break;
        }
        let p_prev = two_over_z * (n as f64) * p - p_next;
        p_next = p;
        p = p_prev;
        while too_big(p) {
            p = shrink(p);
            p_next = shrink(p_next);
            sum = shrink(sum);
            e += RESCALE_EXP;
        }
        n -= 1;
    }

    let target = if upper {
        Scaled::exp(-i() * z)
    } else {
        Scaled::exp(i() * z)
    };
    let factor = target / Scaled::new(sum, e);
    Ok(store.into_iter().map(|s| s * factor).collect())
}

fn y01_series(z: Complex64, j0: Complex64, j1: Complex64) -> (Complex64, Complex64) {
    let q = z * z / 4.0;
    let lg = (z / 2.0).ln();

    let mut t = Complex64::new(1.0, 0.0);
    let mut harmonic = 0.0;
    let mut s0 = Complex64::new(0.0, 0.0);
    for k in 1..80 {
        let kf = k as f64;
        t *= -q / (kf * kf);
        harmonic += 1.0 / kf;
        let term = t * harmonic;
        s0 += term;
        if term.norm() <= 1e-18 * s0.norm() {
            break;
        }
    }
    let y0 = (2.0 / PI) * ((lg + EULER_GAMMA) * j0 - s0);

    let mut u = Complex64::new(1.0, 0.0);
    let mut hk = 0.0;
    let mut s1 = Complex64::new(-2.0 * EULER_GAMMA + 1.0, 0.0);
    for k in 1..80 {
        let kf = k as f64;
        u *= -q / (kf * (kf + 1.0));
        hk += 1.0 / kf;
        let term = u * (-2.0 * EULER_GAMMA + 2.0 * hk + 1.0 / (kf + 1.0));
        s1 += term;
        if term.norm() <= 1e-18 * s1.norm() {
            break;
        }
    }
    let y1 = (2.0 / PI) * lg * j1 - 2.0 / (PI * z) - (z / (2.0 * PI)) * s1;
    (y0, y1)
}

/// `H0'/H0` from Steed's continued fraction.
fn hankel_log_derivative(z: Complex64) -> Complex64 {
    const TINY: f64 = 1e-150;
    let tiny = Complex64::new(TINY, 0.0);
    let mut f = tiny;
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for j in 1..20_000 {
        let a = (j as f64 - 0.5).powi(2);
        let b = 2.0 * (z + i() * j as f64);
        d = b + a * d;
        if d.norm() == 0.0 {
            d = tiny;
        }
        c = b + a / c;
        if c.norm() == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    -0.5 / z + i() + (i() / z) * f
}

fn hankel01_asymptotic(z: Complex64) -> (Scaled, Scaled) {
    let pre = (2.0 / (PI * z)).sqrt();
    let mut out = [Scaled::ZERO; 2];
    for (nu, slot) in out.iter_mut().enumerate() {
        let mu = 4.0 * (nu * nu) as f64;
        let mut a = Complex64::new(1.0, 0.0);
        let mut sum = a;
        let mut last = f64::INFINITY;
        for k in 1..200 {
            let kf = k as f64;
            a *= i() * (mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * z);
            let an = a.norm();
            if an > last {
                break;
            }
            sum += a;
            last = an;
            if an < 1e-17 * sum.norm() {
                break;
            }
        }
        let phase = i() * (z - nu as f64 * FRAC_PI_2 - FRAC_PI_4);
        *slot = Scaled::exp(phase).scale(pre * sum);
    }
    (out[0], out[1])
}

/// `H^(1)_0(w), H^(1)_1(w)` for `Im w >= 0`.
fn hankel01_upper(w: Complex64, j0: Scaled, j1: Scaled) -> (Scaled, Scaled) {
    let aw = w.norm();
    if aw < SERIES_RADIUS {
        let (j0, j1) = (j0.to_c64(), j1.to_c64());
        let (y0, y1) = y01_series(w, j0, j1);
        (
            Scaled::from_c64(j0 + i() * y0),
            Scaled::from_c64(j1 + i() * y1),
        )
    } else if aw < ASYMPTOTIC_RADIUS {
        let h = hankel_log_derivative(w);
        let (j0, j1) = (j0.to_c64(), j1.to_c64());
        let h0 = 2.0 * i() / (PI * w * (j0 * h + j1));
        (Scaled::from_c64(h0), Scaled::from_c64(-h * h0))
    } else {
        hankel01_asymptotic(w)
    }
}

/// Forward three-term recurrence from orders 0 and 1 up to `nmax`.
fn forward(a0: Scaled, a1: Scaled, nmax: usize, z: Complex64) -> Vec<Scaled> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(a0);
    if nmax == 0 {
        return out;
    }
    out.push(a1);
    let mut e = a0.e.max(a1.e);
    let mut prev = Complex64::new(ldexp(a0.m.re, a0.e - e), ldexp(a0.m.im, a0.e - e));
    let mut cur = Complex64::new(ldexp(a1.m.re, a1.e - e), ldexp(a1.m.im, a1.e - e));
    let two_over_z = 2.0 / z;
    for n in 1..nmax {
        let next = two_over_z * (n as f64) * cur - prev;
        prev = cur;
        cur = next;
        while too_big(cur) {
            cur = shrink(cur);
            prev = shrink(prev);
            e += RESCALE_EXP;
        }
        out.push(Scaled::new(cur, e));
    }
    out
}

/// `Y_0(z), ..., Y_nmax(z)` given `J_0(z)` and `J_1(z)`.
fn y_sequence_with(nmax: usize, z: Complex64, j0: Scaled, j1: Scaled) -> Vec<Scaled> {
    let upper = z.im >= 0.0;
    let (w, jw0, jw1) = if upper {
        (z, j0, j1)
    } else {
        (z.conj(), j0.conj(), j1.conj())
    };
    let (hw0, hw1) = hankel01_upper(w, jw0, jw1);
    let minus_i = Scaled::from_c64(-i());
    let mut y0 = (hw0 - jw0) * minus_i;
    let mut y1 = (hw1 - jw1) * minus_i;
    if !upper {
        y0 = y0.conj();
        y1 = y1.conj();
    }
    forward(y0, y1, nmax, z)
}

/// `Y_0(z), ..., Y_nmax(z)`.
pub fn y_sequence(nmax: usize, z: Complex64) -> Result<Vec<Scaled>> {
    if z.norm() == 0.0 {
        return Err(Error::Singularity("Y_n is singular at z = 0".into()));
    }
    let n = nmax.max(1);
    let mut y = if z.im.abs() < DIRECT_HANKEL_IM {
        let j = j_sequence(n, z)?;
        y_sequence_with(n, z, j[0], j[1])
    } else {
        let (j, h) = cylinder_sequences(n, z)?;
        let minus_i = Scaled::from_c64(-i());
        j.iter().zip(&h).map(|(&a, &b)| (b - a) * minus_i).collect()
    };
    y.truncate(nmax + 1);
    Ok(y)
}

fn upper_sequences(n: usize, z: Complex64) -> Result<(Vec<Scaled>, Vec<Scaled>)> {
    let j = j_sequence(n, z)?;
    let h = if z.im >= DIRECT_HANKEL_IM {
        let (h0, h1) = hankel01_upper(z, j[0], j[1]);
        forward(h0, h1, n, z)
    } else {
        let y = y_sequence_with(n, z, j[0], j[1]);
        let iu = Scaled::from_c64(i());
        j.iter().zip(&y).map(|(&a, &b)| a + iu * b).collect()
    };
    Ok((j, h))
}

/// `J_n` and `H^(1)_n` for `n = 0..=nmax`.
///
/// Below the real axis `H^(1)_n` decays with `n` over the oscillatory range,
/// so it is obtained from the upper half-plane through
/// `H^(1)_n(z) = 2 J_n(z) - conj(H^(1)_n(conj z))`.
pub fn cylinder_sequences(nmax: usize, z: Complex64) -> Result<(Vec<Scaled>, Vec<Scaled>)> {
    if z.norm() == 0.0 {
        return Err(Error::Singularity("H^(1)_n is singular at z = 0".into()));
    }
    let n = nmax.max(1);
    let (mut j, mut h) = if z.im < 0.0 {
        let (jw, hw) = upper_sequences(n, z.conj())?;
        let j: Vec<Scaled> = jw.into_iter().map(Scaled::conj).collect();
        let two = Scaled::from_f64(2.0);
        let h = j
            .iter()
            .zip(&hw)
            .map(|(&a, &b)| two * a - b.conj())
            .collect();
        (j, h)
    } else {
        upper_sequences(n, z)?
    };
    j.truncate(nmax + 1);
    h.truncate(nmax + 1);
    Ok((j, h))
}

fn reflect(nu: i32, v: Scaled) -> Scaled {
    if nu < 0 && nu % 2 != 0 {
        -v
    } else {
        v
    }
}

/// `J_nu(z)` in scaled form.
pub fn bessel_j_scaled(nu: i32, z: Complex64) -> Result<Scaled> {
    let n = nu.unsigned_abs() as usize;
    let j = j_sequence(n, z)?;
    Ok(reflect(nu, j[n]))
}

/// `H^(1)_nu(z)` in scaled form.
pub fn hankel1_scaled(nu: i32, z: Complex64) -> Result<Scaled> {
    let n = nu.unsigned_abs() as usize;
    let (_, h) = cylinder_sequences(n, z)?;
    Ok(reflect(nu, h[n]))
}

/// `J_nu(z)`; underflows to zero where the scaled form would not.
pub fn bessel_j(nu: i32, z: Complex64) -> Result<Complex64> {
    bessel_j_scaled(nu, z).map(Scaled::to_c64)
}

/// `H^(1)_nu(z)`; fails when the value leaves the `f64` range.
pub fn hankel1(nu: i32, z: Complex64) -> Result<Complex64> {
    let h = hankel1_scaled(nu, z)?.to_c64();
    if !(h.re.is_finite() && h.im.is_finite()) {
        return Err(Error::AccuracyLoss {
            estimate: f64::INFINITY,
            context: format!("H^(1)_{nu}({z}) overflows f64; use hankel1_scaled"),
        });
    }
    Ok(h)
}

/// Values of `J`, `J'`, `H^(1)`, `H^(1)'` at one order and argument.
///
/// The true values are `j * 2^s`, `jp * 2^s`, `h1 * 2^-s`, `h1p * 2^-s` with
/// `s = log2_scale`, so products of a `J` and an `H` factor need no rescaling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderEval {
    pub order: i32,
    pub argument: Complex64,
    pub j: Complex64,
    pub jp: Complex64,
    pub h1: Complex64,
    pub h1p: Complex64,
    pub log2_scale: i32,
}

impl CylinderEval {
    /// `|J H' - J' H - 2i/(pi z)| / |2/(pi z)|`.
    pub fn wronskian_residual(&self) -> f64 {
        let z = self.argument;
        let w = self.j * self.h1p - self.jp * self.h1;
        let exact = 2.0 * i() / (PI * z);
        (w - exact).norm() / exact.norm()
    }

    /// Unscaled `(J, J', H, H')`; may overflow or underflow.
    pub fn unscaled(&self) -> [Complex64; 4] {
        let s = self.log2_scale;
        let up = |c: Complex64, k: i32| Complex64::new(ldexp(c.re, k), ldexp(c.im, k));
        [
            up(self.j, s),
            up(self.jp, s),
            up(self.h1, -s),
            up(self.h1p, -s),
        ]
    }
}

/// Cylinder functions of orders `0..=nmax` at a single argument, with
/// derivatives.
#[derive(Clone, Debug)]
pub struct CylinderTable {
    pub z: Complex64,
    j: Vec<Scaled>,
    h: Vec<Scaled>,
}

impl CylinderTable {
    pub fn new(nmax: usize, z: Complex64) -> Result<Self> {
        let (j, h) = cylinder_sequences(nmax + 1, z)?;
        Ok(CylinderTable { z, j, h })
    }

    /// Table of `J` only; valid at `z = 0`. Hankel accessors panic.
    pub fn bessel_only(nmax: usize, z: Complex64) -> Result<Self> {
        let j = j_sequence(nmax + 1, z)?;
        Ok(CylinderTable {
            z,
            j,
            h: Vec::new(),
        })
    }

    pub fn max_order(&self) -> usize {
        self.j.len() - 2
    }

    fn at(v: &[Scaled], nu: i32) -> Scaled {
        reflect(nu, v[nu.unsigned_abs() as usize])
    }

    fn deriv(v: &[Scaled], nu: i32) -> Scaled {
        let half = Complex64::new(0.5, 0.0);
        (Self::at(v, nu - 1) - Self::at(v, nu + 1)).scale(half)
    }

    pub fn j(&self, nu: i32) -> Scaled {
        Self::at(&self.j, nu)
    }

    pub fn jp(&self, nu: i32) -> Scaled {
        Self::deriv(&self.j, nu)
    }

    pub fn h(&self, nu: i32) -> Scaled {
        Self::at(&self.h, nu)
    }

    pub fn hp(&self, nu: i32) -> Scaled {
        Self::deriv(&self.h, nu)
    }

    pub fn eval(&self, nu: i32) -> CylinderEval {
        let j = self.j(nu);
        let s = j.e;
        let down = |v: Scaled, k: i32| v.mul_pow2(k).to_c64();
        CylinderEval {
            order: nu,
            argument: self.z,
            j: down(j, -s),
            jp: down(self.jp(nu), -s),
            h1: down(self.h(nu), s),
            h1p: down(self.hp(nu), s),
            log2_scale: s,
        }
    }
}

/// `J`, `J'`, `H^(1)`, `H^(1)'` at order `nu` from one recurrence pass.
pub fn cylinder_eval(nu: i32, z: Complex64) -> Result<CylinderEval> {
    check_order(nu.unsigned_abs())?;
    let t = CylinderTable::new(nu.unsigned_abs() as usize, z)?;
    Ok(t.eval(nu))
}
