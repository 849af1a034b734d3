use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// Ai(0).
pub const AI0: f64 = 0.355_028_053_887_817_239_260_063_186_004_183_176_397_979_174_199_177;
/// Ai'(0).
pub const AIP0: f64 = -0.258_819_403_792_806_8;

const TAYLOR_LIMIT: f64 = 12.0;
const TAYLOR_STEP: f64 = 0.5;
const SCAN_STEP: f64 = 0.05;
pub const MAX_ZEROS: usize = 100;

/// Taylor expansion of `y(t) = Ai(-t)` about `t0`, evaluated at `t0 + h`.
/// `y'' = -t y`.
fn taylor_step(t0: f64, y0: f64, yp0: f64, h: f64) -> (f64, f64) {
    let mut c = [y0, yp0, 0.0];
    let (mut y, mut yp) = (y0 + yp0 * h, yp0);
    let mut hp = h;
    let mut j = 0usize;
    let mut quiet = 0;
    loop {
        // c holds c_j, c_{j+1}; next is c_{j+2}
        let cm1 = if j == 0 { 0.0 } else { c[2] };
        let next = -(t0 * c[0] + cm1) / (((j + 2) * (j + 1)) as f64);
        let term_y = next * hp * h;
        let term_yp = (j + 2) as f64 * next * hp;
        y += term_y;
        yp += term_yp;
        c[2] = c[0];
        c[0] = c[1];
        c[1] = next;
        hp *= h;
        j += 1;
        let small = term_y.abs() <= 1e-18 * y.abs().max(1e-300)
            && term_yp.abs() <= 1e-18 * yp.abs().max(1e-300);
        quiet = if small { quiet + 1 } else { 0 };
        if quiet >= 3 {
            break;
        }
        if j > 200 {
            break;
        }
    }
    (y, yp)
}

fn asymptotic(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (mut u_even, mut u_odd) = (0.0, 0.0);
    let (mut v_even, mut v_odd) = (0.0, 0.0);
    let mut u = 1.0;
    let mut zp = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..200usize {
        if k > 0 {
            let kf = k as f64;
            u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
                / ((2.0 * kf - 1.0) * 216.0 * kf);
            zp *= zeta;
        }
        let v = -(6.0 * k as f64 + 1.0) / (6.0 * k as f64 - 1.0) * u;
        let tu = u / zp;
        if tu.abs() > last {
            break;
        }
        last = tu.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            u_even += sign * tu;
            v_even += sign * v / zp;
        } else {
            u_odd += sign * tu;
            v_odd += sign * v / zp;
        }
        if tu.abs() < 1e-18 {
            break;
        }
    }
    let phase = zeta - FRAC_PI_4;
    let (s, c) = phase.sin_cos();
    let ai = (c * u_even + s * u_odd) / (PI.sqrt() * x.powf(0.25));
    let aip = x.powf(0.25) / PI.sqrt() * (s * v_even - c * v_odd);
    // d/dx Ai(-x) = -Ai'(-x)
    (ai, -aip)
}

/// `Ai(-x)` and `d/dx Ai(-x)` for `x >= 0`.
pub fn airy_ai_neg(x: f64) -> (f64, f64) {
    if x > TAYLOR_LIMIT {
        return asymptotic(x);
    }
    let (mut t, mut y, mut yp) = (0.0, AI0, -AIP0);
    while t < x {
        let h = TAYLOR_STEP.min(x - t);
        let (ny, nyp) = taylor_step(t, y, yp, h);
        y = ny;
        yp = nyp;
        t += h;
    }
    (y, yp)
}

/// The first zeros of `Ai(-z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AiryZeroTable {
    pub zeros: Vec<f64>,
}

impl AiryZeroTable {
    /// The `m`-th zero, 1-based.
    pub fn get(&self, m: usize) -> Option<f64> {
        m.checked_sub(1).and_then(|i| self.zeros.get(i).copied())
    }
}

/// First `count` positive zeros of `Ai(-z)`, by sign-change scan, bisection
/// and a final Newton polish.
pub fn airy_zeros(count: usize) -> Result<AiryZeroTable> {
    if count == 0 || count > MAX_ZEROS {
        return Err(Error::Domain(format!(
            "count must be in 1..={MAX_ZEROS}, got {count}"
        )));
    }
    let mut zeros = Vec::with_capacity(count);
    let mut a = 0.0;
    let mut fa = airy_ai_neg(a).0;
    while zeros.len() < count {
        let b = a + SCAN_STEP;
        let fb = airy_ai_neg(b).0;
        if fa.signum() != fb.signum() {
            zeros.push(refine(a, b, fa));
        }
        a = b;
        fa = fb;
    }
    Ok(AiryZeroTable { zeros })
}

fn refine(mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let fm = airy_ai_neg(mid).0;
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let (f, fp) = airy_ai_neg(x);
        let step = f / fp;
        x -= step;
        if step.abs() < 1e-16 * x {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_zeros() {
        let t = airy_zeros(3).unwrap();
        let want = [2.338107410459767, 4.087949444130971, 5.520559828095551];
        for (z, w) in t.zeros.iter().zip(want) {
            assert!((z - w).abs() < 1e-12, "{z} vs {w}");
        }
    }

    #[test]
    fn methods_agree_at_switch() {
        for x in [10.0, 11.0, 12.0, 13.0, 14.0] {
            let a = asymptotic(x);
            let mut t = 0.0;
            let (mut y, mut yp) = (AI0, -AIP0);
            while t < x {
                let h = TAYLOR_STEP.min(x - t);
                (y, yp) = taylor_step(t, y, yp, h);
                t += h;
            }
            assert!((a.0 - y).abs() < 1e-13, "x={x}: {} vs {}", a.0, y);
            assert!((a.1 - yp).abs() < 1e-12, "x={x}: {} vs {}", a.1, yp);
        }
    }

    #[test]
    fn count_bounds() {
        assert!(airy_zeros(0).is_err());
        assert!(airy_zeros(101).is_err());
        assert_eq!(airy_zeros(100).unwrap().zeros.len(), 100);
    }
}
