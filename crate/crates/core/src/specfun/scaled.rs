use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `x * 2^k` without intermediate overflow.
pub fn ldexp(mut x: f64, mut k: i32) -> f64 {
    const STEP: i32 = 1000;
    while k > STEP {
        x *= 2f64.powi(STEP);
        k -= STEP;
        if !x.is_finite() {
            return x;
        }
    }
    while k < -STEP {
        x *= 2f64.powi(-STEP);
        k += STEP;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(k)
}

fn exponent_of(a: f64) -> i32 {
    let bits = (a.to_bits() >> 52) & 0x7ff;
    if bits == 0 {
        a.log2().floor() as i32
    } else {
        bits as i32 - 1023
    }
}

/// A complex number stored as `m * 2^e`.
///
/// Bessel values of large order at small argument leave the `f64` range long
/// before their products (Wronskians, field ratios) do; carrying the binary
/// exponent separately keeps those products exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaled {
    pub m: Complex64,
    pub e: i32,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled {
        m: Complex64::new(0.0, 0.0),
        e: 0,
    };
    pub const ONE: Scaled = Scaled {
        m: Complex64::new(1.0, 0.0),
        e: 0,
    };

    pub fn new(m: Complex64, e: i32) -> Self {
        let mut s = Scaled { m, e };
        s.normalize();
        s
    }

    pub fn from_c64(z: Complex64) -> Self {
        Self::new(z, 0)
    }

    pub fn from_f64(x: f64) -> Self {
        Self::new(Complex64::new(x, 0.0), 0)
    }

    /// `exp(w)` with the real part of `w` absorbed into the exponent.
    pub fn exp(w: Complex64) -> Self {
        let k = (w.re / std::f64::consts::LN_2).floor();
        let r = w.re - k * std::f64::consts::LN_2;
        Scaled::new(Complex64::from_polar(r.exp(), w.im), k as i32)
    }

    /// Bring the larger component of the mantissa into `[1, 2)`.
    pub fn normalize(&mut self) {
        let a = self.m.re.abs().max(self.m.im.abs());
        if a == 0.0 || !a.is_finite() {
            if a == 0.0 {
                self.e = 0;
            }
            return;
        }
        let k = exponent_of(a);
        if k != 0 {
            self.m = Complex64::new(ldexp(self.m.re, -k), ldexp(self.m.im, -k));
            self.e = self.e.saturating_add(k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.m.re == 0.0 && self.m.im == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.m.re.is_finite() && self.m.im.is_finite()
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(ldexp(self.m.re, self.e), ldexp(self.m.im, self.e))
    }

    /// Natural logarithm of the modulus.
    pub fn ln_abs(&self) -> f64 {
        self.m.norm().ln() + self.e as f64 * std::f64::consts::LN_2
    }

    pub fn abs(&self) -> f64 {
        ldexp(self.m.norm(), self.e)
    }

    pub fn conj(self) -> Self {
        Scaled {
            m: self.m.conj(),
            e: self.e,
        }
    }

    pub fn scale(self, c: Complex64) -> Self {
        Scaled::new(self.m * c, self.e)
    }

    pub fn mul_pow2(self, k: i32) -> Self {
        Scaled {
            m: self.m,
            e: self.e + k,
        }
    }
}

impl Mul for Scaled {
    type Output = Scaled;
    fn mul(self, o: Scaled) -> Scaled {
        Scaled::new(self.m * o.m, self.e + o.e)
    }
}

impl Div for Scaled {
    type Output = Scaled;
    fn div(self, o: Scaled) -> Scaled {
        Scaled::new(self.m / o.m, self.e - o.e)
    }
}

impl Add for Scaled {
    type Output = Scaled;
    fn add(self, o: Scaled) -> Scaled {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (big, small) = if self.e >= o.e { (self, o) } else { (o, self) };
        let d = small.e - big.e;
        if d < -1100 {
            return big;
        }
        let sm = Complex64::new(ldexp(small.m.re, d), ldexp(small.m.im, d));
        Scaled::new(big.m + sm, big.e)
    }
}

impl Neg for Scaled {
    type Output = Scaled;
    fn neg(self) -> Scaled {
        Scaled {
            m: -self.m,
            e: self.e,
        }
    }
}

impl Sub for Scaled {
    type Output = Scaled;
    fn sub(self, o: Scaled) -> Scaled {
        self + (-o)
    }
}

impl From<Complex64> for Scaled {
    fn from(z: Complex64) -> Self {
        Scaled::from_c64(z)
    }
}
