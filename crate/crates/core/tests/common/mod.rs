//! Extended-precision reference routines shared by the integration tests.
//!
//! Everything here works in exact binary fixed point on `BigInt`, so it shares
//! no code path with the library's floating-point recurrences.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

const FRAC_BITS: u32 = 320;

fn fixed_from_f64(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = if exp == 0 {
        (bits & ((1 << 52) - 1)) << 1
    } else {
        (bits & ((1 << 52) - 1)) | (1 << 52)
    };
    // x = mant * 2^(exp - 1075)
    let shift = exp - 1075 + FRAC_BITS as i64;
    let m = BigInt::from(mant) * sign;
    if shift >= 0 {
        m << shift as usize
    } else {
        m >> (-shift) as usize
    }
}

fn fixed_to_f64(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap() / 2f64.powi(FRAC_BITS as i32);
    }
    let drop = bits - 1000;
    let top = (x >> drop as usize).to_f64().unwrap();
    top * 2f64.powi(drop as i32 - FRAC_BITS as i32)
}

fn fmul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> FRAC_BITS as usize
}

fn one() -> BigInt {
    BigInt::one() << FRAC_BITS as usize
}

#[derive(Clone)]
struct Cx {
    re: BigInt,
    im: BigInt,
}

impl Cx {
    fn from(z: Complex64) -> Self {
        Cx {
            re: fixed_from_f64(z.re),
            im: fixed_from_f64(z.im),
        }
    }
    fn mul(&self, o: &Cx) -> Cx {
        Cx {
            re: fmul(&self.re, &o.re) - fmul(&self.im, &o.im),
            im: fmul(&self.re, &o.im) + fmul(&self.im, &o.re),
        }
    }
    fn div_int(&self, d: u64) -> Cx {
        Cx {
            re: &self.re / d,
            im: &self.im / d,
        }
    }
    fn neg(&self) -> Cx {
        Cx {
            re: -&self.re,
            im: -&self.im,
        }
    }
    fn add(&self, o: &Cx) -> Cx {
        Cx {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
    fn is_negligible(&self) -> bool {
        self.re.abs().bits() < 4 && self.im.abs().bits() < 4
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(fixed_to_f64(&self.re), fixed_to_f64(&self.im))
    }
}

/// `J_n(z)` from its power series, summed in 320-bit fixed point.
///
/// The prefactor `(z/2)^n / n!` is applied in `f64` after the sum; its
/// relative error is a few `n` ulps.
pub fn bessel_j_series(n: u32, z: Complex64) -> Complex64 {
    let w = Cx::from(z / 2.0);
    let minus_w2 = w.mul(&w).neg();
    let mut term = Cx {
        re: one(),
        im: BigInt::zero(),
    };
    let mut sum = term.clone();
    for k in 1u64.. {
        term = term.mul(&minus_w2).div_int(k * (k + n as u64));
        sum = sum.add(&term);
        if k > 10 && term.is_negligible() {
            break;
        }
    }
    let mut pre = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        pre *= z / 2.0 / k as f64;
    }
    pre * sum.to_c64()
}

fn ai_neg_fixed(x: f64) -> BigInt {
    // Ai(0) and -Ai'(0) to 60 digits, as 2^-320 fixed point via decimal parsing.
    const C1: &str = "355028053887817239260063186004183176397979174199177240583327";
    const C2: &str = "258819403792806798405183560189203963479091138354934582210002";
    let ten60 = BigInt::from(10u32).pow(60);
    let c1 = (C1.parse::<BigInt>().unwrap() << FRAC_BITS as usize) / &ten60;
    let c2 = (C2.parse::<BigInt>().unwrap() << FRAC_BITS as usize) / &ten60;

    let xf = fixed_from_f64(x);
    let z3 = -fmul(&fmul(&xf, &xf), &xf);
    // f = sum z^{3k} prod(3j+1)/(3k)!, g = sum z^{3k+1} prod(3j+2)/(3k+1)!
    let mut tf = one();
    let mut f = tf.clone();
    let mut tg = -xf.clone();
    let mut g = tg.clone();
    for k in 1u64.. {
        tf = fmul(&tf, &z3) / (3 * k * (3 * k - 1));
        tg = fmul(&tg, &z3) / ((3 * k + 1) * (3 * k));
        f += &tf;
        g += &tg;
        if k > 5 && tf.abs().bits() < 4 && tg.abs().bits() < 4 {
            break;
        }
    }
    fmul(&c1, &f) - fmul(&c2, &g)
}

/// Zeros of `Ai(-x)` located by pure bisection on a fixed-point Maclaurin sum.
pub fn airy_zeros_bisection(count: usize) -> Vec<f64> {
    let sign = |x: f64| ai_neg_fixed(x).sign();
    let mut zeros = Vec::new();
    let step = 0.05;
    let mut a = 0.0;
    let mut sa = sign(a);
    while zeros.len() < count {
        let b = a + step;
        let sb = sign(b);
        if sa != sb {
            let (mut lo, mut hi) = (a, b);
            while hi - lo > 1e-14 {
                let mid = 0.5 * (lo + hi);
                if sign(mid) == sa {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        a = b;
        sa = sb;
    }
    zeros
}

/// Rows of the frozen reference table: `(n, z, J_n(z), H1_n(z))`.
pub fn bessel_oracle_table() -> Vec<(i32, Complex64, Complex64, Complex64)> {
    let text = include_str!("../data/bessel_oracle.csv");
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let p = |i: usize| f[i].trim().parse::<f64>().unwrap();
            (
                f[0].parse().unwrap(),
                Complex64::new(p(1), p(2)),
                Complex64::new(p(3), p(4)),
                Complex64::new(p(5), p(6)),
            )
        })
        .collect()
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}
