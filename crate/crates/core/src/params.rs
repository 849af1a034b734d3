//! Coefficients, wavenumber and geometry of the disc transmission problem.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radius of the penetrable disc.
pub const DISC_RADIUS: f64 = 1.0;
/// Diameter of the disc.
pub const DIAM: f64 = 2.0;
/// Star-shapedness parameter: the unit disc is star-shaped with respect to
/// the ball of radius `GAMMA * DIAM` about the origin.
pub const GAMMA: f64 = 0.5;
/// Spatial dimension of the solver.
pub const DIM: usize = 2;

/// Problem data for
///
/// ```text
/// a_i Δu_i + k² n_i u_i = f_i   in r < 1
/// a_o Δu_o + k² n_o u_o = 0     in r > 1
/// u_o = A_D u_i + g_D,  a_o ∂_r u_o = A_N a_i ∂_r u_i + g_N   on r = 1
/// ```
///
/// with `u_o` outgoing. `r_report` is the radius `R` of the ball on which
/// exterior norms are measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n_i: f64,
    pub n_o: f64,
    pub a_i: f64,
    pub a_o: f64,
    pub a_d: f64,
    pub a_n: f64,
    pub k: Complex64,
    pub r_report: f64,
}

impl Params {
    /// All six coefficients equal to one, `R = 2`.
    pub fn unit(k: f64) -> Self {
        Params {
            n_i: 1.0,
            n_o: 1.0,
            a_i: 1.0,
            a_o: 1.0,
            a_d: 1.0,
            a_n: 1.0,
            k: Complex64::new(k, 0.0),
            r_report: 2.0,
        }
    }

    /// The family with `n_o = a_i = a_o = A_D = 1` used for resonance studies.
    pub fn contrast(n_i: f64, a_n: f64, k: f64) -> Self {
        Params {
            n_i,
            a_n,
            ..Params::unit(k)
        }
    }

    pub fn with_k(self, k: Complex64) -> Self {
        Params { k, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let coeffs = [
            ("n_i", self.n_i),
            ("n_o", self.n_o),
            ("a_i", self.a_i),
            ("a_o", self.a_o),
            ("A_D", self.a_d),
            ("A_N", self.a_n),
        ];
        for (name, v) in coeffs {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.k.re.is_finite() && self.k.im.is_finite()) || self.k.norm() == 0.0 {
            return Err(Error::Domain(format!(
                "k must be finite and nonzero, got {}",
                self.k
            )));
        }
        if !(self.r_report.is_finite() && self.r_report > DISC_RADIUS) {
            return Err(Error::Domain(format!(
                "R must exceed the disc radius, got {}",
                self.r_report
            )));
        }
        Ok(())
    }

    /// Validation plus `Im k >= 0`, as required for a well-posed solve.
    pub fn validate_for_solve(&self) -> Result<()> {
        self.validate()?;
        if self.k.im < 0.0 {
            return Err(Error::Domain(format!(
                "solves need Im k >= 0, got {}",
                self.k
            )));
        }
        Ok(())
    }

    /// Validation plus real positive `k`.
    pub fn validate_real_k(&self) -> Result<f64> {
        self.validate()?;
        if self.k.im != 0.0 || self.k.re <= 0.0 {
            return Err(Error::Domain(format!(
                "k must be real and positive, got {}",
                self.k
            )));
        }
        Ok(self.k.re)
    }

    /// Interior wavenumber `k sqrt(n_i / a_i)`.
    pub fn kappa_i(&self) -> Complex64 {
        self.k * (self.n_i / self.a_i).sqrt()
    }

    /// Exterior wavenumber `k sqrt(n_o / a_o)`.
    pub fn kappa_o(&self) -> Complex64 {
        self.k * (self.n_o / self.a_o).sqrt()
    }
}
