//! Cylinder and Airy functions used by the solvers.
//!
//! Accuracy targets: relative error of order `1e-13` for `J_n`, `H^(1)_n` with
//! `|z| <= 1e3` and `|Im z| <= |Re z|`; Wronskian residual below `1e-10` in
//! that wedge for orders up to a few hundred.

mod airy;
mod bessel;
mod scaled;

pub use airy::{airy_ai_neg, airy_zeros, AiryZeroTable, AI0, AIP0, MAX_ZEROS};
pub use bessel::{
    bessel_j, bessel_j_scaled, cylinder_eval, cylinder_sequences, hankel1, hankel1_scaled,
    j_sequence, y_sequence, CylinderEval, CylinderTable, MAX_ARG, MAX_ORDER,
};
pub use scaled::{ldexp, Scaled};
