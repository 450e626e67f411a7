//! Particle-based rigid-body simulation with position-based dynamics, a
//! momentum-restoring variant, and an analytical benchmark suite.
//!
//! Bodies are sets of equal spheres held rigid by shape matching. The solver
//! runs in `f32` or `f64` via the [`math::Real`] trait; metrics and reference
//! solutions are always evaluated in `f64`.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod benchmark;
pub mod body;
pub mod exec;
pub mod geometry;
pub mod math;
pub mod solver;

pub use exec::Execution;

/// Formats a float with nine significant digits, as used in every CSV output.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}
