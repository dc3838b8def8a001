//! Pilot-aided linear MMSE receivers used as suboptimal references.
//!
//! Both assume a unit-variance i.i.d. channel prior and take the symbol
//! energy from the constellation.

use crate::detector::{check_dimensions, full_metric, reduce, DetectionResult};
use crate::linalg::ComplexMatrix;
use crate::model::Constellation;
use crate::Result;
use std::time::Instant;

/// Regularization used when the noise variance is zero.
const MIN_REGULARIZATION: f64 = 1e-12;

pub const DEFAULT_MAX_ITERS: usize = 5;

fn regularization(noise_var: f64) -> f64 {
    if noise_var > 0.0 {
        noise_var
    } else {
        MIN_REGULARIZATION
    }
}

/// LMMSE channel estimate from the columns of `x` observed under the known
/// symbols `s`: `X S^H (S S^H + sigma^2 I)^-1`.
pub fn estimate_channel(
    x: &ComplexMatrix,
    s: &ComplexMatrix,
    noise_var: f64,
) -> Result<ComplexMatrix> {
    let m = s.rows();
    if noise_var.is_infinite() {
        return Ok(ComplexMatrix::zeros(x.rows(), m));
    }
    let ssh = s
        .matmul(&s.adjoint())?
        .shift_diagonal(regularization(noise_var))?;
    Ok(x.matmul(&s.adjoint())?.matmul(&ssh.inverse()?)?)
}

/// Per-slot LMMSE equalization and slicing of slots `m..T`, keeping the
/// pilot columns of `pilots`.
pub fn detect_data(
    x: &ComplexMatrix,
    h: &ComplexMatrix,
    pilots: &ComplexMatrix,
    constellation: &Constellation,
    noise_var: f64,
) -> Result<ComplexMatrix> {
    let (m, t) = (pilots.rows(), x.cols());
    let mut s = ComplexMatrix::zeros(m, t);
    for j in 0..m {
        for k in 0..m {
            s[(k, j)] = pilots[(k, j)];
        }
    }
    let equalized = if noise_var.is_infinite() {
        ComplexMatrix::zeros(m, t)
    } else {
        let load = regularization(noise_var) / constellation.avg_energy();
        let gram = h.adjoint_mul(h)?.shift_diagonal(load)?;
        gram.inverse()?.matmul(&h.adjoint())?.matmul(x)?
    };
    for j in m..t {
        for k in 0..m {
            s[(k, j)] = constellation.points()[constellation.slice_index(equalized[(k, j)])];
        }
    }
    Ok(s)
}

/// Channel estimate from the pilot slots only, then one round of data
/// detection.
pub fn mmse_noniterative(
    x: &ComplexMatrix,
    pilots: &ComplexMatrix,
    constellation: &Constellation,
    noise_var: f64,
) -> Result<DetectionResult> {
    mmse_iterative(x, pilots, constellation, noise_var, 0)
}

/// Decision-directed refinement of [`mmse_noniterative`]: the channel is
/// re-estimated from the whole block using the current decisions, and the
/// data re-detected, until the decisions stop changing or `max_iters`
/// rounds have run.
pub fn mmse_iterative(
    x: &ComplexMatrix,
    pilots: &ComplexMatrix,
    constellation: &Constellation,
    noise_var: f64,
    max_iters: usize,
) -> Result<DetectionResult> {
    let start = Instant::now();
    let (m, _) = check_dimensions(x, pilots)?;
    let h = estimate_channel(&x.col_block(0, m), pilots, noise_var)?;
    let mut s = detect_data(x, &h, pilots, constellation, noise_var)?;
    for _ in 0..max_iters {
        let h = estimate_channel(x, &s, noise_var)?;
        let next = detect_data(x, &h, pilots, constellation, noise_var)?;
        if next == s {
            break;
        }
        s = next;
    }
    let metric = full_metric(&reduce(x)?, &s)?;
    DetectionResult::plain(x, s, metric, 0, start.elapsed())
}
