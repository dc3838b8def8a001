//! Exhaustive GLRT search, the reference the tree search is checked against.

use crate::detector::{check_dimensions, full_metric, reduce, DetectionResult};
use crate::linalg::ComplexMatrix;
use crate::model::Constellation;
use crate::{Error, Result};
use rayon::prelude::*;
use std::time::Instant;

/// Maximum number of data hypotheses the oracle will enumerate.
pub const MAX_HYPOTHESES: u128 = 1 << 20;

/// Number of data hypotheses `|Omega|^(M (T - M))`, saturating.
pub fn hypothesis_count(constellation: &Constellation, m: usize, t: usize) -> u128 {
    let exp = (m * (t - m)) as u32;
    (constellation.len() as u128).saturating_pow(exp)
}

/// Evaluates the full metric of every data hypothesis and returns the
/// minimizer.
///
/// Hypotheses are numbered in the same order the tree search visits leaves
/// (slot `M + 1` most significant, symbol vectors in lexicographic order),
/// and ties go to the lowest number.
pub fn exhaustive_detect(
    x: &ComplexMatrix,
    pilots: &ComplexMatrix,
    constellation: &Constellation,
) -> Result<DetectionResult> {
    let start = Instant::now();
    let (m, t) = check_dimensions(x, pilots)?;
    let size = hypothesis_count(constellation, m, t);
    if size > MAX_HYPOTHESES {
        return Err(Error::SearchSpaceTooLarge {
            size,
            cap: MAX_HYPOTHESES,
        });
    }
    let size = size as u64;
    let reduced = reduce(x)?;
    let xi = constellation.product_points(m);
    let children = (xi.len() / m) as u64;

    let hypothesis = |h: u64| {
        let mut s = ComplexMatrix::zeros(m, t);
        for j in 0..m {
            for k in 0..m {
                s[(k, j)] = pilots[(k, j)];
            }
        }
        let mut rem = h;
        for j in (m..t).rev() {
            let c = (rem % children) as usize;
            rem /= children;
            for k in 0..m {
                s[(k, j)] = xi[c * m + k];
            }
        }
        s
    };

    let metrics: Vec<f64> = (0..size)
        .into_par_iter()
        .map(|h| full_metric(&reduced, &hypothesis(h)))
        .collect::<Result<_>>()?;
    let (best, best_metric) =
        metrics
            .iter()
            .enumerate()
            .fold((0usize, f64::INFINITY), |(bi, bm), (i, &mm)| {
                if mm < bm {
                    (i, mm)
                } else {
                    (bi, bm)
                }
            });
    debug_assert!(metrics.iter().all(|&mm| best_metric <= mm));

    DetectionResult::plain(
        x,
        hypothesis(best as u64),
        best_metric,
        size,
        start.elapsed(),
    )
}
