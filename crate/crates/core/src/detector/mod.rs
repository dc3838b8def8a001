//! GLRT detection by depth-first branch-and-bound over the signal tree.
//!
//! For a candidate symbol matrix `S` (`M x T`) the channel is eliminated by
//! least squares, leaving the residual energy of `X` outside the row space
//! of `S`. Shifting the Gram matrix `X^H X` by its smallest eigenvalue and
//! factoring `X^H X - rho_min I = L L^H` (with `L` lower triangular) turns
//! the objective into `||L - P_S L||_F^2`, where `P_S` projects onto the
//! column space of `S^H`. Restricted to the first `i` rows this gives a
//! partial metric that never decreases along a root-to-leaf path, which is
//! what lets the search prune.

mod state;

pub use state::{extend_state, metrics_agree, SearchState};

use crate::linalg::{
    hermitian_min_eigenvalue, pseudoinverse, semidefinite_cholesky_with_tol, ComplexMatrix,
    RANK_TOL,
};
use crate::model::Constellation;
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

/// Negative Cholesky pivots of the shifted Gram matrix down to
/// `-PIVOT_CLAMP * tr(X^H X)` are clamped to zero.
const PIVOT_CLAMP: f64 = 1e-8;

/// Largest product constellation `|Omega|^M` the search will enumerate.
pub const MAX_CHILDREN: usize = 1 << 20;

/// Channel-free form of one received block.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    /// Lower-triangular `L`, `T x T`, with `L L^H = gram - rho_min I`.
    pub r_lower: ComplexMatrix,
    /// `X^H X`, `T x T`.
    pub gram: ComplexMatrix,
    pub rho_min: f64,
    pub n: usize,
    row_energy: Vec<f64>,
    prefix_energy: Vec<f64>,
}

impl ReducedProblem {
    pub fn t(&self) -> usize {
        self.r_lower.rows()
    }

    /// `||L_{i,:}||^2` for the 0-based row `i`.
    #[inline]
    pub fn row_energy(&self, i: usize) -> f64 {
        self.row_energy[i]
    }

    /// `||L_{1:i}||_F^2`, the energy of the first `i` rows.
    #[inline]
    pub fn prefix_energy(&self, i: usize) -> f64 {
        self.prefix_energy[i]
    }

    pub fn total_energy(&self) -> f64 {
        self.prefix_energy[self.t()]
    }
}

/// Gram matrix, eigenvalue shift and semidefinite Cholesky factor of `x`.
pub fn reduce(x: &ComplexMatrix) -> Result<ReducedProblem> {
    x.check_finite()?;
    if x.cols() == 0 || x.rows() == 0 {
        return Err(Error::Config("received block must be non-empty".into()));
    }
    let gram = x.adjoint_mul(x)?;
    let rho_min = hermitian_min_eigenvalue(&gram)?.max(0.0);
    let shifted = gram.shift_diagonal(-rho_min)?;
    // Tolerances are taken against the unshifted energy: the shift can
    // cancel the matrix down to rounding noise. The shifted matrix is PSD by
    // construction, so negative pivots up to the clamp level are rounding.
    let energy = gram.trace()?.re;
    let r_lower =
        semidefinite_cholesky_with_tol(&shifted, RANK_TOL * energy, PIVOT_CLAMP * energy)?;
    let t = r_lower.rows();
    let row_energy: Vec<f64> = (0..t)
        .map(|i| r_lower.row(i).iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let mut prefix_energy = Vec::with_capacity(t + 1);
    prefix_energy.push(0.0);
    for e in &row_energy {
        prefix_energy.push(prefix_energy.last().unwrap() + e);
    }
    Ok(ReducedProblem {
        r_lower,
        gram,
        rho_min,
        n: x.rows(),
        row_energy,
        prefix_energy,
    })
}

/// Partial metric of `s_partial` (`M x i`) evaluated from its definition:
/// the energy of the first `i` rows of `L` left after projecting their
/// columns onto the column space of `s_partial^H`.
pub fn partial_metric_direct(reduced: &ReducedProblem, s_partial: &ComplexMatrix) -> Result<f64> {
    let i = s_partial.cols();
    if i == 0 || i > reduced.t() {
        return Err(Error::Config(format!(
            "partial sequence length {i} outside 1..={}",
            reduced.t()
        )));
    }
    let r = reduced.r_lower.row_block(0, i).col_block(0, i);
    let s = s_partial.adjoint();
    let projector = s.matmul(&pseudoinverse(&s))?;
    let residual = r.sub(&projector.matmul(&r)?)?;
    Ok(residual.frobenius_sq())
}

/// Full-length metric of a complete `M x T` symbol matrix.
pub fn full_metric(reduced: &ReducedProblem, s: &ComplexMatrix) -> Result<f64> {
    if s.cols() != reduced.t() {
        return Err(Error::Config(format!(
            "symbol matrix has {} slots, block has {}",
            s.cols(),
            reduced.t()
        )));
    }
    partial_metric_direct(reduced, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusMode {
    Paper,
    Warmstart,
}

impl FromStr for RadiusMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(Self::Paper),
            "warmstart" | "warm-start" => Ok(Self::Warmstart),
            other => Err(Error::Config(format!("unknown radius mode '{other}'"))),
        }
    }
}

impl fmt::Display for RadiusMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Paper => "paper",
            Self::Warmstart => "warmstart",
        })
    }
}

/// How the initial search radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusPolicy {
    /// `r^2 = c N`; the radius is doubled whenever no leaf is found.
    Paper { c: f64 },
    /// `r^2` just above the metric of a known feasible solution, so the
    /// first pass always finds a leaf.
    Warmstart { baseline_metric: f64 },
}

impl RadiusPolicy {
    pub fn initial_radius_sq(&self, n: usize) -> Result<f64> {
        match *self {
            Self::Paper { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::Config(format!(
                        "radius constant c must be positive, got {c}"
                    )));
                }
                Ok(c * n as f64)
            }
            Self::Warmstart { baseline_metric } => {
                if !(baseline_metric >= 0.0 && baseline_metric.is_finite()) {
                    return Err(Error::Config(format!(
                        "invalid baseline metric {baseline_metric}"
                    )));
                }
                Ok((1.0 + 1e-9) * baseline_metric)
            }
        }
    }
}

/// Initial `r^2` for a radius mode.
pub fn radius_policy(
    mode: RadiusMode,
    c: f64,
    n: usize,
    baseline_metric: Option<f64>,
) -> Result<f64> {
    let policy = match mode {
        RadiusMode::Paper => RadiusPolicy::Paper { c },
        RadiusMode::Warmstart => RadiusPolicy::Warmstart {
            baseline_metric: baseline_metric
                .ok_or_else(|| Error::Config("warm-start radius needs a baseline metric".into()))?,
        },
    };
    policy.initial_radius_sq(n)
}

/// Output of a detector.
#[derive(Debug, Clone)]
pub struct DetectionResult {
    /// Detected `M x T` symbols, pilots included.
    pub s_detected: ComplexMatrix,
    /// `X S^+`, `N x M`.
    pub h_estimate: ComplexMatrix,
    /// Full metric of `s_detected`, clamped at zero.
    pub metric: f64,
    /// Metric evaluations over all passes, pilot layers included.
    pub visited_nodes: u64,
    /// Metric evaluations in the pass that produced the answer.
    pub visited_nodes_final_pass: u64,
    /// Per-layer visits over all passes (entry `i` is layer `i + 1`).
    pub layer_visits: Vec<u64>,
    /// Per-layer visits in the final pass.
    pub layer_visits_final_pass: Vec<u64>,
    /// Evaluated nodes whose metric was within the radius at the time,
    /// i.e. those that were not pruned.
    pub nodes_within_radius: u64,
    pub radius_restarts: u32,
    /// Leaves reached with a metric equal to the incumbent's.
    pub leaf_ties: u32,
    pub wall_time: Duration,
}

impl DetectionResult {
    /// Result of a detector without a tree search.
    pub(crate) fn plain(
        x: &ComplexMatrix,
        s_detected: ComplexMatrix,
        metric: f64,
        visited_nodes: u64,
        wall_time: Duration,
    ) -> Result<Self> {
        let h_estimate = x.matmul(&pseudoinverse(&s_detected))?;
        Ok(Self {
            s_detected,
            h_estimate,
            metric: metric.max(0.0),
            visited_nodes,
            visited_nodes_final_pass: visited_nodes,
            layer_visits: Vec::new(),
            layer_visits_final_pass: Vec::new(),
            nodes_within_radius: visited_nodes,
            radius_restarts: 0,
            leaf_ties: 0,
            wall_time,
        })
    }
}

/// Validates the pilot matrix against `x` and returns `(M, T)`.
pub(crate) fn check_dimensions(
    x: &ComplexMatrix,
    pilots: &ComplexMatrix,
) -> Result<(usize, usize)> {
    x.check_finite()?;
    pilots.check_finite()?;
    let m = pilots.rows();
    let t = x.cols();
    if m == 0 || pilots.cols() != m {
        return Err(Error::Config(format!(
            "pilot matrix must be square and non-empty, got {}x{}",
            pilots.rows(),
            pilots.cols()
        )));
    }
    if m >= t {
        return Err(Error::Config(format!(
            "users M = {m} must be smaller than the coherence time T = {t}"
        )));
    }
    Ok((m, t))
}

/// GLRT-optimal detection of the data symbols in `x`.
///
/// Layers `1..=M` are forced to the pilot columns; every deeper node has one
/// child per element of `Omega^M`, enumerated in lexicographic order. Nodes
/// whose partial metric exceeds `r^2` are pruned, every leaf reached shrinks
/// `r^2` to its metric, and a pass that reaches no leaf is restarted with
/// the radius doubled.
pub fn glrt_detect(
    x: &ComplexMatrix,
    pilots: &ComplexMatrix,
    constellation: &Constellation,
    policy: RadiusPolicy,
) -> Result<DetectionResult> {
    let start = Instant::now();
    let (m, t) = check_dimensions(x, pilots)?;
    let children = constellation
        .product_size(m)
        .filter(|&c| c <= MAX_CHILDREN)
        .ok_or(Error::SearchSpaceTooLarge {
            size: (constellation.len() as u128).saturating_pow(m as u32),
            cap: MAX_CHILDREN as u128,
        })?;
    let r2_initial = policy.initial_radius_sq(x.rows())?;
    let reduced = reduce(x)?;
    let xi = constellation.product_points(m);
    let pilot_cols: Vec<Vec<_>> = (0..m).map(|j| pilots.col(j)).collect();

    // Radius floor: admits leaves whose metric is zero up to rounding.
    let floor = 1e-10 * reduced.total_energy() + f64::MIN_POSITIVE;
    let mut r2 = r2_initial.max(floor);

    let mut state = SearchState::new(&reduced, m);
    let mut restarts = 0u32;
    let mut leaf_ties = 0u32;
    let mut within = 0u64;
    let mut next_child = vec![0usize; t + 1];
    let mut path = vec![0usize; t + 1];
    let mut incumbent: Option<(f64, Vec<usize>)> = None;
    let mut pass_start_visits;
    let mut pass_start_layers = vec![0u64; t];

    loop {
        state.reset();
        pass_start_visits = state.visited();
        pass_start_layers.copy_from_slice(state.layer_visits());

        let mut pilots_ok = true;
        for col in &pilot_cols {
            if state.extend(&reduced, col) > r2 {
                pilots_ok = false;
                break;
            }
            within += 1;
        }

        if pilots_ok {
            next_child[m] = 0;
            loop {
                let d = state.depth();
                if next_child[d] == children {
                    if d == m {
                        break;
                    }
                    state.retreat();
                    continue;
                }
                let c = next_child[d];
                next_child[d] += 1;
                let metric = state.extend(&reduced, &xi[c * m..(c + 1) * m]);
                path[d + 1] = c;
                if metric > r2 {
                    state.retreat();
                    continue;
                }
                within += 1;
                if d + 1 == t {
                    match &incumbent {
                        Some((best, _)) if metric >= *best => leaf_ties += 1,
                        _ => {
                            incumbent = Some((metric, path[m + 1..=t].to_vec()));
                            r2 = metric;
                        }
                    }
                    state.retreat();
                    continue;
                }
                next_child[d + 1] = 0;
            }
        }

        if incumbent.is_some() {
            break;
        }
        restarts += 1;
        r2 = (4.0 * r2).max(floor);
        log::debug!("no leaf within radius, restarting with r^2 = {r2:.4e}");
    }

    let (_, data_path) = incumbent.expect("search ended with a leaf");
    let mut s_detected = ComplexMatrix::zeros(m, t);
    for (j, col) in pilot_cols.iter().enumerate() {
        for k in 0..m {
            s_detected[(k, j)] = col[k];
        }
    }
    for (offset, &c) in data_path.iter().enumerate() {
        for k in 0..m {
            s_detected[(k, m + offset)] = xi[c * m + k];
        }
    }
    let metric = full_metric(&reduced, &s_detected)?;
    debug_assert!(metric >= -1e-6);
    let layer_visits = state.layer_visits().to_vec();
    let layer_visits_final_pass = layer_visits
        .iter()
        .zip(&pass_start_layers)
        .map(|(total, before)| total - before)
        .collect();
    let h_estimate = x.matmul(&pseudoinverse(&s_detected))?;
    Ok(DetectionResult {
        s_detected,
        h_estimate,
        metric: metric.max(0.0),
        visited_nodes: state.visited(),
        visited_nodes_final_pass: state.visited() - pass_start_visits,
        layer_visits,
        layer_visits_final_pass,
        nodes_within_radius: within,
        radius_restarts: restarts,
        leaf_ties,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests;
