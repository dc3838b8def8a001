use super::{partial_metric_direct, ReducedProblem};
use crate::linalg::{pinv_rank1_update_in_place, ComplexMatrix};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Accumulators for one tree layer.
///
/// With `r` the conjugated `i`-th row of `R^*` and `s` the symbol vector
/// placed in slot `i`, the layer keeps
/// `a = A_i = sum r s^H` (`T x M`, only the first `i` rows nonzero),
/// `g = A_i^H A_i`, `b = B_i = sum s s^H` and `b_pinv = B_i^+`,
/// so the partial metric is `||R^*_{1:i}||^2 - tr(B_i^+ A_i^H A_i)`.
#[derive(Debug, Clone)]
struct Frame {
    a: Vec<Complex64>,
    g: Vec<Complex64>,
    b: Vec<Complex64>,
    b_pinv: Vec<Complex64>,
    symbols: Vec<Complex64>,
    metric: f64,
    /// `A_i^H r_{i+1}`, shared by every child of this node.
    u_next: Vec<Complex64>,
    u_valid: bool,
    /// `a` is only built once the node gets children of its own.
    a_valid: bool,
}

impl Frame {
    fn new(t: usize, m: usize) -> Self {
        Self {
            a: vec![ZERO; t * m],
            g: vec![ZERO; m * m],
            b: vec![ZERO; m * m],
            b_pinv: vec![ZERO; m * m],
            symbols: vec![ZERO; m],
            metric: 0.0,
            u_next: vec![ZERO; m],
            u_valid: false,
            a_valid: true,
        }
    }
}

/// Cursor of the depth-first search over the signal tree.
///
/// Layer `i` holds the partial symbol matrix `S_{1:i}` (its first `i`
/// columns). Each layer's accumulators live in their own frame, so moving
/// back up the tree is just a pointer decrement.
#[derive(Debug, Clone)]
pub struct SearchState {
    m: usize,
    t: usize,
    depth: usize,
    frames: Vec<Frame>,
    work: Vec<Complex64>,
    visited: u64,
    layer_visits: Vec<u64>,
}

impl SearchState {
    pub fn new(reduced: &ReducedProblem, m: usize) -> Self {
        let t = reduced.t();
        Self {
            m,
            t,
            depth: 0,
            frames: (0..=t).map(|_| Frame::new(t, m)).collect(),
            work: vec![ZERO; 2 * m],
            visited: 0,
            layer_visits: vec![0; t],
        }
    }

    /// Back to the root. Visit counters are kept.
    pub fn reset(&mut self) {
        self.depth = 0;
        self.frames[0].u_valid = false;
    }

    /// Current layer `i` (0 at the root).
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn users(&self) -> usize {
        self.m
    }

    pub fn coherence(&self) -> usize {
        self.t
    }

    /// Partial metric of the current node.
    pub fn metric(&self) -> f64 {
        self.frames[self.depth].metric
    }

    /// Metric evaluations so far.
    pub fn visited(&self) -> u64 {
        self.visited
    }

    /// Metric evaluations per layer; entry `i` counts layer `i + 1`.
    pub fn layer_visits(&self) -> &[u64] {
        &self.layer_visits
    }

    /// `S_{1:i}` as an `M x i` matrix.
    pub fn partial_symbols(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.m, self.depth, |k, j| self.frames[j + 1].symbols[k])
    }

    /// `B_i^+` of the current node.
    pub fn b_pinv(&self) -> ComplexMatrix {
        let m = self.m;
        ComplexMatrix::from_fn(m, m, |i, j| self.frames[self.depth].b_pinv[i * m + j])
    }

    /// Descends to the child obtained by placing `symbols` in the next slot
    /// and returns its partial metric. Counts one visited node.
    pub fn extend(&mut self, reduced: &ReducedProblem, symbols: &[Complex64]) -> f64 {
        let (m, t) = (self.m, self.t);
        let i = self.depth;
        assert!(i < t, "cannot extend a leaf");
        assert_eq!(symbols.len(), m);
        let l_row = &reduced.r_lower.row(i)[..=i];

        let (head, tail) = self.frames.split_at_mut(i + 1);
        let child = &mut tail[0];
        let (above, here) = head.split_at_mut(i);
        let parent = &mut here[0];

        if !parent.u_valid {
            if !parent.a_valid {
                // A_i = A_{i-1} + r_i s_i^H with r_i from row i - 1 of L.
                let grand = &above[i - 1];
                let prev_row = &reduced.r_lower.row(i - 1)[..i];
                parent.a[..(i - 1) * m].copy_from_slice(&grand.a[..(i - 1) * m]);
                parent.a[(i - 1) * m..i * m].fill(ZERO);
                for (j, l) in prev_row.iter().enumerate() {
                    let r = l.conj();
                    for (a, s) in parent.a[j * m..(j + 1) * m].iter_mut().zip(&parent.symbols) {
                        *a += r * s.conj();
                    }
                }
                parent.a_valid = true;
            }
            // r_j = conj(L[i, j]), nonzero for j <= i.
            for k in 0..m {
                let mut acc = ZERO;
                for (j, l) in l_row[..i].iter().enumerate() {
                    acc += parent.a[j * m + k].conj() * l.conj();
                }
                parent.u_next[k] = acc;
            }
            parent.u_valid = true;
        }
        let r_sq = reduced.row_energy(i);

        let u = &parent.u_next;
        for p in 0..m {
            for q in 0..m {
                let idx = p * m + q;
                let ss = symbols[p] * symbols[q].conj();
                child.g[idx] =
                    parent.g[idx] + u[p] * symbols[q].conj() + symbols[p] * u[q].conj() + ss * r_sq;
                child.b[idx] = parent.b[idx] + ss;
            }
        }
        pinv_rank1_update_in_place(
            m,
            &parent.b_pinv,
            &parent.b,
            symbols,
            &mut child.b_pinv,
            &mut self.work,
        );

        // tr(B^+ G), real for Hermitian arguments.
        let mut tr = 0.0;
        for p in 0..m {
            for q in 0..m {
                tr += (child.b_pinv[p * m + q] * child.g[q * m + p]).re;
            }
        }
        let metric = reduced.prefix_energy(i + 1) - tr;
        let parent_metric = parent.metric;
        child.metric = metric;
        child.symbols.copy_from_slice(symbols);
        child.u_valid = false;
        child.a_valid = false;

        self.depth = i + 1;
        self.visited += 1;
        self.layer_visits[i] += 1;

        if cfg!(debug_assertions) {
            let energy = reduced.prefix_energy(i + 1);
            debug_assert!(
                metric + 1e-9 * (1.0 + metric.abs()) + 1e-11 * energy >= parent_metric,
                "partial metric decreased: {parent_metric} -> {metric} at layer {}",
                i + 1
            );
            if self.visited.is_multiple_of(64) {
                let direct =
                    partial_metric_direct(reduced, &self.partial_symbols()).expect("dimensions");
                debug_assert!(
                    metrics_agree(metric, direct, energy, 1e-7),
                    "incremental metric {metric} vs direct {direct} at layer {}",
                    i + 1
                );
            }
        }
        metric
    }

    /// Moves back to the parent node.
    pub fn retreat(&mut self) {
        assert!(self.depth > 0, "already at the root");
        self.depth -= 1;
    }
}

/// Relative agreement of an incrementally computed metric with its direct
/// evaluation. Metrics that are tiny against the layer energy are compared
/// on the energy scale instead, where cancellation error lives.
pub fn metrics_agree(incremental: f64, direct: f64, energy: f64, rel_tol: f64) -> bool {
    let scale = direct.abs().max(1e-6 * energy);
    (incremental - direct).abs() <= rel_tol * scale
        || (incremental - direct).abs() <= f64::MIN_POSITIVE
}

/// Functional form of [`SearchState::extend`]: returns the child state and
/// leaves the parent untouched.
pub fn extend_state(
    state: &SearchState,
    reduced: &ReducedProblem,
    symbols: &[Complex64],
) -> SearchState {
    let mut child = state.clone();
    child.extend(reduced, symbols);
    child
}
