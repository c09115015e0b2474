//! Gauss quadrature for expectations over the truncated-normal flight speed.
//!
//! The rule is the Gaussian rule of the normal distribution restricted to
//! `[truncation_floor, inf)`. When the floor sits far in the lower tail this
//! coincides with Gauss–Hermite nodes mapped through `mu + sqrt(2) sigma x`;
//! near the floor it keeps every node inside the support without the mass
//! pile-up that clamping mapped nodes would create.
//!
//! Construction: the truncated density is discretized with composite Simpson
//! weights, the three-term recurrence is recovered by the Stieltjes
//! procedure, and the nodes/weights come from the eigen-decomposition of the
//! resulting Jacobi matrix (Golub–Welsch).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::DpError;
use crate::instance::SpeedModel;

pub const DEFAULT_NODE_COUNT: usize = 8;
pub const MAX_NODE_COUNT: usize = 64;

/// Discretization points for the Stieltjes procedure (odd, for Simpson).
const DISCRETIZATION_POINTS: usize = 20_001;
/// Upper integration limit in standard deviations above the mean.
const UPPER_TAIL_SIGMAS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadNode {
    pub speed: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<QuadNode>,
    pub source: SpeedModel,
    pub node_count: usize,
}

impl QuadratureRule {
    /// `sum_q w_q f(v_q)`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().map(|n| n.weight * f(n.speed)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Builds a `node_count`-point rule for `speed`.
///
/// A zero-variance model always yields the single node `(mean, 1)`.
pub fn build_quadrature(speed: SpeedModel, node_count: usize) -> Result<QuadratureRule, DpError> {
    if node_count == 0 {
        return Err(DpError::InvalidQuadrature("node count must be >= 1".into()));
    }
    if node_count > MAX_NODE_COUNT {
        return Err(DpError::InvalidQuadrature(format!(
            "node count {node_count} exceeds {MAX_NODE_COUNT}"
        )));
    }
    if !(speed.mean.is_finite() && speed.mean > 0.0 && speed.variance >= 0.0) {
        return Err(DpError::InvalidQuadrature(format!("bad speed model {speed:?}")));
    }
    if speed.is_deterministic() {
        return Ok(QuadratureRule {
            nodes: vec![QuadNode {
                speed: speed.mean,
                weight: 1.0,
            }],
            source: speed,
            node_count: 1,
        });
    }

    let (xs, ws) = discretize(speed);
    let (alpha, beta) = stieltjes(&xs, &ws, node_count);
    let mut nodes = golub_welsch(&alpha, &beta);

    let floor = speed.truncation_floor;
    for node in &mut nodes {
        node.speed = node.speed.max(floor);
    }
    nodes.retain(|n| n.weight > 0.0);
    nodes.sort_by(|a, b| a.speed.total_cmp(&b.speed));
    let total: f64 = nodes.iter().map(|n| n.weight).sum();
    for node in &mut nodes {
        node.weight /= total;
    }
    Ok(QuadratureRule {
        node_count: nodes.len(),
        nodes,
        source: speed,
    })
}

/// Simpson discretization of the truncated normal density; weights sum to 1.
fn discretize(speed: SpeedModel) -> (Vec<f64>, Vec<f64>) {
    let sigma = speed.std_dev();
    let lo = speed.truncation_floor.max(speed.mean - UPPER_TAIL_SIGMAS * sigma);
    let hi = speed.mean + UPPER_TAIL_SIGMAS * sigma;
    let n = DISCRETIZATION_POINTS;
    let h = (hi - lo) / (n - 1) as f64;
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for i in 0..n {
        let x = lo + h * i as f64;
        let simpson = if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let z = (x - speed.mean) / sigma;
        xs.push(x);
        ws.push(simpson * (-0.5 * z * z).exp());
    }
    let total: f64 = ws.iter().sum();
    ws.iter_mut().for_each(|w| *w /= total);
    (xs, ws)
}

/// Recurrence coefficients of the orthonormal polynomials of a discrete measure.
fn stieltjes(xs: &[f64], ws: &[f64], count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut alpha = Vec::with_capacity(count);
    let mut beta = Vec::with_capacity(count.saturating_sub(1));
    let mut prev = vec![0.0; xs.len()];
    let mut cur = vec![1.0; xs.len()];
    let mut prev_norm = 0.0;
    for k in 0..count {
        let a: f64 = xs.iter().zip(ws).zip(&cur).map(|((x, w), p)| w * x * p * p).sum();
        alpha.push(a);
        if k + 1 == count {
            break;
        }
        let next: Vec<f64> = xs
            .iter()
            .zip(&cur)
            .zip(&prev)
            .map(|((x, p), q)| (x - a) * p - prev_norm * q)
            .collect();
        let b: f64 = ws.iter().zip(&next).map(|(w, p)| w * p * p).sum::<f64>().sqrt();
        beta.push(b);
        prev = cur;
        cur = next.into_iter().map(|p| p / b).collect();
        prev_norm = b;
    }
    (alpha, beta)
}

fn golub_welsch(alpha: &[f64], beta: &[f64]) -> Vec<QuadNode> {
    let n = alpha.len();
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jacobi[(i, i)] = alpha[i];
        if i + 1 < n {
            jacobi[(i, i + 1)] = beta[i];
            jacobi[(i + 1, i)] = beta[i];
        }
    }
    let eigen = jacobi.symmetric_eigen();
    (0..n)
        .map(|i| QuadNode {
            speed: eigen.eigenvalues[i],
            weight: eigen.eigenvectors[(0, i)].powi(2),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_model_gives_one_node() {
        let rule = build_quadrature(SpeedModel::new(1.0, 0.0), 1).unwrap();
        assert_eq!(
            rule.nodes,
            vec![QuadNode {
                speed: 1.0,
                weight: 1.0
            }]
        );
        let rule = build_quadrature(SpeedModel::new(1.0, 0.0), 8).unwrap();
        assert_eq!(rule.nodes.len(), 1);
    }

    #[test]
    fn rejects_zero_nodes() {
        assert!(build_quadrature(SpeedModel::new(1.0, 0.1), 0).is_err());
        assert!(build_quadrature(SpeedModel::new(1.0, 0.1), 65).is_err());
    }

    #[test]
    fn weights_sum_to_one_and_nodes_respect_floor() {
        for &var in &[0.01, 0.05, 0.1, 0.2, 0.5] {
            for q in [1, 2, 3, 5, 8, 16] {
                let model = SpeedModel::new(1.0, var);
                let rule = build_quadrature(model, q).unwrap();
                let total: f64 = rule.nodes.iter().map(|n| n.weight).sum();
                assert!((total - 1.0).abs() <= 1e-12, "var={var} q={q} total={total}");
                assert!(rule.nodes.iter().all(|n| n.weight > 0.0));
                assert!(rule.nodes.iter().all(|n| n.speed >= model.truncation_floor));
                assert_eq!(rule.node_count, rule.nodes.len());
            }
        }
    }

    #[test]
    fn matches_gauss_hermite_when_truncation_is_negligible() {
        // sigma = 0.1, floor 0.1 is nine sigmas below the mean.
        let model = SpeedModel::new(1.0, 0.01);
        let sigma = 0.1;
        let two = build_quadrature(model, 2).unwrap();
        assert!((two.nodes[0].speed - (1.0 - sigma)).abs() < 1e-7);
        assert!((two.nodes[1].speed - (1.0 + sigma)).abs() < 1e-7);
        assert!((two.nodes[0].weight - 0.5).abs() < 1e-7);

        let three = build_quadrature(model, 3).unwrap();
        let spread = 3f64.sqrt() * sigma;
        let expected = [(1.0 - spread, 1.0 / 6.0), (1.0, 2.0 / 3.0), (1.0 + spread, 1.0 / 6.0)];
        for (node, (speed, weight)) in three.nodes.iter().zip(expected) {
            assert!((node.speed - speed).abs() < 1e-7, "{node:?}");
            assert!((node.weight - weight).abs() < 1e-7, "{node:?}");
        }
    }

    #[test]
    fn integrates_low_moments_of_the_untruncated_normal() {
        let model = SpeedModel::new(1.0, 0.02);
        let rule = build_quadrature(model, 8).unwrap();
        let mean = rule.expect(|v| v);
        let second = rule.expect(|v| (v - 1.0).powi(2));
        assert!((mean - 1.0).abs() < 1e-9);
        assert!((second - 0.02).abs() < 1e-9);
    }
}
