//! Gauss–Hermite quadrature for expectations over a Gaussian variable.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const START_ORDER: usize = 30;
pub const MAX_ORDER: usize = 512;
pub const TOLERANCE: f64 = 1e-9;

/// Nodes and weights for `∫ f(x) e^{-x²} dx ≈ Σ w_i f(x_i)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn compute_rule(order: usize) -> GaussHermite {
    // Golub–Welsch: eigen-decomposition of the Jacobi matrix of the
    // physicists' Hermite recurrence.
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for i in 1..order {
        let b = (i as f64 / 2.0).sqrt();
        jacobi[(i, i - 1)] = b;
        jacobi[(i - 1, i)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|j| (eig.eigenvalues[j], sqrt_pi * eig.eigenvectors[(0, j)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    GaussHermite {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Cached rule of the given order.
pub fn gauss_hermite(order: usize) -> Arc<GaussHermite> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&order) {
        return rule.clone();
    }
    let rule = Arc::new(compute_rule(order));
    cache.lock().unwrap().entry(order).or_insert(rule).clone()
}

/// Evaluates `E{f(δ)}` for `δ ~ N(0, σ²)`, where `f` returns a vector of
/// values. The order starts at [`START_ORDER`] and doubles until two
/// successive results agree to [`TOLERANCE`] (relative, max-norm).
pub fn gaussian_expectation<F>(sigma: f64, len: usize, f: F) -> Result<Vec<num_complex::Complex64>>
where
    F: Fn(f64, &mut [num_complex::Complex64]),
{
    use num_complex::Complex64;
    let eval = |order: usize| {
        let rule = gauss_hermite(order);
        let mut acc = vec![Complex64::new(0.0, 0.0); len];
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        let norm = std::f64::consts::PI.sqrt();
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            f(std::f64::consts::SQRT_2 * sigma * x, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b * (w / norm);
            }
        }
        acc
    };
    let mut order = START_ORDER;
    let mut prev = eval(order);
    while order * 2 <= MAX_ORDER {
        order *= 2;
        let next = eval(order);
        let scale = next.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let diff = next.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if diff <= TOLERANCE * scale.max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "Gauss-Hermite did not settle by order {order} (sigma = {sigma})"
    )))
}
