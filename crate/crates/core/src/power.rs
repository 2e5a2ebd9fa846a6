//! Uplink power control: fractional power control and max-min SINR bisection.

use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::simplex::find_feasible_point;
use crate::sinr::{optimal_lsfd_weights, sinr_lsfd_closed_form, SinrTerms};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerMethod {
    Full,
    Fractional,
    MaxMin,
}

#[derive(Debug, Clone)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    pub method: PowerMethod,
    /// Bisection steps (zero for the closed-form rules).
    pub iterations: usize,
    /// Lower end of the final bisection bracket.
    pub achieved: Option<f64>,
}

/// `η_k = (min_k' s_k' / s_k)^α`, `p_k = η_k p_max`, with `s_k = Σ_m tr(R^o_mk)`.
pub fn fractional_power_control(trace_sums: &[f64], alpha: f64, p_max: f64) -> Result<PowerAllocation> {
    if trace_sums.is_empty() {
        return Err(Error::Argument("no UEs".into()));
    }
    if trace_sums.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::Argument("trace sums must be positive".into()));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Argument(format!("FPC exponent must lie in [0, 1), got {alpha}")));
    }
    let min = trace_sums.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PowerAllocation {
        powers: trace_sums.iter().map(|s| p_max * (min / s).powf(alpha)).collect(),
        method: PowerMethod::Fractional,
        iterations: 0,
        achieved: None,
    })
}

/// Coefficients of the SINR of every UE as an affine ratio in the powers:
/// `SINR_k = p_k c_k / (Σ_i p_i b_ki − p_k j_k + e_k)`.
#[derive(Debug, Clone)]
pub struct SinrCoefficients {
    pub c: Vec<f64>,
    pub b: Vec<Vec<f64>>,
    pub j: Vec<f64>,
    pub e: Vec<f64>,
}

impl SinrCoefficients {
    pub fn new(terms: &SinrTerms, weights: &[CVec], sigma2: f64) -> Self {
        let (mc, kc) = (terms.num_aps(), terms.num_ues());
        let mut out = Self {
            c: vec![0.0; kc],
            b: vec![vec![0.0; kc]; kc],
            j: vec![0.0; kc],
            e: vec![0.0; kc],
        };
        for k in 0..kc {
            let a = &weights[k];
            let a2: Vec<f64> = a.iter().map(|x| x.norm_sqr()).collect();
            out.c[k] = terms.signal_gain(k, a);
            for i in 0..kc {
                out.b[k][i] = (0..mc).map(|m| a2[m] * terms.xi[k][i][m]).sum();
            }
            for i in terms.contaminators(k) {
                out.b[k][i] += terms.gamma(k, i, a);
            }
            out.j[k] = (0..mc).map(|m| a2[m] * terms.j[k][m] * terms.j[k][m]).sum();
            out.e[k] = (0..mc).map(|m| a2[m] * (terms.w[k][m] + sigma2 * terms.z[k][m])).sum();
        }
        out
    }

    pub fn sinr(&self, powers: &[f64]) -> Vec<f64> {
        (0..self.c.len())
            .map(|k| {
                let den: f64 =
                    self.b[k].iter().zip(powers).map(|(b, p)| b * p).sum::<f64>() - powers[k] * self.j[k] + self.e[k];
                powers[k] * self.c[k] / den
            })
            .collect()
    }

    /// A power vector with every SINR at least `t`, if one exists in `[0, p_max]^K`.
    pub fn feasible_powers(&self, t: f64, p_max: f64) -> Result<Option<Vec<f64>>> {
        let kc = self.c.len();
        let a: Vec<Vec<f64>> = (0..kc)
            .map(|k| {
                (0..kc)
                    .map(|i| {
                        let mut v = self.b[k][i];
                        if i == k {
                            v -= self.j[k] + self.c[k] / t;
                        }
                        v * p_max
                    })
                    .collect()
            })
            .collect();
        let b: Vec<f64> = self.e.iter().map(|e| -e).collect();
        Ok(find_feasible_point(&a, &b)?.map(|x| x.into_iter().map(|v| v * p_max).collect()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MaxMinOptions {
    /// Bisection stops when the bracket is narrower than this (linear SINR).
    pub epsilon: f64,
    /// Extra rounds that recompute optimal LSFD weights at the new powers
    /// and bisect again. Zero keeps the full-power weights.
    pub weight_updates: usize,
}

impl Default for MaxMinOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            weight_updates: 0,
        }
    }
}

/// Bisection on the common SINR target with fixed combining weights.
pub fn maxmin_power_control(
    terms: &SinrTerms,
    weights: &[CVec],
    p_max: f64,
    sigma2: f64,
    epsilon: f64,
) -> Result<PowerAllocation> {
    if !(epsilon > 0.0) {
        return Err(Error::Argument("bisection tolerance must be positive".into()));
    }
    let kc = terms.num_ues();
    let full = vec![p_max; kc];
    let coef = SinrCoefficients::new(terms, weights, sigma2);
    let full_sinr = sinr_lsfd_closed_form(terms, weights, &full, sigma2)?;
    let mut best = full;
    let mut lo = 0.0;
    let mut hi = 2.0 * full_sinr.iter().copied().fold(0.0, f64::max);
    if !(hi > 0.0) {
        return Err(Error::Infeasible("every UE has zero SINR at full power".into()));
    }
    let mut iterations = 0;
    while hi - lo > epsilon {
        let t = 0.5 * (lo + hi);
        iterations += 1;
        match coef.feasible_powers(t, p_max)? {
            Some(p) => {
                lo = t;
                best = p;
            }
            None => hi = t,
        }
    }
    Ok(PowerAllocation {
        powers: best,
        method: PowerMethod::MaxMin,
        iterations,
        achieved: Some(lo),
    })
}

/// Max-min with weights chosen by LSFD at full power, optionally followed by
/// alternating weight updates.
pub fn maxmin_lsfd(
    terms: &SinrTerms,
    p_max: f64,
    sigma2: f64,
    options: MaxMinOptions,
) -> Result<(PowerAllocation, Vec<CVec>)> {
    let mut weights = optimal_lsfd_weights(terms, &vec![p_max; terms.num_ues()], sigma2)?;
    let mut alloc = maxmin_power_control(terms, &weights, p_max, sigma2, options.epsilon)?;
    for _ in 0..options.weight_updates {
        weights = optimal_lsfd_weights(terms, &alloc.powers, sigma2)?;
        let next = maxmin_power_control(terms, &weights, p_max, sigma2, options.epsilon)?;
        alloc.iterations += next.iterations;
        alloc.powers = next.powers;
        alloc.achieved = next.achieved;
    }
    Ok((alloc, weights))
}

/// Upper bound on bisection steps for a bracket `[0, t_max]`.
pub fn bisection_step_bound(t_max: f64, epsilon: f64) -> usize {
    (t_max / epsilon).log2().ceil().max(0.0) as usize
}
