//! Monte-Carlo estimation of every expectation in the UatF SINR and of the
//! channel and pilot-noise covariances.
//!
//! Trials are processed in fixed-size chunks. Chunk `c` draws from its own
//! substream and the per-chunk moments are merged in chunk order, so results
//! are bit-identical for any number of worker threads.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{despread, mmse_estimate, pilot_book, pilot_mean};
use crate::linalg::{c, standard_cn, CMat, CVec};
use crate::rng::{purpose, substream, SimRng};
use crate::sinr::{optimal_weights_from_moments, uatf_sinr, UatfMoments};
use crate::system::SystemModel;

pub const CHUNK: usize = 250;
pub const MIN_TRIALS: usize = 2;

/// Running mean and sum of squared deviations, per real component.
#[derive(Debug, Clone)]
struct Moments {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1.0;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / self.count;
            *s += d * (v - *m);
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0.0 {
            return;
        }
        let n = self.count + other.count;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * other.count / n;
            self.m2[i] += other.m2[i] + d * d * self.count * other.count / n;
        }
        self.count = n;
    }
}

/// Sample means of a complex vector-valued statistic with per-component
/// standard errors (real and imaginary parts separately).
#[derive(Debug, Clone)]
pub struct OracleEstimate {
    pub mean: Vec<Complex64>,
    pub std_error: Vec<Complex64>,
    pub trials: usize,
}

impl OracleEstimate {
    /// Whether `value` lies within `sigmas` standard errors of entry `idx`,
    /// separately in the real and imaginary parts. A tiny absolute slack
    /// covers components that are deterministic (zero standard error).
    pub fn agrees(&self, idx: usize, value: Complex64, sigmas: f64) -> bool {
        let (m, s) = (self.mean[idx], self.std_error[idx]);
        let slack = 1e-9 * m.norm().max(value.norm());
        (m.re - value.re).abs() <= sigmas * s.re + slack && (m.im - value.im).abs() <= sigmas * s.im + slack
    }

    /// Deviation in units of standard error (worst component).
    pub fn z_score(&self, idx: usize, value: Complex64) -> f64 {
        let (m, s) = (self.mean[idx], self.std_error[idx]);
        let f = |d: f64, s: f64| {
            if s > 0.0 {
                d.abs() / s
            } else if d.abs() <= 1e-9 * value.norm().max(m.norm()) {
                0.0
            } else {
                f64::INFINITY
            }
        };
        f(m.re - value.re, s.re).max(f(m.im - value.im, s.im))
    }
}

/// Averages `sample` over `trials` draws. `sample` fills a buffer of `dim`
/// complex values from the given stream.
pub fn monte_carlo<F>(trials: usize, seed: u64, tag: u64, dim: usize, sample: F) -> Result<OracleEstimate>
where
    F: Fn(&mut SimRng, &mut [Complex64]) + Sync,
{
    if trials < MIN_TRIALS {
        return Err(Error::Argument(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = substream(seed, &[purpose::ORACLE, tag, ci as u64]);
            let count = CHUNK.min(trials - ci * CHUNK);
            let mut acc = Moments::new(2 * dim);
            let mut buf = vec![c(0.0, 0.0); dim];
            let mut flat = vec![0.0; 2 * dim];
            for _ in 0..count {
                sample(&mut rng, &mut buf);
                for (j, z) in buf.iter().enumerate() {
                    flat[2 * j] = z.re;
                    flat[2 * j + 1] = z.im;
                }
                acc.push(&flat);
            }
            acc
        })
        .collect();
    let mut total = Moments::new(2 * dim);
    for p in &parts {
        total.merge(p);
    }
    let n = total.count;
    let se = |m2: f64| (m2 / (n - 1.0) / n).sqrt();
    Ok(OracleEstimate {
        mean: (0..dim).map(|j| c(total.mean[2 * j], total.mean[2 * j + 1])).collect(),
        std_error: (0..dim)
            .map(|j| c(se(total.m2[2 * j]), se(total.m2[2 * j + 1])))
            .collect(),
        trials,
    })
}

/// Row-major index of an `L×L` outer product entry.
fn outer_into(x: &CVec, out: &mut [Complex64]) {
    let l = x.len();
    for a in 0..l {
        for b in 0..l {
            out[a * l + b] = x[a] * x[b].conj();
        }
    }
}

/// Sample second moment of `õ_mk = o_mk − ō_mk e^{jθ_k}`, row-major L×L.
pub fn estimate_channel_covariance(
    model: &SystemModel,
    m: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    let sampler = model.sampler()?;
    let l = model.config.antennas_per_ap;
    let o_bar = model.channels.o_bar(m, k).clone();
    monte_carlo(trials, seed, 10, l * l, |rng, out| {
        let r = sampler.sample(rng);
        let dev = &r.o[m][k] - &o_bar * crate::linalg::cis(r.theta[k]);
        outer_into(&dev, out);
    })
}

/// Sample second moment of the de-spread pilot disturbance
/// `(H_mᴴ Φ N + N_m) φ_k*`, row-major L×L.
pub fn estimate_pilot_noise_covariance(
    model: &SystemModel,
    m: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    let sampler = model.sampler()?;
    let emi = model.emi_sampler()?;
    let tau = model.config.pilot_symbols;
    let book = pilot_book(tau);
    let pilot = model.estimation.assignment.pilot[k];
    let l = model.config.antennas_per_ap;
    let noise_std = model.sigma2.sqrt();
    monte_carlo(trials, seed, 11, l * l, |rng, out| {
        let r = sampler.sample(rng);
        let big_n = emi.sample_block(tau, rng);
        let mut noise = CMat::zeros(l, tau);
        for t in 0..tau {
            noise.set_column(t, &(standard_cn(l, rng) * c(noise_std, 0.0)));
        }
        let received = r.h[m].adjoint() * sampler.phi() * big_n + noise;
        outer_into(&despread(&received, &book, pilot), out);
    })
}

/// Oracle estimates of `E{u_ki}`, `T_ki`, `D_k` and `U_k` for all UEs.
#[derive(Debug, Clone)]
pub struct UatfEstimates {
    pub estimate: OracleEstimate,
    m: usize,
    k: usize,
}

impl UatfEstimates {
    pub fn idx_mean(&self, k: usize, i: usize, m: usize) -> usize {
        (k * self.k + i) * self.m + m
    }

    pub fn idx_t(&self, k: usize, i: usize, m: usize, n: usize) -> usize {
        self.k * self.k * self.m + ((k * self.k + i) * self.m + m) * self.m + n
    }

    pub fn idx_d(&self, k: usize, m: usize) -> usize {
        self.k * self.k * self.m * (1 + self.m) + k * self.m + m
    }

    pub fn idx_u(&self, k: usize, m: usize) -> usize {
        self.idx_d(k, m) + self.k * self.m
    }

    pub fn num_aps(&self) -> usize {
        self.m
    }

    pub fn num_ues(&self) -> usize {
        self.k
    }

    /// Sample-mean version of the UatF moments of UE `k`.
    pub fn moments(&self, k: usize) -> UatfMoments {
        let e = &self.estimate.mean;
        let m = self.m;
        UatfMoments {
            mean_kk: CVec::from_fn(m, |n, _| e[self.idx_mean(k, k, n)]),
            t: (0..self.k)
                .map(|i| CMat::from_fn(m, m, |a, b| e[self.idx_t(k, i, a, b)]))
                .collect(),
            d: CMat::from_diagonal(&CVec::from_fn(m, |n, _| e[self.idx_d(k, n)])),
            u: CMat::from_diagonal(&CVec::from_fn(m, |n, _| e[self.idx_u(k, n)])),
        }
    }
}

/// Simulates pilot training, MMSE estimation, MR combining and data-phase
/// EMI, and averages `u_ki[m] = v_mkᴴ o_mi` and friends.
pub fn estimate_uatf_terms(model: &SystemModel, trials: usize, seed: u64) -> Result<UatfEstimates> {
    let sampler = model.sampler()?;
    let emi = model.emi_sampler()?;
    let cfg = &model.config;
    let (mc, kc, l, tau) = (cfg.num_aps, cfg.num_ues, cfg.antennas_per_ap, cfg.pilot_symbols);
    let book = pilot_book(tau);
    let assignment = &model.estimation.assignment;
    let p_hat = &model.estimation.pilot_powers;
    let noise_std = model.sigma2.sqrt();
    let phi = sampler.phi().clone();
    let layout = UatfEstimates {
        estimate: OracleEstimate {
            mean: vec![],
            std_error: vec![],
            trials: 0,
        },
        m: mc,
        k: kc,
    };
    let dim = kc * kc * mc * (1 + mc) + 2 * kc * mc;
    let estimate = monte_carlo(trials, seed, 12, dim, |rng, out| {
        let r = sampler.sample(rng);
        let pilot_emi = emi.sample_block(tau, rng);
        let data_emi = emi.sample(rng);
        let mut v = vec![vec![CVec::zeros(l); kc]; mc];
        let mut leak = vec![CVec::zeros(l); mc];
        for m in 0..mc {
            let cascade = r.h[m].adjoint() * &phi;
            let mut received = &cascade * &pilot_emi;
            for t in 0..tau {
                let mut col = received.column_mut(t);
                col += standard_cn(l, rng) * c(noise_std, 0.0);
            }
            for (i, o_mi) in r.o[m].iter().enumerate() {
                let seq = book.column(assignment.pilot[i]);
                received += o_mi * seq.transpose() * c(p_hat[i].sqrt(), 0.0);
            }
            for k in 0..kc {
                let y = despread(&received, &book, assignment.pilot[k]);
                let y_bar = pilot_mean(&model.channels, assignment, p_hat, &r.theta, m, k);
                v[m][k] = mmse_estimate(
                    model.channels.o_bar(m, k),
                    r.theta[k],
                    p_hat[k],
                    model.estimation.get(m, k),
                    &(y - y_bar),
                );
            }
            leak[m] = &cascade * &data_emi;
        }
        let mut u = vec![c(0.0, 0.0); mc];
        for k in 0..kc {
            for i in 0..kc {
                for m in 0..mc {
                    u[m] = v[m][k].dotc(&r.o[m][i]);
                    out[layout.idx_mean(k, i, m)] = u[m];
                }
                for a in 0..mc {
                    for b in 0..mc {
                        out[layout.idx_t(k, i, a, b)] = u[a] * u[b].conj();
                    }
                }
            }
            for m in 0..mc {
                out[layout.idx_d(k, m)] = c(v[m][k].norm_squared(), 0.0);
                out[layout.idx_u(k, m)] = c(v[m][k].dotc(&leak[m]).norm_sqr(), 0.0);
            }
        }
    })?;
    Ok(UatfEstimates { estimate, ..layout })
}

/// Plugs sample moments into the UatF SINR.
pub fn sinr_from_estimates(est: &UatfEstimates, weights: &[CVec], powers: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    (0..est.num_ues())
        .map(|k| uatf_sinr(&est.moments(k), &weights[k], powers, k, sigma2))
        .collect()
}

/// LSFD weights computed from sample moments.
pub fn optimal_weights_from_estimates(est: &UatfEstimates, powers: &[f64], sigma2: f64) -> Result<Vec<CVec>> {
    (0..est.num_ues())
        .map(|k| optimal_weights_from_moments(&est.moments(k), powers, k, sigma2))
        .collect()
}
