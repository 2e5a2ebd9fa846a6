//! Aggregated (direct + RIS-cascaded) channel statistics and joint channel draws.
//!
//! `vec(H̃_m)` stacks the columns of the N×L matrix, so entry `(a, l)` of
//! `H̃_m` sits at index `l·N + a`, and block `(l, l')` of `R̃_m` holds
//! `E{vec_l vec_l'^H}` for columns `l` and `l'`.

use std::f64::consts::PI;

use rand::Rng;

use crate::correlation::{LosComponents, NlosCovariances};
use crate::error::{Error, Result};
use crate::linalg::{cis, diag_congruence, psd_factor, sample_cn, CMat, CVec, ZERO};

/// `[X]_{l,l'} = tr(B · [R̃]_{block(l', l)})`, an L×L matrix.
///
/// This is `E{H̃ᴴ x xᴴ H̃}` when `E{x xᴴ} = B`; it produces both `Q¹`, `Q²`
/// and the NLoS part of the EMI covariance.
pub fn block_trace_matrix(b: &CMat, r_tilde: &CMat, antennas: usize) -> Result<CMat> {
    let n = b.nrows();
    if b.ncols() != n || r_tilde.nrows() != n * antennas || r_tilde.ncols() != n * antennas {
        return Err(Error::Dimension(format!(
            "block trace: B is {}x{}, R̃ is {}x{}, L = {antennas}",
            b.nrows(),
            b.ncols(),
            r_tilde.nrows(),
            r_tilde.ncols()
        )));
    }
    let mut out = CMat::zeros(antennas, antennas);
    for l in 0..antennas {
        for lp in 0..antennas {
            let blk = r_tilde.view((lp * n, l * n), (n, n));
            let mut acc = ZERO;
            for i in 0..n {
                for j in 0..n {
                    acc += b[(i, j)] * blk[(j, i)];
                }
            }
            out[(l, lp)] = acc;
        }
    }
    Ok(out)
}

/// Statistics of `o_mk` for one AP–UE pair.
#[derive(Debug, Clone)]
pub struct AggregatedCovariance {
    /// `ō_mk = H̄ᴴ Φ z̄`, the mean before the UE phase rotation.
    pub o_bar: CVec,
    /// `R^o_mk`.
    pub r_o: CMat,
    pub q1: CMat,
    pub q2: CMat,
}

/// Closed-form mean and covariance of `o = g + Hᴴ Φ z`. `Φ` must be diagonal.
pub fn aggregated_covariance(
    r_direct: &CMat,
    h_bar: &CMat,
    phi: &CMat,
    r_tilde_k: &CMat,
    r_tilde_m: &CMat,
    z_bar: &CVec,
) -> Result<AggregatedCovariance> {
    let (n, l) = (h_bar.nrows(), h_bar.ncols());
    if r_direct.nrows() != l || phi.nrows() != n || r_tilde_k.nrows() != n || z_bar.len() != n {
        return Err(Error::Dimension(
            "aggregated covariance inputs disagree on N or L".into(),
        ));
    }
    let d = phi.diagonal();
    let phi_z = d.component_mul(z_bar);
    let o_bar = h_bar.adjoint() * &phi_z;
    let b = &phi_z * phi_z.adjoint();
    let q1 = block_trace_matrix(&b, r_tilde_m, l)?;
    let rotated = diag_congruence(&d, r_tilde_k);
    let q2 = block_trace_matrix(&rotated, r_tilde_m, l)?;
    let r_o = r_direct + h_bar.adjoint() * &rotated * h_bar + &q1 + &q2;
    Ok(AggregatedCovariance { o_bar, r_o, q1, q2 })
}

/// All first and second order statistics of the aggregated channels.
#[derive(Debug, Clone)]
pub struct ChannelStatistics {
    /// Direct-link correlation `R_mk`, `[m][k]`.
    pub r_direct: Vec<Vec<CMat>>,
    /// `[m][k]`
    pub pairs: Vec<Vec<AggregatedCovariance>>,
}

impl ChannelStatistics {
    pub fn build(r_direct: Vec<Vec<CMat>>, los: &LosComponents, nlos: &NlosCovariances) -> Result<Self> {
        let phi = los.phi();
        let pairs = r_direct
            .iter()
            .enumerate()
            .map(|(m, row)| {
                row.iter()
                    .enumerate()
                    .map(|(k, r)| {
                        aggregated_covariance(
                            r,
                            &los.h_bar[m],
                            &phi,
                            &nlos.r_tilde_k[k],
                            &nlos.r_tilde_m[m],
                            &los.z_bar[k],
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { r_direct, pairs })
    }

    pub fn num_aps(&self) -> usize {
        self.pairs.len()
    }

    pub fn num_ues(&self) -> usize {
        self.pairs.first().map_or(0, Vec::len)
    }

    pub fn o_bar(&self, m: usize, k: usize) -> &CVec {
        &self.pairs[m][k].o_bar
    }

    pub fn r_o(&self, m: usize, k: usize) -> &CMat {
        &self.pairs[m][k].r_o
    }
}

/// One joint draw of every channel in the system.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `[m][k]`
    pub g: Vec<Vec<CVec>>,
    /// `H_m`, N×L.
    pub h: Vec<CMat>,
    pub z: Vec<CVec>,
    /// `[m][k]`
    pub o: Vec<Vec<CVec>>,
    /// LoS phase of each UE.
    pub theta: Vec<f64>,
}

/// Precomputed square-root factors for drawing channel realizations.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    g_factor: Vec<Vec<CMat>>,
    h_factor: Vec<CMat>,
    z_factor: Vec<CMat>,
    h_bar: Vec<CMat>,
    z_bar: Vec<CVec>,
    phi: CMat,
}

impl ChannelSampler {
    pub fn new(r_direct: &[Vec<CMat>], los: &LosComponents, nlos: &NlosCovariances) -> Result<Self> {
        Ok(Self {
            g_factor: r_direct
                .iter()
                .map(|row| row.iter().map(psd_factor).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?,
            h_factor: nlos.r_tilde_m.iter().map(psd_factor).collect::<Result<Vec<_>>>()?,
            z_factor: nlos.r_tilde_k.iter().map(psd_factor).collect::<Result<Vec<_>>>()?,
            h_bar: los.h_bar.clone(),
            z_bar: los.z_bar.clone(),
            phi: los.phi(),
        })
    }

    pub fn phi(&self) -> &CMat {
        &self.phi
    }

    /// Draws UE phases uniformly on `[-π, π)`, then everything else.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let theta: Vec<f64> = (0..self.z_bar.len()).map(|_| rng.random_range(-PI..PI)).collect();
        self.sample_with_phases(theta, rng)
    }

    pub fn sample_with_phases<R: Rng + ?Sized>(&self, theta: Vec<f64>, rng: &mut R) -> ChannelRealization {
        let g: Vec<Vec<CVec>> = self
            .g_factor
            .iter()
            .map(|row| row.iter().map(|f| sample_cn(f, rng)).collect())
            .collect();
        let h: Vec<CMat> = self
            .h_factor
            .iter()
            .zip(&self.h_bar)
            .map(|(f, mean)| {
                let v = sample_cn(f, rng);
                mean + CMat::from_column_slice(mean.nrows(), mean.ncols(), v.as_slice())
            })
            .collect();
        let z: Vec<CVec> = self
            .z_factor
            .iter()
            .zip(&self.z_bar)
            .zip(&theta)
            .map(|((f, mean), &t)| mean * cis(t) + sample_cn(f, rng))
            .collect();
        let o = h
            .iter()
            .zip(&g)
            .map(|(hm, gm)| {
                let cascade = hm.adjoint() * &self.phi;
                gm.iter().zip(&z).map(|(gmk, zk)| gmk + &cascade * zk).collect()
            })
            .collect();
        ChannelRealization { g, h, z, o, theta }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, hermitian_defect, standard_cn};
    use crate::rng::{purpose, substream};

    fn random_psd(n: usize, seed: u64) -> CMat {
        let mut rng = substream(seed, &[purpose::TEST]);
        let g = CMat::from_fn(n, n, |_, _| standard_cn(1, &mut rng)[0]);
        &g * g.adjoint()
    }

    #[test]
    fn zero_cascade_nlos_removes_q() {
        let (n, l) = (4, 2);
        let mut rng = substream(1, &[purpose::TEST]);
        let h_bar = CMat::from_fn(n, l, |_, _| standard_cn(1, &mut rng)[0]);
        let z_bar = standard_cn(n, &mut rng);
        let phi = CMat::identity(n, n) * cis(0.3);
        let r_direct = random_psd(l, 2);
        let r_k = random_psd(n, 3);
        let agg = aggregated_covariance(&r_direct, &h_bar, &phi, &r_k, &CMat::zeros(n * l, n * l), &z_bar).unwrap();
        assert!(agg.q1.iter().all(|z| *z == ZERO));
        assert!(agg.q2.iter().all(|z| *z == ZERO));
        let want = &r_direct + h_bar.adjoint() * &phi * &r_k * phi.adjoint() * &h_bar;
        assert!((agg.r_o - want).norm() < 1e-12);
    }

    #[test]
    fn zero_los_removes_q1() {
        let (n, l) = (3, 2);
        let agg = aggregated_covariance(
            &random_psd(l, 1),
            &CMat::zeros(n, l),
            &CMat::identity(n, n),
            &random_psd(n, 2),
            &random_psd(n * l, 3),
            &CVec::zeros(n),
        )
        .unwrap();
        assert!(agg.q1.iter().all(|z| *z == ZERO));
        assert!(hermitian_defect(&agg.q2) < 1e-12);
    }

    #[test]
    fn pure_los_is_deterministic() {
        let (n, l) = (4, 2);
        let mut rng = substream(5, &[purpose::TEST]);
        let h_bar = CMat::from_fn(n, l, |_, _| standard_cn(1, &mut rng)[0]);
        let z_bar = standard_cn(n, &mut rng);
        let los = LosComponents {
            h_bar: vec![h_bar.clone()],
            z_bar: vec![z_bar.clone()],
            phase_shifts: CVec::from_element(n, cis(0.5)),
        };
        let nlos = NlosCovariances {
            r_tilde_m: vec![CMat::zeros(n * l, n * l)],
            r_tilde_k: vec![CMat::zeros(n, n)],
            r_ap: vec![],
            r_ris: vec![],
        };
        let sampler = ChannelSampler::new(&[vec![CMat::zeros(l, l)]], &los, &nlos).unwrap();
        let real = sampler.sample(&mut rng);
        let want = h_bar.adjoint() * los.phi() * &z_bar * cis(real.theta[0]);
        assert!((&real.o[0][0] - want).norm() < 1e-12);
    }

    #[test]
    fn assembly_identity_holds() {
        let (n, l) = (4, 2);
        let mut rng = substream(6, &[purpose::TEST]);
        let los = LosComponents {
            h_bar: vec![CMat::from_fn(n, l, |_, _| standard_cn(1, &mut rng)[0])],
            z_bar: vec![standard_cn(n, &mut rng), standard_cn(n, &mut rng)],
            phase_shifts: CVec::from_element(n, c(0.0, 1.0)),
        };
        let nlos = NlosCovariances {
            r_tilde_m: vec![random_psd(n * l, 7)],
            r_tilde_k: vec![random_psd(n, 8), random_psd(n, 9)],
            r_ap: vec![],
            r_ris: vec![],
        };
        let sampler = ChannelSampler::new(&[vec![random_psd(l, 10), random_psd(l, 11)]], &los, &nlos).unwrap();
        let r = sampler.sample(&mut rng);
        for k in 0..2 {
            let want = &r.g[0][k] + r.h[0].adjoint() * los.phi() * &r.z[k];
            assert!((&r.o[0][k] - want).norm() == 0.0);
        }
    }
}
