//! Random deployment geometry and large-scale propagation.
//!
//! APs and UEs are dropped uniformly in a square that wraps around at its
//! edges (torus metric); the RIS sits at a fixed point. Every link gets a
//! COST 321 Walfish–Ikegami path loss plus spatially correlated shadowing.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{psd_factor_real, RMat};

/// Path loss in dB at `distance` metres, without shadowing.
pub fn path_loss_db(distance: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Argument(format!(
            "path loss needs a positive distance, got {distance}"
        )));
    }
    Ok(-30.18 - 26.0 * distance.log10())
}

/// Linear Rician factor `10^(1.3 - 0.003 d)`.
pub fn rician_factor(distance: f64) -> f64 {
    debug_assert!(distance >= 0.0);
    10f64.powf(1.3 - 0.003 * distance)
}

/// Shortest horizontal displacement `to - from` on a torus of the given side.
pub fn wrapped_offset(from: [f64; 2], to: [f64; 2], side: f64) -> [f64; 2] {
    let mut best = [to[0] - from[0], to[1] - from[1]];
    let mut best_norm = best[0].hypot(best[1]);
    for sx in [-side, 0.0, side] {
        for sy in [-side, 0.0, side] {
            let d = [to[0] + sx - from[0], to[1] + sy - from[1]];
            let n = d[0].hypot(d[1]);
            if n < best_norm {
                best = d;
                best_norm = n;
            }
        }
    }
    best
}

pub fn wrapped_distance(from: [f64; 2], to: [f64; 2], side: f64) -> f64 {
    let d = wrapped_offset(from, to, side);
    d[0].hypot(d[1])
}

fn horizontal(p: &[f64; 3]) -> [f64; 2] {
    [p[0], p[1]]
}

/// Shadow fading realizations in dB, one per link.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowFading {
    /// `[m][k]`
    pub ap_ue: Vec<Vec<f64>>,
    pub ap_ris: Vec<f64>,
    pub ue_ris: Vec<f64>,
}

impl ShadowFading {
    pub fn zero(m: usize, k: usize) -> Self {
        Self {
            ap_ue: vec![vec![0.0; k]; m],
            ap_ris: vec![0.0; m],
            ue_ris: vec![0.0; k],
        }
    }
}

/// Covariance `std² · 2^(-d_ij / d_dc)` over a set of horizontal points.
///
/// Distances are plain Euclidean ones. The exponential kernel evaluated on
/// the wrap-around metric is not positive semidefinite in general.
pub fn shadow_covariance(points: &[[f64; 2]], std_db: f64, decorrelation_m: f64) -> RMat {
    let n = points.len();
    RMat::from_fn(n, n, |i, j| {
        let d = (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]);
        std_db * std_db * 2f64.powf(-d / decorrelation_m)
    })
}

/// Zero-mean Gaussian field with [`shadow_covariance`].
pub fn correlated_gaussian_field<R: Rng + ?Sized>(
    points: &[[f64; 2]],
    std_db: f64,
    decorrelation_m: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(decorrelation_m > 0.0) {
        return Err(Error::Argument("decorrelation distance must be positive".into()));
    }
    let factor = psd_factor_real(&shadow_covariance(points, std_db, decorrelation_m))?;
    let w: Vec<f64> = (0..points.len()).map(|_| rng.sample(StandardNormal)).collect();
    Ok((0..points.len())
        .map(|i| (0..points.len()).map(|j| factor[(i, j)] * w[j]).sum())
        .collect())
}

/// Draws `F = sqrt(δ_f)·a + sqrt(1-δ_f)·b` for every link type.
///
/// The AP-side field `a_m`, the UE-side field `b_k` and the single RIS term
/// `b_RIS` are each `N(0, δ_sf²)` with `2^(-d/d_dc)` spatial correlation.
/// AP–UE links combine `a_m` and `b_k`, AP–RIS links `a_m` and `b_RIS`,
/// UE–RIS links `b_k` and `b_RIS`.
pub fn correlated_shadow_fading<R: Rng + ?Sized>(
    ap_xy: &[[f64; 2]],
    ue_xy: &[[f64; 2]],
    fraction: f64,
    std_db: f64,
    decorrelation_m: f64,
    rng: &mut R,
) -> Result<ShadowFading> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Argument(format!("shadow fraction {fraction} outside [0, 1]")));
    }
    let a = correlated_gaussian_field(ap_xy, std_db, decorrelation_m, rng)?;
    let b = correlated_gaussian_field(ue_xy, std_db, decorrelation_m, rng)?;
    let b_ris = std_db * rng.sample::<f64, _>(StandardNormal);
    let (s1, s2) = (fraction.sqrt(), (1.0 - fraction).sqrt());
    Ok(ShadowFading {
        ap_ue: a
            .iter()
            .map(|am| b.iter().map(|bk| s1 * am + s2 * bk).collect())
            .collect(),
        ap_ris: a.iter().map(|am| s1 * am + s2 * b_ris).collect(),
        ue_ris: b.iter().map(|bk| s1 * bk + s2 * b_ris).collect(),
    })
}

/// A drawn deployment with all derived large-scale quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub ap_positions: Vec<[f64; 3]>,
    pub ue_positions: Vec<[f64; 3]>,
    pub ris_position: [f64; 3],
    /// d_m, AP–RIS.
    pub ap_ris_distance: Vec<f64>,
    /// d_k, UE–RIS.
    pub ue_ris_distance: Vec<f64>,
    /// d_mk, AP–UE, `[m][k]`.
    pub ap_ue_distance: Vec<Vec<f64>>,
    /// Azimuth of UE k seen from AP m, `[m][k]`.
    pub ap_ue_azimuth: Vec<Vec<f64>>,
    /// Azimuth of the RIS seen from AP m.
    pub ap_ris_azimuth: Vec<f64>,
    /// Unit vectors from the RIS toward each UE.
    pub ris_ue_direction: Vec<[f64; 3]>,
    /// β_mk, `[m][k]`.
    pub beta_ap_ue: Vec<Vec<f64>>,
    /// β_m
    pub beta_ap_ris: Vec<f64>,
    /// β_k
    pub beta_ue_ris: Vec<f64>,
    /// κ_m
    pub kappa_ap_ris: Vec<f64>,
    /// κ_k (zero when UE–RIS links are Rayleigh).
    pub kappa_ue_ris: Vec<f64>,
    pub shadow: ShadowFading,
}

impl Scenario {
    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    /// Builds every derived field from explicit positions and shadowing.
    pub fn from_positions(
        config: &SystemConfig,
        ap_positions: Vec<[f64; 3]>,
        ue_positions: Vec<[f64; 3]>,
        ris_position: [f64; 3],
        shadow: ShadowFading,
    ) -> Result<Self> {
        let side = config.area_side_m;
        let (m_count, k_count) = (ap_positions.len(), ue_positions.len());
        if shadow.ap_ris.len() != m_count || shadow.ue_ris.len() != k_count || shadow.ap_ue.len() != m_count {
            return Err(Error::Dimension("shadow fading does not match node counts".into()));
        }
        let ris_xy = horizontal(&ris_position);

        let mut ap_ris_distance = Vec::with_capacity(m_count);
        let mut ap_ris_azimuth = Vec::with_capacity(m_count);
        for ap in &ap_positions {
            let off = wrapped_offset(horizontal(ap), ris_xy, side);
            let dz = ris_position[2] - ap[2];
            ap_ris_distance.push((off[0] * off[0] + off[1] * off[1] + dz * dz).sqrt());
            ap_ris_azimuth.push(off[1].atan2(off[0]));
        }

        let mut ue_ris_distance = Vec::with_capacity(k_count);
        let mut ris_ue_direction = Vec::with_capacity(k_count);
        for ue in &ue_positions {
            let off = wrapped_offset(ris_xy, horizontal(ue), side);
            let dz = ue[2] - ris_position[2];
            let d = (off[0] * off[0] + off[1] * off[1] + dz * dz).sqrt();
            ue_ris_distance.push(d);
            ris_ue_direction.push([off[0] / d, off[1] / d, dz / d]);
        }

        let mut ap_ue_distance = vec![vec![0.0; k_count]; m_count];
        let mut ap_ue_azimuth = vec![vec![0.0; k_count]; m_count];
        for (m, ap) in ap_positions.iter().enumerate() {
            for (k, ue) in ue_positions.iter().enumerate() {
                let off = wrapped_offset(horizontal(ap), horizontal(ue), side);
                let dz = ue[2] - ap[2];
                ap_ue_distance[m][k] = (off[0] * off[0] + off[1] * off[1] + dz * dz).sqrt();
                ap_ue_azimuth[m][k] = off[1].atan2(off[0]);
            }
        }

        let gain = |d: f64, f: f64| -> Result<f64> { Ok(10f64.powf((path_loss_db(d)? + f) / 10.0)) };
        let beta_ap_ue = ap_ue_distance
            .iter()
            .zip(&shadow.ap_ue)
            .map(|(ds, fs)| ds.iter().zip(fs).map(|(&d, &f)| gain(d, f)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let beta_ap_ris = ap_ris_distance
            .iter()
            .zip(&shadow.ap_ris)
            .map(|(&d, &f)| gain(d, f))
            .collect::<Result<Vec<_>>>()?;
        let beta_ue_ris = ue_ris_distance
            .iter()
            .zip(&shadow.ue_ris)
            .map(|(&d, &f)| gain(d, f))
            .collect::<Result<Vec<_>>>()?;
        let kappa_ap_ris = ap_ris_distance.iter().map(|&d| rician_factor(d)).collect();
        let kappa_ue_ris = ue_ris_distance
            .iter()
            .map(|&d| if config.ue_ris_rician { rician_factor(d) } else { 0.0 })
            .collect();

        Ok(Self {
            ap_positions,
            ue_positions,
            ris_position,
            ap_ris_distance,
            ue_ris_distance,
            ap_ue_distance,
            ap_ue_azimuth,
            ap_ris_azimuth,
            ris_ue_direction,
            beta_ap_ue,
            beta_ap_ris,
            beta_ue_ris,
            kappa_ap_ris,
            kappa_ue_ris,
            shadow,
        })
    }
}

/// Drops APs and UEs uniformly, places the RIS and draws shadowing.
pub fn generate_scenario<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<Scenario> {
    config.validate()?;
    let side = config.area_side_m;
    let mut drop = |h: f64| [rng.random::<f64>() * side, rng.random::<f64>() * side, h];
    let aps: Vec<[f64; 3]> = (0..config.num_aps).map(|_| drop(config.ap_height_m)).collect();
    let ues: Vec<[f64; 3]> = (0..config.num_ues).map(|_| drop(config.ue_height_m)).collect();
    let [rx, ry] = config.ris_horizontal_position();
    let ris = [rx, ry, config.ris_height_m];

    let ap_xy: Vec<[f64; 2]> = aps.iter().map(horizontal).collect();
    let ue_xy: Vec<[f64; 2]> = ues.iter().map(horizontal).collect();
    let shadow = correlated_shadow_fading(
        &ap_xy,
        &ue_xy,
        config.shadow_fraction,
        config.shadow_std_db,
        config.decorrelation_distance_m,
        rng,
    )?;
    Scenario::from_positions(config, aps, ues, ris, shadow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{purpose, substream};
    use proptest::prelude::*;

    #[test]
    fn path_loss_values() {
        assert!((path_loss_db(1.0).unwrap() + 30.18).abs() < 1e-12);
        assert!((path_loss_db(100.0).unwrap() + 82.18).abs() < 1e-12);
        assert!((path_loss_db(10.0).unwrap() + 56.18).abs() < 1e-12);
        assert!(path_loss_db(0.0).is_err());
        assert!(path_loss_db(-3.0).is_err());
    }

    #[test]
    fn rician_values() {
        assert!((rician_factor(0.0) - 10f64.powf(1.3)).abs() < 1e-12);
        assert!((rician_factor(0.0) - 19.952_623).abs() < 1e-5);
        assert!((rician_factor(100.0) - 10.0).abs() < 1e-12);
        assert!(rician_factor(1e5) < 1e-200);
    }

    #[test]
    fn opposite_corners_wrap_to_zero() {
        let d = wrapped_distance([0.0, 0.0], [100.0, 100.0], 100.0);
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn ris_at_center_by_default() {
        let cfg = SystemConfig::default();
        let s = generate_scenario(&cfg, &mut substream(1, &[purpose::TEST])).unwrap();
        assert_eq!(s.ris_position, [50.0, 50.0, 30.0]);
    }

    #[test]
    fn colocated_ap_is_vertical_only() {
        let cfg = SystemConfig {
            num_aps: 1,
            num_ues: 1,
            ..Default::default()
        };
        let s = Scenario::from_positions(
            &cfg,
            vec![[50.0, 50.0, 15.0]],
            vec![[10.0, 10.0, 1.65]],
            [50.0, 50.0, 30.0],
            ShadowFading::zero(1, 1),
        )
        .unwrap();
        assert!((s.ap_ris_distance[0] - 15.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_at_zero_and_decorrelation_distance() {
        let cov = shadow_covariance(&[[0.0, 0.0], [0.0, 0.0], [30.0, 0.0]], 1.0, 30.0);
        assert!((cov[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((cov[(0, 2)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dense_deployment_has_psd_shadowing() {
        // Many APs on a small torus used to produce indefinite covariances
        // under the wrap-around metric.
        let cfg = SystemConfig {
            num_aps: 60,
            num_ues: 40,
            ..Default::default()
        };
        for seed in 0..20 {
            generate_scenario(&cfg, &mut substream(seed, &[purpose::SCENARIO])).unwrap();
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let cfg = SystemConfig::default();
        let a = generate_scenario(&cfg, &mut substream(42, &[purpose::SCENARIO, 0])).unwrap();
        let b = generate_scenario(&cfg, &mut substream(42, &[purpose::SCENARIO, 0])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_shadow_covariance_matches() {
        // Monte-Carlo oracle: 1e5 draws, each entry within 3 standard errors.
        let pts = [[10.0, 10.0], [40.0, 20.0], [90.0, 95.0], [12.0, 11.0]];
        let (std_db, ddc) = (8.0, 100.0);
        let cov = shadow_covariance(&pts, std_db, ddc);
        let mut rng = substream(5, &[purpose::TEST]);
        let n = 100_000;
        let p = pts.len();
        let mut sum = vec![0.0; p * p];
        let mut sum_sq = vec![0.0; p * p];
        for _ in 0..n {
            let x = correlated_gaussian_field(&pts, std_db, ddc, &mut rng).unwrap();
            for i in 0..p {
                for j in 0..p {
                    let v = x[i] * x[j];
                    sum[i * p + j] += v;
                    sum_sq[i * p + j] += v * v;
                }
            }
        }
        for i in 0..p {
            for j in 0..p {
                let mean = sum[i * p + j] / n as f64;
                let var = sum_sq[i * p + j] / n as f64 - mean * mean;
                let se = (var / n as f64).sqrt();
                assert!(
                    (mean - cov[(i, j)]).abs() <= 3.0 * se,
                    "entry ({i},{j}): {mean} vs {} (se {se})",
                    cov[(i, j)]
                );
            }
        }
    }

    proptest! {
        #[test]
        fn wrap_metric_is_symmetric_and_bounded(
            ax in 0.0..100.0f64, ay in 0.0..100.0f64,
            bx in 0.0..100.0f64, by in 0.0..100.0f64,
            cx in 0.0..100.0f64, cy in 0.0..100.0f64,
        ) {
            let (a, b, c) = ([ax, ay], [bx, by], [cx, cy]);
            let ab = wrapped_distance(a, b, 100.0);
            prop_assert!((ab - wrapped_distance(b, a, 100.0)).abs() < 1e-9);
            prop_assert!(ab <= (bx - ax).hypot(by - ay) + 1e-12);
            prop_assert!(ab <= wrapped_distance(a, c, 100.0) + wrapped_distance(c, b, 100.0) + 1e-9);
        }

        #[test]
        fn betas_positive(seed in 0u64..200) {
            let cfg = SystemConfig::default();
            let s = generate_scenario(&cfg, &mut substream(seed, &[purpose::SCENARIO])).unwrap();
            prop_assert!(s.beta_ap_ue.iter().flatten().all(|&b| b > 0.0));
            prop_assert!(s.beta_ap_ris.iter().chain(&s.beta_ue_ris).all(|&b| b > 0.0));
            prop_assert!(s.ap_ue_distance.iter().flatten().all(|&d| d > 0.0));
        }
    }
}
