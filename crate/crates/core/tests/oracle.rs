mod common;

use common::{model, small_config};
use riscf::emi::pilot_noise_covariance;
use riscf::linalg::c;
use riscf::oracle::{estimate_channel_covariance, estimate_pilot_noise_covariance, estimate_uatf_terms, monte_carlo};
use riscf::oracle::{optimal_weights_from_estimates, sinr_from_estimates};
use riscf::sinr::{optimal_lsfd_weights, sinr_equal_weights, sinr_lsfd_closed_form};
use riscf::system::SystemOptions;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn estimates_are_identical_across_thread_counts() {
    let m = model(&small_config(), 3, 0, SystemOptions::default());
    let one = in_pool(1, || estimate_uatf_terms(&m, 1_200, 44).unwrap());
    let four = in_pool(4, || estimate_uatf_terms(&m, 1_200, 44).unwrap());
    assert_eq!(one.estimate.mean, four.estimate.mean);
    assert_eq!(one.estimate.std_error, four.estimate.std_error);
}

#[test]
fn standard_error_shrinks_as_inverse_square_root() {
    let f = |rng: &mut riscf::rng::SimRng, out: &mut [num_complex::Complex64]| {
        let x = riscf::linalg::standard_cn(1, rng)[0];
        out[0] = x;
        out[1] = c(x.norm_sqr(), 0.0);
    };
    let a = monte_carlo(5_000, 1, 0, 2, f).unwrap();
    let b = monte_carlo(20_000, 1, 0, 2, f).unwrap();
    for j in 0..2 {
        let ratio = a.std_error[j].re / b.std_error[j].re;
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }
    assert!(monte_carlo(1, 1, 0, 2, f).is_err());
}

#[test]
fn channel_and_pilot_noise_covariances_match_closed_form() {
    let cfg = small_config();
    let m = model(&cfg, 3, 1, SystemOptions::default());
    let l = cfg.antennas_per_ap;
    for (ap, ue) in [(0, 0), (2, 3)] {
        let est = estimate_channel_covariance(&m, ap, ue, 20_000, 5).unwrap();
        let r = m.channels.r_o(ap, ue);
        for a in 0..l {
            for b in 0..l {
                assert!(est.z_score(a * l + b, r[(a, b)]) < 4.0);
            }
        }
    }
    let est = estimate_pilot_noise_covariance(&m, 1, 0, 20_000, 6).unwrap();
    let want = pilot_noise_covariance(&m.emi[1].r_mm, cfg.pilot_symbols, m.sigma2);
    for a in 0..l {
        for b in 0..l {
            assert!(est.z_score(a * l + b, want[(a, b)]) < 4.0);
        }
    }
}

#[test]
fn oracle_sinr_tracks_closed_form() {
    let cfg = small_config();
    let m = model(&cfg, 3, 2, SystemOptions::default());
    let est = estimate_uatf_terms(&m, 10_000, 7).unwrap();
    let p = m.full_power();
    let closed = sinr_equal_weights(&m.terms, &p, m.sigma2).unwrap();
    let oracle = sinr_from_estimates(&est, &m.ones(), &p, m.sigma2).unwrap();
    for (a, b) in closed.iter().zip(&oracle) {
        assert!((a - b).abs() / a < 0.05, "{a} vs {b}");
    }
    let w_hat = optimal_weights_from_estimates(&est, &p, m.sigma2).unwrap();
    let best = sinr_from_estimates(&est, &w_hat, &p, m.sigma2).unwrap();
    for (a, b) in best.iter().zip(&oracle) {
        assert!(*a >= *b * (1.0 - 1e-12));
    }
    let w = optimal_lsfd_weights(&m.terms, &p, m.sigma2).unwrap();
    let closed_opt = sinr_lsfd_closed_form(&m.terms, &w, &p, m.sigma2).unwrap();
    let oracle_opt = sinr_from_estimates(&est, &w, &p, m.sigma2).unwrap();
    for (a, b) in closed_opt.iter().zip(&oracle_opt) {
        assert!((a - b).abs() / a < 0.05, "{a} vs {b}");
    }
}

#[test]
fn emi_free_oracle_has_no_emi_leak() {
    let m = model(&small_config(), 3, 0, SystemOptions { emi: false, ris: true });
    let est = estimate_uatf_terms(&m, 500, 1).unwrap();
    for k in 0..4 {
        for ap in 0..3 {
            assert_eq!(est.estimate.mean[est.idx_u(k, ap)], c(0.0, 0.0));
        }
    }
}
