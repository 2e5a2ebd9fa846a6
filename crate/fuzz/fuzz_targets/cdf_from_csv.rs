#![no_main]

use libfuzzer_sys::fuzz_target;
use riscf::experiment::cdf::cdf_from_csv;

fuzz_target!(|data: &[u8]| {
    let mut out = Vec::new();
    if let Ok(curves) = cdf_from_csv(data, &mut out) {
        for (_, cdf) in curves {
            assert!(cdf.values.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(cdf.ordinates.last().copied(), Some(1.0));
        }
    }
});
