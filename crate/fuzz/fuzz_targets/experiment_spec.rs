#![no_main]

use libfuzzer_sys::fuzz_target;
use riscf::experiment::ExperimentSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = ExperimentSpec::from_toml_str(text) {
            let _ = spec.points();
        }
    }
});
