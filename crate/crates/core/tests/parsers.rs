use std::path::PathBuf;

use proptest::prelude::*;
use riscf::experiment::cdf::cdf_from_csv;
use riscf::experiment::csv::{read_records, write_records};
use riscf::experiment::ExperimentSpec;

fn corpus(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.into_iter().map(|p| std::fs::read(p).unwrap()).collect()
}

#[test]
fn spec_seeds_parse() {
    let seeds = corpus("experiment_spec");
    assert!(seeds.len() >= 3);
    for s in seeds {
        let spec = ExperimentSpec::from_toml_str(std::str::from_utf8(&s).unwrap()).unwrap();
        assert!(!spec.points().unwrap().is_empty());
    }
}

#[test]
fn csv_seeds_round_trip() {
    for s in corpus("results_csv").into_iter().chain(corpus("cdf_from_csv")) {
        let records = read_records(s.as_slice()).unwrap();
        let mut out = Vec::new();
        write_records(&records, &mut out).unwrap();
        assert_eq!(read_records(out.as_slice()).unwrap(), records);
        cdf_from_csv(s.as_slice(), Vec::new()).unwrap();
    }
}

fn mutate(seed: &[u8], edits: &[(usize, u8)]) -> Vec<u8> {
    let mut v = seed.to_vec();
    for &(pos, byte) in edits {
        if !v.is_empty() {
            let i = pos % v.len();
            v[i] = byte;
        }
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn spec_parser_never_panics(text in "\\PC{0,400}") {
        let _ = ExperimentSpec::from_toml_str(&text);
    }

    #[test]
    fn mutated_specs_never_panic(pick in 0usize..16, edits in prop::collection::vec((any::<usize>(), any::<u8>()), 1..6)) {
        let seeds = corpus("experiment_spec");
        let data = mutate(&seeds[pick % seeds.len()], &edits);
        if let Ok(text) = std::str::from_utf8(&data) {
            if let Ok(spec) = ExperimentSpec::from_toml_str(text) {
                let _ = spec.points();
            }
        }
    }

    #[test]
    fn mutated_csv_never_panics(pick in 0usize..16, edits in prop::collection::vec((any::<usize>(), any::<u8>()), 1..6)) {
        let seeds = corpus("cdf_from_csv");
        let data = mutate(&seeds[pick % seeds.len()], &edits);
        let _ = read_records(data.as_slice());
        let _ = cdf_from_csv(data.as_slice(), Vec::new());
    }
}
