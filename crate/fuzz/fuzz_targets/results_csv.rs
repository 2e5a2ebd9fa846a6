#![no_main]

use libfuzzer_sys::fuzz_target;
use riscf::experiment::csv::{read_records, write_records};

fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_records(data) else { return };
    let mut out = Vec::new();
    write_records(&records, &mut out).expect("parsed records must serialize");
    let again = read_records(out.as_slice()).expect("written records must parse");
    assert_eq!(again.len(), records.len());
});
