#![no_main]

use libfuzzer_sys::fuzz_target;
use zeroshot_cli::spec::ScorerSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ScorerSpec::parse(text);
    }
});
