#![no_main]

use libfuzzer_sys::fuzz_target;
use zeroshot_core::scorers::{esa_score, ConceptIndex};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(index) = ConceptIndex::from_json(text) {
        let s = esa_score(&index, "bank river money", "bank");
        assert!((0.0..=1.0).contains(&s));
    }
});
