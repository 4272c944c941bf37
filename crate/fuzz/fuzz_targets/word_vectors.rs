#![no_main]

use libfuzzer_sys::fuzz_target;
use zeroshot_core::scorers::{embedding_cosine_score, WordVectorTable};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = WordVectorTable::parse(text) {
        let s = embedding_cosine_score(&table, text, text);
        assert!((0.0..=1.0).contains(&s));
    }
});
