#![no_main]

use libfuzzer_sys::fuzz_target;
use zeroshot_core::scorers::{esa_build, esa_score, parse_corpus};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(articles) = parse_corpus(text) else {
        return;
    };
    let pairs: Vec<(&str, &str)> = articles
        .iter()
        .map(|a| (a.title.as_str(), a.text.as_str()))
        .collect();
    if let Ok(index) = esa_build(&pairs) {
        let s = esa_score(&index, text, "the");
        assert!((0.0..=1.0).contains(&s));
    }
});
