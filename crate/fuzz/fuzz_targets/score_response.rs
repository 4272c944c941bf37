#![no_main]

use libfuzzer_sys::fuzz_target;
use zeroshot_core::scorers::validate_score_response;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let ids: Vec<String> = (0..3).map(|i| i.to_string()).collect();
    if let Ok(scores) = validate_score_response(&ids, text) {
        assert_eq!(scores.len(), ids.len());
        assert!(scores.iter().all(|p| (0.0..=1.0).contains(p)));
    }
});
