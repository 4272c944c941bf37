#![no_main]

use libfuzzer_sys::fuzz_target;
use zeroshot_core::SplitScheme;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(scheme) = SplitScheme::from_json(text) {
        let again = SplitScheme::from_json(&scheme.to_json().unwrap()).unwrap();
        assert_eq!(scheme, again);
    }
});
