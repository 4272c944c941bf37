#![no_main]

use libfuzzer_sys::fuzz_target;
use zeroshot_core::GlossLexicon;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = GlossLexicon::from_json(text);
    }
});
