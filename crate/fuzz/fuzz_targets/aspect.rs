#![no_main]

use libfuzzer_sys::fuzz_target;
use zeroshot_core::{hypothesis_set, AspectSpec, GlossLexicon, HypothesisMode};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(aspect) = AspectSpec::from_json(text) {
        // a validated aspect always renders word hypotheses
        let hyps = hypothesis_set(&aspect, HypothesisMode::Word, &GlossLexicon::new()).unwrap();
        assert_eq!(hyps.len(), aspect.all_label_names().len());
    }
});
