#![no_main]

use libfuzzer_sys::fuzz_target;
use zeroshot_core::{bundled, model::parse_instances, splits::ingest};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_instances(text);
    let scheme = bundled::scheme("emotion").unwrap();
    if let Ok(ingested) = ingest(text, &scheme) {
        assert!(ingested.instances.iter().all(|i| i.gold.len() == 1));
    }
});
