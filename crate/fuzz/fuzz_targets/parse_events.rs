#![no_main]

use commsim::baseline::{aggregate_members, parse_events, BaselineConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(events) = parse_events(data) {
        let total: u64 = events.iter().map(|e| e.count).fold(0, u64::saturating_add);
        let sizes = aggregate_members(events, &BaselineConfig::default()).expect("default config is valid");
        let kept: u64 = sizes.communities.iter().map(|(_, s)| u64::from(*s)).sum();
        assert!(kept <= total);
    }
});
