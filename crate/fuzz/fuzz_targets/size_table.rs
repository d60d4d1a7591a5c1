#![no_main]

use commsim::cli::{parse_size_table, Selection};
use commsim::metrics::{complementary_ecdf, skew_summary};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(dist) = parse_size_table(data, &Selection::default()) {
        let _ = skew_summary(&dist);
        if let Ok(curve) = complementary_ecdf(&dist, true) {
            assert!(curve.points.windows(2).all(|w| w[0].size < w[1].size));
        }
    }
});
