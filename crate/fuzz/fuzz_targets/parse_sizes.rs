#![no_main]

use commsim::baseline::{parse_sizes, BaselineConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let cfg = BaselineConfig::default();
    if let Ok(sizes) = parse_sizes(data, &cfg) {
        assert!(sizes.communities.iter().all(|(_, s)| *s <= cfg.size_cap));
        assert!(sizes.excluded.iter().all(|(_, s)| *s > cfg.size_cap));

        let mut buf = Vec::new();
        sizes.write_csv(&mut buf).expect("writes to memory");
        let again = parse_sizes(buf.as_slice(), &cfg).expect("own output parses");
        assert_eq!(again.communities, sizes.communities);
    }
});
