#![no_main]

use commsim::config::RunParams;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(params) = RunParams::from_toml_str(s) {
            if let Ok(config) = params.resolve() {
                config.validate().expect("resolved configs validate");
            }
        }
    }
});
