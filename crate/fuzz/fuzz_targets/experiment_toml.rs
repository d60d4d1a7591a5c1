#![no_main]

use commsim::config::{ExperimentFile, SweepGrid};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(file) = ExperimentFile::from_toml_str(s) {
            if let Ok(grid) = SweepGrid::from_experiment(&file) {
                if grid.cell_count() <= 4096 {
                    assert_eq!(grid.cells().len(), grid.cell_count());
                }
            }
        }
    }
});
