//! Replays the fuzz corpus seeds, and random mutations of them, through the
//! same entry points and invariants as the fuzz targets. Runs on stable
//! without libFuzzer.

use std::fs;
use std::path::PathBuf;

use commsim::baseline::{aggregate_members, parse_events, parse_sizes, BaselineConfig};
use commsim::cli::{parse_size_table, Selection};
use commsim::config::{ExperimentFile, RunParams, SweepGrid};
use commsim::metrics::{complementary_ecdf, skew_summary};
use proptest::prelude::*;

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    assert!(!paths.is_empty(), "no seeds in {}", dir.display());
    paths.into_iter().map(|p| fs::read(p).unwrap()).collect()
}

fn events_target(data: &[u8]) -> bool {
    let Ok(events) = parse_events(data) else { return false };
    let total: u64 = events.iter().map(|e| e.count).fold(0, u64::saturating_add);
    let sizes = aggregate_members(events, &BaselineConfig::default()).unwrap();
    let kept: u64 = sizes.communities.iter().map(|(_, s)| u64::from(*s)).sum();
    assert!(kept <= total);
    true
}

fn sizes_target(data: &[u8]) -> bool {
    let cfg = BaselineConfig::default();
    let Ok(sizes) = parse_sizes(data, &cfg) else { return false };
    assert!(sizes.communities.iter().all(|(_, s)| *s <= cfg.size_cap));
    assert!(sizes.excluded.iter().all(|(_, s)| *s > cfg.size_cap));
    let mut buf = Vec::new();
    sizes.write_csv(&mut buf).unwrap();
    assert_eq!(parse_sizes(buf.as_slice(), &cfg).unwrap().communities, sizes.communities);
    true
}

fn size_table_target(data: &[u8]) -> bool {
    let Ok(dist) = parse_size_table(data, &Selection::default()) else { return false };
    let _ = skew_summary(&dist);
    if let Ok(curve) = complementary_ecdf(&dist, true) {
        assert!(curve.points.windows(2).all(|w| w[0].size < w[1].size));
    }
    true
}

fn run_params_target(data: &[u8]) -> bool {
    let Ok(s) = std::str::from_utf8(data) else { return false };
    let Ok(params) = RunParams::from_toml_str(s) else { return false };
    if let Ok(config) = params.resolve() {
        config.validate().unwrap();
    }
    true
}

fn experiment_target(data: &[u8]) -> bool {
    let Ok(s) = std::str::from_utf8(data) else { return false };
    let Ok(file) = ExperimentFile::from_toml_str(s) else { return false };
    if let Ok(grid) = SweepGrid::from_experiment(&file) {
        if grid.cell_count() <= 4096 {
            assert_eq!(grid.cells().len(), grid.cell_count());
        }
    }
    true
}

type Target = fn(&[u8]) -> bool;

const TARGETS: [(&str, Target); 5] = [
    ("parse_events", events_target),
    ("parse_sizes", sizes_target),
    ("size_table", size_table_target),
    ("run_params_toml", run_params_target),
    ("experiment_toml", experiment_target),
];

#[test]
fn seeds_replay_and_each_target_has_an_accepted_seed() {
    for (name, target) in TARGETS {
        let accepted = seeds(name).iter().filter(|s| target(s)).count();
        assert!(accepted > 0, "{name}: no seed parses");
    }
}

#[derive(Debug, Clone)]
enum Edit {
    Flip(usize, u8),
    Insert(usize, u8),
    Delete(usize),
    Truncate(usize),
}

fn mutate(mut data: Vec<u8>, edits: &[Edit]) -> Vec<u8> {
    for e in edits {
        let n = data.len().max(1);
        match *e {
            Edit::Flip(i, b) if !data.is_empty() => data[i % n] ^= b,
            Edit::Insert(i, b) => data.insert(i % (data.len() + 1), b),
            Edit::Delete(i) if !data.is_empty() => {
                data.remove(i % n);
            }
            Edit::Truncate(i) => data.truncate(i % (data.len() + 1)),
            _ => {}
        }
    }
    data
}

fn edit() -> impl Strategy<Value = Edit> {
    let byte = prop_oneof![any::<u8>(), Just(b','), Just(b'\n'), Just(b'"'), Just(b'='), Just(b'['), Just(b'0')];
    prop_oneof![
        (any::<usize>(), byte.clone()).prop_map(|(i, b)| Edit::Flip(i, b)),
        (any::<usize>(), byte).prop_map(|(i, b)| Edit::Insert(i, b)),
        any::<usize>().prop_map(Edit::Delete),
        any::<usize>().prop_map(Edit::Truncate),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn mutated_seeds_never_panic(target in 0..TARGETS.len(), pick in any::<usize>(), edits in prop::collection::vec(edit(), 1..8)) {
        let (name, run) = TARGETS[target];
        let pool = seeds(name);
        let data = mutate(pool[pick % pool.len()].clone(), &edits);
        run(&data);
    }

    #[test]
    fn arbitrary_bytes_never_panic(target in 0..TARGETS.len(), data in prop::collection::vec(any::<u8>(), 0..256)) {
        (TARGETS[target].1)(&data);
    }
}
