//! Config round trip and the shipped configuration files.

use std::path::Path;

use nls_lab::config::{read_matrix, ConfigText, ExperimentConfig};

fn configs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_validate_and_round_trip() {
    let matrix = read_matrix(&configs().join("acceptance.matrix")).unwrap();
    assert_eq!(matrix.len(), 15);
    for path in matrix {
        let cfg = ExperimentConfig::from_file(&path).unwrap();
        let canonical = cfg.canonical();
        let again = ExperimentConfig::parse(&canonical).unwrap();
        assert_eq!(again.canonical(), canonical);
        assert_eq!(again.hash(), cfg.hash());
        assert_eq!(again, cfg);
    }
}

#[test]
fn comments_and_spacing_do_not_change_the_hash() {
    let a = ConfigText::parse("b = 2\na=1 # note\n").unwrap();
    let b = ConfigText::parse("# header\n\na = 1\nb   =   2\n").unwrap();
    assert_eq!(a.canonical(), "a = 1\nb = 2\n");
    assert_eq!(a.hash(), b.hash());
}

#[test]
fn seed_override_changes_random_data_only_through_the_seed() {
    let cfg = ExperimentConfig::from_file(&configs().join("bernstein.conf")).unwrap();
    let other = cfg.with_seed(cfg.seed + 1).unwrap();
    assert_ne!(other.hash(), cfg.hash());
    assert_eq!(other.data.seed, cfg.data.seed + 1);
    assert_eq!(other.grid, cfg.grid);
}
