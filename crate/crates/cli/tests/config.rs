use landau_cli::config::{RunConfig, KEYS};
use landau_cli::CliError;
use proptest::prelude::*;

#[test]
fn empty_file_gives_defaults() {
    let cfg = RunConfig::parse_str("# nothing here\n\n").unwrap();
    assert_eq!(cfg.serialize(), RunConfig::default().serialize());
    assert_eq!(cfg.hash(), RunConfig::default().hash());
}

#[test]
fn oversized_step_is_a_config_error() {
    let e = RunConfig::parse_str("dt = 0.5\nt_max = 5").unwrap_err();
    assert!(matches!(e, CliError::Config(_)));
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn unknown_and_duplicate_keys_rejected() {
    assert!(matches!(
        RunConfig::parse_str("colour = blue"),
        Err(CliError::Config(_))
    ));
    assert!(matches!(
        RunConfig::parse_str("dt = 0.05\ndt = 0.02"),
        Err(CliError::Config(_))
    ));
    assert!(matches!(
        RunConfig::parse_str("just some words"),
        Err(CliError::Config(_))
    ));
    assert!(matches!(
        RunConfig::parse_str("n_r = many"),
        Err(CliError::Config(_))
    ));
}

#[test]
fn missing_file_is_an_io_error() {
    let e = RunConfig::load(std::path::Path::new("/nonexistent/vpland.cfg")).unwrap_err();
    assert_eq!(e.exit_code(), 5);
}

#[test]
fn hash_ignores_output_dir_and_workers_only() {
    let base = RunConfig::default();
    let mut other = base.clone();
    other.set("output_dir", "elsewhere").unwrap();
    other.set("workers", "3").unwrap();
    assert_eq!(base.hash(), other.hash());
    other.set("amplitude", "0.002").unwrap();
    assert_ne!(base.hash(), other.hash());
    assert_eq!(base.hash().len(), 64);
}

#[test]
fn serialization_lists_every_key() {
    let text = RunConfig::default().serialize();
    assert_eq!(text.lines().count(), KEYS.len());
    for (line, key) in text.lines().zip(KEYS) {
        assert!(line.starts_with(&format!("{key} = ")));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_inverts_serialize(
        amplitude in 0.0f64..1.0,
        dt_steps in 10usize..200,
        n_r in 4usize..300,
        width in 0.1f64..10.0,
        picard in any::<bool>(),
        filter in prop::option::of(0.5f64..8.0),
        fit_t_max in prop::option::of(20.0f64..100.0),
    ) {
        let mut cfg = RunConfig::default();
        cfg.amplitude = amplitude;
        cfg.dt = 1.0 / dt_steps as f64;
        cfg.t_max = cfg.dt * (dt_steps * 4) as f64;
        cfg.n_r = n_r;
        cfg.spatial_width = width;
        cfg.set("mode", if picard { "picard" } else { "direct" }).unwrap();
        cfg.filter_k_late = filter;
        cfg.fit_t_max = fit_t_max;
        let back = RunConfig::parse_str(&cfg.serialize()).unwrap();
        prop_assert_eq!(back.serialize(), cfg.serialize());
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back.amplitude, cfg.amplitude);
        prop_assert_eq!(back.dt, cfg.dt);
    }
}
