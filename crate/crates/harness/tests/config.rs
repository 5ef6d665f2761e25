use std::path::{Path, PathBuf};

use evocomm::config::{DetectorKind, RendezvousMethod, Scale};
use evocomm::{load_config, parse_config, ExperimentConfig, ExperimentKind, HarnessError};

fn parse(text: &str) -> Result<ExperimentConfig, HarnessError> {
    parse_config(text, Path::new("test.json"))
}

fn invalid_field(text: &str) -> String {
    match parse(text) {
        Err(HarnessError::ConfigInvalid { field, .. }) => field,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

const MIN_BER: &str =
    r#"{"kind": "ber-sweep", "seed": 1, "repetitions": 1, "snr_db": [0], "detectors": ["zf"]}"#;

fn rendezvous_with(extra: &str) -> String {
    format!(
        r#"{{"kind": "rendezvous", "seed": 1, "repetitions": 1, "sensing_ranges_m": [25],
            "methods": ["ql", "seql"]{extra}}}"#
    )
}

#[test]
fn committed_examples_are_valid() {
    let ber = load_config(&repo_config("ber-sweep.json")).unwrap();
    assert_eq!(ber.kind(), ExperimentKind::BerSweep);
    let rdv = load_config(&repo_config("rendezvous.json")).unwrap();
    assert_eq!(rdv.kind(), ExperimentKind::Rendezvous);
}

#[test]
fn minimal_ber_sweep_gets_desk_defaults() {
    let ExperimentConfig::BerSweep(c) = parse(MIN_BER).unwrap() else {
        panic!("wrong kind");
    };
    assert_eq!(c.scale, Scale::Desk);
    assert_eq!(c.detectors, vec![DetectorKind::Zf]);
    let plan = c.plan().unwrap();
    assert_eq!(
        (plan.hidden_neurons, plan.samples, plan.symbols),
        (50, 20_000, 100_000)
    );
    assert_eq!(
        (plan.saelm.sade.population_size, plan.saelm.sade.generations),
        (100, 50)
    );
    assert_eq!(plan.saelm.sade.dims(), 5 * 50);
}

#[test]
fn paper_scale_and_overrides() {
    let text = MIN_BER.replace(
        "\"detectors\"",
        "\"scale\": \"paper\", \"symbols\": 50000, \"detectors\"",
    );
    let ExperimentConfig::BerSweep(c) = parse(&text).unwrap() else {
        panic!("wrong kind");
    };
    let plan = c.plan().unwrap();
    assert_eq!(
        (plan.hidden_neurons, plan.samples, plan.symbols),
        (1000, 100_000, 50_000)
    );
}

#[test]
fn zero_repetitions_names_the_field() {
    let e = parse(&MIN_BER.replace("\"repetitions\": 1", "\"repetitions\": 0")).unwrap_err();
    assert!(matches!(&e, HarnessError::ConfigInvalid { field, .. } if field == "repetitions"));
    assert!(e.to_string().contains("repetitions"));
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn unknown_or_missing_kind() {
    assert_eq!(
        invalid_field(&MIN_BER.replace("ber-sweep", "spectrum")),
        "kind"
    );
    assert_eq!(
        invalid_field(&MIN_BER.replace("\"kind\": \"ber-sweep\",", "")),
        "kind"
    );
    assert_eq!(
        invalid_field(&MIN_BER.replace("\"ber-sweep\"", "3")),
        "kind"
    );
    assert_eq!(invalid_field("[1, 2]"), "(top level)");
}

#[test]
fn read_parse_and_validation_errors_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let missing = load_config(&dir.path().join("absent.json")).unwrap_err();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"kind\": ").unwrap();
    let unparsable = load_config(&bad).unwrap_err();
    let invalid = parse(&MIN_BER.replace("[0]", "[]")).unwrap_err();
    assert!(matches!(missing, HarnessError::ConfigRead { .. }));
    assert!(matches!(unparsable, HarnessError::ConfigParse { .. }));
    assert!(matches!(invalid, HarnessError::ConfigInvalid { .. }));
    let msgs = [
        missing.to_string(),
        unparsable.to_string(),
        invalid.to_string(),
    ];
    assert!(msgs[0].starts_with("cannot read config"));
    assert!(msgs[1].starts_with("cannot parse config"));
    assert!(msgs[2].starts_with("invalid config: snr_db"));
    for e in [missing, unparsable, invalid] {
        assert_eq!(e.exit_code(), 2);
    }
}

#[test]
fn grid_and_list_violations_carry_paths() {
    assert_eq!(
        invalid_field(&MIN_BER.replace("[0]", "[0, 5, 0]")),
        "snr_db[2]"
    );
    assert_eq!(
        invalid_field(&MIN_BER.replace("[\"zf\"]", "[]")),
        "detectors"
    );
    assert_eq!(
        invalid_field(&MIN_BER.replace("[\"zf\"]", "[\"zf\", \"elm\", \"zf\"]")),
        "detectors[2]"
    );
    assert_eq!(
        invalid_field(&MIN_BER.replace("[\"zf\"]", "[\"mmse\"]")),
        "detectors[0]"
    );
    assert_eq!(
        invalid_field(&MIN_BER.replace("\"seed\": 1", "\"seed\": -1")),
        "seed"
    );
    assert_eq!(
        invalid_field(&MIN_BER.replace("\"seed\": 1", "\"seed\": 1, \"extra\": 2")),
        "extra"
    );
    assert_eq!(
        invalid_field(&MIN_BER.replace("\"seed\": 1", "\"seed\": 1, \"symbols\": 99")),
        "symbols"
    );
    assert_eq!(
        invalid_field(&MIN_BER.replace("\"seed\": 1", "\"seed\": 1, \"samples\": 10")),
        "samples"
    );
    assert_eq!(
        invalid_field(&MIN_BER.replace("\"seed\": 1", "\"seed\": 1, \"hidden_neurons\": 0")),
        "hidden_neurons"
    );
    assert_eq!(
        invalid_field(&MIN_BER.replace(
            "\"seed\": 1",
            "\"seed\": 1, \"sade\": {\"population_size\": 3}"
        )),
        "sade.population_size"
    );
    assert_eq!(
        invalid_field(&MIN_BER.replace("\"seed\": 1", "\"seed\": 1, \"sade\": {\"pop\": 3}")),
        "sade.pop"
    );
}

#[test]
fn rendezvous_defaults_match_the_swarm_preset() {
    let ExperimentConfig::Rendezvous(c) = parse(&rendezvous_with("")).unwrap() else {
        panic!("wrong kind");
    };
    assert_eq!(
        c.methods,
        vec![RendezvousMethod::Ql, RendezvousMethod::Seql]
    );
    let plan = c.plan().unwrap();
    let s = plan.swarm_at(15.0);
    assert_eq!((s.n_uavs, s.n_channels, s.sensing_range), (15, 3, 15.0));
    assert_eq!((s.lr, s.gamma), (0.85, 0.99));
    assert_eq!(s.clusters.len(), 3);
    assert_eq!(plan.seql.round_episodes, 50);
}

#[test]
fn rendezvous_overrides_resize_clusters() {
    let ExperimentConfig::Rendezvous(c) =
        parse(&rendezvous_with(r#", "swarm": {"n_uavs": 7}"#)).unwrap()
    else {
        panic!("wrong kind");
    };
    let clusters = c.plan().unwrap().swarm.clusters;
    assert_eq!(clusters, vec![vec![0, 1, 2], vec![3, 4], vec![5, 6]]);
}

#[test]
fn rendezvous_violations_carry_paths() {
    let base = rendezvous_with("");
    assert_eq!(
        invalid_field(&base.replace("[25]", "[25, -1]")),
        "sensing_ranges_m[1]"
    );
    assert_eq!(
        invalid_field(&base.replace("[25]", "[]")),
        "sensing_ranges_m"
    );
    assert_eq!(
        invalid_field(&base.replace("\"seql\"]", "\"ql\"]")),
        "methods[1]"
    );
    assert_eq!(
        invalid_field(&rendezvous_with(r#", "swarm": {"cell": 7}"#)),
        "swarm.cell"
    );
    assert_eq!(
        invalid_field(&rendezvous_with(r#", "swarm": {"lr": 0}"#)),
        "swarm.lr"
    );
    assert_eq!(
        invalid_field(&rendezvous_with(r#", "swarm": {"clusters": [[0], []]}"#)),
        "swarm.clusters[1]"
    );
    assert_eq!(
        invalid_field(&rendezvous_with(
            r#", "seql": {"ga": {"mutation_rate": 2}}"#
        )),
        "seql.ga.mutation_rate"
    );
    assert_eq!(
        invalid_field(&rendezvous_with(r#", "seql": {"round_episodes": 5}"#)),
        "seql.round_episodes"
    );
}

#[test]
fn short_rounds_only_matter_when_seql_runs() {
    let ql_only = rendezvous_with(r#", "seql": {"round_episodes": 5}"#).replace(", \"seql\"]", "]");
    assert!(parse(&ql_only).is_ok());
}

#[test]
fn seed_override() {
    let mut c = parse(MIN_BER).unwrap();
    c.set_seed(99);
    assert_eq!(c.seed(), 99);
}
