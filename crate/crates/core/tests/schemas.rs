use std::path::PathBuf;

use portalis_core::dsl;
use portalis_core::engine::Engine;

fn schema_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(rel)
}

fn load(rel: &str) -> Engine {
    let text = std::fs::read_to_string(schema_path(rel)).unwrap();
    let schema = dsl::parse(&text).unwrap_or_else(|d| panic!("{d:?}"));
    dsl::load(&Engine::new(), &schema).unwrap_or_else(|d| panic!("{d:?}"))
}

#[test]
fn demo_loads_with_expected_counts() {
    let e = load("demo.pds");
    assert_eq!(e.warehouse().repositories().count(), 4);
    assert_eq!(e.profiles().len(), 3);
    let metrics: Vec<&str> = e.metrics().keys().map(String::as_str).collect();
    assert_eq!(metrics, ["l", "n", "q", "r", "z"]);
}

#[test]
fn demo_saturation_levels() {
    let e = load("demo.pds");
    let sat = |m: &str| e.metric(m).unwrap().saturation_level(e.dims()).unwrap();
    assert_eq!((sat("z"), sat("r"), sat("q")), (1, 1, 2));
    let d = load("degenerate_q.pds");
    assert_eq!(d.metric("q").unwrap().saturation_level(d.dims()).unwrap(), 0);
}

fn corpus() -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(schema_path("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "pds"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.display().to_string(), std::fs::read_to_string(&p).unwrap()))
        .collect()
}

#[test]
fn corpus_has_twenty_files() {
    assert!(corpus().len() >= 20);
}

#[test]
fn corpus_round_trips_through_printer() {
    for (path, text) in corpus() {
        let first = dsl::parse(&text).unwrap_or_else(|d| panic!("{path}: {d:?}"));
        let printed = dsl::print(&first);
        let second = dsl::parse(&printed).unwrap_or_else(|d| panic!("{path} reprinted: {d:?}\n{printed}"));
        assert_eq!(first, second, "{path}");
        assert_eq!(dsl::print(&second), printed, "{path}: printing is not idempotent");
    }
}

#[test]
fn corpus_loads() {
    for (path, text) in corpus() {
        let schema = dsl::parse(&text).unwrap();
        if let Err(d) = dsl::load(&Engine::new(), &schema) {
            panic!("{path}: {d:?}");
        }
    }
}
