//! Fixtures shared by the benchmarks.

use std::collections::BTreeMap;
use std::path::Path;

use portalis_core::dsl;
use portalis_core::engine::Engine;
use portalis_core::model::{Concept, Store};
use portalis_core::value::{Kind, Value};

/// Text of the demo schema shipped with the repository.
pub fn demo_text() -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/demo.pds");
    std::fs::read_to_string(path).expect("demo schema is readable")
}

pub fn demo_engine() -> Engine {
    let schema = dsl::parse(&demo_text()).expect("demo parses");
    dsl::load(&Engine::new(), &schema).expect("demo loads")
}

/// A store with `n` `Visitor` individuals whose fields cycle through a
/// small range of values.
pub fn visitors(n: usize) -> Store {
    let concept = Concept::new(
        "Visitor",
        [
            ("age".to_string(), Kind::Integer),
            ("status".to_string(), Kind::Text),
            ("active".to_string(), Kind::Boolean),
        ],
    )
    .expect("valid concept");
    let mut store = Store::new();
    store.define_concept(concept).expect("fresh store");
    for i in 0..n {
        let values = BTreeMap::from([
            ("age".to_string(), Value::Integer((i * 7 % 90) as i64)),
            ("status".to_string(), Value::Text(["new", "gold", "idle"][i % 3].to_string())),
            ("active".to_string(), Value::Boolean(i % 2 == 0)),
        ]);
        store.create(format!("v{i}"), "Visitor", values, None).expect("valid visitor");
    }
    store
}
