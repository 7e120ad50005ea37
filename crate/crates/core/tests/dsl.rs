
use portalis_core::dsl::{self, Decl, DeclKind, Ident, MetricRow, Schema, SeedItem, Span};
use portalis_core::engine::Engine;
use portalis_core::events::{Action, Expr};
use portalis_core::frames::{AtomicFrame, FramePattern, Term};
use portalis_core::portal::ItemExpr;
use portalis_core::predicate::{CmpOp, Operand, Predicate};
use portalis_core::profile::{Dim, Rank};
use portalis_core::value::{Kind, Value};
use portalis_core::warehouse::RepoKind;
use proptest::prelude::*;

fn demo_engine() -> Engine {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/demo.pds")).unwrap();
    dsl::load(&Engine::new(), &dsl::parse(&text).unwrap()).unwrap()
}

#[test]
fn empty_file_is_empty_schema() {
    assert_eq!(dsl::parse("").unwrap(), Schema::default());
    assert_eq!(dsl::print(&Schema::default()), "");
}

#[test]
fn single_concept_shape() {
    let s = dsl::parse("concept Visitor (status: text)").unwrap();
    let expected = Schema {
        decls: vec![Decl {
            span: Span::default(),
            kind: DeclKind::Concept {
                name: Ident::new("Visitor"),
                fields: vec![(Ident::new("status"), Kind::Text)],
            },
        }],
    };
    assert_eq!(s, expected);
}

#[test]
fn dangling_group_is_reported_at_its_paren() {
    let d = dsl::parse("concept Visitor (status:").unwrap_err();
    assert_eq!(d.len(), 1);
    assert_eq!((d[0].line, d[0].column), (1, 17));
    assert_eq!(d[0].lexeme, "(");
}

#[test]
fn non_utf8_is_one_encoding_error() {
    let d = dsl::parse_bytes(&[b'c', 0xff, 0xfe]).unwrap_err();
    assert_eq!(d.len(), 1);
    assert!(d[0].message.starts_with("EncodingError"));
}

#[test]
fn spans_do_not_affect_printing() {
    let a = dsl::parse("relation r\nconcept C (x: integer)").unwrap();
    let b = dsl::parse("\n\n   relation   r\n\n\nconcept C(x:integer)").unwrap();
    assert_eq!(dsl::print(&a), dsl::print(&b));
}

#[test]
fn undeclared_concept_is_one_error_and_changes_nothing() {
    let engine = demo_engine();
    let before = engine.hashes();
    let schema = dsl::parse("individual ghost : Phantom { x = 1 }").unwrap();
    let d = dsl::load(&engine, &schema).unwrap_err();
    assert_eq!(d.len(), 1, "{d:?}");
    assert_eq!((d[0].line, d[0].column), (1, 20));
    assert_eq!(engine.hashes(), before);
}

#[test]
fn missing_prefix_names_the_chain() {
    let schema = dsl::parse(
        "metric m order (s, p) {\n    [] -> {a},\n    [s = higraph, p = registered] -> {b}\n}",
    )
    .unwrap();
    let d = dsl::load(&Engine::new(), &schema).unwrap_err();
    assert_eq!(d.len(), 1);
    assert!(d[0].message.contains("s = higraph"), "{}", d[0].message);
}

#[test]
fn load_into_keeps_engine_on_failure() {
    let mut engine = demo_engine();
    let before = engine.clone();
    // The first declaration is fine, the second refers to nothing.
    let schema = dsl::parse("relation fresh\nframe fresh(alice, nobody)").unwrap();
    assert!(dsl::load_into(&mut engine, &schema).is_err());
    assert_eq!(engine, before);
    assert!(!engine.frames().relations().contains("fresh"));
}

#[test]
fn semantic_errors_carry_positions() {
    let cases = [
        ("page p requires ordinary { item bogus }", "catalog"),
        ("page p requires ordinary when s = neon {}", "neon"),
        ("script x on e { refresh nowhere }", "nowhere"),
        ("concept A (b: ref B)", "undeclared concept"),
        ("profile u { rank = manager, s = higraph }", "p"),
        ("relation r\nrelation r", "r"),
        ("metric m order (s) saturates 0 {\n [] -> {a},\n [s = higraph] -> {b},\n [s = mmedia] -> {a}\n}", "saturat"),
        ("concept C (n: integer)\nindividual c : C { n = \"x\" }", "expects"),
        ("concept C (n: integer)\nindividual c : C { n = 1 }\nscript s on go { transition c { n = 2 } }", "hook"),
    ];
    for (text, fragment) in cases {
        let schema = dsl::parse(text).unwrap_or_else(|d| panic!("{text}: {d:?}"));
        let d = dsl::load(&Engine::new(), &schema).unwrap_err();
        assert!(!d.is_empty());
        assert!(d.iter().all(|x| x.line >= 1 && x.column >= 1), "{text}: {d:?}");
        assert!(
            d.iter().any(|x| x.message.contains(fragment)),
            "{text}: {d:?}"
        );
    }
}

#[test]
fn deep_nesting_is_a_diagnostic() {
    let text = format!("page p requires ordinary {{ item count? {{C | {}true{} }} }}", "(".repeat(10_000), ")".repeat(10_000));
    let d = dsl::parse(&text).unwrap_err();
    assert!(d[0].message.contains("nest"), "{:?}", d[0]);
    let nots = format!("page p requires ordinary {{ item count? {{C | {}true }} }}", "not ".repeat(10_000));
    assert!(dsl::parse(&nots).is_err());
}

// Generated well-formed schemas.

fn name() -> impl Strategy<Value = String> {
    "[a-z][a-zA-Z0-9_]{0,6}".prop_filter("keyword", |s| !dsl::is_keyword(s))
}

fn ident() -> impl Strategy<Value = Ident> {
    name().prop_map(Ident::new)
}

fn dim() -> impl Strategy<Value = Dim> {
    prop::sample::select(vec![Dim::Settings, Dim::Status, Dim::Browser, Dim::Device])
}

fn rank() -> impl Strategy<Value = Rank> {
    prop::sample::select(Rank::ALL.to_vec())
}

fn literal() -> impl Strategy<Value = Value> {
    prop_oneof![
        any::<i64>().prop_map(Value::Integer),
        any::<f64>().prop_filter("finite", |x| x.is_finite()).prop_map(Value::Real),
        "\\PC{0,8}".prop_map(Value::Text),
        any::<bool>().prop_map(Value::Boolean),
    ]
}

fn kind() -> impl Strategy<Value = Kind> {
    prop_oneof![
        Just(Kind::Integer),
        Just(Kind::Real),
        Just(Kind::Text),
        Just(Kind::Boolean),
        Just(Kind::Media),
        name().prop_map(Kind::Ref),
    ]
}

fn operand() -> impl Strategy<Value = Operand> {
    prop_oneof![name().prop_map(Operand::Field), literal().prop_map(Operand::Literal)]
}

fn predicate() -> impl Strategy<Value = Predicate> {
    let leaf = prop_oneof![
        any::<bool>().prop_map(Predicate::Const),
        name().prop_map(Predicate::Flag),
        (prop::sample::select(CmpOp::ALL.to_vec()), operand(), operand())
            .prop_map(|(op, left, right)| Predicate::Compare { op, left, right }),
        (operand(), prop::collection::vec(literal(), 0..3)).prop_map(|(operand, set)| Predicate::Member { operand, set }),
    ];
    leaf.prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
            inner.prop_map(Predicate::not),
        ]
    })
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        literal().prop_map(Expr::Literal),
        name().prop_map(Expr::Arg),
        name().prop_map(Expr::Field),
    ];
    leaf.prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
        ]
    })
}

fn frame() -> impl Strategy<Value = AtomicFrame> {
    (name(), name(), name()).prop_map(|(r, a, b)| AtomicFrame::new(r, a, b))
}

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![name().prop_map(Term::Const), name().prop_map(Term::Var)]
}

fn action() -> impl Strategy<Value = Action> {
    prop_oneof![
        (name(), name(), expr()).prop_map(|(page, field, expr)| Action::Set { page, field, expr }),
        name().prop_map(|page| Action::Refresh { page }),
        (name(), prop::collection::btree_map(name(), expr(), 0..3))
            .prop_map(|(individual, values)| Action::Transition { individual, values }),
    ]
}

fn item() -> impl Strategy<Value = ItemExpr> {
    prop_oneof![
        name().prop_map(|key| ItemExpr::Key { key }),
        (name(), term(), term()).prop_map(|(relation, subject, object)| ItemExpr::Query {
            pattern: FramePattern { relation, subject, object }
        }),
        (name(), predicate()).prop_map(|(concept, predicate)| ItemExpr::Count { concept, predicate }),
    ]
}

fn unique_dims(max: usize) -> impl Strategy<Value = Vec<Dim>> {
    prop::sample::subsequence(vec![Dim::Settings, Dim::Status, Dim::Browser, Dim::Device], 0..=max).prop_shuffle()
}

fn assignments() -> impl Strategy<Value = Vec<(Ident, Value)>> {
    prop::collection::vec((ident(), literal()), 0..3)
}

fn decl_kind() -> impl Strategy<Value = DeclKind> {
    prop_oneof![
        (ident(), prop::collection::vec((ident(), kind()), 1..4)).prop_map(|(name, fields)| DeclKind::Concept { name, fields }),
        (ident(), ident(), assignments()).prop_map(|(name, concept, values)| DeclKind::Individual { name, concept, values }),
        ident().prop_map(|name| DeclKind::Relation { name }),
        frame().prop_map(|frame| DeclKind::Frame { frame }),
        (dim(), prop::collection::vec(ident(), 1..4)).prop_map(|(dim, values)| DeclKind::Dimension { dim, values }),
        (ident(), rank(), unique_dims(4), prop::collection::vec(ident(), 4)).prop_map(|(name, rank, ds, vs)| {
            DeclKind::Profile { name, rank, dims: ds.into_iter().zip(vs).collect() }
        }),
        (
            ident(),
            prop::collection::vec(dim(), 1..3),
            prop::option::of(0usize..4),
            prop::collection::vec((prop::collection::vec((dim(), ident()), 0..3), prop::collection::vec(ident(), 0..3)), 1..3),
        )
            .prop_map(|(name, order, saturates, rows)| DeclKind::Metric {
                name,
                order,
                saturates,
                rows: rows.into_iter().map(|(chain, values)| MetricRow { chain, values }).collect(),
            }),
        (ident(), any::<bool>(), ident(), prop::collection::vec(frame(), 0..3), prop::collection::vec(action(), 0..3))
            .prop_map(|(name, hook, trigger, scenario, actions)| DeclKind::Script { name, hook, trigger, scenario, actions }),
        (ident(), prop::sample::select(RepoKind::ALL.to_vec()), prop::collection::vec((ident(), assignments()), 0..3))
            .prop_map(|(name, kind, items)| DeclKind::Source {
                name,
                kind,
                items: items.into_iter().map(|(id, values)| SeedItem { id, values }).collect(),
            }),
        (ident(), rank(), unique_dims(4), prop::collection::vec(ident(), 4), prop::collection::vec(item(), 0..4))
            .prop_map(|(name, required, ds, vs, items)| DeclKind::Page {
                name,
                required,
                conditions: ds.into_iter().zip(vs).collect(),
                items,
            }),
    ]
}

fn schema() -> impl Strategy<Value = Schema> {
    prop::collection::vec(decl_kind(), 0..8).prop_map(|kinds| Schema {
        decls: kinds.into_iter().map(|kind| Decl { span: Span::default(), kind }).collect(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn generated_schemas_round_trip(s in schema()) {
        let printed = dsl::print(&s);
        let reparsed = dsl::parse(&printed).map_err(|d| TestCaseError::fail(format!("{d:?}\n{printed}")))?;
        prop_assert_eq!(&reparsed, &s, "{}", printed);
        prop_assert_eq!(dsl::print(&reparsed), printed);
    }

    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        check_total(&text);
    }

    #[test]
    fn token_soup_never_panics(words in prop::collection::vec(prop::sample::select(SOUP.to_vec()), 0..60)) {
        check_total(&words.join(" "));
    }

    #[test]
    fn failed_loads_leave_hashes_unchanged(extra in prop::collection::vec(decl_kind(), 1..4)) {
        let engine = demo_engine();
        let before = engine.hashes();
        let schema = Schema { decls: extra.into_iter().map(|kind| Decl { span: Span::default(), kind }).collect() };
        match dsl::load(&engine, &schema) {
            Ok(_) => {}
            Err(d) => prop_assert!(!d.is_empty()),
        }
        prop_assert_eq!(engine.hashes(), before);
    }
}

const SOUP: [&str; 40] = [
    "concept", "individual", "relation", "frame", "dimension", "profile", "metric", "order", "saturates", "script",
    "hook", "on", "page", "requires", "when", "item", "query", "count?", "source", "kind", "hr", "x", "C", "(", ")",
    "{", "}", "[", "]", ",", ":", "=", "->", "$a", "1", "-2.5e3", "\"s\"", "and", "not", "#c\n",
];

/// Parsing is total: a schema or at least one diagnostic inside the text.
fn check_total(text: &str) {
    let lines = text.split('\n').count();
    match dsl::parse(text) {
        Ok(s) => {
            let again = dsl::parse(&dsl::print(&s)).expect("printed schemas parse");
            assert_eq!(again, s);
        }
        Err(d) => {
            assert!(!d.is_empty());
            for x in d {
                assert!(x.line >= 1 && x.line <= lines, "{x:?} in {text:?}");
                assert!(x.column >= 1, "{x:?}");
            }
        }
    }
}

#[test]
fn ten_thousand_random_inputs() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
    let alphabet: Vec<char> = "concept individual relation frame page script metric (){}[],:=<>!?$.|+-#\"\\ \n\tabcxyz0123456789éλ✓"
        .chars()
        .collect();
    for i in 0..10_000 {
        let len = rng.random_range(0..120);
        let text: String = if i % 2 == 0 {
            (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
        } else {
            (0..len).map(|_| rng.random::<char>()).collect()
        };
        check_total(&text);
    }
}

#[test]
fn idents_survive_printing() {
    let s = dsl::parse("relation s\nrelation manager\nrelation hr").unwrap();
    let names: Vec<String> = s
        .decls
        .iter()
        .map(|d| match &d.kind {
            DeclKind::Relation { name } => name.name.clone(),
            _ => unreachable!(),
        })
        .collect();
    assert_eq!(names, ["s", "manager", "hr"]);
}
