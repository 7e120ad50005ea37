use super::*;
use proptest::prelude::*;

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn chain(pairs: &[(Dim, &str)]) -> Chain {
    pairs.iter().map(|(d, v)| (*d, v.to_string())).collect()
}

const S: Dim = Dim::Settings;
const P: Dim = Dim::Status;

/// `z` narrows on settings and ignores registration status.
fn metric_z(dims: &Dimensions) -> MetricDenotation {
    let mut rows = vec![(chain(&[]), set(&["z_cs", "z_rs"]))];
    for s in ["higraph", "mmedia"] {
        let zs = format!("z_{s}");
        rows.push((chain(&[(S, s)]), set(&[&zs])));
        for p in ["registered", "unregistered", "corporate"] {
            rows.push((chain(&[(S, s), (P, p)]), set(&[&zs])));
        }
    }
    MetricDenotation::new("z", vec![S, P], rows, None, dims).unwrap()
}

/// `q` narrows on both settings and status.
fn metric_q(dims: &Dimensions) -> MetricDenotation {
    let statuses = ["registered", "unregistered", "corporate"];
    let all: Vec<String> = ["higraph", "mmedia"]
        .iter()
        .flat_map(|s| statuses.iter().map(move |p| format!("q_{s}_{p}")))
        .collect();
    let mut rows = vec![(chain(&[]), all.iter().cloned().collect())];
    for s in ["higraph", "mmedia"] {
        let per_s: BTreeSet<String> = statuses.iter().map(|p| format!("q_{s}_{p}")).collect();
        rows.push((chain(&[(S, s)]), per_s));
        for p in statuses {
            rows.push((chain(&[(S, s), (P, p)]), set(&[&format!("q_{s}_{p}")])));
        }
    }
    MetricDenotation::new("q", vec![S, P], rows, None, dims).unwrap()
}

#[test]
fn z_narrows_on_settings_only() {
    let dims = Dimensions::default();
    let z = metric_z(&dims);
    assert_eq!(z.apply_assignment(&chain(&[(S, "higraph")]), &dims).unwrap(), &set(&["z_higraph"]));
    assert_eq!(
        z.apply_assignment(&chain(&[(S, "higraph"), (P, "registered")]), &dims).unwrap(),
        &set(&["z_higraph"])
    );
    assert_eq!(z.apply_assignment(&[], &dims).unwrap(), &set(&["z_cs", "z_rs"]));
    assert_eq!(z.saturation_level(&dims).unwrap(), 1);
}

#[test]
fn q_refines_strictly_at_each_step() {
    let dims = Dimensions::default();
    let q = metric_q(&dims);
    let base = q.apply_assignment(&[], &dims).unwrap();
    let by_s = q.apply_assignment(&chain(&[(S, "mmedia")]), &dims).unwrap();
    let by_sp = q
        .apply_assignment(&chain(&[(S, "mmedia"), (P, "corporate")]), &dims)
        .unwrap();
    assert!(by_s.is_subset(base) && by_s != base);
    assert!(by_sp.is_subset(by_s) && by_sp != by_s);
    assert_eq!(q.saturation_level(&dims).unwrap(), 2);
}

#[test]
fn constant_metric_saturates_at_zero() {
    let dims = Dimensions::default();
    let mut rows = vec![(chain(&[]), set(&["q_i"]))];
    for s in ["higraph", "mmedia"] {
        rows.push((chain(&[(S, s)]), set(&["q_i"])));
    }
    let q = MetricDenotation::new("q", vec![S, P], rows, Some(0), &dims).unwrap();
    assert_eq!(q.saturation_level(&dims).unwrap(), 0);
    let leaf_only = MetricDenotation::new("l", vec![S, P], [(chain(&[]), set(&["l_i"]))], None, &dims).unwrap();
    assert_eq!(leaf_only.saturation_level(&dims).unwrap(), 0);
    assert_eq!(
        leaf_only
            .apply_assignment(&chain(&[(S, "mmedia"), (P, "corporate")]), &dims)
            .unwrap(),
        &set(&["l_i"])
    );
}

#[test]
fn chain_errors() {
    let dims = Dimensions::default();
    let z = metric_z(&dims);
    assert!(matches!(
        z.apply_assignment(&chain(&[(P, "registered")]), &dims),
        Err(ProfileError::OutOfOrderChain { .. })
    ));
    assert!(matches!(
        z.apply_assignment(&chain(&[(S, "vga")]), &dims),
        Err(ProfileError::UnknownDimensionValue { .. })
    ));
}

#[test]
fn table_validation() {
    let dims = Dimensions::default();
    let missing_prefix = MetricDenotation::new(
        "z",
        vec![S, P],
        [
            (chain(&[]), set(&["a"])),
            (chain(&[(S, "higraph"), (P, "registered")]), set(&["b"])),
        ],
        None,
        &dims,
    );
    assert_eq!(
        missing_prefix.unwrap_err(),
        ProfileError::IncompleteTable {
            metric: "z".into(),
            chain: "[s = higraph]".into()
        }
    );
    let partial_children = MetricDenotation::new(
        "z",
        vec![S, P],
        [(chain(&[]), set(&["a"])), (chain(&[(S, "higraph")]), set(&["b"]))],
        None,
        &dims,
    )
    .unwrap();
    assert!(matches!(
        partial_children.saturation_level(&dims),
        Err(ProfileError::IncompleteTable { .. })
    ));
    assert!(matches!(
        MetricDenotation::new("z", vec![S], [(chain(&[]), set(&[]))], None, &dims),
        Err(ProfileError::EmptyValueSet { .. })
    ));
    assert!(matches!(
        MetricDenotation::new("z", vec![S, S], [(chain(&[]), set(&["a"]))], None, &dims),
        Err(ProfileError::DuplicateOrder { .. })
    ));
    assert!(matches!(
        MetricDenotation::new("z", vec![Dim::Device], [(chain(&[]), set(&["a"]))], None, &dims),
        Err(ProfileError::UndeclaredDimension(Dim::Device))
    ));
    let wrong_declared = MetricDenotation::new(
        "z",
        vec![S],
        [
            (chain(&[]), set(&["a"])),
            (chain(&[(S, "higraph")]), set(&["b"])),
            (chain(&[(S, "mmedia")]), set(&["a"])),
        ],
        Some(0),
        &dims,
    );
    assert!(matches!(wrong_declared, Err(ProfileError::SaturationMismatch { actual: 1, .. })));
}

// --- brute-force saturation oracle ---------------------------------------

/// Every chain of every length up to the order length.
fn all_chains(order: &[Dim], dims: &Dimensions) -> Vec<Chain> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Chain> = vec![Vec::new()];
    for d in order {
        let mut next = Vec::new();
        for c in &frontier {
            for v in dims.alphabet(*d).unwrap() {
                let mut e = c.clone();
                e.push((*d, v.clone()));
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn brute_force_saturation(m: &MetricDenotation, dims: &Dimensions) -> usize {
    let chains = all_chains(m.order(), dims);
    (0..=m.order().len())
        .find(|&k| {
            chains.iter().filter(|c| c.len() >= k).all(|c| {
                m.apply_assignment(c, dims).unwrap() == m.apply_assignment(&c[..k], dims).unwrap()
            })
        })
        .expect("k = order length always qualifies")
}

/// Random complete-tree table: each node is a leaf or has every child.
fn random_rows(
    order: &[Dim],
    dims: &Dimensions,
    decisions: &mut impl Iterator<Item = (bool, u8)>,
) -> Vec<(Chain, BTreeSet<String>)> {
    fn values(mask: u8) -> BTreeSet<String> {
        let mask = if mask % 8 == 0 { 1 } else { mask % 8 };
        (0..3).filter(|b| mask & (1 << b) != 0).map(|b| format!("v{b}")).collect()
    }
    let mut rows = Vec::new();
    let mut stack: Vec<Chain> = vec![Vec::new()];
    while let Some(c) = stack.pop() {
        let (expand, mask) = decisions.next().unwrap_or((false, 1));
        rows.push((c.clone(), values(mask)));
        if expand && c.len() < order.len() {
            let d = order[c.len()];
            for v in dims.alphabet(d).unwrap() {
                let mut e = c.clone();
                e.push((d, v.clone()));
                stack.push(e);
            }
        }
    }
    rows
}

fn small_dims() -> impl Strategy<Value = (Dimensions, Vec<Dim>)> {
    (1usize..=3, 1usize..=3, 1usize..=3, 0usize..=3).prop_map(|(a, b, c, n)| {
        let mut dims = Dimensions::default();
        let alpha = |k: usize, tag: &str| (0..k).map(|i| format!("{tag}{i}")).collect::<BTreeSet<_>>();
        dims.declare(Dim::Settings, alpha(a, "s")).unwrap();
        dims.declare(Dim::Status, alpha(b, "p")).unwrap();
        dims.declare(Dim::Device, alpha(c, "e")).unwrap();
        let order = [Dim::Settings, Dim::Status, Dim::Device][..n].to_vec();
        (dims, order)
    })
}

proptest! {
    #[test]
    fn saturation_matches_exhaustive_scan(
        (dims, order) in small_dims(),
        decisions in proptest::collection::vec((any::<bool>(), any::<u8>()), 1..60),
    ) {
        let rows = random_rows(&order, &dims, &mut decisions.into_iter());
        let m = MetricDenotation::new("m", order, rows, None, &dims).unwrap();
        let k = m.saturation_level(&dims).unwrap();
        prop_assert_eq!(k, brute_force_saturation(&m, &dims));
        // Saturation identity on every chain beyond k.
        for c in all_chains(m.order(), &dims).iter().filter(|c| c.len() >= k) {
            prop_assert_eq!(
                m.apply_assignment(c, &dims).unwrap(),
                m.apply_assignment(&c[..k], &dims).unwrap()
            );
        }
    }
}

// --- access profiles and sessions ----------------------------------------

fn persona(rank: Rank, s: &str) -> UserProfile {
    UserProfile {
        user_id: format!("{rank}"),
        rank,
        dims: [(S, s.to_string()), (P, "corporate".to_string())].into_iter().collect(),
    }
}

fn pages() -> Vec<PageAccess> {
    let page = |name: &str, required, cond: Option<&str>, reads: &[&str]| PageAccess {
        page: name.into(),
        required,
        conditions: cond.map(|v| (S, v.to_string())).into_iter().collect(),
        reads: set(reads),
    };
    vec![
        page("home", Rank::Ordinary, None, &["hr"]),
        page("reports", Rank::Manager, None, &["finance"]),
        page("admin", Rank::Administrator, None, &["docs"]),
        page("gallery", Rank::Ordinary, Some("mmedia"), &["media"]),
    ]
}

#[test]
fn access_profiles_follow_hierarchy() {
    let reg = SessionRegistry::new();
    let pages = pages();
    let mut visible = Vec::new();
    for rank in Rank::ALL {
        let p = persona(rank, "higraph");
        let s = reg.open(p.clone());
        let ap = derive_access_profile(&p, &s, &pages).unwrap();
        assert_eq!(ap.metadata_access, rank == Rank::Administrator);
        assert_eq!(ap.session_token, s.token);
        visible.push(ap.visible_pages);
    }
    assert!(visible[0].is_subset(&visible[1]));
    assert!(visible[1].is_subset(&visible[2]));
    assert!(!visible[2].contains("gallery"));
    assert_eq!(visible[0], set(&["home"]));
    check_hierarchy(&pages, &Dimensions::default()).unwrap();
}

#[test]
fn closed_session_yields_no_profile() {
    let reg = SessionRegistry::new();
    let p = persona(Rank::Ordinary, "mmedia");
    let s = reg.open(p.clone());
    reg.close(&s.token).unwrap();
    let closed = Session {
        state: SessionState::Closed,
        ..s.clone()
    };
    assert_eq!(
        derive_access_profile(&p, &closed, &pages()).unwrap_err(),
        ProfileError::SessionClosed
    );
    assert_eq!(reg.validate(&s.token).unwrap_err(), SessionError::SessionClosed);
    assert_eq!(reg.close(&s.token).unwrap_err(), SessionError::AlreadyClosed);
    assert_eq!(reg.validate("nope").unwrap_err(), SessionError::UnknownToken);
}

#[test]
fn tokens_are_unique_and_independent() {
    let reg = SessionRegistry::new();
    let p = persona(Rank::Manager, "higraph");
    let a = reg.open(p.clone());
    let b = reg.open(p.clone());
    assert_ne!(a.token, b.token);
    reg.close(&a.token).unwrap();
    assert!(reg.validate(&b.token).is_ok());

    let tokens: std::collections::HashSet<String> = (0..1000).map(|_| reg.open(p.clone()).token).collect();
    assert_eq!(tokens.len(), 1000);
    assert!(tokens.iter().all(|t| t.len() == 32));
}

#[test]
fn profile_validation() {
    let dims = Dimensions::default();
    assert!(persona(Rank::Ordinary, "higraph").validate(&dims).is_ok());
    assert!(matches!(
        persona(Rank::Ordinary, "vga").validate(&dims),
        Err(ProfileError::UnknownDimensionValue { .. })
    ));
    let mut missing = persona(Rank::Ordinary, "higraph");
    missing.dims.remove(&P);
    assert!(matches!(missing.validate(&dims), Err(ProfileError::MissingDimension { .. })));
}
