//! Property tests over generated values.

use std::collections::BTreeSet;

use proptest::prelude::*;

use spanline::domination::DominationRule;
use spanline::regexformula::{parse, RegexFormula};
use spanline::skyline::skyline_filter;
use spanline::spancore::{Alphabet, Mapping, Span, Var};

fn ab() -> Alphabet {
    Alphabet::from_letters("ab")
}

fn arb_formula() -> impl Strategy<Value = RegexFormula> {
    let leaf = prop_oneof![
        Just(RegexFormula::Empty),
        Just(RegexFormula::Epsilon),
        Just(RegexFormula::Letter('a')),
        Just(RegexFormula::Letter('b')),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(l, r)| RegexFormula::concat(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| RegexFormula::alt(l, r)),
            inner.clone().prop_map(RegexFormula::star),
            // variable names must not start with an alphabet letter (the
            // letter reading wins in unspaced text, see the grammar notes)
            ("[c-z][a-z]{0,2}", inner).prop_map(|(name, e)| {
                RegexFormula::capture(Var::new(&name), e)
            }),
        ]
    })
}

fn arb_span(doc_len: usize) -> impl Strategy<Value = Span> {
    (0..=doc_len).prop_flat_map(move |b| (b..=doc_len).prop_map(move |e| Span::new(b, e)))
}

fn arb_mapping(doc_len: usize) -> impl Strategy<Value = Mapping> {
    proptest::collection::btree_map(
        prop_oneof![Just(Var::new("x")), Just(Var::new("y")), Just(Var::new("z"))],
        arb_span(doc_len),
        0..=3,
    )
    .prop_map(Mapping::from_pairs)
}

proptest! {
    /// Pretty-printing then reparsing reproduces the AST.
    #[test]
    fn formula_display_round_trips(e in arb_formula()) {
        let printed = e.to_string();
        let reparsed = parse(&printed, &ab()).unwrap();
        prop_assert_eq!(e, reparsed, "printed as {}", printed);
    }

    /// Covering spans contain both operands and disjointness is symmetric.
    #[test]
    fn span_cover_and_disjointness(s in arb_span(8), t in arb_span(8)) {
        let c = s.cover(t);
        prop_assert!(s.included_in(c) && t.included_in(c));
        prop_assert_eq!(s.disjoint(t), t.disjoint(s));
        if s.overlaps(t) {
            // a non-empty common span exists
            let b = s.begin().max(t.begin());
            let e = s.end().min(t.end());
            prop_assert!(b < e);
            prop_assert!(Span::new(b, e).included_in(s) && Span::new(b, e).included_in(t));
        }
    }

    /// The skyline filter is idempotent and keeps a subset, for arbitrary
    /// externally supplied mapping sets.
    #[test]
    fn skyline_filter_idempotent(maps in proptest::collection::btree_set(arb_mapping(4), 0..8)) {
        let d = ab().document("abab").unwrap();
        let rule = DominationRule::native("varinc").unwrap();
        let once = skyline_filter(&maps, &d, &rule).unwrap();
        prop_assert!(once.is_subset(&maps));
        let twice = skyline_filter(&once, &d, &rule).unwrap();
        prop_assert_eq!(once, twice);
    }

    /// Compatibility is symmetric, reflexive, and merge realizes the join
    /// of compatible mappings.
    #[test]
    fn mapping_compatibility(m1 in arb_mapping(5), m2 in arb_mapping(5)) {
        prop_assert!(m1.compatible(&m1));
        prop_assert_eq!(m1.compatible(&m2), m2.compatible(&m1));
        if m1.compatible(&m2) {
            let merged = m1.merge(&m2).unwrap();
            prop_assert!(m1.iter().all(|(v, s)| merged.get(v) == Some(s)));
            prop_assert!(m2.iter().all(|(v, s)| merged.get(v) == Some(s)));
            prop_assert_eq!(merged.len(), m1.domain_set().union(&m2.domain_set()).count());
        }
    }
}

// Compiled formulas always pass the sequentiality checker (when they
// compile at all), and evaluation agrees with the recursive-match oracle.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn compile_certifies_sequentiality(e in arb_formula(), text in "[ab]{0,4}") {
        if let Ok(va) = e.compile(&ab()) {
            prop_assert!(va.flags().sequential);
            let d = ab().document(&text).unwrap();
            let got = spanline::eval::evaluate(&va, &d).unwrap();
            let expected = spanline::genbench::oracles::naive_regex_eval(&e, &d);
            prop_assert_eq!(got, expected);
        }
    }
}

#[test]
fn formula_capture_count_matches_variables() {
    // deterministic spot check kept outside proptest: capture set equals
    // the declared variable set of the compiled automaton
    let e = parse("x{a} (y{b}|eps) z{a*}", &ab()).unwrap();
    let va = e.compile(&ab()).unwrap();
    let expected: BTreeSet<Var> = ["x", "y", "z"].iter().map(|v| Var::new(v)).collect();
    assert_eq!(va.variables(), &expected);
}
