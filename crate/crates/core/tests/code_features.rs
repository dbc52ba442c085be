use bspace::ceg::{extract_features, IndentTreeProvider};

const FIXTURE: &str = include_str!("fixtures/adaptive_es.py");

// Expected counts come from CPython 3.10 `tokenize` over the same file:
// NAME, OP, NUMBER and STRING tokens; layout tokens and comments excluded.
const PY_TOKENS: usize = 424;
const PY_DISTINCT_NAMES: usize = 46;
const PY_BRANCH_NAMES: usize = 10;

#[test]
fn fixture_counts_match_python_tokenizer() {
    assert_eq!(FIXTURE.lines().count(), 50);
    let f = extract_features(FIXTURE, None).unwrap();
    assert_eq!(f.token_count, PY_TOKENS);
    assert_eq!(f.distinct_identifiers, PY_DISTINCT_NAMES);
    assert_eq!(f.cyclomatic_estimate, 1 + PY_BRANCH_NAMES);
    assert!(f.ast_nodes.is_none());
}

#[test]
fn structural_features_of_fixture() {
    let f = extract_features(FIXTURE, Some(&IndentTreeProvider)).unwrap();
    // one leaf per token hangs below the statement nodes
    assert!(f.ast_nodes.unwrap() > PY_TOKENS);
    assert_eq!(f.ast_edges.unwrap(), f.ast_nodes.unwrap() - 1);
    // __init__ (5), __call__ (2), log (3)
    assert_eq!(f.parameter_count, Some(10));
}
