use bifree::descriptor::{parse_word, ModelSpec};
use bifree::Error;

#[test]
fn json_round_trip() {
    let specs = [
        ModelSpec::ShiftedPairs { d: 2, alpha: 0.5, pairs: 2, depth: 6, seed: 5, shared: false },
        ModelSpec::ScalarPairs { pairs: 3, depth: 8, seed: 1, shared: true },
        ModelSpec::CreationExample { d: 2, families: 2, depth: 6, perturbed: true },
    ];
    for s in specs {
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(ModelSpec::from_json(&text).unwrap(), s);
    }
}

#[test]
fn defaults_and_unknown_fields() {
    let s = ModelSpec::from_json(r#"{"kind":"scalar-pairs","seed":4}"#).unwrap();
    assert_eq!(s, ModelSpec::ScalarPairs { pairs: 2, depth: 8, seed: 4, shared: false });
    assert!(ModelSpec::from_json(r#"{"kind":"scalar-pairs","seed":4,"colour":1}"#).is_err());
    assert!(ModelSpec::from_json(r#"{"kind":"nope"}"#).is_err());
}

#[test]
fn creation_example_has_eight_generators() {
    let b = ModelSpec::CreationExample { d: 2, families: 2, depth: 6, perturbed: false }.build().unwrap();
    assert_eq!(b.d(), 2);
    assert_eq!(b.families.len(), 1);
    // creation and annihilation per family, on each side
    assert_eq!(b.families[0].left.len(), 4);
    assert!(b.matrices.is_some());
}

#[test]
fn pairs_need_two_families() {
    let one = ModelSpec::ShiftedPairs { d: 1, alpha: 1.0, pairs: 1, depth: 4, seed: 0, shared: false }.build().unwrap();
    assert!(matches!(one.pairs(), Err(Error::Config(_))));
    let two = ModelSpec::ShiftedPairs { d: 1, alpha: 1.0, pairs: 2, depth: 4, seed: 0, shared: false }.build().unwrap();
    assert!(two.pairs().is_ok());
}

#[test]
fn explicit_elements() {
    let text = r#"{
        "kind": "elements", "d": 2, "depth": 4,
        "families": [
            {"name": "a",
             "left": [{"name": "x", "entries": [{"i": 0, "j": 1, "terms": [{"coef": [1, 0], "word": "l0 ls1"}]}]}],
             "right": [{"name": "y", "shift": [[[1,0],[0,0]],[[0,0],[1,0]]], "entries": [{"i": 1, "j": 1, "terms": [{"coef": [0, 2], "word": "r0"}]}]}]}
        ]
    }"#;
    let b = ModelSpec::from_json(text).unwrap().build().unwrap();
    assert_eq!(b.families[0].left[0].0, "x");
    // a shift makes the model non-pure: no scalar entries
    assert!(b.matrices.is_none());
}

#[test]
fn rejects_bad_elements() {
    let dup = r#"{"kind":"elements","d":1,"families":[{"name":"a",
        "left":[{"name":"x","entries":[]}],"right":[{"name":"x","entries":[]}]}]}"#;
    assert!(ModelSpec::from_json(dup).unwrap().build().is_err());
    assert!(parse_word("l0 q1").is_err());
    assert!(parse_word("ls3 rs0").is_ok());
}
