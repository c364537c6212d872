use proptest::prelude::*;

use skasp_core::lang::{load_sketch, parse_program, parse_sketch, ParseError, SketchProgram};

fn term() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(vec!["X", "Y", "Z"]).prop_map(String::from),
        (0i64..5).prop_map(|i| i.to_string()),
        prop::sample::select(vec!["a", "b"]).prop_map(String::from),
    ]
}

fn atom() -> impl Strategy<Value = String> {
    prop_oneof![
        term().prop_map(|t| format!("p({t})")),
        (term(), term()).prop_map(|(a, b)| format!("q({a},{b})")),
        (term(), term()).prop_map(|(a, b)| format!("?s({a},{b})")),
    ]
}

fn literal() -> impl Strategy<Value = String> {
    let op = prop::sample::select(vec!["=", "!=", "<", ">=", "?="]);
    let arith = prop::sample::select(vec!["+", "-", "*", "?+"]);
    prop_oneof![
        atom(),
        atom().prop_map(|a| format!("not {a}")),
        atom().prop_map(|a| format!("?not {a}")),
        (term(), op.clone(), term()).prop_map(|(a, o, b)| format!("{a} {o} {b}")),
        (term(), arith, term(), op, term()).prop_map(|(a, x, b, o, c)| format!("{a} {x} {b} {o} {c}")),
        (prop::sample::select(vec!["#count", "#sum", "?#"]), term()).prop_map(|(f, t)| format!("N = {f}{{X,Y : q(X,Y), p({t})}}")),
    ]
}

fn rule() -> impl Strategy<Value = String> {
    let head = prop_oneof![
        Just(String::new()),
        term().prop_map(|t| format!("h({t}) ")),
    ];
    (head, prop::collection::vec(literal(), 1..4)).prop_map(|(h, body)| format!("{h}:- {}.", body.join(", ")))
}

fn sketch() -> impl Strategy<Value = String> {
    (prop::collection::vec(rule(), 1..5), prop::collection::vec(atom().prop_filter("ground", |a| !a.contains('?')), 0..3))
        .prop_map(|(rules, ex)| {
            let ex: Vec<String> = ex.iter().map(|a| a.replace(['X', 'Y', 'Z'], "1")).collect();
            let mut s = format!("[SKETCH]\n{}\n[SKETCHEDVAR]\n?s/2 : q, r\n", rules.join("\n"));
            if !ex.is_empty() {
                s.push_str(&format!("[EXAMPLES]\npositive: {}.\nnegative: {}.\n", ex.join(". "), ex[0]));
            }
            s
        })
}

/// Source positions differ between the original and the printed text.
fn without_lines(mut p: SketchProgram) -> SketchProgram {
    p.rules.iter_mut().for_each(|r| r.line = 0);
    p.declarations.iter_mut().for_each(|d| d.line = 0);
    p.preferences.iter_mut().for_each(|e| e.line = 0);
    for e in p.examples.positives.iter_mut().chain(p.examples.negatives.iter_mut()) {
        e.line = 0;
    }
    p
}

proptest! {
    #[test]
    fn print_parse_round_trip(text in sketch()) {
        let first = parse_sketch(&text).unwrap();
        let printed = first.to_string();
        let second = parse_sketch(&printed).unwrap();
        prop_assert_eq!(second.to_string(), printed);
        prop_assert_eq!(without_lines(second), without_lines(first));
    }
}

fn standard_rule() -> impl Strategy<Value = String> {
    let lit = prop_oneof![
        (term(), term()).prop_map(|(a, b)| format!("q({a},{b})")),
        term().prop_map(|t| format!("not p({t})")),
        (term(), term()).prop_map(|(a, b)| format!("{a} < {b} + 1")),
    ];
    let head = prop_oneof![
        Just(String::new()),
        term().prop_map(|t| format!("h({t}) ")),
        Just("1 { c(X) : p(X); d(a) } 1 ".to_string()),
    ];
    (head, prop::collection::vec(lit, 0..3)).prop_map(|(h, body)| {
        if body.is_empty() {
            if h.is_empty() { "p(1).".to_string() } else { format!("{}.", h.trim_end()) }
        } else {
            format!("{h}:- {}.", body.join(", "))
        }
    })
}

proptest! {
    #[test]
    fn standard_programs_round_trip(rules in prop::collection::vec(standard_rule(), 1..5)) {
        let first = parse_program(&rules.join("\n")).unwrap();
        let printed: Vec<String> = first.iter().map(ToString::to_string).collect();
        let second = parse_program(&printed.join("\n")).unwrap();
        let reprinted: Vec<String> = second.iter().map(ToString::to_string).collect();
        prop_assert_eq!(reprinted, printed);
    }
}

#[test]
fn bundled_problems_round_trip() {
    for name in skasp_core::bench::problem_names() {
        let p = skasp_core::bench::problem(name).unwrap();
        let again = load_sketch(&p.program.to_string()).unwrap();
        assert_eq!(without_lines(again), without_lines(p.program.clone()), "{name}");
    }
}

#[test]
fn errors_carry_positions() {
    let err = parse_sketch("[SKETCH]\n:- p(X),, q(X).\n").unwrap_err();
    assert!(matches!(err, ParseError::Syntax { line: 2, .. }), "{err:?}");
    let err = parse_sketch("[SKETCH]\n:- ?t(X).\n").unwrap_err();
    assert!(matches!(err, ParseError::UndeclaredSketchVar { line: 2, .. }), "{err:?}");
    assert!(load_sketch("[SKETCH]\nh(X) :- not p(X).\n").is_err());
}
