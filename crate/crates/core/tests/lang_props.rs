//! Parser, formatter and lexer properties over generated formulas.

use bxl_core::lang::{format, parse_formula, tokenize, TokenKind};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u32..100_000).prop_map(|n| format!("{n}")),
        (0u32..10_000, 1u32..100).prop_map(|(a, b)| format!("{a}.{b}")),
        "[a-z ]{0,6}".prop_map(|s| format!("\"{s}\"")),
        Just("\"say \"\"hi\"\"\"".to_string()),
        prop_oneof![Just("TRUE"), Just("FALSE"), Just("#N/A"), Just("#VALUE!"), Just("#DIV/0!")].prop_map(String::from),
        ("[A-H]", 1u32..200).prop_map(|(c, r)| format!("{c}{r}")),
        ("[A-C]", 1u32..50, "[D-F]", 50u32..99).prop_map(|(a, r, b, s)| format!("{a}{r}:{b}{s}")),
        (1u32..9).prop_map(|r| format!("$A${r}#")),
        (1u32..9).prop_map(|r| format!("'My Sheet'!B{r}")),
        "nm_[a-z]{1,4}",
        Just("tblBI[[ID]:[Expense Description]]".to_string()),
        Just("tblBI[First Date]".to_string()),
        Just("{1,2;3,4}".to_string()),
        Just("{\"a\",TRUE,-1.5}".to_string()),
    ]
}

fn expr() -> impl Strategy<Value = String> {
    leaf().prop_recursive(5, 48, 4, |inner| {
        let op = prop_oneof![
            Just("+"), Just("-"), Just("*"), Just("/"), Just("^"), Just("&"),
            Just("="), Just("<>"), Just("<"), Just(">="),
        ];
        prop_oneof![
            (inner.clone(), op, inner.clone()).prop_map(|(a, o, b)| format!("{a} {o} {b}")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.clone().prop_map(|a| format!("({a})%")),
            inner.clone().prop_map(|a| format!("({a})")),
            prop::collection::vec(inner.clone(), 1..4).prop_map(|v| format!("SUM({})", v.join(", "))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("IF({a},,{b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("LET(nm_x, {a}, nm_x + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("LAMBDA(p, [q], p * {a})({b})")),
            inner.clone().prop_map(|a| format!("BXD.Periodsλ({a}, 1, \"M\")")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn format_round_trips(src in expr()) {
        let first = parse_formula(&format!("={src}")).unwrap();
        let text = format(&first);
        let again = parse_formula(&text).unwrap();
        prop_assert_eq!(&again, &first, "{} formatted as {}", src, text);
        prop_assert_eq!(format(&again), text);
    }

    #[test]
    fn spans_cover_source_minus_whitespace(src in expr()) {
        let source = format!("={src}");
        let tokens = tokenize(&source).unwrap();
        let mut at = 1;
        for t in &tokens {
            prop_assert!(t.span.start >= at, "overlap at {:?}", t);
            prop_assert!(source[at..t.span.start].chars().all(char::is_whitespace), "gap before {:?}", t);
            prop_assert_eq!(&source[t.span.start..t.span.end], t.lexeme.as_str());
            at = t.span.end;
        }
        prop_assert!(source[at..].trim().is_empty());
        prop_assert!(tokens.iter().all(|t| t.kind != TokenKind::Comment));
    }
}
