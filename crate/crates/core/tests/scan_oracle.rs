//! Exhaustive check of the SCAN interpreter against a separately written
//! word-level interpreter.

use std::collections::BTreeSet;

use semir::scan::{
    all_commands, interpret, parse_command, scan_lir_expand, scan_to_lir, scan_to_rir, strip_brackets, ActionSeq,
};

fn turn(dir: &str) -> &'static str {
    match dir {
        "left" => "LTURN",
        "right" => "RTURN",
        other => panic!("bad direction {other}"),
    }
}

fn verb(word: &str) -> Option<&'static str> {
    match word {
        "walk" => Some("WALK"),
        "look" => Some("LOOK"),
        "run" => Some("RUN"),
        "jump" => Some("JUMP"),
        "turn" => None,
        other => panic!("bad verb {other}"),
    }
}

fn oracle_phrase(words: &[&str]) -> Vec<&'static str> {
    let v = verb(words[0]);
    let body: Vec<&'static str> = v.into_iter().collect();
    match words[1..] {
        [] => body,
        [d] => [vec![turn(d)], body].concat(),
        ["opposite", d] => [vec![turn(d), turn(d)], body].concat(),
        ["around", d] => {
            let mut out = Vec::new();
            for _ in 0..4 {
                out.push(turn(d));
                out.extend(&body);
            }
            out
        }
        _ => panic!("bad phrase {words:?}"),
    }
}

fn oracle_sentence(words: &[&str]) -> Vec<&'static str> {
    let (n, rest) = match words.last() {
        Some(&"twice") => (2, &words[..words.len() - 1]),
        Some(&"thrice") => (3, &words[..words.len() - 1]),
        _ => (1, words),
    };
    oracle_phrase(rest).repeat(n)
}

fn oracle(command: &str) -> String {
    let words: Vec<&str> = command.split(' ').collect();
    let out = if let Some(i) = words.iter().position(|w| *w == "and") {
        [oracle_sentence(&words[..i]), oracle_sentence(&words[i + 1..])].concat()
    } else if let Some(i) = words.iter().position(|w| *w == "after") {
        [oracle_sentence(&words[i + 1..]), oracle_sentence(&words[..i])].concat()
    } else {
        oracle_sentence(&words)
    };
    out.join(" ")
}

#[test]
fn grammar_enumeration_is_complete_and_distinct() {
    let all = all_commands();
    let distinct: BTreeSet<&String> = all.iter().collect();
    assert_eq!(distinct.len(), all.len());
    // 4 verbs in 7 forms each, plus 6 turn forms
    let phrases = 4 * 7 + 6;
    let sentences = phrases * 3;
    assert_eq!(all.len(), sentences + 2 * sentences * sentences);
}

#[test]
fn interpreter_matches_oracle_on_every_command() {
    for c in all_commands() {
        let parsed = parse_command(&c).unwrap();
        let got = interpret(&parsed);
        assert_eq!(got.to_string(), oracle(&c), "{c}");
    }
}

#[test]
fn bracket_stripping_inverts_rir_on_every_command() {
    for c in all_commands() {
        let parsed = parse_command(&c).unwrap();
        let y = interpret(&parsed);
        let z = scan_to_rir(&parsed);
        assert_eq!(strip_brackets(&z).unwrap(), y, "{c}");
    }
}

#[test]
fn lir_expansion_inverts_lir_on_every_command() {
    for c in all_commands() {
        let y: ActionSeq = interpret(&parse_command(&c).unwrap());
        let z = scan_to_lir(&y);
        assert_eq!(scan_lir_expand(&z).unwrap(), y, "{c}");
    }
}
