//! SCAN commands, their action sequences, and the bracketed and run-length
//! intermediate representations.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("no derivation for `{0}`")]
    NoDerivation(String),
    #[error("unknown action token `{0}`")]
    UnknownAction(String),
    #[error("empty action sequence")]
    Empty,
    #[error("unbalanced brackets at token {0}")]
    Unbalanced(usize),
    #[error("anonymized action at token {0} has no preceding action")]
    LeadingAnon(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Walk,
    Look,
    Run,
    Jump,
    LTurn,
    RTurn,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Walk => "WALK",
            Action::Look => "LOOK",
            Action::Run => "RUN",
            Action::Jump => "JUMP",
            Action::LTurn => "LTURN",
            Action::RTurn => "RTURN",
        }
    }

    /// Accepts both the short names and the `I_*` names of the SCAN files.
    pub fn parse(token: &str) -> Result<Action, ScanError> {
        Ok(match token {
            "WALK" | "I_WALK" => Action::Walk,
            "LOOK" | "I_LOOK" => Action::Look,
            "RUN" | "I_RUN" => Action::Run,
            "JUMP" | "I_JUMP" => Action::Jump,
            "LTURN" | "I_TURN_LEFT" => Action::LTurn,
            "RTURN" | "I_TURN_RIGHT" => Action::RTurn,
            _ => return Err(ScanError::UnknownAction(token.to_string())),
        })
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verb {
    Walk,
    Look,
    Run,
    Jump,
    Turn,
}

impl Verb {
    fn action(self) -> Option<Action> {
        match self {
            Verb::Walk => Some(Action::Walk),
            Verb::Look => Some(Action::Look),
            Verb::Run => Some(Action::Run),
            Verb::Jump => Some(Action::Jump),
            Verb::Turn => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    fn turn(self) -> Action {
        match self {
            Direction::Left => Action::LTurn,
            Direction::Right => Action::RTurn,
        }
    }
}

/// A verb phrase. `turn` only occurs with a direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phrase {
    Plain(Verb),
    Directed(Verb, Direction),
    Opposite(Verb, Direction),
    Around(Verb, Direction),
}

impl Phrase {
    pub fn actions(self) -> Vec<Action> {
        let with_turns = |verb: Verb, turn: Action, turns: usize| {
            let mut out = vec![turn; turns];
            out.extend(verb.action());
            out
        };
        match self {
            Phrase::Plain(v) => v.action().into_iter().collect(),
            Phrase::Directed(v, d) => with_turns(v, d.turn(), 1),
            Phrase::Opposite(v, d) => with_turns(v, d.turn(), 2),
            Phrase::Around(v, d) => with_turns(v, d.turn(), 1).repeat(4),
        }
    }
}

/// A phrase with an optional `twice`/`thrice`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub phrase: Phrase,
    pub times: u8,
}

impl Sentence {
    fn actions(self) -> Vec<Action> {
        self.phrase.actions().repeat(self.times as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanCommand {
    Single(Sentence),
    And(Sentence, Sentence),
    After(Sentence, Sentence),
}

/// Flat action sequence, never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionSeq(pub Vec<Action>);

impl ActionSeq {
    pub fn parse(text: &str) -> Result<ActionSeq, ScanError> {
        let actions = text
            .split_whitespace()
            .map(Action::parse)
            .collect::<Result<Vec<_>, _>>()?;
        if actions.is_empty() {
            return Err(ScanError::Empty);
        }
        Ok(ActionSeq(actions))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn join<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for ActionSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        join(f, &self.0)
    }
}

fn parse_phrase(words: &[&str]) -> Option<Phrase> {
    let verb = |w: &str| match w {
        "walk" => Some(Verb::Walk),
        "look" => Some(Verb::Look),
        "run" => Some(Verb::Run),
        "jump" => Some(Verb::Jump),
        "turn" => Some(Verb::Turn),
        _ => None,
    };
    let dir = |w: &str| match w {
        "left" => Some(Direction::Left),
        "right" => Some(Direction::Right),
        _ => None,
    };
    match *words {
        [v] => verb(v).filter(|v| *v != Verb::Turn).map(Phrase::Plain),
        [v, d] => Some(Phrase::Directed(verb(v)?, dir(d)?)),
        [v, "opposite", d] => Some(Phrase::Opposite(verb(v)?, dir(d)?)),
        [v, "around", d] => Some(Phrase::Around(verb(v)?, dir(d)?)),
        _ => None,
    }
}

fn parse_sentence(words: &[&str]) -> Option<Sentence> {
    let (times, rest) = match words.split_last()? {
        (&"twice", rest) => (2, rest),
        (&"thrice", rest) => (3, rest),
        _ => (1, words),
    };
    Some(Sentence {
        phrase: parse_phrase(rest)?,
        times,
    })
}

const VOCABULARY: &[&str] = &[
    "walk", "look", "run", "jump", "turn", "left", "right", "opposite", "around", "twice", "thrice", "and", "after",
];

/// Parse a command; SCAN's grammar is unambiguous so the tree is unique.
pub fn parse_command(text: &str) -> Result<ScanCommand, ScanError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    if let Some(w) = words.iter().find(|w| !VOCABULARY.contains(w)) {
        return Err(ScanError::UnknownWord(w.to_string()));
    }
    let no_derivation = || ScanError::NoDerivation(text.trim().to_string());
    let conj: Vec<usize> = words
        .iter()
        .enumerate()
        .filter(|(_, w)| matches!(**w, "and" | "after"))
        .map(|(i, _)| i)
        .collect();
    match conj[..] {
        [] => parse_sentence(&words).map(ScanCommand::Single),
        [i] => {
            let left = parse_sentence(&words[..i]).ok_or_else(no_derivation)?;
            let right = parse_sentence(&words[i + 1..]).ok_or_else(no_derivation)?;
            Some(if words[i] == "and" {
                ScanCommand::And(left, right)
            } else {
                ScanCommand::After(left, right)
            })
        }
        _ => None,
    }
    .ok_or_else(no_derivation)
}

/// Denotation: `and` runs left then right, `after` right then left.
pub fn interpret(c: &ScanCommand) -> ActionSeq {
    let actions = match *c {
        ScanCommand::Single(s) => s.actions(),
        ScanCommand::And(a, b) => [a.actions(), b.actions()].concat(),
        ScanCommand::After(a, b) => [b.actions(), a.actions()].concat(),
    };
    ActionSeq(actions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RirToken {
    Open,
    Close,
    Action(Action),
}

impl fmt::Display for RirToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RirToken::Open => f.write_str("("),
            RirToken::Close => f.write_str(")"),
            RirToken::Action(a) => fmt::Display::fmt(a, f),
        }
    }
}

/// Action sequence with brackets marking repetitions and complex actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScanRir(pub Vec<RirToken>);

impl ScanRir {
    pub fn parse(text: &str) -> Result<ScanRir, ScanError> {
        let tokens = text
            .split_whitespace()
            .map(|t| match t {
                "(" => Ok(RirToken::Open),
                ")" => Ok(RirToken::Close),
                _ => Action::parse(t).map(RirToken::Action),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ScanRir(tokens))
    }

    /// Deepest bracket nesting, or an error if brackets do not balance.
    pub fn depth(&self) -> Result<usize, ScanError> {
        bracket_depth(self.0.iter().map(|t| match t {
            RirToken::Open => 1,
            RirToken::Close => -1,
            RirToken::Action(_) => 0,
        }))
    }
}

fn bracket_depth(steps: impl Iterator<Item = i32>) -> Result<usize, ScanError> {
    let mut depth = 0i32;
    let mut max = 0;
    let mut last = 0;
    for (i, step) in steps.enumerate() {
        depth += step;
        if depth < 0 {
            return Err(ScanError::Unbalanced(i));
        }
        max = max.max(depth);
        last = i;
    }
    if depth != 0 {
        return Err(ScanError::Unbalanced(last));
    }
    Ok(max as usize)
}

impl fmt::Display for ScanRir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        join(f, &self.0)
    }
}

/// Synchronous rewrite of the command into its bracketed action sequence.
///
/// A verb phrase that yields more than one action is wrapped in brackets,
/// and so is each copy produced by `twice`/`thrice` unless that copy is
/// already a single bracketed phrase. `and`/`after` add no brackets.
pub fn scan_to_rir(c: &ScanCommand) -> ScanRir {
    fn sentence(s: Sentence, out: &mut Vec<RirToken>) {
        let actions = s.phrase.actions();
        let complex = actions.len() > 1;
        for _ in 0..s.times {
            let wrap_copy = s.times > 1 && !complex;
            if wrap_copy || complex {
                out.push(RirToken::Open);
            }
            out.extend(actions.iter().copied().map(RirToken::Action));
            if wrap_copy || complex {
                out.push(RirToken::Close);
            }
        }
    }
    let mut out = Vec::new();
    match *c {
        ScanCommand::Single(s) => sentence(s, &mut out),
        ScanCommand::And(a, b) => {
            sentence(a, &mut out);
            sentence(b, &mut out);
        }
        ScanCommand::After(a, b) => {
            sentence(b, &mut out);
            sentence(a, &mut out);
        }
    }
    ScanRir(out)
}

/// Inverse of [`scan_to_rir`]: drop the brackets.
pub fn strip_brackets(z: &ScanRir) -> Result<ActionSeq, ScanError> {
    z.depth()?;
    let actions: Vec<Action> =
        z.0.iter()
            .filter_map(|t| match t {
                RirToken::Action(a) => Some(*a),
                _ => None,
            })
            .collect();
    if actions.is_empty() {
        return Err(ScanError::Empty);
    }
    Ok(ActionSeq(actions))
}

pub const ANON_TOKEN: &str = "A";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LirToken {
    Action(Action),
    /// Repeat of the action heading the run.
    Anon,
    Open,
    Close,
}

impl fmt::Display for LirToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LirToken::Action(a) => fmt::Display::fmt(a, f),
            LirToken::Anon => f.write_str(ANON_TOKEN),
            LirToken::Open => f.write_str("("),
            LirToken::Close => f.write_str(")"),
        }
    }
}

/// Run-length lossy IR: `C C C` becomes `C A A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScanLir(pub Vec<LirToken>);

impl ScanLir {
    pub fn parse(text: &str) -> Result<ScanLir, ScanError> {
        let tokens = text
            .split_whitespace()
            .map(|t| match t {
                "(" => Ok(LirToken::Open),
                ")" => Ok(LirToken::Close),
                ANON_TOKEN => Ok(LirToken::Anon),
                _ => Action::parse(t).map(LirToken::Action),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let lir = ScanLir(tokens);
        lir.validate()?;
        Ok(lir)
    }

    /// Brackets balance and every `A` directly follows its run.
    pub fn validate(&self) -> Result<(), ScanError> {
        bracket_depth(self.0.iter().map(|t| match t {
            LirToken::Open => 1,
            LirToken::Close => -1,
            _ => 0,
        }))?;
        let mut prev_concrete = false;
        for (i, t) in self.0.iter().enumerate() {
            match t {
                LirToken::Anon if !prev_concrete => return Err(ScanError::LeadingAnon(i)),
                LirToken::Anon | LirToken::Action(_) => prev_concrete = true,
                LirToken::Open | LirToken::Close => prev_concrete = false,
            }
        }
        if !self.0.iter().any(|t| matches!(t, LirToken::Action(_))) {
            return Err(ScanError::Empty);
        }
        Ok(())
    }
}

impl fmt::Display for ScanLir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        join(f, &self.0)
    }
}

fn run_length(tokens: impl Iterator<Item = LirToken>) -> ScanLir {
    let mut out: Vec<LirToken> = Vec::new();
    let mut run: Option<Action> = None;
    for t in tokens {
        match t {
            LirToken::Action(a) if run == Some(a) => out.push(LirToken::Anon),
            LirToken::Action(a) => {
                run = Some(a);
                out.push(t);
            }
            _ => {
                run = None;
                out.push(t);
            }
        }
    }
    ScanLir(out)
}

/// Replace each maximal run `C^n` (n > 1) by `C A^(n-1)`.
pub fn scan_to_lir(y: &ActionSeq) -> ScanLir {
    run_length(y.0.iter().map(|a| LirToken::Action(*a)))
}

/// Lossy IR of the bracketed IR. Brackets end runs.
pub fn scan_rir_to_lir(z: &ScanRir) -> ScanLir {
    run_length(z.0.iter().map(|t| match t {
        RirToken::Open => LirToken::Open,
        RirToken::Close => LirToken::Close,
        RirToken::Action(a) => LirToken::Action(*a),
    }))
}

/// Replace every `A` by the nearest preceding concrete action. Brackets,
/// if any, are dropped.
pub fn scan_lir_expand(z: &ScanLir) -> Result<ActionSeq, ScanError> {
    let mut out = Vec::with_capacity(z.0.len());
    let mut last = None;
    for (i, t) in z.0.iter().enumerate() {
        match t {
            LirToken::Action(a) => {
                last = Some(*a);
                out.push(*a);
            }
            LirToken::Anon => out.push(last.ok_or(ScanError::LeadingAnon(i))?),
            LirToken::Open | LirToken::Close => {}
        }
    }
    if out.is_empty() {
        return Err(ScanError::Empty);
    }
    Ok(ActionSeq(out))
}

/// Every command the SCAN grammar derives (20,910 of them), in a fixed order.
pub fn all_commands() -> Vec<String> {
    let verbs = ["walk", "look", "run", "jump"];
    let mut phrases: Vec<String> = verbs.iter().map(|v| v.to_string()).collect();
    for v in verbs.iter().chain(["turn"].iter()) {
        for d in ["left", "right"] {
            phrases.push(format!("{v} {d}"));
            phrases.push(format!("{v} opposite {d}"));
            phrases.push(format!("{v} around {d}"));
        }
    }
    let mut sentences = Vec::with_capacity(phrases.len() * 3);
    for p in &phrases {
        sentences.push(p.clone());
        sentences.push(format!("{p} twice"));
        sentences.push(format!("{p} thrice"));
    }
    let mut out = sentences.clone();
    for conj in ["and", "after"] {
        for a in &sentences {
            for b in &sentences {
                out.push(format!("{a} {conj} {b}"));
            }
        }
    }
    out
}
