//! Regex formulas with variable captures and their compilation to
//! sequential variable-set automata.
//!
//! Surface grammar (whitespace between tokens is insignificant):
//!
//! ```text
//! formula := alt
//! alt     := cat ('|' cat)*
//! cat     := star+
//! star    := atom '*'*
//! atom    := 'empty' | 'eps' | CHAR | VAR '{' alt '}' | '(' alt ')'
//! ```
//!
//! `CHAR` is a single alphabet letter or a backslash-escaped metacharacter;
//! `VAR` matches `[A-Za-z_][A-Za-z0-9_]*` with an optional trailing `!`
//! (the annotated-copy suffix). Concatenation binds tighter than `|`, and
//! `*` binds tightest.

use std::collections::BTreeSet;
use std::fmt;

use crate::autops::{Label, Va, VaBuilder};
use crate::error::{Error, Result};
use crate::spancore::{Alphabet, Var};

/// AST of a regex formula.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum RegexFormula {
    Empty,
    Epsilon,
    Letter(char),
    Concat(Box<RegexFormula>, Box<RegexFormula>),
    Alt(Box<RegexFormula>, Box<RegexFormula>),
    Star(Box<RegexFormula>),
    Capture(Var, Box<RegexFormula>),
}

impl RegexFormula {
    pub fn concat(l: RegexFormula, r: RegexFormula) -> RegexFormula {
        RegexFormula::Concat(Box::new(l), Box::new(r))
    }

    pub fn alt(l: RegexFormula, r: RegexFormula) -> RegexFormula {
        RegexFormula::Alt(Box::new(l), Box::new(r))
    }

    pub fn star(e: RegexFormula) -> RegexFormula {
        RegexFormula::Star(Box::new(e))
    }

    pub fn capture(v: Var, e: RegexFormula) -> RegexFormula {
        RegexFormula::Capture(v, Box::new(e))
    }

    /// Concatenation of a sequence; the empty sequence is epsilon.
    pub fn concat_all<I: IntoIterator<Item = RegexFormula>>(items: I) -> RegexFormula {
        let mut iter = items.into_iter();
        match iter.next() {
            None => RegexFormula::Epsilon,
            Some(first) => iter.fold(first, RegexFormula::concat),
        }
    }

    /// Disjunction of a sequence; the empty sequence is the empty spanner.
    pub fn alt_all<I: IntoIterator<Item = RegexFormula>>(items: I) -> RegexFormula {
        let mut iter = items.into_iter();
        match iter.next() {
            None => RegexFormula::Empty,
            Some(first) => iter.fold(first, RegexFormula::alt),
        }
    }

    /// The concatenation of the letters of `w`.
    pub fn literal(w: &str) -> RegexFormula {
        RegexFormula::concat_all(w.chars().map(RegexFormula::Letter))
    }

    /// `(a|b|...)*` over the whole alphabet.
    pub fn sigma_star(alphabet: &Alphabet) -> RegexFormula {
        RegexFormula::star(RegexFormula::alt_all(alphabet.letters().map(RegexFormula::Letter)))
    }

    pub fn capture_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            RegexFormula::Concat(l, r) | RegexFormula::Alt(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            RegexFormula::Star(e) => e.collect_vars(out),
            RegexFormula::Capture(v, e) => {
                out.insert(v.clone());
                e.collect_vars(out);
            }
            _ => {}
        }
    }

    pub fn letters(&self) -> BTreeSet<char> {
        let mut out = BTreeSet::new();
        self.collect_letters(&mut out);
        out
    }

    fn collect_letters(&self, out: &mut BTreeSet<char>) {
        match self {
            RegexFormula::Letter(c) => {
                out.insert(*c);
            }
            RegexFormula::Concat(l, r) | RegexFormula::Alt(l, r) => {
                l.collect_letters(out);
                r.collect_letters(out);
            }
            RegexFormula::Star(e) => e.collect_letters(out),
            RegexFormula::Capture(_, e) => e.collect_letters(out),
            _ => {}
        }
    }

    /// Compiles to a sequential VA over `alphabet` by the structural
    /// translation with epsilon transitions, followed by epsilon
    /// elimination and trimming. Formulas for which some accepting path
    /// would assign a variable twice are rejected.
    pub fn compile(&self, alphabet: &Alphabet) -> Result<Va> {
        for c in self.letters() {
            if !alphabet.contains(c) {
                return Err(Error::LetterOutsideAlphabet(c));
            }
        }
        let mut b = VaBuilder::new();
        let start = b.add_state();
        let end = b.add_state();
        self.build(&mut b, start, end);
        b.set_initial(start);
        b.mark_final(end);
        let raw = b.build(alphabet.clone(), self.capture_vars());
        let va = crate::autops::trim(&crate::autops::eliminate_epsilon(&raw));
        if let Some(var) = crate::autops::first_sequentiality_violation(&va) {
            return Err(Error::NonSequentialFormula(var.to_string()));
        }
        Ok(va)
    }

    fn build(&self, b: &mut VaBuilder, from: usize, to: usize) {
        match self {
            RegexFormula::Empty => {}
            RegexFormula::Epsilon => b.add_transition(from, Label::Eps, to),
            RegexFormula::Letter(c) => b.add_transition(from, Label::Letter(*c), to),
            RegexFormula::Concat(l, r) => {
                let mid = b.add_state();
                l.build(b, from, mid);
                r.build(b, mid, to);
            }
            RegexFormula::Alt(l, r) => {
                l.build(b, from, to);
                r.build(b, from, to);
            }
            RegexFormula::Star(e) => {
                let hub = b.add_state();
                b.add_transition(from, Label::Eps, hub);
                b.add_transition(hub, Label::Eps, to);
                let back = b.add_state();
                e.build(b, hub, back);
                b.add_transition(back, Label::Eps, hub);
            }
            RegexFormula::Capture(v, e) => {
                let inner_from = b.add_state();
                let inner_to = b.add_state();
                b.add_transition(from, Label::Open(v.clone()), inner_from);
                e.build(b, inner_from, inner_to);
                b.add_transition(inner_to, Label::Close(v.clone()), to);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            RegexFormula::Alt(..) => 0,
            RegexFormula::Concat(..) => 1,
            RegexFormula::Star(..) => 2,
            _ => 3,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
        }
        match self {
            RegexFormula::Empty => write!(f, "empty")?,
            RegexFormula::Epsilon => write!(f, "eps")?,
            RegexFormula::Letter(c) => {
                if is_metachar(*c) {
                    write!(f, "\\{c}")?;
                } else {
                    write!(f, "{c}")?;
                }
            }
            RegexFormula::Concat(l, r) => {
                l.fmt_prec(f, 1)?;
                write!(f, " ")?;
                r.fmt_prec(f, 2)?;
            }
            RegexFormula::Alt(l, r) => {
                l.fmt_prec(f, 0)?;
                write!(f, "|")?;
                r.fmt_prec(f, 1)?;
            }
            RegexFormula::Star(e) => {
                e.fmt_prec(f, 3)?;
                write!(f, "*")?;
            }
            RegexFormula::Capture(v, e) => {
                write!(f, "{v}{{")?;
                e.fmt_prec(f, 0)?;
                write!(f, "}}")?;
            }
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for RegexFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

fn is_metachar(c: char) -> bool {
    matches!(c, '|' | '*' | '{' | '}' | '(' | ')' | '\\' | ' ')
}

/// Parses a regex formula; letters are validated against the alphabet.
pub fn parse(src: &str, alphabet: &Alphabet) -> Result<RegexFormula> {
    parse_impl(src, Some(alphabet))
}

/// Parses without letter validation; the alphabet can then be inferred
/// from [`RegexFormula::letters`].
pub fn parse_letters_inferred(src: &str) -> Result<RegexFormula> {
    parse_impl(src, None)
}

fn parse_impl(src: &str, alphabet: Option<&Alphabet>) -> Result<RegexFormula> {
    let mut p = Parser { chars: src.char_indices().collect(), pos: 0, alphabet };
    let formula = p.alt()?;
    p.skip_ws();
    if let Some((off, c)) = p.peek() {
        return Err(Error::Parse { message: format!("unexpected {c:?}"), offset: off });
    }
    Ok(formula)
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    alphabet: Option<&'a Alphabet>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<(usize, char)> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some((_, c)) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map(|(o, _)| *o).unwrap_or_else(|| {
            self.chars.last().map(|(o, c)| o + c.len_utf8()).unwrap_or(0)
        })
    }

    fn expect(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.bump() {
            Some((_, c)) if c == want => Ok(()),
            Some((off, c)) => {
                Err(Error::Parse { message: format!("expected {want:?}, found {c:?}"), offset: off })
            }
            None => Err(Error::Parse {
                message: format!("expected {want:?}, found end of input"),
                offset: self.offset(),
            }),
        }
    }

    fn alt(&mut self) -> Result<RegexFormula> {
        let mut lhs = self.cat()?;
        loop {
            self.skip_ws();
            if matches!(self.peek(), Some((_, '|'))) {
                self.bump();
                let rhs = self.cat()?;
                lhs = RegexFormula::alt(lhs, rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn cat(&mut self) -> Result<RegexFormula> {
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None | Some((_, '|')) | Some((_, ')')) | Some((_, '}')) => break,
                _ => items.push(self.star()?),
            }
        }
        if items.is_empty() {
            let off = self.offset();
            return Err(Error::Parse { message: "expected a formula".into(), offset: off });
        }
        let mut iter = items.into_iter();
        let first = iter.next().unwrap();
        Ok(iter.fold(first, RegexFormula::concat))
    }

    fn star(&mut self) -> Result<RegexFormula> {
        let mut e = self.atom()?;
        loop {
            self.skip_ws();
            if matches!(self.peek(), Some((_, '*'))) {
                self.bump();
                e = RegexFormula::star(e);
            } else {
                return Ok(e);
            }
        }
    }

    fn atom(&mut self) -> Result<RegexFormula> {
        self.skip_ws();
        let (off, c) = match self.peek() {
            Some(x) => x,
            None => {
                return Err(Error::Parse { message: "expected a formula".into(), offset: self.offset() })
            }
        };
        match c {
            '(' => {
                self.bump();
                let inner = self.alt()?;
                self.expect(')')?;
                Ok(inner)
            }
            '\\' => {
                self.bump();
                match self.bump() {
                    Some((_, esc)) => self.letter(esc, off),
                    None => Err(Error::Parse {
                        message: "dangling escape".into(),
                        offset: off,
                    }),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => self.ident(),
            c if is_metachar(c) => {
                Err(Error::Parse { message: format!("unexpected {c:?}"), offset: off })
            }
            c => {
                self.bump();
                self.letter(c, off)
            }
        }
    }

    fn letter(&self, c: char, off: usize) -> Result<RegexFormula> {
        match self.alphabet {
            Some(a) if !a.contains(c) => {
                Err(Error::Parse { message: format!("letter {c:?} outside the alphabet"), offset: off })
            }
            _ => Ok(RegexFormula::Letter(c)),
        }
    }

    /// An identifier run is a variable capture when followed by `{`
    /// (possibly with the `!` annotation suffix), the keywords `eps` and
    /// `empty` otherwise, and a plain sequence of letters as a last resort.
    fn ident(&mut self) -> Result<RegexFormula> {
        let start_pos = self.pos;
        let start_off = self.offset();
        let mut name = String::new();
        while let Some((_, c)) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                name.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let mut dagger = false;
        if matches!(self.peek(), Some((_, '!'))) {
            dagger = true;
            self.bump();
        }
        self.skip_ws();
        if matches!(self.peek(), Some((_, '{'))) {
            // Runs like `bx{...}` with `b` in the alphabet are a letter
            // followed by a capture of `x`, so that unspaced formulas keep
            // their intended reading; a variable name therefore cannot
            // start with an alphabet letter unless the whole run is one.
            if !dagger {
                if let Some(alpha) = self.alphabet {
                    let first = name.chars().next().unwrap();
                    let rest: String = name.chars().skip(1).collect();
                    if alpha.contains(first) && Var::parse(&rest).is_ok() {
                        self.pos = start_pos;
                        let (off, c) = self.bump().unwrap();
                        return self.letter(c, off);
                    }
                }
            }
            self.bump();
            let var_name = if dagger { format!("{name}!") } else { name.clone() };
            let var = Var::parse(&var_name)
                .map_err(|_| Error::Parse { message: format!("bad variable name {var_name:?}"), offset: start_off })?;
            let inner = self.alt()?;
            self.expect('}')?;
            return Ok(RegexFormula::capture(var, inner));
        }
        if dagger {
            return Err(Error::Parse {
                message: "'!' is only allowed on a capture variable".into(),
                offset: start_off,
            });
        }
        if name == "eps" {
            return Ok(RegexFormula::Epsilon);
        }
        if name == "empty" {
            return Ok(RegexFormula::Empty);
        }
        // a plain letter: single-letter atoms keep `*` binding to the last
        // letter of a run, so re-lex from the run's start
        self.pos = start_pos;
        let (off, c) = self.bump().unwrap();
        self.letter(c, off)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn ab() -> Alphabet {
        Alphabet::from_letters("ab")
    }

    #[test]
    fn parses_the_two_branch_capture_formula() {
        let e = parse("x{a*} b a* | a* b x{a*}", &ab()).unwrap();
        let x = Var::new("x");
        // leftmost leaf of the left alternative is the capture x{a*}
        let mut leaf = match &e {
            RegexFormula::Alt(l, _) => l.as_ref(),
            other => panic!("expected alternation, got {other:?}"),
        };
        while let RegexFormula::Concat(l, _) = leaf {
            leaf = l.as_ref();
        }
        match leaf {
            RegexFormula::Capture(v, inner) => {
                assert_eq!(v, &x);
                assert!(matches!(inner.as_ref(), RegexFormula::Star(_)));
            }
            other => panic!("expected capture, got {other:?}"),
        }
        assert_eq!(e.capture_vars(), BTreeSet::from([x]));
    }

    #[test]
    fn parses_keywords() {
        assert_eq!(parse("eps", &ab()).unwrap(), RegexFormula::Epsilon);
        assert_eq!(parse("empty", &ab()).unwrap(), RegexFormula::Empty);
        // keyword letters still usable via spacing when in the alphabet
        let eps_letters = Alphabet::from_letters("eps");
        assert_eq!(
            parse("e p s", &eps_letters).unwrap(),
            RegexFormula::concat_all([
                RegexFormula::Letter('e'),
                RegexFormula::Letter('p'),
                RegexFormula::Letter('s')
            ])
        );
    }

    #[test]
    fn reports_syntax_error_position() {
        match parse("x{", &ab()) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse("a `", &ab()).is_err());
        assert!(parse("c", &ab()).is_err()); // letter outside the alphabet
    }

    #[test]
    fn daggered_variable_capture() {
        let e = parse("x!{a}", &ab()).unwrap();
        match e {
            RegexFormula::Capture(v, _) => {
                assert!(v.is_dagger());
                assert_eq!(v.undagger(), Var::new("x"));
            }
            other => panic!("expected capture, got {other:?}"),
        }
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "x{a*} b a*|a* b x{a*}",
            "eps",
            "empty",
            "(a|b)*",
            "x{a}(y{b}|eps)",
            "a b a*",
            "x!{a b}",
        ] {
            let e = parse(src, &ab()).unwrap();
            let printed = e.to_string();
            let reparsed = parse(&printed, &ab()).unwrap();
            assert_eq!(e, reparsed, "{src} -> {printed}");
        }
    }

    #[test]
    fn compile_rejects_double_capture() {
        match parse("(x{a})*", &ab()).unwrap().compile(&ab()) {
            Err(Error::NonSequentialFormula(v)) => assert_eq!(v, "x"),
            other => panic!("expected NonSequentialFormula, got {other:?}"),
        }
        assert!(parse("x{a} x{b}", &ab()).unwrap().compile(&ab()).is_err());
        // schemaless reuse across branches is fine
        assert!(parse("x{a}|x{b}", &ab()).unwrap().compile(&ab()).is_ok());
    }

    #[test]
    fn compiled_formulas_are_sequential_and_trimmed() {
        for src in ["x{a*} b a*|a* b x{a*}", "eps", "empty", "x{a}y{b}|x{a}b", "(a|b)* x{a (a|b)*}"] {
            let va = parse(src, &ab()).unwrap().compile(&ab()).unwrap();
            assert!(va.flags().sequential, "{src}");
            assert!(!va.has_eps(), "{src}");
        }
    }
}
