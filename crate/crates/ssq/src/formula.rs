//! Model formulas: `response ~ A + B + A:B`.
//!
//! The grammar is the factor subset of Wilkinson-Rogers notation: `+` adds
//! terms, `:` forms an interaction, `*` is full crossing
//! (`A*B = A + B + A:B`), `1` names the intercept and `0`/`- 1` removes it.
//! The intercept is included unless removed. Parsing produces a [`TermList`]
//! in canonical order: ascending interaction order, ties by first appearance.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// One term of a model: a set of factor names, empty for the intercept.
///
/// Equality and hashing treat the factor list as a set (`A:B == B:A`);
/// display keeps the order in which the factors were written.
#[derive(Debug, Clone, Eq)]
pub struct Term {
    factors: Vec<String>,
}

impl Term {
    /// The intercept term `(1)`.
    pub fn intercept() -> Self {
        Term { factors: Vec::new() }
    }

    /// Builds a term from factor names; rejects duplicates within the term.
    pub fn new<I, S>(factors: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for f in factors {
            let f = f.into();
            if !seen.insert(f.clone()) {
                return Err(Error::DuplicateFactor { factor: f });
            }
            out.push(f);
        }
        Ok(Term { factors: out })
    }

    pub fn factors(&self) -> &[String] {
        &self.factors
    }

    pub fn is_intercept(&self) -> bool {
        self.factors.is_empty()
    }

    /// Interaction order: the number of factors in the term.
    pub fn order(&self) -> usize {
        self.factors.len()
    }

    /// Union of two factor sets, used by `:` and `*`; rejects overlap so
    /// `A:A` (directly or through expansion) is an error rather than
    /// silently collapsed.
    fn union(&self, other: &Term) -> Result<Term> {
        let mut out = self.factors.clone();
        for f in &other.factors {
            if self.factors.contains(f) {
                return Err(Error::DuplicateFactor { factor: f.clone() });
            }
            out.push(f.clone());
        }
        Ok(Term { factors: out })
    }

    fn sorted(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.factors.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.sorted() == other.sorted()
    }
}

impl std::hash::Hash for Term {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.sorted().hash(state);
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_intercept() {
            write!(f, "(1)")
        } else {
            write!(f, "{}", self.factors.join(":"))
        }
    }
}

/// True iff `inner`'s factor set is a strict subset of `outer`'s.
///
/// This is the containment relation that drives the partition of model terms:
/// the intercept is contained in every other term, `A` is contained in `A:B`,
/// and no term contains itself.
pub fn contains(inner: &Term, outer: &Term) -> bool {
    if inner.order() >= outer.order() {
        return false;
    }
    let outer_set: HashSet<&str> = outer.factors.iter().map(String::as_str).collect();
    inner.factors.iter().all(|f| outer_set.contains(f.as_str()))
}

/// A parsed model: response name plus terms in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct TermList {
    response: String,
    terms: Vec<Term>,
    hierarchical: bool,
}

impl TermList {
    /// Canonicalizes a term collection: duplicates (as sets) collapse to
    /// their first appearance, terms sort by ascending order with ties kept
    /// in appearance order, and the intercept (when present) sorts first.
    pub fn new(response: impl Into<String>, terms: Vec<Term>) -> Self {
        let mut unique: Vec<Term> = Vec::new();
        for t in terms {
            if !unique.contains(&t) {
                unique.push(t);
            }
        }
        unique.sort_by_key(Term::order);
        let hierarchical = Self::check_hierarchy(&unique);
        TermList {
            response: response.into(),
            terms: unique,
            hierarchical,
        }
    }

    fn check_hierarchy(terms: &[Term]) -> bool {
        // Hierarchy closure: every strict subset of each term's factor set
        // (the intercept included) must itself appear as a term.
        for t in terms {
            let k = t.order();
            if k == 0 {
                continue;
            }
            for mask in 0..(1u32 << k) - 1 {
                let sub: Vec<&String> = t
                    .factors
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, f)| f)
                    .collect();
                let sub = Term {
                    factors: sub.into_iter().cloned().collect(),
                };
                if !terms.contains(&sub) {
                    return false;
                }
            }
        }
        true
    }

    pub fn response(&self) -> &str {
        &self.response
    }

    /// All terms in canonical order, the intercept first when present.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn has_intercept(&self) -> bool {
        self.terms.first().is_some_and(Term::is_intercept)
    }

    /// False when some term's contained terms are missing from the model,
    /// e.g. `y ~ A:B - 1`.
    pub fn is_hierarchical(&self) -> bool {
        self.hierarchical
    }

    pub fn contains_term(&self, t: &Term) -> bool {
        self.terms.contains(t)
    }

    /// Factor names in order of first appearance across the term list.
    pub fn factor_names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.terms {
            for f in t.factors() {
                if !out.contains(&f.as_str()) {
                    out.push(f);
                }
            }
        }
        out
    }
}

impl fmt::Display for TermList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ ", self.response)?;
        let named: Vec<String> = self
            .terms
            .iter()
            .filter(|t| !t.is_intercept())
            .map(Term::to_string)
            .collect();
        if named.is_empty() {
            return write!(f, "{}", if self.has_intercept() { "1" } else { "0" });
        }
        write!(f, "{}", named.join(" + "))?;
        if !self.has_intercept() {
            write!(f, " - 1")?;
        }
        Ok(())
    }
}

/// The three-way split of a model around a target term.
#[derive(Debug, Clone)]
pub struct Partition {
    /// Terms that do not contain the target (the intercept among them).
    pub not_containing: Vec<Term>,
    pub target: Term,
    /// Terms strictly containing the target.
    pub containing: Vec<Term>,
}

/// Splits the model's terms by containment of `target`.
pub fn partition_for_target(model: &TermList, target: &Term) -> Result<Partition> {
    if !model.contains_term(target) {
        return Err(Error::TermNotInModel(target.to_string()));
    }
    let mut not_containing = Vec::new();
    let mut containing = Vec::new();
    for t in model.terms() {
        if t == target {
            continue;
        }
        if contains(target, t) {
            containing.push(t.clone());
        } else {
            not_containing.push(t.clone());
        }
    }
    Ok(Partition {
        not_containing,
        target: target.clone(),
        containing,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    One,
    Zero,
    Tilde,
    Plus,
    Minus,
    Star,
    Colon,
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

impl Lexer {
    fn new(input: &str) -> Result<Self> {
        let mut toks = Vec::new();
        let bytes = input.char_indices().collect::<Vec<_>>();
        let mut i = 0;
        while i < bytes.len() {
            let (off, c) = bytes[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let tok = match c {
                '~' => Tok::Tilde,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                ':' => Tok::Colon,
                _ if c.is_ascii_digit() => {
                    let start = i;
                    while i + 1 < bytes.len() && is_ident_char(bytes[i + 1].1) {
                        i += 1;
                    }
                    let text: String = bytes[start..=i].iter().map(|&(_, c)| c).collect();
                    match text.as_str() {
                        "1" => Tok::One,
                        "0" => Tok::Zero,
                        _ => {
                            return Err(Error::FormulaSyntax {
                                offset: off,
                                message: format!("unexpected number `{text}`"),
                            })
                        }
                    }
                }
                _ if is_ident_start(c) => {
                    let start = i;
                    while i + 1 < bytes.len() && is_ident_char(bytes[i + 1].1) {
                        i += 1;
                    }
                    Tok::Ident(bytes[start..=i].iter().map(|&(_, c)| c).collect())
                }
                _ => {
                    return Err(Error::FormulaSyntax {
                        offset: off,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            toks.push((tok, off));
            i += 1;
        }
        toks.push((Tok::End, input.len()));
        Ok(Lexer { toks, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::FormulaSyntax {
            offset: self.offset(),
            message: message.into(),
        }
    }
}

/// Parses a formula string into a canonical [`TermList`].
pub fn parse_formula(input: &str) -> Result<TermList> {
    let mut lx = Lexer::new(input)?;
    let response = match lx.bump() {
        Tok::Ident(name) => name,
        _ => {
            return Err(Error::FormulaSyntax {
                offset: 0,
                message: "expected a response name before `~`".into(),
            })
        }
    };
    if lx.bump() != Tok::Tilde {
        return Err(Error::FormulaSyntax {
            offset: 0,
            message: "expected `~` after the response name".into(),
        });
    }
    if *lx.peek() == Tok::End {
        return Err(Error::EmptyRhs);
    }

    let mut terms: Vec<Term> = Vec::new();
    let mut intercept = true;
    'items: loop {
        match lx.peek() {
            Tok::One => {
                lx.bump();
                intercept = true;
            }
            Tok::Zero => {
                lx.bump();
                intercept = false;
            }
            _ => terms.extend(parse_product(&mut lx)?),
        }
        // After an item: `+` starts the next one, `- 1` may repeat, and the
        // formula may end.
        loop {
            match lx.peek() {
                Tok::Plus => {
                    lx.bump();
                    continue 'items;
                }
                Tok::Minus => {
                    lx.bump();
                    match lx.peek() {
                        Tok::One => {
                            lx.bump();
                            intercept = false;
                        }
                        _ => {
                            return Err(lx.err("only `- 1` (intercept removal) is supported"))
                        }
                    }
                }
                Tok::End => break 'items,
                _ => return Err(lx.err("expected `+`, `-`, or end of formula")),
            }
        }
    }

    if intercept {
        terms.insert(0, Term::intercept());
    }
    Ok(TermList::new(response, terms))
}

/// `prod := inter ('*' inter)*`, expanding `*` into main effects plus the
/// pairwise interactions of everything accumulated so far.
fn parse_product(lx: &mut Lexer) -> Result<Vec<Term>> {
    let mut acc = vec![parse_interaction(lx)?];
    while *lx.peek() == Tok::Star {
        lx.bump();
        let rhs = parse_interaction(lx)?;
        let mut crossed = Vec::with_capacity(acc.len());
        for t in &acc {
            crossed.push(t.union(&rhs)?);
        }
        acc.push(rhs);
        acc.extend(crossed);
    }
    Ok(acc)
}

/// `inter := ident (':' ident)*`, producing a single term.
fn parse_interaction(lx: &mut Lexer) -> Result<Term> {
    let mut term = parse_factor(lx)?;
    while *lx.peek() == Tok::Colon {
        lx.bump();
        let rhs = parse_factor(lx)?;
        term = term.union(&rhs)?;
    }
    Ok(term)
}

fn parse_factor(lx: &mut Lexer) -> Result<Term> {
    match lx.peek().clone() {
        Tok::Ident(name) => {
            lx.bump();
            Ok(Term {
                factors: vec![name],
            })
        }
        Tok::One | Tok::Zero => Err(lx.err("`0` and `1` cannot appear inside a term")),
        _ => Err(lx.err("expected a factor name")),
    }
}
