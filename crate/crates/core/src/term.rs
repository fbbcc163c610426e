//! `{∘, ∩, +}`-terms over named relation variables.
//!
//! Concrete syntax, loosest to tightest binding, all left-associative:
//!
//! ```text
//! term  := comp ('+' comp)*
//! comp  := meet (';' meet)*
//! meet  := atom ('&' atom)*
//! atom  := NAME | '(' term ')'
//! NAME  := letter digit*
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::relation::BinaryRelation;

/// Relations bound to variable (or label) names.
pub type Bindings = BTreeMap<String, BinaryRelation>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermOp {
    /// `;`
    Compose,
    /// `&`
    Meet,
    /// `+`
    Plus,
}

impl TermOp {
    fn precedence(self) -> u8 {
        match self {
            TermOp::Plus => 0,
            TermOp::Compose => 1,
            TermOp::Meet => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            TermOp::Plus => '+',
            TermOp::Compose => ';',
            TermOp::Meet => '&',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Node(TermOp, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn node(op: TermOp, left: Term, right: Term) -> Term {
        Term::Node(op, Box::new(left), Box::new(right))
    }

    pub fn compose(left: Term, right: Term) -> Term {
        Term::node(TermOp::Compose, left, right)
    }

    pub fn meet(left: Term, right: Term) -> Term {
        Term::node(TermOp::Meet, left, right)
    }

    pub fn plus(left: Term, right: Term) -> Term {
        Term::node(TermOp::Plus, left, right)
    }

    pub fn parse(source: &str) -> Result<Term> {
        Parser::new(source).parse()
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(name) => {
                out.insert(name.clone());
            }
            Term::Node(_, l, r) => {
                l.collect_variables(out);
                r.collect_variables(out);
            }
        }
    }

    pub fn has_plus(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Node(op, l, r) => *op == TermOp::Plus || l.has_plus() || r.has_plus(),
        }
    }

    /// Number of nodes, leaves included.
    pub fn node_count(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Node(_, l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    /// `pₙ`: every `L + R` becomes the left-nested chain `L;R;L;…` with
    /// `factors` factors (`factors = 1` yields `L`).
    pub fn plus_substitute(&self, factors: usize) -> Result<Term> {
        if factors == 0 {
            return Err(Error::Arity("plus_substitute needs at least one factor".into()));
        }
        Ok(self.expand(factors))
    }

    fn expand(&self, factors: usize) -> Term {
        match self {
            Term::Var(_) => self.clone(),
            Term::Node(TermOp::Plus, l, r) => {
                let (l, r) = (l.expand(factors), r.expand(factors));
                let mut chain = l.clone();
                for i in 1..factors {
                    let next = if i % 2 == 1 { r.clone() } else { l.clone() };
                    chain = Term::compose(chain, next);
                }
                chain
            }
            Term::Node(op, l, r) => Term::node(*op, l.expand(factors), r.expand(factors)),
        }
    }

    /// Structural evaluation: `;` is composition, `&` intersection and `+`
    /// the exact iterated-composition join.
    pub fn eval(&self, bindings: &Bindings) -> Result<BinaryRelation> {
        let size = self.bound_size(bindings)?;
        let result = self.eval_unchecked(bindings)?;
        debug_assert_eq!(result.size(), size);
        Ok(result)
    }

    /// Checks that every variable is bound and that the bound relations share
    /// one universe; returns that universe's size.
    fn bound_size(&self, bindings: &Bindings) -> Result<usize> {
        let mut size = None;
        for name in self.variables() {
            let rel = bindings
                .get(&name)
                .ok_or_else(|| Error::UnboundVariable(name.clone()))?;
            match size {
                None => size = Some(rel.size()),
                Some(n) if n != rel.size() => {
                    return Err(Error::SizeMismatch {
                        expected: n,
                        found: rel.size(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(size.expect("a term has at least one variable"))
    }

    fn eval_unchecked(&self, bindings: &Bindings) -> Result<BinaryRelation> {
        match self {
            Term::Var(name) => Ok(bindings[name].clone()),
            Term::Node(op, l, r) => {
                let l = l.eval_unchecked(bindings)?;
                let r = r.eval_unchecked(bindings)?;
                match op {
                    TermOp::Compose => l.compose(&r),
                    TermOp::Meet => l.meet(&r),
                    TermOp::Plus => l.plus_join(&r),
                }
            }
        }
    }
}

/// Renders with the fewest parentheses that reparse to the same tree.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(name) => f.write_str(name),
            Term::Node(op, l, r) => {
                let wrap = |child: &Term, strict: bool| match child {
                    Term::Node(child_op, _, _) => {
                        let (c, p) = (child_op.precedence(), op.precedence());
                        c < p || (strict && c == p)
                    }
                    Term::Var(_) => false,
                };
                let write_child = |f: &mut fmt::Formatter<'_>, child: &Term, paren: bool| {
                    if paren {
                        write!(f, "({child})")
                    } else {
                        write!(f, "{child}")
                    }
                };
                write_child(f, l, wrap(l, false))?;
                write!(f, "{}", op.symbol())?;
                write_child(f, r, wrap(r, true))
            }
        }
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Term> {
        Term::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Name(String),
    Op(TermOp),
    Open,
    Close,
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(source: &str) -> Self {
        Parser {
            tokens: Vec::new(),
            pos: 0,
            end: source.len(),
        }
        .lex(source)
    }

    fn lex(mut self, source: &str) -> Self {
        let mut chars = source.char_indices().peekable();
        while let Some((at, c)) = chars.next() {
            let token = match c {
                c if c.is_whitespace() => continue,
                ';' => Token::Op(TermOp::Compose),
                '&' => Token::Op(TermOp::Meet),
                '+' => Token::Op(TermOp::Plus),
                '(' => Token::Open,
                ')' => Token::Close,
                c if c.is_ascii_alphabetic() => {
                    let mut name = c.to_string();
                    while let Some(&(_, d)) = chars.peek() {
                        if !d.is_ascii_digit() {
                            break;
                        }
                        name.push(d);
                        chars.next();
                    }
                    Token::Name(name)
                }
                // Mark the offending character with a name the grammar never
                // accepts; `parse` reports it.
                other => Token::Name(format!("\0{other}")),
            };
            self.tokens.push((at, token));
        }
        self
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let position = self.tokens.get(self.pos).map_or(self.end, |(at, _)| *at);
        Err(Error::Parse {
            position,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn parse(mut self) -> Result<Term> {
        let term = self.level(0)?;
        match self.peek() {
            None => Ok(term),
            Some(Token::Close) => self.error("unbalanced `)`"),
            Some(_) => self.error("expected an operator"),
        }
    }

    fn level(&mut self, precedence: u8) -> Result<Term> {
        if precedence > 2 {
            return self.atom();
        }
        let mut left = self.level(precedence + 1)?;
        while let Some(Token::Op(op)) = self.peek() {
            let op = *op;
            if op.precedence() != precedence {
                break;
            }
            self.pos += 1;
            let right = self.level(precedence + 1)?;
            left = Term::node(op, left, right);
        }
        Ok(left)
    }

    fn atom(&mut self) -> Result<Term> {
        match self.peek().cloned() {
            Some(Token::Name(name)) if !name.starts_with('\0') => {
                self.pos += 1;
                Ok(Term::Var(name))
            }
            Some(Token::Name(bad)) => self.error(format!("unexpected character `{}`", &bad[1..])),
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.level(0)?;
                if self.peek() != Some(&Token::Close) {
                    return self.error("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Token::Op(op)) => self.error(format!("expected a variable before `{}`", op.symbol())),
            Some(Token::Close) => self.error("expected a variable before `)`"),
            None => self.error("unexpected end of term"),
        }
    }
}
