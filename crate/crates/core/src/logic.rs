//! Subspace-valued propositions and CTQL formulas.
//!
//! Propositions live inside square brackets and use the quantum connectives
//! `~` (orthocomplement), `&` (intersection) and `|` (join). State formulas
//! use the classical `!`, `&&`, `||`, `->` and the path quantifiers. The two
//! negations differ: `! [p]` holds when the support leaves `p`, `[~p]` only
//! when the support lies in `p`'s orthocomplement.
//!
//! ```text
//! state   = imp
//! imp     = or [ "->" imp ]
//! or      = and { "||" and }
//! and     = unary { "&&" unary }
//! unary   = "!" unary | ("E" | "A") path
//!         | ("EX" | "AX" | "EF" | "AF" | "EG" | "AG") unary
//!         | "(" state ")" | "[" prop "]" | "true" | "false"
//! path    = ("X" | "F" | "G") unary | "(" state "U" state ")"
//! prop    = pand { "|" pand }
//! pand    = pun { "&" pun }
//! pun     = "~" pun | "(" prop ")" | "true" | "false" | ident
//! ```
//!
//! `F`, `G`, `||` and `->` are expanded while parsing:
//! `F φ = (true U φ)`, `E G φ = !A(true U !φ)`, `A G φ = !E(true U !φ)`,
//! `a || b = !(!a && !b)` and `a -> b = !(a && !b)`.
//!
//! Assertion files bind atom names and list formulas:
//!
//! ```text
//! let psi = span { "|00>", "(|01> + |10>)/sqrt2" }
//! let m   = colspan [[1, 0], [0, 0]]
//! assert "label" : A (true U [psi])
//! ```
//!
//! Ket strings are arithmetic over complex scalars and kets: `|01+->` lists
//! qubits 1, 2, ... from the left; `u * v` (or `u v`) with two vectors is the
//! tensor product with `u` on the earlier qubits; `sqrt2` and `sqrt(x)` are
//! available.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Pos, Result};
use crate::lexer::{format_matrix, tokenize, Cursor, Tok};
use crate::linalg::{basis_vector, c, cr, support, CMatrix, CVector, Subspace};

#[derive(Debug, Clone)]
pub enum Proposition {
    True,
    False,
    /// A named subspace; `pos` is where it was written and does not take
    /// part in equality.
    Atom {
        name: String,
        pos: Pos,
    },
    Not(Box<Proposition>),
    And(Box<Proposition>, Box<Proposition>),
    Or(Box<Proposition>, Box<Proposition>),
}

impl PartialEq for Proposition {
    fn eq(&self, other: &Self) -> bool {
        use Proposition::*;
        match (self, other) {
            (True, True) | (False, False) => true,
            (Atom { name: a, .. }, Atom { name: b, .. }) => a == b,
            (Not(a), Not(b)) => a == b,
            (And(a1, a2), And(b1, b2)) | (Or(a1, a2), Or(b1, b2)) => a1 == b1 && a2 == b2,
            _ => false,
        }
    }
}

impl Proposition {
    pub fn atom(name: &str) -> Self {
        Proposition::Atom {
            name: name.to_string(),
            pos: Pos::default(),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Proposition) -> Self {
        Proposition::Not(Box::new(p))
    }

    pub fn and(a: Proposition, b: Proposition) -> Self {
        Proposition::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Proposition, b: Proposition) -> Self {
        Proposition::Or(Box::new(a), Box::new(b))
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<(&'a str, Pos)>) {
        match self {
            Proposition::Atom { name, pos } => out.push((name, *pos)),
            Proposition::Not(a) => a.collect_atoms(out),
            Proposition::And(a, b) | Proposition::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Proposition::True | Proposition::False => {}
        }
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Proposition::True => f.write_str("true"),
            Proposition::False => f.write_str("false"),
            Proposition::Atom { name, .. } => f.write_str(name),
            Proposition::Not(a) => write!(f, "~{a}"),
            Proposition::And(a, b) => write!(f, "({a} & {b})"),
            Proposition::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateFormula {
    Prop(Proposition),
    Exists(PathFormula),
    Forall(PathFormula),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathFormula {
    Next(Box<StateFormula>),
    Until(Box<StateFormula>, Box<StateFormula>),
}

impl StateFormula {
    pub fn tt() -> Self {
        StateFormula::Prop(Proposition::True)
    }

    pub fn prop(p: Proposition) -> Self {
        StateFormula::Prop(p)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: StateFormula) -> Self {
        StateFormula::Not(Box::new(f))
    }

    pub fn and(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: StateFormula, b: StateFormula) -> Self {
        Self::not(Self::and(Self::not(a), Self::not(b)))
    }

    pub fn implies(a: StateFormula, b: StateFormula) -> Self {
        Self::not(Self::and(a, Self::not(b)))
    }

    pub fn ex(f: StateFormula) -> Self {
        StateFormula::Exists(PathFormula::Next(Box::new(f)))
    }

    pub fn ax(f: StateFormula) -> Self {
        StateFormula::Forall(PathFormula::Next(Box::new(f)))
    }

    pub fn eu(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::Exists(PathFormula::Until(Box::new(a), Box::new(b)))
    }

    pub fn au(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::Forall(PathFormula::Until(Box::new(a), Box::new(b)))
    }

    pub fn ef(f: StateFormula) -> Self {
        Self::eu(Self::tt(), f)
    }

    pub fn af(f: StateFormula) -> Self {
        Self::au(Self::tt(), f)
    }

    pub fn eg(f: StateFormula) -> Self {
        Self::not(Self::au(Self::tt(), Self::not(f)))
    }

    pub fn ag(f: StateFormula) -> Self {
        Self::not(Self::eu(Self::tt(), Self::not(f)))
    }

    /// Nesting depth of temporal and boolean operators; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            StateFormula::Prop(_) => 0,
            StateFormula::Not(a) => 1 + a.depth(),
            StateFormula::And(a, b) => 1 + a.depth().max(b.depth()),
            StateFormula::Exists(p) | StateFormula::Forall(p) => match p {
                PathFormula::Next(a) => 1 + a.depth(),
                PathFormula::Until(a, b) => 1 + a.depth().max(b.depth()),
            },
        }
    }

    /// Distinct atomic propositions (`Prop` leaves), in first-occurrence order.
    pub fn propositions(&self) -> Vec<&Proposition> {
        let mut out: Vec<&Proposition> = Vec::new();
        self.visit_props(&mut |p| {
            if !out.contains(&p) {
                out.push(p);
            }
        });
        out
    }

    fn visit_props<'a>(&'a self, f: &mut impl FnMut(&'a Proposition)) {
        match self {
            StateFormula::Prop(p) => f(p),
            StateFormula::Not(a) => a.visit_props(f),
            StateFormula::And(a, b) => {
                a.visit_props(f);
                b.visit_props(f);
            }
            StateFormula::Exists(p) | StateFormula::Forall(p) => match p {
                PathFormula::Next(a) => a.visit_props(f),
                PathFormula::Until(a, b) => {
                    a.visit_props(f);
                    b.visit_props(f);
                }
            },
        }
    }

    /// Fails with [`Error::UnboundAtom`] on the first atom `bindings` lacks.
    pub fn check_bound(&self, bindings: &Bindings) -> Result<()> {
        self.propositions()
            .into_iter()
            .try_for_each(|p| check_prop_bound(p, bindings))
    }
}

fn check_prop_bound(p: &Proposition, bindings: &Bindings) -> Result<()> {
    let mut atoms = Vec::new();
    p.collect_atoms(&mut atoms);
    match atoms
        .into_iter()
        .find(|(name, _)| bindings.get(name).is_none())
    {
        Some((name, pos)) => Err(Error::UnboundAtom {
            name: name.to_string(),
            pos,
        }),
        None => Ok(()),
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFormula::Prop(Proposition::True) => f.write_str("true"),
            StateFormula::Prop(Proposition::False) => f.write_str("false"),
            StateFormula::Prop(p) => write!(f, "[{p}]"),
            StateFormula::Exists(p) => write!(f, "E {p}"),
            StateFormula::Forall(p) => write!(f, "A {p}"),
            StateFormula::Not(a) => write!(f, "!{a}"),
            StateFormula::And(a, b) => write!(f, "({a} && {b})"),
        }
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFormula::Next(a) => write!(f, "X {a}"),
            PathFormula::Until(a, b) => write!(f, "({a} U {b})"),
        }
    }
}

/// Atom names bound to subspaces of one ambient space.
#[derive(Debug, Clone)]
pub struct Bindings {
    dim: usize,
    map: BTreeMap<String, Subspace>,
}

impl Bindings {
    pub fn new(dim: usize) -> Self {
        Bindings {
            dim,
            map: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn insert(&mut self, name: &str, x: Subspace) -> Result<()> {
        if x.ambient_dim() != self.dim {
            return Err(Error::dims(format!(
                "`{name}` is a subspace of C^{}, expected C^{}",
                x.ambient_dim(),
                self.dim
            )));
        }
        self.map.insert(name.to_string(), x);
        Ok(())
    }

    pub fn with(mut self, name: &str, x: Subspace) -> Result<Self> {
        self.insert(name, x)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&Subspace> {
        self.map.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }
}

/// `⟦p⟧` by structural recursion.
pub fn eval_prop(p: &Proposition, bindings: &Bindings) -> Result<Subspace> {
    Ok(match p {
        Proposition::True => Subspace::full(bindings.dim),
        Proposition::False => Subspace::zero(bindings.dim),
        Proposition::Atom { name, pos } => {
            bindings
                .get(name)
                .cloned()
                .ok_or_else(|| Error::UnboundAtom {
                    name: name.clone(),
                    pos: *pos,
                })?
        }
        Proposition::Not(a) => eval_prop(a, bindings)?.orthocomplement(),
        Proposition::And(a, b) => eval_prop(a, bindings)?.intersect(&eval_prop(b, bindings)?)?,
        Proposition::Or(a, b) => eval_prop(a, bindings)?.join(&eval_prop(b, bindings)?)?,
    })
}

/// `ρ ⊨ p` iff `supp(ρ) ⊆ ⟦p⟧`.
pub fn satisfies_atomic(rho: &CMatrix, p: &Proposition, bindings: &Bindings) -> Result<bool> {
    let space = eval_prop(p, bindings)?;
    if rho.shape() != (space.ambient_dim(), space.ambient_dim()) {
        return Err(Error::dims(format!(
            "{}x{} state against propositions over C^{}",
            rho.nrows(),
            rho.ncols(),
            space.ambient_dim()
        )));
    }
    space.contains(&support(rho)?)
}

struct FormulaParser<'a> {
    cur: &'a mut Cursor,
}

const UNARY_SUGAR: &[&str] = &["EX", "AX", "EF", "AF", "EG", "AG"];

impl FormulaParser<'_> {
    fn imp(&mut self) -> Result<StateFormula> {
        let lhs = self.or()?;
        if self.cur.eat_punct("->") {
            let rhs = self.imp()?;
            return Ok(StateFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<StateFormula> {
        let mut lhs = self.and()?;
        while self.cur.eat_punct("||") {
            let rhs = self.and()?;
            lhs = StateFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<StateFormula> {
        let mut lhs = self.unary()?;
        while self.cur.eat_punct("&&") {
            let rhs = self.unary()?;
            lhs = StateFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<StateFormula> {
        if self.cur.eat_punct("!") {
            return Ok(StateFormula::not(self.unary()?));
        }
        if self.cur.eat_punct("(") {
            let f = self.imp()?;
            self.cur.expect_punct(")")?;
            return Ok(f);
        }
        if self.cur.eat_punct("[") {
            let p = self.prop()?;
            self.cur.expect_punct("]")?;
            return Ok(StateFormula::Prop(p));
        }
        let word = match self.cur.peek() {
            Tok::Ident(w) => w.clone(),
            _ => {
                return Err(self.cur.error(format!(
                    "expected a state formula, found {}",
                    self.cur.describe()
                )))
            }
        };
        match word.as_str() {
            "true" | "false" => {
                self.cur.bump();
                Ok(StateFormula::Prop(if word == "true" {
                    Proposition::True
                } else {
                    Proposition::False
                }))
            }
            "E" | "A" => {
                self.cur.bump();
                self.path(word == "E")
            }
            w if UNARY_SUGAR.contains(&w) => {
                self.cur.bump();
                let f = self.unary()?;
                Ok(match w {
                    "EX" => StateFormula::ex(f),
                    "AX" => StateFormula::ax(f),
                    "EF" => StateFormula::ef(f),
                    "AF" => StateFormula::af(f),
                    "EG" => StateFormula::eg(f),
                    _ => StateFormula::ag(f),
                })
            }
            _ => Err(self.cur.error(format!(
                "unexpected `{word}`; atomic propositions go inside `[ ]`"
            ))),
        }
    }

    fn path(&mut self, exists: bool) -> Result<StateFormula> {
        if self.cur.eat_punct("(") {
            let a = self.imp()?;
            self.cur.expect_keyword("U")?;
            let b = self.imp()?;
            self.cur.expect_punct(")")?;
            return Ok(if exists {
                StateFormula::eu(a, b)
            } else {
                StateFormula::au(a, b)
            });
        }
        let op = match self.cur.peek() {
            Tok::Ident(w) if ["X", "F", "G"].contains(&w.as_str()) => w.clone(),
            _ => {
                return Err(self.cur.error(format!(
                    "expected a path formula (`X`, `F`, `G` or `(.. U ..)`), found {}",
                    self.cur.describe()
                )))
            }
        };
        self.cur.bump();
        let f = self.unary()?;
        Ok(match (op.as_str(), exists) {
            ("X", true) => StateFormula::ex(f),
            ("X", false) => StateFormula::ax(f),
            ("F", true) => StateFormula::ef(f),
            ("F", false) => StateFormula::af(f),
            ("G", true) => StateFormula::eg(f),
            _ => StateFormula::ag(f),
        })
    }

    fn prop(&mut self) -> Result<Proposition> {
        let mut lhs = self.prop_and()?;
        while self.cur.eat_punct("|") {
            let rhs = self.prop_and()?;
            lhs = Proposition::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn prop_and(&mut self) -> Result<Proposition> {
        let mut lhs = self.prop_unary()?;
        while self.cur.eat_punct("&") {
            let rhs = self.prop_unary()?;
            lhs = Proposition::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn prop_unary(&mut self) -> Result<Proposition> {
        if self.cur.eat_punct("~") {
            return Ok(Proposition::not(self.prop_unary()?));
        }
        if self.cur.eat_punct("(") {
            let p = self.prop()?;
            self.cur.expect_punct(")")?;
            return Ok(p);
        }
        if self.cur.is_punct("!") {
            return Err(self
                .cur
                .error("`!` is classical negation; use `~` inside `[ ]`"));
        }
        let (name, pos) = self.cur.expect_ident("an atomic proposition")?;
        Ok(match name.as_str() {
            "true" => Proposition::True,
            "false" => Proposition::False,
            _ => Proposition::Atom { name, pos },
        })
    }
}

pub fn parse_formula(text: &str) -> Result<StateFormula> {
    let mut cur = Cursor::new(tokenize(text, Pos { line: 1, col: 1 }, false)?);
    let f = FormulaParser { cur: &mut cur }.imp()?;
    if !cur.at_eof() {
        return Err(cur.error(format!("unexpected {} after formula", cur.describe())));
    }
    Ok(f)
}

/// A matrix literal `[[a, b], [c, d]]` with complex entries such as `0.5i`.
pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let mut cur = Cursor::new(tokenize(text, Pos { line: 1, col: 1 }, false)?);
    let m = cur.expect_matrix()?;
    if !cur.at_eof() {
        return Err(cur.error(format!("unexpected {} after matrix", cur.describe())));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeclKind {
    /// Ket strings, exactly as written.
    Span(Vec<String>),
    /// Column space of a matrix.
    Colspan(CMatrix),
}

#[derive(Debug, Clone)]
pub struct Declaration {
    pub name: String,
    pub kind: DeclKind,
    pub pos: Pos,
    /// Start of each ket string's contents, for diagnostics.
    pub string_pos: Vec<Pos>,
}

impl PartialEq for Declaration {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub label: String,
    pub formula: StateFormula,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssertionFile {
    pub declarations: Vec<Declaration>,
    pub assertions: Vec<Assertion>,
}

pub fn parse_assertions(text: &str) -> Result<AssertionFile> {
    let mut cur = Cursor::new(tokenize(text, Pos { line: 1, col: 1 }, false)?);
    let mut file = AssertionFile::default();
    while !cur.at_eof() {
        if cur.eat_ident("let") {
            let (name, pos) = cur.expect_ident("a proposition name")?;
            if ["true", "false"].contains(&name.as_str()) {
                return Err(Error::syntax(pos, format!("`{name}` is reserved")));
            }
            if file.declarations.iter().any(|d| d.name == name) {
                return Err(Error::syntax(pos, format!("`{name}` is declared twice")));
            }
            cur.expect_punct("=")?;
            let (kind, string_pos) = if cur.eat_ident("span") {
                cur.expect_punct("{")?;
                let mut kets = Vec::new();
                let mut poss = Vec::new();
                loop {
                    let (s, p) = cur.expect_string()?;
                    kets.push(s);
                    poss.push(Pos {
                        line: p.line,
                        col: p.col + 1,
                    });
                    if !cur.eat_punct(",") {
                        break;
                    }
                }
                cur.expect_punct("}")?;
                (DeclKind::Span(kets), poss)
            } else if cur.eat_ident("colspan") {
                (DeclKind::Colspan(cur.expect_matrix()?), Vec::new())
            } else {
                return Err(cur.error(format!(
                    "expected `span` or `colspan`, found {}",
                    cur.describe()
                )));
            };
            file.declarations.push(Declaration {
                name,
                kind,
                pos,
                string_pos,
            });
        } else if cur.eat_ident("assert") {
            let (label, _) = cur.expect_string()?;
            cur.expect_punct(":")?;
            let formula = FormulaParser { cur: &mut cur }.imp()?;
            file.assertions.push(Assertion { label, formula });
        } else {
            return Err(cur.error(format!(
                "expected `let` or `assert`, found {}",
                cur.describe()
            )));
        }
    }
    Ok(file)
}

pub fn serialize_assertions(file: &AssertionFile) -> String {
    let mut out = String::new();
    for d in &file.declarations {
        match &d.kind {
            DeclKind::Span(kets) => {
                let ks: Vec<String> = kets.iter().map(|k| format!("\"{k}\"")).collect();
                let _ = writeln!(out, "let {} = span {{ {} }}", d.name, ks.join(", "));
            }
            DeclKind::Colspan(m) => {
                let _ = writeln!(out, "let {} = colspan {}", d.name, format_matrix(m));
            }
        }
    }
    for a in &file.assertions {
        let _ = writeln!(out, "assert \"{}\" : {}", a.label, a.formula);
    }
    out
}

/// Evaluates every declaration on `n_qubits` qubits.
pub fn bind(file: &AssertionFile, n_qubits: usize) -> Result<Bindings> {
    let dim = 1usize << n_qubits;
    let mut b = Bindings::new(dim);
    for d in &file.declarations {
        let x = match &d.kind {
            DeclKind::Span(kets) => {
                let vs = kets
                    .iter()
                    .enumerate()
                    .map(|(i, k)| {
                        let origin = d.string_pos.get(i).copied().unwrap_or(d.pos);
                        parse_ket_at(k, n_qubits, origin)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Subspace::span(&vs)?
            }
            DeclKind::Colspan(m) => {
                if m.nrows() != dim {
                    return Err(Error::syntax(
                        d.pos,
                        format!("`{}` has {} rows, expected {dim}", d.name, m.nrows()),
                    ));
                }
                Subspace::column_space(m)
            }
        };
        b.insert(&d.name, x)?;
    }
    Ok(b)
}

#[derive(Debug, Clone)]
enum KetVal {
    Scalar(Complex64),
    /// Amplitudes on `qubits` qubits.
    Vector(CVector, usize),
}

struct KetParser<'a> {
    cur: &'a mut Cursor,
}

impl KetParser<'_> {
    fn expr(&mut self) -> Result<KetVal> {
        let mut acc = self.term()?;
        loop {
            let pos = self.cur.pos();
            let sign = if self.cur.eat_punct("+") {
                1.0
            } else if self.cur.eat_punct("-") {
                -1.0
            } else {
                return Ok(acc);
            };
            let rhs = self.term()?;
            acc = match (acc, rhs) {
                (KetVal::Scalar(a), KetVal::Scalar(b)) => KetVal::Scalar(a + b * sign),
                (KetVal::Vector(a, n), KetVal::Vector(b, m)) if n == m => {
                    KetVal::Vector(a + b * cr(sign), n)
                }
                (KetVal::Vector(_, n), KetVal::Vector(_, m)) => {
                    return Err(Error::syntax(
                        pos,
                        format!("adding a {n}-qubit and a {m}-qubit ket"),
                    ))
                }
                _ => return Err(Error::syntax(pos, "cannot add a scalar and a ket")),
            };
        }
    }

    fn starts_factor(&self) -> bool {
        match self.cur.peek() {
            Tok::Number { .. } | Tok::Imag(_) | Tok::Ket(_) => true,
            Tok::Ident(w) => w == "i" || w.starts_with("sqrt"),
            Tok::Punct(p) => *p == "(",
            _ => false,
        }
    }

    fn term(&mut self) -> Result<KetVal> {
        let mut acc = self.factor()?;
        loop {
            let pos = self.cur.pos();
            if self.cur.eat_punct("/") {
                match self.factor()? {
                    KetVal::Scalar(s) if s.norm() > 0.0 => {
                        acc = match acc {
                            KetVal::Scalar(a) => KetVal::Scalar(a / s),
                            KetVal::Vector(v, n) => KetVal::Vector(v.unscale(1.0) / s, n),
                        }
                    }
                    KetVal::Scalar(_) => return Err(Error::syntax(pos, "division by zero")),
                    KetVal::Vector(..) => return Err(Error::syntax(pos, "cannot divide by a ket")),
                }
                continue;
            }
            if !(self.cur.eat_punct("*") || self.starts_factor()) {
                return Ok(acc);
            }
            let rhs = self.factor()?;
            acc = match (acc, rhs) {
                (KetVal::Scalar(a), KetVal::Scalar(b)) => KetVal::Scalar(a * b),
                (KetVal::Scalar(a), KetVal::Vector(v, n))
                | (KetVal::Vector(v, n), KetVal::Scalar(a)) => KetVal::Vector(v * a, n),
                (KetVal::Vector(u, n), KetVal::Vector(v, m)) => {
                    if n + m > 16 {
                        return Err(Error::syntax(pos, "ket has more than 16 qubits"));
                    }
                    KetVal::Vector(v.kronecker(&u), n + m)
                }
            };
        }
    }

    fn factor(&mut self) -> Result<KetVal> {
        let pos = self.cur.pos();
        if self.cur.eat_punct("-") {
            return Ok(match self.factor()? {
                KetVal::Scalar(a) => KetVal::Scalar(-a),
                KetVal::Vector(v, n) => KetVal::Vector(-v, n),
            });
        }
        if self.cur.eat_punct("(") {
            let v = self.expr()?;
            self.cur.expect_punct(")")?;
            return Ok(v);
        }
        match self.cur.peek().clone() {
            Tok::Number { value, .. } => {
                self.cur.bump();
                Ok(KetVal::Scalar(cr(value)))
            }
            Tok::Imag(value) => {
                self.cur.bump();
                Ok(KetVal::Scalar(c(0.0, value)))
            }
            Tok::Ident(w) if w == "i" => {
                self.cur.bump();
                Ok(KetVal::Scalar(c(0.0, 1.0)))
            }
            Tok::Ident(w) if w == "sqrt2" => {
                self.cur.bump();
                Ok(KetVal::Scalar(cr(std::f64::consts::SQRT_2)))
            }
            Tok::Ident(w) if w == "sqrt" => {
                self.cur.bump();
                self.cur.expect_punct("(")?;
                let arg = self.expr()?;
                self.cur.expect_punct(")")?;
                match arg {
                    KetVal::Scalar(s) => Ok(KetVal::Scalar(s.sqrt())),
                    KetVal::Vector(..) => Err(Error::syntax(pos, "sqrt of a ket")),
                }
            }
            Tok::Ket(body) => {
                self.cur.bump();
                ket_literal(&body, pos).map(|(v, n)| KetVal::Vector(v, n))
            }
            _ => Err(self.cur.error(format!(
                "expected a number or ket, found {}",
                self.cur.describe()
            ))),
        }
    }
}

fn ket_literal(body: &str, pos: Pos) -> Result<(CVector, usize)> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVector::from_element(1, cr(1.0));
    let mut n = 0;
    for ch in body.chars() {
        let q = match ch {
            '0' => basis_vector(2, 0),
            '1' => basis_vector(2, 1),
            '+' => CVector::from_vec(vec![cr(s), cr(s)]),
            '-' => CVector::from_vec(vec![cr(s), cr(-s)]),
            ' ' => continue,
            other => {
                return Err(Error::syntax(
                    pos,
                    format!("`{other}` is not a ket symbol (use 0 1 + -)"),
                ))
            }
        };
        v = q.kronecker(&v);
        n += 1;
    }
    if n == 0 {
        return Err(Error::syntax(pos, "empty ket"));
    }
    if n > 16 {
        return Err(Error::syntax(pos, "ket has more than 16 qubits"));
    }
    Ok((v, n))
}

/// Evaluates a ket expression to a vector on `n_qubits` qubits.
pub fn parse_ket(text: &str, n_qubits: usize) -> Result<CVector> {
    parse_ket_at(text, n_qubits, Pos { line: 1, col: 1 })
}

fn parse_ket_at(text: &str, n_qubits: usize, origin: Pos) -> Result<CVector> {
    let mut cur = Cursor::new(tokenize(text, origin, true)?);
    let v = KetParser { cur: &mut cur }.expr()?;
    if !cur.at_eof() {
        return Err(cur.error(format!("unexpected {} in ket expression", cur.describe())));
    }
    match v {
        KetVal::Vector(v, n) if n == n_qubits => {
            if v.norm() == 0.0 {
                Err(Error::syntax(origin, "ket expression is the zero vector"))
            } else {
                Ok(v)
            }
        }
        KetVal::Vector(_, n) => Err(Error::syntax(
            origin,
            format!("ket has {n} qubit(s), the model has {n_qubits}"),
        )),
        KetVal::Scalar(_) => Err(Error::syntax(origin, "expected a ket, found a scalar")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::outer;

    fn ket(i: usize) -> CVector {
        basis_vector(2, i)
    }

    fn plus() -> CVector {
        CVector::from_vec(vec![cr(1.0), cr(1.0)]).unscale(2f64.sqrt())
    }

    fn qubit_bindings() -> Bindings {
        Bindings::new(2)
            .with("zero", Subspace::span(&[ket(0)]).unwrap())
            .unwrap()
            .with("one", Subspace::span(&[ket(1)]).unwrap())
            .unwrap()
            .with("all", Subspace::full(2))
            .unwrap()
    }

    #[test]
    fn eval_prop_examples() {
        let b = qubit_bindings();
        assert!(eval_prop(&Proposition::not(Proposition::atom("all")), &b)
            .unwrap()
            .is_zero());
        let or = Proposition::or(Proposition::atom("zero"), Proposition::atom("one"));
        assert_eq!(eval_prop(&or, &b).unwrap().dim(), 2);
        let and = Proposition::and(
            Proposition::atom("all"),
            Proposition::not(Proposition::atom("zero")),
        );
        let got = eval_prop(&and, &b).unwrap();
        assert!(got.approx_eq(&Subspace::span(&[ket(1)]).unwrap()).unwrap());
        assert!(matches!(
            eval_prop(&Proposition::atom("nope"), &b),
            Err(Error::UnboundAtom { .. })
        ));
    }

    #[test]
    fn satisfaction_examples() {
        let b = qubit_bindings();
        assert!(satisfies_atomic(&outer(&plus()), &Proposition::True, &b).unwrap());
        assert!(!satisfies_atomic(&outer(&plus()), &Proposition::atom("zero"), &b).unwrap());
        let or = Proposition::or(Proposition::atom("zero"), Proposition::atom("one"));
        assert!(satisfies_atomic(&CMatrix::identity(2, 2).scale(0.5), &or, &b).unwrap());
        let not_zero = Proposition::not(Proposition::atom("zero"));
        assert!(!satisfies_atomic(&outer(&plus()), &not_zero, &b).unwrap());
    }

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse_formula("E (true U [psi3])").unwrap(),
            StateFormula::eu(
                StateFormula::tt(),
                StateFormula::prop(Proposition::atom("psi3"))
            )
        );
        assert_eq!(
            parse_formula("A X [ ~p & q ]").unwrap(),
            StateFormula::ax(StateFormula::prop(Proposition::and(
                Proposition::not(Proposition::atom("p")),
                Proposition::atom("q")
            )))
        );
        assert_ne!(
            parse_formula("! [p]").unwrap(),
            parse_formula("[ ~p ]").unwrap()
        );
        assert_eq!(
            parse_formula("AG [p]").unwrap(),
            parse_formula("!E (true U ![p])").unwrap()
        );
        assert_eq!(
            parse_formula("[a] || [b] -> [c]").unwrap(),
            StateFormula::implies(
                StateFormula::or(
                    StateFormula::prop(Proposition::atom("a")),
                    StateFormula::prop(Proposition::atom("b"))
                ),
                StateFormula::prop(Proposition::atom("c"))
            )
        );
    }

    #[test]
    fn atoms_keep_positions() {
        let f = parse_formula("A X\n  [p & qq]").unwrap();
        let props = f.propositions();
        let mut atoms = Vec::new();
        props[0].collect_atoms(&mut atoms);
        assert_eq!(
            atoms,
            vec![
                ("p", Pos { line: 2, col: 4 }),
                ("qq", Pos { line: 2, col: 8 })
            ]
        );
        match f.check_bound(&Bindings::new(2)) {
            Err(Error::UnboundAtom { name, pos }) => {
                assert_eq!(name, "p");
                assert_eq!(pos, Pos { line: 2, col: 4 });
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn printer_round_trips() {
        for text in [
            "E (true U [psi3])",
            "A X [~p & q]",
            "!(E X [a | ~(b & c)] && A ([a] U false))",
            "EG [p] -> AF ([q] || true)",
        ] {
            let f = parse_formula(text).unwrap();
            assert_eq!(parse_formula(&f.to_string()).unwrap(), f, "{text} -> {f}");
        }
    }

    #[test]
    fn syntax_errors_are_located() {
        for (text, col) in [
            ("E [p]", 3),
            ("[p] &&", 7),
            ("A X [!p]", 6),
            ("foo", 1),
            ("[p] [q]", 5),
        ] {
            match parse_formula(text) {
                Err(Error::Syntax { pos, .. }) => assert_eq!(pos.col, col, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn ket_expressions() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = parse_ket("(|01> + |10>)/sqrt2", 2).unwrap();
        // |01> has qubit 2 set: index 2
        assert!((v[2] - cr(s)).norm() < 1e-15 && (v[1] - cr(s)).norm() < 1e-15);
        let w = parse_ket("|0> * (0.6|0> + 0.8i|1>)", 2).unwrap();
        assert!((w[0] - cr(0.6)).norm() < 1e-15);
        assert!((w[2] - c(0.0, 0.8)).norm() < 1e-15);
        let p = parse_ket("|+->", 2).unwrap();
        assert!((p[1] - cr(0.5)).norm() < 1e-15 && (p[2] - cr(-0.5)).norm() < 1e-15);
        assert!((parse_ket("sqrt(4) i |1>", 1).unwrap()[1] - c(0.0, 2.0)).norm() < 1e-15);
        assert!(matches!(parse_ket("|0>", 2), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse_ket("|0> - |0>", 1),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_ket("|2>", 1),
            Err(Error::Syntax {
                pos: Pos { line: 1, col: 1 },
                ..
            })
        ));
    }

    #[test]
    fn assertion_files_round_trip_and_bind() {
        let text = r#"
            # comment
            let zero = span { "|0>" }
            let mix = colspan [[1, 0], [0, 0.5i]]
            assert "starts in zero" : [zero]
            assert "stays" : AG [zero | mix]
        "#;
        let file = parse_assertions(text).unwrap();
        assert_eq!(file.declarations.len(), 2);
        assert_eq!(file.assertions.len(), 2);
        let again = parse_assertions(&serialize_assertions(&file)).unwrap();
        assert_eq!(again, file);
        let b = bind(&file, 1).unwrap();
        assert_eq!(b.get("zero").unwrap().dim(), 1);
        assert_eq!(b.get("mix").unwrap().dim(), 2);
        match bind(
            &parse_assertions("let z = span { \"|0> + |x>\" }").unwrap(),
            1,
        ) {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, Pos { line: 1, col: 23 }),
            other => panic!("{other:?}"),
        }
    }
}
