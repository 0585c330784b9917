//! Tokenizer and token cursor shared by the model, assertion and ket parsers.

use num_complex::Complex64;

use crate::error::{Error, Pos, Result};
use crate::linalg::CMatrix;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    /// Real literal; `text` keeps the spelling so integers can be recognised.
    Number {
        value: f64,
        text: String,
    },
    /// Literal with an `i` suffix, e.g. `0.5i`.
    Imag(f64),
    Str(String),
    /// `|...>` inside ket expressions.
    Ket(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const PUNCT: &[&str] = &[
    "->", "&&", "||", "(", ")", "[", "]", "{", "}", ",", ";", ":", "=", "+", "-", "*", "/", "!",
    "~", "&", "|",
];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

/// Tokenizes `src`. Positions are offset by `origin` so that text embedded in
/// a string literal reports positions in the enclosing file. With `kets`
/// set, `|bits>` is read as a single ket token.
pub(crate) fn tokenize(src: &str, origin: Pos, kets: bool) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let (mut line, mut col) = (origin.line, origin.col);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let ch = chars[i];
        let pos = Pos { line, col };
        if ch.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if ch == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if kets && ch == '|' {
            let mut j = i + 1;
            while j < chars.len() && chars[j] != '>' && chars[j] != '\n' {
                j += 1;
            }
            if j >= chars.len() || chars[j] != '>' {
                return Err(Error::syntax(pos, "unterminated ket, expected `>`"));
            }
            let body: String = chars[i + 1..j].iter().collect();
            out.push(Token {
                tok: Tok::Ket(body),
                pos,
            });
            let n = j + 1 - i;
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        if ch == '"' {
            let mut j = i + 1;
            while j < chars.len() && chars[j] != '"' {
                if chars[j] == '\n' {
                    return Err(Error::syntax(pos, "unterminated string literal"));
                }
                j += 1;
            }
            if j >= chars.len() {
                return Err(Error::syntax(pos, "unterminated string literal"));
            }
            let body: String = chars[i + 1..j].iter().collect();
            out.push(Token {
                tok: Tok::Str(body),
                pos,
            });
            let n = j + 1 - i;
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        if ch.is_ascii_digit()
            || (ch == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()))
        {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                j += 1;
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let text: String = chars[i..j].iter().collect();
            let value: f64 = text
                .parse()
                .map_err(|_| Error::syntax(pos, format!("malformed number `{text}`")))?;
            let imag = j < chars.len()
                && chars[j] == 'i'
                && !chars.get(j + 1).is_some_and(|c| is_ident_char(*c));
            let tok = if imag {
                j += 1;
                Tok::Imag(value)
            } else {
                Tok::Number { value, text }
            };
            out.push(Token { tok, pos });
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        if is_ident_start(ch) {
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            out.push(Token {
                tok: Tok::Ident(word),
                pos,
            });
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        if let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) {
            out.push(Token {
                tok: Tok::Punct(p),
                pos,
            });
            advance(&mut i, &mut line, &mut col, p.len());
            continue;
        }
        return Err(Error::syntax(pos, format!("unexpected character `{ch}`")));
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

pub(crate) struct Cursor {
    toks: Vec<Token>,
    at: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Token>) -> Self {
        Cursor { toks, at: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    pub fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    pub fn is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == word)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_ident(&mut self, word: &str) -> bool {
        if self.is_ident(word) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        Error::syntax(self.pos(), msg)
    }

    pub fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(w) => format!("`{w}`"),
            Tok::Number { text, .. } => format!("number `{text}`"),
            Tok::Imag(v) => format!("`{v}i`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Ket(k) => format!("ket `|{k}>`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<Pos> {
        let pos = self.pos();
        if self.eat_punct(p) {
            Ok(pos)
        } else {
            Err(self.error(format!("expected `{p}`, found {}", self.describe())))
        }
    }

    pub fn expect_keyword(&mut self, word: &str) -> Result<Pos> {
        let pos = self.pos();
        if self.eat_ident(word) {
            Ok(pos)
        } else {
            Err(self.error(format!("expected `{word}`, found {}", self.describe())))
        }
    }

    pub fn expect_ident(&mut self, what: &str) -> Result<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(w) => {
                self.bump();
                Ok((w, pos))
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.describe()))),
        }
    }

    pub fn expect_uint(&mut self, what: &str) -> Result<(u64, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Number { text, .. } if text.chars().all(|c| c.is_ascii_digit()) => {
                self.bump();
                text.parse()
                    .map(|v| (v, pos))
                    .map_err(|_| Error::syntax(pos, format!("{what} `{text}` is out of range")))
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.describe()))),
        }
    }

    pub fn expect_string(&mut self) -> Result<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok((s, pos))
            }
            _ => Err(self.error(format!("expected a string, found {}", self.describe()))),
        }
    }

    /// Signed real number, e.g. `-0.25` or `3e-2`.
    pub fn expect_real(&mut self) -> Result<f64> {
        let neg = if self.eat_punct("-") {
            true
        } else {
            self.eat_punct("+");
            false
        };
        match self.peek().clone() {
            Tok::Number { value, .. } => {
                self.bump();
                Ok(if neg { -value } else { value })
            }
            _ => Err(self.error(format!("expected a number, found {}", self.describe()))),
        }
    }
}

impl Cursor {
    /// Complex literal: a signed sum of real and imaginary terms such as
    /// `0.5`, `-0.5i`, `1+2i` or `i`.
    pub fn expect_complex(&mut self) -> Result<Complex64> {
        let mut z = Complex64::new(0.0, 0.0);
        let mut first = true;
        loop {
            let sign = if self.eat_punct("-") {
                -1.0
            } else if self.eat_punct("+") || first {
                1.0
            } else {
                break;
            };
            match self.peek().clone() {
                Tok::Number { value, .. } => z.re += sign * value,
                Tok::Imag(value) => z.im += sign * value,
                Tok::Ident(w) if w == "i" => z.im += sign,
                _ => {
                    return Err(self.error(format!("expected a number, found {}", self.describe())))
                }
            }
            self.bump();
            first = false;
        }
        Ok(z)
    }

    /// `[[a, b], [c, d]]`, rows of complex literals.
    pub fn expect_matrix(&mut self) -> Result<CMatrix> {
        let start = self.pos();
        self.expect_punct("[")?;
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        loop {
            self.expect_punct("[")?;
            let mut row = vec![self.expect_complex()?];
            while self.eat_punct(",") {
                row.push(self.expect_complex()?);
            }
            self.expect_punct("]")?;
            rows.push(row);
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct("]")?;
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::syntax(start, "matrix rows have different lengths"));
        }
        let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
        Ok(CMatrix::from_row_slice(flat.len() / cols, cols, &flat))
    }
}

/// Inverse of [`Cursor::expect_complex`]; exact for finite values.
pub(crate) fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{:?}", z.re)
    } else if z.re == 0.0 {
        format!("{:?}i", z.im)
    } else if z.im < 0.0 {
        format!("{:?}-{:?}i", z.re, -z.im)
    } else {
        format!("{:?}+{:?}i", z.re, z.im)
    }
}

pub(crate) fn format_matrix(m: &CMatrix) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let cells: Vec<String> = (0..m.ncols()).map(|j| format_complex(m[(i, j)])).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}
