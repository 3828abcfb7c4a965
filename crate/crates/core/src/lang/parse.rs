//! `.rasp` concrete syntax.
//!
//! Header lines (`dialect:`, `sigma:`, `gamma:`, `io:`, `minlen:`) are read
//! line by line; tables and definitions go through the tokenizer.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{
    ArithOp, Attention, Choice, CmpOp, Def, Dialect, Expr, Io, Mask, MinLen, Pat, Program, Rhs,
    Step, Table, TableRow, Value, Var,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown dialect `{0}`")]
    UnknownDialect(String),
    #[error("duplicate definition of `{0}`")]
    DuplicateDefinition(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError {
        line,
        col,
        kind: ParseErrorKind::Syntax(msg.into()),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    Char(char),
    Str(String),
    Punct(&'static str),
    Other(char),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(k) => format!("`{k}`"),
            Tok::Char(c) => format!("'{c}'"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Other(c) => format!("`{c}`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCT: &[(&str, &str)] = &[
    ("->", "->"),
    ("→", "->"),
    ("!=", "!="),
    ("≠", "!="),
    ("<=", "<="),
    ("≤", "<="),
    (">=", ">="),
    ("≥", ">="),
    ("(", "("),
    (")", ")"),
    ("[", "["),
    ("]", "]"),
    ("{", "{"),
    ("}", "}"),
    (",", ","),
    (";", ";"),
    (":", ":"),
    ("=", "="),
    ("<", "<"),
    (">", ">"),
    ("+", "+"),
    ("-", "-"),
    (".", "."),
    ("·", "."),
];

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

fn tokenize(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut k, mut line, mut col) = (0usize, 1usize, 1usize);
    while k < chars.len() {
        let c = chars[k];
        let (tl, tc) = (line, col);
        let advance = |n: usize, k: &mut usize, col: &mut usize| {
            *k += n;
            *col += n;
        };
        if c == '\n' {
            k += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut k, &mut col);
            continue;
        }
        if c == '#' {
            while k < chars.len() && chars[k] != '\n' {
                k += 1;
            }
            continue;
        }
        if c == '\'' || c == '"' {
            let mut text = String::new();
            let mut m = k + 1;
            loop {
                match chars.get(m) {
                    None | Some('\n') => return Err(syntax(tl, tc, "unterminated literal")),
                    Some('\\') => {
                        let e = *chars
                            .get(m + 1)
                            .ok_or_else(|| syntax(tl, tc, "bad escape"))?;
                        text.push(e);
                        m += 2;
                    }
                    Some(&q) if q == c => break,
                    Some(&q) => {
                        text.push(q);
                        m += 1;
                    }
                }
            }
            let len = m + 1 - k;
            let tok = if c == '"' {
                Tok::Str(text)
            } else {
                let mut it = text.chars();
                match (it.next(), it.next()) {
                    (Some(s), None) => Tok::Char(s),
                    _ => {
                        return Err(syntax(
                            tl,
                            tc,
                            "symbol literal must hold exactly one character",
                        ))
                    }
                }
            };
            out.push(Spanned {
                tok,
                line: tl,
                col: tc,
            });
            advance(len, &mut k, &mut col);
            continue;
        }
        if c == '⊤' || c == '⊥' {
            let word = if c == '⊤' { "true" } else { "false" };
            out.push(Spanned {
                tok: Tok::Ident(word.into()),
                line: tl,
                col: tc,
            });
            advance(1, &mut k, &mut col);
            continue;
        }
        if c.is_ascii_digit() {
            let mut m = k;
            while m < chars.len() && chars[m].is_ascii_digit() {
                m += 1;
            }
            let digits: String = chars[k..m].iter().collect();
            let v = digits
                .parse()
                .map_err(|_| syntax(tl, tc, "integer literal too large"))?;
            out.push(Spanned {
                tok: Tok::Int(v),
                line: tl,
                col: tc,
            });
            advance(m - k, &mut k, &mut col);
            continue;
        }
        if is_ident_char(c) {
            let mut m = k;
            while m < chars.len() && is_ident_char(chars[m]) {
                m += 1;
            }
            let word: String = chars[k..m].iter().collect();
            out.push(Spanned {
                tok: Tok::Ident(word),
                line: tl,
                col: tc,
            });
            advance(m - k, &mut k, &mut col);
            continue;
        }
        let rest: String = chars[k..chars.len().min(k + 2)].iter().collect();
        if let Some((lit, canon)) = PUNCT.iter().find(|(lit, _)| rest.starts_with(lit)) {
            out.push(Spanned {
                tok: Tok::Punct(canon),
                line: tl,
                col: tc,
            });
            advance(lit.chars().count(), &mut k, &mut col);
            continue;
        }
        out.push(Spanned {
            tok: Tok::Other(c),
            line: tl,
            col: tc,
        });
        advance(1, &mut k, &mut col);
    }
    Ok(out)
}

struct Header {
    dialect: Option<Dialect>,
    io: Option<Io>,
    sigma: Vec<char>,
    gamma: Vec<char>,
    minlen: Option<MinLen>,
}

fn strip_comment(line: &str) -> &str {
    let mut quote = None;
    for (k, c) in line.char_indices() {
        match (quote, c) {
            (None, '#') => return &line[..k],
            (None, '\'' | '"') => quote = Some(c),
            (Some(q), c) if c == q => quote = None,
            _ => {}
        }
    }
    line
}

fn alphabet(text: &str, line: usize, col: usize) -> Result<Vec<char>, ParseError> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut it = word.chars();
        match (it.next(), it.next()) {
            (Some(c), None) => {
                if out.contains(&c) {
                    return Err(syntax(line, col, format!("symbol `{c}` listed twice")));
                }
                out.push(c)
            }
            _ => {
                return Err(syntax(
                    line,
                    col,
                    format!("alphabet entry `{word}` is not a single character"),
                ))
            }
        }
    }
    Ok(out)
}

/// Read header lines and blank them out so the tokenizer keeps positions.
fn split_header(src: &str) -> Result<(Header, String), ParseError> {
    let mut h = Header {
        dialect: None,
        io: None,
        sigma: Vec::new(),
        gamma: Vec::new(),
        minlen: None,
    };
    let mut body = String::with_capacity(src.len());
    for (ln, raw) in src.split('\n').enumerate() {
        let line = ln + 1;
        let text = strip_comment(raw);
        let trimmed = text.trim_start();
        let col = text.len() - trimmed.len() + 1;
        let key = ["dialect:", "sigma:", "gamma:", "io:", "minlen:"]
            .into_iter()
            .find(|k| trimmed.starts_with(k));
        let Some(key) = key else {
            body.push_str(raw);
            body.push('\n');
            continue;
        };
        let val = trimmed[key.len()..].trim();
        match key {
            "dialect:" => {
                h.dialect = Some(match val {
                    "brasp" => Dialect::Brasp,
                    "brasp_pos" => Dialect::BraspPos,
                    "srasp" => Dialect::Srasp,
                    other => {
                        return Err(ParseError {
                            line,
                            col,
                            kind: ParseErrorKind::UnknownDialect(other.to_string()),
                        })
                    }
                })
            }
            "sigma:" => h.sigma = alphabet(val, line, col)?,
            "gamma:" => h.gamma = alphabet(val, line, col)?,
            "io:" => {
                let words: Vec<&str> = val.split_whitespace().collect();
                h.io = Some(match words.as_slice() {
                    ["length_preserving"] => Io::LengthPreserving,
                    ["padded"] => Io::Padded,
                    ["packed", k] => match k.parse::<usize>() {
                        Ok(k) if k >= 1 => Io::Packed(k),
                        _ => return Err(syntax(line, col, "packed bound must be an integer >= 1")),
                    },
                    _ => return Err(syntax(line, col, format!("unknown io convention `{val}`"))),
                })
            }
            _ => {
                h.minlen = Some(
                    MinLen::parse(val).map_err(|m| syntax(line, col, format!("minlen: {m}")))?,
                )
            }
        }
        for c in raw.chars() {
            body.push(if c == '\t' { '\t' } else { ' ' });
        }
        body.push('\n');
    }
    Ok((h, body))
}

struct Parser {
    toks: Vec<Spanned>,
    at: usize,
    tables: BTreeSet<String>,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|s| &s.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.at + k).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.at).map_or(self.eof, |s| (s.line, s.col))
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (l, c) = self.here();
        let found = self
            .peek()
            .map_or("end of input".to_string(), Tok::describe);
        Err(syntax(l, c, format!("{}, found {found}", msg.into())))
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|s| s.tok.clone());
        self.at += 1;
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.fail(format!("expected `{p}`"))
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), ParseError> {
        if self.eat_word(w) {
            Ok(())
        } else {
            self.fail(format!("expected `{w}`"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            _ => self.fail("expected identifier"),
        }
    }

    fn table(&mut self) -> Result<Table, ParseError> {
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut rows = Vec::new();
        while !self.eat_punct("}") {
            let mut pats = Vec::new();
            while !self.is_punct("->") {
                if self.eat_word("_") {
                    pats.push(Pat::Any);
                } else {
                    pats.push(Pat::Is(self.cell()?));
                }
            }
            self.expect_punct("->")?;
            let out = self.cell()?;
            self.expect_punct(";")?;
            if pats.is_empty() {
                return self.fail("table row needs at least one argument pattern");
            }
            if let Some(first) = rows.first() {
                let first: &TableRow = first;
                if first.pats.len() != pats.len() {
                    return self.fail("table rows disagree on arity");
                }
            }
            rows.push(TableRow { pats, out });
        }
        if rows.is_empty() {
            return self.fail("empty table");
        }
        Ok(Table { name, rows })
    }

    /// A table cell: a literal, or a bare single character as a symbol.
    fn cell(&mut self) -> Result<Value, ParseError> {
        let v = match self.peek() {
            Some(Tok::Int(k)) => Value::Nat(*k),
            Some(Tok::Char(c)) => Value::Sym(*c),
            Some(Tok::Str(s)) => Value::Str(s.clone()),
            Some(Tok::Ident(w)) if w == "true" => Value::Bool(true),
            Some(Tok::Ident(w)) if w == "false" => Value::Bool(false),
            Some(Tok::Ident(w)) if w.chars().count() == 1 => Value::Sym(w.chars().next().unwrap()),
            Some(Tok::Other(c)) => Value::Sym(*c),
            Some(Tok::Punct(p))
                if !matches!(*p, "->" | ";" | "{" | "}") && p.chars().count() == 1 =>
            {
                Value::Sym(p.chars().next().unwrap())
            }
            _ => return self.fail("expected table cell"),
        };
        self.at += 1;
        Ok(v)
    }

    fn def(&mut self) -> Result<Def, ParseError> {
        let name = self.ident()?;
        self.expect_punct("(")?;
        self.expect_word("i")?;
        self.expect_punct(")")?;
        self.expect_punct("=")?;
        let mut implicit_default = false;
        let opens = |p: &Parser, word: &str| {
            p.is_word(word) && matches!(p.peek_at(1), Some(Tok::Ident(j)) if j == "j")
                || p.is_word(&format!("{word}_j")) && matches!(p.peek_at(1), Some(Tok::Punct("[")))
        };
        let rhs = if opens(self, "leftmost") || opens(self, "rightmost") {
            let word = self.ident()?;
            let choice = if word.starts_with("left") {
                Choice::Leftmost
            } else {
                Choice::Rightmost
            };
            if !word.ends_with("_j") {
                self.expect_word("j")?;
            }
            self.expect_punct("[")?;
            let mask = self.mask()?;
            self.expect_punct(",")?;
            let score = self.expr()?;
            self.expect_punct("]")?;
            let value = self.expr()?;
            let default = if self.eat_punct(":") {
                implicit_default = self.eat_word("dead");
                Some(self.expr()?)
            } else {
                None
            };
            Rhs::Attn(Attention {
                choice,
                mask,
                score,
                value,
                default,
            })
        } else if opens(self, "sum") {
            if self.ident()? == "sum" {
                self.expect_word("j")?;
            }
            self.expect_punct("[")?;
            if self.mask()? != Mask::UpTo {
                return self.fail("prefix sums take the mask j<=i");
            }
            self.expect_punct("]")?;
            Rhs::Sum(self.expr()?)
        } else {
            Rhs::Pw(self.expr()?)
        };
        self.expect_punct(";")?;
        Ok(Def {
            name,
            rhs,
            implicit_default,
        })
    }

    fn mask(&mut self) -> Result<Mask, ParseError> {
        if self.eat_word("true") {
            return Ok(Mask::All);
        }
        self.expect_word("j")?;
        let m = match self.bump() {
            Some(Tok::Punct("<")) => Mask::Before,
            Some(Tok::Punct("<=")) => Mask::UpTo,
            Some(Tok::Punct(">")) => Mask::After,
            Some(Tok::Punct(">=")) => Mask::From,
            _ => {
                self.at -= 1;
                return self.fail("expected mask relation");
            }
        };
        self.expect_word("i")?;
        Ok(m)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let then = self.or_expr()?;
        if self.eat_word("if") {
            let c = self.or_expr()?;
            self.expect_word("else")?;
            let otherwise = self.expr()?;
            return Ok(Expr::If(then.into(), c.into(), otherwise.into()));
        }
        Ok(then)
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.and_expr()?;
        while self.eat_word("or") {
            e = Expr::Or(e.into(), self.and_expr()?.into());
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.not_expr()?;
        while self.eat_word("and") {
            e = Expr::And(e.into(), self.not_expr()?.into());
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        // `not(i)` reads a vector called `not`
        let read = matches!(self.peek_at(1), Some(Tok::Punct("(")))
            && matches!(self.peek_at(2), Some(Tok::Ident(v)) if v == "i" || v == "j");
        if !read && self.eat_word("not") {
            return Ok(Expr::Not(self.not_expr()?.into()));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Expr, ParseError> {
        let a = self.cat_expr()?;
        let op = match self.peek() {
            Some(Tok::Punct("=")) => CmpOp::Eq,
            Some(Tok::Punct("!=")) => CmpOp::Ne,
            Some(Tok::Punct("<")) => CmpOp::Lt,
            Some(Tok::Punct("<=")) => CmpOp::Le,
            Some(Tok::Punct(">")) => CmpOp::Gt,
            Some(Tok::Punct(">=")) => CmpOp::Ge,
            _ => return Ok(a),
        };
        self.at += 1;
        let b = self.cat_expr()?;
        Ok(Expr::Cmp(op, a.into(), b.into()))
    }

    fn cat_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.arith_expr()?;
        while self.eat_punct(".") {
            e = Expr::Concat(e.into(), self.arith_expr()?.into());
        }
        Ok(e)
    }

    /// At most one `+`/`-` per level: clipped arithmetic is not associative.
    fn arith_expr(&mut self) -> Result<Expr, ParseError> {
        let a = self.atom()?;
        let op = if self.eat_punct("+") {
            ArithOp::Add
        } else if self.eat_punct("-") {
            ArithOp::Sub
        } else {
            return Ok(a);
        };
        let b = self.atom()?;
        if self.is_punct("+") || self.is_punct("-") {
            return self.fail("chained arithmetic must be parenthesized");
        }
        Ok(Expr::Arith(op, a.into(), b.into()))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(k)) => {
                self.at += 1;
                Ok(Expr::Lit(Value::Nat(k)))
            }
            Some(Tok::Char(c)) => {
                self.at += 1;
                Ok(Expr::Lit(Value::Sym(c)))
            }
            Some(Tok::Str(s)) => {
                self.at += 1;
                Ok(Expr::Lit(Value::Str(s)))
            }
            Some(Tok::Punct("(")) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Some(Tok::Ident(w)) if w == "true" || w == "false" => {
                self.at += 1;
                Ok(Expr::Lit(Value::Bool(w == "true")))
            }
            Some(Tok::Ident(name)) if self.peek_at(1) == Some(&Tok::Punct("(")) => {
                self.at += 2;
                if self.tables.contains(&name) {
                    let mut args = Vec::new();
                    if !self.eat_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_punct(")") {
                                break;
                            }
                            self.expect_punct(",")?;
                        }
                    }
                    return Ok(Expr::Apply(name, args));
                }
                self.read(name)
            }
            _ => self.fail("expected expression"),
        }
    }

    fn read(&mut self, name: String) -> Result<Expr, ParseError> {
        let var = match self.peek() {
            Some(Tok::Ident(v)) if v == "i" => Some(Var::I),
            Some(Tok::Ident(v)) if v == "j" => Some(Var::J),
            _ => None,
        };
        if let Some(var) = var {
            let step = match (self.peek_at(1), self.peek_at(2), self.peek_at(3)) {
                (Some(Tok::Punct(")")), ..) => None,
                (Some(Tok::Punct("-")), Some(Tok::Int(1)), Some(Tok::Punct(")"))) => {
                    Some(Step::Prev)
                }
                (Some(Tok::Punct("+")), Some(Tok::Int(1)), Some(Tok::Punct(")"))) => {
                    Some(Step::Next)
                }
                _ => return self.fail("expected `)`, `-1)` or `+1)` after position variable"),
            };
            self.at += if step.is_some() { 4 } else { 2 };
            return Ok(match step {
                None => Expr::Read(name, var),
                Some(s) => Expr::Shift(name, var, s),
            });
        }
        let index = self.expr()?;
        self.expect_punct(")")?;
        Ok(Expr::Lookup(name, index.into()))
    }
}

pub fn parse(src: &str) -> Result<Program, ParseError> {
    let (header, body) = split_header(src)?;
    let toks = tokenize(&body)?;
    let eof = toks.last().map_or((1, 1), |t| (t.line, t.col + 1));
    let mut tables = BTreeSet::new();
    for w in toks.windows(2) {
        if let (Tok::Ident(kw), Tok::Ident(name)) = (&w[0].tok, &w[1].tok) {
            if kw == "table" {
                tables.insert(name.clone());
            }
        }
    }
    let mut p = Parser {
        toks,
        at: 0,
        tables,
        eof,
    };
    let mut defs: Vec<Def> = Vec::new();
    let mut tabs: Vec<Table> = Vec::new();
    let dialect = header
        .dialect
        .ok_or_else(|| syntax(1, 1, "missing `dialect:` header"))?;
    let io = header.io.unwrap_or(match dialect {
        Dialect::Srasp => Io::Padded,
        _ => Io::LengthPreserving,
    });
    let reserved: &[&str] = if dialect.has_nat() {
        &["in", "pos"]
    } else {
        &["in"]
    };
    while p.peek().is_some() {
        let (line, col) = p.here();
        if p.is_word("table") && matches!(p.peek_at(2), Some(Tok::Punct("{"))) {
            p.at += 1;
            let t = p.table()?;
            if tabs.iter().any(|u| u.name == t.name) {
                return Err(ParseError {
                    line,
                    col,
                    kind: ParseErrorKind::DuplicateDefinition(t.name),
                });
            }
            tabs.push(t);
            continue;
        }
        let d = p.def()?;
        if reserved.contains(&d.name.as_str())
            || defs.iter().any(|e| e.name == d.name)
            || tabs.iter().any(|t| t.name == d.name)
        {
            return Err(ParseError {
                line,
                col,
                kind: ParseErrorKind::DuplicateDefinition(d.name),
            });
        }
        defs.push(d);
    }
    Ok(Program {
        dialect,
        io,
        sigma: header.sigma,
        gamma: header.gamma,
        minlen: header.minlen,
        tables: tabs,
        defs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const INCREMENT: &str = "dialect: brasp
sigma: 0 1
gamma: 0 1
io: length_preserving
# flip every bit, then decide which ones change
not(i) = '1' if in(i) = '0' else '0';
carry(i) = rightmost j [j>i, in(j) = '0'] false : true;
out(i) = not(i) if carry(i) else in(i);
";

    #[test]
    fn increment_parses_three_defs() {
        let p = parse(INCREMENT).unwrap();
        let names: Vec<&str> = p.defs.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["not", "carry", "out"]);
        assert_eq!(p.sigma, ['0', '1']);
    }

    #[test]
    fn unknown_dialect_is_reported() {
        let e = parse("dialect: crasp\nout(i) = in(i);").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownDialect("crasp".into()));
        assert_eq!(e.line, 1);
    }

    #[test]
    fn duplicate_definition_is_reported() {
        let e = parse("dialect: brasp\nx(i) = in(i);\nx(i) = in(i);\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateDefinition("x".into()));
        assert_eq!((e.line, e.col), (3, 1));
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse("dialect: brasp_pos\nx(i) = pos(i) + 1 - 1;\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
        assert_eq!(e.line, 2);
    }

    #[test]
    fn sugar_forms_are_kept() {
        let p =
            parse("dialect: brasp_pos\ny(i) = in(pos(i) - 1);\nz(i) = y(i-1);\nout(i) = z(i+1);\n")
                .unwrap();
        assert!(matches!(p.defs[0].rhs, Rhs::Pw(Expr::Lookup(..))));
        assert!(matches!(
            p.defs[1].rhs,
            Rhs::Pw(Expr::Shift(_, Var::I, Step::Prev))
        ));
        assert!(matches!(
            p.defs[2].rhs,
            Rhs::Pw(Expr::Shift(_, Var::I, Step::Next))
        ));
    }

    #[test]
    fn tables_and_unicode_operators() {
        let src = "dialect: srasp\nsigma: a b\ngamma: A B ␣\ntable up { a -> A; b -> B; _ -> ␣; }\nout(i) = up(in(i)) if ⊤ else '␣';\n";
        let p = parse(src).unwrap();
        assert_eq!(p.tables[0].rows.len(), 3);
        assert_eq!(
            p.tables[0].apply(&[Value::Sym('b')]),
            Some(&Value::Sym('B'))
        );
        assert_eq!(
            p.tables[0].apply(&[Value::Sym('␣')]),
            Some(&Value::Sym('␣'))
        );
    }
}
