//! Text interchange format for machines and pipelines.
//!
//! ```text
//! pipeline
//! coords: in not carry out
//! dft
//! dir: R2L
//! sigma: 0 1
//! gamma: <'0',true> <'1',false>
//! states: q
//! start: q
//! delta: q, 0 -> [<'0',true>], q
//! delta: q, END -> "", q
//! end
//! ```
//!
//! A bare character is a one-symbol letter; anything else is a tuple in
//! angle brackets. Outputs over bare letters may be written as a quoted string.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{Dft, Dir, DirectedDft, FstError, Letter, Pipeline};
use crate::lang::{pretty_value, Value};

fn bare(l: &Letter) -> Option<char> {
    match l.as_slice() {
        [Value::Sym(c)] if !c.is_whitespace() && !"<>[]\",\\'".contains(*c) => Some(*c),
        _ => None,
    }
}

pub fn write_letter(l: &Letter) -> String {
    match bare(l) {
        Some(c) => c.to_string(),
        None => {
            let parts: Vec<String> = l.iter().map(pretty_value).collect();
            format!("<{}>", parts.join(","))
        }
    }
}

fn write_word(w: &[Letter]) -> String {
    if w.iter().all(|l| bare(l).is_some()) {
        let s: String = w.iter().filter_map(bare).collect();
        return format!("\"{s}\"");
    }
    let parts: Vec<String> = w.iter().map(write_letter).collect();
    format!("[{}]", parts.join(" "))
}

fn write_block(s: &mut String, t: &DirectedDft) {
    let m = &t.machine;
    let letters = |ls: &[Letter]| ls.iter().map(write_letter).collect::<Vec<_>>().join(" ");
    s.push_str("dft\n");
    let dir = match t.dir {
        Dir::L2R => "L2R",
        Dir::R2L => "R2L",
    };
    let _ = writeln!(s, "dir: {dir}");
    let _ = writeln!(s, "sigma: {}", letters(&m.sigma));
    let _ = writeln!(s, "gamma: {}", letters(&m.gamma));
    let _ = writeln!(s, "states: {}", m.states.join(" "));
    let _ = writeln!(s, "start: {}", m.states[m.start]);
    for ((q, a), (out, r)) in &m.delta {
        let a = a.as_ref().map_or("END".to_string(), write_letter);
        let _ = writeln!(s, "delta: {}, {a} -> {}, {}", m.states[*q], write_word(out), m.states[*r]);
    }
    s.push_str("end\n");
}

pub fn write_dft(t: &DirectedDft) -> String {
    let mut s = String::new();
    write_block(&mut s, t);
    s
}

pub fn write_pipeline(p: &Pipeline) -> String {
    let mut s = String::from("pipeline\n");
    if !p.coords.is_empty() {
        let _ = writeln!(s, "coords: {}", p.coords.join(" "));
    }
    for t in &p.stages {
        write_block(&mut s, t);
    }
    s
}

struct Scan {
    chars: Vec<char>,
    at: usize,
    line: usize,
}

impl Scan {
    fn err<T>(&self, msg: &str) -> Result<T, FstError> {
        Err(FstError::Format { line: self.line, msg: msg.to_string() })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.at).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        self.at += 1;
        c
    }

    fn ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.at += 1;
        }
    }

    fn done(&mut self) -> bool {
        self.ws();
        self.peek().is_none()
    }

    fn eat(&mut self, s: &str) -> Result<(), FstError> {
        self.ws();
        for c in s.chars() {
            if self.bump() != Some(c) {
                return self.err(&format!("expected `{s}`"));
            }
        }
        Ok(())
    }

    fn name(&mut self) -> Result<String, FstError> {
        self.ws();
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == ',' {
                break;
            }
            s.push(c);
            self.at += 1;
        }
        if s.is_empty() {
            return self.err("expected a name");
        }
        Ok(s)
    }

    fn quoted(&mut self, q: char) -> Result<String, FstError> {
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return self.err("unterminated quote"),
                Some('\\') => match self.bump() {
                    Some(c) => s.push(c),
                    None => return self.err("unterminated quote"),
                },
                Some(c) if c == q => return Ok(s),
                Some(c) => s.push(c),
            }
        }
    }

    fn value(&mut self) -> Result<Value, FstError> {
        self.ws();
        match self.peek() {
            Some('\'') => {
                self.at += 1;
                let s = self.quoted('\'')?;
                let mut it = s.chars();
                match (it.next(), it.next()) {
                    (Some(c), None) => Ok(Value::Sym(c)),
                    _ => self.err("a symbol is one character"),
                }
            }
            Some('"') => {
                self.at += 1;
                Ok(Value::Str(self.quoted('"')?))
            }
            Some(c) if c.is_ascii_digit() => {
                let mut k = 0usize;
                while let Some(d) = self.peek().and_then(|c| c.to_digit(10)) {
                    k = k * 10 + d as usize;
                    self.at += 1;
                }
                Ok(Value::Nat(k))
            }
            _ => {
                if self.chars[self.at..].starts_with(&['t', 'r', 'u', 'e']) {
                    self.at += 4;
                    Ok(Value::Bool(true))
                } else if self.chars[self.at..].starts_with(&['f', 'a', 'l', 's', 'e']) {
                    self.at += 5;
                    Ok(Value::Bool(false))
                } else {
                    self.err("expected a value")
                }
            }
        }
    }

    fn letter(&mut self) -> Result<Letter, FstError> {
        self.ws();
        match self.bump() {
            Some('<') => {
                let mut l = Vec::new();
                loop {
                    l.push(self.value()?);
                    self.ws();
                    match self.bump() {
                        Some(',') => {}
                        Some('>') => return Ok(l),
                        _ => return self.err("expected `,` or `>` in a tuple"),
                    }
                }
            }
            Some(c) => Ok(alloc::vec![Value::Sym(c)]),
            None => self.err("expected a letter"),
        }
    }

    fn word(&mut self) -> Result<Vec<Letter>, FstError> {
        self.ws();
        match self.bump() {
            Some('"') => Ok(self.quoted('"')?.chars().map(super::letter).collect()),
            Some('[') => {
                let mut w = Vec::new();
                loop {
                    self.ws();
                    if self.peek() == Some(']') {
                        self.at += 1;
                        return Ok(w);
                    }
                    w.push(self.letter()?);
                }
            }
            _ => self.err("expected an output word"),
        }
    }
}

fn scan(src: &str, line: usize) -> Scan {
    Scan { chars: src.chars().collect(), at: 0, line }
}

fn field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.strip_prefix(key).and_then(|r| r.strip_prefix(':')).map(str::trim)
}

fn letters(rest: &str, line: usize) -> Result<Vec<Letter>, FstError> {
    let mut s = scan(rest, line);
    let mut out = Vec::new();
    while !s.done() {
        out.push(s.letter()?);
    }
    Ok(out)
}

fn state(states: &[String], name: &str, line: usize) -> Result<usize, FstError> {
    states
        .iter()
        .position(|s| s == name)
        .ok_or_else(|| FstError::Format { line, msg: format!("unknown state `{name}`") })
}

/// Parse machine blocks from numbered lines, stopping at the end of input.
fn blocks(lines: &[(usize, &str)]) -> Result<Vec<DirectedDft>, FstError> {
    let mut out = Vec::new();
    let mut it = lines.iter().peekable();
    while let Some(&(no, head)) = it.next() {
        if head != "dft" {
            return Err(FstError::Format { line: no, msg: "expected `dft`".to_string() });
        }
        let mut dir = Dir::L2R;
        let (mut sigma, mut gamma, mut states, mut start) = (Vec::new(), Vec::new(), Vec::new(), None);
        let mut moves = Vec::new();
        loop {
            let Some(&(no, l)) = it.next() else {
                return Err(FstError::Format { line: no, msg: "missing `end`".to_string() });
            };
            if l == "end" {
                break;
            } else if let Some(r) = field(l, "dir") {
                dir = match r {
                    "L2R" => Dir::L2R,
                    "R2L" => Dir::R2L,
                    _ => return Err(FstError::Format { line: no, msg: "direction is L2R or R2L".to_string() }),
                };
            } else if let Some(r) = field(l, "sigma") {
                sigma = letters(r, no)?;
            } else if let Some(r) = field(l, "gamma") {
                gamma = letters(r, no)?;
            } else if let Some(r) = field(l, "states") {
                states = r.split_whitespace().map(str::to_string).collect();
            } else if let Some(r) = field(l, "start") {
                start = Some((no, r.to_string()));
            } else if let Some(r) = field(l, "delta") {
                moves.push((no, r));
            } else {
                return Err(FstError::Format { line: no, msg: format!("unexpected line `{l}`") });
            }
        }
        let Some((sno, sname)) = start else {
            return Err(FstError::Format { line: no, msg: "missing `start`".to_string() });
        };
        let start = state(&states, &sname, sno)?;
        let mut m = Dft::new(sigma, gamma, states, start);
        for (no, r) in moves {
            let mut s = scan(r, no);
            let q = state(&m.states, &s.name()?, no)?;
            s.eat(",")?;
            s.ws();
            let a = if s.chars[s.at..].starts_with(&['E', 'N', 'D']) {
                s.at += 3;
                None
            } else {
                Some(s.letter()?)
            };
            s.eat("->")?;
            let w = s.word()?;
            s.eat(",")?;
            let r = state(&m.states, &s.name()?, no)?;
            if !s.done() {
                return s.err("trailing text");
            }
            m.set(q, a, w, r);
        }
        m.check()?;
        out.push(DirectedDft { machine: m, dir });
    }
    Ok(out)
}

fn numbered(src: &str) -> Vec<(usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

pub fn read_dft(src: &str) -> Result<DirectedDft, FstError> {
    let lines = numbered(src);
    let mut ms = blocks(&lines)?;
    if ms.len() != 1 {
        return Err(FstError::Format { line: 1, msg: "expected exactly one machine".to_string() });
    }
    Ok(ms.remove(0))
}

pub fn read_pipeline(src: &str) -> Result<Pipeline, FstError> {
    let lines = numbered(src);
    match lines.first() {
        Some((_, "pipeline")) => {}
        _ => return Err(FstError::Format { line: 1, msg: "expected `pipeline`".to_string() }),
    }
    let mut rest = &lines[1..];
    let mut coords = Vec::new();
    if let Some((_, l)) = rest.first() {
        if let Some(r) = field(l, "coords") {
            coords = r.split_whitespace().map(str::to_string).collect();
            rest = &rest[1..];
        }
    }
    let p = Pipeline { stages: blocks(rest)?, coords };
    p.check()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::{letter, word};
    use alloc::vec;

    #[test]
    fn round_trip_plain_and_tuple() {
        let mut m = Dft::new(word("ab"), Vec::new(), vec!["s".into(), "t".into()], 0);
        let tup = |c: char, b: bool| vec![Value::Sym(c), Value::Bool(b)];
        m.gamma = vec![tup('a', true), tup('b', false), vec![Value::Str("x,>".into())], letter('<')];
        m.set(0, Some(letter('a')), vec![tup('a', true)], 1);
        m.set(0, Some(letter('b')), vec![tup('b', false), letter('<')], 0);
        m.set(1, Some(letter('a')), Vec::new(), 1);
        m.set(1, Some(letter('b')), vec![vec![Value::Str("x,>".into())]], 0);
        m.set(0, None, Vec::new(), 0);
        m.set(1, None, Vec::new(), 1);
        let p = Pipeline { stages: vec![DirectedDft { machine: m, dir: Dir::R2L }], coords: vec!["in".into(), "b".into()] };
        let text = write_pipeline(&p);
        assert_eq!(read_pipeline(&text).unwrap(), p);
    }

    #[test]
    fn plain_outputs_are_quoted() {
        let t = DirectedDft { machine: Dft::identity(word("01")), dir: Dir::L2R };
        let s = write_dft(&t);
        assert!(s.contains("delta: q, 0 -> \"0\", q"), "{s}");
        assert_eq!(read_dft(&s).unwrap(), t);
    }

    #[test]
    fn unknown_state_is_an_error() {
        let src = "dft\nsigma: a\ngamma: a\nstates: q\nstart: r\nend\n";
        assert!(matches!(read_dft(src), Err(FstError::Format { line: 5, .. })));
    }
}
