//! Minimum vector length expressions in the input length `l`.

use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MinLen {
    L,
    Const(usize),
    Add(Box<MinLen>, Box<MinLen>),
    Mul(Box<MinLen>, Box<MinLen>),
    Max(Box<MinLen>, Box<MinLen>),
}

impl MinLen {
    pub fn eval(&self, l: usize) -> usize {
        match self {
            MinLen::L => l,
            MinLen::Const(c) => *c,
            MinLen::Add(a, b) => a.eval(l).saturating_add(b.eval(l)),
            MinLen::Mul(a, b) => a.eval(l).saturating_mul(b.eval(l)),
            MinLen::Max(a, b) => a.eval(l).max(b.eval(l)),
        }
    }

    /// `self ∘ inner`: substitute `inner` for `l`.
    pub fn compose(&self, inner: &MinLen) -> MinLen {
        match self {
            MinLen::L => inner.clone(),
            MinLen::Const(c) => MinLen::Const(*c),
            MinLen::Add(a, b) => MinLen::Add(a.compose(inner).into(), b.compose(inner).into()),
            MinLen::Mul(a, b) => MinLen::Mul(a.compose(inner).into(), b.compose(inner).into()),
            MinLen::Max(a, b) => MinLen::Max(a.compose(inner).into(), b.compose(inner).into()),
        }
    }

    pub fn max(a: MinLen, b: MinLen) -> MinLen {
        MinLen::Max(a.into(), b.into())
    }

    pub fn scaled(k: usize) -> MinLen {
        MinLen::Mul(MinLen::Const(k).into(), MinLen::L.into())
    }

    pub fn parse(src: &str) -> Result<MinLen, String> {
        let mut p = Cursor {
            s: src.as_bytes(),
            at: 0,
        };
        let e = p.sum()?;
        p.ws();
        if p.at != p.s.len() {
            return Err(alloc::format!("unexpected input at offset {}", p.at));
        }
        Ok(e)
    }
}

impl fmt::Display for MinLen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinLen::L => f.write_str("l"),
            MinLen::Const(c) => write!(f, "{c}"),
            MinLen::Add(a, b) => write!(f, "({a} + {b})"),
            MinLen::Mul(a, b) => write!(f, "({a} * {b})"),
            MinLen::Max(a, b) => write!(f, "max({a}, {b})"),
        }
    }
}

struct Cursor<'a> {
    s: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn ws(&mut self) {
        while self.at < self.s.len() && self.s[self.at].is_ascii_whitespace() {
            self.at += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.s.get(self.at) == Some(&c) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<MinLen, String> {
        let mut e = self.product()?;
        while self.eat(b'+') {
            e = MinLen::Add(e.into(), self.product()?.into());
        }
        Ok(e)
    }

    fn product(&mut self) -> Result<MinLen, String> {
        let mut e = self.atom()?;
        while self.eat(b'*') {
            e = MinLen::Mul(e.into(), self.atom()?.into());
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<MinLen, String> {
        self.ws();
        let rest = &self.s[self.at..];
        if rest.starts_with(b"max") {
            self.at += 3;
            if !self.eat(b'(') {
                return Err("expected ( after max".into());
            }
            let a = self.sum()?;
            if !self.eat(b',') {
                return Err("expected , in max".into());
            }
            let b = self.sum()?;
            if !self.eat(b')') {
                return Err("expected ) after max".into());
            }
            return Ok(MinLen::max(a, b));
        }
        if self.eat(b'(') {
            let e = self.sum()?;
            if !self.eat(b')') {
                return Err("expected )".into());
            }
            return Ok(e);
        }
        if self.eat(b'l') {
            return Ok(MinLen::L);
        }
        let start = self.at;
        while self.at < self.s.len() && self.s[self.at].is_ascii_digit() {
            self.at += 1;
        }
        if start == self.at {
            return Err(alloc::format!(
                "expected l, integer or max at offset {start}"
            ));
        }
        let digits = core::str::from_utf8(&self.s[start..self.at]).unwrap();
        digits
            .parse()
            .map(MinLen::Const)
            .map_err(|_| "integer too large".into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn quadratic_with_bars() {
        let q = MinLen::parse("l*(l+1)+1").unwrap();
        assert_eq!(q.eval(3), 13);
        assert_eq!(MinLen::parse(&q.to_string()).unwrap(), q);
    }

    #[test]
    fn composition_substitutes() {
        let q1 = MinLen::parse("3*l").unwrap();
        let q2 = MinLen::parse("l*l+1").unwrap();
        let q = MinLen::max(q1.clone(), q2.compose(&q1));
        assert_eq!(q.eval(2), 37);
    }
}
