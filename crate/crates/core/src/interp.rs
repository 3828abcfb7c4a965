//! Reference evaluator producing full traces.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::lang::{
    pretty_expr, ArithOp, Attention, Choice, CmpOp, Expr, Io, Program, Rhs, Ty, TypedProgram,
    Value, Var, PAD,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("vector length {n} not allowed: {why}")]
    VectorLength { n: usize, why: String },
    #[error("input symbol `{0}` is not in the input alphabet")]
    InputSymbol(char),
    #[error("no row of table `{table}` matches ({args})")]
    TableMiss { table: String, args: String },
    #[error("malformed padded output `{0}`")]
    MalformedOutput(String),
    #[error("padded program declares no minimum vector length; pass n explicitly")]
    NoMinLen,
    #[error("value of unexpected kind in `{0}`")]
    Kind(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub n: usize,
    pub rows: Vec<(String, Vec<Value>)>,
    /// (definition, position) pairs where an attention fell back to its default.
    pub default_taken: BTreeSet<(String, usize)>,
}

impl Trace {
    pub fn row(&self, name: &str) -> Option<&[Value]> {
        self.rows
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| r.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Markdown,
}

struct Ctx<'a> {
    tp: &'a TypedProgram,
    index: BTreeMap<&'a str, usize>,
    rows: Vec<Vec<Value>>,
    n: usize,
}

impl Ctx<'_> {
    fn clip(&self, k: usize) -> usize {
        k.min(self.n.saturating_sub(1))
    }

    fn ev(&self, e: &Expr, i: usize, j: usize) -> Result<Value, EvalError> {
        let read = |name: &str, var: Var| {
            let at = if var == Var::I { i } else { j };
            self.rows[self.index[name]][at].clone()
        };
        eval_expr(&self.tp.program, e, &read, self.n.saturating_sub(1))
    }

    fn truth(&self, e: &Expr, i: usize, j: usize) -> Result<bool, EvalError> {
        self.ev(e, i, j)?
            .as_bool()
            .ok_or_else(|| EvalError::Kind(pretty_expr(e)))
    }

    fn nat(&self, e: &Expr, i: usize, j: usize) -> Result<usize, EvalError> {
        self.ev(e, i, j)?
            .as_nat()
            .ok_or_else(|| EvalError::Kind(pretty_expr(e)))
    }

    fn attend(&self, a: &Attention, i: usize) -> Result<Option<Value>, EvalError> {
        let hit = |j: usize| -> Result<Option<Value>, EvalError> {
            if a.mask.allows(i, j) && self.truth(&a.score, i, j)? {
                return Ok(Some(self.ev(&a.value, i, j)?));
            }
            Ok(None)
        };
        match a.choice {
            Choice::Leftmost => {
                for j in 0..self.n {
                    if let Some(v) = hit(j)? {
                        return Ok(Some(v));
                    }
                }
            }
            Choice::Rightmost => {
                for j in (0..self.n).rev() {
                    if let Some(v) = hit(j)? {
                        return Ok(Some(v));
                    }
                }
            }
        }
        Ok(None)
    }
}

/// Evaluate one expression; `read` supplies vector cells and every numeric
/// node is clipped into `[0, top]`.
pub fn eval_expr(
    p: &Program,
    e: &Expr,
    read: &dyn Fn(&str, Var) -> Value,
    top: usize,
) -> Result<Value, EvalError> {
    let clip = |k: usize| k.min(top);
    let go = |e: &Expr| eval_expr(p, e, read, top);
    let truth = |e: &Expr| {
        go(e)?
            .as_bool()
            .ok_or_else(|| EvalError::Kind(pretty_expr(e)))
    };
    let nat = |e: &Expr| {
        go(e)?
            .as_nat()
            .ok_or_else(|| EvalError::Kind(pretty_expr(e)))
    };
    Ok(match e {
        Expr::Lit(Value::Nat(k)) => Value::Nat(clip(*k)),
        Expr::Lit(v) => v.clone(),
        Expr::Read(name, var) => read(name, *var),
        Expr::Shift(..) | Expr::Lookup(..) => {
            return Err(EvalError::Kind("unexpanded sugar".into()))
        }
        Expr::Not(a) => Value::Bool(!truth(a)?),
        Expr::And(a, b) => Value::Bool(truth(a)? && truth(b)?),
        Expr::Or(a, b) => Value::Bool(truth(a)? || truth(b)?),
        Expr::Cmp(op, a, b) => {
            let (x, y) = (go(a)?, go(b)?);
            Value::Bool(match (&x, &y) {
                (Value::Nat(p), Value::Nat(q)) => op.holds(p, q),
                _ => {
                    let same = x.same(&y);
                    match op {
                        CmpOp::Eq => same,
                        CmpOp::Ne => !same,
                        _ => return Err(EvalError::Kind(pretty_expr(e))),
                    }
                }
            })
        }
        Expr::Arith(op, a, b) => {
            let (x, y) = (nat(a)?, nat(b)?);
            Value::Nat(match op {
                ArithOp::Add => clip(x + y),
                ArithOp::Sub => x.saturating_sub(y),
            })
        }
        Expr::Concat(a, b) => {
            let (x, y) = (go(a)?, go(b)?);
            match (x.text(), y.text()) {
                (Some(mut s), Some(t)) => {
                    s.push_str(&t);
                    Value::Str(s)
                }
                _ => return Err(EvalError::Kind(pretty_expr(e))),
            }
        }
        Expr::If(t, c, o) => {
            if truth(c)? {
                go(t)?
            } else {
                go(o)?
            }
        }
        Expr::Apply(f, args) => {
            let vals = args.iter().map(|a| go(a)).collect::<Result<Vec<_>, _>>()?;
            let table = p.table(f).expect("typechecked");
            match table.apply(&vals) {
                Some(v) => v.clone(),
                None => {
                    let args: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
                    return Err(EvalError::TableMiss {
                        table: f.clone(),
                        args: args.join(", "),
                    });
                }
            }
        }
    })
}

/// Widen a symbol to a one-letter string where the declared type is a string.
pub fn coerce(v: Value, ty: &Ty) -> Value {
    match (v, ty) {
        (Value::Sym(c), Ty::Str(..)) => Value::Str(c.to_string()),
        (v, _) => v,
    }
}

/// Evaluate every definition on `w` padded or not according to the program's
/// convention, with vector length `n`.
pub fn eval(tp: &TypedProgram, w: &[char], n: usize) -> Result<Trace, EvalError> {
    let p = &tp.program;
    match p.io {
        Io::Padded if n <= w.len() => {
            return Err(EvalError::VectorLength {
                n,
                why: format!("padded input of length {} needs n > {}", w.len(), w.len()),
            })
        }
        Io::LengthPreserving | Io::Packed(_) if n != w.len() => {
            return Err(EvalError::VectorLength {
                n,
                why: format!("expected n = |w| = {}", w.len()),
            })
        }
        _ => {}
    }
    if let Some(c) = w.iter().find(|c| !p.sigma.contains(c)) {
        return Err(EvalError::InputSymbol(*c));
    }
    let mut input: Vec<Value> = w.iter().map(|c| Value::Sym(*c)).collect();
    input.resize(n, Value::Sym(PAD));
    let mut ctx = Ctx {
        tp,
        index: BTreeMap::new(),
        rows: Vec::new(),
        n,
    };
    let mut names: Vec<String> = Vec::new();
    let mut push = |ctx: &mut Ctx<'_>, name: &str, row: Vec<Value>| {
        names.push(name.to_string());
        ctx.rows.push(row);
    };
    push(&mut ctx, "in", input);
    ctx.index.insert("in", 0);
    if p.dialect.has_nat() {
        push(&mut ctx, "pos", (0..n).map(Value::Nat).collect());
        ctx.index.insert("pos", 1);
    }
    let mut default_taken = BTreeSet::new();
    for d in &p.defs {
        let ty = tp.ty(&d.name);
        let mut row = Vec::with_capacity(n);
        match &d.rhs {
            Rhs::Pw(e) => {
                for i in 0..n {
                    row.push(coerce(ctx.ev(e, i, 0)?, ty));
                }
            }
            Rhs::Sum(e) => {
                let mut acc = 0usize;
                for j in 0..n {
                    acc = ctx.clip(acc + ctx.nat(e, 0, j)?);
                    row.push(Value::Nat(acc));
                }
            }
            Rhs::Attn(a) => {
                let dflt = a
                    .default
                    .as_ref()
                    .ok_or_else(|| EvalError::Kind("missing default".into()))?;
                for i in 0..n {
                    let v = match ctx.attend(a, i)? {
                        Some(v) => v,
                        None => {
                            default_taken.insert((d.name.clone(), i));
                            ctx.ev(dflt, i, 0)?
                        }
                    };
                    row.push(coerce(v, ty));
                }
            }
        }
        let k = ctx.rows.len();
        push(&mut ctx, &d.name, row);
        ctx.index.insert(d.name.as_str(), k);
    }
    Ok(Trace {
        n,
        rows: names.into_iter().zip(ctx.rows).collect(),
        default_taken,
    })
}

/// Vector length used when the caller does not choose one. A padded input
/// always needs at least one blank, whatever the declared bound says.
pub fn default_n(tp: &TypedProgram, len: usize) -> Result<usize, EvalError> {
    match tp.program.io {
        Io::Padded => tp
            .program
            .minlen
            .as_ref()
            .map(|q| q.eval(len).max(len) + 1)
            .ok_or(EvalError::NoMinLen),
        _ => Ok(len),
    }
}

/// Read the transduction's output off the `out` row.
pub fn extract(tp: &TypedProgram, t: &Trace) -> Result<String, EvalError> {
    let out = t.row("out").ok_or_else(|| EvalError::Kind("out".into()))?;
    let mut s = String::new();
    for v in out {
        s.push_str(&v.text().ok_or_else(|| EvalError::Kind("out".into()))?);
    }
    if tp.program.io != Io::Padded {
        return Ok(s);
    }
    match s.find(PAD) {
        None => Ok(s),
        Some(k) if s[k..].chars().all(|c| c == PAD) => Ok(s[..k].to_string()),
        Some(_) => Err(EvalError::MalformedOutput(s)),
    }
}

/// Run on a string. Padded programs reject an explicit `n` at or below the
/// declared minimum vector length.
pub fn run(tp: &TypedProgram, w: &str, n: Option<usize>) -> Result<String, EvalError> {
    let chars: Vec<char> = w.chars().collect();
    let n = match (tp.program.io, n) {
        (Io::Padded, Some(n)) => {
            if let Some(q) = &tp.program.minlen {
                let q = q.eval(chars.len());
                if n <= q {
                    return Err(EvalError::VectorLength {
                        n,
                        why: format!("minimum vector length is {q}, need n > {q}"),
                    });
                }
            }
            n
        }
        (_, Some(n)) => n,
        (_, None) => default_n(tp, chars.len())?,
    };
    extract(tp, &eval(tp, &chars, n)?)
}

pub fn render_trace(t: &Trace, format: Format) -> String {
    let mut s = String::new();
    match format {
        Format::Tsv => {
            for (name, row) in &t.rows {
                s.push_str(name);
                for v in row {
                    let _ = write!(s, "\t{v}");
                }
                s.push('\n');
            }
        }
        Format::Markdown => {
            s.push_str("| |");
            for i in 0..t.n {
                let _ = write!(s, " {i} |");
            }
            s.push_str("\n|---|");
            s.push_str(&"---|".repeat(t.n));
            s.push('\n');
            for (name, row) in &t.rows {
                let _ = write!(s, "| {name} |");
                for v in row {
                    let _ = write!(s, " {v} |");
                }
                s.push('\n');
            }
        }
    }
    s
}
