//! Printer producing text that parses back to the same program.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::{ArithOp, Choice, Def, Expr, Io, Pat, Program, Rhs, Step, Value};

fn quote(c: char, q: char, out: &mut String) {
    if c == q || c == '\\' {
        out.push('\\');
    }
    out.push(c);
}

pub(crate) fn literal(v: &Value) -> String {
    match v {
        Value::Bool(b) => String::from(if *b { "true" } else { "false" }),
        Value::Nat(k) => format!("{k}"),
        Value::Sym(c) => {
            let mut s = String::from("'");
            quote(*c, '\'', &mut s);
            s.push('\'');
            s
        }
        Value::Str(t) => {
            let mut s = String::from("\"");
            for c in t.chars() {
                quote(c, '"', &mut s);
            }
            s.push('"');
            s
        }
    }
}

fn atomic(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Lit(_) | Expr::Read(..) | Expr::Shift(..) | Expr::Lookup(..) | Expr::Apply(..)
    )
}

fn sub(e: &Expr) -> String {
    if atomic(e) {
        expr(e)
    } else {
        format!("({})", expr(e))
    }
}

pub(crate) fn expr(e: &Expr) -> String {
    match e {
        Expr::Lit(v) => literal(v),
        Expr::Read(n, v) => format!("{n}({})", v.name()),
        Expr::Shift(n, v, Step::Prev) => format!("{n}({}-1)", v.name()),
        Expr::Shift(n, v, Step::Next) => format!("{n}({}+1)", v.name()),
        Expr::Lookup(n, ix) => format!("{n}({})", expr(ix)),
        Expr::Not(a) => format!("not {}", sub(a)),
        Expr::And(a, b) => format!("{} and {}", sub(a), sub(b)),
        Expr::Or(a, b) => format!("{} or {}", sub(a), sub(b)),
        Expr::Cmp(op, a, b) => format!("{} {} {}", sub(a), op.symbol(), sub(b)),
        Expr::Arith(ArithOp::Add, a, b) => format!("{} + {}", sub(a), sub(b)),
        Expr::Arith(ArithOp::Sub, a, b) => format!("{} - {}", sub(a), sub(b)),
        Expr::Concat(a, b) => format!("{} . {}", sub(a), sub(b)),
        Expr::If(t, c, o) => format!("{} if {} else {}", sub(t), sub(c), sub(o)),
        Expr::Apply(f, args) => {
            let args: Vec<String> = args.iter().map(expr).collect();
            format!("{f}({})", args.join(", "))
        }
    }
}

pub(crate) fn def(d: &Def) -> String {
    let rhs = match &d.rhs {
        Rhs::Pw(e) => expr(e),
        Rhs::Sum(e) => format!("sum j [j<=i] {}", expr(e)),
        Rhs::Attn(a) => {
            let word = match a.choice {
                Choice::Leftmost => "leftmost",
                Choice::Rightmost => "rightmost",
            };
            let mut s = format!(
                "{word} j [{}, {}] {}",
                a.mask.syntax(),
                expr(&a.score),
                expr(&a.value)
            );
            if let Some(dflt) = &a.default {
                let dead = if d.implicit_default { "dead " } else { "" };
                let _ = write!(s, " : {dead}{}", expr(dflt));
            }
            s
        }
    };
    format!("{}(i) = {rhs};", d.name)
}

pub fn pretty(p: &Program) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dialect: {}", p.dialect.keyword());
    let alpha = |a: &[char]| {
        a.iter()
            .map(|c| format!("{c}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(s, "sigma: {}", alpha(&p.sigma));
    let _ = writeln!(s, "gamma: {}", alpha(&p.gamma));
    let io = match p.io {
        Io::LengthPreserving => String::from("length_preserving"),
        Io::Packed(k) => format!("packed {k}"),
        Io::Padded => String::from("padded"),
    };
    let _ = writeln!(s, "io: {io}");
    if let Some(q) = &p.minlen {
        let _ = writeln!(s, "minlen: {q}");
    }
    for t in &p.tables {
        let _ = writeln!(s, "table {} {{", t.name);
        for r in &t.rows {
            let pats: Vec<String> = r
                .pats
                .iter()
                .map(|p| match p {
                    Pat::Any => String::from("_"),
                    Pat::Is(v) => literal(v),
                })
                .collect();
            let _ = writeln!(s, "  {} -> {};", pats.join(" "), literal(&r.out));
        }
        s.push_str("}\n");
    }
    for d in &p.defs {
        s.push_str(&def(d));
        s.push('\n');
    }
    s
}
