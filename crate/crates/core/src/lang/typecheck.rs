//! Dialect-aware type inference and well-formedness rules.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use super::{CmpOp, Dialect, Expr, Io, Program, Rhs, Ty, Value, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Reason {
    #[error("undefined vector `{0}`")]
    UndefinedVector(String),
    #[error("undefined table `{0}`")]
    UndefinedTable(String),
    #[error("{context} may not mention position variable `{var}`")]
    FreeVariable {
        context: &'static str,
        var: &'static str,
    },
    #[error("order comparison between positions i and j")]
    CrossPositionOrder,
    #[error("a comparison between positions must be the whole score, of the form V1(i) = V2(j)")]
    CrossPositionEquality,
    #[error("not available in this dialect: {0}")]
    Dialect(String),
    #[error("conditional arms have incompatible types {0} and {1}")]
    IllTypedArms(String, String),
    #[error("type mismatch: {0}")]
    Mismatch(String),
    #[error("sugar must be expanded before typechecking")]
    Sugar,
    #[error("output vector: {0}")]
    Output(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("in `{def}`: {reason}")]
pub struct TypeError {
    pub def: String,
    pub reason: Reason,
}

/// A program together with the inferred type of every row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedProgram {
    pub program: Program,
    pub types: BTreeMap<String, Ty>,
}

impl TypedProgram {
    pub fn ty(&self, name: &str) -> &Ty {
        &self.types[name]
    }

    /// Row names in trace order.
    pub fn rows(&self) -> impl Iterator<Item = &str> {
        self.program
            .builtins()
            .iter()
            .copied()
            .chain(self.program.defs.iter().map(|d| d.name.as_str()))
    }
}

fn value_ty(v: &Value) -> Ty {
    match v {
        Value::Bool(_) => Ty::Bool,
        Value::Nat(_) => Ty::Nat,
        Value::Sym(c) => Ty::Sym([*c].into_iter().collect()),
        Value::Str(s) => Ty::Str(s.chars().collect(), s.chars().count()),
    }
}

/// Least common type of two branches, if any.
pub(crate) fn join(a: &Ty, b: &Ty) -> Option<Ty> {
    Some(match (a, b) {
        (Ty::Bool, Ty::Bool) => Ty::Bool,
        (Ty::Nat, Ty::Nat) => Ty::Nat,
        (Ty::Sym(x), Ty::Sym(y)) => Ty::Sym(x.union(y).copied().collect()),
        (x, y) if x.is_textual() && y.is_textual() => Ty::Str(
            x.chars().union(&y.chars()).copied().collect(),
            x.bound().max(y.bound()),
        ),
        _ => return None,
    })
}

pub(crate) struct Env<'a> {
    pub prog: &'a Program,
    pub types: BTreeMap<String, Ty>,
}

impl<'a> Env<'a> {
    pub fn new(prog: &'a Program) -> Env<'a> {
        let mut types = BTreeMap::new();
        types.insert("in".to_string(), Ty::Sym(prog.in_alphabet()));
        if prog.dialect.has_nat() {
            types.insert("pos".to_string(), Ty::Nat);
        }
        Env { prog, types }
    }

    fn nat_ok(&self, what: &str) -> Result<(), Reason> {
        if self.prog.dialect.has_nat() {
            Ok(())
        } else {
            Err(Reason::Dialect(format!("{what} needs integer support")))
        }
    }

    fn vector(&self, name: &str) -> Result<Ty, Reason> {
        match self.types.get(name) {
            Some(t) => Ok(t.clone()),
            None if name == "pos" => Err(Reason::Dialect("pos needs integer support".into())),
            None => Err(Reason::UndefinedVector(name.to_string())),
        }
    }

    /// Infer the type of `e`. `score_top` marks the root of an attention
    /// score, the one place a cross-position equality may appear.
    pub fn infer(&self, e: &Expr, score_top: bool) -> Result<Ty, Reason> {
        match e {
            Expr::Lit(v) => {
                if matches!(v, Value::Nat(_)) {
                    self.nat_ok("an integer literal")?;
                }
                Ok(value_ty(v))
            }
            Expr::Read(n, _) | Expr::Shift(n, ..) => self.vector(n),
            Expr::Lookup(n, ix) => {
                self.nat_ok("indexing a vector")?;
                if self.infer(ix, false)? != Ty::Nat {
                    return Err(Reason::Mismatch(format!(
                        "index into `{n}` must be an integer"
                    )));
                }
                self.vector(n)
            }
            Expr::Not(a) => self.expect_bool(a),
            Expr::And(a, b) | Expr::Or(a, b) => {
                self.expect_bool(a)?;
                self.expect_bool(b)
            }
            Expr::Cmp(op, a, b) => {
                let (ta, tb) = (self.infer(a, false)?, self.infer(b, false)?);
                match (&ta, &tb) {
                    (Ty::Nat, Ty::Nat) => {
                        let mut vars = a.free_vars();
                        vars.extend(b.free_vars());
                        if vars.len() > 1 {
                            let simple = matches!((&**a, &**b), (Expr::Read(_, x), Expr::Read(_, y)) if x != y);
                            if !(score_top && *op == CmpOp::Eq && simple) {
                                return Err(match op {
                                    CmpOp::Eq | CmpOp::Ne => Reason::CrossPositionEquality,
                                    _ => Reason::CrossPositionOrder,
                                });
                            }
                        }
                    }
                    (x, y) if x.is_textual() && y.is_textual() => {
                        if !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                            return Err(Reason::Mismatch(
                                "symbols only compare for equality".into(),
                            ));
                        }
                    }
                    (Ty::Bool, Ty::Bool) if matches!(op, CmpOp::Eq | CmpOp::Ne) => {}
                    _ => return Err(Reason::Mismatch(format!("cannot compare {ta} with {tb}"))),
                }
                Ok(Ty::Bool)
            }
            Expr::Arith(_, a, b) => {
                self.nat_ok("arithmetic")?;
                for x in [a, b] {
                    let t = self.infer(x, false)?;
                    if t != Ty::Nat {
                        return Err(Reason::Mismatch(format!("arithmetic on {t}")));
                    }
                }
                Ok(Ty::Nat)
            }
            Expr::Concat(a, b) => {
                let (ta, tb) = (self.infer(a, false)?, self.infer(b, false)?);
                if !ta.is_textual() || !tb.is_textual() {
                    return Err(Reason::Mismatch(format!(
                        "cannot concatenate {ta} and {tb}"
                    )));
                }
                Ok(Ty::Str(
                    ta.chars().union(&tb.chars()).copied().collect(),
                    ta.bound() + tb.bound(),
                ))
            }
            Expr::If(t, c, o) => {
                self.expect_bool(c)?;
                let (tt, to) = (self.infer(t, false)?, self.infer(o, false)?);
                join(&tt, &to).ok_or_else(|| Reason::IllTypedArms(tt.to_string(), to.to_string()))
            }
            Expr::Apply(f, args) => {
                let table = self
                    .prog
                    .table(f)
                    .ok_or_else(|| Reason::UndefinedTable(f.clone()))?;
                if table.arity() != args.len() {
                    return Err(Reason::Mismatch(format!(
                        "`{f}` takes {} arguments",
                        table.arity()
                    )));
                }
                for a in args {
                    let t = self.infer(a, false)?;
                    if t == Ty::Nat {
                        self.nat_ok("integer table arguments")?;
                    }
                }
                let mut out: Option<Ty> = None;
                for r in &table.rows {
                    if matches!(r.out, Value::Nat(_)) {
                        self.nat_ok("integer table results")?;
                    }
                    let t = value_ty(&r.out);
                    out = Some(match out {
                        None => t,
                        Some(prev) => join(&prev, &t).ok_or_else(|| {
                            Reason::Mismatch(format!(
                                "table `{f}` mixes result types {prev} and {t}"
                            ))
                        })?,
                    });
                }
                Ok(out.expect("tables are non-empty"))
            }
        }
    }

    fn expect_bool(&self, e: &Expr) -> Result<Ty, Reason> {
        match self.infer(e, false)? {
            Ty::Bool => Ok(Ty::Bool),
            t => Err(Reason::Mismatch(format!("expected bool, found {t}"))),
        }
    }

    /// Type of a definition's right-hand side, enforcing the scoping rules.
    pub fn infer_rhs(&self, rhs: &Rhs) -> Result<Ty, Reason> {
        let only = |e: &Expr, allowed: &[Var], context: &'static str| -> Result<(), Reason> {
            match e.free_vars().into_iter().find(|v| !allowed.contains(v)) {
                Some(v) => Err(Reason::FreeVariable {
                    context,
                    var: v.name(),
                }),
                None => Ok(()),
            }
        };
        match rhs {
            Rhs::Pw(e) => {
                only(e, &[Var::I], "a position-wise expression")?;
                self.infer(e, false)
            }
            Rhs::Sum(e) => {
                if self.prog.dialect != Dialect::Srasp {
                    return Err(Reason::Dialect("prefix sums".into()));
                }
                only(e, &[Var::J], "a prefix-sum value")?;
                match self.infer(e, false)? {
                    Ty::Nat => Ok(Ty::Nat),
                    t => Err(Reason::Mismatch(format!("prefix sum over {t}"))),
                }
            }
            Rhs::Attn(a) => {
                only(&a.score, &[Var::I, Var::J], "a score")?;
                only(&a.value, &[Var::J], "an attention value")?;
                match self.infer(&a.score, true)? {
                    Ty::Bool => {}
                    t => return Err(Reason::Mismatch(format!("score must be bool, found {t}"))),
                }
                let tv = self.infer(&a.value, false)?;
                match &a.default {
                    None => Ok(tv),
                    Some(d) => {
                        only(d, &[Var::I], "a default")?;
                        let td = self.infer(d, false)?;
                        join(&tv, &td)
                            .ok_or_else(|| Reason::IllTypedArms(tv.to_string(), td.to_string()))
                    }
                }
            }
        }
    }
}

pub fn typecheck(p: &Program) -> Result<TypedProgram, TypeError> {
    let whole = |reason| TypeError {
        def: "<program>".to_string(),
        reason,
    };
    match (p.dialect, p.io) {
        (Dialect::Srasp, Io::Padded) => {}
        (Dialect::Srasp, _) => {
            return Err(whole(Reason::Dialect(
                "prefix-sum programs use padded io".into(),
            )))
        }
        (_, Io::Padded) => {
            return Err(whole(Reason::Dialect("padded io needs prefix sums".into())))
        }
        _ => {}
    }
    let mut env = Env::new(p);
    for d in &p.defs {
        let err = |reason| TypeError {
            def: d.name.clone(),
            reason,
        };
        if d.rhs.exprs().iter().any(|e| e.has_sugar()) {
            return Err(err(Reason::Sugar));
        }
        if let Rhs::Attn(a) = &d.rhs {
            if a.default.is_none() {
                return Err(err(Reason::Sugar));
            }
        }
        let t = env.infer_rhs(&d.rhs).map_err(err)?;
        env.types.insert(d.name.clone(), t);
    }
    let out_err = |m: &str| TypeError {
        def: "out".to_string(),
        reason: Reason::Output(m.to_string()),
    };
    match p.defs.last() {
        Some(d) if d.name == "out" => {}
        _ => return Err(out_err("`out` must be the final definition")),
    }
    let out = &env.types["out"];
    match p.io {
        Io::LengthPreserving | Io::Padded if !matches!(out, Ty::Sym(_)) => {
            return Err(out_err(&format!("expected symbols, found {out}")))
        }
        Io::Packed(k) if !out.is_textual() || out.bound() > k => {
            return Err(out_err(&format!(
                "expected strings of length at most {k}, found {out}"
            )))
        }
        _ => {}
    }
    Ok(TypedProgram {
        program: p.clone(),
        types: env.types,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn reason(src: &str) -> Reason {
        typecheck(&parse(src).unwrap()).unwrap_err().reason
    }

    #[test]
    fn increment_types() {
        let src = "dialect: brasp\nsigma: 0 1\ngamma: 0 1\n\
                   not(i) = '1' if in(i) = '0' else '0';\n\
                   carry(i) = rightmost j [j>i, in(j) = '0'] false : true;\n\
                   out(i) = not(i) if carry(i) else in(i);\n";
        let tp = typecheck(&parse(src).unwrap()).unwrap();
        assert!(matches!(tp.ty("not"), Ty::Sym(_)));
        assert_eq!(tp.ty("carry"), &Ty::Bool);
        assert!(matches!(tp.ty("out"), Ty::Sym(_)));
    }

    #[test]
    fn order_across_positions_is_rejected() {
        let src = "dialect: brasp_pos\nsigma: a\na(i) = pos(i);\nb(i) = pos(i);\n\
                   out(i) = leftmost j [true, a(i) < b(j)] in(j) : in(i);\n";
        assert_eq!(reason(src), Reason::CrossPositionOrder);
    }

    #[test]
    fn equality_must_be_whole_score() {
        let src = "dialect: brasp_pos\nsigma: a\n\
                   out(i) = leftmost j [true, pos(i) = pos(j) and in(j) = 'a'] in(j) : in(i);\n";
        assert_eq!(reason(src), Reason::CrossPositionEquality);
    }

    #[test]
    fn pos_is_not_boolean_rasp() {
        let p = parse("dialect: brasp\nsigma: a\nout(i) = in(pos(i));\n").unwrap();
        assert!(matches!(
            crate::lang::check(&p).unwrap_err().reason,
            Reason::Dialect(_)
        ));
        assert!(matches!(
            reason("dialect: brasp\nsigma: a\nx(i) = pos(i);\nout(i) = in(i);\n"),
            Reason::Dialect(_)
        ));
    }

    #[test]
    fn prefix_sum_is_srasp_only() {
        let src = "dialect: brasp_pos\nsigma: a\ns(i) = sum j [j<=i] pos(j);\nout(i) = in(i);\n";
        assert!(matches!(reason(src), Reason::Dialect(_)));
    }

    #[test]
    fn undefined_and_forward_reads() {
        let src = "dialect: brasp\nsigma: a\nx(i) = y(i);\ny(i) = in(i);\nout(i) = x(i);\n";
        assert_eq!(reason(src), Reason::UndefinedVector("y".into()));
    }

    #[test]
    fn free_variable_rules() {
        let src = "dialect: brasp\nsigma: a\nout(i) = leftmost j [true, true] in(i) : in(i);\n";
        assert!(matches!(reason(src), Reason::FreeVariable { var: "i", .. }));
        let src = "dialect: brasp\nsigma: a\nout(i) = leftmost j [true, true] in(j) : in(j);\n";
        assert!(matches!(reason(src), Reason::FreeVariable { var: "j", .. }));
    }

    #[test]
    fn arms_must_agree() {
        let src = "dialect: brasp\nsigma: a\nout(i) = 'a' if true else false;\n";
        assert!(matches!(reason(src), Reason::IllTypedArms(..)));
    }

    #[test]
    fn single_variable_nat_guard_is_fine() {
        let src = "dialect: brasp_pos\nsigma: a\nn(i) = pos(i);\nout(i) = in(i) if (n(i) + 1) < pos(i) else 'a';\n";
        assert!(typecheck(&parse(src).unwrap()).is_ok());
    }
}
