//! Rewriting attention scores so they read position j only.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{claim, taken_names, LowerError};
use crate::lang::{
    check, Attention, CmpOp, Def, Dialect, Expr, Program, Rhs, TypedProgram, Value, Var,
};

pub(crate) fn i_reads(e: &Expr) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    e.visit(&mut |x| {
        if let Expr::Read(n, Var::I) = x {
            if !out.contains(n) {
                out.push(n.clone());
            }
        }
    });
    out.sort();
    out
}

fn lit_bool(e: &Expr) -> Option<bool> {
    match e {
        Expr::Lit(Value::Bool(b)) => Some(*b),
        _ => None,
    }
}

/// Constant folding after literals were substituted for the i-reads.
pub(crate) fn fold(p: &Program, e: Expr) -> Expr {
    e.map(&mut |x| match x {
        Expr::Not(a) => match lit_bool(&a) {
            Some(b) => Expr::Lit(Value::Bool(!b)),
            None => Expr::Not(a),
        },
        Expr::And(a, b) => match (lit_bool(&a), lit_bool(&b)) {
            (Some(false), _) | (_, Some(false)) => Expr::ff(),
            (Some(true), _) => *b,
            (_, Some(true)) => *a,
            _ => Expr::And(a, b),
        },
        Expr::Or(a, b) => match (lit_bool(&a), lit_bool(&b)) {
            (Some(true), _) | (_, Some(true)) => Expr::tt(),
            (Some(false), _) => *b,
            (_, Some(false)) => *a,
            _ => Expr::Or(a, b),
        },
        Expr::Cmp(op, a, b) => match (&*a, &*b) {
            (Expr::Lit(x), Expr::Lit(y)) => {
                let r = match (x, y) {
                    (Value::Nat(m), Value::Nat(k)) => op.holds(m, k),
                    _ if op == CmpOp::Eq => x.same(y),
                    _ if op == CmpOp::Ne => !x.same(y),
                    _ => return Expr::Cmp(op, a, b),
                };
                Expr::Lit(Value::Bool(r))
            }
            _ => Expr::Cmp(op, a, b),
        },
        Expr::If(t, c, o) => match lit_bool(&c) {
            Some(true) => *t,
            Some(false) => *o,
            None => Expr::If(t, c, o),
        },
        Expr::Apply(f, args) => {
            let lits: Option<Vec<Value>> = args
                .iter()
                .map(|a| match a {
                    Expr::Lit(v) => Some(v.clone()),
                    _ => None,
                })
                .collect();
            match lits.and_then(|vs| p.table(&f).and_then(|t| t.apply(&vs)).cloned()) {
                Some(v) => Expr::Lit(v),
                None => Expr::Apply(f, args),
            }
        }
        other => other,
    })
}

pub(crate) fn profiles(domains: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        out = out
            .into_iter()
            .flat_map(|p| {
                d.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(v.clone());
                    q
                })
            })
            .collect();
    }
    out
}

fn holds_at(name: &str, v: &Value) -> Expr {
    match v {
        Value::Bool(true) => Expr::at_i(name),
        Value::Bool(false) => Expr::not(Expr::at_i(name)),
        v => Expr::eq(Expr::at_i(name), Expr::Lit(v.clone())),
    }
}

/// Replace every attention whose score reads position i by a choice among
/// attentions with j-only scores, one per assignment of the i-vectors it
/// reads. Branches whose score folds to false use the default directly.
pub fn normalize_scores(tp: &TypedProgram) -> Result<TypedProgram, LowerError> {
    let src = &tp.program;
    if src.dialect != Dialect::Brasp {
        return Err(LowerError::Dialect(
            "score normalization applies to boolean programs".into(),
        ));
    }
    let mut taken = taken_names(src);
    let mut out = Program { defs: Vec::new(), ..src.clone() };
    for d in &src.defs {
        let a = match &d.rhs {
            Rhs::Attn(a) if a.score.free_vars().contains(&Var::I) => a,
            _ => {
                out.defs.push(d.clone());
                continue;
            }
        };
        let reads = i_reads(&a.score);
        let domains = reads
            .iter()
            .map(|r| tp.ty(r).values().ok_or_else(|| LowerError::NotFinite(r.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let default = a.default.clone().expect("desugared");
        let mut branches: Vec<(Vec<Value>, Expr)> = Vec::new();
        for profile in profiles(&domains) {
            let subst: BTreeMap<&str, &Value> =
                reads.iter().map(String::as_str).zip(profile.iter()).collect();
            let score = a.score.clone().map(&mut |x| match x {
                Expr::Read(n, Var::I) if subst.contains_key(n.as_str()) => {
                    Expr::Lit(subst[n.as_str()].clone())
                }
                other => other,
            });
            let score = fold(src, score);
            let arm = if lit_bool(&score) == Some(false) {
                default.clone()
            } else {
                let name = claim(&mut taken, &alloc::format!("{}$s", d.name));
                out.defs.push(Def {
                    name: name.clone(),
                    rhs: Rhs::Attn(Attention {
                        choice: a.choice,
                        mask: a.mask,
                        score,
                        value: a.value.clone(),
                        default: Some(default.clone()),
                    }),
                    implicit_default: false,
                });
                Expr::at_i(&name)
            };
            branches.push((profile, arm));
        }
        let (_, mut e) = branches.pop().expect("at least one profile");
        for (profile, arm) in branches.into_iter().rev() {
            let test = reads
                .iter()
                .zip(&profile)
                .map(|(r, v)| holds_at(r, v))
                .reduce(Expr::and)
                .unwrap_or_else(Expr::tt);
            e = Expr::If(Box::new(arm), Box::new(test), Box::new(e));
        }
        out.defs.push(Def { name: d.name.to_string(), rhs: Rhs::Pw(e), implicit_default: false });
    }
    Ok(check(&out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::run;
    use crate::lang::load;

    fn words(sigma: &[char], max: usize) -> Vec<String> {
        let mut all = vec![String::new()];
        let mut layer = all.clone();
        for _ in 0..max {
            layer = layer
                .iter()
                .flat_map(|w| sigma.iter().map(move |c| alloc::format!("{w}{c}")))
                .collect();
            all.extend(layer.iter().cloned());
        }
        all
    }

    #[test]
    fn two_profile_expansion() {
        let src = "dialect: brasp\nsigma: a b\n\
                   big(i) = in(i) = 'a';\nsmall(i) = in(i) = 'b';\n\
                   out(i) = leftmost j [true, big(i) or small(j)] in(j) : 'a';\n";
        let tp = load(src).unwrap();
        let nf = normalize_scores(&tp).unwrap();
        let attns: Vec<&Def> = nf
            .program
            .defs
            .iter()
            .filter(|d| matches!(d.rhs, Rhs::Attn(_)))
            .collect();
        assert_eq!(attns.len(), 2);
        for d in &attns {
            let Rhs::Attn(a) = &d.rhs else { unreachable!() };
            assert!(!a.score.free_vars().contains(&Var::I));
        }
        for w in words(&['a', 'b'], 6) {
            assert_eq!(run(&tp, &w, None).unwrap(), run(&nf, &w, None).unwrap(), "{w}");
        }
    }

    #[test]
    fn false_branch_uses_default() {
        let src = "dialect: brasp\nsigma: a b\n\
                   x(i) = in(i) = 'a';\n\
                   out(i) = rightmost j [j<i, x(i) and in(j) = 'b'] in(j) : in(i);\n";
        let tp = load(src).unwrap();
        let nf = normalize_scores(&tp).unwrap();
        let attns = nf.program.defs.iter().filter(|d| matches!(d.rhs, Rhs::Attn(_))).count();
        assert_eq!(attns, 1);
        for w in words(&['a', 'b'], 6) {
            assert_eq!(run(&tp, &w, None).unwrap(), run(&nf, &w, None).unwrap(), "{w}");
        }
    }

    #[test]
    fn symbol_valued_i_reads() {
        let src = "dialect: brasp\nsigma: a b c\n\
                   out(i) = leftmost j [j>i, in(i) = in(j)] 'x' : in(i);\n";
        let tp = load(src).unwrap();
        let nf = normalize_scores(&tp).unwrap();
        for w in words(&['a', 'b', 'c'], 5) {
            assert_eq!(run(&tp, &w, None).unwrap(), run(&nf, &w, None).unwrap(), "{w}");
        }
    }
}
