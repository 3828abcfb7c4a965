//! Program rewrites run before emission. Both keep the trace of every
//! original vector, so the interpreter can check them directly.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::lang::{
    check, Attention, Choice, Def, Dialect, Expr, Mask, Program, Rhs, Ty, TypeError, TypedProgram, Var,
};
use crate::lower::{claim, taken_names};

/// `name(ix(i))` as a core attention.
fn lookup_def(name: &str, ix: &str, src: &str, ty: &Ty) -> Def {
    let mut d = Def::attn(
        name,
        Choice::Leftmost,
        Mask::All,
        Expr::eq(Expr::at_i(ix), Expr::at_j("pos")),
        Expr::at_j(src),
        Expr::Lit(ty.dead_value()),
    );
    d.implicit_default = true;
    d
}

/// Replace every attention masked to `j>i` or `j>=i` by one masked to
/// `j<i` or `j<=i` over the reversed vectors, reversing its result back.
/// Reversal is a lookup at `n-1-i`.
pub fn lower_past_masks(tp: &TypedProgram) -> Result<TypedProgram, TypeError> {
    let src = &tp.program;
    let past = |d: &Def| matches!(&d.rhs, Rhs::Attn(a) if matches!(a.mask, Mask::After | Mask::From));
    if !src.defs.iter().any(past) {
        return Ok(tp.clone());
    }
    let mut taken = taken_names(src);
    let mut out = Program { defs: Vec::new(), ..src.clone() };
    if out.dialect == Dialect::Brasp {
        out.dialect = Dialect::BraspPos;
        taken.insert("pos".into());
    }
    let lastpos = claim(&mut taken, "lastpos");
    let rix = claim(&mut taken, "rix");
    out.defs.push(Def::attn(&lastpos, Choice::Rightmost, Mask::All, Expr::tt(), Expr::at_j("pos"), Expr::nat(0)));
    out.defs.push(Def::pw(&rix, Expr::sub(Expr::at_i(&lastpos), Expr::at_i("pos"))));
    let mut types = tp.types.clone();
    types.insert("pos".into(), Ty::Nat);
    let mut reversed: BTreeMap<String, String> = BTreeMap::new();
    for d in &src.defs {
        let a = match &d.rhs {
            Rhs::Attn(a) if past(d) => a,
            _ => {
                out.defs.push(d.clone());
                continue;
            }
        };
        let mut names = BTreeSet::new();
        for e in d.rhs.exprs() {
            names.extend(e.reads());
        }
        for x in names {
            if !reversed.contains_key(&x) {
                let r = claim(&mut taken, &format!("{x}$rev"));
                out.defs.push(lookup_def(&r, &rix, &x, &types[&x]));
                reversed.insert(x, r);
            }
        }
        let flipped = claim(&mut taken, &format!("{}$flip", d.name));
        let rhs = Rhs::Attn(Attention {
            choice: match a.choice {
                Choice::Leftmost => Choice::Rightmost,
                Choice::Rightmost => Choice::Leftmost,
            },
            mask: if a.mask == Mask::After { Mask::Before } else { Mask::UpTo },
            ..a.clone()
        })
        .map_exprs(&mut |e| e.rename(&reversed));
        out.defs.push(Def { name: flipped.clone(), rhs, implicit_default: false });
        types.insert(flipped.clone(), tp.ty(&d.name).clone());
        out.defs.push(lookup_def(&d.name, &rix, &flipped, &types[&flipped]));
    }
    check(&out)
}

/// Top-down: replace maximal i-only subterms that are not plain reads.
fn hoist(e: Expr, found: &mut Vec<Expr>, name: &mut dyn FnMut() -> String) -> Expr {
    let vars = e.free_vars();
    if vars.len() == 1 && vars.contains(&Var::I) && !matches!(e, Expr::Read(..)) {
        let n = name();
        found.push(e);
        return Expr::at_i(&n);
    }
    let mut go = |x: Box<Expr>| Box::new(hoist(*x, found, name));
    match e {
        Expr::Not(a) => Expr::Not(go(a)),
        Expr::And(a, b) => Expr::And(go(a), go(b)),
        Expr::Or(a, b) => Expr::Or(go(a), go(b)),
        Expr::Cmp(op, a, b) => Expr::Cmp(op, go(a), go(b)),
        Expr::Arith(op, a, b) => Expr::Arith(op, go(a), go(b)),
        Expr::Concat(a, b) => Expr::Concat(go(a), go(b)),
        Expr::If(t, c, o) => Expr::If(go(t), go(c), go(o)),
        Expr::Apply(f, args) => Expr::Apply(f, args.into_iter().map(|x| *go(Box::new(x))).collect()),
        other => other,
    }
}

/// Move every compound subterm of a score that reads only position i into a
/// position-wise definition of its own, so scores read i through plain reads.
pub fn hoist_scores(tp: &TypedProgram) -> Result<TypedProgram, TypeError> {
    let src = &tp.program;
    let mut taken = taken_names(src);
    let mut out = Program { defs: Vec::new(), ..src.clone() };
    let mut changed = false;
    for d in &src.defs {
        let Rhs::Attn(a) = &d.rhs else {
            out.defs.push(d.clone());
            continue;
        };
        let mut found = Vec::new();
        let mut names = Vec::new();
        let score = hoist(a.score.clone(), &mut found, &mut || {
            let n = claim(&mut taken, &format!("{}$key", d.name));
            names.push(n.clone());
            n
        });
        changed |= !found.is_empty();
        for (n, e) in names.iter().zip(found) {
            out.defs.push(Def::pw(n, e));
        }
        out.defs.push(Def { rhs: Rhs::Attn(Attention { score, ..a.clone() }), ..d.clone() });
    }
    if !changed {
        return Ok(tp.clone());
    }
    check(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{default_n, eval};
    use crate::lang::{load, Io};

    fn words(sigma: &[char], max: usize) -> Vec<String> {
        let mut all = alloc::vec![String::new()];
        let mut layer = all.clone();
        for _ in 0..max {
            layer = layer.iter().flat_map(|w| sigma.iter().map(move |c| format!("{w}{c}"))).collect();
            all.extend(layer.iter().cloned());
        }
        all
    }

    /// Every row of `before` appears unchanged in `after`.
    fn same_rows(before: &TypedProgram, after: &TypedProgram, max: usize) {
        for w in words(&before.program.sigma, max) {
            let chars: Vec<char> = w.chars().collect();
            let n = default_n(before, chars.len()).unwrap();
            let mut ns = alloc::vec![n];
            if before.program.io == Io::Padded {
                ns.push(n + 1);
            }
            for n in ns {
                let t0 = eval(before, &chars, n).unwrap();
                let t1 = eval(after, &chars, n).unwrap();
                for (name, row) in &t0.rows {
                    assert_eq!(t1.row(name), Some(row.as_slice()), "{name} on {w} n={n}");
                }
            }
        }
    }

    const PAST: &str = "dialect: srasp\nsigma: a b c\ngamma: a b c\nio: padded\nminlen: l\n\
        k(i) = 1 if in(i) = 'a' else 0;\n\
        s(i) = sum j [j<=i] k(j);\n\
        r1(i) = leftmost j [j>i, in(j) = 'b'] in(j) : 'c';\n\
        r2(i) = rightmost j [j>=i, in(j) = in(i)] pos(j) : s(i);\n\
        r3(i) = leftmost j [j>=i, s(i) = s(j)] pos(j);\n\
        r4(i) = rightmost j [j>i, true] in(j) : in(i);\n\
        out(i) = r1(i) if r2(i) > r3(i) else r4(i);\n";

    #[test]
    fn past_masks_keep_every_row() {
        let tp = load(PAST).unwrap();
        let low = lower_past_masks(&tp).unwrap();
        for d in &low.program.defs {
            if let Rhs::Attn(a) = &d.rhs {
                assert!(!matches!(a.mask, Mask::After | Mask::From), "{}", d.name);
            }
        }
        same_rows(&tp, &low, 5);
    }

    #[test]
    fn boolean_programs_gain_positions() {
        let src = "dialect: brasp\nsigma: 0 1\ngamma: 0 1\n\
                   not(i) = '1' if in(i) = '0' else '0';\n\
                   carry(i) = rightmost j [j>i, in(j) = '0'] false : true;\n\
                   out(i) = not(i) if carry(i) else in(i);\n";
        let tp = load(src).unwrap();
        let low = lower_past_masks(&tp).unwrap();
        assert_eq!(low.program.dialect, Dialect::BraspPos);
        same_rows(&tp, &low, 6);
    }

    #[test]
    fn hoisting_leaves_plain_reads() {
        let src = "dialect: srasp\nsigma: a b\ngamma: a b\nio: padded\nminlen: l\n\
                   k(i) = pos(i) + 1;\n\
                   x(i) = leftmost j [true, (k(i) < 3 and in(j) = 'a') or not (in(i) = in(j))] in(j) : 'b';\n\
                   out(i) = x(i);\n";
        let tp = load(src).unwrap();
        let h = hoist_scores(&tp).unwrap();
        let Rhs::Attn(a) = &h.program.def("x").unwrap().rhs else { panic!() };
        a.score.visit(&mut |e| {
            if e.free_vars() == [Var::I].into_iter().collect() {
                assert!(matches!(e, Expr::Read(..)), "{e:?}");
            }
        });
        same_rows(&tp, &h, 5);
    }
}
