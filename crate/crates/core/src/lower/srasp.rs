//! Prefix-sum constructions: composing padded programs, homomorphisms,
//! and unpacking a packed program into the padded convention.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{claim, finish, show_chars, taken_names, LowerError};
use crate::lang::{
    ArithOp, Attention, Choice, CmpOp, Def, Dialect, Expr, Io, Mask, MinLen, Pat, Program, Rhs,
    Table, TableRow, Ty, TypedProgram, Value, Var, PAD,
};

/// Append rows computing the homomorphism `images` applied to the cells of
/// `src`, ending with `out`. Each output position looks back at most K
/// steps, K the longest image, for the cell whose image covers it.
fn push_hom(p: &mut Program, taken: &mut BTreeSet<String>, src: &str, images: &[(Value, String)], blank: Value) {
    let hlen = claim(taken, "hlen");
    let mut rows: Vec<TableRow> = images
        .iter()
        .map(|(v, s)| TableRow { pats: vec![Pat::Is(v.clone())], out: Value::Nat(s.chars().count()) })
        .collect();
    rows.push(TableRow { pats: vec![Pat::Any], out: Value::Nat(0) });
    p.tables.push(Table { name: hlen.clone(), rows });
    let lens = claim(taken, "lens");
    let ends = claim(taken, "ends");
    let starts = claim(taken, "starts");
    p.defs.push(Def::pw(&lens, Expr::apply(&hlen, vec![Expr::at_i(src)])));
    p.defs.push(Def { name: ends.clone(), rhs: Rhs::Sum(Expr::at_j(&lens)), implicit_default: false });
    p.defs.push(Def::pw(&starts, Expr::sub(Expr::at_i(&ends), Expr::at_i(&lens))));
    let k = images.iter().map(|(_, s)| s.chars().count()).max().unwrap_or(0);
    let mut syms: Vec<String> = Vec::new();
    for m in 0..k {
        let name = claim(taken, &format!("sym{m}"));
        let d = if m == 0 {
            Def::attn(
                &name,
                Choice::Rightmost,
                Mask::All,
                Expr::eq(Expr::at_i("pos"), Expr::at_j(&starts)),
                Expr::at_j(src),
                Expr::Lit(blank.clone()),
            )
        } else {
            Def::attn(&name, Choice::Rightmost, Mask::Before, Expr::tt(), Expr::at_j(&syms[m - 1]), Expr::Lit(blank.clone()))
        };
        p.defs.push(d);
        syms.push(name);
    }
    let mut by_letter: BTreeMap<char, Vec<Expr>> = BTreeMap::new();
    for (v, s) in images {
        for (m, c) in s.chars().enumerate() {
            by_letter.entry(c).or_default().push(Expr::eq(Expr::at_i(&syms[m]), Expr::Lit(v.clone())));
        }
    }
    let mut out = Expr::sym(PAD);
    for (c, hits) in by_letter.into_iter().rev() {
        let any = hits.into_iter().reduce(Expr::or).expect("non-empty");
        out = Expr::cond(Expr::sym(c), any, out);
    }
    p.defs.push(Def::pw("out", out));
}

/// A padded program for the letter-to-string map `h`.
pub fn hom_to_srasp(sigma: &[char], gamma: &[char], h: &BTreeMap<char, String>) -> Result<TypedProgram, LowerError> {
    let used: BTreeSet<char> = h.values().flat_map(|s| s.chars()).collect();
    let gset: BTreeSet<char> = gamma.iter().copied().collect();
    if !used.is_subset(&gset) {
        return Err(LowerError::AlphabetMismatch { out: show_chars(&used), inp: show_chars(&gset) });
    }
    let images: Vec<(Value, String)> = sigma
        .iter()
        .map(|c| (Value::Sym(*c), h.get(c).cloned().unwrap_or_default()))
        .collect();
    let k = images.iter().map(|(_, s)| s.chars().count()).max().unwrap_or(0);
    let mut p = Program {
        dialect: Dialect::Srasp,
        io: Io::Padded,
        sigma: sigma.to_vec(),
        gamma: gamma.to_vec(),
        minlen: Some(MinLen::scaled(k)),
        tables: Vec::new(),
        defs: Vec::new(),
    };
    let mut taken = taken_names(&p);
    taken.insert("out".to_string());
    push_hom(&mut p, &mut taken, "in", &images, Value::Sym(PAD));
    finish(p)
}

fn rename_tables(p: &mut Program, map: &BTreeMap<String, String>) {
    for t in &mut p.tables {
        if let Some(n) = map.get(&t.name) {
            t.name = n.clone();
        }
    }
    for d in &mut p.defs {
        let rhs = core::mem::replace(&mut d.rhs, Rhs::Pw(Expr::tt()));
        d.rhs = rhs.map_exprs(&mut |e| {
            e.map(&mut |x| match x {
                Expr::Apply(f, args) => Expr::Apply(map.get(&f).cloned().unwrap_or(f), args),
                other => other,
            })
        });
    }
}

/// `second ∘ first` for padded programs: the first program's output row
/// becomes the second program's input row.
pub fn srasp_compose(first: &TypedProgram, second: &TypedProgram) -> Result<TypedProgram, LowerError> {
    let (p1, p2) = (&first.program, &second.program);
    if p1.dialect != Dialect::Srasp || p2.dialect != Dialect::Srasp {
        return Err(LowerError::Dialect("composition takes two prefix-sum programs".into()));
    }
    let g1: BTreeSet<char> = p1.gamma.iter().copied().collect();
    let s2: BTreeSet<char> = p2.sigma.iter().copied().collect();
    if g1 != s2 {
        return Err(LowerError::AlphabetMismatch { out: show_chars(&g1), inp: show_chars(&s2) });
    }
    let (q1, q2) = match (&p1.minlen, &p2.minlen) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => return Err(LowerError::NoMinLen),
    };
    let mut a = p1.clone();
    let mut taken = taken_names(&a);
    let z = claim(&mut taken, "z");
    a.rename_vector("out", &z);
    let mut b = p2.clone();
    let mut vectors: Vec<(String, String)> = Vec::new();
    for d in &b.defs {
        if d.name != "out" && taken.contains(&d.name) {
            vectors.push((d.name.clone(), claim(&mut taken, &d.name)));
        } else {
            taken.insert(d.name.clone());
        }
    }
    let mut tables = BTreeMap::new();
    for t in &b.tables {
        if taken.contains(&t.name) {
            tables.insert(t.name.clone(), claim(&mut taken, &t.name));
        } else {
            taken.insert(t.name.clone());
        }
    }
    for (from, to) in &vectors {
        b.rename_vector(from, to);
    }
    rename_tables(&mut b, &tables);
    b.rename_vector("in", &z);
    a.tables.extend(b.tables);
    a.defs.extend(b.defs);
    a.gamma = p2.gamma.clone();
    a.minlen = Some(MinLen::max(q1.clone(), q2.compose(&q1)));
    finish(a)
}

/// Clip additions and positive literals to `top`, read at the position of
/// the node, or at `dflt` when the node reads no vector.
fn clip_to(e: Expr, top: &str, dflt: Var) -> Expr {
    e.map(&mut |x| {
        let wrap = match &x {
            Expr::Arith(ArithOp::Add, ..) => true,
            Expr::Lit(Value::Nat(k)) => *k > 0,
            _ => false,
        };
        if !wrap {
            return x;
        }
        let vars = x.free_vars();
        let var = if vars.contains(&Var::I) {
            Var::I
        } else if vars.contains(&Var::J) {
            Var::J
        } else {
            dflt
        };
        let bound = Expr::Read(top.to_string(), var);
        Expr::If(
            Box::new(x.clone()),
            Box::new(Expr::cmp(CmpOp::Le, x, bound.clone())),
            Box::new(bound),
        )
    })
}

fn real(v: Var) -> Expr {
    Expr::Cmp(CmpOp::Ne, Box::new(Expr::Read("in".into(), v)), Box::new(Expr::sym(PAD)))
}

/// A packed positional program as a padded prefix-sum program: run it on
/// the non-blank prefix, then spread each cell's string over consecutive
/// positions.
pub fn unpack_packed(tp: &TypedProgram) -> Result<TypedProgram, LowerError> {
    let src = &tp.program;
    let k = match (src.dialect, src.io) {
        (Dialect::Srasp, _) | (_, Io::Padded) => {
            return Err(LowerError::Dialect("unpacking takes a packed positional program".into()))
        }
        (_, Io::Packed(k)) => k,
        (_, Io::LengthPreserving) => 1,
    };
    let out_ty = tp.ty("out");
    if !out_ty.is_textual() {
        return Err(LowerError::Io("output is not textual".into()));
    }
    let mut p = src.clone();
    let mut taken = taken_names(&p);
    for h in ["in", "pos"] {
        taken.insert(h.to_string());
    }
    let inx = claim(&mut taken, "inx");
    let len = claim(&mut taken, "len");
    let top = claim(&mut taken, "top");
    let cell = claim(&mut taken, "cell");
    p.rename_vector("in", &inx);
    p.rename_vector("out", &cell);
    let nats: BTreeSet<&str> = tp.types.iter().filter(|(_, t)| **t == Ty::Nat).map(|(n, _)| n.as_str()).collect();
    let filler = *src.sigma.first().ok_or_else(|| LowerError::Io("empty input alphabet".into()))?;
    let mut defs = vec![
        Def::pw(&inx, Expr::cond(Expr::at_i("in"), real(Var::I), Expr::sym(filler))),
        Def::attn(&len, Choice::Leftmost, Mask::All, Expr::eq(Expr::at_j("in"), Expr::sym(PAD)), Expr::at_j("pos"), Expr::nat(0)),
        Def::pw(&top, Expr::sub(Expr::at_i(&len), Expr::nat(1))),
    ];
    let mut live: BTreeMap<String, String> = BTreeMap::new();
    for d in core::mem::take(&mut p.defs) {
        let rhs = match d.rhs {
            Rhs::Pw(e) => Rhs::Pw(clip_to(e, &top, Var::I)),
            Rhs::Sum(_) => unreachable!("positional programs have no sums"),
            Rhs::Attn(a) => {
                // Blank positions must never be attended to. A cross-position
                // equality has to stay whole, so its j side reads a copy that
                // holds an unreachable value at blanks instead.
                let score = match a.score {
                    Expr::Cmp(CmpOp::Eq, l, r) if matches!((&*l, &*r), (Expr::Read(x, _), Expr::Read(y, _)) if nats.contains(x.as_str()) || nats.contains(y.as_str()) || x == "pos" || y == "pos") => {
                        let (l, r) = (*l, *r);
                        let swap = |e: Expr, defs: &mut Vec<Def>, live: &mut BTreeMap<String, String>, taken: &mut BTreeSet<String>| match e {
                            Expr::Read(n, Var::J) => {
                                let name = live.entry(n.clone()).or_insert_with(|| {
                                    let fresh = claim(taken, &format!("{n}$live"));
                                    defs.push(Def::pw(&fresh, Expr::cond(Expr::at_i(&n), real(Var::I), Expr::at_i(&len))));
                                    fresh
                                });
                                Expr::at_j(name)
                            }
                            other => other,
                        };
                        let l = swap(l, &mut defs, &mut live, &mut taken);
                        let r = swap(r, &mut defs, &mut live, &mut taken);
                        Expr::eq(l, r)
                    }
                    s => Expr::and(clip_to(s, &top, Var::J), real(Var::J)),
                };
                Rhs::Attn(Attention {
                    choice: a.choice,
                    mask: a.mask,
                    score,
                    value: clip_to(a.value, &top, Var::J),
                    default: a.default.map(|e| clip_to(e, &top, Var::I)),
                })
            }
        };
        defs.push(Def { rhs, ..d });
    }
    let z = claim(&mut taken, "z");
    defs.push(Def::pw(&z, Expr::cond(Expr::at_i(&cell), real(Var::I), Expr::text(""))));
    p.defs = defs;
    p.dialect = Dialect::Srasp;
    p.io = Io::Padded;
    p.gamma = out_ty.chars().into_iter().collect();
    p.minlen = Some(MinLen::max(MinLen::L, MinLen::scaled(k)));
    let images: Vec<(Value, String)> = Ty::Str(out_ty.chars(), out_ty.bound())
        .values()
        .expect("strings are finite")
        .into_iter()
        .filter_map(|v| v.text().filter(|s| !s.is_empty()).map(|s| (v, s)))
        .collect();
    taken.insert("out".to_string());
    push_hom(&mut p, &mut taken, &z, &images, Value::Str(String::new()));
    finish(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::run;
    use crate::lang::load;

    fn words(sigma: &str, max: usize) -> Vec<String> {
        let mut all = vec![String::new()];
        let mut layer = all.clone();
        for _ in 0..max {
            layer = layer.iter().flat_map(|w| sigma.chars().map(move |c| format!("{w}{c}"))).collect();
            all.extend(layer.iter().cloned());
        }
        all
    }

    fn image(h: &BTreeMap<char, String>, w: &str) -> String {
        w.chars().map(|c| h[&c].clone()).collect()
    }

    #[test]
    fn homomorphism_on_all_short_words() {
        let h: BTreeMap<char, String> = [('A', "a"), ('B', ""), ('C', "cd")].into_iter().map(|(c, s)| (c, s.to_string())).collect();
        let tp = hom_to_srasp(&['A', 'B', 'C'], &['a', 'c', 'd'], &h).unwrap();
        for w in words("ABC", 5) {
            assert_eq!(run(&tp, &w, None).unwrap(), image(&h, &w), "{w}");
        }
    }

    #[test]
    fn erasing_homomorphism() {
        let h: BTreeMap<char, String> = [('a', String::new())].into();
        let tp = hom_to_srasp(&['a'], &['a'], &h).unwrap();
        for w in words("a", 4) {
            assert_eq!(run(&tp, &w, None).unwrap(), "");
        }
    }

    #[test]
    fn composition_chains_homomorphisms() {
        let h1: BTreeMap<char, String> = [('a', "bb"), ('b', "a")].into_iter().map(|(c, s)| (c, s.to_string())).collect();
        let h2: BTreeMap<char, String> = [('a', "c"), ('b', "ab")].into_iter().map(|(c, s)| (c, s.to_string())).collect();
        let f = hom_to_srasp(&['a', 'b'], &['a', 'b'], &h1).unwrap();
        let g = hom_to_srasp(&['a', 'b'], &['a', 'b', 'c'], &h2).unwrap();
        let gf = srasp_compose(&f, &g).unwrap();
        for w in words("ab", 5) {
            assert_eq!(run(&gf, &w, None).unwrap(), image(&h2, &image(&h1, &w)), "{w}");
        }
    }

    #[test]
    fn composition_checks_alphabets() {
        let h: BTreeMap<char, String> = [('a', "a".to_string())].into();
        let f = hom_to_srasp(&['a'], &['a'], &h).unwrap();
        let g = hom_to_srasp(&['a', 'b'], &['a'], &[('a', "a".to_string()), ('b', "a".to_string())].into()).unwrap();
        assert!(matches!(srasp_compose(&f, &g), Err(LowerError::AlphabetMismatch { .. })));
    }

    #[test]
    fn unpacking_preserves_packed_output() {
        let sources = [
            "dialect: brasp\nsigma: a b\nio: packed 3\nout(i) = \"aa\" if in(i) = 'a' else \"ccb\";\n",
            "dialect: brasp_pos\nsigma: a b\nio: packed 1\n\
             last(i) = rightmost j [true, true] pos(j) : 0;\n\
             mid(i) = (pos(i) + pos(i)) <= last(i);\n\
             mirror(i) = last(i) - pos(i);\n\
             out(i) = in(mirror(i)) if mid(i) else \"\";\n",
            "dialect: brasp_pos\nsigma: a b\n\
             out(i) = in(i+1) if pos(i) = 0 else in(i);\n",
        ];
        for src in sources {
            let tp = load(src).unwrap();
            let up = unpack_packed(&tp).unwrap();
            for w in words("ab", 5) {
                assert_eq!(run(&up, &w, None).unwrap(), run(&tp, &w, None).unwrap(), "{w}");
            }
        }
    }
}
