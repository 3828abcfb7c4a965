//! Cascades of identity-reset transducers as boolean programs.
//!
//! Each stage becomes three kinds of row: which state the machine is in
//! before position i (the target of the nearest reset letter already read,
//! found by one attention per state), whether position i is the last one
//! read, and a table giving the stage's output for the cell's string from
//! that state.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{claim, finish, taken_names, LowerError};
use crate::fst::{is_identity_reset, text, word, Dft, Dir, DirectedDft, Letter, Pipeline};
use crate::lang::{
    check, parse, Choice, Def, Dialect, Expr, Io, Mask, Pat, Table, TableRow, TypedProgram, Value,
};

/// Stages applied in order to the output of a program.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cascade {
    pub stages: Vec<DirectedDft>,
}

impl Cascade {
    pub fn pipeline(&self) -> Pipeline {
        Pipeline { stages: self.stages.clone(), coords: Vec::new() }
    }
}

fn plain(letters: &[Letter]) -> Option<Vec<char>> {
    letters
        .iter()
        .map(|l| match l.as_slice() {
            [Value::Sym(c)] => Some(*c),
            _ => None,
        })
        .collect()
}

/// The state a letter resets to, or `None` if it acts as the identity.
fn reset_of(m: &Dft, a: &Letter) -> Option<usize> {
    let map = m.state_map(a);
    if map.iter().enumerate().all(|(q, r)| q == *r) {
        None
    } else {
        Some(map[0])
    }
}

fn table(name: &str, rows: Vec<(Vec<Value>, Value)>) -> Table {
    Table {
        name: name.to_string(),
        rows: rows
            .into_iter()
            .map(|(args, out)| TableRow { pats: args.into_iter().map(Pat::Is).collect(), out })
            .collect(),
    }
}

fn apply1(f: &str, v: Expr) -> Expr {
    Expr::apply(f, vec![v])
}

/// Append each cascade stage to `base`, which must produce the first
/// stage's input. The result is a packed boolean program.
pub fn cascade_to_brasp(base: &TypedProgram, c: &Cascade) -> Result<TypedProgram, LowerError> {
    let mut cur = base.clone();
    if cur.program.dialect != Dialect::Brasp || cur.program.io == Io::Padded {
        return Err(LowerError::Dialect("cascades extend boolean programs".into()));
    }
    for (k, stage) in c.stages.iter().enumerate() {
        let m = &stage.machine;
        if !is_identity_reset(m) {
            return Err(LowerError::NotIdentityReset(k));
        }
        let sigma = plain(&m.sigma).ok_or_else(|| LowerError::Io(format!("stage {k} reads tuple letters")))?;
        let gamma = plain(&m.gamma).ok_or_else(|| LowerError::Io(format!("stage {k} writes tuple letters")))?;
        let domain = cur.ty("out").values().ok_or_else(|| LowerError::NotFinite("out".into()))?;
        let mut p = cur.program.clone();
        let mut taken = taken_names(&p);
        let z = claim(&mut taken, "z");
        p.rename_vector("out", &z);

        let cells: Vec<(Value, Vec<Letter>)> = domain
            .into_iter()
            .filter_map(|v| {
                let s = v.text()?;
                s.chars().all(|c| sigma.contains(&c)).then(|| (v, word(&s)))
            })
            .collect();
        if cells.is_empty() {
            return Err(LowerError::Io(format!("stage {k} reads none of the program's outputs")));
        }
        // The reset read last before position i decides the state: in a
        // right-to-left stage that is the first reset letter of the cell.
        let landing = |s: &[Letter]| -> Option<usize> {
            let mut it: Vec<&Letter> = s.iter().collect();
            if stage.dir == Dir::L2R {
                it.reverse();
            }
            it.into_iter().find_map(|a| reset_of(m, a))
        };
        let run_from = |q: usize, s: &[Letter], end: bool| -> Result<Value, LowerError> {
            let mut order: Vec<&Letter> = s.iter().collect();
            if stage.dir == Dir::R2L {
                order.reverse();
            }
            let mut state = q;
            let mut out: Vec<Letter> = Vec::new();
            let inputs = order.into_iter().map(Some).chain(end.then_some(None));
            for a in inputs {
                let (o, r) = m.step(state, a).ok_or_else(|| LowerError::Io(format!("stage {k} is partial")))?;
                out.extend(o.iter().cloned());
                state = *r;
            }
            if stage.dir == Dir::R2L {
                out.reverse();
            }
            Ok(Value::Str(text(&out).expect("plain letters")))
        };

        let zi = Expr::at_i(&z);
        let zj = Expr::at_j(&z);
        let reset = claim(&mut taken, "reset");
        p.tables.push(table(
            &reset,
            cells.iter().map(|(v, s)| (vec![v.clone()], Value::Bool(landing(s).is_some()))).collect(),
        ));
        let end = claim(&mut taken, if stage.dir == Dir::L2R { "last" } else { "first" });
        let (choice, mask) = match stage.dir {
            Dir::L2R => (Choice::Leftmost, Mask::After),
            Dir::R2L => (Choice::Rightmost, Mask::Before),
        };
        p.defs.push(Def::attn(&end, choice, mask, Expr::tt(), Expr::ff(), Expr::tt()));

        let nq = m.states.len();
        let mut in_state: Vec<String> = Vec::new();
        for q in 0..nq.saturating_sub(1) {
            let enter = claim(&mut taken, &format!("enter{q}"));
            p.tables.push(table(
                &enter,
                cells.iter().map(|(v, s)| (vec![v.clone()], Value::Bool(landing(s) == Some(q)))).collect(),
            ));
            let name = claim(&mut taken, &format!("state{q}"));
            let (choice, mask) = match stage.dir {
                Dir::L2R => (Choice::Rightmost, Mask::Before),
                Dir::R2L => (Choice::Leftmost, Mask::After),
            };
            p.defs.push(Def::attn(
                &name,
                choice,
                mask,
                apply1(&reset, zj.clone()),
                apply1(&enter, zj.clone()),
                Expr::Lit(Value::Bool(q == m.start)),
            ));
            in_state.push(name);
        }
        let mut emits: Vec<String> = Vec::new();
        for q in 0..nq {
            let name = claim(&mut taken, &format!("emit{q}"));
            let mut rows = Vec::new();
            for (v, s) in &cells {
                for flag in [false, true] {
                    rows.push((vec![v.clone(), Value::Bool(flag)], run_from(q, s, flag)?));
                }
            }
            p.tables.push(table(&name, rows));
            emits.push(name);
        }
        let call = |q: usize| Expr::apply(&emits[q], vec![zi.clone(), Expr::at_i(&end)]);
        let mut out = call(nq - 1);
        for q in (0..nq - 1).rev() {
            out = Expr::cond(call(q), Expr::at_i(&in_state[q]), out);
        }
        p.defs.push(Def::pw("out", out));
        p.gamma = gamma;
        p.io = Io::Packed(0);
        cur = finish(p)?;
    }
    Ok(cur)
}

/// All words over `sigma` up to length `max`.
fn words(sigma: &[Letter], max: usize) -> Vec<Vec<Letter>> {
    let mut all = vec![Vec::new()];
    let mut layer = all.clone();
    for _ in 0..max {
        layer = layer
            .iter()
            .flat_map(|w| {
                sigma.iter().map(move |a| {
                    let mut v: Vec<Letter> = w.clone();
                    v.push(a.clone());
                    v
                })
            })
            .collect();
        all.extend(layer.iter().cloned());
    }
    all
}

fn same_function(f: &DirectedDft, c: &Cascade, max: usize) -> Result<(), LowerError> {
    let pl = c.pipeline();
    for w in words(&f.machine.sigma, max) {
        let show = || text(&w).unwrap_or_else(|| format!("{w:?}"));
        let want = f.run(&w).map_err(|_| LowerError::CascadeMismatch { w: show() })?;
        match pl.run(&w) {
            Ok(got) if got == want => {}
            _ => return Err(LowerError::CascadeMismatch { w: show() }),
        }
    }
    Ok(())
}

/// A boolean program for `right ∘ left`, given identity-reset cascades
/// computing each machine. Each cascade is checked against its machine on
/// every word of length at most six first.
pub fn arational_to_brasp(
    left: &DirectedDft,
    right: &DirectedDft,
    left_cascade: &Cascade,
    right_cascade: &Cascade,
) -> Result<TypedProgram, LowerError> {
    let dirs_ok = left.dir == Dir::L2R
        && right.dir == Dir::R2L
        && left_cascade.stages.iter().all(|s| s.dir == Dir::L2R)
        && right_cascade.stages.iter().all(|s| s.dir == Dir::R2L);
    if !dirs_ok {
        return Err(LowerError::Io("expected a left-to-right then a right-to-left machine".into()));
    }
    same_function(left, left_cascade, 6)?;
    same_function(right, right_cascade, 6)?;
    let sigma = plain(&left.machine.sigma).ok_or_else(|| LowerError::Io("tuple input letters".into()))?;
    let alpha: String = sigma.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
    let base = check(&parse(&format!("dialect: brasp\nsigma: {alpha}\ngamma: {alpha}\nout(i) = in(i);\n"))?)?;
    let mut all = left_cascade.clone();
    all.stages.extend(right_cascade.stages.iter().cloned());
    cascade_to_brasp(&base, &all)
}
