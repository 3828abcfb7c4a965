//! Boolean programs as pipelines of one-way transducers, one stage per
//! operation, each stage appending a coordinate to the tuple letters.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::LowerError;
use crate::fst::{is_aperiodic, word, Aperiodicity, Dft, Dir, DirectedDft, Letter, Pipeline};
use crate::interp::{coerce, eval_expr};
use crate::lang::{Attention, Choice, Dialect, Expr, Io, Mask, Program, Rhs, Ty, TypedProgram, Value, Var};

struct Builder<'a> {
    prog: &'a Program,
    coords: Vec<String>,
    alpha: Vec<Letter>,
    stages: Vec<DirectedDft>,
}

/// How an attention stage tracks the satisfying letters seen so far.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Track {
    /// The most recent one.
    Update,
    /// The first one, kept for good.
    Latch,
}

impl Builder<'_> {
    fn at(&self, e: &Expr, x: &Letter) -> Result<Value, LowerError> {
        let read = |name: &str, _: Var| {
            let k = self.coords.iter().position(|c| c == name).expect("read of an earlier coordinate");
            x[k].clone()
        };
        Ok(eval_expr(self.prog, e, &read, usize::MAX)?)
    }

    fn truth(&self, e: &Expr, x: &Letter) -> Result<bool, LowerError> {
        Ok(self.at(e, x)?.as_bool().expect("typechecked score"))
    }

    fn push(&mut self, name: &str, machine: Dft, dir: Dir) {
        self.alpha = machine.gamma.clone();
        self.coords.push(name.to_string());
        self.stages.push(DirectedDft { machine, dir });
    }

    fn extend(x: &Letter, v: Value) -> Letter {
        let mut y = x.clone();
        y.push(v);
        y
    }

    fn gamma_of(t: &Dft) -> Vec<Letter> {
        let set: BTreeSet<Letter> = t.delta.values().flat_map(|(o, _)| o.iter().cloned()).collect();
        set.into_iter().collect()
    }

    fn pointwise(&mut self, name: &str, e: &Expr, ty: &Ty) -> Result<(), LowerError> {
        let mut t = Dft::new(self.alpha.clone(), Vec::new(), vec!["q".to_string()], 0);
        for x in &self.alpha {
            let v = coerce(self.at(e, x)?, ty);
            t.set(0, Some(x.clone()), vec![Self::extend(x, v)], 0);
        }
        t.set(0, None, Vec::new(), 0);
        t.gamma = Self::gamma_of(&t);
        self.push(name, t, Dir::L2R);
        Ok(())
    }

    /// One attention read in `dir` order. State `d` means nothing has
    /// satisfied the score yet; state `vK` remembers the K-th value.
    fn attention(
        &mut self,
        name: &str,
        a: &Attention,
        ty: &Ty,
        dir: Dir,
        track: Track,
        inclusive: bool,
    ) -> Result<(), LowerError> {
        let default = a.default.as_ref().expect("desugared");
        let mut seen: BTreeSet<Value> = BTreeSet::new();
        let mut hits: BTreeMap<Letter, Option<Value>> = BTreeMap::new();
        for x in &self.alpha {
            let hit = if self.truth(&a.score, x)? {
                let v = coerce(self.at(&a.value, x)?, ty);
                seen.insert(v.clone());
                Some(v)
            } else {
                None
            };
            hits.insert(x.clone(), hit);
        }
        let values: Vec<Value> = seen.into_iter().collect();
        let mut states = vec!["d".to_string()];
        states.extend((0..values.len()).map(|k| format!("v{k}")));
        let state_of = |v: &Value| 1 + values.iter().position(|u| u == v).unwrap();
        let mut t = Dft::new(self.alpha.clone(), Vec::new(), states, 0);
        for q in 0..=values.len() {
            for x in &self.alpha {
                let next = match (&hits[x], track) {
                    (Some(v), Track::Update) => state_of(v),
                    (Some(v), Track::Latch) if q == 0 => state_of(v),
                    _ => q,
                };
                let shown = if inclusive { next } else { q };
                let v = if shown == 0 {
                    coerce(self.at(default, x)?, ty)
                } else {
                    values[shown - 1].clone()
                };
                t.set(q, Some(x.clone()), vec![Self::extend(x, v)], next);
            }
            t.set(q, None, Vec::new(), q);
        }
        t.gamma = Self::gamma_of(&t);
        self.push(name, t, dir);
        Ok(())
    }
}

/// Lower a boolean program with j-only scores to a pipeline of transducers.
/// The first stage copies the input; each operation then adds one stage,
/// except unmasked attention, which takes three.
pub fn brasp_to_pipeline(tp: &TypedProgram) -> Result<Pipeline, LowerError> {
    let p = &tp.program;
    if p.dialect != Dialect::Brasp {
        return Err(LowerError::Dialect("only boolean programs lower to transducers".into()));
    }
    if p.io == Io::Padded {
        return Err(LowerError::Io("padded io has no transducer form".into()));
    }
    let sigma = word(&p.sigma.iter().collect::<String>());
    let mut b = Builder {
        prog: p,
        coords: vec!["in".to_string()],
        alpha: sigma.clone(),
        stages: vec![DirectedDft { machine: Dft::identity(sigma), dir: Dir::L2R }],
    };
    for d in &p.defs {
        let ty = tp.ty(&d.name);
        match &d.rhs {
            Rhs::Pw(e) => b.pointwise(&d.name, e, ty)?,
            Rhs::Sum(_) => return Err(LowerError::Dialect("prefix sums".into())),
            Rhs::Attn(a) => {
                if a.score.free_vars().contains(&Var::I) {
                    return Err(LowerError::UnnormalizedScore(d.name.clone()));
                }
                let near = |first: bool| if first { Track::Latch } else { Track::Update };
                let left = a.choice == Choice::Leftmost;
                match a.mask {
                    Mask::Before => b.attention(&d.name, a, ty, Dir::L2R, near(left), false)?,
                    Mask::UpTo => b.attention(&d.name, a, ty, Dir::L2R, near(left), true)?,
                    Mask::After => b.attention(&d.name, a, ty, Dir::R2L, near(!left), false)?,
                    Mask::From => b.attention(&d.name, a, ty, Dir::R2L, near(!left), true)?,
                    Mask::All => unmasked(&mut b, &d.name, a, ty)?,
                }
            }
        }
    }
    Ok(Pipeline { stages: b.stages, coords: b.coords })
}

/// Leftmost over all positions: the leftmost hit after i, then position i
/// itself, then the leftmost hit before i overriding both. Rightmost is the
/// mirror image.
fn unmasked(b: &mut Builder, name: &str, a: &Attention, ty: &Ty) -> Result<(), LowerError> {
    let (far, near_dir, far_dir) = match a.choice {
        Choice::Leftmost => (Mask::After, Dir::R2L, Dir::L2R),
        Choice::Rightmost => (Mask::Before, Dir::L2R, Dir::R2L),
    };
    let outer = if far == Mask::After { Mask::Before } else { Mask::After };
    let rest = format!("{name}$R");
    let here = format!("{name}$C");
    let ra = Attention { mask: far, ..a.clone() };
    b.attention(&rest, &ra, ty, near_dir, Track::Update, false)?;
    let cell = Expr::cond(a.value.clone().with_var(Var::I), a.score.clone().with_var(Var::I), Expr::at_i(&rest));
    b.pointwise(&here, &cell, ty)?;
    let pa = Attention { mask: outer, default: Some(Expr::at_i(&here)), ..a.clone() };
    b.attention(name, &pa, ty, far_dir, Track::Latch, false)
}

/// Run a lowered pipeline and read off its `out` coordinate as text.
pub fn pipeline_output(pl: &Pipeline, w: &str) -> Result<String, LowerError> {
    let out = pl.run(&word(w))?;
    let col = pl.project(&out, "out").ok_or_else(|| LowerError::Io("pipeline has no `out` coordinate".into()))?;
    Ok(col.iter().map(|v| v.text().unwrap_or_default()).collect())
}

/// Aperiodicity verdict for every stage.
pub fn check_pipeline_aperiodic(pl: &Pipeline) -> Vec<Aperiodicity> {
    pl.stages.iter().map(|s| is_aperiodic(&s.machine)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::run;
    use crate::lang::load;
    use crate::lower::normalize_scores;

    fn words(sigma: &str, max: usize) -> Vec<String> {
        let mut all = vec![String::new()];
        let mut layer = all.clone();
        for _ in 0..max {
            layer = layer.iter().flat_map(|w| sigma.chars().map(move |c| format!("{w}{c}"))).collect();
            all.extend(layer.iter().cloned());
        }
        all
    }

    fn agrees(src: &str, sigma: &str, max: usize) -> Pipeline {
        let tp = normalize_scores(&load(src).unwrap()).unwrap();
        let pl = brasp_to_pipeline(&tp).unwrap();
        for s in &pl.stages {
            s.machine.check().unwrap();
        }
        for w in words(sigma, max) {
            assert_eq!(pipeline_output(&pl, &w).unwrap(), run(&tp, &w, None).unwrap(), "{w}");
        }
        assert!(check_pipeline_aperiodic(&pl).iter().all(|a| a.holds()));
        pl
    }

    #[test]
    fn masks_and_choices() {
        for (choice, mask) in [
            ("leftmost", "j<i"),
            ("rightmost", "j<i"),
            ("leftmost", "j<=i"),
            ("rightmost", "j<=i"),
            ("leftmost", "j>i"),
            ("rightmost", "j>i"),
            ("leftmost", "j>=i"),
            ("rightmost", "j>=i"),
            ("leftmost", "true"),
            ("rightmost", "true"),
        ] {
            let src = format!(
                "dialect: brasp\nsigma: a b c\n\
                 out(i) = {choice} j [{mask}, in(j) != 'a'] in(j) : 'a';\n"
            );
            agrees(&src, "abc", 5);
        }
    }

    #[test]
    fn stage_counts() {
        let inc = "dialect: brasp\nsigma: 0 1\ngamma: 0 1\n\
                   not(i) = '1' if in(i) = '0' else '0';\n\
                   carry(i) = leftmost j [j>i, in(j) = '0'] false : true;\n\
                   out(i) = not(i) if carry(i) else in(i);\n";
        assert_eq!(agrees(inc, "01", 6).stages.len(), 4);
        let id = "dialect: brasp\nsigma: a b\nout(i) = in(i);\n";
        assert_eq!(agrees(id, "ab", 4).stages.len(), 2);
        let all = "dialect: brasp\nsigma: a b\nout(i) = leftmost j [true, in(j) = 'b'] 'b' : 'a';\n";
        assert_eq!(agrees(all, "ab", 5).stages.len(), 4);
    }

    #[test]
    fn unnormalized_scores_are_refused() {
        let src = "dialect: brasp\nsigma: a b\n\
                   out(i) = leftmost j [true, in(i) = in(j)] in(j) : 'a';\n";
        let tp = load(src).unwrap();
        assert_eq!(brasp_to_pipeline(&tp), Err(LowerError::UnnormalizedScore("out".into())));
    }
}
