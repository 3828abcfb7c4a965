//! Expansion of neighbor reads, index lookups and omitted defaults.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::typecheck::{Env, Reason, TypeError};
use super::{Attention, Choice, Def, Expr, Mask, Program, Rhs, Step, Var};

struct Expander<'a> {
    env: Env<'a>,
    taken: BTreeSet<String>,
    counter: usize,
    pending: Vec<Def>,
}

impl Expander<'_> {
    fn fresh(&mut self, base: &str) -> String {
        loop {
            self.counter += 1;
            let name = format!("{base}${}", self.counter);
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    /// Emit `d` ahead of the definition being expanded.
    fn push(&mut self, d: Def) -> Result<(), Reason> {
        let t = self.env.infer_rhs(&d.rhs)?;
        self.env.types.insert(d.name.clone(), t);
        self.pending.push(d);
        Ok(())
    }

    fn neighbor(&mut self, name: &str, step: Step) -> Result<String, Reason> {
        let fresh = match step {
            Step::Prev => format!("{name}$prev"),
            Step::Next => format!("{name}$next"),
        };
        if self.env.types.contains_key(&fresh) {
            return Ok(fresh);
        }
        let ty = self
            .env
            .types
            .get(name)
            .cloned()
            .ok_or_else(|| Reason::UndefinedVector(name.to_string()))?;
        let (choice, mask) = match step {
            Step::Prev => (Choice::Rightmost, Mask::Before),
            Step::Next => (Choice::Leftmost, Mask::After),
        };
        self.taken.insert(fresh.clone());
        self.push(Def::attn(
            &fresh,
            choice,
            mask,
            Expr::tt(),
            Expr::at_j(name),
            Expr::Lit(ty.dead_value()),
        ))?;
        Ok(fresh)
    }

    /// The attention realizing `name(ix)` for an `i`-only index.
    fn lookup(&mut self, def: String, owner: &str, name: &str, ix: Expr) -> Result<Def, Reason> {
        if self.env.infer(&ix, false)? != super::Ty::Nat {
            return Err(Reason::Mismatch(format!(
                "index into `{name}` must be an integer"
            )));
        }
        let key = match ix {
            Expr::Read(k, Var::I) => k,
            other => {
                let k = self.fresh(owner);
                self.push(Def::pw(&k, other))?;
                k
            }
        };
        let ty = self
            .env
            .types
            .get(name)
            .cloned()
            .ok_or_else(|| Reason::UndefinedVector(name.to_string()))?;
        let score = Expr::eq(Expr::at_i(&key), Expr::at_j("pos"));
        let mut d = Def::attn(
            &def,
            Choice::Leftmost,
            Mask::All,
            score,
            Expr::at_j(name),
            Expr::Lit(ty.dead_value()),
        );
        d.implicit_default = true;
        Ok(d)
    }

    fn expand(&mut self, e: Expr, owner: &str) -> Result<Expr, Reason> {
        Ok(match e {
            Expr::Shift(n, v, step) => Expr::Read(self.neighbor(&n, step)?, v),
            Expr::Lookup(n, ix) => {
                let ix = self.expand(*ix, owner)?;
                let vars = ix.free_vars();
                if vars.len() > 1 {
                    return Err(Reason::Mismatch(format!("index into `{n}` mixes i and j")));
                }
                let var = vars.into_iter().next().unwrap_or(Var::I);
                let def = self.fresh(owner);
                let d = self.lookup(def.clone(), owner, &n, ix.with_var(Var::I))?;
                self.push(d)?;
                Expr::Read(def, var)
            }
            Expr::Lit(_) | Expr::Read(..) => e,
            Expr::Not(a) => Expr::Not(self.expand(*a, owner)?.into()),
            Expr::And(a, b) => Expr::And(
                self.expand(*a, owner)?.into(),
                self.expand(*b, owner)?.into(),
            ),
            Expr::Or(a, b) => Expr::Or(
                self.expand(*a, owner)?.into(),
                self.expand(*b, owner)?.into(),
            ),
            Expr::Cmp(op, a, b) => Expr::Cmp(
                op,
                self.expand(*a, owner)?.into(),
                self.expand(*b, owner)?.into(),
            ),
            Expr::Arith(op, a, b) => Expr::Arith(
                op,
                self.expand(*a, owner)?.into(),
                self.expand(*b, owner)?.into(),
            ),
            Expr::Concat(a, b) => Expr::Concat(
                self.expand(*a, owner)?.into(),
                self.expand(*b, owner)?.into(),
            ),
            Expr::If(t, c, o) => Expr::If(
                self.expand(*t, owner)?.into(),
                self.expand(*c, owner)?.into(),
                self.expand(*o, owner)?.into(),
            ),
            Expr::Apply(f, args) => {
                let args = args
                    .into_iter()
                    .map(|a| self.expand(a, owner))
                    .collect::<Result<_, _>>()?;
                Expr::Apply(f, args)
            }
        })
    }

    fn def(&mut self, d: &Def) -> Result<Def, Reason> {
        let owner = d.name.as_str();
        Ok(match d.rhs.clone() {
            Rhs::Pw(Expr::Lookup(n, ix)) => {
                let ix = self.expand(*ix, owner)?;
                self.lookup(d.name.clone(), owner, &n, ix)?
            }
            Rhs::Pw(e) => Def {
                rhs: Rhs::Pw(self.expand(e, owner)?),
                ..d.clone()
            },
            Rhs::Sum(e) => Def {
                rhs: Rhs::Sum(self.expand(e, owner)?),
                ..d.clone()
            },
            Rhs::Attn(a) => {
                let score = self.expand(a.score, owner)?;
                let value = self.expand(a.value, owner)?;
                let (default, implicit) = match a.default {
                    Some(x) => (self.expand(x, owner)?, d.implicit_default),
                    None => {
                        let t = self.env.infer(&value, false)?;
                        (Expr::Lit(t.dead_value()), true)
                    }
                };
                Def {
                    name: d.name.clone(),
                    rhs: Rhs::Attn(Attention {
                        choice: a.choice,
                        mask: a.mask,
                        score,
                        value,
                        default: Some(default),
                    }),
                    implicit_default: implicit,
                }
            }
        })
    }
}

/// Rewrite sugar into core forms. Fresh names are deterministic, and the
/// result is a fixed point.
pub fn desugar(p: &Program) -> Result<Program, TypeError> {
    let shell = Program {
        defs: Vec::new(),
        ..p.clone()
    };
    let mut x = Expander {
        env: Env::new(&shell),
        taken: p.names(),
        counter: 0,
        pending: Vec::new(),
    };
    x.taken.extend(p.tables.iter().map(|t| t.name.clone()));
    let mut defs = Vec::new();
    for d in &p.defs {
        let err = |reason| TypeError {
            def: d.name.clone(),
            reason,
        };
        let nd = x.def(d).map_err(err)?;
        defs.append(&mut x.pending);
        let t = x.env.infer_rhs(&nd.rhs).map_err(err)?;
        x.env.types.insert(nd.name.clone(), t);
        defs.push(nd);
    }
    Ok(Program { defs, ..p.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, pretty};

    #[test]
    fn lookup_becomes_attention() {
        let p = parse("dialect: brasp_pos\nsigma: a b\nsrc(i) = pos(i);\ny1(i) = in(src(i));\nout(i) = y1(i);\n").unwrap();
        let d = desugar(&p).unwrap();
        let text = pretty(&d);
        assert!(
            text.contains("y1(i) = leftmost j [true, src(i) = pos(j)] in(j) : dead 'a';"),
            "{text}"
        );
    }

    #[test]
    fn neighbor_read_gets_fresh_def() {
        let p = parse(
            "dialect: brasp_pos\nsigma: a\nsum3(i) = pos(i);\nc(i) = sum3(i-1);\nout(i) = in(i);\n",
        )
        .unwrap();
        let d = desugar(&p).unwrap();
        let names: Vec<&str> = d.defs.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["sum3", "sum3$prev", "c", "out"]);
        assert!(pretty(&d).contains("sum3$prev(i) = rightmost j [j<i, true] sum3(j) : 0;"));
    }

    #[test]
    fn compound_index_is_hoisted() {
        let p = parse("dialect: brasp_pos\nsigma: a\nout(i) = in(pos(i) - 1) if true else 'a';\n")
            .unwrap();
        let d = desugar(&p).unwrap();
        let names: Vec<&str> = d.defs.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["out$2", "out$1", "out"]);
    }

    #[test]
    fn plain_program_is_unchanged() {
        let p = parse("dialect: brasp\nsigma: a\nt(i) = in(i);\nout(i) = t(i);\n").unwrap();
        assert_eq!(desugar(&p).unwrap(), p);
    }

    #[test]
    fn wrongly_typed_index_is_rejected() {
        let p = parse("dialect: brasp_pos\nsigma: a\nout(i) = in(in(i));\n").unwrap();
        assert!(desugar(&p).is_err());
    }
}
