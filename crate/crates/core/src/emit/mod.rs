//! Compiling programs into exact average-hard-attention encoders.
//!
//! Every vector gets its own coordinates: a boolean is one 0/1 coordinate, an
//! integer k is one coordinate holding k/n, and a symbol or string is a
//! one-hot block keyed by its text. All program coordinates are zero at the
//! default position. Coordinates are never reused, so every write lands on
//! a zero coordinate and a feed-forward layer can set it outright.

mod rewrite;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::aha::{int, q, AttnMask, Layer, PeMode, Probe, Sparse, TransformerSpec, Q};
use crate::lang::{
    Attention, Choice, CmpOp, Expr, Io, Mask, Pat, Program, Rhs, Ty, TypeError, TypedProgram,
    Value, Var, PAD,
};
use crate::lower::{fold, i_reads, profiles};

pub use rewrite::{hoist_scores, lower_past_masks};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmitError {
    #[error("cannot compile: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Type(#[from] TypeError),
}

fn unsupported<T>(msg: impl Into<String>) -> Result<T, EmitError> {
    Err(EmitError::Unsupported(msg.into()))
}

#[derive(Debug, Clone)]
enum Slot {
    Bool(usize),
    Nat(usize),
    Text(BTreeMap<String, usize>),
}

/// One hidden unit: `coef * relu(bias + Σ terms)` added into `dst`.
#[derive(Debug, Clone)]
struct Part {
    dst: usize,
    coef: Q,
    bias: Q,
    terms: Vec<(usize, Q)>,
}

fn part(dst: usize, terms: &[(usize, i64)]) -> Part {
    Part { dst, coef: int(1), bias: Q::zero(), terms: terms.iter().map(|&(c, k)| (c, int(k))).collect() }
}

type Form = Vec<(usize, Q)>;

enum Step {
    Ffn(Vec<Part>),
    Attn { mask: AttnMask, qk: Vec<(Form, Form)>, v: Vec<(usize, usize, Q)> },
}

/// Shared coordinates set up before the program runs.
struct Basics {
    one: usize,
    live: usize,
    nil: usize,
    pos: usize,
    posv: usize,
    posq: Option<usize>,
    posi: usize,
    posiq: Option<usize>,
    default: usize,
    zero: usize,
    /// 1/n at the default position, 0 elsewhere.
    corner: usize,
    invn: usize,
    invn2: usize,
    invn4: usize,
    /// 2/(n(i+2)), mode C only.
    halfstep: Option<usize>,
}

struct Emitter<'a> {
    prog: &'a Program,
    types: &'a BTreeMap<String, Ty>,
    mode: PeMode,
    layout: Vec<String>,
    steps: Vec<Step>,
    pending: Vec<Part>,
    written: BTreeSet<usize>,
    probes: Vec<Probe>,
    slots: BTreeMap<String, Slot>,
    consts: BTreeMap<usize, usize>,
    memo: Vec<(Expr, Slot)>,
    b: Option<Basics>,
    input: Vec<(char, usize)>,
}

impl Emitter<'_> {
    fn b(&self) -> &Basics {
        self.b.as_ref().expect("prelude emitted")
    }

    fn fresh(&mut self, name: &str) -> usize {
        self.layout.push(name.to_string());
        self.layout.len() - 1
    }

    fn flush(&mut self) {
        if !self.pending.is_empty() {
            self.steps.push(Step::Ffn(core::mem::take(&mut self.pending)));
            self.written.clear();
        }
    }

    /// Queue position-wise units, starting a new layer when one of them reads
    /// a coordinate written by the layer being filled.
    fn ffn(&mut self, parts: Vec<Part>) {
        if parts.iter().any(|p| p.terms.iter().any(|(c, _)| self.written.contains(c))) {
            self.flush();
        }
        self.written.extend(parts.iter().map(|p| p.dst));
        self.pending.extend(parts);
    }

    /// Returns the index of the layer.
    fn attn(&mut self, mask: AttnMask, qk: Vec<(Form, Form)>, v: Vec<(usize, usize, Q)>) -> usize {
        self.flush();
        self.steps.push(Step::Attn { mask, qk, v });
        self.steps.len() - 1
    }

    /// Zero `t` at the default position; values lie in [0, 1].
    fn gate(&mut self, t: usize) {
        let live = self.b().live;
        self.ffn(vec![Part { coef: int(-1), ..part(t, &[(t, 1), (live, -1)]) }]);
    }

    fn relu_into(&mut self, name: &str, terms: &[(usize, i64)]) -> usize {
        let t = self.fresh(name);
        self.ffn(vec![part(t, terms)]);
        t
    }

    fn prelude(&mut self) {
        let mode = self.mode;
        let pe: BTreeMap<&str, usize> = mode
            .coords()
            .iter()
            .map(|name| (*name, self.fresh(name)))
            .collect();
        let ins: Vec<usize> = self.input.iter().map(|(_, c)| *c).collect();
        let one = self.fresh("one");
        let live = self.fresh("live");
        let nil = self.fresh("nil");
        let posv = self.fresh("posv");
        let corner = self.fresh("corner");
        let pos = pe["pos"];
        let mut parts = vec![
            Part { bias: int(1), ..part(one, &[]) },
            part(live, &ins.iter().map(|&c| (c, 1)).collect::<Vec<_>>()),
            part(posv, &[(pos, 1)]),
            part(corner, &[(pos, -1)]),
        ];
        let (default, zero) = match mode {
            PeMode::B => (pe["default"], pe["zero"]),
            PeMode::C => {
                let default = self.fresh("default");
                let zero = self.fresh("zero");
                let posiq = pe["posiq"];
                let blank: Vec<(usize, Q)> = ins.iter().map(|&c| (c, int(-1))).collect();
                parts.push(Part { bias: int(1), terms: blank.clone(), ..part(default, &[]) });
                // 1 at i = 0 only: posiq is 1/4 there and at most 1/9 later.
                parts.push(Part { coef: q(36, 5), bias: q(-1, 9), ..part(zero, &[(posiq, 1)]) });
                parts.push(Part { coef: q(-32, 5), bias: int(1), terms: blank, ..part(zero, &[]) });
                (default, zero)
            }
        };
        self.ffn(parts);
        let (posi, halfstep) = match mode {
            PeMode::B => (pe["posi"], None),
            PeMode::C => {
                let posi = self.fresh("posi");
                let half = self.fresh("halfstep");
                self.attn(AttnMask::NonStrict, Vec::new(), vec![(posi, default, int(1)), (half, corner, int(2))]);
                (posi, Some(half))
            }
        };
        let invn = self.fresh("invn");
        self.attn(AttnMask::None, vec![(vec![(one, int(1))], vec![(default, int(1))])], vec![(invn, corner, int(1))]);
        // Averaging a value held only by the default position over the n
        // positions before n-1 divides it by n; then broadcast from n-1.
        let mut powers = vec![invn];
        for k in 2..=4 {
            let src = if k == 2 {
                corner
            } else {
                let prev = *powers.last().unwrap();
                self.relu_into(&format!("corner{k}"), &[(prev, 1), (default, 1), (one, -1)])
            };
            let avg = self.fresh(&format!("avg{k}"));
            self.attn(AttnMask::Strict, Vec::new(), vec![(avg, src, int(1))]);
            let p = self.fresh(&format!("invn{k}"));
            self.attn(AttnMask::None, vec![(vec![(one, int(1))], vec![(pos, int(1))])], vec![(p, avg, int(1))]);
            powers.push(p);
        }
        self.b = Some(Basics {
            one,
            live,
            nil,
            pos,
            posv,
            posq: pe.get("posq").copied(),
            posi,
            posiq: pe.get("posiq").copied(),
            default,
            zero,
            corner,
            invn,
            invn2: powers[1],
            invn4: powers[3],
            halfstep,
        });
    }

    /// `dst_k = src_k(j)` where j is the position whose index `index(i)/n`
    /// names, clamped to n-1; gated.
    fn lookup(&mut self, index: Form, srcs: &[usize], name: &str) -> Vec<usize> {
        let b = self.b();
        let (one, pos, invn, posi) = (b.one, b.pos, b.invn, b.posi);
        let qk = match self.mode {
            PeMode::B => {
                let posq = b.posq.unwrap();
                let twice = index.iter().map(|(c, k)| (*c, k * int(2))).collect();
                vec![(twice, vec![(pos, int(1))]), (vec![(one, int(-1))], vec![(posq, int(1))])]
            }
            PeMode::C => {
                let posiq = b.posiq.unwrap();
                let mut neg: Form = index.iter().map(|(c, k)| (*c, -k.clone())).collect();
                neg.push((invn, int(-2)));
                vec![(vec![(invn, int(2))], vec![(posi, int(1))]), (neg, vec![(posiq, int(1))])]
            }
        };
        let dsts: Vec<usize> = srcs.iter().enumerate().map(|(k, _)| self.fresh(&format!("{name}.{k}"))).collect();
        let v = dsts.iter().zip(srcs).map(|(d, s)| (*d, *s, int(1))).collect();
        self.attn(AttnMask::None, qk, v);
        for d in &dsts {
            self.gate(*d);
        }
        dsts
    }

    fn lookup1(&mut self, index: usize, src: usize, name: &str) -> usize {
        self.lookup(vec![(index, int(1))], &[src], name)[0]
    }

    /// Coordinate holding min(k, n-1)/n.
    fn constant(&mut self, k: usize) -> usize {
        if k == 0 {
            return self.b().nil;
        }
        if let Some(c) = self.consts.get(&k) {
            return *c;
        }
        let (invn, posv) = (self.b().invn, self.b().posv);
        let c = self.lookup(vec![(invn, int(k as i64))], &[posv], &format!("const{k}"))[0];
        self.consts.insert(k, c);
        c
    }

    fn not(&mut self, a: usize) -> usize {
        let live = self.b().live;
        self.relu_into("not", &[(live, 1), (a, -1)])
    }

    fn and(&mut self, xs: &[usize]) -> usize {
        match xs {
            [] => self.b().live,
            [x] => *x,
            _ => {
                let live = self.b().live;
                let mut terms: Vec<(usize, i64)> = xs.iter().map(|&x| (x, 1)).collect();
                terms.push((live, 1 - xs.len() as i64));
                self.relu_into("and", &terms)
            }
        }
    }

    fn or(&mut self, a: usize, b: usize) -> usize {
        let live = self.b().live;
        let t = self.fresh("or");
        self.ffn(vec![
            part(t, &[(a, 1)]),
            part(t, &[(b, 1)]),
            Part { coef: int(-1), ..part(t, &[(a, 1), (b, 1), (live, -1)]) },
        ]);
        t
    }

    /// [a <= b] for integer coordinates.
    fn le(&mut self, a: usize, b: usize) -> usize {
        let d = self.relu_into("excess", &[(a, 1), (b, -1)]);
        let zero = self.b().zero;
        self.lookup1(d, zero, "le")
    }

    fn nat_eq(&mut self, a: usize, b: usize) -> usize {
        let d = self.fresh("gap");
        self.ffn(vec![part(d, &[(a, 1), (b, -1)]), part(d, &[(b, 1), (a, -1)])]);
        let zero = self.b().zero;
        self.lookup1(d, zero, "eq")
    }

    /// Indicator that a slot holds `v`.
    fn holds(&mut self, s: &Slot, v: &Value) -> Result<usize, EmitError> {
        Ok(match (s, v) {
            (Slot::Bool(a), Value::Bool(true)) => *a,
            (Slot::Bool(a), Value::Bool(false)) => self.not(*a),
            (Slot::Nat(a), Value::Nat(k)) => {
                let c = self.constant(*k);
                self.nat_eq(*a, c)
            }
            (Slot::Text(m), v) => match v.text() {
                Some(t) => m.get(&t).copied().unwrap_or(self.b().nil),
                None => return unsupported("pattern of the wrong kind"),
            },
            _ => return unsupported("pattern of the wrong kind"),
        })
    }

    fn literal(&mut self, v: &Value) -> Slot {
        let (live, nil) = (self.b().live, self.b().nil);
        match v {
            Value::Bool(true) => Slot::Bool(live),
            Value::Bool(false) => Slot::Bool(nil),
            Value::Nat(k) => Slot::Nat(self.constant(*k)),
            v => Slot::Text([(v.text().unwrap(), live)].into()),
        }
    }

    fn bool_of(&mut self, e: &Expr) -> Result<usize, EmitError> {
        match self.expr(e)? {
            Slot::Bool(c) => Ok(c),
            _ => unsupported("expected a boolean"),
        }
    }

    fn nat_of(&mut self, e: &Expr) -> Result<usize, EmitError> {
        match self.expr(e)? {
            Slot::Nat(c) => Ok(c),
            _ => unsupported("expected an integer"),
        }
    }

    /// A position-wise expression; every read is of the current position.
    fn expr(&mut self, e: &Expr) -> Result<Slot, EmitError> {
        let e = e.clone().with_var(Var::I);
        if let Some((_, s)) = self.memo.iter().find(|(x, _)| *x == e) {
            return Ok(s.clone());
        }
        let s = self.expr_uncached(&e)?;
        self.memo.push((e, s.clone()));
        Ok(s)
    }

    fn expr_uncached(&mut self, e: &Expr) -> Result<Slot, EmitError> {
        let live = self.b().live;
        Ok(match e {
            Expr::Lit(v) => self.literal(v),
            Expr::Read(n, _) => match self.slots.get(n) {
                Some(s) => s.clone(),
                None => return unsupported(format!("`{n}` read before it is defined")),
            },
            Expr::Shift(..) | Expr::Lookup(..) => return unsupported("unexpanded sugar"),
            Expr::Not(a) => {
                let a = self.bool_of(a)?;
                Slot::Bool(self.not(a))
            }
            Expr::And(a, b) => {
                let (a, b) = (self.bool_of(a)?, self.bool_of(b)?);
                Slot::Bool(self.and(&[a, b]))
            }
            Expr::Or(a, b) => {
                let (a, b) = (self.bool_of(a)?, self.bool_of(b)?);
                Slot::Bool(self.or(a, b))
            }
            Expr::Cmp(op, a, b) => Slot::Bool(self.compare(*op, a, b)?),
            Expr::Arith(op, a, b) => {
                let (a, b) = (self.nat_of(a)?, self.nat_of(b)?);
                match op {
                    crate::lang::ArithOp::Add => {
                        let t = self.relu_into("sum", &[(a, 1), (b, 1)]);
                        let posv = self.b().posv;
                        Slot::Nat(self.lookup1(t, posv, "add"))
                    }
                    crate::lang::ArithOp::Sub => Slot::Nat(self.relu_into("sub", &[(a, 1), (b, -1)])),
                }
            }
            Expr::Concat(a, b) => {
                let (Slot::Text(x), Slot::Text(y)) = (self.expr(a)?, self.expr(b)?) else {
                    return unsupported("concatenation of non-strings");
                };
                let mut parts: BTreeMap<String, Vec<Part>> = BTreeMap::new();
                let mut out = BTreeMap::new();
                for (ka, ca) in &x {
                    for (kb, cb) in &y {
                        let key = format!("{ka}{kb}");
                        let dst = *out.entry(key.clone()).or_insert_with(|| self.fresh(&format!("cat={key}")));
                        parts.entry(key).or_default().push(part(dst, &[(*ca, 1), (*cb, 1), (live, -1)]));
                    }
                }
                self.ffn(parts.into_values().flatten().collect());
                Slot::Text(out)
            }
            Expr::If(t, c, o) => {
                let c = self.bool_of(c)?;
                let (t, o) = (self.expr(t)?, self.expr(o)?);
                let choose = |this: &mut Self, dst: usize, x: Option<usize>, y: Option<usize>| {
                    let mut parts = Vec::new();
                    if let Some(x) = x {
                        parts.push(part(dst, &[(x, 1), (c, 1), (live, -1)]));
                    }
                    if let Some(y) = y {
                        parts.push(part(dst, &[(y, 1), (c, -1)]));
                    }
                    this.ffn(parts);
                };
                match (t, o) {
                    (Slot::Bool(x), Slot::Bool(y)) => {
                        let d = self.fresh("if");
                        choose(self, d, Some(x), Some(y));
                        Slot::Bool(d)
                    }
                    (Slot::Nat(x), Slot::Nat(y)) => {
                        let d = self.fresh("if");
                        choose(self, d, Some(x), Some(y));
                        Slot::Nat(d)
                    }
                    (Slot::Text(x), Slot::Text(y)) => {
                        let keys: BTreeSet<&String> = x.keys().chain(y.keys()).collect();
                        let mut out = BTreeMap::new();
                        for k in keys {
                            let d = self.fresh(&format!("if={k}"));
                            choose(self, d, x.get(k).copied(), y.get(k).copied());
                            out.insert(k.clone(), d);
                        }
                        Slot::Text(out)
                    }
                    _ => return unsupported("conditional arms of different kinds"),
                }
            }
            Expr::Apply(f, args) => self.apply(f, args)?,
        })
    }

    fn compare(&mut self, op: CmpOp, a: &Expr, b: &Expr) -> Result<usize, EmitError> {
        let (x, y) = (self.expr(a)?, self.expr(b)?);
        let live = self.b().live;
        let eq = match (&x, &y) {
            (Slot::Nat(a), Slot::Nat(b)) => {
                let (a, b) = (*a, *b);
                return Ok(match op {
                    CmpOp::Eq => self.nat_eq(a, b),
                    CmpOp::Ne => {
                        let e = self.nat_eq(a, b);
                        self.not(e)
                    }
                    CmpOp::Le => self.le(a, b),
                    CmpOp::Ge => self.le(b, a),
                    CmpOp::Lt => {
                        let g = self.le(b, a);
                        self.not(g)
                    }
                    CmpOp::Gt => {
                        let g = self.le(a, b);
                        self.not(g)
                    }
                });
            }
            (Slot::Bool(a), Slot::Bool(b)) => {
                let t = self.fresh("beq");
                self.ffn(vec![part(t, &[(*a, 1), (*b, 1), (live, -1)]), part(t, &[(live, 1), (*a, -1), (*b, -1)])]);
                t
            }
            (Slot::Text(a), Slot::Text(b)) => {
                let parts: Vec<(usize, usize)> =
                    a.iter().filter_map(|(k, ca)| b.get(k).map(|cb| (*ca, *cb))).collect();
                if parts.is_empty() {
                    self.b().nil
                } else {
                    let t = self.fresh("teq");
                    let ps = parts.iter().map(|&(ca, cb)| part(t, &[(ca, 1), (cb, 1), (live, -1)])).collect();
                    self.ffn(ps);
                    t
                }
            }
            _ => return unsupported("comparison of different kinds"),
        };
        Ok(match op {
            CmpOp::Eq => eq,
            CmpOp::Ne => self.not(eq),
            _ => return unsupported("order comparison of non-integers"),
        })
    }

    fn apply(&mut self, f: &str, args: &[Expr]) -> Result<Slot, EmitError> {
        let prog = self.prog;
        let table = prog.table(f).ok_or_else(|| EmitError::Unsupported(format!("no table `{f}`")))?;
        let slots: Vec<Slot> = args.iter().map(|a| self.expr(a)).collect::<Result<_, _>>()?;
        let mut matches = Vec::new();
        for row in &table.rows {
            let mut ind = Vec::new();
            for (p, s) in row.pats.iter().zip(&slots) {
                if let Pat::Is(v) = p {
                    ind.push(self.holds(s, v)?);
                }
            }
            matches.push(self.and(&ind));
        }
        // First match wins.
        let live = self.b().live;
        let mut first = Vec::new();
        for (r, m) in matches.iter().enumerate() {
            if r == 0 {
                first.push(*m);
                continue;
            }
            let mut terms = vec![(*m, 1)];
            terms.extend(matches[..r].iter().map(|&x| (x, -1)));
            first.push(self.relu_into(&format!("{f}#{r}"), &terms));
        }
        let outs: Vec<&Value> = table.rows.iter().map(|r| &r.out).collect();
        Ok(match outs[0] {
            Value::Bool(_) => {
                let t = self.fresh(f);
                let ps: Vec<Part> =
                    outs.iter().zip(&first).filter(|(v, _)| ***v == Value::Bool(true)).map(|(_, m)| part(t, &[(*m, 1)])).collect();
                self.ffn(ps);
                Slot::Bool(t)
            }
            Value::Nat(_) => {
                let mut ps = Vec::new();
                let t = self.fresh(f);
                for (v, m) in outs.iter().zip(&first) {
                    let k = v.as_nat().unwrap_or(0);
                    if k > 0 {
                        let c = self.constant(k);
                        ps.push(part(t, &[(c, 1), (*m, 1), (live, -1)]));
                    }
                }
                self.ffn(ps);
                Slot::Nat(t)
            }
            _ => {
                let mut by_key: BTreeMap<String, Vec<usize>> = BTreeMap::new();
                for (v, m) in outs.iter().zip(&first) {
                    by_key.entry(v.text().unwrap_or_default()).or_default().push(*m);
                }
                let mut out = BTreeMap::new();
                let mut ps = Vec::new();
                for (k, ms) in by_key {
                    let t = self.fresh(&format!("{f}={k}"));
                    ps.extend(ms.iter().map(|m| part(t, &[(*m, 1)])));
                    out.insert(k, t);
                }
                self.ffn(ps);
                Slot::Text(out)
            }
        })
    }

    fn prefix_sum(&mut self, name: &str, k: usize) -> usize {
        let b = self.b();
        let (pos, posv, posi) = (b.pos, b.posv, b.posi);
        let (posq, posiq, half) = (b.posq, b.posiq, b.halfstep);
        // s_i = p_i / (n(i+2)) for the unclipped prefix sum p_i.
        let s = self.fresh(&format!("{name}.mean"));
        self.attn(AttnMask::NonStrict, Vec::new(), vec![(s, k, int(1))]);
        let qk = match self.mode {
            PeMode::B => vec![
                (vec![(s, int(2))], vec![(pos, int(1))]),
                (vec![(posi, int(-1))], vec![(posq.unwrap(), int(1))]),
            ],
            PeMode::C => {
                let m = half.unwrap();
                vec![
                    (vec![(m, int(1))], vec![(posi, int(1))]),
                    (vec![(s, int(-1)), (m, int(-1))], vec![(posiq.unwrap(), int(1))]),
                ]
            }
        };
        let t = self.fresh(name);
        self.attn(AttnMask::None, qk, vec![(t, posv, int(1))]);
        self.gate(t);
        t
    }

    fn attention(&mut self, name: &str, a: &Attention) -> Result<Slot, EmitError> {
        let mask = match a.mask {
            Mask::All => AttnMask::None,
            Mask::Before => AttnMask::Strict,
            Mask::UpTo => AttnMask::NonStrict,
            Mask::After | Mask::From => return unsupported("past masks must be lowered first"),
        };
        let value = self.expr(&a.value)?;
        let dflt = match &a.default {
            Some(d) => self.expr(d)?,
            None => return unsupported("attention without a default"),
        };
        let (qk, probe) = self.score(a)?;
        let b = self.b();
        let (one, default) = (b.one, b.default);
        // Value is [default(j); V(j)]: the flag tells whether the default
        // position won.
        let flag = self.fresh(&format!("{name}.hit0"));
        let mut v = vec![(flag, default, int(1))];
        let coords = |s: &Slot| -> BTreeMap<String, usize> {
            match s {
                Slot::Bool(c) | Slot::Nat(c) => [(String::new(), *c)].into(),
                Slot::Text(m) => m.clone(),
            }
        };
        let (vc, dc) = (coords(&value), coords(&dflt));
        let mut scratch = BTreeMap::new();
        for (k, c) in &vc {
            let s = self.fresh(&format!("{name}.got={k}"));
            v.push((s, *c, int(1)));
            scratch.insert(k.clone(), s);
        }
        let layer = self.attn(mask, qk, v);
        if let Some((l, r)) = probe {
            self.probes.push(Probe { layer, left: l, right: r });
        }
        let keys: BTreeSet<&String> = vc.keys().chain(dc.keys()).collect();
        let mut out = BTreeMap::new();
        let mut parts = Vec::new();
        for k in keys {
            let t = self.fresh(&if k.is_empty() { name.to_string() } else { format!("{name}={k}") });
            if let Some(d) = dc.get(k) {
                parts.push(part(t, &[(*d, 1), (flag, 1), (one, -1)]));
            }
            if let Some(s) = scratch.get(k) {
                parts.push(part(t, &[(*s, 1), (flag, -1), (default, -1)]));
            }
            out.insert(k.clone(), t);
        }
        self.ffn(parts);
        Ok(match (&value, &dflt) {
            (Slot::Bool(_), _) => Slot::Bool(out[""]),
            (Slot::Nat(_), _) => Slot::Nat(out[""]),
            _ => Slot::Text(out),
        })
    }

    /// Bilinear score rows and, for an equality of integers, the coordinates
    /// compared.
    fn score(&mut self, a: &Attention) -> Result<(Vec<(Form, Form)>, Option<(usize, usize)>), EmitError> {
        let rightmost = a.choice == Choice::Rightmost;
        if let Expr::Cmp(CmpOp::Eq, x, y) = &a.score {
            if let (Expr::Read(nx, vx), Expr::Read(ny, vy)) = (&**x, &**y) {
                if vx != vy {
                    let (ni, nj) = if *vx == Var::I { (nx, ny) } else { (ny, nx) };
                    if let (Some(Slot::Nat(ai)), Some(Slot::Nat(bj))) =
                        (self.slots.get(ni).cloned(), self.slots.get(nj).cloned())
                    {
                        return Ok((self.equality_rows(ai, bj, rightmost), Some((ai, bj))));
                    }
                }
            }
        }
        let reads = i_reads(&a.score);
        let mut domains = Vec::new();
        for r in &reads {
            match self.types.get(r).and_then(Ty::values) {
                Some(d) if self.types[r] != Ty::Nat => domains.push(d),
                _ => return unsupported(format!("score reads integer `{r}` at i outside an equality")),
            }
        }
        let b = self.b();
        let (one, live, posv, default) = (b.one, b.live, b.posv, b.default);
        let mut qk = Vec::new();
        for profile in profiles(&domains) {
            let subst: BTreeMap<&str, &Value> = reads.iter().map(String::as_str).zip(profile.iter()).collect();
            let s = a.score.clone().map(&mut |x| match x {
                Expr::Read(n, Var::I) if subst.contains_key(n.as_str()) => Expr::Lit(subst[n.as_str()].clone()),
                other => other,
            });
            let s = fold(self.prog, s);
            let at_j = match s {
                Expr::Lit(Value::Bool(false)) => continue,
                Expr::Lit(Value::Bool(true)) => live,
                s => self.bool_of(&s)?,
            };
            let mut tests = Vec::new();
            for (r, v) in reads.iter().zip(&profile) {
                let s = self.slots[r].clone();
                tests.push(self.holds(&s, v)?);
            }
            let at_i = if tests.is_empty() { one } else { self.and(&tests) };
            qk.push((vec![(at_i, int(1))], vec![(at_j, int(1))]));
        }
        let tie = if rightmost { q(1, 2) } else { q(-1, 4) };
        qk.push((vec![(one, tie)], vec![(posv, int(1))]));
        qk.push((vec![(one, q(3, 4))], vec![(default, int(1))]));
        Ok((qk, None))
    }

    fn equality_rows(&mut self, ai: usize, bj: usize, rightmost: bool) -> Vec<(Form, Form)> {
        let b = self.b();
        let (one, posv, default, corner, invn, invn2, invn4) =
            (b.one, b.posv, b.default, b.corner, b.invn, b.invn2, b.invn4);
        let (posq, posi, posiq) = (b.posq, b.posi, b.posiq);
        match self.mode {
            PeMode::B => {
                let posq = posq.unwrap();
                let sqa = self.lookup1(ai, posq, "sq");
                let sqb = self.lookup1(bj, posq, "sq");
                let tie = if rightmost { q(1, 2) } else { q(-1, 4) };
                vec![
                    (vec![(ai, int(2))], vec![(bj, int(1))]),
                    (vec![(one, int(-1))], vec![(sqb, int(1))]),
                    (vec![(invn2, tie)], vec![(posv, int(1))]),
                    (vec![(sqa, int(1)), (invn2, q(-1, 4))], vec![(default, int(1))]),
                ]
            }
            PeMode::C => {
                let posiq = posiq.unwrap();
                let tb = self.lookup1(bj, posi, "inv");
                let zb = self.lookup1(bj, posiq, "invsq");
                let wa = self.lookup1(ai, posi, "inv");
                let tie = if rightmost { q(1, 40) } else { q(-1, 80) };
                vec![
                    (vec![(invn, int(2))], vec![(tb, int(1))]),
                    (vec![(ai, int(-1)), (invn, int(-2))], vec![(zb, int(1))]),
                    (vec![(invn4, tie)], vec![(posv, int(1))]),
                    (vec![(wa, int(1))], vec![(corner, int(1))]),
                    (vec![(invn4, q(-1, 80))], vec![(default, int(1))]),
                ]
            }
        }
    }

    fn def(&mut self, name: &str, rhs: &Rhs) -> Result<(), EmitError> {
        let slot = match rhs {
            Rhs::Pw(e) => self.expr(e)?,
            Rhs::Sum(e) => {
                let k = self.nat_of(e)?;
                Slot::Nat(self.prefix_sum(name, k))
            }
            Rhs::Attn(a) => self.attention(name, a)?,
        };
        self.slots.insert(name.to_string(), slot);
        Ok(())
    }

    fn finish(mut self, output: Vec<(char, usize)>) -> TransformerSpec {
        self.flush();
        let d = self.layout.len();
        let sparse = |rows: usize, cols: usize, entries: Vec<(usize, usize, Q)>| {
            let mut m = Sparse::new(rows, cols);
            for (r, c, v) in entries {
                m.set(r, c, v);
            }
            m
        };
        let layers = self
            .steps
            .into_iter()
            .map(|s| match s {
                Step::Ffn(parts) => {
                    let h = parts.len();
                    let mut w1 = Vec::new();
                    let mut w2 = Vec::new();
                    let mut b1 = Vec::with_capacity(h);
                    for (u, p) in parts.into_iter().enumerate() {
                        w1.extend(p.terms.into_iter().map(|(c, k)| (u, c, k)));
                        w2.push((p.dst, u, p.coef));
                        b1.push(p.bias);
                    }
                    Layer::Ffn { w1: sparse(h, d, w1), b1, w2: sparse(d, h, w2), b2: vec![Q::zero(); d] }
                }
                Step::Attn { mask, qk, v } => {
                    let m = qk.len();
                    let mut qe = Vec::new();
                    let mut ke = Vec::new();
                    for (r, (qf, kf)) in qk.into_iter().enumerate() {
                        qe.extend(qf.into_iter().map(|(c, x)| (r, c, x)));
                        ke.extend(kf.into_iter().map(|(c, x)| (r, c, x)));
                    }
                    Layer::Attn { q: sparse(m, d, qe), k: sparse(m, d, ke), v: sparse(d, d, v), mask }
                }
            })
            .collect();
        TransformerSpec { mode: self.mode, layout: self.layout, layers, input: self.input, output, probes: self.probes }
    }
}

/// Compile a typed program whose output cells each hold one symbol. Past
/// masks and compound i-only score terms are rewritten away first.
pub fn compile(tp: &TypedProgram, mode: PeMode) -> Result<TransformerSpec, EmitError> {
    if let Io::Packed(_) = tp.program.io {
        return unsupported("packed outputs have no one-symbol-per-position form");
    }
    let tp = hoist_scores(&lower_past_masks(tp)?)?;
    let p = &tp.program;
    let mut e = Emitter {
        prog: p,
        types: &tp.types,
        mode,
        layout: Vec::new(),
        steps: Vec::new(),
        pending: Vec::new(),
        written: BTreeSet::new(),
        probes: Vec::new(),
        slots: BTreeMap::new(),
        consts: BTreeMap::new(),
        memo: Vec::new(),
        b: None,
        input: Vec::new(),
    };
    let mut in_block = BTreeMap::new();
    for a in p.in_alphabet() {
        let c = e.fresh(&format!("in={a}"));
        e.input.push((a, c));
        in_block.insert(a.to_string(), c);
    }
    e.prelude();
    e.slots.insert("in".into(), Slot::Text(in_block));
    let posv = e.b().posv;
    e.slots.insert("pos".into(), Slot::Nat(posv));
    for d in &p.defs {
        e.def(&d.name, &d.rhs)?;
    }
    let Some(Slot::Text(out)) = e.slots.get("out").cloned() else {
        return unsupported("`out` must hold symbols");
    };
    let mut output = Vec::new();
    for (k, c) in out {
        let mut cs = k.chars();
        match (cs.next(), cs.next()) {
            (Some(ch), None) => output.push((ch, c)),
            _ => return unsupported(format!("output cell `{k}` is not one symbol")),
        }
    }
    Ok(e.finish(output))
}

/// Run a compiled program on `w` with `n` positions and read off its output
/// the way the interpreter does.
pub fn run_compiled(t: &TransformerSpec, io: Io, w: &str, n: usize) -> Result<String, crate::aha::AhaError> {
    if n == 0 {
        return Ok(String::new());
    }
    let u = crate::aha::run(t, &crate::aha::encode_input(t, w, n)?)?;
    read_off(t, io, &u)
}

/// [`run_compiled`] that also reports the least equality-score margin.
pub fn run_compiled_with_margins(
    t: &TransformerSpec,
    io: Io,
    w: &str,
    n: usize,
) -> Result<(String, Option<Q>), crate::aha::AhaError> {
    if n == 0 {
        return Ok((String::new(), None));
    }
    let (u, margin) = crate::aha::run_with_margins(t, &crate::aha::encode_input(t, w, n)?)?;
    Ok((read_off(t, io, &u)?, margin))
}

fn read_off(t: &TransformerSpec, io: Io, u: &crate::aha::ActivationSeq) -> Result<String, crate::aha::AhaError> {
    let row: String = crate::aha::decode_row(t, u)?.into_iter().collect();
    Ok(if io == Io::Padded { row.trim_end_matches(PAD).to_string() } else { row })
}

#[cfg(test)]
mod tests;
