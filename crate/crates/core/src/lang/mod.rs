//! Surface language: values, types, the AST and its concrete syntax.

mod desugar;
mod minlen;
mod parse;
mod pretty;
mod typecheck;

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

pub use desugar::desugar;
pub use minlen::MinLen;
pub use parse::{parse, ParseError, ParseErrorKind};
pub use pretty::pretty;
pub use typecheck::{typecheck, Reason, TypeError, TypedProgram};

/// Padding symbol for the padded convention.
pub const PAD: char = '␣';

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dialect {
    Brasp,
    BraspPos,
    Srasp,
}

impl Dialect {
    pub fn keyword(self) -> &'static str {
        match self {
            Dialect::Brasp => "brasp",
            Dialect::BraspPos => "brasp_pos",
            Dialect::Srasp => "srasp",
        }
    }

    pub fn has_nat(self) -> bool {
        !matches!(self, Dialect::Brasp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Io {
    LengthPreserving,
    Packed(usize),
    Padded,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Sym(char),
    Nat(usize),
    Str(String),
}

impl Value {
    /// Equality that identifies a symbol with the one-letter string.
    pub fn same(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Sym(c), Value::Str(s)) | (Value::Str(s), Value::Sym(c)) => {
                let mut it = s.chars();
                it.next() == Some(*c) && it.next().is_none()
            }
            _ => self == other,
        }
    }

    /// String view of a symbol or string value.
    pub fn text(&self) -> Option<String> {
        match self {
            Value::Sym(c) => Some(c.to_string()),
            Value::Str(s) => Some(s.clone()),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_nat(&self) -> Option<usize> {
        match self {
            Value::Nat(k) => Some(*k),
            _ => None,
        }
    }
}

/// Cell rendering used by traces: booleans as 0/1, the empty string as ε.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => f.write_str(if *b { "1" } else { "0" }),
            Value::Sym(c) => write!(f, "{c}"),
            Value::Nat(k) => write!(f, "{k}"),
            Value::Str(s) if s.is_empty() => f.write_str("ε"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Bool,
    Sym(BTreeSet<char>),
    Nat,
    /// Strings over the set with length at most the bound.
    Str(BTreeSet<char>, usize),
}

impl Ty {
    /// The value an omitted default stands for.
    pub fn dead_value(&self) -> Value {
        match self {
            Ty::Bool => Value::Bool(false),
            Ty::Sym(s) => Value::Sym(s.iter().next().copied().unwrap_or(PAD)),
            Ty::Nat => Value::Nat(0),
            Ty::Str(..) => Value::Str(String::new()),
        }
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self, Ty::Nat)
    }

    pub fn is_textual(&self) -> bool {
        matches!(self, Ty::Sym(_) | Ty::Str(..))
    }

    pub fn chars(&self) -> BTreeSet<char> {
        match self {
            Ty::Sym(s) | Ty::Str(s, _) => s.clone(),
            _ => BTreeSet::new(),
        }
    }

    /// Every value of a finite type, strings shortest first.
    pub fn values(&self) -> Option<Vec<Value>> {
        Some(match self {
            Ty::Bool => alloc::vec![Value::Bool(false), Value::Bool(true)],
            Ty::Sym(s) => s.iter().map(|c| Value::Sym(*c)).collect(),
            Ty::Nat => return None,
            Ty::Str(s, k) => {
                let mut all = alloc::vec![String::new()];
                let mut layer = all.clone();
                for _ in 0..*k {
                    layer = layer
                        .iter()
                        .flat_map(|w| s.iter().map(move |c| alloc::format!("{w}{c}")))
                        .collect();
                    all.extend(layer.iter().cloned());
                }
                all.into_iter().map(Value::Str).collect()
            }
        })
    }

    /// Length bound of a textual type; a symbol counts as one letter.
    pub fn bound(&self) -> usize {
        match self {
            Ty::Str(_, k) => *k,
            _ => 1,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => f.write_str("bool"),
            Ty::Nat => f.write_str("nat"),
            Ty::Sym(s) => write!(f, "sym{{{}}}", s.iter().collect::<String>()),
            Ty::Str(s, k) => write!(f, "str{{{}}}^{k}", s.iter().collect::<String>()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    I,
    J,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::I => "i",
            Var::J => "j",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Prev,
    Next,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds<T: Ord>(self, a: T, b: T) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Lit(Value),
    Read(String, Var),
    /// `P(i-1)` / `P(i+1)`; removed by desugaring.
    Shift(String, Var, Step),
    /// `v(e)` with a nat index; removed by desugaring.
    Lookup(String, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Concat(Box<Expr>, Box<Expr>),
    /// `then if cond else otherwise`
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Apply(String, Vec<Expr>),
}

// Small constructors used by the program transformations.
impl Expr {
    pub fn tt() -> Expr {
        Expr::Lit(Value::Bool(true))
    }
    pub fn ff() -> Expr {
        Expr::Lit(Value::Bool(false))
    }
    pub fn nat(k: usize) -> Expr {
        Expr::Lit(Value::Nat(k))
    }
    pub fn sym(c: char) -> Expr {
        Expr::Lit(Value::Sym(c))
    }
    pub fn text(s: &str) -> Expr {
        Expr::Lit(Value::Str(s.to_string()))
    }
    pub fn at_i(name: &str) -> Expr {
        Expr::Read(name.to_string(), Var::I)
    }
    pub fn at_j(name: &str) -> Expr {
        Expr::Read(name.to_string(), Var::J)
    }
    pub fn not(e: Expr) -> Expr {
        Expr::Not(e.into())
    }
    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(a.into(), b.into())
    }
    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(a.into(), b.into())
    }
    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, a.into(), b.into())
    }
    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::cmp(CmpOp::Eq, a, b)
    }
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Arith(ArithOp::Add, a.into(), b.into())
    }
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Arith(ArithOp::Sub, a.into(), b.into())
    }
    pub fn concat(a: Expr, b: Expr) -> Expr {
        Expr::Concat(a.into(), b.into())
    }
    pub fn cond(then: Expr, c: Expr, otherwise: Expr) -> Expr {
        Expr::If(then.into(), c.into(), otherwise.into())
    }
    pub fn apply(f: &str, args: Vec<Expr>) -> Expr {
        Expr::Apply(f.to_string(), args)
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match e {
            Expr::Read(_, v) | Expr::Shift(_, v, _) => {
                out.insert(*v);
            }
            _ => {}
        });
        out
    }

    /// Vector names read anywhere in the expression.
    pub fn reads(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match e {
            Expr::Read(n, _) | Expr::Shift(n, ..) | Expr::Lookup(n, _) => {
                out.insert(n.clone());
            }
            _ => {}
        });
        out
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Lit(_) | Expr::Read(..) | Expr::Shift(..) => Vec::new(),
            Expr::Lookup(_, e) | Expr::Not(e) => alloc::vec![&**e],
            Expr::And(a, b)
            | Expr::Or(a, b)
            | Expr::Cmp(_, a, b)
            | Expr::Arith(_, a, b)
            | Expr::Concat(a, b) => alloc::vec![&**a, &**b],
            Expr::If(a, b, c) => alloc::vec![&**a, &**b, &**c],
            Expr::Apply(_, args) => args.iter().collect(),
        }
    }

    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Rebuild bottom-up, applying `f` to every node after its children.
    pub fn map(self, f: &mut impl FnMut(Expr) -> Expr) -> Expr {
        let e = match self {
            Expr::Lookup(n, e) => Expr::Lookup(n, e.map(f).into()),
            Expr::Not(e) => Expr::Not(e.map(f).into()),
            Expr::And(a, b) => Expr::And(a.map(f).into(), b.map(f).into()),
            Expr::Or(a, b) => Expr::Or(a.map(f).into(), b.map(f).into()),
            Expr::Cmp(op, a, b) => Expr::Cmp(op, a.map(f).into(), b.map(f).into()),
            Expr::Arith(op, a, b) => Expr::Arith(op, a.map(f).into(), b.map(f).into()),
            Expr::Concat(a, b) => Expr::Concat(a.map(f).into(), b.map(f).into()),
            Expr::If(a, b, c) => Expr::If(a.map(f).into(), b.map(f).into(), c.map(f).into()),
            Expr::Apply(n, args) => Expr::Apply(n, args.into_iter().map(|a| a.map(f)).collect()),
            leaf => leaf,
        };
        f(e)
    }

    /// Rename vector reads according to `table`.
    pub fn rename(self, table: &BTreeMap<String, String>) -> Expr {
        self.map(&mut |e| match e {
            Expr::Read(n, v) => Expr::Read(table.get(&n).cloned().unwrap_or(n), v),
            Expr::Shift(n, v, s) => Expr::Shift(table.get(&n).cloned().unwrap_or(n), v, s),
            Expr::Lookup(n, e) => Expr::Lookup(table.get(&n).cloned().unwrap_or(n), e),
            other => other,
        })
    }

    /// Replace every position variable by `to`.
    pub fn with_var(self, to: Var) -> Expr {
        self.map(&mut |e| match e {
            Expr::Read(n, _) => Expr::Read(n, to),
            Expr::Shift(n, _, s) => Expr::Shift(n, to, s),
            other => other,
        })
    }

    pub fn has_sugar(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Shift(..) | Expr::Lookup(..)) {
                found = true;
            }
        });
        found
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Leftmost,
    Rightmost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mask {
    All,
    Before,
    UpTo,
    After,
    From,
}

impl Mask {
    pub fn allows(self, i: usize, j: usize) -> bool {
        match self {
            Mask::All => true,
            Mask::Before => j < i,
            Mask::UpTo => j <= i,
            Mask::After => j > i,
            Mask::From => j >= i,
        }
    }

    pub fn syntax(self) -> &'static str {
        match self {
            Mask::All => "true",
            Mask::Before => "j<i",
            Mask::UpTo => "j<=i",
            Mask::After => "j>i",
            Mask::From => "j>=i",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attention {
    pub choice: Choice,
    pub mask: Mask,
    pub score: Expr,
    pub value: Expr,
    /// `None` until desugaring fills in the dead value.
    pub default: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rhs {
    Pw(Expr),
    Attn(Attention),
    Sum(Expr),
}

impl Rhs {
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Rhs::Pw(e) | Rhs::Sum(e) => alloc::vec![e],
            Rhs::Attn(a) => {
                let mut v = alloc::vec![&a.score, &a.value];
                if let Some(d) = &a.default {
                    v.push(d);
                }
                v
            }
        }
    }

    pub fn map_exprs(self, f: &mut impl FnMut(Expr) -> Expr) -> Rhs {
        match self {
            Rhs::Pw(e) => Rhs::Pw(f(e)),
            Rhs::Sum(e) => Rhs::Sum(f(e)),
            Rhs::Attn(a) => Rhs::Attn(Attention {
                choice: a.choice,
                mask: a.mask,
                score: f(a.score),
                value: f(a.value),
                default: a.default.map(f),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Def {
    pub name: String,
    pub rhs: Rhs,
    /// The default was omitted in the source and stands for a dead value.
    pub implicit_default: bool,
}

impl Def {
    pub fn pw(name: &str, e: Expr) -> Def {
        Def {
            name: name.to_string(),
            rhs: Rhs::Pw(e),
            implicit_default: false,
        }
    }

    pub fn attn(
        name: &str,
        choice: Choice,
        mask: Mask,
        score: Expr,
        value: Expr,
        default: Expr,
    ) -> Def {
        Def {
            name: name.to_string(),
            rhs: Rhs::Attn(Attention {
                choice,
                mask,
                score,
                value,
                default: Some(default),
            }),
            implicit_default: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pat {
    Any,
    Is(Value),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub pats: Vec<Pat>,
    pub out: Value,
}

/// A finite function given by rows; the first matching row wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub rows: Vec<TableRow>,
}

impl Table {
    pub fn arity(&self) -> usize {
        self.rows.first().map_or(0, |r| r.pats.len())
    }

    pub fn apply(&self, args: &[Value]) -> Option<&Value> {
        self.rows
            .iter()
            .find(|r| {
                r.pats.iter().zip(args).all(|(p, a)| match p {
                    Pat::Any => true,
                    Pat::Is(v) => v.same(a),
                })
            })
            .map(|r| &r.out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub dialect: Dialect,
    pub io: Io,
    pub sigma: Vec<char>,
    pub gamma: Vec<char>,
    pub minlen: Option<MinLen>,
    pub tables: Vec<Table>,
    pub defs: Vec<Def>,
}

impl Program {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn def(&self, name: &str) -> Option<&Def> {
        self.defs.iter().find(|d| d.name == name)
    }

    /// Names of the predefined rows for this dialect.
    pub fn builtins(&self) -> &'static [&'static str] {
        if self.dialect.has_nat() {
            &["in", "pos"]
        } else {
            &["in"]
        }
    }

    /// Every vector name, builtin or defined.
    pub fn names(&self) -> BTreeSet<String> {
        let mut s: BTreeSet<String> = self.builtins().iter().map(|b| b.to_string()).collect();
        s.extend(self.defs.iter().map(|d| d.name.clone()));
        s
    }

    /// Input alphabet as seen in the `in` row.
    pub fn in_alphabet(&self) -> BTreeSet<char> {
        let mut s: BTreeSet<char> = self.sigma.iter().copied().collect();
        if self.io == Io::Padded {
            s.insert(PAD);
        }
        s
    }

    /// Rename a vector everywhere: its definition and every read of it.
    pub fn rename_vector(&mut self, from: &str, to: &str) {
        let table: BTreeMap<String, String> = [(from.to_string(), to.to_string())].into();
        for d in &mut self.defs {
            if d.name == from {
                d.name = to.to_string();
            }
            d.rhs = core::mem::replace(&mut d.rhs, Rhs::Pw(Expr::tt())).map_exprs(&mut |e| e.rename(&table));
        }
    }

    /// `name`, or `name` with the smallest numeric suffix that is unused.
    pub fn fresh(&self, name: &str) -> String {
        let names = self.names();
        let tables: BTreeSet<&str> = self.tables.iter().map(|t| t.name.as_str()).collect();
        let free = |c: &str| !names.contains(c) && !tables.contains(c);
        if free(name) {
            return name.to_string();
        }
        (1..)
            .map(|k| alloc::format!("{name}{k}"))
            .find(|c| free(c))
            .unwrap()
    }
}

/// Desugar then typecheck.
pub fn check(p: &Program) -> Result<TypedProgram, TypeError> {
    typecheck(&desugar(p)?)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Parse, desugar and typecheck source text.
pub fn load(src: &str) -> Result<TypedProgram, LoadError> {
    Ok(check(&parse(src)?)?)
}

pub fn pretty_expr(e: &Expr) -> String {
    pretty::expr(e)
}

pub fn pretty_def(d: &Def) -> String {
    pretty::def(d)
}

/// A value in source syntax.
pub fn pretty_value(v: &Value) -> String {
    pretty::literal(v)
}
