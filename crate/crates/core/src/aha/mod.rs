//! Exact-arithmetic runtime for masked average-hard-attention encoders.
//!
//! Positions run from -1 (the default position) to n-1; row 0 of an
//! activation sequence is position -1. Every layer is residual.

mod text;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::lang::PAD;

pub use text::{read_spec, write_spec};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(k: i64) -> Q {
    Q::from_integer(BigInt::from(k))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AhaError {
    #[error("layer {layer} expects width {want}, activations have width {got}")]
    DimensionMismatch { layer: usize, want: usize, got: usize },
    #[error("position {position}: output block is not one-hot ({why})")]
    Decode { position: usize, why: String },
    #[error("input symbol `{0}` has no coordinate")]
    Input(char),
    #[error("input of length {len} does not fit in {n} positions")]
    Length { len: usize, n: usize },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeMode {
    /// i/n, (i/n)², 1/(i+2), plus the default and first-position flags.
    B,
    /// i/n and 1/(i+2)² only.
    C,
}

impl PeMode {
    pub fn coords(self) -> &'static [&'static str] {
        match self {
            PeMode::B => &["pos", "posq", "posi", "default", "zero"],
            PeMode::C => &["pos", "posiq"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PeMode::B => "B",
            PeMode::C => "C",
        }
    }
}

/// Value of a position-encoding coordinate at position `i` (-1 allowed).
pub fn pe_value(name: &str, i: i64, n: usize) -> Option<Q> {
    let n = n as i64;
    Some(match name {
        "pos" => q(i, n),
        "posq" => q(i * i, n * n),
        "posi" => q(1, i + 2),
        "posiq" => q(1, (i + 2) * (i + 2)),
        "default" => int((i == -1) as i64),
        "zero" => int((i == 0) as i64),
        _ => return None,
    })
}

/// A sparse matrix, applied as `y = M x`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sparse {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, Q)>,
}

impl Sparse {
    pub fn new(rows: usize, cols: usize) -> Sparse {
        Sparse { rows, cols, entries: Vec::new() }
    }

    pub fn set(&mut self, r: usize, c: usize, v: Q) {
        if !v.is_zero() {
            self.entries.push((r, c, v));
        }
    }

    pub fn apply(&self, x: &[Q]) -> Vec<Q> {
        let mut y = vec![Q::zero(); self.rows];
        for (r, c, v) in &self.entries {
            if !x[*c].is_zero() {
                y[*r] += v * &x[*c];
            }
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttnMask {
    None,
    /// j < i
    Strict,
    /// j <= i
    NonStrict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Layer {
    /// u + W2 relu(W1 u + b1) + b2
    Ffn { w1: Sparse, b1: Vec<Q>, w2: Sparse, b2: Vec<Q> },
    /// u + mean of V u_j over the j maximizing <Q u_i, K u_j>
    Attn { q: Sparse, k: Sparse, v: Sparse, mask: AttnMask },
}

impl Layer {
    fn width(&self) -> usize {
        match self {
            Layer::Ffn { w1, .. } => w1.cols,
            Layer::Attn { q, .. } => q.cols,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationSeq {
    pub n: usize,
    /// Row 0 is position -1.
    pub rows: Vec<Vec<Q>>,
}

impl ActivationSeq {
    pub fn zeros(n: usize, d: usize) -> ActivationSeq {
        ActivationSeq { n, rows: vec![vec![Q::zero(); d]; n + 1] }
    }

    pub fn at(&self, i: i64) -> &[Q] {
        &self.rows[(i + 1) as usize]
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// An equality-attention layer, recorded so its score margins can be
/// checked: position i matches j when `u_i[left] = u_j[right]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probe {
    pub layer: usize,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformerSpec {
    pub mode: PeMode,
    pub layout: Vec<String>,
    pub layers: Vec<Layer>,
    /// Input symbol and its one-hot coordinate, blank included.
    pub input: Vec<(char, usize)>,
    pub output: Vec<(char, usize)>,
    pub probes: Vec<Probe>,
}

/// The position encoding alone, one coordinate per name in `mode.coords()`.
pub fn build_pe(n: usize, mode: PeMode) -> ActivationSeq {
    let names = mode.coords();
    let mut u = ActivationSeq::zeros(n, names.len());
    for (r, row) in u.rows.iter_mut().enumerate() {
        for (c, name) in names.iter().enumerate() {
            row[c] = pe_value(name, r as i64 - 1, n).expect("known coordinate");
        }
    }
    u
}

fn relu(x: Q) -> Q {
    if x.is_positive() {
        x
    } else {
        Q::zero()
    }
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    let mut s = Q::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            s += x * y;
        }
    }
    s
}

fn allowed(mask: AttnMask, i: i64, n: usize) -> core::ops::Range<i64> {
    match mask {
        AttnMask::None => -1..n as i64,
        AttnMask::Strict => -1..i,
        AttnMask::NonStrict => -1..i + 1,
    }
}

/// Scores of an attention layer, indexed by `[i + 1][j + 1]`; masked pairs
/// are `None`.
pub fn attention_scores(l: &Layer, u: &ActivationSeq) -> Vec<Vec<Option<Q>>> {
    let Layer::Attn { q, k, mask, .. } = l else {
        return Vec::new();
    };
    let qs: Vec<Vec<Q>> = u.rows.iter().map(|r| q.apply(r)).collect();
    let ks: Vec<Vec<Q>> = u.rows.iter().map(|r| k.apply(r)).collect();
    let n = u.n;
    (-1..n as i64)
        .map(|i| {
            let ok = allowed(*mask, i, n);
            (-1..n as i64)
                .map(|j| ok.contains(&j).then(|| dot(&qs[(i + 1) as usize], &ks[(j + 1) as usize])))
                .collect()
        })
        .collect()
}

pub fn apply_layer(l: &Layer, u: &ActivationSeq) -> Result<ActivationSeq, AhaError> {
    let mut out = u.clone();
    apply_indexed(0, l, &mut out)?;
    Ok(out)
}

fn apply_indexed(index: usize, l: &Layer, u: &mut ActivationSeq) -> Result<(), AhaError> {
    if l.width() != u.width() {
        return Err(AhaError::DimensionMismatch { layer: index, want: l.width(), got: u.width() });
    }
    match l {
        Layer::Ffn { w1, b1, w2, b2 } => {
            for row in u.rows.iter_mut() {
                let hidden: Vec<Q> = w1.apply(row).into_iter().zip(b1).map(|(h, b)| relu(h + b)).collect();
                let delta = w2.apply(&hidden);
                for (c, (x, b)) in delta.into_iter().zip(b2).enumerate() {
                    let add = x + b;
                    if !add.is_zero() {
                        row[c] += add;
                    }
                }
            }
        }
        Layer::Attn { v, .. } => {
            let scores = attention_scores(l, u);
            let vs: Vec<Vec<Q>> = u.rows.iter().map(|r| v.apply(r)).collect();
            let mut written: Vec<usize> = v.entries.iter().map(|e| e.0).collect();
            written.sort_unstable();
            written.dedup();
            // Every average is taken from the old rows before any is added.
            let mut deltas: Vec<(usize, usize, Q)> = Vec::new();
            for (ri, row) in scores.iter().enumerate() {
                let live: Vec<(usize, &Q)> =
                    row.iter().enumerate().filter_map(|(j, s)| s.as_ref().map(|s| (j, s))).collect();
                let Some(best) = live.iter().map(|(_, s)| *s).max().cloned() else {
                    continue;
                };
                let winners: Vec<usize> = live.iter().filter(|(_, s)| **s == best).map(|(j, _)| *j).collect();
                let count = int(winners.len() as i64);
                for &c in &written {
                    let mut sum = Q::zero();
                    for &j in &winners {
                        if !vs[j][c].is_zero() {
                            sum += &vs[j][c];
                        }
                    }
                    if !sum.is_zero() {
                        deltas.push((ri, c, sum / &count));
                    }
                }
            }
            for (r, c, x) in deltas {
                u.rows[r][c] += x;
            }
        }
    }
    Ok(())
}

pub fn run(t: &TransformerSpec, u0: &ActivationSeq) -> Result<ActivationSeq, AhaError> {
    run_observed(t, u0, |_, _| {})
}

/// Run, showing `seen` each layer's input before applying it.
pub fn run_observed(
    t: &TransformerSpec,
    u0: &ActivationSeq,
    mut seen: impl FnMut(usize, &ActivationSeq),
) -> Result<ActivationSeq, AhaError> {
    let mut u = u0.clone();
    for (k, l) in t.layers.iter().enumerate() {
        seen(k, &u);
        apply_indexed(k, l, &mut u)?;
    }
    Ok(u)
}

/// Input one-hots for `w` padded with blanks to `n` (at least 1), plus the mode's
/// position encoding; every other coordinate starts at zero.
pub fn encode_input(t: &TransformerSpec, w: &str, n: usize) -> Result<ActivationSeq, AhaError> {
    let len = w.chars().count();
    if len > n || n == 0 {
        return Err(AhaError::Length { len, n });
    }
    let mut u = ActivationSeq::zeros(n, t.layout.len());
    let pe: Vec<(usize, &str)> = t
        .layout
        .iter()
        .enumerate()
        .filter(|(_, name)| t.mode.coords().contains(&name.as_str()))
        .map(|(c, name)| (c, name.as_str()))
        .collect();
    let symbols = w.chars().chain(core::iter::repeat(PAD)).take(n);
    for (i, a) in symbols.enumerate() {
        let c = t.input.iter().find(|(s, _)| *s == a).ok_or(AhaError::Input(a))?.1;
        u.rows[i + 1][c] = Q::one();
    }
    for (r, row) in u.rows.iter_mut().enumerate() {
        for &(c, name) in &pe {
            row[c] = pe_value(name, r as i64 - 1, n).expect("known coordinate");
        }
    }
    Ok(u)
}

/// The output symbol at every position 0..n-1.
pub fn decode_row(t: &TransformerSpec, u: &ActivationSeq) -> Result<Vec<char>, AhaError> {
    let mut out = Vec::new();
    for i in 0..u.n {
        let row = u.at(i as i64);
        let mut hit = None;
        for (s, c) in &t.output {
            let x = &row[*c];
            if x.is_one() {
                if hit.is_some() {
                    return Err(AhaError::Decode { position: i, why: "two symbols set".into() });
                }
                hit = Some(*s);
            } else if !x.is_zero() {
                return Err(AhaError::Decode { position: i, why: format!("coordinate holds {x}") });
            }
        }
        out.push(hit.ok_or_else(|| AhaError::Decode { position: i, why: "no symbol set".into() })?);
    }
    Ok(out)
}

/// The output string with trailing blanks removed.
pub fn decode_output(t: &TransformerSpec, u: &ActivationSeq) -> Result<String, AhaError> {
    let row = decode_row(t, u)?;
    let s: String = row.into_iter().collect();
    Ok(s.trim_end_matches(PAD).to_string())
}

/// Smallest gap, over the probed equality layers and all positions, between
/// the scores of matching and non-matching positions; the default position
/// must fall strictly between them. `None` when there was nothing to compare.
pub fn probe_margins(t: &TransformerSpec, u0: &ActivationSeq) -> Result<Option<Q>, AhaError> {
    Ok(run_with_margins(t, u0)?.1)
}

/// The final activations together with the margins of [`probe_margins`],
/// from a single pass.
pub fn run_with_margins(t: &TransformerSpec, u0: &ActivationSeq) -> Result<(ActivationSeq, Option<Q>), AhaError> {
    let mut least: Option<Q> = None;
    let mut take = |m: Q| {
        if least.as_ref().map_or(true, |l| m < *l) {
            least = Some(m);
        }
    };
    let u = run_observed(t, u0, |k, u| {
        for p in t.probes.iter().filter(|p| p.layer == k) {
            let scores = attention_scores(&t.layers[k], u);
            for i in 0..u.n as i64 {
                let row = &scores[(i + 1) as usize];
                let key = &u.at(i)[p.left];
                let mut hit: Option<Q> = None;
                let mut miss: Option<Q> = None;
                for j in 0..u.n as i64 {
                    let Some(s) = &row[(j + 1) as usize] else { continue };
                    if u.at(j)[p.right] == *key {
                        hit = Some(hit.map_or(s.clone(), |h: Q| h.min(s.clone())));
                    } else {
                        miss = Some(miss.map_or(s.clone(), |m: Q| m.max(s.clone())));
                    }
                }
                let dflt = row[0].clone();
                if let (Some(h), Some(m)) = (&hit, &miss) {
                    take(h - m);
                }
                if let Some(d) = dflt {
                    if let Some(h) = &hit {
                        take(h - &d);
                    }
                    if let Some(m) = &miss {
                        take(&d - m);
                    }
                }
            }
        }
    })?;
    Ok((u, least))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(layout: &[&str], layers: Vec<Layer>) -> TransformerSpec {
        TransformerSpec {
            mode: PeMode::B,
            layout: layout.iter().map(|s| s.to_string()).collect(),
            layers,
            input: Vec::new(),
            output: Vec::new(),
            probes: Vec::new(),
        }
    }

    #[test]
    fn mode_b_encoding() {
        let u = build_pe(4, PeMode::B);
        assert_eq!(u.at(0), &[q(0, 1), q(0, 1), q(1, 2), q(0, 1), q(1, 1)]);
        assert_eq!(u.at(-1)[0], q(-1, 4));
        assert_eq!(u.at(-1)[3], int(1));
        let c = build_pe(4, PeMode::C);
        assert_eq!(c.at(2)[1], q(1, 16));
    }

    #[test]
    fn zero_ffn_is_identity() {
        let u = build_pe(3, PeMode::B);
        let l = Layer::Ffn { w1: Sparse::new(2, 5), b1: vec![Q::zero(); 2], w2: Sparse::new(5, 2), b2: vec![Q::zero(); 5] };
        assert_eq!(apply_layer(&l, &u).unwrap(), u);
        assert_eq!(run(&spec(&[], Vec::new()), &u).unwrap(), u);
    }

    #[test]
    fn uniform_prefix_average() {
        // Width 6: the PE plus one scratch coordinate receiving the mean of
        // `zero` over positions -1..i.
        let mut u = ActivationSeq::zeros(5, 6);
        let pe = build_pe(5, PeMode::B);
        for (r, row) in u.rows.iter_mut().enumerate() {
            row[..5].clone_from_slice(&pe.rows[r]);
        }
        let mut v = Sparse::new(6, 6);
        v.set(5, 4, int(1));
        let l = Layer::Attn { q: Sparse::new(1, 6), k: Sparse::new(1, 6), v, mask: AttnMask::NonStrict };
        let out = apply_layer(&l, &u).unwrap();
        assert_eq!(out.at(-1)[5], int(0));
        for i in 0..5i64 {
            assert_eq!(out.at(i)[5], q(1, i + 2));
        }
    }

    #[test]
    fn strict_mask_leaves_default_position() {
        let u = build_pe(3, PeMode::B);
        let mut v = Sparse::new(5, 5);
        v.set(4, 0, int(7));
        let l = Layer::Attn { q: Sparse::new(1, 5), k: Sparse::new(1, 5), v, mask: AttnMask::Strict };
        let out = apply_layer(&l, &u).unwrap();
        assert_eq!(out.at(-1), u.at(-1));
    }

    #[test]
    fn quadratic_lookup() {
        // Coordinate 5 holds k_i/n with k_i = (i + 2) mod n; coordinate 7
        // receives u_{k_i}[6] on top of its initial one.
        let n = 6;
        let mut u = ActivationSeq::zeros(n, 8);
        let pe = build_pe(n, PeMode::B);
        for (r, row) in u.rows.iter_mut().enumerate() {
            row[..5].clone_from_slice(&pe.rows[r]);
            let i = r as i64 - 1;
            if i >= 0 {
                row[5] = q((i + 2) % n as i64, n as i64);
                row[6] = int(10 + i);
            }
        }
        let mut qm = Sparse::new(2, 8);
        let mut km = Sparse::new(2, 8);
        qm.set(0, 5, int(2));
        km.set(0, 0, int(1));
        // Coordinate 7 starts at one, standing in for a constant.
        for row in u.rows.iter_mut() {
            row[7] = int(1);
        }
        qm.set(1, 7, int(-1));
        km.set(1, 1, int(1));
        let mut v = Sparse::new(8, 8);
        v.set(7, 6, int(1));
        let l = Layer::Attn { q: qm, k: km, v, mask: AttnMask::None };
        let out = apply_layer(&l, &u).unwrap();
        for i in 0..n as i64 {
            let k = (i + 2) % n as i64;
            assert_eq!(out.at(i)[7], int(1) + int(10 + k));
        }
    }

    #[test]
    fn width_is_checked() {
        let u = build_pe(2, PeMode::C);
        let l = Layer::Ffn { w1: Sparse::new(1, 5), b1: vec![Q::zero()], w2: Sparse::new(5, 1), b2: vec![Q::zero(); 5] };
        assert!(matches!(apply_layer(&l, &u), Err(AhaError::DimensionMismatch { .. })));
    }

    /// 2qx - x² peaks at x = q with a gap of at least one.
    #[test]
    fn quadratic_maximization() {
        for qv in 0..=64i64 {
            let f = |x: i64| 2 * qv * x - x * x;
            for x in 0..=64i64 {
                if x != qv {
                    assert!(f(qv) - f(x) >= 1, "q={qv} x={x}");
                }
            }
        }
    }

    /// 2/(n(x+2)) - (q+2)/(n(x+2)²) peaks uniquely at x = q over x >= -1.
    #[test]
    fn inverse_square_maximization() {
        for n in [8i64, 64] {
            for qv in -1..=32i64 {
                let f = |x: i64| q(2, n * (x + 2)) - q(qv + 2, n * (x + 2) * (x + 2));
                for x in -1..=32i64 {
                    if x != qv {
                        assert!(f(qv) > f(x), "n={n} q={qv} x={x}");
                    }
                }
            }
        }
    }

    #[test]
    fn neighbour_difference_identity() {
        for i in 0..=64i64 {
            let lhs = q(1, (i + 2) * (i + 2) - 1);
            let rhs = q(1, 2) * (q(1, i + 1) - q(1, i + 3));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn decode_rejects_fractions() {
        let mut t = spec(&["a", "b"], Vec::new());
        t.output = vec![('a', 0), ('b', 1)];
        let mut u = ActivationSeq::zeros(2, 2);
        u.rows[1][0] = int(1);
        u.rows[2][1] = q(1, 2);
        assert!(matches!(decode_row(&t, &u), Err(AhaError::Decode { position: 1, .. })));
        u.rows[2][1] = int(1);
        assert_eq!(decode_output(&t, &u).unwrap(), "ab");
    }
}
