//! Text interchange format for compiled transformers.
//!
//! ```text
//! transformer
//! mode: B
//! coords: in=a in=␣ pos posq posi default zero out=a
//! input: a 0
//! output: a 7
//! layer ffn 2
//! w1 0 3 1
//! b1 1 -1/2
//! w2 7 0 1
//! b2 7 1
//! layer attn none 1
//! q 0 2 2
//! k 0 0 1
//! v 7 1 1
//! probe 3 5 6
//! end
//! ```
//!
//! Matrix entries are `row col value`; a layer's hidden or score width follows
//! its kind. Blank symbols are written as `␣`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;
use core::str::FromStr;

use super::{AhaError, AttnMask, Layer, PeMode, Probe, Sparse, TransformerSpec, Q};

fn write_sparse(s: &mut String, tag: &str, m: &Sparse) {
    for (r, c, v) in &m.entries {
        let _ = writeln!(s, "{tag} {r} {c} {v}");
    }
}

fn write_bias(s: &mut String, tag: &str, b: &[Q]) {
    for (r, v) in b.iter().enumerate() {
        if *v != Q::from_integer(0.into()) {
            let _ = writeln!(s, "{tag} {r} {v}");
        }
    }
}

pub fn write_spec(t: &TransformerSpec) -> String {
    let mut s = String::from("transformer\n");
    let _ = writeln!(s, "mode: {}", t.mode.name());
    let _ = writeln!(s, "coords: {}", t.layout.join(" "));
    for (a, c) in &t.input {
        let _ = writeln!(s, "input: {a} {c}");
    }
    for (a, c) in &t.output {
        let _ = writeln!(s, "output: {a} {c}");
    }
    for l in &t.layers {
        match l {
            Layer::Ffn { w1, b1, w2, b2 } => {
                let _ = writeln!(s, "layer ffn {}", w1.rows);
                write_sparse(&mut s, "w1", w1);
                write_bias(&mut s, "b1", b1);
                write_sparse(&mut s, "w2", w2);
                write_bias(&mut s, "b2", b2);
            }
            Layer::Attn { q, k, v, mask } => {
                let mask = match mask {
                    AttnMask::None => "none",
                    AttnMask::Strict => "strict",
                    AttnMask::NonStrict => "nonstrict",
                };
                let _ = writeln!(s, "layer attn {mask} {}", q.rows);
                write_sparse(&mut s, "q", q);
                write_sparse(&mut s, "k", k);
                write_sparse(&mut s, "v", v);
            }
        }
    }
    for p in &t.probes {
        let _ = writeln!(s, "probe {} {} {}", p.layer, p.left, p.right);
    }
    s.push_str("end\n");
    s
}

struct Reader {
    line: usize,
}

impl Reader {
    fn err(&self, msg: impl Into<String>) -> AhaError {
        AhaError::Format { line: self.line, msg: msg.into() }
    }

    fn num<T: FromStr>(&self, tok: Option<&str>) -> Result<T, AhaError> {
        let tok = tok.ok_or_else(|| self.err("missing field"))?;
        tok.parse().map_err(|_| self.err(format!("bad number `{tok}`")))
    }

    fn symbol(&self, tok: Option<&str>) -> Result<char, AhaError> {
        let tok = tok.ok_or_else(|| self.err("missing symbol"))?;
        let mut cs = tok.chars();
        match (cs.next(), cs.next()) {
            (Some(c), None) => Ok(c),
            _ => Err(self.err(format!("`{tok}` is not one symbol"))),
        }
    }
}

pub fn read_spec(src: &str) -> Result<TransformerSpec, AhaError> {
    let mut rd = Reader { line: 0 };
    let mut mode = None;
    let mut layout: Vec<String> = Vec::new();
    let mut input = Vec::new();
    let mut output = Vec::new();
    let mut layers: Vec<Layer> = Vec::new();
    let mut probes = Vec::new();
    let mut started = false;
    let mut ended = false;
    for (k, raw) in src.lines().enumerate() {
        rd.line = k + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if ended {
            return Err(rd.err("text after `end`"));
        }
        if !started {
            if line != "transformer" {
                return Err(rd.err("expected `transformer`"));
            }
            started = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix("mode:") {
            mode = Some(match rest.trim() {
                "B" => PeMode::B,
                "C" => PeMode::C,
                m => return Err(rd.err(format!("unknown mode `{m}`"))),
            });
            continue;
        }
        if let Some(rest) = line.strip_prefix("coords:") {
            layout = rest.split_whitespace().map(str::to_string).collect();
            continue;
        }
        let d = layout.len();
        let mut toks = line.split_whitespace();
        let head = toks.next().unwrap_or_default();
        match head {
            "input:" | "output:" => {
                let a = rd.symbol(toks.next())?;
                let c: usize = rd.num(toks.next())?;
                if c >= d {
                    return Err(rd.err("coordinate out of range"));
                }
                if head == "input:" { &mut input } else { &mut output }.push((a, c));
            }
            "layer" => {
                let kind = toks.next().unwrap_or_default();
                match kind {
                    "ffn" => {
                        let h: usize = rd.num(toks.next())?;
                        layers.push(Layer::Ffn {
                            w1: Sparse::new(h, d),
                            b1: vec![Q::from_integer(0.into()); h],
                            w2: Sparse::new(d, h),
                            b2: vec![Q::from_integer(0.into()); d],
                        });
                    }
                    "attn" => {
                        let mask = match toks.next().unwrap_or_default() {
                            "none" => AttnMask::None,
                            "strict" => AttnMask::Strict,
                            "nonstrict" => AttnMask::NonStrict,
                            m => return Err(rd.err(format!("unknown mask `{m}`"))),
                        };
                        let m: usize = rd.num(toks.next())?;
                        layers.push(Layer::Attn {
                            q: Sparse::new(m, d),
                            k: Sparse::new(m, d),
                            v: Sparse::new(d, d),
                            mask,
                        });
                    }
                    _ => return Err(rd.err(format!("unknown layer kind `{kind}`"))),
                }
            }
            "w1" | "w2" | "q" | "k" | "v" => {
                let r: usize = rd.num(toks.next())?;
                let c: usize = rd.num(toks.next())?;
                let x: Q = rd.num(toks.next())?;
                let m = match (layers.last_mut(), head) {
                    (Some(Layer::Ffn { w1, .. }), "w1") => w1,
                    (Some(Layer::Ffn { w2, .. }), "w2") => w2,
                    (Some(Layer::Attn { q, .. }), "q") => q,
                    (Some(Layer::Attn { k, .. }), "k") => k,
                    (Some(Layer::Attn { v, .. }), "v") => v,
                    _ => return Err(rd.err(format!("`{head}` outside a matching layer"))),
                };
                if r >= m.rows || c >= m.cols {
                    return Err(rd.err("entry out of range"));
                }
                m.set(r, c, x);
            }
            "b1" | "b2" => {
                let r: usize = rd.num(toks.next())?;
                let x: Q = rd.num(toks.next())?;
                let b = match (layers.last_mut(), head) {
                    (Some(Layer::Ffn { b1, .. }), "b1") => b1,
                    (Some(Layer::Ffn { b2, .. }), "b2") => b2,
                    _ => return Err(rd.err(format!("`{head}` outside a feed-forward layer"))),
                };
                let slot = b.get_mut(r).ok_or_else(|| rd.err("entry out of range"))?;
                *slot = x;
            }
            "probe" => {
                let layer = rd.num(toks.next())?;
                let left = rd.num(toks.next())?;
                let right = rd.num(toks.next())?;
                probes.push(Probe { layer, left, right });
            }
            "end" => ended = true,
            _ => return Err(rd.err(format!("unexpected `{head}`"))),
        }
        if toks.next().is_some() {
            return Err(rd.err("trailing fields"));
        }
    }
    if !ended {
        return Err(rd.err("missing `end`"));
    }
    let mode = mode.ok_or_else(|| rd.err("missing mode"))?;
    Ok(TransformerSpec { mode, layout, layers, input, output, probes })
}

#[cfg(test)]
mod tests {
    use super::super::{int, q};
    use super::*;

    #[test]
    fn round_trip() {
        let mut w1 = Sparse::new(1, 3);
        w1.set(0, 2, q(-3, 4));
        let mut w2 = Sparse::new(3, 1);
        w2.set(1, 0, int(2));
        let mut qm = Sparse::new(1, 3);
        qm.set(0, 0, int(1));
        let t = TransformerSpec {
            mode: PeMode::C,
            layout: vec!["in=␣".to_string(), "pos".to_string(), "posiq".to_string()],
            layers: vec![
                Layer::Ffn { w1, b1: vec![q(1, 2)], w2, b2: vec![int(0), int(0), int(1)] },
                Layer::Attn { q: qm.clone(), k: qm, v: Sparse::new(3, 3), mask: AttnMask::Strict },
            ],
            input: vec![('␣', 0)],
            output: vec![('␣', 0)],
            probes: vec![Probe { layer: 1, left: 0, right: 1 }],
        };
        let s = write_spec(&t);
        assert_eq!(read_spec(&s).unwrap(), t);
    }

    #[test]
    fn rejects_stray_entries() {
        let e = read_spec("transformer\nmode: B\ncoords: a\nq 0 0 1\nend\n").unwrap_err();
        assert!(matches!(e, AhaError::Format { line: 4, .. }));
        assert!(read_spec("transformer\nmode: B\n").is_err());
    }
}
