use super::*;
use crate::aha::{encode_input, probe_margins};
use crate::interp::{default_n, run};
use crate::lang::load;

fn words(sigma: &[char], max: usize) -> Vec<String> {
    let mut all = vec![String::new()];
    let mut layer = all.clone();
    for _ in 0..max {
        layer = layer.iter().flat_map(|w| sigma.iter().map(move |c| format!("{w}{c}"))).collect();
        all.extend(layer.iter().cloned());
    }
    all
}

/// Compiled output equals the interpreter's for both encodings, on every
/// word up to `max` and the two smallest admissible lengths.
fn agrees(src: &str, max: usize) {
    let tp = load(src).unwrap();
    for mode in [PeMode::B, PeMode::C] {
        let t = compile(&tp, mode).unwrap();
        for w in words(&tp.program.sigma, max) {
            let len = w.chars().count();
            let n0 = default_n(&tp, len).unwrap();
            let ns = if tp.program.io == Io::Padded { vec![n0, n0 + 1] } else { vec![n0] };
            for n in ns {
                let want = run(&tp, &w, Some(n)).unwrap();
                let got = run_compiled(&t, tp.program.io, &w, n).unwrap();
                assert_eq!(got, want, "{w} n={n} mode {mode:?}");
                if n > 0 && !t.probes.is_empty() {
                    let u = encode_input(&t, &w, n).unwrap();
                    if let Some(m) = probe_margins(&t, &u).unwrap() {
                        assert!(m > Q::zero(), "{w} n={n} margin {m}");
                    }
                }
            }
        }
    }
}

#[test]
fn identity() {
    agrees("dialect: srasp\nsigma: a b c\ngamma: a b c\nio: padded\nminlen: l\nout(i) = in(i);\n", 3);
}

#[test]
fn boolean_increment() {
    agrees(
        "dialect: brasp\nsigma: 0 1\ngamma: 0 1\n\
         not(i) = '1' if in(i) = '0' else '0';\n\
         carry(i) = rightmost j [j>i, in(j) = '0'] false : true;\n\
         out(i) = not(i) if carry(i) else in(i);\n",
        5,
    );
}

#[test]
fn majority() {
    agrees(
        "dialect: srasp\nsigma: a b\ngamma: a b\nio: padded\nminlen: l\n\
         pa(i) = sum j [j<=i] (1 if in(j) = 'a' else 0);\n\
         na(i) = rightmost j [true, true] pa(j);\n\
         pb(i) = sum j [j<=i] (1 if in(j) = 'b' else 0);\n\
         nb(i) = rightmost j [true, true] pb(j);\n\
         out(i) = '␣' if in(i) = '␣' else ('a' if na(i) >= nb(i) else 'b');\n",
        4,
    );
}

#[test]
fn lookups_shifts_and_tables() {
    agrees(
        "dialect: srasp\nsigma: a b\ngamma: a b x y\nio: padded\nminlen: 2*l\n\
         table swap {\n  'a' 1 -> 'b';\n  'b' _ -> 'a';\n  _ _ -> 'x';\n}\n\
         half(i) = pos(i) - 1;\n\
         back(i) = in(half(i));\n\
         k(i) = 1 if in(i-1) = 'a' else 0;\n\
         t(i) = swap(back(i), k(i));\n\
         m(i) = leftmost j [j<=i, in(j) = in(i)] pos(j) : 7;\n\
         out(i) = '␣' if in(i) = '␣' else (t(i) if m(i) < 2 else 'y');\n",
        4,
    );
}

#[test]
fn equality_attention_both_ways() {
    agrees(
        "dialect: srasp\nsigma: a b\ngamma: a b c\nio: padded\nminlen: l\n\
         k(i) = sum j [j<=i] (1 if in(j) = 'a' else 0);\n\
         first(i) = leftmost j [true, k(i) = k(j)] in(j) : 'c';\n\
         last(i) = rightmost j [true, k(i) = k(j)] in(j) : 'c';\n\
         out(i) = first(i) if in(i) = 'a' else last(i);\n",
        4,
    );
}

#[test]
fn constants_are_exact() {
    let tp = load("dialect: srasp\nsigma: a\ngamma: a\nio: padded\nminlen: l\nout(i) = in(i);\n").unwrap();
    let t = compile(&tp, PeMode::C).unwrap();
    let u = crate::aha::run(&t, &encode_input(&t, "a", 8).unwrap()).unwrap();
    let at = |name: &str| t.layout.iter().position(|c| c == name).unwrap();
    for i in -1..8i64 {
        assert_eq!(u.at(i)[at("invn4")], q(1, 4096));
        assert_eq!(u.at(i)[at("posi")], q(1, i + 2));
        assert_eq!(u.at(i)[at("zero")], int((i == 0) as i64));
        assert_eq!(u.at(i)[at("default")], int((i == -1) as i64));
    }
}

#[test]
fn text_round_trip() {
    let tp = load("dialect: srasp\nsigma: a b\ngamma: a b\nio: padded\nminlen: l\n\
                   p(i) = sum j [j<=i] (1 if in(j) = 'a' else 0);\nout(i) = in(p(i));\n")
    .unwrap();
    let t = compile(&tp, PeMode::B).unwrap();
    let text = crate::aha::write_spec(&t);
    assert_eq!(crate::aha::read_spec(&text).unwrap(), t);
}

#[test]
fn packed_programs_are_refused() {
    let tp = load("dialect: brasp\nsigma: a\ngamma: a\nio: packed 2\nout(i) = \"aa\";\n").unwrap();
    assert!(matches!(compile(&tp, PeMode::B), Err(EmitError::Unsupported(_))));
}
