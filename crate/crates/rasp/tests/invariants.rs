//! Properties every corpus program must keep.

use proptest::prelude::*;
use rasp::{corpus, corpus_dir, corpus_names, fixtures_dir, oracle, read, verify, words, Lens, Target};
use rasp_core::aha::PeMode;
use rasp_core::emit::{compile, run_compiled};
use rasp_core::fst::is_aperiodic;
use rasp_core::interp::{default_n, eval, run};
use rasp_core::lang::{check, desugar, parse, pretty, Dialect, Io, TypedProgram};
use rasp_core::lower::{brasp_to_pipeline, normalize_scores, pipeline_output, unpack_packed};

fn source(name: &str) -> String {
    read(&corpus_dir().join(format!("{name}.rasp"))).unwrap()
}

fn all() -> Vec<(String, TypedProgram)> {
    corpus_names().into_iter().map(|n| (n.clone(), corpus(&n).unwrap())).collect()
}

#[test]
fn printing_round_trips() {
    for name in corpus_names() {
        let p = parse(&source(&name)).unwrap();
        assert_eq!(parse(&pretty(&p)).unwrap(), p, "{name}");
    }
}

#[test]
fn desugaring_is_idempotent() {
    for name in corpus_names() {
        let once = desugar(&parse(&source(&name)).unwrap()).unwrap();
        assert_eq!(desugar(&once).unwrap(), once, "{name}");
    }
}

/// A boolean program still checks one dialect up. Prefix sums need padded
/// io, so only length-preserving programs make the last step.
#[test]
fn boolean_programs_climb_the_dialect_ladder() {
    for (name, tp) in all() {
        if tp.program.dialect != Dialect::Brasp {
            continue;
        }
        let src = source(&name);
        let mut p = parse(&src).unwrap();
        p.dialect = Dialect::BraspPos;
        check(&p).unwrap_or_else(|e| panic!("{name} as brasp_pos: {e}"));
        if tp.program.io == Io::LengthPreserving {
            let padded = src
                .replace("dialect: brasp", "dialect: srasp")
                .replace("io: length_preserving", "io: padded\nminlen: l");
            check(&parse(&padded).unwrap()).unwrap_or_else(|e| panic!("{name} as srasp: {e}"));
        }
    }
}

fn max_len(tp: &TypedProgram) -> usize {
    match tp.program.minlen.as_ref().map(|q| q.eval(2)) {
        Some(q) if q > 4 => 4,
        _ => 5,
    }
}

/// Padded output does not depend on how much room is left over.
#[test]
fn padded_output_is_stable_in_n() {
    for (name, tp) in all() {
        if tp.program.io != Io::Padded {
            continue;
        }
        for w in words(&tp.program.sigma, max_len(&tp)) {
            let n0 = default_n(&tp, w.chars().count()).unwrap();
            let first = run(&tp, &w, Some(n0)).unwrap();
            for n in n0 + 1..n0 + 4 {
                assert_eq!(run(&tp, &w, Some(n)).unwrap(), first, "{name} on {w} n={n}");
            }
        }
    }
}

/// Attentions whose default was left implicit never fall back to it, and
/// evaluation is repeatable.
#[test]
fn implicit_defaults_are_never_taken() {
    for (name, tp) in all() {
        let implicit: Vec<&str> =
            tp.program.defs.iter().filter(|d| d.implicit_default).map(|d| d.name.as_str()).collect();
        for w in words(&tp.program.sigma, max_len(&tp)) {
            let chars: Vec<char> = w.chars().collect();
            for n in Lens::default().of(&tp, chars.len()) {
                let t = eval(&tp, &chars, n).unwrap();
                assert_eq!(eval(&tp, &chars, n).unwrap(), t);
                for (d, i) in &t.default_taken {
                    assert!(!implicit.contains(&d.as_str()), "{name}: {d} at {i} on {w}");
                }
            }
        }
    }
}

#[test]
fn boolean_programs_lower_to_aperiodic_pipelines() {
    for (name, tp) in all() {
        if tp.program.dialect != Dialect::Brasp {
            continue;
        }
        let pl = brasp_to_pipeline(&normalize_scores(&tp).unwrap()).unwrap();
        for (k, s) in pl.stages.iter().enumerate() {
            assert!(is_aperiodic(&s.machine).holds(), "{name} stage {k}");
        }
        for w in words(&tp.program.sigma, 6) {
            assert_eq!(pipeline_output(&pl, &w).unwrap(), run(&tp, &w, None).unwrap(), "{name} on {w}");
        }
    }
}

#[test]
fn packed_programs_unpack() {
    for (name, tp) in all() {
        if !matches!(tp.program.io, Io::Packed(_)) || tp.program.dialect != Dialect::BraspPos {
            continue;
        }
        let up = unpack_packed(&tp).unwrap();
        for w in words(&tp.program.sigma, 4) {
            let want = run(&tp, &w, None).unwrap();
            for n in Lens::default().of(&up, w.chars().count()) {
                assert_eq!(run(&up, &w, Some(n)).unwrap(), want, "{name} on {w} n={n}");
            }
        }
    }
}

#[test]
fn corrupted_fixtures_fail() {
    let marked = rasp::load_program(&fixtures_dir().join("corrupt/marked-square.rasp")).unwrap();
    let r = verify(&marked, &Target::Oracle(oracle("marked-square").unwrap()), 4, &Lens::default());
    assert_eq!(r.failure.map(|f| f.word), Some("aa".to_string()));

    let pl = rasp_core::fst::read_pipeline(&read(&fixtures_dir().join("corrupt/increment.pipeline")).unwrap()).unwrap();
    let r = verify(&corpus("increment").unwrap(), &Target::Fst(pl), 6, &Lens::default());
    assert_eq!(r.failure.map(|f| f.word), Some("1".to_string()));

    let t = rasp_core::aha::read_spec(&read(&fixtures_dir().join("corrupt/letters-to-digits.aha")).unwrap()).unwrap();
    let r = verify(&corpus("letters-to-digits").unwrap(), &Target::Aha(vec![t]), 4, &Lens::default());
    assert_eq!(r.failure.map(|f| f.word), Some("a".to_string()));
}

#[test]
fn compiled_size_does_not_depend_on_n() {
    // n reaches a compiled program only through the position encoding, so
    // one spec serves every length; compiling twice gives the same spec.
    for (name, tp) in all() {
        if tp.program.dialect != Dialect::Srasp {
            continue;
        }
        for mode in [PeMode::B, PeMode::C] {
            assert_eq!(compile(&tp, mode).unwrap(), compile(&tp, mode).unwrap(), "{name}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Both encodings decode to the same string at lengths beyond the
    /// exhaustive range.
    #[test]
    fn encodings_agree(w in "[ab]{0,9}", extra in 1usize..4) {
        let tp = corpus("majority-rules").unwrap();
        let n = default_n(&tp, w.len()).unwrap() + extra;
        let b = run_compiled(&compile(&tp, PeMode::B).unwrap(), tp.program.io, &w, n).unwrap();
        let c = run_compiled(&compile(&tp, PeMode::C).unwrap(), tp.program.io, &w, n).unwrap();
        prop_assert_eq!(&b, &c);
        prop_assert_eq!(b, run(&tp, &w, Some(n)).unwrap());
    }

    #[test]
    fn longer_words_match_oracles(w in "[|abcde]{0,12}") {
        for name in ["map-reverse", "map-duplicate"] {
            let tp = corpus(name).unwrap();
            prop_assert_eq!(run(&tp, &w, None).unwrap(), oracle(name).unwrap().apply(&w));
        }
    }
}
