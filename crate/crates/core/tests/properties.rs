use std::collections::BTreeMap;

use proptest::prelude::*;
use rasp_core::aha::{apply_layer, int, q, ActivationSeq, AttnMask, Layer, Sparse, Q};
use rasp_core::fst::{aperiodic_upto, is_aperiodic, letter, word, Aperiodicity, Dft, Dir, DirectedDft, Letter, Pipeline};
use rasp_core::interp::run;
use rasp_core::lower::{hom_to_srasp, srasp_compose};

const SIGMA: [char; 2] = ['a', 'b'];

/// A total machine over {a, b} with up to three states and outputs of up
/// to two letters.
fn machine() -> impl Strategy<Value = Dft> {
    (1usize..=3).prop_flat_map(|states| {
        let step = (0..states, prop::collection::vec(0usize..2, 0..=2));
        let end = prop::collection::vec(0usize..2, 0..=1);
        (Just(states), prop::collection::vec(step, states * 2), prop::collection::vec(end, states))
    })
    .prop_map(|(states, steps, ends)| {
        let letters: Vec<Letter> = SIGMA.iter().map(|&c| letter(c)).collect();
        let names = (0..states).map(|k| format!("s{k}")).collect();
        let mut m = Dft::new(letters.clone(), letters.clone(), names, 0);
        for (k, (r, out)) in steps.into_iter().enumerate() {
            let out = out.into_iter().map(|x| letters[x].clone()).collect();
            m.set(k / 2, Some(letters[k % 2].clone()), out, r);
        }
        for (k, out) in ends.into_iter().enumerate() {
            m.set(k, None, out.into_iter().map(|x| letters[x].clone()).collect(), k);
        }
        m
    })
}

fn directed() -> impl Strategy<Value = DirectedDft> {
    (machine(), any::<bool>()).prop_map(|(machine, l2r)| DirectedDft { machine, dir: if l2r { Dir::L2R } else { Dir::R2L } })
}

fn ab_word(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(SIGMA.to_vec()), 0..=max).prop_map(|cs| cs.into_iter().collect())
}

fn rational() -> impl Strategy<Value = Q> {
    (-6i64..=6, 1i64..=4).prop_map(|(a, b)| q(a, b))
}

fn sparse(rows: usize, cols: usize) -> impl Strategy<Value = Sparse> {
    prop::collection::vec((0..rows, 0..cols, rational()), 0..=6).prop_map(move |es| {
        let mut m = Sparse::new(rows, cols);
        for (r, c, v) in es {
            m.set(r, c, v);
        }
        m
    })
}

fn activations(n: usize, d: usize) -> impl Strategy<Value = ActivationSeq> {
    prop::collection::vec(prop::collection::vec(rational(), d), n + 1).prop_map(move |rows| ActivationSeq { n, rows })
}

/// Images of A, B, C over {a, b}, each at most two letters long.
fn homomorphism() -> impl Strategy<Value = BTreeMap<char, String>> {
    prop::collection::vec(ab_word(2), 3).prop_map(|ims| ['A', 'B', 'C'].into_iter().zip(ims).collect())
}

fn image(h: &BTreeMap<char, String>, w: &str) -> String {
    w.chars().map(|c| h[&c].clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_stage_pipeline_is_the_machine(s in directed(), w in ab_word(8)) {
        let p = Pipeline { stages: vec![s.clone()], coords: Vec::new() };
        prop_assert_eq!(p.run(&word(&w)), s.run(&word(&w)));
    }

    #[test]
    fn pipelines_concatenate(s1 in directed(), s2 in directed(), s3 in directed(), w in ab_word(6)) {
        let whole = Pipeline { stages: vec![s1.clone(), s2.clone(), s3.clone()], coords: Vec::new() };
        let head = Pipeline { stages: vec![s1], coords: Vec::new() };
        let tail = Pipeline { stages: vec![s2, s3], coords: Vec::new() };
        let staged = head.run(&word(&w)).and_then(|mid| tail.run(&mid));
        prop_assert_eq!(whole.run(&word(&w)), staged);
    }

    #[test]
    fn right_to_left_twice_is_identity(w in ab_word(8)) {
        let letters: Vec<Letter> = SIGMA.iter().map(|&c| letter(c)).collect();
        let id = DirectedDft { machine: Dft::identity(letters), dir: Dir::R2L };
        let once = id.run(&word(&w)).unwrap();
        prop_assert_eq!(id.run(&once).unwrap(), word(&w));
    }

    /// The monoid decision and the definition agree: a reported witness
    /// really cycles, and a cycle found by enumeration is reported.
    #[test]
    fn aperiodicity_matches_definition(m in machine()) {
        let by_definition = aperiodic_upto(&m, 4);
        match is_aperiodic(&m) {
            Aperiodicity::Yes => prop_assert!(by_definition),
            Aperiodicity::No { word, period, .. } => {
                prop_assert!(period > 1);
                let mut q = (0..m.states.len()).collect::<Vec<_>>();
                let mut seen = Vec::new();
                while !seen.contains(&q) {
                    seen.push(q.clone());
                    q = q.iter().map(|&s| word.iter().fold(s, |s, a| m.step(s, Some(a)).unwrap().1)).collect();
                }
                let start = seen.iter().position(|x| *x == q).unwrap();
                prop_assert_eq!(seen.len() - start, period);
                if word.len() <= 4 {
                    prop_assert!(!by_definition);
                }
            }
        }
    }

    /// Position -1 sees nothing under a strict mask, so it keeps its row.
    #[test]
    fn strict_attention_leaves_default_row(qm in sparse(2, 3), km in sparse(2, 3), vm in sparse(3, 3), u in activations(4, 3)) {
        let l = Layer::Attn { q: qm, k: km, v: vm, mask: AttnMask::Strict };
        let out = apply_layer(&l, &u).unwrap();
        prop_assert_eq!(&out.rows[0], &u.rows[0]);
    }

    /// With a zero score every allowed position ties, and the layer adds the
    /// exact mean of their values.
    #[test]
    fn ties_average_exactly(vm in sparse(3, 3), u in activations(5, 3)) {
        let l = Layer::Attn { q: Sparse::new(1, 3), k: Sparse::new(1, 3), v: vm.clone(), mask: AttnMask::NonStrict };
        let out = apply_layer(&l, &u).unwrap();
        for r in 0..u.rows.len() {
            for c in 0..3 {
                let mut sum = int(0);
                for j in 0..=r {
                    sum += &vm.apply(&u.rows[j])[c];
                }
                prop_assert_eq!(&out.rows[r][c], &(&u.rows[r][c] + sum / int(r as i64 + 1)));
            }
        }
    }

    #[test]
    fn homomorphism_output_length(h in homomorphism(), w in "[ABC]{0,5}") {
        let tp = hom_to_srasp(&['A', 'B', 'C'], &SIGMA, &h).unwrap();
        let got = run(&tp, &w, None).unwrap();
        prop_assert_eq!(got.chars().count(), w.chars().map(|c| h[&c].chars().count()).sum::<usize>());
        prop_assert_eq!(got, image(&h, &w));
    }

    /// Composition is associative up to the names of internal vectors.
    #[test]
    fn composition_associates(f in homomorphism(), g in homomorphism(), k in homomorphism(), w in "[ABC]{0,3}") {
        let upper = |h: &BTreeMap<char, String>| -> BTreeMap<char, String> {
            h.iter().map(|(c, s)| (*c, s.replace('a', "A").replace('b', "B"))).collect()
        };
        let big = ['A', 'B', 'C'];
        let a = hom_to_srasp(&big, &['A', 'B', 'C'], &upper(&f)).unwrap();
        let b = hom_to_srasp(&big, &['A', 'B', 'C'], &upper(&g)).unwrap();
        let c = hom_to_srasp(&big, &SIGMA, &k).unwrap();
        let left = srasp_compose(&srasp_compose(&a, &b).unwrap(), &c).unwrap();
        let right = srasp_compose(&a, &srasp_compose(&b, &c).unwrap()).unwrap();
        let want = image(&k, &image(&upper(&g), &image(&upper(&f), &w)));
        prop_assert_eq!(run(&left, &w, None).unwrap(), want.clone());
        prop_assert_eq!(run(&right, &w, None).unwrap(), want);
    }
}
