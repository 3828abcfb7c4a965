//! Deterministic finite transducers with an end marker, pipelines of them,
//! and the two shape checks the lowerings rely on.

mod text;

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::lang::Value;

pub use text::{read_dft, read_pipeline, write_dft, write_letter, write_pipeline};

/// One transducer letter. Plain alphabets use one-element tuples; the
/// machines built from programs carry one coordinate per vector.
pub type Letter = Vec<Value>;

pub fn letter(c: char) -> Letter {
    vec![Value::Sym(c)]
}

pub fn word(s: &str) -> Vec<Letter> {
    s.chars().map(letter).collect()
}

/// Concatenated text of a word whose letters are single symbols or strings.
pub fn text(w: &[Letter]) -> Option<String> {
    let mut s = String::new();
    for l in w {
        match l.as_slice() {
            [v] => s.push_str(&v.text()?),
            _ => return None,
        }
    }
    Some(s)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FstError {
    #[error("no transition from state `{state}` on {input}")]
    Partial { state: String, input: String },
    #[error("transition from `{state}` writes {letter}, which is outside the output alphabet")]
    Output { state: String, letter: String },
    #[error("letter {0} is not in the input alphabet")]
    Letter(String),
    #[error("stage {stage} reads a different alphabet than stage {prev} writes")]
    AlphabetMismatch { prev: usize, stage: usize },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dft {
    pub sigma: Vec<Letter>,
    pub gamma: Vec<Letter>,
    pub states: Vec<String>,
    pub start: usize,
    /// `None` as the input stands for the end marker.
    pub delta: BTreeMap<(usize, Option<Letter>), (Vec<Letter>, usize)>,
}

impl Dft {
    pub fn new(sigma: Vec<Letter>, gamma: Vec<Letter>, states: Vec<String>, start: usize) -> Dft {
        Dft { sigma, gamma, states, start, delta: BTreeMap::new() }
    }

    /// One-state machine copying its input.
    pub fn identity(sigma: Vec<Letter>) -> Dft {
        let mut t = Dft::new(sigma.clone(), sigma.clone(), vec!["q".to_string()], 0);
        for a in sigma {
            t.set(0, Some(a.clone()), vec![a], 0);
        }
        t.set(0, None, Vec::new(), 0);
        t
    }

    pub fn set(&mut self, q: usize, a: Option<Letter>, out: Vec<Letter>, r: usize) {
        self.delta.insert((q, a), (out, r));
    }

    pub fn step(&self, q: usize, a: Option<&Letter>) -> Option<&(Vec<Letter>, usize)> {
        self.delta.get(&(q, a.cloned()))
    }

    /// Every state has a move on every letter and on the end marker, and
    /// every move writes output letters only.
    pub fn check(&self) -> Result<(), FstError> {
        let gamma: BTreeSet<&Letter> = self.gamma.iter().collect();
        for q in 0..self.states.len() {
            let inputs = self.sigma.iter().map(Some).chain([None]);
            for a in inputs {
                let (out, r) = self.step(q, a).ok_or_else(|| FstError::Partial {
                    state: self.states[q].clone(),
                    input: a.map_or("the end marker".to_string(), |a| write_letter(a)),
                })?;
                if let Some(bad) = out.iter().find(|l| !gamma.contains(l)) {
                    return Err(FstError::Output { state: self.states[q].clone(), letter: write_letter(bad) });
                }
                if *r >= self.states.len() {
                    return Err(FstError::Format { line: 0, msg: "target state out of range".to_string() });
                }
            }
        }
        Ok(())
    }

    /// Outputs along `w` followed by the end marker.
    pub fn run(&self, w: &[Letter]) -> Result<Vec<Letter>, FstError> {
        let mut q = self.start;
        let mut out = Vec::new();
        for a in w.iter().map(Some).chain([None]) {
            let (o, r) = self.step(q, a).ok_or_else(|| match a {
                Some(a) if !self.sigma.contains(a) => FstError::Letter(write_letter(a)),
                _ => FstError::Partial {
                    state: self.states[q].clone(),
                    input: a.map_or("the end marker".to_string(), |a| write_letter(a)),
                },
            })?;
            out.extend(o.iter().cloned());
            q = *r;
        }
        Ok(out)
    }

    /// The state map induced by one letter. Missing moves stay put.
    pub fn state_map(&self, a: &Letter) -> Vec<usize> {
        (0..self.states.len()).map(|q| self.step(q, Some(a)).map_or(q, |(_, r)| *r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    L2R,
    R2L,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedDft {
    pub machine: Dft,
    pub dir: Dir,
}

impl DirectedDft {
    pub fn run(&self, w: &[Letter]) -> Result<Vec<Letter>, FstError> {
        match self.dir {
            Dir::L2R => self.machine.run(w),
            Dir::R2L => {
                let rev: Vec<Letter> = w.iter().rev().cloned().collect();
                let mut out = self.machine.run(&rev)?;
                out.reverse();
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Pipeline {
    pub stages: Vec<DirectedDft>,
    /// Names of the tuple coordinates of the final output, when it is a tuple.
    pub coords: Vec<String>,
}

impl Pipeline {
    /// Adjacent stages agree on the alphabet between them.
    pub fn check(&self) -> Result<(), FstError> {
        for (k, pair) in self.stages.windows(2).enumerate() {
            let out: BTreeSet<&Letter> = pair[0].machine.gamma.iter().collect();
            let inp: BTreeSet<&Letter> = pair[1].machine.sigma.iter().collect();
            if out != inp {
                return Err(FstError::AlphabetMismatch { prev: k, stage: k + 1 });
            }
        }
        Ok(())
    }

    pub fn run(&self, w: &[Letter]) -> Result<Vec<Letter>, FstError> {
        self.check()?;
        let mut cur = w.to_vec();
        for s in &self.stages {
            cur = s.run(&cur)?;
        }
        Ok(cur)
    }

    /// Column `name` of a tuple word produced by this pipeline.
    pub fn project(&self, w: &[Letter], name: &str) -> Option<Vec<Value>> {
        let k = self.coords.iter().position(|c| c == name)?;
        w.iter().map(|l| l.get(k).cloned()).collect()
    }
}

fn compose(f: &[usize], g: &[usize]) -> Vec<usize> {
    // f then g
    f.iter().map(|&q| g[q]).collect()
}

fn power(f: &[usize], k: usize) -> Vec<usize> {
    let mut m: Vec<usize> = (0..f.len()).collect();
    for _ in 0..k {
        m = compose(&m, f);
    }
    m
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Aperiodicity {
    Yes,
    /// `word` induces a state map whose powers settle after `index` steps
    /// into a cycle of length `period` > 1.
    No { word: Vec<Letter>, index: usize, period: usize },
}

impl Aperiodicity {
    pub fn holds(&self) -> bool {
        *self == Aperiodicity::Yes
    }
}

/// Decide aperiodicity on the transition monoid. Elements are found
/// breadth-first, so a witness word is as short as possible and least in
/// alphabet order among those.
pub fn is_aperiodic(t: &Dft) -> Aperiodicity {
    let size = t.states.len();
    let letters: Vec<(Letter, Vec<usize>)> = t.sigma.iter().map(|a| (a.clone(), t.state_map(a))).collect();
    let id: Vec<usize> = (0..size).collect();
    let mut seen: BTreeMap<Vec<usize>, Vec<Letter>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    seen.insert(id.clone(), Vec::new());
    queue.push_back(id);
    while let Some(m) = queue.pop_front() {
        let w = seen[&m].clone();
        if power(&m, size) != power(&m, size + 1) {
            let (index, period) = cycle(&m);
            return Aperiodicity::No { word: w, index, period };
        }
        for (a, f) in &letters {
            let next = compose(&m, f);
            if !seen.contains_key(&next) {
                let mut wa = w.clone();
                wa.push(a.clone());
                seen.insert(next.clone(), wa);
                queue.push_back(next);
            }
        }
    }
    Aperiodicity::Yes
}

fn cycle(m: &[usize]) -> (usize, usize) {
    let mut powers: Vec<Vec<usize>> = vec![(0..m.len()).collect()];
    loop {
        let next = compose(powers.last().unwrap(), m);
        if let Some(a) = powers.iter().position(|p| *p == next) {
            return (a, powers.len() - a);
        }
        powers.push(next);
    }
}

/// Aperiodicity straight from the definition, for words up to `maxlen`: run
/// every state through `w^n` and require the relation to be constant from
/// some `n <= 2|Q|` on.
pub fn aperiodic_upto(t: &Dft, maxlen: usize) -> bool {
    let size = t.states.len();
    let top = 2 * size;
    let rel = |w: &[Letter]| -> Vec<usize> {
        (0..size)
            .map(|q0| {
                let mut q = q0;
                for a in w {
                    q = t.step(q, Some(a)).map_or(q, |(_, r)| *r);
                }
                q
            })
            .collect()
    };
    let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..maxlen {
        let mut grown = Vec::new();
        for w in &layer {
            for a in &t.sigma {
                let mut wa = w.clone();
                wa.push(a.clone());
                grown.push(wa);
            }
        }
        for w in &grown {
            let mut rels = Vec::new();
            let mut wn: Vec<Letter> = Vec::new();
            for _ in 0..=top + 1 {
                rels.push(rel(&wn));
                wn.extend(w.iter().cloned());
            }
            // rels[n] is the relation of w^n
            if rels[top] != rels[top + 1] {
                return false;
            }
        }
        layer = grown;
    }
    true
}

/// Every letter acts as the identity or sends all states to one state.
pub fn is_identity_reset(t: &Dft) -> bool {
    t.sigma.iter().all(|a| {
        let m = t.state_map(a);
        m.iter().enumerate().all(|(q, r)| q == *r) || m.windows(2).all(|p| p[0] == p[1])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dfa(sigma: &str, states: usize, moves: &[(usize, char, usize)], accept: &[usize]) -> Dft {
        let bits = vec![letter('0'), letter('1')];
        let names = (0..states).map(|q| alloc::format!("q{q}")).collect();
        let mut t = Dft::new(word(sigma), bits, names, 0);
        for &(q, a, r) in moves {
            t.set(q, Some(letter(a)), Vec::new(), r);
        }
        for q in 0..states {
            let bit = if accept.contains(&q) { '1' } else { '0' };
            t.set(q, None, vec![letter(bit)], q);
        }
        t
    }

    fn ab_star() -> Dft {
        dfa("ab", 3, &[(0, 'a', 1), (0, 'b', 2), (1, 'b', 0), (1, 'a', 2), (2, 'a', 2), (2, 'b', 2)], &[0])
    }

    fn aa_star() -> Dft {
        dfa("a", 2, &[(0, 'a', 1), (1, 'a', 0)], &[0])
    }

    #[test]
    fn ab_star_is_aperiodic() {
        let t = ab_star();
        t.check().unwrap();
        assert_eq!(is_aperiodic(&t), Aperiodicity::Yes);
        assert!(aperiodic_upto(&t, 4));
        assert_eq!(text(&t.run(&word("abab")).unwrap()).unwrap(), "1");
        assert_eq!(text(&t.run(&word("aba")).unwrap()).unwrap(), "0");
    }

    #[test]
    fn aa_star_counts() {
        let t = aa_star();
        assert_eq!(is_aperiodic(&t), Aperiodicity::No { word: word("a"), index: 0, period: 2 });
        assert!(!aperiodic_upto(&t, 4));
    }

    #[test]
    fn one_state_is_aperiodic() {
        assert!(is_aperiodic(&Dft::identity(word("xyz"))).holds());
    }

    #[test]
    fn identity_reset_shapes() {
        let swap = dfa("a", 2, &[(0, 'a', 1), (1, 'a', 0)], &[]);
        assert!(!is_identity_reset(&swap));
        let resets = dfa("ab", 2, &[(0, 'a', 1), (1, 'a', 1), (0, 'b', 1), (1, 'b', 1)], &[]);
        assert!(is_identity_reset(&resets));
    }

    #[test]
    fn partial_machine_is_reported() {
        let mut t = aa_star();
        t.delta.remove(&(1, Some(letter('a'))));
        assert!(matches!(t.check(), Err(FstError::Partial { .. })));
    }

    #[test]
    fn directions_and_pipelines() {
        let id = Dft::identity(word("abc"));
        let l = DirectedDft { machine: id.clone(), dir: Dir::L2R };
        let r = DirectedDft { machine: id, dir: Dir::R2L };
        let p = Pipeline { stages: vec![l, r], coords: Vec::new() };
        assert_eq!(text(&p.run(&word("abc")).unwrap()).unwrap(), "abc");
        assert_eq!(text(&Pipeline::default().run(&word("cab")).unwrap()).unwrap(), "cab");
    }

    #[test]
    fn silent_machine_writes_nothing() {
        let mut t = Dft::new(word("ab"), Vec::new(), vec!["q".into()], 0);
        for a in ["a", "b"] {
            t.set(0, Some(word(a).remove(0)), Vec::new(), 0);
        }
        t.set(0, None, Vec::new(), 0);
        assert!(t.run(&word("abba")).unwrap().is_empty());
    }
}
