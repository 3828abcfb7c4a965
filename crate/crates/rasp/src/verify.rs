//! Exhaustive checks of a program against an oracle or a lowered backend.

use std::fmt;

use rayon::prelude::*;
use rasp_core::aha::{PeMode, TransformerSpec};
use rasp_core::emit::{compile, run_compiled_with_margins};
use rasp_core::fst::Pipeline;
use rasp_core::interp::{default_n, run};
use rasp_core::lang::{Io, TypedProgram};
use rasp_core::lower::{brasp_to_pipeline, normalize_scores, pipeline_output};

use crate::oracles::Oracle;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("no oracle registered for `{0}`")]
    MissingOracle(String),
    #[error("cannot build the {backend} backend: {why}")]
    Backend { backend: &'static str, why: String },
    #[error("bad length policy `{0}`; expected offsets like q+1,q+2")]
    Lens(String),
}

/// All words over `sigma` of length at most `max`, shortest first and in
/// alphabet order within a length.
pub fn words(sigma: &[char], max: usize) -> Vec<String> {
    let mut all = vec![String::new()];
    let mut layer = all.clone();
    for _ in 0..max {
        layer = layer.iter().flat_map(|w| sigma.iter().map(move |c| format!("{w}{c}"))).collect();
        all.extend(layer.iter().cloned());
    }
    all
}

/// Vector lengths tried for each input: for padded programs, `q+k` for each
/// offset k, where q is the least admissible length minus one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lens(pub Vec<usize>);

impl Default for Lens {
    fn default() -> Lens {
        Lens(vec![1, 2])
    }
}

impl std::str::FromStr for Lens {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Lens, VerifyError> {
        let bad = || VerifyError::Lens(s.to_string());
        let ks = s
            .split(',')
            .map(|t| t.trim().strip_prefix("q+").and_then(|k| k.parse().ok()).filter(|&k| k > 0).ok_or_else(bad))
            .collect::<Result<Vec<usize>, _>>()?;
        if ks.is_empty() {
            return Err(bad());
        }
        Ok(Lens(ks))
    }
}

impl Lens {
    pub fn of(&self, tp: &TypedProgram, len: usize) -> Vec<usize> {
        match default_n(tp, len) {
            Ok(n) if tp.program.io == Io::Padded => self.0.iter().map(|k| n - 1 + k).collect(),
            Ok(n) => vec![n],
            Err(_) => Vec::new(),
        }
    }
}

/// What a program is checked against.
pub enum Target {
    Oracle(&'static Oracle),
    Fst(Pipeline),
    Aha(Vec<TransformerSpec>),
}

impl Target {
    pub fn label(&self) -> &'static str {
        match self {
            Target::Oracle(_) => "oracle",
            Target::Fst(_) => "fst",
            Target::Aha(_) => "aha",
        }
    }

    /// Lower `tp` to a transducer pipeline, normalizing scores first.
    pub fn fst(tp: &TypedProgram) -> Result<Target, VerifyError> {
        let err = |e: rasp_core::lower::LowerError| VerifyError::Backend { backend: "fst", why: e.to_string() };
        let norm = normalize_scores(tp).map_err(err)?;
        Ok(Target::Fst(brasp_to_pipeline(&norm).map_err(err)?))
    }

    pub fn aha(tp: &TypedProgram, modes: &[PeMode]) -> Result<Target, VerifyError> {
        let ts = modes
            .iter()
            .map(|&m| compile(tp, m))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| VerifyError::Backend { backend: "aha", why: e.to_string() })?;
        Ok(Target::Aha(ts))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub word: String,
    pub n: usize,
    pub detail: String,
    pub want: String,
    pub got: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub target: &'static str,
    pub words: usize,
    pub runs: usize,
    pub failure: Option<Failure>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "{}: PASS over {} inputs ({} runs)", self.target, self.words, self.runs),
            Some(x) => write!(
                f,
                "{}: FAIL on `{}` (n={}{}): expected `{}`, got `{}`",
                self.target, x.word, x.n, x.detail, x.want, x.got
            ),
        }
    }
}

fn show<E: fmt::Display>(r: Result<String, E>) -> String {
    r.unwrap_or_else(|e| format!("error: {e}"))
}

/// Check one word at every length the policy gives; the first mismatch wins.
fn check_word(tp: &TypedProgram, target: &Target, lens: &Lens, w: &str) -> (usize, Option<Failure>) {
    let ns = lens.of(tp, w.chars().count());
    let mut runs = 0;
    for n in ns {
        let want = show(run(tp, w, Some(n)));
        let fail = |detail: String, want: String, got: String| Failure { word: w.to_string(), n, detail, want, got };
        match target {
            Target::Oracle(o) => {
                runs += 1;
                let expect = o.apply(w);
                if want != expect {
                    return (runs, Some(fail(String::new(), expect, want)));
                }
            }
            Target::Fst(pl) => {
                runs += 1;
                let got = show(pipeline_output(pl, w));
                if got != want {
                    return (runs, Some(fail(String::new(), want, got)));
                }
            }
            Target::Aha(ts) => {
                for t in ts {
                    runs += 1;
                    let mode = format!(", mode {}", t.mode.name());
                    let (got, margin) = match run_compiled_with_margins(t, tp.program.io, w, n) {
                        Ok((s, m)) => (s, m),
                        Err(e) => (format!("error: {e}"), None),
                    };
                    if got != want {
                        return (runs, Some(fail(mode, want, got)));
                    }
                    if let Some(m) = margin.filter(|m| *m <= rasp_core::aha::int(0)) {
                        return (runs, Some(fail(format!("{mode}, score margin {m}"), want.clone(), want)));
                    }
                }
            }
        }
    }
    (runs, None)
}

/// Check every word over the program's input alphabet up to `maxlen`. The
/// reported counterexample is the least failing word in enumeration order,
/// whatever order the workers finish in.
pub fn verify(tp: &TypedProgram, target: &Target, maxlen: usize, lens: &Lens) -> Report {
    let ws = words(&tp.program.sigma, maxlen);
    let results: Vec<(usize, Option<Failure>)> = ws.par_iter().map(|w| check_word(tp, target, lens, w)).collect();
    let runs = results.iter().map(|r| r.0).sum();
    let failure = results.into_iter().find_map(|r| r.1);
    Report { target: target.label(), words: ws.len(), runs, failure }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::oracle;
    use rasp_core::lang::load;

    const INCREMENT: &str = "dialect: brasp\nsigma: 0 1\ngamma: 0 1\n\
        not(i) = '1' if in(i) = '0' else '0';\n\
        carry(i) = rightmost j [j>i, in(j) = '0'] false : true;\n\
        out(i) = not(i) if carry(i) else in(i);\n";

    #[test]
    fn enumeration_order() {
        assert_eq!(words(&['a', 'b'], 2), ["", "a", "b", "aa", "ab", "ba", "bb"]);
        assert_eq!(words(&['a'], 0), [""]);
    }

    #[test]
    fn length_policy() {
        assert_eq!("q+1, q+3".parse::<Lens>().unwrap(), Lens(vec![1, 3]));
        assert!("q+0".parse::<Lens>().is_err());
        assert!("n+1".parse::<Lens>().is_err());
        let tp = load("dialect: srasp\nsigma: a\ngamma: a\nio: padded\nminlen: 2*l\nout(i) = in(i);\n").unwrap();
        assert_eq!(Lens::default().of(&tp, 3), [7, 8]);
        assert_eq!(Lens::default().of(&tp, 0), [1, 2]);
    }

    #[test]
    fn increment_passes_every_backend() {
        let tp = load(INCREMENT).unwrap();
        let lens = Lens::default();
        let targets = [
            Target::Oracle(oracle("increment").unwrap()),
            Target::fst(&tp).unwrap(),
            Target::aha(&tp, &[PeMode::B, PeMode::C]).unwrap(),
        ];
        for t in &targets {
            let r = verify(&tp, t, 5, &lens);
            assert!(r.passed(), "{r}");
            assert_eq!(r.words, 63);
        }
    }

    #[test]
    fn least_counterexample_is_reported() {
        // Wrong whenever the last bit is 1 and some earlier bit is 0.
        let broken = INCREMENT.replace("[j>i,", "[j>=i,");
        let tp = load(&broken).unwrap();
        let r = verify(&tp, &Target::Oracle(oracle("increment").unwrap()), 4, &Lens::default());
        let f = r.failure.unwrap();
        assert_eq!((f.word.as_str(), f.want.as_str()), ("0", "1"));
    }
}
