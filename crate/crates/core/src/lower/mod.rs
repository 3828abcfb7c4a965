//! Program transformations: programs to transducer pipelines, transducer
//! cascades back to programs, segment-wise map compositions and the
//! prefix-sum constructions (composition, homomorphisms, unpacking).

mod cascade;
mod normalize;
mod pipeline;
mod segments;
mod srasp;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::fst::FstError;
use crate::interp::EvalError;
use crate::lang::{check, parse, pretty, Io, ParseError, Program, TypeError, TypedProgram};


pub use cascade::{arational_to_brasp, cascade_to_brasp, Cascade};
pub use normalize::normalize_scores;
pub(crate) use normalize::{fold, i_reads, profiles};
pub use pipeline::{brasp_to_pipeline, check_pipeline_aperiodic, pipeline_output};
pub use segments::{compose_mapduplicate, compose_mapreverse};
pub use srasp::{hom_to_srasp, srasp_compose, unpack_packed};



#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LowerError {
    #[error("the score of `{0}` reads position i; normalize scores first")]
    UnnormalizedScore(String),
    #[error("{0}")]
    Dialect(String),
    #[error("`{0}` has no finite set of values")]
    NotFinite(String),
    #[error("cascade stage {0} is not an identity-reset machine")]
    NotIdentityReset(usize),
    #[error("cascade disagrees with its machine on `{w}`")]
    CascadeMismatch { w: String },
    #[error("output alphabet {{{out}}} differs from input alphabet {{{inp}}}")]
    AlphabetMismatch { out: String, inp: String },
    #[error("padded program has no minimum length")]
    NoMinLen,
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Fst(#[from] FstError),
    #[error("generated program does not parse: {0}")]
    Parse(#[from] ParseError),
}

/// A name not in `taken`, recorded as taken.
pub(crate) fn claim(taken: &mut BTreeSet<String>, base: &str) -> String {
    let mut name = base.to_string();
    let mut k = 0;
    while taken.contains(&name) {
        k += 1;
        name = format!("{base}{k}");
    }
    taken.insert(name.clone());
    name
}

/// Vector and table names of `p`.
pub(crate) fn taken_names(p: &Program) -> BTreeSet<String> {
    let mut s = p.names();
    s.extend(p.tables.iter().map(|t| t.name.clone()));
    s
}

/// Append definitions written as text to `p`. Every `{x}` in `template`
/// becomes a fresh name for `x`; the map of choices is returned too.
pub(crate) fn splice(
    p: &Program,
    holes: &[&str],
    template: &str,
) -> Result<(Program, BTreeMap<String, String>), LowerError> {
    let mut taken = taken_names(p);
    let mut names = BTreeMap::new();
    for h in holes {
        names.insert(h.to_string(), claim(&mut taken, h));
    }
    let mut body = template.to_string();
    for (h, n) in &names {
        body = body.replace(&format!("{{{h}}}"), n);
    }
    let text = format!("{}{body}", pretty(p));
    Ok((parse(&text)?, names))
}

/// Typecheck, tightening a packed bound to the inferred output length.
pub(crate) fn finish(mut p: Program) -> Result<TypedProgram, LowerError> {
    if let Io::Packed(_) = p.io {
        p.io = Io::Packed(usize::MAX);
        let loose = check(&p)?;
        p = loose.program;
        p.io = Io::Packed(loose.types["out"].bound());
    }
    Ok(check(&p)?)
}

/// Characters joined with spaces, for messages.
pub(crate) fn show_chars(s: &BTreeSet<char>) -> String {
    s.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}
