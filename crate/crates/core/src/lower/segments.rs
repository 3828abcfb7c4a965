//! Composing a packed program with a map over `|`-separated segments.
//!
//! A cell's string splits into a head (before its first bar), a body (from
//! the first bar to the last, bars included) and a tail (after the last
//! bar). A cell without a bar is all head and all tail. Bar cells rebuild
//! their body locally and borrow the pieces of the neighbouring segments;
//! bar-free cells copy from the mirrored or doubled position of their run.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{finish, splice, LowerError};
use crate::lang::{Dialect, Io, Pat, Table, TableRow, Ty, TypedProgram, Value};

const BAR: char = '|';

fn split(s: &str) -> (String, String, String) {
    match (s.find(BAR), s.rfind(BAR)) {
        (Some(a), Some(b)) => (s[..a].to_string(), s[a..=b].to_string(), s[b + 1..].to_string()),
        _ => (s.to_string(), String::new(), s.to_string()),
    }
}

fn reversed(s: &str) -> String {
    s.chars().rev().collect()
}

/// Apply `f` to every bar-delimited segment, keeping the bars.
fn map_segments(s: &str, f: impl Fn(&str) -> String) -> String {
    s.split(BAR).map(f).collect::<Vec<_>>().join("|")
}

fn table(name: &str, rows: impl IntoIterator<Item = (Value, Value)>) -> Table {
    Table {
        name: name.to_string(),
        rows: rows.into_iter().map(|(a, out)| TableRow { pats: vec![Pat::Is(a)], out }).collect(),
    }
}

const SHARED: &[&str] = &[
    "hasbar", "headof", "bodyof", "tailof", "rev", "bar", "last", "prev", "next", "hasprev",
    "hasnext", "head", "body", "tail", "lo", "hi", "ptail", "nhead", "sep", "nosep",
];

const SHARED_DEFS: &str = "
{bar}(i) = {hasbar}({z}(i));
{last}(i) = rightmost j [true, true] pos(j) : 0;
{prev}(i) = rightmost j [j<i, {bar}(j)] pos(j) : {last}(i);
{next}(i) = leftmost j [j>i, {bar}(j)] pos(j) : 0;
{hasprev}(i) = rightmost j [j<i, {bar}(j)] true : false;
{hasnext}(i) = leftmost j [j>i, {bar}(j)] true : false;
{head}(i) = {headof}({z}(i));
{body}(i) = {bodyof}({z}(i));
{tail}(i) = {tailof}({z}(i));
{lo}(i) = {prev}(i) if {hasprev}(i) else 0;
{hi}(i) = {next}(i) if {hasnext}(i) else {last}(i);
";

const REVERSE_DEFS: &str = "
{src}(i) = {lo}(i) + ({hi}(i) - pos(i));
{nosep}(i) = {rev}({tail}({src}(i))) if ({hasprev}(i) and ({src}(i) = {lo}(i))) else {rev}({head}({src}(i)));
{ptail}(i) = {rev}({head}(i)) if ((not {hasprev}(i)) and (pos(i) = 0)) else {rev}({tail}({lo}(i)));
{rbody}(i) = {mapreverse}({body}(i));
{nhead}(i) = {rev}({tail}(i)) if ((not {hasnext}(i)) and (pos(i) = {last}(i))) else {rev}({head}({hi}(i)));
{sep}(i) = ({ptail}(i) . {rbody}(i)) . {nhead}(i);
out(i) = {sep}(i) if {bar}(i) else {nosep}(i);
";

const DUPLICATE_DEFS: &str = "
{ptail}(i) = ({tail}(i-1) if pos(i) > 0 else {head}(i)) . {head}(i);
{nhead}(i) = {tail}(i) . ({head}(i+1) if pos(i) < {last}(i) else {tail}(i));
{dbody}(i) = {mapduplicate}({body}(i));
{sep}(i) = ({ptail}(i) . {dbody}(i)) . {nhead}(i);
{nowrap}(i) = pos(i) + (pos(i) - {lo}(i));
{wrap}(i) = pos(i) - (({hi}(i) - pos(i)) + 1);
{half}(i) = (pos(i) - {lo}(i)) <= ({hi}(i) - pos(i));
{src1}(i) = {nowrap}(i) if {half}(i) else {wrap}(i);
{src2}(i) = ({src1}(i) + 1) if ({src1}(i) < {hi}(i)) else {lo}(i);
{sym1}(i) = {tail}({src1}(i)) if ({src1}(i) < {hi}(i)) else {head}({src1}(i));
{sym2}(i) = {tail}({src2}(i)) if ({src2}(i) < {hi}(i)) else {head}({src2}(i));
{nosep}(i) = {sym1}(i) . {sym2}(i);
out(i) = {sep}(i) if {bar}(i) else {nosep}(i);
";

fn compose(
    tp: &TypedProgram,
    map_name: &str,
    map: impl Fn(&str) -> String,
    extra: &[&str],
    defs: &str,
) -> Result<TypedProgram, LowerError> {
    let mut p = tp.program.clone();
    if p.dialect == Dialect::Srasp || p.io == Io::Padded {
        return Err(LowerError::Dialect("segment maps extend positional programs".into()));
    }
    p.dialect = Dialect::BraspPos;
    // Pieces of a cell are strings over the same letters, no longer than it.
    let out = tp.ty("out");
    if !out.is_textual() {
        return Err(LowerError::NotFinite("out".into()));
    }
    let domain = Ty::Str(out.chars(), out.bound()).values().expect("strings are finite");
    let texts: Vec<(Value, String)> = domain.into_iter().map(|v| (v.clone(), v.text().unwrap())).collect();
    let mut holes: Vec<&str> = SHARED.to_vec();
    holes.extend_from_slice(extra);
    holes.push(map_name);
    holes.push("z");
    // Claim names first so tables and vectors cannot collide.
    let (_, names) = splice(&p, &holes, "")?;
    p.rename_vector("out", &names["z"]);
    let cell = |f: &dyn Fn(&str) -> Value, name: &str| {
        table(&names[name], texts.iter().map(|(v, s)| (v.clone(), f(s))))
    };
    p.tables.push(cell(&|s| Value::Bool(s.contains(BAR)), "hasbar"));
    p.tables.push(cell(&|s| Value::Str(split(s).0), "headof"));
    p.tables.push(cell(&|s| Value::Str(split(s).1), "bodyof"));
    p.tables.push(cell(&|s| Value::Str(split(s).2), "tailof"));
    p.tables.push(cell(&|s| Value::Str(reversed(s)), "rev"));
    p.tables.push(cell(&|s| Value::Str(map(s)), map_name));
    let mut body = String::from(SHARED_DEFS);
    body.push_str(defs);
    for (h, n) in &names {
        body = body.replace(&alloc::format!("{{{h}}}"), n);
    }
    let (mut q, _) = splice(&p, &[], &body)?;
    q.io = Io::Packed(0);
    finish(q)
}

/// The program followed by reversing every `|`-delimited segment.
pub fn compose_mapreverse(tp: &TypedProgram) -> Result<TypedProgram, LowerError> {
    compose(tp, "mapreverse", |s| map_segments(s, reversed), &["src", "rbody"], REVERSE_DEFS)
}

/// The program followed by writing every `|`-delimited segment twice.
pub fn compose_mapduplicate(tp: &TypedProgram) -> Result<TypedProgram, LowerError> {
    compose(
        tp,
        "mapduplicate",
        |s| map_segments(s, |seg| alloc::format!("{seg}{seg}")),
        &["dbody", "nowrap", "wrap", "half", "src1", "src2", "sym1", "sym2"],
        DUPLICATE_DEFS,
    )
}
