use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rasp::{load_program, oracle, program_name, read, trace_text, verify, FileError, Lens, Target};
use rasp_core::aha::{read_spec, write_spec, PeMode};
use rasp_core::emit::compile;
use rasp_core::fst::{is_aperiodic, is_identity_reset, read_dft, read_pipeline, write_pipeline, Aperiodicity, DirectedDft};
use rasp_core::interp::{run, Format};
use rasp_core::lang::{Io, LoadError, TypedProgram};
use rasp_core::lower::{brasp_to_pipeline, normalize_scores};

#[derive(Parser)]
#[command(name = "rasp", version, about = "Interpret, lower and verify RASP programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the output of a program on one input.
    Run {
        file: PathBuf,
        input: String,
        /// Vector length; defaults to the least admissible one.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = RunFormat::Text)]
        format: RunFormat,
    },
    /// Print every vector of a program on one input.
    Trace {
        file: PathBuf,
        input: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = TraceFormat::Tsv)]
        format: TraceFormat,
    },
    /// Parse and check a program, machine, pipeline or transformer file.
    Check { file: PathBuf },
    /// Compile a program to a transducer pipeline or a transformer.
    Lower {
        file: PathBuf,
        #[arg(long, value_enum)]
        target: LowerTarget,
        #[arg(long, value_enum, default_value_t = Mode::B)]
        pe_mode: Mode,
        /// Write here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare a program with its oracle or its lowerings on every short input.
    Verify {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Against::All)]
        against: Against,
        #[arg(long, env = "RASP_MAXLEN", default_value_t = 6)]
        maxlen: usize,
        /// Vector lengths for padded programs, as offsets from the minimum.
        #[arg(long, default_value = "q+1,q+2")]
        lens: Lens,
        /// Only this encoding for the transformer; both by default.
        #[arg(long, value_enum)]
        pe_mode: Option<Mode>,
        /// Check a prebuilt `.pipeline` or `.aha` file instead of lowering.
        #[arg(long)]
        artifact: Option<PathBuf>,
        /// Oracle name; defaults to the file name.
        #[arg(long)]
        oracle: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RunFormat {
    /// The output string.
    Text,
    /// The `out` vector, one tab-separated cell per position.
    Cells,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Tsv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum LowerTarget {
    Fst,
    Aha,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    #[value(name = "B", alias = "b")]
    B,
    #[value(name = "C", alias = "c")]
    C,
}

impl From<Mode> for PeMode {
    fn from(m: Mode) -> PeMode {
        match m {
            Mode::B => PeMode::B,
            Mode::C => PeMode::C,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Against {
    Oracle,
    Fst,
    Aha,
    All,
}

/// A failure with the exit code it maps to.
struct Fail(u8, String);

impl From<FileError> for Fail {
    fn from(e: FileError) -> Fail {
        let code = match &e {
            FileError::Load { source: LoadError::Parse(_), .. } => 2,
            FileError::Load { source: LoadError::Type(_), .. } => 3,
            FileError::Io { .. } => 1,
        };
        Fail(code, e.to_string())
    }
}

fn fail(e: impl std::fmt::Display) -> Fail {
    Fail(1, e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(code)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), Fail> {
    match cmd {
        Cmd::Run { file, input, n, format } => {
            let tp = load_program(&file)?;
            match format {
                RunFormat::Text => println!("{}", run(&tp, &input, n).map_err(fail)?),
                RunFormat::Cells => {
                    let t = trace_text(&tp, &input, n, Format::Tsv).map_err(fail)?;
                    let out = t.lines().find_map(|l| l.strip_prefix("out\t").or((l == "out").then_some("")));
                    println!("{}", out.unwrap_or_default());
                }
            }
        }
        Cmd::Trace { file, input, n, format } => {
            let tp = load_program(&file)?;
            let format = match format {
                TraceFormat::Tsv => Format::Tsv,
                TraceFormat::Markdown => Format::Markdown,
            };
            print!("{}", trace_text(&tp, &input, n, format).map_err(fail)?);
        }
        Cmd::Check { file } => check(&file)?,
        Cmd::Lower { file, target, pe_mode, output } => {
            let tp = load_program(&file)?;
            let text = match target {
                LowerTarget::Fst => write_pipeline(&pipeline(&tp).map_err(fail)?),
                LowerTarget::Aha => write_spec(&compile(&tp, pe_mode.into()).map_err(fail)?),
            };
            match output {
                Some(p) => std::fs::write(&p, text).map_err(|e| fail(format!("{}: {e}", p.display())))?,
                None => print!("{text}"),
            }
        }
        Cmd::Verify { file, against, maxlen, lens, pe_mode, artifact, oracle: name } => {
            let tp = load_program(&file)?;
            let name = name.unwrap_or_else(|| program_name(&file));
            let modes: Vec<PeMode> = match pe_mode {
                Some(m) => vec![m.into()],
                None => vec![PeMode::B, PeMode::C],
            };
            let targets = targets(&tp, &name, against, &modes, artifact.as_deref())?;
            let mut ok = true;
            for t in targets {
                match t {
                    Ok(t) => {
                        let r = verify(&tp, &t, maxlen, &lens);
                        println!("{r}");
                        ok &= r.passed();
                    }
                    Err(skip) => println!("{skip}"),
                }
            }
            if !ok {
                return Err(Fail(1, String::new()));
            }
        }
    }
    Ok(())
}

fn pipeline(tp: &TypedProgram) -> Result<rasp_core::fst::Pipeline, rasp_core::lower::LowerError> {
    brasp_to_pipeline(&normalize_scores(tp)?)
}

/// The backends to check. Under `all`, inapplicable ones are reported as
/// skipped rather than failing the run.
fn targets(
    tp: &TypedProgram,
    name: &str,
    against: Against,
    modes: &[PeMode],
    artifact: Option<&Path>,
) -> Result<Vec<Result<Target, String>>, Fail> {
    if let Some(path) = artifact {
        let text = read(path)?;
        let t = match path.extension().and_then(|e| e.to_str()) {
            Some("pipeline") => Target::Fst(read_pipeline(&text).map_err(fail)?),
            Some("aha") => Target::Aha(vec![read_spec(&text).map_err(fail)?]),
            _ => return Err(fail("artifacts are `.pipeline` or `.aha` files")),
        };
        return Ok(vec![Ok(t)]);
    }
    let mut out = Vec::new();
    if matches!(against, Against::Oracle | Against::All) {
        match oracle(name) {
            Some(o) => out.push(Ok(Target::Oracle(o))),
            None if against == Against::All => out.push(Err(format!("oracle: skipped, none registered for `{name}`"))),
            None => return Err(fail(rasp::VerifyError::MissingOracle(name.to_string()))),
        }
    }
    if matches!(against, Against::Fst | Against::All) {
        match Target::fst(tp) {
            Ok(t) => out.push(Ok(t)),
            Err(e) if against == Against::All => out.push(Err(format!("fst: skipped, {e}"))),
            Err(e) => return Err(fail(e)),
        }
    }
    if matches!(against, Against::Aha | Against::All) {
        match Target::aha(tp, modes) {
            Ok(t) => out.push(Ok(t)),
            Err(e) if against == Against::All => out.push(Err(format!("aha: skipped, {e}"))),
            Err(e) => return Err(fail(e)),
        }
    }
    Ok(out)
}

fn verdict(a: &Aperiodicity) -> String {
    match a {
        Aperiodicity::Yes => "aperiodic".to_string(),
        Aperiodicity::No { word, index, period } => {
            let w: String = word.iter().map(rasp_core::fst::write_letter).collect::<Vec<_>>().join(" ");
            format!("not aperiodic: `{w}` cycles with period {period} after {index} steps")
        }
    }
}

fn describe_stage(k: usize, s: &DirectedDft) -> String {
    let reset = if is_identity_reset(&s.machine) { ", identity-reset" } else { "" };
    format!("stage {k}: {:?}, {} states, {}{reset}", s.dir, s.machine.states.len(), verdict(&is_aperiodic(&s.machine)))
}

fn check(file: &Path) -> Result<(), Fail> {
    match file.extension().and_then(|e| e.to_str()) {
        Some("dft") => {
            let d = read_dft(&read(file)?).map_err(fail)?;
            println!("{}", describe_stage(0, &d));
        }
        Some("pipeline") => {
            let p = read_pipeline(&read(file)?).map_err(fail)?;
            for (k, s) in p.stages.iter().enumerate() {
                println!("{}", describe_stage(k, s));
            }
        }
        Some("aha") => {
            let t = read_spec(&read(file)?).map_err(fail)?;
            println!("ok: mode {}, {} coordinates, {} layers", t.mode.name(), t.layout.len(), t.layers.len());
        }
        _ => {
            let tp = load_program(file)?;
            let p = &tp.program;
            let io = match p.io {
                Io::LengthPreserving => "length_preserving".to_string(),
                Io::Packed(k) => format!("packed {k}"),
                Io::Padded => "padded".to_string(),
            };
            println!("ok: {}, io {io}", p.dialect.keyword());
            for d in &p.defs {
                println!("{}\t{:?}", d.name, tp.ty(&d.name));
            }
        }
    }
    Ok(())
}
