use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use srp_shapes::corpus::{self, check_entry, parse_manifest, CorpusEntry};
use srp_shapes::mapping;
use srp_shapes::model_lang::parse;
use srp_shapes::par::Parallelism;
use srp_shapes::render::{self, Format};
use srp_shapes::srp3::{self, GroupParams, Tamper};
use srp_shapes::strand::{load, search, Bounds, Status};

const EXIT_INPUT: u8 = 1;
const EXIT_EXHAUSTED: u8 = 2;

#[derive(Parser)]
#[command(name = "srp-shapes", version, about = "Strand-space shape analysis and an SRP-3 reference")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Search a model file's points of view for shapes.
    Analyze {
        file: PathBuf,
        /// Point of view to analyze; all of them when omitted.
        #[arg(long)]
        pov: Option<String>,
        #[command(flatten)]
        bounds: BoundsArgs,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
        /// Directory for one file per shape; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every corpus entry against its expectation.
    Regress {
        /// Directory holding manifest.toml and the model files; the built-in
        /// corpus when omitted.
        #[arg(long)]
        models: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundsArgs,
    },
    /// Run a concrete SRP-3 session.
    Demo {
        #[arg(value_enum)]
        which: DemoKind,
        #[arg(long, default_value = "toy")]
        profile: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Flip the lowest bit of one message in flight.
        #[arg(long, value_enum)]
        tamper: Option<TamperArg>,
    },
    /// Check docs/mapping.md against the manifest and model files.
    CheckMapping {
        #[arg(long, default_value = ".")]
        root: PathBuf,
    },
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = Bounds::default().max_strands)]
    max_strands: usize,
    #[arg(long, default_value_t = Bounds::default().max_depth)]
    max_depth: usize,
    #[arg(long, default_value_t = Bounds::default().max_branch)]
    max_branch: usize,
    /// Search on one thread.
    #[arg(long)]
    sequential: bool,
}

impl BoundsArgs {
    fn bounds(&self) -> Bounds {
        Bounds {
            max_strands: self.max_strands,
            max_depth: self.max_depth,
            max_branch: self.max_branch,
        }
    }

    fn mode(&self) -> Parallelism {
        if self.sequential {
            Parallelism::Sequential
        } else {
            Parallelism::available()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Dot,
    Json,
    Text,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Dot => Format::Dot,
            FormatArg::Json => Format::Json,
            FormatArg::Text => Format::Text,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoKind {
    Handshake,
    Malserver,
}

#[derive(Clone, Copy, ValueEnum)]
enum TamperArg {
    A,
    B,
    M1,
    M2,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Analyze {
            file,
            pov,
            bounds,
            format,
            out,
        } => analyze(&file, pov.as_deref(), &bounds, format.into(), out.as_deref()),
        Cmd::Regress { models, bounds } => regress(models.as_deref(), &bounds),
        Cmd::Demo {
            which,
            profile,
            seed,
            tamper,
        } => demo(which, &profile, seed, tamper),
        Cmd::CheckMapping { root } => match mapping::check_repo(&root) {
            Ok(()) => {
                println!("mapping complete");
                ExitCode::SUCCESS
            }
            Err(errs) => {
                for e in errs {
                    eprintln!("{e}");
                }
                ExitCode::from(EXIT_INPUT)
            }
        },
    }
}

fn analyze(file: &Path, pov: Option<&str>, args: &BoundsArgs, format: Format, out: Option<&Path>) -> ExitCode {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", file.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let parsed = match parse(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{}: {e}", file.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let povs = match load(&parsed) {
        Ok(p) => p,
        Err(ds) => {
            for d in ds {
                eprintln!("{}: {d}", file.display());
            }
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let selected: Vec<_> = povs.iter().filter(|p| pov.is_none_or(|n| p.name == n)).collect();
    if selected.is_empty() {
        let names: Vec<&str> = povs.iter().map(|p| p.name.as_str()).collect();
        eprintln!("no point of view {}; available: {}", pov.unwrap_or("at all"), names.join(", "));
        return ExitCode::from(EXIT_INPUT);
    }
    if let Some(dir) = out {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("{}: {e}", dir.display());
            return ExitCode::from(EXIT_INPUT);
        }
    }
    let bounds = args.bounds();
    let mut exhausted = false;
    for p in selected {
        let start = Instant::now();
        let outcome = search(&p.skeleton, &bounds, args.mode());
        exhausted |= outcome.status == Status::BoundsExhausted;
        eprintln!(
            "{}: {} shapes, {} ({:.2}s)",
            p.name,
            outcome.shapes.len(),
            outcome.status,
            start.elapsed().as_secs_f64()
        );
        let mut docs: Vec<(String, String)> = Vec::new();
        if format == Format::Json && out.is_none() {
            docs.push((String::new(), format!("{:#}\n", render::outcome_json(&p.name, &bounds, &outcome))));
        } else {
            for (i, s) in outcome.shapes.iter().enumerate() {
                let title = format!("{}-shape-{i}", p.name);
                let body = render::render(s, &title, format);
                docs.push((format!("{title}.{}", format.extension()), body));
            }
        }
        for (name, body) in docs {
            match out {
                Some(dir) => {
                    let path = dir.join(&name);
                    if let Err(e) = std::fs::write(&path, body) {
                        eprintln!("{}: {e}", path.display());
                        return ExitCode::from(EXIT_INPUT);
                    }
                    println!("{}", path.display());
                }
                None => {
                    if format == Format::Text {
                        println!("# {}", name.trim_end_matches(".txt"));
                    }
                    print!("{body}");
                }
            }
        }
    }
    if exhausted {
        ExitCode::from(EXIT_EXHAUSTED)
    } else {
        ExitCode::SUCCESS
    }
}

fn regress(models: Option<&Path>, args: &BoundsArgs) -> ExitCode {
    let (entries, read): (Vec<CorpusEntry>, Box<dyn Fn(&str) -> Option<String>>) = match models {
        None => (corpus::corpus(), Box::new(|f: &str| corpus::source(f).map(str::to_string))),
        Some(dir) => {
            let manifest = match std::fs::read_to_string(dir.join("manifest.toml")) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("{}: {e}", dir.join("manifest.toml").display());
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            match parse_manifest(&manifest) {
                Ok(es) => {
                    let dir = dir.to_path_buf();
                    (es, Box::new(move |f: &str| std::fs::read_to_string(dir.join(f)).ok()))
                }
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_INPUT);
                }
            }
        }
    };
    let mut failed = 0;
    for e in &entries {
        let report = match read(&e.file) {
            Some(text) => check_entry(e, &text, &args.bounds(), args.mode()),
            None => {
                println!("FAIL {}\n    missing file {}", e.id, e.file);
                failed += 1;
                continue;
            }
        };
        println!("{report} ({:.2}s)", report.elapsed.as_secs_f64());
        if !report.passed() {
            failed += 1;
        }
    }
    println!("{} of {} entries passed", entries.len() - failed, entries.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INPUT)
    }
}

fn demo(which: DemoKind, profile: &str, seed: u64, tamper: Option<TamperArg>) -> ExitCode {
    let group = match GroupParams::profile(profile) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("{e}; profiles: {}", srp3::PROFILES.join(", "));
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    println!("profile {} (q = {}, g = {})", group.name, group.q, group.g);
    let (record, secrets) = match srp3::register(&group, "alice", "correct horse battery staple", &mut rng) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    println!("record: I = {}, v = {:x}", record.client_id, record.v);
    match which {
        DemoKind::Handshake => {
            let tamper = match tamper {
                None => Tamper::None,
                Some(TamperArg::A) => Tamper::A(0),
                Some(TamperArg::B) => Tamper::B(0),
                Some(TamperArg::M1) => Tamper::M1(0),
                Some(TamperArg::M2) => Tamper::M2(0),
            };
            let hs = match srp3::handshake(&group, &record, &secrets, tamper, &mut rng) {
                Ok(h) => h,
                Err(e) => {
                    println!("verdict: reject ({e})");
                    return ExitCode::SUCCESS;
                }
            };
            print!("{}", hs.transcript);
            match &hs.client_key {
                Some(k) => println!("client K {}", hex(&k.0)),
                None => println!("client K none"),
            }
            println!("server K {}", hex(&hs.server_key.0));
            match hs.verdict {
                Ok(()) => println!("verdict: accept"),
                Err(e) => println!("verdict: reject ({e})"),
            }
        }
        DemoKind::Malserver => {
            if tamper.is_some() {
                eprintln!("--tamper applies to the handshake demo only");
                return ExitCode::from(EXIT_INPUT);
            }
            let before = secrets.reads();
            let run = match srp3::malicious_transcript(&group, &record, &mut rng) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            println!("client-absent={}", run.client_absent);
            print!("{}", run.transcript);
            println!("client secret reads: {}", secrets.reads() - before);
            match srp3::verify_transcript(&group, &record, &run.transcript, &run.b) {
                Ok(()) => println!("verdict: accept"),
                Err(e) => println!("verdict: reject ({e})"),
            }
        }
    }
    ExitCode::SUCCESS
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
