//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::test_runner::{Config, TestRunner};

use common::props::{check_derivable, check_idempotent, check_unifiers, dy_term, kb_strategy, raw_mesg, term_pair};
use common::toy;
use srp_shapes::corpus::source;
use srp_shapes::model_lang::parse;
use srp_shapes::par::Parallelism;
use srp_shapes::srp3::{handshake_trials, malicious_trials, GroupParams};
use srp_shapes::strand::{isomorphic, load, search, Bounds, Outcome, Shape, Status, Strand};

const FAST_LIMIT: Duration = Duration::from_secs(60);
const SLOW_LIMIT: Duration = Duration::from_secs(120);
const TRIALS: usize = 1000;
const TRIAL_SEED: u64 = 2024;
const UNIFY_CASES: u32 = 10_000;
const DERIVE_CASES: u32 = 1000;
const CANON_CASES: u32 = 2000;

fn run(file: &str, pov: &str) -> (Outcome, Duration) {
    let povs = load(&parse(source(file).expect("corpus file")).expect("parses")).expect("loads");
    let p = povs.iter().find(|p| p.name == pov).expect("point of view");
    let start = Instant::now();
    let out = search(&p.skeleton, &Bounds::default(), Parallelism::available());
    (out, start.elapsed())
}

fn roles(s: &Shape) -> Vec<&str> {
    s.skeleton.strands.iter().map(|x| x.role.name.as_str()).collect()
}

fn full(s: &Strand) -> bool {
    s.height == s.role.len()
}

fn bind<'a>(s: &'a Strand, var: &str) -> &'a srp_shapes::Term {
    &s.inst[s.role.var(var).expect("role variable")]
}

/// A complete server strand and no client strand.
fn clientless(s: &Shape) -> Option<&Strand> {
    let strands = &s.skeleton.strands;
    if strands.iter().any(|x| x.role.name == "client") {
        return None;
    }
    strands.iter().find(|x| x.role.name == "server" && full(x))
}

fn distinct(shapes: &[Shape]) -> bool {
    shapes
        .iter()
        .enumerate()
        .all(|(i, a)| shapes[i + 1..].iter().all(|b| !isomorphic(&a.skeleton, &b.skeleton)))
}

fn timing(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {:.1}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs()))
    }
}

fn check(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn criterion_1() -> Result<String, String> {
    let (out, t) = run("srp3.lisp", "client-pov");
    timing(t, FAST_LIMIT)?;
    check(out.status == Status::Complete, || format!("status {}", out.status))?;
    check(out.shapes.len() == 2, || format!("{} shapes", out.shapes.len()))?;
    check(distinct(&out.shapes), || "isomorphic shapes".into())?;
    let first = &out.shapes[0];
    let mut r = roles(first);
    r.sort();
    check(r == ["client", "client-init", "server", "server-init"], || format!("first shape strands {r:?}"))?;
    let dashed = first.edges.iter().filter(|e| !e.state && e.style != srp_shapes::strand::EdgeStyle::Solid).count();
    check(dashed == 0, || format!("{dashed} dashed edges"))?;
    Ok(format!("2 shapes, first has 4 strands and solid edges ({:.2}s)", t.as_secs_f64()))
}

fn criterion_2() -> Result<String, String> {
    let (out, t) = run("srp3.lisp", "server-pov");
    timing(t, FAST_LIMIT)?;
    check(out.status == Status::Complete, || format!("status {}", out.status))?;
    check(out.shapes.len() == 2, || format!("{} shapes", out.shapes.len()))?;
    check(distinct(&out.shapes), || "isomorphic shapes".into())?;
    let servers: Vec<&Strand> = out.shapes[1].skeleton.strands.iter().filter(|s| s.role.name == "server").collect();
    let complete = servers.iter().filter(|s| full(s)).count();
    check(servers.len() >= 2 && complete == 1, || {
        format!("second shape server heights {:?}", servers.iter().map(|s| s.height).collect::<Vec<_>>())
    })?;
    let partial = servers.iter().filter(|s| !full(s)).map(|s| s.height).max().unwrap_or(0);
    check(partial < 7, || format!("partial server height {partial}"))?;
    Ok(format!("2 shapes, duplicate server of height {partial} ({:.2}s)", t.as_secs_f64()))
}

fn criterion_3() -> Result<String, String> {
    let mut notes = Vec::new();
    for (file, pov) in [("srp3-listener-x.lisp", "client-pov-listener-x"), ("srp3-listener-v.lisp", "server-pov-listener-v")] {
        let (out, t) = run(file, pov);
        timing(t, SLOW_LIMIT)?;
        check(out.status == Status::Complete && out.shapes.is_empty(), || {
            format!("{pov}: {} shapes, {}", out.shapes.len(), out.status)
        })?;
        notes.push(format!("{pov} empty ({:.2}s)", t.as_secs_f64()));
    }
    Ok(notes.join(", "))
}

fn criterion_4() -> Result<String, String> {
    let (leak, t1) = run("srp3-leak.lisp", "server-pov");
    timing(t1, SLOW_LIMIT)?;
    check(leak.status == Status::Complete, || format!("leak status {}", leak.status))?;
    let witness = leak.shapes.iter().position(|s| clientless(s).is_some_and(|sv| bind(sv, "b") == bind(sv, "u")));
    let Some(w) = witness else {
        return Err(format!("none of {} leak shapes is clientless with b = u", leak.shapes.len()));
    };
    let (neq, t2) = run("srp3-leak.lisp", "server-pov-neq");
    timing(t2, SLOW_LIMIT)?;
    check(neq.status == Status::Complete, || format!("neq status {}", neq.status))?;
    check(neq.shapes.iter().all(|s| clientless(s).is_none()), || "clientless shape despite b != u".into())?;
    check(neq.shapes.len() == 2, || format!("{} shapes with b != u", neq.shapes.len()))?;
    Ok(format!(
        "leak shape {w} of {} is clientless with b = u; 2 shapes with b != u ({:.2}s, {:.2}s)",
        leak.shapes.len(),
        t1.as_secs_f64(),
        t2.as_secs_f64()
    ))
}

fn criterion_5() -> Result<String, String> {
    let (out, t) = run("srp3-malserver.lisp", "malserver-pov");
    timing(t, SLOW_LIMIT)?;
    check(out.status == Status::Complete, || format!("status {}", out.status))?;
    let witness = out.shapes.iter().position(|s| {
        let r = roles(s);
        s.skeleton.realized()
            && clientless(s).is_some()
            && ["malserver", "client-init", "server-init"].iter().all(|x| r.contains(x))
    });
    match witness {
        Some(w) => Ok(format!("shape {w} of {} has no client strand ({:.2}s)", out.shapes.len(), t.as_secs_f64())),
        None => Err(format!("no witness among {} shapes", out.shapes.len())),
    }
}

fn criterion_6() -> Result<String, String> {
    let s = handshake_trials(&GroupParams::test(), TRIALS, TRIAL_SEED, Parallelism::available());
    check(s.runs == TRIALS && s.accepted == TRIALS && s.keys_equal == TRIALS, || format!("{s:?}"))?;
    Ok(format!("{TRIALS} runs, all keys equal and accepted"))
}

fn criterion_7() -> Result<String, String> {
    let s = malicious_trials(&GroupParams::test(), TRIALS, TRIAL_SEED, Parallelism::available());
    check(s.runs == TRIALS && s.accepted == TRIALS && s.secret_reads == 0, || format!("{s:?}"))?;
    Ok(format!("{TRIALS} fabricated transcripts accepted, 0 client secret reads"))
}

fn criterion_8() -> Result<String, String> {
    let runner = |cases| {
        TestRunner::new(Config {
            failure_persistence: None,
            ..Config::with_cases(cases)
        })
    };
    runner(UNIFY_CASES)
        .run(&term_pair(), |(a, b)| check_unifiers(&a, &b))
        .map_err(|e| format!("unification: {e}"))?;
    runner(DERIVE_CASES)
        .run(&(kb_strategy(), dy_term()), |(kb, g)| check_derivable(&kb, &g))
        .map_err(|e| format!("derivability: {e}"))?;
    runner(CANON_CASES)
        .run(&raw_mesg(), |t| check_idempotent(&t))
        .map_err(|e| format!("canonicalization: {e}"))?;
    let bounds = Bounds {
        max_strands: 3,
        ..Bounds::default()
    };
    for (name, pov) in toy::povs() {
        let (expected, _) = toy::enumerate(&pov, 3);
        let out = search(&pov, &bounds, Parallelism::available());
        let same = out.status == Status::Complete
            && out.shapes.len() == expected.len()
            && expected.iter().all(|e| out.shapes.iter().any(|s| toy::iso(&s.skeleton, e)));
        check(same, || format!("toy {name}: search {} vs enumeration {}", out.shapes.len(), expected.len()))?;
    }
    Ok(format!(
        "{UNIFY_CASES} unifications, {DERIVE_CASES} knowledge bases, {CANON_CASES} canonicalizations, toy search = enumeration"
    ))
}

fn main() -> ExitCode {
    let criteria: [fn() -> Result<String, String>; 8] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        match c() {
            Ok(note) => println!("criterion {}: pass {note}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
