use crate::term::{Sort, Term, Var};

use super::ast::*;
use super::sexp::{read_all, Pos, Sexp};
use super::{ParseError, ParseErrorKind};

const UNSUPPORTED_TOP: &[&str] = &["herald", "defgoal", "defmacro", "defgenrule", "defpred", "defpredicate"];
const UNSUPPORTED_PROTOCOL: &[&str] = &["defgenrule", "lang", "defpred"];
const UNSUPPORTED_ROLE: &[&str] = &[
    "non-orig", "pen-non-orig", "uniq-orig", "absent", "conf", "auth", "priority", "neq", "fn-of",
];
const UNSUPPORTED_SKELETON: &[&str] = &[
    "uniq-orig", "uniq-gen", "pen-non-orig", "absent", "precedes", "leadsto", "priority", "facts",
    "fn-of", "conf", "auth",
];
const UNSUPPORTED_TERM: &[&str] = &[
    "pubk", "privk", "invk", "bltk", "one", "rec", "idx", "akey", "sig", "enc-asym", "tag",
];

fn err<T>(kind: ParseErrorKind, pos: Pos) -> Result<T, ParseError> {
    Err(ParseError::new(kind, pos))
}

fn malformed<T>(what: impl Into<String>, pos: Pos) -> Result<T, ParseError> {
    err(ParseErrorKind::Malformed(what.into()), pos)
}

fn list<'a>(s: &'a Sexp, what: &str) -> Result<&'a [Sexp], ParseError> {
    match s {
        Sexp::List(xs, p) if xs.is_empty() => err(ParseErrorKind::EmptyForm, *p),
        Sexp::List(xs, _) => Ok(xs),
        other => malformed(format!("expected {what}"), other.pos()),
    }
}

fn symbol<'a>(s: &'a Sexp, what: &str) -> Result<&'a str, ParseError> {
    s.as_symbol()
        .map_or_else(|| malformed(format!("expected {what}"), s.pos()), Ok)
}

fn string<'a>(s: &'a Sexp, what: &str) -> Result<&'a str, ParseError> {
    match s {
        Sexp::Str(x, _) => Ok(x),
        _ => malformed(format!("expected {what}"), s.pos()),
    }
}

fn index(s: &Sexp, what: &str) -> Result<usize, ParseError> {
    match s {
        Sexp::Int(n, _) if *n >= 0 => Ok(*n as usize),
        _ => malformed(format!("expected {what}"), s.pos()),
    }
}

/// `(vars (a b sort) (c sort) ...)` body.
fn var_decls(items: &[Sexp], extra_sorts: &[&str], out: &mut Vec<Var>, extra: &mut Vec<(String, String)>) -> Result<(), ParseError> {
    for group in items {
        let g = list(group, "a variable declaration")?;
        if g.len() < 2 {
            return malformed("declaration needs names and a sort", group.pos());
        }
        let sort_sx = &g[g.len() - 1];
        let sort_name = symbol(sort_sx, "a sort")?;
        for n in &g[..g.len() - 1] {
            let name = symbol(n, "a variable name")?;
            if let Some(sort) = Sort::parse(sort_name) {
                out.push(Var::new(name, sort));
            } else if extra_sorts.contains(&sort_name) {
                extra.push((name.to_string(), sort_name.to_string()));
            } else {
                return err(ParseErrorKind::UnknownSort(sort_name.to_string()), sort_sx.pos());
            }
        }
    }
    Ok(())
}

/// Parses a term, resolving symbols through `lookup`.
pub fn term(s: &Sexp, lookup: &dyn Fn(&str) -> Option<Var>) -> Result<Term, ParseError> {
    let sort_err = |e, p| err(ParseErrorKind::Sort(e), p);
    match s {
        Sexp::Symbol(name, p) => match lookup(name) {
            Some(v) => Ok(Term::Var(v)),
            None => err(ParseErrorKind::UndeclaredVariable(name.clone()), *p),
        },
        Sexp::Str(x, _) => Ok(Term::tag(x.as_str())),
        Sexp::Int(_, p) => malformed("numbers are not terms", *p),
        Sexp::List(xs, p) => {
            let head = match xs.first() {
                None => return err(ParseErrorKind::EmptyForm, *p),
                Some(h) => symbol(h, "a term constructor")?,
            };
            let args = xs[1..]
                .iter()
                .map(|a| term(a, lookup))
                .collect::<Result<Vec<_>, _>>()?;
            let arity = |ok: bool, what: &str| if ok { Ok(()) } else { malformed(format!("`{head}` takes {what}"), *p) };
            match head {
                "gen" => {
                    arity(args.is_empty(), "no arguments")?;
                    Ok(Term::Gen)
                }
                "exp" => {
                    arity(args.len() == 2, "a base and an exponent")?;
                    let mut it = args.into_iter();
                    Term::exp(it.next().unwrap(), it.next().unwrap()).or_else(|e| sort_err(e, *p))
                }
                "mul" => {
                    arity(!args.is_empty(), "at least one exponent")?;
                    Term::mul(args).or_else(|e| sort_err(e, *p))
                }
                "cat" => {
                    arity(!args.is_empty(), "at least one argument")?;
                    Ok(Term::cat(args))
                }
                "enc" => {
                    arity(args.len() >= 2, "a payload and a key")?;
                    let mut args = args;
                    let key = args.pop().unwrap();
                    Ok(Term::enc(Term::cat(args), key))
                }
                "hash" => {
                    arity(!args.is_empty(), "at least one argument")?;
                    Ok(Term::hash(args))
                }
                "ltk" => {
                    arity(args.len() == 2, "two names")?;
                    let mut it = args.into_iter();
                    Term::ltk(it.next().unwrap(), it.next().unwrap()).or_else(|e| sort_err(e, *p))
                }
                h if UNSUPPORTED_TERM.contains(&h) => err(ParseErrorKind::UnsupportedForm(h.into()), *p),
                h => err(ParseErrorKind::UnknownForm(h.into()), *p),
            }
        }
    }
}

fn lookup_in(vars: &[Var]) -> impl Fn(&str) -> Option<Var> + '_ {
    move |n| vars.iter().find(|v| &*v.name == n).cloned()
}

fn role(xs: &[Sexp], pos: Pos) -> Result<RoleDef, ParseError> {
    if xs.len() < 2 {
        return malformed("defrole needs a name", pos);
    }
    let name = symbol(&xs[1], "a role name")?.to_string();
    let mut vars = Vec::new();
    for item in &xs[2..] {
        let it = list(item, "a role clause")?;
        if it[0].as_symbol() == Some("vars") {
            var_decls(&it[1..], &[], &mut vars, &mut Vec::new())?;
        }
    }
    let mut trace = Vec::new();
    let mut uniq_gen = Vec::new();
    let lookup = lookup_in(&vars);
    for item in &xs[2..] {
        let it = list(item, "a role clause")?;
        match symbol(&it[0], "a role clause")? {
            "vars" | "comment" => {}
            "trace" => {
                for ev in &it[1..] {
                    let e = list(ev, "an event")?;
                    let dir = match symbol(&e[0], "an event")? {
                        "send" => Dir::Send,
                        "recv" => Dir::Recv,
                        "init" => Dir::Init,
                        "obsv" => Dir::Obsv,
                        d @ ("load" | "stor" | "tran") => {
                            return err(ParseErrorKind::UnsupportedForm(d.into()), ev.pos())
                        }
                        d => return err(ParseErrorKind::UnknownForm(d.into()), ev.pos()),
                    };
                    if e.len() != 2 {
                        return malformed("an event carries exactly one term", ev.pos());
                    }
                    trace.push(Event::new(dir, term(&e[1], &lookup)?));
                }
            }
            "uniq-gen" => {
                for a in &it[1..] {
                    uniq_gen.push(term(a, &lookup)?);
                }
            }
            k if UNSUPPORTED_ROLE.contains(&k) => {
                return err(ParseErrorKind::UnsupportedForm(k.into()), item.pos())
            }
            k => return err(ParseErrorKind::UnknownForm(k.into()), item.pos()),
        }
    }
    drop(lookup);
    Ok(RoleDef {
        name,
        vars,
        trace,
        uniq_gen,
        pos,
    })
}

fn pred(s: &Sexp, strands: &[String], vars: &[Var]) -> Result<Pred, ParseError> {
    let xs = list(s, "a predicate")?;
    if symbol(&xs[0], "a predicate")? != "p" {
        return err(ParseErrorKind::UnsupportedForm(xs[0].as_symbol().unwrap().into()), s.pos());
    }
    let strand = |x: &Sexp| -> Result<String, ParseError> {
        let z = symbol(x, "a strand variable")?;
        if strands.iter().any(|s| s == z) {
            Ok(z.to_string())
        } else {
            err(ParseErrorKind::UndeclaredVariable(z.into()), x.pos())
        }
    };
    match xs.len() {
        4 => Ok(Pred::Position {
            role: string(&xs[1], "a role name string")?.to_string(),
            strand: strand(&xs[2])?,
            index: index(&xs[3], "a node index")?,
        }),
        5 => {
            let value = symbol(&xs[4], "a variable")?;
            if !vars.iter().any(|v| &*v.name == value) {
                return err(ParseErrorKind::UndeclaredVariable(value.into()), xs[4].pos());
            }
            Ok(Pred::Param {
                role: string(&xs[1], "a role name string")?.to_string(),
                param: string(&xs[2], "a parameter name string")?.to_string(),
                strand: strand(&xs[3])?,
                value: value.to_string(),
            })
        }
        _ => malformed("predicate has the wrong number of arguments", s.pos()),
    }
}

fn rule(xs: &[Sexp], pos: Pos) -> Result<RuleDef, ParseError> {
    if xs.len() != 3 {
        return malformed("defrule takes a name and one formula", pos);
    }
    let name = symbol(&xs[1], "a rule name")?.to_string();
    let f = list(&xs[2], "a formula")?;
    if symbol(&f[0], "a quantifier")? != "forall" || f.len() != 3 {
        return err(ParseErrorKind::UnsupportedForm("rule formula".into()), xs[2].pos());
    }
    let mut vars = Vec::new();
    let mut extra = Vec::new();
    var_decls(list(&f[1], "quantified variables")?, &["strd"], &mut vars, &mut extra)?;
    let strand_vars: Vec<String> = extra.into_iter().map(|(n, _)| n).collect();
    let imp = list(&f[2], "an implication")?;
    if imp[0].as_symbol() != Some("implies") || imp.len() != 3 {
        return err(ParseErrorKind::UnsupportedForm("rule body".into()), f[2].pos());
    }
    let hyp = list(&imp[1], "a hypothesis")?;
    let hypothesis = if hyp[0].as_symbol() == Some("and") {
        hyp[1..].iter().map(|p| pred(p, &strand_vars, &vars)).collect::<Result<_, _>>()?
    } else {
        vec![pred(&imp[1], &strand_vars, &vars)?]
    };
    let c = list(&imp[2], "a conclusion")?;
    if c[0].as_symbol() != Some("=") || c.len() != 3 {
        return err(ParseErrorKind::UnsupportedForm("rule conclusion".into()), imp[2].pos());
    }
    let side = |x: &Sexp| -> Result<String, ParseError> {
        let z = symbol(x, "a strand variable")?;
        if strand_vars.iter().any(|s| s == z) {
            Ok(z.to_string())
        } else {
            err(ParseErrorKind::UndeclaredVariable(z.into()), x.pos())
        }
    };
    Ok(RuleDef {
        name,
        conclusion: (side(&c[1])?, side(&c[2])?),
        strand_vars,
        vars,
        hypothesis,
        pos,
    })
}

fn protocol(xs: &[Sexp], pos: Pos) -> Result<ProtocolDef, ParseError> {
    if xs.len() < 3 {
        return malformed("defprotocol needs a name and an algebra", pos);
    }
    let name = symbol(&xs[1], "a protocol name")?.to_string();
    let algebra = symbol(&xs[2], "an algebra name")?.to_string();
    let mut roles = Vec::new();
    let mut rules = Vec::new();
    for item in &xs[3..] {
        let it = list(item, "a protocol clause")?;
        match symbol(&it[0], "a protocol clause")? {
            "defrole" => roles.push(role(it, item.pos())?),
            "defrule" => rules.push(rule(it, item.pos())?),
            "comment" => {}
            k if UNSUPPORTED_PROTOCOL.contains(&k) => {
                return err(ParseErrorKind::UnsupportedForm(k.into()), item.pos())
            }
            k => return err(ParseErrorKind::UnknownForm(k.into()), item.pos()),
        }
    }
    Ok(ProtocolDef {
        name,
        algebra,
        roles,
        rules,
        pos,
    })
}

/// Resolves a skeleton symbol: declared skeleton variables first, then
/// role variables left unbound on one of the skeleton's strands, which keep
/// their role names.
fn skeleton_lookup<'a>(
    vars: &'a [Var],
    strands: &'a [StrandDef],
    proto: Option<&'a ProtocolDef>,
) -> impl Fn(&str) -> Option<Var> + 'a {
    move |n| {
        if let Some(v) = vars.iter().find(|v| &*v.name == n) {
            return Some(v.clone());
        }
        let proto = proto?;
        strands.iter().find_map(|s| {
            let role = proto.role(&s.role)?;
            let v = role.var(n)?;
            if s.bindings.iter().any(|(b, _)| b == n) {
                None
            } else {
                Some(v.clone())
            }
        })
    }
}

fn skeleton(xs: &[Sexp], pos: Pos, known: &[ProtocolDef]) -> Result<SkeletonDef, ParseError> {
    if xs.len() < 2 {
        return malformed("defskeleton needs a protocol name", pos);
    }
    let protocol = symbol(&xs[1], "a protocol name")?.to_string();
    let proto = known.iter().rev().find(|p| p.name == protocol);
    let mut vars = Vec::new();
    let mut items = Vec::new();
    for item in &xs[2..] {
        let it = list(item, "a skeleton clause")?;
        let k = symbol(&it[0], "a skeleton clause")?;
        match k {
            "vars" => var_decls(&it[1..], &[], &mut vars, &mut Vec::new())?,
            "defstrand" | "deflistener" | "non-orig" | "neq" | "comment" => items.push((k, it, item.pos())),
            k if UNSUPPORTED_SKELETON.contains(&k) => {
                return err(ParseErrorKind::UnsupportedForm(k.into()), item.pos())
            }
            k => return err(ParseErrorKind::UnknownForm(k.into()), item.pos()),
        }
    }
    let mut strands = Vec::new();
    for (k, it, p) in &items {
        if *k != "defstrand" {
            continue;
        }
        if it.len() < 3 {
            return malformed("defstrand needs a role and a height", *p);
        }
        let role = symbol(&it[1], "a role name")?.to_string();
        let height = index(&it[2], "a strand height")?;
        let lookup = lookup_in(&vars);
        let mut bindings = Vec::new();
        for b in &it[3..] {
            let bx = list(b, "a binding")?;
            if bx.len() != 2 {
                return malformed("a binding pairs a role variable with a term", b.pos());
            }
            bindings.push((symbol(&bx[0], "a role variable")?.to_string(), term(&bx[1], &lookup)?));
        }
        strands.push(StrandDef {
            role,
            height,
            bindings,
            pos: *p,
        });
    }
    let lookup = skeleton_lookup(&vars, &strands, proto);
    let mut listeners = Vec::new();
    let mut non_orig = Vec::new();
    let mut neq = Vec::new();
    for (k, it, p) in &items {
        match *k {
            "deflistener" => {
                if it.len() != 2 {
                    return malformed("deflistener takes one term", *p);
                }
                listeners.push(term(&it[1], &lookup)?);
            }
            "non-orig" => {
                for a in &it[1..] {
                    non_orig.push(term(a, &lookup)?);
                }
            }
            "neq" => {
                for pair in &it[1..] {
                    let px = list(pair, "a pair of terms")?;
                    if px.len() != 2 {
                        return malformed("neq takes pairs of terms", pair.pos());
                    }
                    neq.push((term(&px[0], &lookup)?, term(&px[1], &lookup)?));
                }
            }
            _ => {}
        }
    }
    drop(lookup);
    Ok(SkeletonDef {
        protocol,
        vars,
        strands,
        listeners,
        non_orig,
        neq,
        pos,
    })
}

/// Parses a model file.  Skeletons may refer to protocols defined earlier
/// in the same text.
pub fn parse(text: &str) -> Result<ModelFile, ParseError> {
    parse_with(text, &[])
}

/// Like [`parse`], with protocols from elsewhere in scope for skeletons.
pub fn parse_with(text: &str, context: &[ProtocolDef]) -> Result<ModelFile, ParseError> {
    let mut known: Vec<ProtocolDef> = context.to_vec();
    let mut defs = Vec::new();
    for form in read_all(text)? {
        let xs = list(&form, "a top-level form")?;
        match symbol(&xs[0], "a top-level form")? {
            "defprotocol" => {
                let p = protocol(xs, form.pos())?;
                known.push(p.clone());
                defs.push(Definition::Protocol(p));
            }
            "defskeleton" => defs.push(Definition::Skeleton(skeleton(xs, form.pos(), &known)?)),
            "comment" => {}
            k if UNSUPPORTED_TOP.contains(&k) => {
                return err(ParseErrorKind::UnsupportedForm(k.into()), form.pos())
            }
            k => return err(ParseErrorKind::UnknownForm(k.into()), form.pos()),
        }
    }
    Ok(ModelFile { defs })
}
