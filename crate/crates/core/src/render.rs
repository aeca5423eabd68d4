//! Shape output: Graphviz DOT, JSON (schema 1) and plain text, plus a small
//! DOT well-formedness checker.

use std::fmt::Write;

use serde_json::{json, Value};

use crate::model_lang::Dir;
use crate::strand::{Bounds, EdgeStyle, Outcome, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Dot,
    Json,
    Text,
}

impl Format {
    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "dot" => Some(Format::Dot),
            "json" => Some(Format::Json),
            "text" => Some(Format::Text),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Dot => "dot",
            Format::Json => "json",
            Format::Text => "txt",
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn node_id((s, p): (usize, usize)) -> String {
    format!("n{s}_{p}")
}

fn colour(dir: Dir) -> &'static str {
    match dir {
        Dir::Send => "black",
        Dir::Recv => "blue",
        Dir::Init | Dir::Obsv => "grey",
    }
}

/// One cluster per strand, nodes top to bottom; transmissions black,
/// receptions blue, state events grey.  Inter-strand edges are solid or
/// dashed as annotated; state edges are grey.
pub fn dot(shape: &Shape, title: &str) -> String {
    let sk = &shape.skeleton;
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(title));
    let _ = writeln!(out, "  rankdir=TB;");
    let _ = writeln!(out, "  node [shape=circle, style=filled, label=\"\", width=0.25];");
    for (i, s) in sk.strands.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{i} {{");
        let _ = writeln!(out, "    label={};", quote(&format!("{i}: {} {}", s.role.name, s.height)));
        let _ = writeln!(out, "    color=lightgrey;");
        for p in 0..s.height {
            let e = s.event(p);
            let c = colour(e.dir);
            let _ = writeln!(
                out,
                "    {} [color={c}, fillcolor={c}, tooltip={}, xlabel={}];",
                node_id((i, p)),
                quote(&format!("{} {}", e.dir.as_str(), e.msg)),
                quote(&format!("{}.{}", i, p + 1)),
            );
        }
        for p in 1..s.height {
            let _ = writeln!(out, "    {} -> {} [color=lightgrey, arrowhead=none];", node_id((i, p - 1)), node_id((i, p)));
        }
        let _ = writeln!(out, "  }}");
    }
    for e in &shape.edges {
        let style = match e.style {
            EdgeStyle::Solid => "solid",
            EdgeStyle::Dashed => "dashed",
        };
        let colour = if e.state { "grey" } else { "black" };
        let _ = writeln!(
            out,
            "  {} -> {} [style={style}, color={colour}, constraint=false];",
            node_id(e.from),
            node_id(e.to)
        );
    }
    out.push_str("}\n");
    out
}

/// The JSON form of one shape.
pub fn shape_json(shape: &Shape) -> Value {
    let sk = &shape.skeleton;
    let mut nodes = Vec::new();
    let mut bindings = Vec::new();
    for (i, s) in sk.strands.iter().enumerate() {
        for p in 0..s.height {
            let e = s.event(p);
            nodes.push(json!({
                "strand": i,
                "pos": p,
                "dir": e.dir.as_str(),
                "msg": e.msg.to_string(),
            }));
        }
        let vars: serde_json::Map<String, Value> = s
            .inst
            .iter()
            .map(|(v, t)| (v.name.to_string(), Value::String(t.to_string())))
            .collect();
        bindings.push(json!({
            "strand": i,
            "role": &*s.role.name,
            "height": s.height,
            "vars": vars,
        }));
    }
    let edges: Vec<Value> = shape
        .edges
        .iter()
        .map(|e| {
            json!({
                "from": [e.from.0, e.from.1],
                "to": [e.to.0, e.to.1],
                "style": e.style,
                "state": e.state,
            })
        })
        .collect();
    json!({
        "nodes": nodes,
        "edges": edges,
        "bindings": bindings,
        "non_orig": sk.non_orig.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        "neq": sk.neq.iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect::<Vec<_>>(),
        "path": &sk.path,
    })
}

/// A whole analysis: point of view, bounds, status and shapes.
pub fn outcome_json(pov: &str, bounds: &Bounds, outcome: &Outcome) -> Value {
    json!({
        "schema": 1,
        "pov": pov,
        "bounds": bounds,
        "status": outcome.status,
        "shapes": outcome.shapes.iter().map(shape_json).collect::<Vec<_>>(),
    })
}

pub fn text(shape: &Shape) -> String {
    let sk = &shape.skeleton;
    let mut out = String::new();
    for (i, s) in sk.strands.iter().enumerate() {
        let _ = writeln!(out, "strand {i}: {} height {}", s.role.name, s.height);
        for (v, t) in &s.inst {
            let _ = writeln!(out, "  {} = {t}", v.name);
        }
        for p in 0..s.height {
            let e = s.event(p);
            let _ = writeln!(out, "  {i}.{} {} {}", p + 1, e.dir.as_str(), e.msg);
        }
    }
    for e in &shape.edges {
        let kind = if e.state {
            "state"
        } else {
            match e.style {
                EdgeStyle::Solid => "solid",
                EdgeStyle::Dashed => "dashed",
            }
        };
        let _ = writeln!(out, "edge {}.{} -> {}.{} {kind}", e.from.0, e.from.1 + 1, e.to.0, e.to.1 + 1);
    }
    out
}

pub fn render(shape: &Shape, title: &str, format: Format) -> String {
    match format {
        Format::Dot => dot(shape, title),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json!({ "schema": 1, "title": title, "shape": shape_json(shape) }))
                .expect("JSON values serialize");
            s.push('\n');
            s
        }
        Format::Text => text(shape),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Id(String),
    Punct(char),
    Edge(&'static str),
}

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let cs: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '/' && cs.get(i + 1) == Some(&'/') || c == '#' {
            while i < cs.len() && cs[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && cs.get(i + 1) == Some(&'*') {
            i += 2;
            while i + 1 < cs.len() && !(cs[i] == '*' && cs[i + 1] == '/') {
                i += 1;
            }
            if i + 1 >= cs.len() {
                return Err("unterminated comment".into());
            }
            i += 2;
        } else if "{}[];,=:".contains(c) {
            out.push(Tok::Punct(c));
            i += 1;
        } else if c == '-' && cs.get(i + 1) == Some(&'>') {
            out.push(Tok::Edge("->"));
            i += 2;
        } else if c == '-' && cs.get(i + 1) == Some(&'-') {
            out.push(Tok::Edge("--"));
            i += 2;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match cs.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => {
                        s.push('\\');
                        if let Some(&n) = cs.get(i + 1) {
                            s.push(n);
                        }
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            out.push(Tok::Id(s));
        } else if c.is_ascii_digit() || c == '.' || c == '-' {
            let start = i;
            i += 1;
            while i < cs.len() && (cs[i].is_ascii_digit() || cs[i] == '.') {
                i += 1;
            }
            let s: String = cs[start..i].iter().collect();
            if s.parse::<f64>().is_err() {
                return Err(format!("bad numeral {s}"));
            }
            out.push(Tok::Id(s));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Id(cs[start..i].iter().collect()));
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    i: usize,
    edge: &'static str,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), String> {
        if self.eat(&Tok::Punct(c)) {
            Ok(())
        } else {
            Err(format!("expected {c:?} at token {}", self.i))
        }
    }

    fn id(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Id(s)) => {
                let s = s.clone();
                self.i += 1;
                Ok(s)
            }
            _ => Err(format!("expected identifier at token {}", self.i)),
        }
    }

    fn keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Id(s)) if s.eq_ignore_ascii_case(k))
    }

    fn attr_list(&mut self) -> Result<(), String> {
        while self.eat(&Tok::Punct('[')) {
            while !self.eat(&Tok::Punct(']')) {
                self.id()?;
                self.expect('=')?;
                self.id()?;
                let _ = self.eat(&Tok::Punct(',')) || self.eat(&Tok::Punct(';'));
            }
        }
        Ok(())
    }

    fn stmt_list(&mut self) -> Result<(), String> {
        while !self.eat(&Tok::Punct('}')) {
            if self.peek().is_none() {
                return Err("missing '}'".into());
            }
            self.stmt()?;
            self.eat(&Tok::Punct(';'));
        }
        Ok(())
    }

    fn subgraph(&mut self) -> Result<(), String> {
        if self.keyword("subgraph") {
            self.i += 1;
            if matches!(self.peek(), Some(Tok::Id(_))) {
                self.id()?;
            }
        }
        self.expect('{')?;
        self.stmt_list()
    }

    fn endpoint(&mut self) -> Result<(), String> {
        if self.keyword("subgraph") || self.peek() == Some(&Tok::Punct('{')) {
            return self.subgraph();
        }
        self.id()?;
        if self.eat(&Tok::Punct(':')) {
            self.id()?;
            if self.eat(&Tok::Punct(':')) {
                self.id()?;
            }
        }
        Ok(())
    }

    fn stmt(&mut self) -> Result<(), String> {
        if self.keyword("graph") || self.keyword("node") || self.keyword("edge") {
            self.i += 1;
            if self.peek() != Some(&Tok::Punct('[')) {
                return Err(format!("expected attribute list at token {}", self.i));
            }
            return self.attr_list();
        }
        if let (Some(Tok::Id(_)), Some(Tok::Punct('='))) = (self.peek(), self.toks.get(self.i + 1)) {
            self.i += 2;
            self.id()?;
            return Ok(());
        }
        self.endpoint()?;
        while let Some(Tok::Edge(op)) = self.peek() {
            if *op != self.edge {
                return Err(format!("edge operator {op} in a graph using {}", self.edge));
            }
            self.i += 1;
            self.endpoint()?;
        }
        self.attr_list()
    }
}

/// Checks `src` against the DOT grammar: one `graph` or `digraph` with
/// balanced statement lists, well-formed attribute lists, and edge
/// operators matching the graph kind.
pub fn check_dot(src: &str) -> Result<(), String> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0, edge: "--" };
    if p.keyword("strict") {
        p.i += 1;
    }
    if p.keyword("digraph") {
        p.edge = "->";
    } else if !p.keyword("graph") {
        return Err("expected graph or digraph".into());
    }
    p.i += 1;
    if matches!(p.peek(), Some(Tok::Id(_))) {
        p.id()?;
    }
    p.expect('{')?;
    p.stmt_list()?;
    if p.i != p.toks.len() {
        return Err(format!("trailing tokens after token {}", p.i));
    }
    Ok(())
}
