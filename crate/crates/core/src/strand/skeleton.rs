use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::dolev_yao::KnowledgeBase;
use crate::model_lang::{validate_skeleton, Diagnostic, Dir, Event, ProtocolDef, SkeletonDef};
use crate::subst::Substitution;
use crate::term::{Term, Var};

use super::protocol::{Protocol, Role};

/// `(strand, position)`, both 0-based.
pub type Node = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strand {
    pub role: Arc<Role>,
    pub height: usize,
    /// Role variable to skeleton term.
    pub inst: BTreeMap<Var, Term>,
    /// The whole role trace under `inst`; only the first `height` events
    /// belong to the strand.
    trace: Vec<Event>,
}

impl Strand {
    pub fn new(role: Arc<Role>, height: usize, inst: BTreeMap<Var, Term>) -> Strand {
        let trace = role
            .trace
            .iter()
            .map(|e| Event::new(e.dir, e.msg.map_vars(&mut |v| inst[v].clone())))
            .collect();
        Strand {
            role,
            height,
            inst,
            trace,
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.trace[..self.height]
    }

    /// Instantiated event at any role position, including beyond `height`.
    pub fn event(&self, pos: usize) -> &Event {
        &self.trace[pos]
    }

    pub fn msg(&self, pos: usize) -> &Term {
        &self.trace[pos].msg
    }

    pub fn is_listener(&self) -> bool {
        self.role.listener
    }

    pub fn apply(&mut self, sigma: &Substitution) {
        for t in self.inst.values_mut() {
            *t = sigma.apply(t);
        }
        for e in &mut self.trace {
            e.msg = sigma.apply(&e.msg);
        }
    }

    /// First position within the height at which `t` occurs.
    pub fn first_occurrence(&self, t: &Term) -> Option<usize> {
        self.events().iter().position(|e| e.msg.occurs(t))
    }

    /// Reserved atoms of this strand: uniq-gen variables whose value shows
    /// up within the height.
    pub fn uniq_gen(&self) -> Vec<Term> {
        self.role
            .uniq_gen
            .iter()
            .map(|g| self.inst[g].clone())
            .filter(|t| self.first_occurrence(t).is_some())
            .collect()
    }
}

/// Transitive closure of the node ordering.
#[derive(Debug, Clone)]
pub struct Order {
    base: Vec<usize>,
    reach: Vec<Vec<bool>>,
}

impl Order {
    /// `None` if the ordering has a cycle.
    pub fn new(sk: &Skeleton) -> Option<Order> {
        let mut base = Vec::with_capacity(sk.strands.len());
        let mut n = 0;
        for s in &sk.strands {
            base.push(n);
            n += s.height;
        }
        let mut succ = vec![Vec::new(); n];
        for (i, s) in sk.strands.iter().enumerate() {
            for p in 1..s.height {
                succ[base[i] + p - 1].push(base[i] + p);
            }
        }
        for &((a, p), (b, q)) in &sk.edges {
            succ[base[a] + p].push(base[b] + q);
        }
        let mut reach = vec![vec![false; n]; n];
        for start in 0..n {
            let mut stack = succ[start].clone();
            while let Some(x) = stack.pop() {
                if !reach[start][x] {
                    reach[start][x] = true;
                    stack.extend(succ[x].iter().copied());
                }
            }
            if reach[start][start] {
                return None;
            }
        }
        Some(Order { base, reach })
    }

    /// Strictly before.
    pub fn before(&self, a: Node, b: Node) -> bool {
        self.reach[self.base[a.0] + a.1][self.base[b.0] + b.1]
    }
}

#[derive(Debug, Clone)]
pub struct Skeleton {
    pub protocol: Arc<Protocol>,
    pub strands: Vec<Strand>,
    /// Inter-strand ordering edges.
    pub edges: BTreeSet<(Node, Node)>,
    pub non_orig: Vec<Term>,
    pub neq: Vec<(Term, Term)>,
    /// Heights of the point-of-view strands, which are the first
    /// `pov.len()` strands.
    pub pov: Vec<usize>,
    pub next_var: u32,
    /// Explanation steps that led here.
    pub path: Vec<String>,
}

impl Skeleton {
    /// Instantiates a skeleton definition.  Role variables a strand leaves
    /// unbound keep their role names when free, else get a numbered suffix.
    pub fn from_def(def: &SkeletonDef, pdef: &ProtocolDef, protocol: Arc<Protocol>) -> Result<Skeleton, Vec<Diagnostic>> {
        let diags = validate_skeleton(def, pdef);
        if !diags.is_empty() {
            return Err(diags);
        }
        let mut used: BTreeSet<String> = def.vars.iter().map(|v| v.name.to_string()).collect();
        for st in &def.strands {
            for (_, t) in &st.bindings {
                used.extend(t.vars().into_iter().map(|v| v.name.to_string()));
            }
        }
        let mut sk = Skeleton {
            protocol: protocol.clone(),
            strands: Vec::new(),
            edges: BTreeSet::new(),
            non_orig: def.non_orig.clone(),
            neq: def.neq.clone(),
            pov: Vec::new(),
            next_var: 0,
            path: Vec::new(),
        };
        for st in &def.strands {
            let role = protocol.role(&st.role).expect("validated").clone();
            let mut inst = BTreeMap::new();
            for v in &role.vars {
                let t = match st.bindings.iter().find(|(b, _)| **b == *v.name) {
                    Some((_, t)) => t.clone(),
                    None if used.insert(v.name.to_string()) => Term::Var(v.clone()),
                    None => {
                        let name = sk.fresh_name(&v.name);
                        used.insert(name.clone());
                        Term::var(name, v.sort)
                    }
                };
                inst.insert(v.clone(), t);
            }
            sk.strands.push(Strand::new(role, st.height, inst));
        }
        for l in &def.listeners {
            let role = Role::listener();
            let inst = BTreeMap::from([(role.vars[0].clone(), l.clone())]);
            sk.strands.push(Strand::new(role, 2, inst));
        }
        sk.pov = sk.strands.iter().map(|s| s.height).collect();
        Ok(sk)
    }

    fn fresh_name(&mut self, base: &str) -> String {
        let n = format!("{base}-{}", self.next_var);
        self.next_var += 1;
        n
    }

    pub fn pov_len(&self) -> usize {
        self.pov.len()
    }

    pub fn event(&self, n: Node) -> &Event {
        self.strands[n.0].event(n.1)
    }

    pub fn msg(&self, n: Node) -> &Term {
        self.strands[n.0].msg(n.1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.strands
            .iter()
            .enumerate()
            .flat_map(|(i, s)| (0..s.height).map(move |p| (i, p)))
    }

    pub fn order(&self) -> Option<Order> {
        Order::new(self)
    }

    /// Adds a fresh instance of `role` with the given height; returns its
    /// index.
    pub fn add_strand(&mut self, role: Arc<Role>, height: usize) -> usize {
        let k = self.next_var;
        self.next_var += 1;
        let inst = role
            .vars
            .iter()
            .map(|v| (v.clone(), Term::var(format!("{}-{k}", v.name), v.sort)))
            .collect();
        self.strands.push(Strand::new(role, height, inst));
        self.strands.len() - 1
    }

    /// Applies `sigma`, then renames so that a variable bound to another
    /// variable keeps the name of whichever appeared first.  Returns the
    /// substitution actually applied.
    pub fn apply(&mut self, sigma: &Substitution) -> Substitution {
        if sigma.is_empty() {
            return Substitution::new();
        }
        let rank: HashMap<Var, usize> = self
            .vars_in_order()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, i))
            .collect();
        let older = |a: &Var, b: &Var| match (rank.get(a), rank.get(b)) {
            (Some(x), Some(y)) => x < y,
            (Some(_), None) => true,
            _ => false,
        };
        let mut rename: BTreeMap<Var, Var> = BTreeMap::new();
        for (v, t) in sigma.iter() {
            if let Some(w) = t.as_var() {
                if w.sort == v.sort && older(v, w) && rename.get(w).map_or(true, |cur| older(v, cur)) {
                    rename.insert(w.clone(), v.clone());
                }
            }
        }
        let mut applied = Substitution::new();
        let rho = |t: &Term| {
            t.map_vars(&mut |x| Term::Var(rename.get(x).cloned().unwrap_or_else(|| x.clone())))
        };
        for (v, t) in sigma.iter() {
            let t = rho(t);
            if t.as_var() != Some(v) {
                applied.insert_raw(v.clone(), t);
            }
        }
        for (w, v) in &rename {
            applied.insert_raw(w.clone(), Term::Var(v.clone()));
        }
        self.substitute(&applied);
        applied
    }

    fn substitute(&mut self, sigma: &Substitution) {
        for s in &mut self.strands {
            s.apply(sigma);
        }
        for t in &mut self.non_orig {
            *t = sigma.apply(t);
        }
        for (a, b) in &mut self.neq {
            *a = sigma.apply(a);
            *b = sigma.apply(b);
        }
    }

    /// Removes strand `i` with its edges.
    pub fn remove_strand(&mut self, i: usize) {
        self.strands.remove(i);
        if i < self.pov.len() {
            self.pov.remove(i);
        }
        let shift = |(s, p): Node| if s > i { (s - 1, p) } else { (s, p) };
        self.edges = self
            .edges
            .iter()
            .filter(|(a, b)| a.0 != i && b.0 != i)
            .map(|&(a, b)| (shift(a), shift(b)))
            .collect();
    }

    /// Removes strand `i`, keeping the ordering it induced between the
    /// remaining nodes.
    pub fn splice_out(&mut self, i: usize) {
        let into: Vec<(Node, usize)> = self.edges.iter().filter(|(a, b)| b.0 == i && a.0 != i).map(|&(a, b)| (a, b.1)).collect();
        let from: Vec<(usize, Node)> = self.edges.iter().filter(|(a, b)| a.0 == i && b.0 != i).map(|&(a, b)| (a.1, b)).collect();
        for &(a, k) in &into {
            for &(l, b) in &from {
                if k <= l && a.0 != b.0 {
                    self.edges.insert((a, b));
                }
            }
        }
        self.remove_strand(i);
    }

    /// Truncates strand `i` to `height`, dropping edges at removed nodes.
    pub fn set_height(&mut self, i: usize, height: usize) {
        self.strands[i].height = height;
        self.edges.retain(|(a, b)| !(a.0 == i && a.1 >= height) && !(b.0 == i && b.1 >= height));
    }

    /// Atoms reserved by uniq-gen declarations of strands in the skeleton.
    pub fn uniq_gen(&self) -> BTreeSet<Term> {
        self.strands.iter().flat_map(Strand::uniq_gen).collect()
    }

    /// Each reserved atom must be a variable whose first occurrence on its
    /// declaring strand is a send or init, and no other strand may
    /// originate it.
    pub fn origination_ok(&self) -> bool {
        let mut origin: BTreeMap<Term, Node> = BTreeMap::new();
        for (i, s) in self.strands.iter().enumerate() {
            for g in &s.role.uniq_gen {
                let t = &s.inst[g];
                let Some(p) = s.first_occurrence(t) else {
                    continue;
                };
                if !matches!(t, Term::Var(_) | Term::Atom(..)) || !s.event(p).dir.is_outbound() {
                    return false;
                }
                if let Some(o) = origin.insert(t.clone(), (i, p)) {
                    if o != (i, p) {
                        return false;
                    }
                }
            }
        }
        for (t, o) in &origin {
            for (j, s) in self.strands.iter().enumerate() {
                if j != o.0 {
                    if let Some(p) = s.first_occurrence(t) {
                        if s.event(p).dir.is_outbound() {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// No transmission carries a non-originating term.
    pub fn non_orig_ok(&self) -> bool {
        self.nodes().all(|n| {
            let e = self.event(n);
            e.dir != Dir::Send || !e.msg.carried().iter().any(|c| self.non_orig.contains(c))
        })
    }

    pub fn neq_ok(&self) -> bool {
        self.neq.iter().all(|(a, b)| a != b)
    }

    /// Skeleton well-formedness: acyclic order, disequalities, origination.
    pub fn check(&self) -> bool {
        self.neq_ok() && self.non_orig_ok() && self.origination_ok() && self.order().is_some()
    }

    /// Adversary knowledge at `n`: every transmission strictly before it.
    pub fn knowledge_before(&self, order: &Order, n: Node) -> KnowledgeBase {
        let sent = self
            .nodes()
            .filter(|&m| self.event(m).dir == Dir::Send && order.before(m, n))
            .map(|m| self.msg(m).clone());
        KnowledgeBase::new(sent, self.non_orig.iter().cloned(), self.uniq_gen())
    }

    /// A reception is realized when its message is derivable from earlier
    /// transmissions; an observation when an earlier init recorded the same
    /// state.
    pub fn node_realized(&self, order: &Order, n: Node) -> bool {
        let e = self.event(n);
        match e.dir {
            Dir::Recv => self.knowledge_before(order, n).derivable(&e.msg),
            Dir::Obsv => self
                .nodes()
                .any(|m| self.event(m).dir == Dir::Init && self.msg(m) == &e.msg && order.before(m, n)),
            Dir::Send | Dir::Init => true,
        }
    }

    /// Unrealized nodes in (strand, position) order.  Empty for a cyclic
    /// skeleton is never returned: a cyclic skeleton reports every node.
    pub fn unrealized(&self) -> Vec<Node> {
        match self.order() {
            Some(order) => self.nodes().filter(|&n| !self.node_realized(&order, n)).collect(),
            None => self.nodes().collect(),
        }
    }

    pub fn realized(&self) -> bool {
        match self.order() {
            Some(order) => self.nodes().all(|n| self.node_realized(&order, n)),
            None => false,
        }
    }

    /// Variables in order of first appearance: full traces of each strand,
    /// then assumptions.
    pub fn vars_in_order(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for s in &self.strands {
            for e in &s.trace {
                e.msg.vars_in_order(&mut out);
            }
        }
        for t in self.non_orig.iter().chain(self.neq.iter().flat_map(|(a, b)| [a, b])) {
            t.vars_in_order(&mut out);
        }
        out
    }

    /// Text identifying the skeleton up to variable renaming (strand order
    /// and node numbering are significant).
    pub fn key(&self) -> String {
        let names: HashMap<Var, Term> = self
            .vars_in_order()
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let t = Term::var(format!("#{i}"), v.sort);
                (v, t)
            })
            .collect();
        let mut rename = |v: &Var| names[v].clone();
        let mut out = String::new();
        for s in &self.strands {
            out.push_str(&format!("[{} {}", s.role.name, s.height));
            for e in &s.trace {
                out.push_str(&format!(" ({} {})", e.dir.as_str(), e.msg.map_vars(&mut rename)));
            }
            out.push(']');
        }
        out.push_str(&format!("{:?}", self.edges));
        for t in &self.non_orig {
            out.push_str(&format!(" no {}", t.map_vars(&mut rename)));
        }
        for (a, b) in &self.neq {
            out.push_str(&format!(" neq {} {}", a.map_vars(&mut rename), b.map_vars(&mut rename)));
        }
        out
    }
}
