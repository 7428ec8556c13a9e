//! Simplicial metric `(G,F)`-trees presented as marked graphs of groups.
//!
//! Every quotient vertex `v` comes with a chosen lift `ṽ` in the Bass–Serre
//! tree, and its group is the actual subgroup `Stab(ṽ) ≤ G` given by
//! generating words. An edge `e = (src, dst, t)` lifts to `[ṽ_src, t·ṽ_dst]`;
//! its group, when nontrivial, is `⟨gen⟩` with `gen ∈ Stab(ṽ_src)` and
//! `t⁻¹·gen·t ∈ Stab(ṽ_dst)`. Since all of this is expressed with elements of
//! `G` itself, paths in the tree are plain sequences `g₀ t₁^± g₁ …` and
//! distances come from removing backtracks.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::{q_from_json, q_to_json, Q};
use crate::subgroups::KuroshGraph;
use crate::words::{FactorSpec, Letter, Word};

/// Generating data for `Stab(ṽ)`: peripheral conjugates `c·G_i·c⁻¹` and
/// free words.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VertexGroup {
    pub peripherals: Vec<(usize, Word)>,
    pub free: Vec<Word>,
}

impl VertexGroup {
    pub fn trivial() -> Self {
        VertexGroup::default()
    }

    pub fn peripheral(factor: usize, conj: Word) -> Self {
        VertexGroup { peripherals: vec![(factor, conj)], free: vec![] }
    }

    pub fn free(ws: Vec<Word>) -> Self {
        VertexGroup { peripherals: vec![], free: ws }
    }

    pub fn is_trivial(&self) -> bool {
        self.peripherals.is_empty() && self.free.iter().all(Word::is_identity)
    }

    /// All generators as words of `G`.
    pub fn generators(&self, spec: &FactorSpec) -> Vec<Word> {
        let mut out = Vec::new();
        for (i, c) in &self.peripherals {
            for e in spec.factor(*i).generators() {
                out.push(spec.conj(c, &spec.letter(Letter::Per { factor: *i, elt: e })));
            }
        }
        out.extend(self.free.iter().filter(|w| !w.is_identity()).cloned());
        out
    }

    /// Order of the group when finite.
    pub fn order(&self, spec: &FactorSpec) -> Option<BigInt> {
        if self.is_trivial() {
            return Some(BigInt::one());
        }
        match (self.peripherals.as_slice(), self.free.iter().all(Word::is_identity)) {
            ([(i, _)], true) => spec.factor(*i).order().map(BigInt::from),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub length: Q,
    pub t: Word,
    /// Generator of the edge group at the `src` lift; `None` when trivial.
    pub group: Option<Word>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hop {
    pub edge: usize,
    pub forward: bool,
    /// Element of the stabilizer of the vertex just reached.
    pub elem: Word,
}

/// The tree path `g₀ t₁^± g₁ … t_k^± g_k` starting at the lift of `start`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub start: usize,
    pub head: Word,
    pub hops: Vec<Hop>,
}

impl Path {
    pub fn at(start: usize, head: Word) -> Path {
        Path { start, head, hops: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkedGraphOfGroups {
    pub spec: FactorSpec,
    pub vertices: Vec<VertexGroup>,
    pub edges: Vec<Edge>,
    pub base: usize,
    /// Loop at `base` with value `x_j`, one per free generator.
    pub free_marking: Vec<Path>,
    /// Path from `base` to some `v_i` with value `p` such that
    /// `p⁻¹·G_i·p ≤ Stab(ṽ_i)`.
    pub factor_marking: Vec<Path>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub axiom: String,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub is_grushko: bool,
    pub is_small: bool,
    pub is_very_small: bool,
    pub is_minimal: bool,
    pub tame_index: Option<BigInt>,
    pub violations: Vec<Violation>,
    /// Axioms whose search ran out of budget; never reported as violations.
    pub inconclusive: Vec<String>,
}

impl ValidationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "format": 1,
            "is_grushko": self.is_grushko,
            "is_small": self.is_small,
            "is_very_small": self.is_very_small,
            "is_minimal": self.is_minimal,
            "tame_index": self.tame_index.as_ref().map(|k| k.to_string()),
            "violations": self.violations.iter().map(|v| json!({"axiom": v.axiom, "witness": v.witness})).collect::<Vec<_>>(),
            "inconclusive": self.inconclusive,
        })
    }
}

fn tree_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::MalformedTree(msg.into()))
}

impl MarkedGraphOfGroups {
    // ---- local structure ----

    /// Vertex reached by crossing `e` in the given direction.
    pub fn far(&self, e: usize, forward: bool) -> usize {
        if forward {
            self.edges[e].dst
        } else {
            self.edges[e].src
        }
    }

    pub fn near(&self, e: usize, forward: bool) -> usize {
        self.far(e, !forward)
    }

    /// Edge ends at `v` as `(edge, outgoing)`: outgoing ends are `src` ends.
    /// A loop contributes both ends.
    pub fn ends(&self, v: usize) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.src == v {
                out.push((i, true));
            }
            if e.dst == v {
                out.push((i, false));
            }
        }
        out
    }

    /// Quotient valence.
    pub fn valence(&self, v: usize) -> usize {
        self.ends(v).len()
    }

    /// Stabilizer of the edge end as a subgroup of `Stab(ṽ)`: `gen` at the
    /// source, `t⁻¹·gen·t` at the target.
    pub fn end_group(&self, e: usize, outgoing: bool) -> Option<Word> {
        let ed = &self.edges[e];
        ed.group.as_ref().map(|g| {
            if outgoing {
                g.clone()
            } else {
                self.spec.mul_all([&self.spec.inverse(&ed.t), g, &ed.t])
            }
        })
    }

    pub fn stab_graph(&self, v: usize) -> KuroshGraph {
        KuroshGraph::build(&self.spec, &self.vertices[v].generators(&self.spec))
    }

    /// Kurosh rank of `Stab(ṽ)` relative to the induced factor system.
    pub fn stab_rank(&self, v: usize) -> usize {
        if self.vertices[v].is_trivial() {
            return 0;
        }
        self.stab_graph(v).kurosh_rank().rk_k()
    }

    /// `[Stab(ṽ) : Stab(end)]`, `None` when infinite.
    pub fn end_index(&self, v: usize, end: (usize, bool)) -> Option<BigInt> {
        let s = &self.spec;
        let vg = &self.vertices[v];
        match self.end_group(end.0, end.1) {
            None => vg.order(s),
            Some(c) => {
                if !vg.peripherals.is_empty() {
                    return None;
                }
                let (r, m) = s.max_root(&c).ok()?;
                let mut g = BigInt::zero();
                for w in vg.free.iter().filter(|w| !w.is_identity()) {
                    g = g.gcd(&s.is_power_of(w, &r)?);
                }
                if g.is_zero() {
                    return None;
                }
                Some(m / g)
            }
        }
    }

    /// Number of directions at `ṽ` in the Bass–Serre tree.
    pub fn t_valence(&self, v: usize) -> Option<BigInt> {
        self.ends(v).into_iter().map(|end| self.end_index(v, end)).sum()
    }

    // ---- paths ----

    pub fn path_end(&self, p: &Path) -> usize {
        p.hops.last().map(|h| self.far(h.edge, h.forward)).unwrap_or(p.start)
    }

    pub fn path_value(&self, p: &Path) -> Word {
        let s = &self.spec;
        let mut acc = p.head.clone();
        for h in &p.hops {
            let t = &self.edges[h.edge].t;
            let t = if h.forward { t.clone() } else { s.inverse(t) };
            acc = s.mul_all([&acc, &t, &h.elem]);
        }
        acc
    }

    pub fn path_length(&self, p: &Path) -> Q {
        p.hops.iter().map(|h| self.edges[h.edge].length.clone()).sum()
    }

    /// Per-edge crossing counts.
    pub fn path_counts(&self, p: &Path) -> Vec<i64> {
        let mut c = vec![0; self.edges.len()];
        for h in &p.hops {
            c[h.edge] += 1;
        }
        c
    }

    pub fn concat(&self, p: &Path, q: &Path) -> Path {
        debug_assert_eq!(self.path_end(p), q.start, "paths do not compose");
        let s = &self.spec;
        let mut out = p.clone();
        match out.hops.last_mut() {
            Some(h) => h.elem = s.mul(&h.elem, &q.head),
            None => out.head = s.mul(&out.head, &q.head),
        }
        out.hops.extend(q.hops.iter().cloned());
        out
    }

    pub fn reverse(&self, p: &Path) -> Path {
        let s = &self.spec;
        let k = p.hops.len();
        let head = if k == 0 { s.inverse(&p.head) } else { s.inverse(&p.hops[k - 1].elem) };
        let mut hops = Vec::with_capacity(k);
        for i in (0..k).rev() {
            let prev = if i == 0 { &p.head } else { &p.hops[i - 1].elem };
            hops.push(Hop { edge: p.hops[i].edge, forward: !p.hops[i].forward, elem: s.inverse(prev) });
        }
        Path { start: self.path_end(p), head, hops }
    }

    /// Multiplies the path on the left by an element of the start stabilizer.
    pub fn left_mul(&self, g: &Word, p: &Path) -> Path {
        let mut out = p.clone();
        out.head = self.spec.mul(g, &p.head);
        out
    }

    /// Loop at the base vertex representing `w`, read off the marking.
    pub fn word_path(&self, w: &Word) -> Path {
        let s = &self.spec;
        let mut acc = Path::at(self.base, Word::identity());
        for l in w.letters() {
            match l {
                Letter::Gen { index, exp } => {
                    let p = &self.free_marking[index - 1];
                    let p = if exp.is_positive() { p.clone() } else { self.reverse(p) };
                    let mut k = exp.abs();
                    while k.is_positive() {
                        acc = self.concat(&acc, &p);
                        k -= 1;
                    }
                }
                Letter::Per { factor, elt } => {
                    let p = &self.factor_marking[factor - 1];
                    let pv = self.path_value(p);
                    let e = s.letter(Letter::Per { factor: *factor, elt: elt.clone() });
                    let inner = Path::at(self.path_end(p), s.mul_all([&s.inverse(&pv), &e, &pv]));
                    acc = self.concat(&acc, p);
                    acc = self.concat(&acc, &inner);
                    acc = self.concat(&acc, &self.reverse(p));
                }
            }
        }
        acc
    }

    /// Removes backtracks. Crossing `e` forward, acting by `g`, then crossing
    /// back returns along the same edge iff `g ∈ ⟨t⁻¹·gen·t⟩` (and
    /// symmetrically `g ∈ ⟨gen⟩` the other way round).
    pub fn reduce_path(&self, p: &Path) -> Path {
        let s = &self.spec;
        let mut head = p.head.clone();
        let mut stack: Vec<Hop> = Vec::with_capacity(p.hops.len());
        for h in &p.hops {
            if let Some(top) = stack.last() {
                if top.edge == h.edge && top.forward != h.forward {
                    let ed = &self.edges[h.edge];
                    let (c, tt) = if top.forward {
                        (self.end_group(h.edge, false), ed.t.clone())
                    } else {
                        (ed.group.clone(), s.inverse(&ed.t))
                    };
                    let cancels = match &c {
                        None => top.elem.is_identity(),
                        Some(c) => s.is_power_of(&top.elem, c).is_some(),
                    };
                    if cancels {
                        let inner = s.mul_all([&tt, &top.elem, &s.inverse(&tt)]);
                        stack.pop();
                        match stack.last_mut() {
                            Some(prev) => prev.elem = s.mul_all([&prev.elem, &inner, &h.elem]),
                            None => head = s.mul_all([&head, &inner, &h.elem]),
                        }
                        continue;
                    }
                }
            }
            stack.push(h.clone());
        }
        Path { start: p.start, head, hops: stack }
    }

    /// `d(x̃, w·x̃)` for the base lift `x̃`.
    pub fn displacement(&self, w: &Word) -> Q {
        self.path_length(&self.reduce_path(&self.word_path(w)))
    }

    /// `‖w‖_T`, from `D₁ = d(x,wx)`, `D₋ = d(x,w⁻¹x)`, `D₂ = d(wx,w⁻¹x)`:
    /// `Δ = (D₁+D₋−D₂)/2` and `‖w‖ = max(0, D₁ − 2Δ)`.
    pub fn translation_length(&self, w: &Word) -> Q {
        let s = &self.spec;
        let d1 = self.displacement(w);
        let dm = self.displacement(&s.inverse(w));
        let d2 = self.displacement(&s.powi(w, 2));
        let delta = (&d1 + &dm - &d2) / Q::from_integer(BigInt::from(2));
        let l = &d1 - delta * Q::from_integer(BigInt::from(2));
        if l.is_negative() {
            Q::zero()
        } else {
            l
        }
    }

    pub fn length_spectrum(&self, words: &[Word]) -> Vec<Q> {
        words.iter().map(|w| self.translation_length(w)).collect()
    }

    /// Validates first, then computes the spectrum.
    pub fn checked_spectrum(&self, words: &[Word]) -> Result<Vec<Q>> {
        self.check_structure()?;
        for w in words {
            self.spec.check_word(w)?;
        }
        Ok(self.length_spectrum(words))
    }

    /// Translation length as a formal vector of edge counts, i.e. with every
    /// edge length treated as an independent variable.
    pub fn formal_length(&self, w: &Word) -> Vec<i64> {
        let s = &self.spec;
        let c1 = self.path_counts(&self.reduce_path(&self.word_path(w)));
        let c2 = self.path_counts(&self.reduce_path(&self.word_path(&s.powi(w, 2))));
        let diff: Vec<i64> = c2.iter().zip(&c1).map(|(a, b)| a - b).collect();
        if diff.iter().sum::<i64>() > 0 {
            diff
        } else {
            vec![0; diff.len()]
        }
    }

    pub fn quotient_volume(&self) -> Q {
        self.edges.iter().map(|e| e.length.clone()).sum()
    }

    pub fn scaled(&self, lambda: &Q) -> MarkedGraphOfGroups {
        let mut t = self.clone();
        for e in t.edges.iter_mut() {
            e.length = &e.length * lambda;
        }
        t
    }

    // ---- edits ----

    /// Splits edge `e` at distance `at` from its source. Returns the new
    /// vertex; the far half becomes a new last edge.
    pub fn subdivide(&mut self, e: usize, at: &Q) -> Result<usize> {
        let ed = self.edges[e].clone();
        if !at.is_positive() || *at >= ed.length {
            return Err(Error::Precondition("subdivision point must be interior".into()));
        }
        let w = self.vertices.len();
        self.vertices.push(match &ed.group {
            Some(g) => VertexGroup::free(vec![g.clone()]),
            None => VertexGroup::trivial(),
        });
        let e2 = self.edges.len();
        self.edges[e] = Edge { src: ed.src, dst: w, length: at.clone(), t: Word::identity(), group: ed.group.clone() };
        self.edges.push(Edge { src: w, dst: ed.dst, length: &ed.length - at, t: ed.t.clone(), group: ed.group.clone() });
        let rewrite = |p: &mut Path| {
            let mut hops = Vec::with_capacity(p.hops.len());
            for h in p.hops.drain(..) {
                if h.edge != e {
                    hops.push(h);
                } else if h.forward {
                    hops.push(Hop { edge: e, forward: true, elem: Word::identity() });
                    hops.push(Hop { edge: e2, forward: true, elem: h.elem });
                } else {
                    hops.push(Hop { edge: e2, forward: false, elem: Word::identity() });
                    hops.push(Hop { edge: e, forward: false, elem: h.elem });
                }
            }
            p.hops = hops;
        };
        for p in self.free_marking.iter_mut().chain(self.factor_marking.iter_mut()) {
            rewrite(p);
        }
        Ok(w)
    }

    // ---- validation ----

    /// Structural consistency of the group data and marking.
    pub fn check_structure(&self) -> Result<()> {
        let s = &self.spec;
        let nv = self.vertices.len();
        if nv == 0 || self.base >= nv {
            return tree_err("no vertices or base out of range");
        }
        if self.free_marking.len() != s.free_rank || self.factor_marking.len() != s.k() {
            return tree_err("marking must list every free generator and every factor");
        }
        for vg in &self.vertices {
            for (i, c) in &vg.peripherals {
                if *i == 0 || *i > s.k() {
                    return tree_err(format!("vertex group names factor {i}"));
                }
                s.check_word(c)?;
            }
            for w in &vg.free {
                s.check_word(w)?;
            }
        }
        let stabs: Vec<KuroshGraph> = (0..nv).map(|v| self.stab_graph(v)).collect();
        for (i, e) in self.edges.iter().enumerate() {
            if e.src >= nv || e.dst >= nv {
                return tree_err(format!("edge {i} has an endpoint out of range"));
            }
            if !e.length.is_positive() {
                return tree_err(format!("edge {i} has non-positive length"));
            }
            s.check_word(&e.t)?;
            if let Some(g) = &e.group {
                s.check_word(g)?;
                if g.is_identity() {
                    return tree_err(format!("edge {i} has an identity generator; use a trivial group"));
                }
                if !stabs[e.src].contains(g) {
                    return tree_err(format!("edge {i}: generator not in the source vertex group"));
                }
                if !stabs[e.dst].contains(&self.end_group(i, false).unwrap()) {
                    return tree_err(format!("edge {i}: conjugated generator not in the target vertex group"));
                }
            }
        }
        // connectivity
        let mut seen = vec![false; nv];
        let mut stack = vec![self.base];
        seen[self.base] = true;
        while let Some(v) = stack.pop() {
            for (e, out) in self.ends(v) {
                let w = self.far(e, out);
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|x| !x) {
            return tree_err("quotient graph is disconnected");
        }
        let check_path = |p: &Path, what: &str| -> Result<()> {
            if p.start >= nv || !stabs[p.start].contains(&p.head) {
                return tree_err(format!("{what}: head not in the start vertex group"));
            }
            let mut cur = p.start;
            for h in &p.hops {
                if h.edge >= self.edges.len() || self.near(h.edge, h.forward) != cur {
                    return tree_err(format!("{what}: hop does not leave the current vertex"));
                }
                cur = self.far(h.edge, h.forward);
                if !stabs[cur].contains(&h.elem) {
                    return tree_err(format!("{what}: hop element not in the vertex group"));
                }
            }
            Ok(())
        };
        for (j, p) in self.free_marking.iter().enumerate() {
            check_path(p, &format!("marking of x{}", j + 1))?;
            if p.start != self.base || self.path_end(p) != self.base {
                return tree_err(format!("marking of x{} is not a loop at the base", j + 1));
            }
            if self.path_value(p) != s.x(j + 1, 1) {
                return tree_err(format!("marking of x{} has the wrong value", j + 1));
            }
        }
        for (i, p) in self.factor_marking.iter().enumerate() {
            check_path(p, &format!("marking of factor {}", i + 1))?;
            if p.start != self.base {
                return tree_err(format!("marking of factor {} does not start at the base", i + 1));
            }
            let pv = self.path_value(p);
            let end = self.path_end(p);
            for e in s.factor(i + 1).generators() {
                let g = s.letter(Letter::Per { factor: i + 1, elt: e });
                if !stabs[end].contains(&s.mul_all([&s.inverse(&pv), &g, &pv])) {
                    return tree_err(format!("factor {} is not elliptic at the marked vertex", i + 1));
                }
            }
        }
        Ok(())
    }

    /// Small / very small / Grushko / tame validation. Tripod stabilizers
    /// are decided exactly: in a small tree with root-closed edge groups,
    /// two direction stabilizers at a vertex meet nontrivially only if they
    /// coincide, which reduces to conjugacy inside `Stab(ṽ)`. The budget
    /// bounds the conjugacy search used when a root is not closed.
    pub fn validate(&self, budget: usize) -> Result<ValidationReport> {
        if budget == 0 {
            return Err(Error::Precondition("budget must be at least 1".into()));
        }
        self.check_structure()?;
        let s = &self.spec;
        let mut violations = Vec::new();
        let mut inconclusive = Vec::new();
        let mut small = true;
        let mut roots_closed = true;
        let mut tame = BigInt::one();
        for (i, e) in self.edges.iter().enumerate() {
            let Some(g) = &e.group else { continue };
            if let Some((f, _)) = s.is_peripheral(g) {
                small = false;
                violations.push(Violation { axiom: "small".into(), witness: format!("edge {i} group {g} is conjugate into factor {f}") });
                continue;
            }
            let (r, m) = s.max_root(g)?;
            if !m.is_one() {
                roots_closed = false;
                violations.push(Violation {
                    axiom: "very_small.root_closed".into(),
                    witness: format!("edge {i} group generator {g} = ({r})^{m}"),
                });
            }
            tame = tame.lcm(&m);
        }
        let mut tripods_ok = true;
        if small {
            for v in 0..self.vertices.len() {
                match self.tripod_witness(v, budget) {
                    TripodCheck::Clean => {}
                    TripodCheck::Violated(w) => {
                        tripods_ok = false;
                        violations.push(Violation { axiom: "very_small.tripod".into(), witness: w });
                    }
                    TripodCheck::Inconclusive(w) => inconclusive.push(format!("very_small.tripod at vertex {v}: {w}")),
                }
            }
        }
        let is_very_small = small && roots_closed && tripods_ok && inconclusive.is_empty();

        let mut is_minimal = true;
        for v in 0..self.vertices.len() {
            if self.t_valence(v).is_some_and(|k| k <= BigInt::one()) {
                is_minimal = false;
                violations.push(Violation { axiom: "minimal".into(), witness: format!("vertex {v} has a single direction") });
            }
        }
        let mut is_grushko = is_very_small && is_minimal;
        for (i, e) in self.edges.iter().enumerate() {
            if e.group.is_some() {
                is_grushko = false;
                violations.push(Violation { axiom: "grushko.edge".into(), witness: format!("edge {i} has a nontrivial group") });
            }
        }
        for (v, vg) in self.vertices.iter().enumerate() {
            let ok = vg.is_trivial() || (vg.peripherals.len() == 1 && vg.free.iter().all(Word::is_identity));
            if !ok {
                is_grushko = false;
                violations.push(Violation {
                    axiom: "grushko.vertex".into(),
                    witness: format!("vertex {v} group is neither trivial nor a single peripheral conjugate"),
                });
            }
        }
        Ok(ValidationReport {
            is_grushko,
            is_small: small,
            is_very_small,
            is_minimal,
            tame_index: if small { Some(tame) } else { None },
            violations,
            inconclusive,
        })
    }

    fn tripod_witness(&self, v: usize, budget: usize) -> TripodCheck {
        let s = &self.spec;
        let stab = self.stab_graph(v);
        let gens: Vec<(usize, bool, Word)> = self
            .ends(v)
            .into_iter()
            .filter_map(|(e, o)| self.end_group(e, o).map(|c| (e, o, c)))
            .collect();
        // classes of ends whose generators are conjugate (up to inverse) in Stab(ṽ)
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut undecided = false;
        for i in 0..gens.len() {
            let mut placed = false;
            for cl in classes.iter_mut() {
                match conjugate_in(s, &stab, &gens[cl[0]].2, &gens[i].2, budget) {
                    Some(true) => {
                        cl.push(i);
                        placed = true;
                        break;
                    }
                    Some(false) => {}
                    None => undecided = true,
                }
            }
            if !placed {
                classes.push(vec![i]);
            }
        }
        if let Some(cl) = classes.iter().find(|cl| cl.len() >= 3) {
            let ends: Vec<String> = cl.iter().map(|&i| format!("{}{}", gens[i].0, if gens[i].1 { "+" } else { "-" })).collect();
            return TripodCheck::Violated(format!("vertex {v}: ends {} share the stabilizer of {}", ends.join(","), gens[cl[0]].2));
        }
        if undecided {
            return TripodCheck::Inconclusive("conjugacy search exhausted".into());
        }
        TripodCheck::Clean
    }

    // ---- serialization ----

    pub fn to_json(&self) -> Value {
        let s = &self.spec;
        let vertices: Vec<Value> = self
            .vertices
            .iter()
            .map(|vg| {
                json!({
                    "peripherals": vg.peripherals.iter().map(|(i, c)| json!({"factor": i, "conj": s.word_to_json(c)})).collect::<Vec<_>>(),
                    "free": vg.free.iter().map(|w| s.word_to_json(w)).collect::<Vec<_>>(),
                })
            })
            .collect();
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|e| {
                json!({
                    "src": e.src, "dst": e.dst, "length": q_to_json(&e.length),
                    "t": s.word_to_json(&e.t),
                    "group": e.group.as_ref().map(|g| s.word_to_json(g)),
                })
            })
            .collect();
        json!({
            "format": 1,
            "spec": s.to_json(),
            "base": self.base,
            "vertices": vertices,
            "edges": edges,
            "marking": {
                "free": self.free_marking.iter().map(|p| self.path_to_json(p)).collect::<Vec<_>>(),
                "factors": self.factor_marking.iter().map(|p| self.path_to_json(p)).collect::<Vec<_>>(),
            },
        })
    }

    pub fn path_to_json(&self, p: &Path) -> Value {
        let s = &self.spec;
        json!({
            "start": p.start,
            "head": s.word_to_json(&p.head),
            "hops": p.hops.iter().map(|h| json!({"edge": h.edge, "forward": h.forward, "elem": s.word_to_json(&h.elem)})).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<MarkedGraphOfGroups> {
        let bad = |m: &str| Error::Malformed(m.to_string());
        check_format(v)?;
        let spec = FactorSpec::from_json(v.get("spec").ok_or_else(|| bad("tree needs a spec"))?)?;
        let base = v.get("base").and_then(Value::as_u64).unwrap_or(0) as usize;
        let usize_of = |x: &Value, key: &str| -> Result<usize> {
            x.get(key).and_then(Value::as_u64).map(|u| u as usize).ok_or_else(|| bad(&format!("missing integer {key:?}")))
        };
        let mut vertices = Vec::new();
        for vv in v.get("vertices").and_then(Value::as_array).ok_or_else(|| bad("tree needs vertices"))? {
            let mut vg = VertexGroup::default();
            for p in vv.get("peripherals").and_then(Value::as_array).into_iter().flatten() {
                let conj = match p.get("conj") {
                    Some(c) => spec.word_from_json(c)?,
                    None => Word::identity(),
                };
                vg.peripherals.push((usize_of(p, "factor")?, conj));
            }
            for w in vv.get("free").and_then(Value::as_array).into_iter().flatten() {
                vg.free.push(spec.word_from_json(w)?);
            }
            vertices.push(vg);
        }
        let mut edges = Vec::new();
        for e in v.get("edges").and_then(Value::as_array).ok_or_else(|| bad("tree needs edges"))? {
            let group = match e.get("group") {
                None | Some(Value::Null) => None,
                Some(g) => Some(spec.word_from_json(g)?),
            };
            let t = match e.get("t") {
                Some(t) => spec.word_from_json(t)?,
                None => Word::identity(),
            };
            edges.push(Edge {
                src: usize_of(e, "src")?,
                dst: usize_of(e, "dst")?,
                length: q_from_json(e.get("length").ok_or_else(|| bad("edge needs a length"))?)?,
                t,
                group,
            });
        }
        let path = |p: &Value| -> Result<Path> {
            let head = match p.get("head") {
                Some(h) => spec.word_from_json(h)?,
                None => Word::identity(),
            };
            let mut hops = Vec::new();
            for h in p.get("hops").and_then(Value::as_array).into_iter().flatten() {
                hops.push(Hop {
                    edge: usize_of(h, "edge")?,
                    forward: h.get("forward").and_then(Value::as_bool).ok_or_else(|| bad("hop needs forward"))?,
                    elem: match h.get("elem") {
                        Some(x) => spec.word_from_json(x)?,
                        None => Word::identity(),
                    },
                });
            }
            Ok(Path { start: usize_of(p, "start")?, head, hops })
        };
        let marking = v.get("marking").ok_or_else(|| bad("tree needs a marking"))?;
        let mut free_marking = Vec::new();
        for p in marking.get("free").and_then(Value::as_array).into_iter().flatten() {
            free_marking.push(path(p)?);
        }
        let mut factor_marking = Vec::new();
        for p in marking.get("factors").and_then(Value::as_array).into_iter().flatten() {
            factor_marking.push(path(p)?);
        }
        let t = MarkedGraphOfGroups { spec, vertices, edges, base, free_marking, factor_marking };
        for (i, e) in t.edges.iter().enumerate() {
            if e.src >= t.vertices.len() || e.dst >= t.vertices.len() {
                return Err(bad(&format!("edge {i} endpoint out of range")));
            }
        }
        for p in t.free_marking.iter().chain(&t.factor_marking) {
            if p.start >= t.vertices.len() || p.hops.iter().any(|h| h.edge >= t.edges.len()) {
                return Err(bad("marking path refers to a missing vertex or edge"));
            }
        }
        Ok(t)
    }
}

pub(crate) fn check_format(v: &Value) -> Result<()> {
    match v.get("format") {
        None => Ok(()),
        Some(f) if f.as_u64() == Some(1) => Ok(()),
        Some(f) => Err(Error::Malformed(format!("unsupported format {f}"))),
    }
}

enum TripodCheck {
    Clean,
    Violated(String),
    Inconclusive(String),
}

/// Is `b` conjugate to `a^{±1}` by an element of the subgroup `H`? For
/// elements with cyclic centralizer the conjugator is unique up to powers of
/// the root, so membership of one conjugator decides it. When the root of
/// `a` lies outside `H` the coset may still meet `H`; those cases are
/// searched up to `budget` powers of the root.
fn conjugate_in(s: &FactorSpec, h: &KuroshGraph, a: &Word, b: &Word, budget: usize) -> Option<bool> {
    let (ca, pa) = s.cyclic_reduce(a);
    let (r, _) = s.max_root(a).ok()?;
    let root_in_h = h.contains(&r);
    let mut decided = Some(false);
    for b in [b.clone(), s.inverse(b)] {
        let (cb, pb) = s.cyclic_reduce(&b);
        if ca != cb {
            continue;
        }
        // b = pb·core·pb⁻¹ = (pb·pa⁻¹)·a·(pb·pa⁻¹)⁻¹
        let h0 = s.mul(&pb, &s.inverse(&pa));
        if h.contains(&h0) {
            return Some(true);
        }
        if !root_in_h {
            for k in 1..=budget as i64 {
                if h.contains(&s.mul(&h0, &s.powi(&r, k))) || h.contains(&s.mul(&h0, &s.powi(&r, -k))) {
                    return Some(true);
                }
            }
            decided = None;
        }
    }
    decided
}

/// Sort key used for deterministic fingerprints.
pub fn fingerprint(t: &MarkedGraphOfGroups) -> String {
    t.to_json().to_string()
}

/// Distinct nontrivial words of at most `max_syllables` letters over the
/// marking generators (`x_j^{±1}` and generators of each `G_i` with their
/// inverses), shortest first, at most `cap` of them.
pub fn probe_words(spec: &FactorSpec, max_syllables: usize, cap: usize) -> Vec<Word> {
    let mut alphabet: Vec<Word> = Vec::new();
    for j in 1..=spec.free_rank {
        alphabet.push(spec.x(j, 1));
        alphabet.push(spec.x(j, -1));
    }
    for i in 1..=spec.k() {
        let g = spec.factor(i);
        for a in g.generators() {
            for b in [a.clone(), g.inv(&a)] {
                let w = spec.letter(Letter::Per { factor: i, elt: b });
                if !alphabet.contains(&w) {
                    alphabet.push(w);
                }
            }
        }
    }
    let mut seen: std::collections::HashSet<Word> = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut layer = vec![Word::identity()];
    for _ in 0..max_syllables {
        let mut next = Vec::new();
        for u in &layer {
            for a in &alphabet {
                let w = spec.mul(u, a);
                if w.len() > u.len() && seen.insert(w.clone()) {
                    if out.len() >= cap {
                        return out;
                    }
                    out.push(w.clone());
                    next.push(w);
                }
            }
        }
        layer = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::rational::{q, qi};
    use crate::words::FactorModel;

    fn z2z3_n1() -> FactorSpec {
        FactorSpec::new(1, vec![FactorModel::FiniteCyclic { order: 2 }, FactorModel::FiniteCyclic { order: 3 }]).unwrap()
    }

    #[test]
    fn rose_lengths() {
        let s = z2z3_n1();
        let t = catalog::rose(&s);
        assert_eq!(t.translation_length(&s.p(1, 1)), qi(0));
        assert_eq!(t.translation_length(&s.x(1, 1)), qi(1));
        assert_eq!(t.translation_length(&s.mul(&s.p(1, 1), &s.x(1, 1))), qi(3));
        let f2 = FactorSpec::free(2);
        let r = catalog::rose(&f2);
        let ab = f2.mul(&f2.x(1, 1), &f2.x(2, 1));
        assert_eq!(r.length_spectrum(&[f2.x(1, 1), f2.x(2, 1), ab, Word::identity()]), vec![qi(1), qi(1), qi(2), qi(0)]);
        assert_eq!(r.quotient_volume(), qi(2));
    }

    #[test]
    fn barbell_lengths() {
        let t = catalog::barbell(q(1, 10));
        let s = &t.spec;
        let ab = s.mul(&s.x(1, 1), &s.x(2, 1));
        assert_eq!(t.length_spectrum(&[s.x(1, 1), s.x(2, 1), ab]), vec![q(1, 10), q(1, 10), q(11, 5)]);
        assert_eq!(t.quotient_volume(), q(6, 5));
    }

    #[test]
    fn validation_examples() {
        let f2 = FactorSpec::free(2);
        let r = catalog::rose(&f2).validate(4).unwrap();
        assert!(r.is_grushko && r.is_very_small && r.is_small);
        let e = catalog::edge_of_groups().validate(4).unwrap();
        assert!(e.is_very_small && !e.is_grushko);
        let p = catalog::peripheral_edge().validate(4).unwrap();
        assert!(p.is_grushko);
        let h = catalog::hnn().validate(4).unwrap();
        assert!(h.is_very_small && !h.is_grushko, "{h:?}");
        for d in 1..=4 {
            let c = catalog::tame_chain(d).validate(4).unwrap();
            assert!(c.is_small && !c.is_very_small, "{c:?}");
            assert_eq!(c.tame_index, Some(BigInt::from(1u64 << d)));
        }
    }

    #[test]
    fn hnn_lengths() {
        let t = catalog::hnn();
        let s = &t.spec;
        assert_eq!(t.translation_length(&s.x(1, 1)), qi(0));
        assert_eq!(t.translation_length(&s.x(2, 1)), qi(1));
        // a = s c s⁻¹ is elliptic, c·s crosses once
        assert_eq!(t.translation_length(&s.conj(&s.x(2, 1), &s.x(1, 1))), qi(0));
        assert_eq!(t.translation_length(&s.mul(&s.x(1, 1), &s.x(2, 1))), qi(1));
    }

    #[test]
    fn subdivision_keeps_lengths() {
        let mut t = catalog::hnn();
        let s = t.spec.clone();
        let ws = vec![s.x(1, 1), s.x(2, 1), s.mul(&s.x(1, 2), &s.x(2, -1)), s.mul(&s.x(2, 1), &s.x(1, 1))];
        let before = t.length_spectrum(&ws);
        t.subdivide(0, &q(1, 3)).unwrap();
        t.check_structure().unwrap();
        assert_eq!(t.length_spectrum(&ws), before);
    }

    #[test]
    fn json_round_trip() {
        for t in [catalog::hnn(), catalog::rose(&z2z3_n1()), catalog::tame_chain(2)] {
            let back = MarkedGraphOfGroups::from_json(&t.to_json()).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn bad_marking_rejected() {
        let mut t = catalog::barbell(q(1, 10));
        t.free_marking[1].hops.pop();
        assert!(matches!(t.validate(3), Err(Error::MalformedTree(_))));
    }
}
