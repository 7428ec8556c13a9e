//! Folded Kurosh graphs of finitely generated subgroups `H ≤ G`.
//!
//! The graph is the quotient by `H` of the `H`-minimal part of the standard
//! free splitting of `G`: free vertices carry `x_j` edges, and each factor
//! vertex `g·v_i` appears as a *cluster* carrying `H ∩ Stab` (a subgroup
//! `K ≤ G_i`) with free vertices attached at labels `h ∈ G_i`. Reading a
//! peripheral letter `e` at a vertex attached at `h` exits at label `h·e`;
//! labels only matter up to the coset `K·h`.

use std::collections::{BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::words::{big_to_json, FactorModel, FactorSpec, Letter, Word};

/// A subgroup of a factor model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactorSubgroup {
    /// Closed set of element ids of a finite factor.
    Finite(BTreeSet<BigInt>),
    /// `nℤ` inside ℤ, `n ≥ 0`.
    Multiples(BigInt),
}

impl FactorSubgroup {
    pub fn trivial(g: &FactorModel) -> Self {
        match g {
            FactorModel::InfiniteCyclic => FactorSubgroup::Multiples(BigInt::zero()),
            _ => FactorSubgroup::Finite([g.identity()].into_iter().collect()),
        }
    }

    pub fn is_trivial(&self) -> bool {
        match self {
            FactorSubgroup::Finite(s) => s.len() == 1,
            FactorSubgroup::Multiples(n) => n.is_zero(),
        }
    }

    pub fn contains(&self, a: &BigInt) -> bool {
        match self {
            FactorSubgroup::Finite(s) => s.contains(a),
            FactorSubgroup::Multiples(n) => {
                if n.is_zero() {
                    a.is_zero()
                } else {
                    a.is_multiple_of(n)
                }
            }
        }
    }

    /// Smallest subgroup containing `self` and `a`.
    pub fn adjoin(&self, g: &FactorModel, a: &BigInt) -> Self {
        match self {
            FactorSubgroup::Multiples(n) => FactorSubgroup::Multiples(n.gcd(a)),
            FactorSubgroup::Finite(s) => {
                if s.contains(a) {
                    return self.clone();
                }
                let mut gens: Vec<BigInt> = s.iter().cloned().collect();
                gens.push(a.clone());
                let mut seen: BTreeSet<BigInt> = [g.identity()].into_iter().collect();
                let mut queue: VecDeque<BigInt> = [g.identity()].into_iter().collect();
                while let Some(x) = queue.pop_front() {
                    for y in &gens {
                        let z = g.mul(&x, y);
                        if seen.insert(z.clone()) {
                            queue.push_back(z);
                        }
                    }
                }
                FactorSubgroup::Finite(seen)
            }
        }
    }

    /// `s·K·s⁻¹`.
    pub fn conjugate(&self, g: &FactorModel, s: &BigInt) -> Self {
        match self {
            FactorSubgroup::Multiples(_) => self.clone(),
            FactorSubgroup::Finite(set) => {
                let si = g.inv(s);
                FactorSubgroup::Finite(set.iter().map(|k| g.mul(&g.mul(s, k), &si)).collect())
            }
        }
    }

    pub fn join(&self, g: &FactorModel, other: &Self) -> Self {
        match other {
            FactorSubgroup::Multiples(n) => self.adjoin(g, n),
            FactorSubgroup::Finite(set) => set.iter().fold(self.clone(), |acc, x| acc.adjoin(g, x)),
        }
    }

    /// Canonical representative of the right coset `K·h`.
    pub fn coset_key(&self, g: &FactorModel, h: &BigInt) -> BigInt {
        match self {
            FactorSubgroup::Multiples(n) if n.is_zero() => h.clone(),
            FactorSubgroup::Multiples(n) => h.mod_floor(n),
            FactorSubgroup::Finite(set) => set.iter().map(|k| g.mul(k, h)).min().unwrap(),
        }
    }

    /// A generating set (a single element for cyclic models).
    pub fn generators(&self, g: &FactorModel) -> Vec<BigInt> {
        match self {
            FactorSubgroup::Multiples(n) if n.is_zero() => vec![],
            FactorSubgroup::Multiples(n) => vec![n.abs()],
            FactorSubgroup::Finite(set) => {
                let mut gens = Vec::new();
                let mut cur = FactorSubgroup::trivial(g);
                for x in set {
                    if !cur.contains(x) {
                        cur = cur.adjoin(g, x);
                        gens.push(x.clone());
                    }
                }
                gens
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            FactorSubgroup::Finite(s) => json!({"elements": s.iter().map(big_to_json).collect::<Vec<_>>()}),
            FactorSubgroup::Multiples(n) => json!({"multiples_of": big_to_json(n)}),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Cluster {
    pub factor: usize,
    pub sub: FactorSubgroup,
    /// `(free vertex, label)`.
    pub attachments: Vec<(usize, BigInt)>,
}

/// Folded subgroup graph. Vertex 0 is the basepoint.
#[derive(Clone, Debug)]
pub struct KuroshGraph {
    spec: FactorSpec,
    pub vertex_count: usize,
    /// `(u, j, v)`: an `x_j` edge from `u` to `v`.
    pub edges: Vec<(usize, usize, usize)>,
    pub clusters: Vec<Cluster>,
}

/// Kurosh decomposition data.
#[derive(Clone, Debug, PartialEq)]
pub struct KuroshRank {
    pub free_rank: usize,
    /// `(factor, conjugator)` per cluster with nontrivial carried subgroup.
    pub peripherals: Vec<(usize, Word)>,
}

impl KuroshRank {
    pub fn rk_k(&self) -> usize {
        self.free_rank + self.peripherals.len()
    }
}

struct Builder<'a> {
    spec: &'a FactorSpec,
    parent: Vec<usize>,
    edges: Vec<(usize, usize, usize)>,
    clusters: Vec<Option<Cluster>>,
}

impl<'a> Builder<'a> {
    fn new_vertex(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            // keep the smaller id so the basepoint survives as 0
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.parent[hi] = lo;
        }
    }

    fn add_word_loop(&mut self, w: &Word) {
        let mut cur = 0;
        let n = w.letters().len();
        for (pos, l) in w.letters().iter().enumerate() {
            let last = pos + 1 == n;
            match l {
                Letter::Gen { index, exp } => {
                    let steps: usize = exp.abs().try_into().expect("exponent too large for a subgroup graph");
                    for s in 0..steps {
                        let nxt = if last && s + 1 == steps { 0 } else { self.new_vertex() };
                        if exp.is_positive() {
                            self.edges.push((cur, *index, nxt));
                        } else {
                            self.edges.push((nxt, *index, cur));
                        }
                        cur = nxt;
                    }
                }
                Letter::Per { factor, elt } => {
                    let nxt = if last { 0 } else { self.new_vertex() };
                    let g = self.spec.factor(*factor);
                    self.clusters.push(Some(Cluster {
                        factor: *factor,
                        sub: FactorSubgroup::trivial(g),
                        attachments: vec![(cur, g.identity()), (nxt, elt.clone())],
                    }));
                    cur = nxt;
                }
            }
        }
    }

    fn canonicalize(&mut self) {
        let mut edges = std::mem::take(&mut self.edges);
        for e in edges.iter_mut() {
            e.0 = self.find(e.0);
            e.2 = self.find(e.2);
        }
        edges.sort();
        edges.dedup();
        self.edges = edges;
        for ci in 0..self.clusters.len() {
            if let Some(mut c) = self.clusters[ci].take() {
                for a in c.attachments.iter_mut() {
                    a.0 = self.find(a.0);
                }
                self.clusters[ci] = Some(c);
            }
        }
    }

    /// Performs one fold; returns false when the graph is folded.
    fn fold_once(&mut self) -> bool {
        self.canonicalize();
        // duplicate x-edges
        for i in 0..self.edges.len() {
            for k in i + 1..self.edges.len() {
                let (a, b) = (self.edges[i], self.edges[k]);
                if a.1 == b.1 && a.0 == b.0 && a.2 != b.2 {
                    self.union(a.2, b.2);
                    return true;
                }
                if a.1 == b.1 && a.2 == b.2 && a.0 != b.0 {
                    self.union(a.0, b.0);
                    return true;
                }
            }
        }
        let spec = self.spec;
        // per cluster: repeated vertex enlarges K, equal cosets merge vertices
        for ci in 0..self.clusters.len() {
            let Some(mut c) = self.clusters[ci].take() else { continue };
            let g = spec.factor(c.factor);
            let mut changed = false;
            'outer: for i in 0..c.attachments.len() {
                for k in i + 1..c.attachments.len() {
                    let (u, h) = c.attachments[i].clone();
                    let (v, h2) = c.attachments[k].clone();
                    let same_coset = c.sub.contains(&g.mul(&h2, &g.inv(&h)));
                    if u == v && !same_coset {
                        c.sub = c.sub.adjoin(g, &g.mul(&h2, &g.inv(&h)));
                        changed = true;
                        break 'outer;
                    }
                    if same_coset {
                        if u != v {
                            self.union(u, v);
                        }
                        c.attachments.remove(k);
                        changed = true;
                        break 'outer;
                    }
                }
            }
            self.clusters[ci] = Some(c);
            if changed {
                return true;
            }
        }
        // a vertex attached to two clusters of the same factor
        for ci in 0..self.clusters.len() {
            for cj in ci + 1..self.clusters.len() {
                let (Some(a), Some(b)) = (&self.clusters[ci], &self.clusters[cj]) else { continue };
                if a.factor != b.factor {
                    continue;
                }
                let shared = a.attachments.iter().find_map(|(u, h)| {
                    b.attachments.iter().find(|(v, _)| v == u).map(|(_, h2)| (h.clone(), h2.clone()))
                });
                let Some((h, h2)) = shared else { continue };
                let g = spec.factor(a.factor);
                let s = g.mul(&h, &g.inv(&h2));
                let b = self.clusters[cj].take().unwrap();
                let a = self.clusters[ci].as_mut().unwrap();
                a.sub = a.sub.join(g, &b.sub.conjugate(g, &s));
                for (v, l) in b.attachments {
                    a.attachments.push((v, g.mul(&s, &l)));
                }
                return true;
            }
        }
        false
    }
}

impl KuroshGraph {
    /// Builds and folds the graph of `⟨gens⟩`.
    pub fn build(spec: &FactorSpec, gens: &[Word]) -> KuroshGraph {
        let mut b = Builder { spec, parent: vec![0], edges: vec![], clusters: vec![] };
        for w in gens {
            if !w.is_identity() {
                b.add_word_loop(w);
            }
        }
        while b.fold_once() {}
        b.canonicalize();
        // compact vertex ids
        let mut id = vec![usize::MAX; b.parent.len()];
        let mut n = 0;
        for v in 0..b.parent.len() {
            if b.find(v) == v {
                id[v] = n;
                n += 1;
            }
        }
        let edges = b.edges.iter().map(|&(u, j, v)| (id[u], j, id[v])).collect();
        let clusters = b
            .clusters
            .into_iter()
            .flatten()
            .map(|mut c| {
                let g = spec.factor(c.factor);
                for a in c.attachments.iter_mut() {
                    a.0 = id[a.0];
                    a.1 = c.sub.coset_key(g, &a.1);
                }
                c
            })
            .collect();
        KuroshGraph { spec: spec.clone(), vertex_count: n, edges, clusters }
    }

    pub fn spec(&self) -> &FactorSpec {
        &self.spec
    }

    fn step_gen(&self, u: usize, j: usize, forward: bool) -> Option<usize> {
        self.edges.iter().find_map(|&(a, k, b)| match (k == j, forward) {
            (true, true) if a == u => Some(b),
            (true, false) if b == u => Some(a),
            _ => None,
        })
    }

    fn step_per(&self, u: usize, factor: usize, e: &BigInt) -> Option<usize> {
        let g = self.spec.factor(factor);
        let c = self
            .clusters
            .iter()
            .find(|c| c.factor == factor && c.attachments.iter().any(|a| a.0 == u))?;
        let h = &c.attachments.iter().find(|a| a.0 == u).unwrap().1;
        let target = g.mul(h, e);
        c.attachments
            .iter()
            .find(|(_, l)| c.sub.contains(&g.mul(&target, &g.inv(l))))
            .map(|a| a.0)
    }

    /// Membership test by tracing `w` from the basepoint.
    pub fn contains(&self, w: &Word) -> bool {
        let mut cur = 0;
        for l in w.letters() {
            match l {
                Letter::Gen { index, exp } => {
                    let mut k = exp.abs();
                    while k.is_positive() {
                        match self.step_gen(cur, *index, exp.is_positive()) {
                            Some(v) => cur = v,
                            None => return false,
                        }
                        k -= 1;
                    }
                }
                Letter::Per { factor, elt } => match self.step_per(cur, *factor, elt) {
                    Some(v) => cur = v,
                    None => return false,
                },
            }
        }
        cur == 0
    }

    /// Breadth-first spanning tree words: `path[u]` reads from the basepoint
    /// to free vertex `u`; cluster entries give `(entry vertex, entry label)`.
    fn spanning_paths(&self) -> (Vec<Option<Word>>, Vec<Option<(usize, BigInt)>>) {
        let s = &self.spec;
        let mut path: Vec<Option<Word>> = vec![None; self.vertex_count];
        let mut entry: Vec<Option<(usize, BigInt)>> = vec![None; self.clusters.len()];
        path[0] = Some(Word::identity());
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            let pu = path[u].clone().unwrap();
            for &(a, j, b) in &self.edges {
                let (v, e) = if a == u { (b, 1) } else if b == u { (a, -1) } else { continue };
                if path[v].is_none() {
                    path[v] = Some(s.mul(&pu, &s.x(j, e)));
                    queue.push_back(v);
                }
            }
            for (ci, c) in self.clusters.iter().enumerate() {
                let Some((_, h)) = c.attachments.iter().find(|a| a.0 == u) else { continue };
                if entry[ci].is_some() {
                    continue;
                }
                entry[ci] = Some((u, h.clone()));
                let g = s.factor(c.factor);
                for (v, h2) in &c.attachments {
                    if path[*v].is_none() {
                        let step = g.mul(&g.inv(h), h2);
                        path[*v] = Some(s.mul(&pu, &s.letter(Letter::Per { factor: c.factor, elt: step })));
                        queue.push_back(*v);
                    }
                }
            }
        }
        (path, entry)
    }

    /// Free rank (first Betti number) and one `(factor, conjugator)` per
    /// cluster carrying a nontrivial subgroup.
    pub fn kurosh_rank(&self) -> KuroshRank {
        let (path, entry) = self.spanning_paths();
        let reach: Vec<bool> = path.iter().map(Option::is_some).collect();
        let v = reach.iter().filter(|&&r| r).count() + entry.iter().filter(|e| e.is_some()).count();
        let e = self.edges.iter().filter(|ed| reach[ed.0]).count()
            + self
                .clusters
                .iter()
                .zip(&entry)
                .filter(|(_, en)| en.is_some())
                .map(|(c, _)| c.attachments.len())
                .sum::<usize>();
        let free_rank = e + 1 - v;
        let peripherals = self.peripheral_subgroups().into_iter().map(|(f, c, _)| (f, c)).collect();
        KuroshRank { free_rank, peripherals }
    }

    /// `(factor, conjugator c, generators of K)`: `H` contains `c·K·c⁻¹`.
    pub fn peripheral_subgroups(&self) -> Vec<(usize, Word, Vec<BigInt>)> {
        let s = &self.spec;
        let (path, entry) = self.spanning_paths();
        let mut out = Vec::new();
        for (c, en) in self.clusters.iter().zip(entry) {
            let Some((u, h)) = en else { continue };
            if c.sub.is_trivial() {
                continue;
            }
            let g = s.factor(c.factor);
            let hinv = s.letter(Letter::Per { factor: c.factor, elt: g.inv(&h) });
            let conj = s.mul(path[u].as_ref().unwrap(), &hinv);
            out.push((c.factor, conj, c.sub.generators(g)));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let clusters: Vec<Value> = self
            .clusters
            .iter()
            .map(|c| {
                json!({
                    "factor": c.factor,
                    "subgroup": c.sub.to_json(),
                    "attachments": c.attachments.iter().map(|(v, h)| json!([v, big_to_json(h)])).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "format": 1,
            "basepoint": 0,
            "vertices": self.vertex_count,
            "edges": self.edges.iter().map(|&(u, j, v)| json!({"from": u, "gen": j, "to": v})).collect::<Vec<_>>(),
            "clusters": clusters,
        })
    }
}

/// Kurosh rank of `⟨gens⟩`.
pub fn subgroup_rank(spec: &FactorSpec, gens: &[Word]) -> KuroshRank {
    KuroshGraph::build(spec, gens).kurosh_rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::FactorModel;

    fn spec3() -> FactorSpec {
        FactorSpec::new(2, vec![FactorModel::FiniteCyclic { order: 3 }]).unwrap()
    }

    #[test]
    fn free_examples() {
        let s = FactorSpec::free(2);
        let g = KuroshGraph::build(&s, &[s.x(1, 1)]);
        assert_eq!(g.vertex_count, 1);
        assert_eq!(g.edges.len(), 1);
        assert!(g.contains(&s.x(1, 5)));
        assert!(!g.contains(&s.x(2, 1)));
        assert!(g.contains(&Word::identity()));
        let r = subgroup_rank(&s, &[s.x(1, 1), s.x(2, 1)]);
        assert_eq!((r.free_rank, r.peripherals.len()), (2, 0));
    }

    #[test]
    fn whole_factor() {
        let s = spec3();
        let g = KuroshGraph::build(&s, &[s.p(1, 1)]);
        assert_eq!(g.clusters.len(), 1);
        assert_eq!(g.clusters[0].sub.generators(s.factor(1)).len(), 1);
        assert!(g.contains(&s.p(1, 2)));
        let r = g.kurosh_rank();
        assert_eq!(r, KuroshRank { free_rank: 0, peripherals: vec![(1, Word::identity())] });
    }

    #[test]
    fn conjugate_peripheral() {
        let s = spec3();
        let h = s.conj(&s.x(1, 1), &s.p(1, 1));
        let g = KuroshGraph::build(&s, &[h.clone()]);
        assert!(g.contains(&s.conj(&s.x(1, 1), &s.p(1, 2))));
        assert!(!g.contains(&s.p(1, 1)));
        let r = g.kurosh_rank();
        assert_eq!(r.free_rank, 0);
        assert_eq!(r.peripherals, vec![(1, s.x(1, 1))]);
        let r = subgroup_rank(&s, &[s.x(1, 2), h.clone()]);
        assert_eq!(r.rk_k(), 2);
        let r = subgroup_rank(&s, &[h, s.x(2, 2)]);
        assert_eq!((r.free_rank, r.peripherals.len()), (1, 1));
    }

    #[test]
    fn double_attachment_enlarges() {
        // ⟨x1 a x1⁻¹ a⟩ ... and ⟨a x1 a⁻¹ x1⁻¹⟩ style loops
        let s = FactorSpec::new(1, vec![FactorModel::FiniteCyclic { order: 4 }]).unwrap();
        let g = KuroshGraph::build(&s, &[s.p(1, 2), s.mul(&s.p(1, 1), &s.x(1, 1))]);
        assert!(g.contains(&s.mul_all([&s.p(1, 3), &s.x(1, 1)])));
        assert!(!g.contains(&s.x(1, 1)));
    }
}
