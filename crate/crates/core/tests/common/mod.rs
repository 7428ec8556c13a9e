//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's reduction, length or index code except to read its output.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use freeprod::rational::Q;
use freeprod::trees::MarkedGraphOfGroups;
use freeprod::words::{FactorModel, FactorSpec, Letter, Word};

// ---- words ----

/// A syllable `x_j^e` or an element of a cyclic factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Syl {
    Gen(usize, i64),
    Per(usize, i64),
}

/// Free rank and factor orders (`None` for ℤ); table factors are not modelled.
#[derive(Clone, Debug)]
pub struct Model {
    pub free_rank: usize,
    pub orders: Vec<Option<u64>>,
}

impl Model {
    pub fn of(spec: &FactorSpec) -> Model {
        let orders = (1..=spec.k())
            .map(|i| match spec.factor(i) {
                FactorModel::FiniteCyclic { order } => Some(*order),
                FactorModel::InfiniteCyclic => None,
                FactorModel::Table { .. } => panic!("table factors are outside the oracle"),
            })
            .collect();
        Model { free_rank: spec.free_rank, orders }
    }

    fn norm(&self, s: Syl) -> Option<Syl> {
        match s {
            Syl::Gen(_, 0) => None,
            Syl::Gen(..) => Some(s),
            Syl::Per(f, e) => {
                let e = match self.orders[f - 1] {
                    Some(n) => e.rem_euclid(n as i64),
                    None => e,
                };
                (e != 0).then_some(Syl::Per(f, e))
            }
        }
    }

    /// Pairwise rewriting to a fixpoint: drop trivial syllables, merge the
    /// first adjacent pair of the same kind, repeat.
    pub fn reduce(&self, raw: &[Syl]) -> Vec<Syl> {
        let mut w: Vec<Syl> = raw.to_vec();
        loop {
            let before = w.len();
            w = w.into_iter().filter_map(|s| self.norm(s)).collect();
            let mut merged = false;
            for i in 0..w.len().saturating_sub(1) {
                let m = match (w[i], w[i + 1]) {
                    (Syl::Gen(a, e), Syl::Gen(b, f)) if a == b => Some(Syl::Gen(a, e + f)),
                    (Syl::Per(a, e), Syl::Per(b, f)) if a == b => Some(Syl::Per(a, e + f)),
                    _ => None,
                };
                if let Some(m) = m {
                    w.splice(i..i + 2, [m]);
                    merged = true;
                    break;
                }
            }
            if !merged && w.len() == before {
                return w;
            }
        }
    }

    pub fn inverse(&self, w: &[Syl]) -> Vec<Syl> {
        w.iter()
            .rev()
            .map(|s| match *s {
                Syl::Gen(j, e) => Syl::Gen(j, -e),
                Syl::Per(f, e) => Syl::Per(f, -e),
            })
            .collect()
    }

    pub fn concat(&self, parts: &[&[Syl]]) -> Vec<Syl> {
        self.reduce(&parts.concat())
    }

    pub fn power(&self, w: &[Syl], m: usize) -> Vec<Syl> {
        self.reduce(&w.repeat(m))
    }

    /// A cyclically reduced conjugate, found by rotating the last syllable
    /// to the front while the ends can still merge.
    pub fn cyclic_core(&self, w: &[Syl]) -> Vec<Syl> {
        let mut w = self.reduce(w);
        loop {
            let n = w.len();
            if n < 2 || !same_kind(w[0], w[n - 1]) {
                return w;
            }
            let last = w[n - 1];
            let mut rotated = vec![last];
            rotated.extend_from_slice(&w[..n - 1]);
            w = self.reduce(&rotated);
        }
    }

    /// Largest `m` with `w` conjugate to an `m`-th power, by testing every
    /// divisor of the syllable length of the cyclic core. `None` for a
    /// single peripheral syllable, where the answer depends on the factor.
    pub fn root_multiplicity(&self, w: &[Syl]) -> Option<usize> {
        let c = self.cyclic_core(w);
        match c.as_slice() {
            [] => None,
            [Syl::Gen(_, e)] => Some(e.unsigned_abs() as usize),
            [Syl::Per(..)] => None,
            _ => {
                let n = c.len();
                (1..=n).rev().find(|m| n % m == 0 && c == c[..n / m].repeat(*m))
            }
        }
    }

    pub fn letters(&self, w: &[Syl]) -> Vec<Letter> {
        w.iter()
            .map(|s| match *s {
                Syl::Gen(j, e) => Letter::gen(j, e),
                Syl::Per(f, e) => Letter::per(f, e),
            })
            .collect()
    }

    pub fn random_raw(&self, rng: &mut impl Rng, max_len: usize) -> Vec<Syl> {
        let len = rng.gen_range(0..=max_len);
        (0..len)
            .map(|_| {
                let k = self.orders.len();
                if self.free_rank > 0 && (k == 0 || rng.gen_bool(0.6)) {
                    Syl::Gen(rng.gen_range(1..=self.free_rank), rng.gen_range(-3..=3))
                } else {
                    let f = rng.gen_range(1..=k);
                    let top = self.orders[f - 1].map(|n| n as i64).unwrap_or(4);
                    Syl::Per(f, rng.gen_range(-top..=top))
                }
            })
            .collect()
    }
}

fn same_kind(a: Syl, b: Syl) -> bool {
    matches!((a, b), (Syl::Gen(i, _), Syl::Gen(j, _)) | (Syl::Per(i, _), Syl::Per(j, _)) if i == j)
}

/// Reads a library word back into syllables, normalized like the oracle.
pub fn syllables(m: &Model, w: &Word) -> Vec<Syl> {
    w.letters()
        .iter()
        .map(|l| match l {
            Letter::Gen { index, exp } => Syl::Gen(*index, exp.to_i64().unwrap()),
            Letter::Per { factor, elt } => m.norm(Syl::Per(*factor, elt.to_i64().unwrap())).unwrap(),
        })
        .collect()
}

/// Failures of the word-algebra laws on `cases` random inputs.
pub fn word_fuzz(spec: &FactorSpec, rng: &mut impl Rng, cases: usize) -> Vec<String> {
    let m = Model::of(spec);
    let mut failures = Vec::new();
    let imp = |raw: &[Syl]| spec.reduce(&m.letters(raw)).unwrap();
    for case in 0..cases {
        let (a, b, c) = (m.random_raw(rng, 8), m.random_raw(rng, 8), m.random_raw(rng, 8));
        let ra = imp(&a);
        // normal form against pairwise rewriting, and idempotence
        if syllables(&m, &ra) != m.reduce(&a) {
            failures.push(format!("case {case}: reduce {a:?}"));
        }
        if spec.reduce(ra.letters()).unwrap() != ra {
            failures.push(format!("case {case}: reduce not idempotent on {a:?}"));
        }
        let (rb, rc) = (imp(&b), imp(&c));
        let left = spec.mul(&spec.mul(&ra, &rb), &rc);
        let right = spec.mul(&ra, &spec.mul(&rb, &rc));
        if left != right || syllables(&m, &left) != m.concat(&[&a, &b, &c]) {
            failures.push(format!("case {case}: associativity on {a:?} {b:?} {c:?}"));
        }
        if !spec.mul(&ra, &spec.inverse(&ra)).is_identity() || syllables(&m, &spec.inverse(&ra)) != m.reduce(&m.inverse(&a)) {
            failures.push(format!("case {case}: inverse law on {a:?}"));
        }
        // roots: w = r^k must come back as root^m with root^m = w
        let k = rng.gen_range(1..=4);
        let w = m.power(&m.reduce(&b), k);
        if w.is_empty() {
            continue;
        }
        let ww = imp(&w);
        match spec.max_root(&ww) {
            Ok((root, mult)) => {
                let mult = mult.to_usize().unwrap();
                if m.power(&syllables(&m, &root), mult) != w {
                    failures.push(format!("case {case}: root^m != w for {w:?}"));
                }
                if let Some(expected) = m.root_multiplicity(&w) {
                    if mult != expected || mult < k {
                        failures.push(format!("case {case}: multiplicity {mult} vs divisor scan {expected} for {w:?}"));
                    }
                }
            }
            Err(e) => failures.push(format!("case {case}: max_root failed on {w:?}: {e}")),
        }
    }
    failures
}

// ---- Bass–Serre tree brute force ----

fn elements(spec: &FactorSpec, gens: &[Word]) -> Vec<Word> {
    let mut out = vec![Word::identity()];
    let mut i = 0;
    while i < out.len() {
        for g in gens {
            let h = spec.mul(&out[i], g);
            if !out.contains(&h) {
                out.push(h);
            }
        }
        i += 1;
    }
    out
}

/// A ball in the Bass–Serre tree of a graph of groups with finite vertex
/// groups, built from cosets `g·G_v` written by their least representative.
pub struct BassSerreBall {
    spec: FactorSpec,
    groups: Vec<Vec<Word>>,
    index: HashMap<(usize, Word), usize>,
    nodes: Vec<(usize, Word)>,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    /// Distance from the root.
    dist: Vec<Q>,
}

impl BassSerreBall {
    pub fn new(t: &MarkedGraphOfGroups, radius: usize) -> Option<BassSerreBall> {
        let spec = t.spec.clone();
        let mut groups = Vec::new();
        for vg in &t.vertices {
            vg.order(&spec)?;
            groups.push(elements(&spec, &vg.generators(&spec)));
        }
        let mut ball = BassSerreBall {
            spec,
            groups,
            index: HashMap::new(),
            nodes: Vec::new(),
            parent: Vec::new(),
            depth: Vec::new(),
            dist: Vec::new(),
        };
        let root = ball.canon(t.base, &Word::identity());
        ball.index.insert(root.clone(), 0);
        ball.nodes.push(root);
        ball.parent.push(None);
        ball.depth.push(0);
        ball.dist.push(Q::zero());
        let mut queue = VecDeque::from([0]);
        while let Some(i) = queue.pop_front() {
            if ball.depth[i] == radius {
                continue;
            }
            let (v, g) = ball.nodes[i].clone();
            for (e, edge) in t.edges.iter().enumerate() {
                let mut nbrs = Vec::new();
                for s in &ball.groups[v] {
                    let gs = ball.spec.mul(&g, s);
                    if edge.src == v {
                        nbrs.push((edge.dst, ball.spec.mul(&gs, &edge.t)));
                    }
                    if edge.dst == v {
                        nbrs.push((edge.src, ball.spec.mul(&gs, &ball.spec.inverse(&edge.t))));
                    }
                }
                let _ = e;
                for (w, h) in nbrs {
                    let key = ball.canon(w, &h);
                    if ball.index.contains_key(&key) {
                        continue;
                    }
                    let j = ball.nodes.len();
                    ball.index.insert(key.clone(), j);
                    ball.nodes.push(key);
                    ball.parent.push(Some(i));
                    ball.depth.push(ball.depth[i] + 1);
                    ball.dist.push(&ball.dist[i] + &edge.length);
                    queue.push_back(j);
                }
            }
        }
        Some(ball)
    }

    fn canon(&self, v: usize, g: &Word) -> (usize, Word) {
        let best = self.groups[v].iter().map(|s| self.spec.mul(g, s)).min_by(|a, b| (a.len(), a).cmp(&(b.len(), b))).unwrap();
        (v, best)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    fn distance(&self, mut a: usize, mut b: usize) -> Q {
        let (da, db) = (self.dist[a].clone(), self.dist[b].clone());
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].unwrap();
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].unwrap();
        }
        while a != b {
            a = self.parent[a].unwrap();
            b = self.parent[b].unwrap();
        }
        da + db - &self.dist[a] * Q::from_integer(BigInt::from(2))
    }

    /// `min d(x, w·x)` over vertices `x` of the ball whose image stays in
    /// the ball; `None` if no image does.
    pub fn min_displacement(&self, w: &Word) -> Option<Q> {
        let mut best: Option<Q> = None;
        for (i, (v, g)) in self.nodes.iter().enumerate() {
            let key = self.canon(*v, &self.spec.mul(w, g));
            if let Some(&j) = self.index.get(&key) {
                let d = self.distance(i, j);
                if best.as_ref().is_none_or(|b| &d < b) {
                    best = Some(d);
                }
            }
        }
        best
    }
}

// ---- quotient shapes ----

/// A quotient shape: a connected multigraph with a Kurosh rank per vertex
/// and a trivial or infinite cyclic group per edge.
#[derive(Clone, Debug)]
pub struct Shape {
    pub ranks: Vec<usize>,
    /// `(u, v, cyclic)` with `u ≤ v`.
    pub edges: Vec<(usize, usize, bool)>,
}

/// Why a shape cannot be the quotient of a very small minimal tree with
/// branch-point vertices, checked in order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Reject {
    /// `b₁ + Σ rk(G_v) − #cyclic edges ≠ rk(G)`, from Euler characteristic.
    Euler,
    /// A cyclic edge at a vertex with trivial group.
    CyclicEdgeAtTrivial,
    /// A vertex with fewer than three directions.
    NotBranch,
    /// Three cyclic edges at a cyclic vertex fix a tripod.
    Tripod,
    /// A cycle of cyclic edges through cyclic vertices would make a stable
    /// letter commute with the cyclic group up to inversion.
    CyclicNormalizer,
    /// Vertex group of Kurosh rank above `rk(G)`.
    StabilizerRank,
    /// More edges than `rk_f + b − 1`, the bound on the rank of the length
    /// lattice when the edge lengths are independent.
    LatticeRank,
}

impl Shape {
    fn b1(&self) -> usize {
        self.edges.len() + 1 - self.ranks.len()
    }

    /// Directions at `v`: an end contributes `[G_v : G_e]` of them, finite
    /// only for a trivial end at a trivial vertex and a cyclic end at a cyclic
    /// vertex (root-closed, so the edge group is the whole vertex group).
    fn directions(&self, v: usize) -> usize {
        let mut d = 0;
        for &(a, b, cyc) in &self.edges {
            let ends = (a == v) as usize + (b == v) as usize;
            let per_end = match (self.ranks[v], cyc) {
                (0, false) | (1, true) => 1,
                _ => 3,
            };
            d += ends * per_end;
        }
        d
    }

    pub fn check(&self, rank: usize, free_rank: usize) -> Result<(), Reject> {
        let z = self.edges.iter().filter(|e| e.2).count();
        if self.b1() + self.ranks.iter().sum::<usize>() != rank + z {
            return Err(Reject::Euler);
        }
        if self.edges.iter().any(|&(a, b, c)| c && (self.ranks[a] == 0 || self.ranks[b] == 0)) {
            return Err(Reject::CyclicEdgeAtTrivial);
        }
        if (0..self.ranks.len()).any(|v| self.directions(v) < 3) {
            return Err(Reject::NotBranch);
        }
        for v in 0..self.ranks.len() {
            let cyc_ends: usize = self.edges.iter().filter(|e| e.2).map(|&(a, b, _)| (a == v) as usize + (b == v) as usize).sum();
            if self.ranks[v] == 1 && cyc_ends >= 3 {
                return Err(Reject::Tripod);
            }
        }
        // cyclic edges between cyclic vertices must form a forest
        let mut comp: Vec<usize> = (0..self.ranks.len()).collect();
        fn find(c: &mut Vec<usize>, x: usize) -> usize {
            if c[x] != x {
                let r = find(c, c[x]);
                c[x] = r;
            }
            c[x]
        }
        for &(a, b, cyc) in &self.edges {
            if cyc && self.ranks[a] == 1 && self.ranks[b] == 1 {
                let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
                if ra == rb {
                    return Err(Reject::CyclicNormalizer);
                }
                comp[ra] = rb;
            }
        }
        if self.ranks.iter().any(|&r| r > rank) {
            return Err(Reject::StabilizerRank);
        }
        if self.edges.len() + 1 > free_rank + self.ranks.len() {
            return Err(Reject::LatticeRank);
        }
        Ok(())
    }
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            for (x, y) in [(a, b), (b, a)] {
                if x == v && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Counts of shapes by the first check they fail, with the shapes that pass
/// and those rejected only by the lattice bound.
#[derive(Debug, Default)]
pub struct ShapeCensus {
    pub counts: BTreeMap<Option<Reject>, u64>,
    pub survivors: Vec<Shape>,
    pub lattice_only: Vec<Shape>,
}

/// Rank vectors of length `n`, entries at most `max`, summing to `sum`.
fn compositions(n: usize, sum: usize, max: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return if sum == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=max.min(sum) {
        for mut rest in compositions(n - 1, sum - first, max) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Every shape with `1..=max_edges` edges and vertex ranks at most
/// `max_rank`. Vertex relabellings are not identified, so the counts are of
/// labelled shapes; rank vectors with the wrong Euler characteristic are
/// counted without being built.
pub fn enumerate_shapes(rank: usize, free_rank: usize, max_edges: usize, max_rank: usize) -> ShapeCensus {
    let mut census = ShapeCensus::default();
    for e in 1..=max_edges {
        for n in 1..=e + 1 {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
            let all_ranks = ((max_rank + 1) as u64).pow(n as u32);
            // multisets of `e` pairs as non-decreasing index sequences
            let mut idx = vec![0usize; e];
            'graphs: loop {
                let graph: Vec<(usize, usize)> = idx.iter().map(|&i| pairs[i]).collect();
                if connected(n, &graph) {
                    let b1 = e + 1 - n;
                    for mask in 0..(1u32 << e) {
                        let z = mask.count_ones() as usize;
                        let good = if rank + z >= b1 { compositions(n, rank + z - b1, max_rank) } else { vec![] };
                        *census.counts.entry(Some(Reject::Euler)).or_default() += all_ranks - good.len() as u64;
                        for ranks in good {
                            let shape = Shape {
                                ranks,
                                edges: graph.iter().enumerate().map(|(i, &(a, b))| (a, b, mask >> i & 1 == 1)).collect(),
                            };
                            let verdict = shape.check(rank, free_rank).err();
                            *census.counts.entry(verdict).or_default() += 1;
                            match verdict {
                                None => census.survivors.push(shape),
                                Some(Reject::LatticeRank) => census.lattice_only.push(shape),
                                _ => {}
                            }
                        }
                    }
                }
                // advance to the next multiset
                let mut k = e;
                while k > 0 {
                    k -= 1;
                    if idx[k] + 1 < pairs.len() {
                        idx[k] += 1;
                        for l in k + 1..e {
                            idx[l] = idx[k];
                        }
                        continue 'graphs;
                    }
                }
                break;
            }
        }
    }
    census
}

/// The shape of a quotient graph of groups over a free group.
pub fn shape_of(t: &MarkedGraphOfGroups) -> Shape {
    Shape {
        ranks: (0..t.vertices.len()).map(|v| t.stab_rank(v)).collect(),
        edges: t.edges.iter().map(|e| (e.src.min(e.dst), e.src.max(e.dst), e.group.is_some())).collect(),
    }
}

// ---- corpus mixes ----

fn finite(n: u64) -> FactorModel {
    FactorModel::FiniteCyclic { order: n }
}

/// Factor mixes for the corpus, by Kurosh rank 2..=5.
pub fn corpus_specs() -> Vec<FactorSpec> {
    let z = || FactorModel::InfiniteCyclic;
    vec![
        FactorSpec::free(2),
        FactorSpec::new(1, vec![finite(2)]).unwrap(),
        FactorSpec::new(0, vec![finite(2), finite(3)]).unwrap(),
        FactorSpec::free(3),
        FactorSpec::new(2, vec![finite(2)]).unwrap(),
        FactorSpec::new(1, vec![z(), finite(3)]).unwrap(),
        FactorSpec::free(4),
        FactorSpec::new(2, vec![finite(2), finite(2)]).unwrap(),
        FactorSpec::new(3, vec![finite(5)]).unwrap(),
        FactorSpec::free(5),
        FactorSpec::new(4, vec![finite(3)]).unwrap(),
        FactorSpec::new(2, vec![finite(2), z(), finite(4)]).unwrap(),
    ]
}

/// Names the kind of factors a spec uses.
pub fn mix_name(spec: &FactorSpec) -> &'static str {
    let fin = (1..=spec.k()).any(|i| matches!(spec.factor(i), FactorModel::FiniteCyclic { .. }));
    let inf = (1..=spec.k()).any(|i| matches!(spec.factor(i), FactorModel::InfiniteCyclic));
    match (spec.k(), fin, inf) {
        (0, _, _) => "free",
        (_, true, false) => "finite factors",
        (_, false, true) => "infinite cyclic factors",
        _ => "mixed factors",
    }
}
