//! Deterministic random corpora of very small simplicial trees.
//!
//! Trees are assembled from gadgets that use up the free rank: core cycles,
//! cyclic leaves `⟨c⟩`, chains of `⟨c⟩`-vertices joined by `⟨c⟩`-edges and
//! each tied to the core, free vertices of rank ≥ 2, and amalgam edges
//! `⟨a,c⟩ —⟨c⟩— ⟨b,c⟩`. Peripheral factors sit on core vertices. Vertex
//! groups are listed by free bases and every edge group is a basis element
//! at both ends, so the approximation applies to every output.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::{q, Q};
use crate::trees::{Edge, Hop, MarkedGraphOfGroups, Path, VertexGroup};
use crate::words::{FactorSpec, Word};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSpec {
    pub spec: FactorSpec,
    /// Defaults to `3N + 2k − 3`.
    pub max_edges: Option<usize>,
    pub seed: u64,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub trees: Vec<MarkedGraphOfGroups>,
    /// One line per discarded draw.
    pub discarded: Vec<String>,
}

impl CorpusSpec {
    pub fn edge_bound(&self) -> usize {
        (3 * self.spec.free_rank + 2 * self.spec.k()).saturating_sub(3)
    }
}

/// `FREEPROD_SEED` when set, else `default`.
pub fn seed_from_env(default: u64) -> Result<u64> {
    match std::env::var("FREEPROD_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| Error::Malformed(format!("FREEPROD_SEED={s:?} is not an integer"))),
        Err(_) => Ok(default),
    }
}

const ATTEMPTS_PER_TREE: usize = 200;
const VALIDATION_BUDGET: usize = 2000;

pub fn generate_corpus(cs: &CorpusSpec) -> Result<Corpus> {
    let rk = cs.spec.rk_k();
    if rk < 2 {
        return Err(Error::Domain(format!("rk_K = {rk} < 2 has no nontrivial very small shapes")));
    }
    let bound = cs.max_edges.unwrap_or(cs.edge_bound()).min(cs.edge_bound());
    if bound == 0 {
        return Err(Error::Domain("edge bound 0 admits no tree".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cs.seed);
    let mut trees = Vec::new();
    let mut discarded = Vec::new();
    let mut attempts = 0;
    while trees.len() < cs.count {
        attempts += 1;
        if attempts > ATTEMPTS_PER_TREE * cs.count.max(1) {
            return Err(Error::Domain(format!("could not produce {} trees within {attempts} draws", cs.count)));
        }
        let t = draw(&cs.spec, &mut rng);
        if t.edges.len() > bound {
            discarded.push(format!("draw {attempts}: {} edges exceed the bound {bound}", t.edges.len()));
            continue;
        }
        if let Some(v) = (0..t.vertices.len()).find(|&v| t.vertices[v].is_trivial() && t.valence(v) == 2) {
            discarded.push(format!("draw {attempts}: vertex {v} is a trivial valence-2 vertex, not a branch point"));
            continue;
        }
        match t.validate(VALIDATION_BUDGET) {
            Ok(r) if r.is_very_small && r.is_minimal => trees.push(t),
            Ok(r) => {
                let why: Vec<String> = r.violations.iter().map(|v| v.axiom.clone()).collect();
                discarded.push(format!("draw {attempts}: not very small and minimal ({})", why.join(", ")));
            }
            Err(e) => discarded.push(format!("draw {attempts}: {e}")),
        }
    }
    Ok(Corpus { trees, discarded })
}

enum Gadget {
    Cycle,
    CyclicLeaf,
    Chain(usize),
    FreeVertex(usize),
    Amalgam,
}

impl Gadget {
    fn rank(&self) -> usize {
        match self {
            Gadget::Cycle | Gadget::CyclicLeaf => 1,
            Gadget::Chain(m) | Gadget::FreeVertex(m) => *m,
            Gadget::Amalgam => 3,
        }
    }
}

struct Builder {
    spec: FactorSpec,
    vertices: Vec<VertexGroup>,
    edges: Vec<Edge>,
    /// Spanning path from the base to each vertex; all its edges have `t = 1`.
    span: Vec<Path>,
    free_marking: Vec<Option<Path>>,
    factor_marking: Vec<Option<Path>>,
}

fn length(rng: &mut ChaCha8Rng) -> Q {
    let choices = [q(1, 1), q(1, 1), q(1, 2), q(2, 1), q(1, 3), q(3, 2)];
    choices[rng.gen_range(0..choices.len())].clone()
}

impl Builder {
    fn add_vertex(&mut self, g: VertexGroup) -> usize {
        self.vertices.push(g);
        self.vertices.len() - 1
    }

    fn add_edge(&mut self, src: usize, dst: usize, len: Q, t: Word, group: Option<Word>) -> usize {
        self.edges.push(Edge { src, dst, length: len, t, group });
        self.edges.len() - 1
    }

    /// A tree edge from an existing vertex to a new one.
    fn hang(&mut self, from: usize, g: VertexGroup, len: Q, group: Option<Word>) -> usize {
        let v = self.add_vertex(g);
        let e = self.add_edge(from, v, len, Word::identity(), group);
        let mut p = self.span[from].clone();
        p.hops.push(Hop { edge: e, forward: true, elem: Word::identity() });
        self.span.push(p);
        v
    }

    fn there_and_back(&self, v: usize, elem: Word) -> Path {
        let mut p = self.span[v].clone();
        match p.hops.last_mut() {
            Some(h) => h.elem = elem,
            None => p.head = elem,
        }
        let back = reverse(&self.spec, &self.span[v]);
        concat(&self.spec, &p, &back)
    }
}

// spanning paths carry identity elements, so reversal and concatenation
// are plain
fn reverse(_s: &FactorSpec, p: &Path) -> Path {
    let hops: Vec<Hop> =
        p.hops.iter().rev().map(|h| Hop { edge: h.edge, forward: !h.forward, elem: Word::identity() }).collect();
    Path { start: 0, head: Word::identity(), hops }
}

fn concat(s: &FactorSpec, p: &Path, q: &Path) -> Path {
    let mut out = p.clone();
    match out.hops.last_mut() {
        Some(h) => h.elem = s.mul(&h.elem, &q.head),
        None => out.head = s.mul(&out.head, &q.head),
    }
    out.hops.extend(q.hops.iter().cloned());
    out
}

fn draw(spec: &FactorSpec, rng: &mut ChaCha8Rng) -> MarkedGraphOfGroups {
    let n = spec.free_rank;
    let k = spec.k();
    // gadgets covering the free rank
    let mut gadgets = Vec::new();
    let mut left = n;
    while left > 0 {
        let mut options = vec![Gadget::Cycle, Gadget::CyclicLeaf];
        if left >= 2 {
            options.push(Gadget::Chain(rng.gen_range(2..=left.min(4))));
            options.push(Gadget::FreeVertex(2));
        }
        if left >= 3 {
            options.push(Gadget::Amalgam);
        }
        let g = options.swap_remove(rng.gen_range(0..options.len()));
        left -= g.rank();
        gadgets.push(g);
    }
    let mut gens: Vec<usize> = (1..=n).collect();
    gens.shuffle(rng);
    let mut next_gen = gens.into_iter();

    let trivial_core = rng.gen_range(if k == 0 { 1 } else { 0 }..=(gadgets.len() / 2 + 1));
    let mut core_groups: Vec<VertexGroup> = (1..=k).map(|i| VertexGroup::peripheral(i, Word::identity())).collect();
    core_groups.extend((0..trivial_core).map(|_| VertexGroup::trivial()));
    core_groups.shuffle(rng);

    let mut b = Builder {
        spec: spec.clone(),
        vertices: Vec::new(),
        edges: Vec::new(),
        span: Vec::new(),
        free_marking: vec![None; n],
        factor_marking: vec![None; k],
    };
    b.add_vertex(core_groups[0].clone());
    b.span.push(Path::at(0, Word::identity()));
    let mut core = vec![0];
    for g in core_groups.into_iter().skip(1) {
        let from = core[rng.gen_range(0..core.len())];
        let len = length(rng);
        core.push(b.hang(from, g, len, None));
    }
    let pick = |rng: &mut ChaCha8Rng, core: &[usize]| core[rng.gen_range(0..core.len())];

    for g in gadgets {
        match g {
            Gadget::Cycle => {
                let j = next_gen.next().unwrap();
                let (u, v) = (pick(rng, &core), pick(rng, &core));
                let len = length(rng);
                let e = b.add_edge(u, v, len, spec.x(j, 1), None);
                let mut p = b.span[u].clone();
                p.hops.push(Hop { edge: e, forward: true, elem: Word::identity() });
                b.free_marking[j - 1] = Some(concat(spec, &p, &reverse(spec, &b.span[v])));
            }
            Gadget::CyclicLeaf => {
                let j = next_gen.next().unwrap();
                let u = pick(rng, &core);
                let len = length(rng);
                let w = b.hang(u, VertexGroup::free(vec![spec.x(j, 1)]), len, None);
                b.free_marking[j - 1] = Some(b.there_and_back(w, spec.x(j, 1)));
            }
            Gadget::FreeVertex(r) => {
                let js: Vec<usize> = (0..r).map(|_| next_gen.next().unwrap()).collect();
                let u = pick(rng, &core);
                let len = length(rng);
                let w = b.hang(u, VertexGroup::free(js.iter().map(|j| spec.x(*j, 1)).collect()), len, None);
                for j in js {
                    b.free_marking[j - 1] = Some(b.there_and_back(w, spec.x(j, 1)));
                }
            }
            Gadget::Amalgam => {
                let (ja, jb, jc) = (next_gen.next().unwrap(), next_gen.next().unwrap(), next_gen.next().unwrap());
                let c = spec.x(jc, 1);
                let u = pick(rng, &core);
                let len = length(rng);
                let a = b.hang(u, VertexGroup::free(vec![spec.x(ja, 1), c.clone()]), len, None);
                let len = length(rng);
                let bv = b.hang(a, VertexGroup::free(vec![spec.x(jb, 1), c.clone()]), len, Some(c.clone()));
                b.free_marking[ja - 1] = Some(b.there_and_back(a, spec.x(ja, 1)));
                b.free_marking[jc - 1] = Some(b.there_and_back(a, c));
                b.free_marking[jb - 1] = Some(b.there_and_back(bv, spec.x(jb, 1)));
            }
            Gadget::Chain(m) => {
                let jc = next_gen.next().unwrap();
                let c = spec.x(jc, 1);
                let u0 = pick(rng, &core);
                let len = length(rng);
                let mut chain = vec![b.hang(u0, VertexGroup::free(vec![c.clone()]), len, None)];
                for _ in 1..m {
                    let len = length(rng);
                    let w = b.hang(*chain.last().unwrap(), VertexGroup::free(vec![c.clone()]), len, Some(c.clone()));
                    chain.push(w);
                }
                b.free_marking[jc - 1] = Some(b.there_and_back(chain[0], c));
                for &w in &chain[1..] {
                    let j = next_gen.next().unwrap();
                    let u = pick(rng, &core);
                    let len = length(rng);
                    let e = b.add_edge(u, w, len, spec.x(j, 1), None);
                    let mut p = b.span[u].clone();
                    p.hops.push(Hop { edge: e, forward: true, elem: Word::identity() });
                    b.free_marking[j - 1] = Some(concat(spec, &p, &reverse(spec, &b.span[w])));
                }
            }
        }
    }
    for (v, g) in b.vertices.iter().enumerate() {
        if let Some((i, _)) = g.peripherals.first() {
            b.factor_marking[i - 1] = Some(b.span[v].clone());
        }
    }
    MarkedGraphOfGroups {
        spec: spec.clone(),
        vertices: b.vertices,
        edges: b.edges,
        base: 0,
        free_marking: b.free_marking.into_iter().map(Option::unwrap).collect(),
        factor_marking: b.factor_marking.into_iter().map(Option::unwrap).collect(),
    }
}

/// Corpus document: the spec, the seed and the trees.
pub fn corpus_to_json(cs: &CorpusSpec, c: &Corpus) -> Value {
    json!({
        "format": 1,
        "spec": cs.spec.to_json(),
        "seed": cs.seed,
        "count": c.trees.len(),
        "discarded": c.discarded.len(),
        "trees": c.trees.iter().map(|t| t.to_json()).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::FactorModel;

    fn cs(spec: FactorSpec, seed: u64, count: usize) -> CorpusSpec {
        CorpusSpec { spec, max_edges: None, seed, count }
    }

    #[test]
    fn deterministic_and_valid() {
        let a = generate_corpus(&cs(FactorSpec::free(2), 1, 10)).unwrap();
        let b = generate_corpus(&cs(FactorSpec::free(2), 1, 10)).unwrap();
        assert_eq!(a.trees.len(), 10);
        let ja = corpus_to_json(&cs(FactorSpec::free(2), 1, 10), &a).to_string();
        let jb = corpus_to_json(&cs(FactorSpec::free(2), 1, 10), &b).to_string();
        assert_eq!(ja, jb);
        for t in &a.trees {
            let r = t.validate(VALIDATION_BUDGET).unwrap();
            assert!(r.is_very_small && r.is_minimal);
            assert!(t.edges.len() <= 3);
        }
    }

    #[test]
    fn bounds() {
        assert!(matches!(generate_corpus(&cs(FactorSpec::free(1), 1, 3)), Err(Error::Domain(_))));
        let two = FactorSpec::new(0, vec![FactorModel::FiniteCyclic { order: 2 }, FactorModel::InfiniteCyclic]).unwrap();
        let c = generate_corpus(&cs(two, 5, 5)).unwrap();
        assert!(c.trees.iter().all(|t| t.edges.len() <= 1));
    }

    #[test]
    fn covers_all_vertex_types() {
        use crate::index::{classify_vertex, VertexType};
        let mut seen = std::collections::BTreeSet::new();
        let specs = [
            FactorSpec::free(3),
            FactorSpec::new(2, vec![FactorModel::FiniteCyclic { order: 2 }]).unwrap(),
            FactorSpec::new(3, vec![FactorModel::InfiniteCyclic, FactorModel::FiniteCyclic { order: 3 }]).unwrap(),
        ];
        for (i, spec) in specs.into_iter().enumerate() {
            for t in generate_corpus(&cs(spec, 7 + i as u64, 25)).unwrap().trees {
                for v in 0..t.vertices.len() {
                    seen.insert(format!("{:?}", classify_vertex(&t, v)));
                }
            }
        }
        for ty in [
            VertexType::TrivialTripod,
            VertexType::Peripheral,
            VertexType::CyclicLeaf,
            VertexType::CyclicMixed,
            VertexType::CyclicFork,
        ] {
            assert!(seen.contains(&format!("{ty:?}")), "{ty:?} missing from {seen:?}");
        }
    }
}
