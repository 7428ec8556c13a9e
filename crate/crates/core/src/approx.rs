//! Grushko approximation of very small simplicial trees, plus the two
//! rank-raising moves on quotient graphs of groups (a cyclic leaf becomes a
//! loop; a maximal `⟨c⟩`-chain becomes a cycle).
//!
//! The approximation blows every non-Grushko vertex up into the Grushko
//! tree of its group, read off a free basis listed in the vertex data. An
//! edge group `⟨c⟩` links basis elements at its two ends; along each linked
//! component one element (the root's `c`) keeps a loop of length `g/n`,
//! every other occurrence is unfolded, and its vertex is re-attached by an
//! edge of length `ℓ/n` twisted by the power of `c` that wraps the original
//! distance along the axis of `c`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::index::{classify_vertex, VertexType};
use crate::rational::{q_to_json, span_generator, Q};
use crate::subgroups::subgroup_rank;
use crate::trees::{Edge, Hop, MarkedGraphOfGroups, Path, VertexGroup};
use crate::words::{FactorModel, FactorSpec, Letter, Word};

// ---- path building ----

struct PathBuf<'a> {
    spec: &'a FactorSpec,
    path: Path,
    local: usize,
}

impl<'a> PathBuf<'a> {
    fn new(spec: &'a FactorSpec, start: usize) -> Self {
        PathBuf { spec, path: Path::at(start, Word::identity()), local: 0 }
    }

    fn mul(&mut self, y: &Word) {
        match self.path.hops.last_mut() {
            Some(h) => h.elem = self.spec.mul(&h.elem, y),
            None => self.path.head = self.spec.mul(&self.path.head, y),
        }
    }

    fn hop(&mut self, edge: usize, forward: bool, local: bool) {
        self.path.hops.push(Hop { edge, forward, elem: Word::identity() });
        if local {
            self.local += 1;
        }
    }

    fn laps(&mut self, edge: usize, k: &BigInt, local: bool) {
        let mut left = k.abs();
        while left.is_positive() {
            self.hop(edge, k.is_positive(), local);
            left -= 1;
        }
    }
}

// ---- loop_replace ----

/// Generator `u` of a vertex group known to be infinite cyclic.
pub(crate) fn cyclic_generator(spec: &FactorSpec, gens: &[Word]) -> Word {
    let (r, _) = spec.max_root(&gens[0]).expect("nontrivial generator");
    let d = gens.iter().fold(BigInt::zero(), |d, g| d.gcd(&spec.is_power_of(g, &r).expect("power of the root")));
    spec.pow(&r, &d)
}

/// Replaces a cyclic leaf vertex `⟨u⟩` by a trivial vertex carrying a loop of
/// length `eps` with `t = u`.
pub fn loop_replace(t: &MarkedGraphOfGroups, v: usize, eps: &Q) -> Result<MarkedGraphOfGroups> {
    if v >= t.vertices.len() {
        return Err(Error::Domain(format!("no vertex {v}")));
    }
    if !eps.is_positive() {
        return Err(Error::Domain("loop length must be positive".into()));
    }
    if classify_vertex(t, v) != VertexType::CyclicLeaf {
        return Err(Error::Precondition(format!("vertex {v} is not a cyclic leaf (type 3)")));
    }
    let spec = t.spec.clone();
    let u = cyclic_generator(&spec, &t.vertices[v].generators(&spec));
    let mut out = t.clone();
    out.vertices[v] = VertexGroup::trivial();
    out.edges.push(Edge { src: v, dst: v, length: eps.clone(), t: u.clone(), group: None });
    let lp = out.edges.len() - 1;
    let at_v = |y: &Word, b: &mut PathBuf| {
        let m = spec.is_power_of(y, &u).expect("vertex element is a power of u");
        b.laps(lp, &m, true);
    };
    let mut paths: Vec<Path> = Vec::new();
    for p in t.free_marking.iter().chain(t.factor_marking.iter()) {
        let mut b = PathBuf::new(&spec, p.start);
        if p.start == v { at_v(&p.head, &mut b) } else { b.mul(&p.head) }
        for h in &p.hops {
            b.hop(h.edge, h.forward, false);
            if t.far(h.edge, h.forward) == v { at_v(&h.elem, &mut b) } else { b.mul(&h.elem) }
        }
        paths.push(b.path);
    }
    out.factor_marking = paths.split_off(t.free_marking.len());
    out.free_marking = paths;
    out.check_structure()?;
    Ok(out)
}

// ---- chain_split ----

/// Finds a maximal chain of `⟨c⟩`-edges whose vertices all have group
/// `⟨c⟩`, extremal vertices of valence 2 and interior ones of valence 3, and
/// turns it into a cycle of trivial edges closed by a new edge of length
/// `eps` with `t = c`.
pub fn chain_split(t: &MarkedGraphOfGroups, eps: &Q) -> Result<MarkedGraphOfGroups> {
    if !eps.is_positive() {
        return Err(Error::Domain("closing edge length must be positive".into()));
    }
    let spec = t.spec.clone();
    let cyc: Vec<usize> = (0..t.edges.len()).filter(|&e| t.edges[e].group.is_some()).collect();
    if let Some(&e) = cyc.iter().find(|&&e| spec.is_peripheral(t.edges[e].group.as_ref().unwrap()).is_some()) {
        return Err(Error::Refused(format!("edge {e} has a peripheral group; the move would break smallness")));
    }
    // components of the graph of cyclic edges
    let nv = t.vertices.len();
    let mut seen = vec![false; nv];
    for &e0 in &cyc {
        let s0 = t.edges[e0].src;
        if seen[s0] {
            continue;
        }
        let mut comp = vec![s0];
        seen[s0] = true;
        let mut q = VecDeque::from([s0]);
        while let Some(a) = q.pop_front() {
            for &e in &cyc {
                let ed = &t.edges[e];
                for (x, y) in [(ed.src, ed.dst), (ed.dst, ed.src)] {
                    if x == a && !seen[y] {
                        seen[y] = true;
                        comp.push(y);
                        q.push_back(y);
                    }
                }
            }
        }
        if let Some(order) = chain_order(t, &comp, &cyc) {
            return Ok(split_chain(t, &order, eps));
        }
    }
    Err(Error::NotApplicable("no maximal ⟨c⟩-chain with valence-2 extremal vertices".into()))
}

/// Orders `comp` as a chain `w₀ … w_m`, returning the vertices and the edges
/// between consecutive ones, if it has the required shape.
fn chain_order(t: &MarkedGraphOfGroups, comp: &[usize], cyc: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
    let spec = &t.spec;
    let zc = |v: usize| t.ends(v).iter().filter(|(e, _)| t.edges[*e].group.is_some()).count();
    for &v in comp {
        let vg = &t.vertices[v];
        if !vg.peripherals.is_empty() || vg.is_trivial() || t.stab_rank(v) != 1 {
            return None;
        }
        let (z, val) = (zc(v), t.valence(v));
        if !((z == 1 && val == 2) || (z == 2 && val == 3)) {
            return None;
        }
    }
    let chain_edges: Vec<usize> = cyc.iter().copied().filter(|&e| comp.contains(&t.edges[e].src)).collect();
    if chain_edges.len() + 1 != comp.len() || chain_edges.iter().any(|&e| t.edges[e].src == t.edges[e].dst) {
        return None;
    }
    // each edge group must be the whole vertex group at both ends
    for &e in &chain_edges {
        for out in [true, false] {
            let v = t.near(e, out);
            let g = t.end_group(e, out).unwrap();
            let u = cyclic_generator(spec, &t.vertices[v].generators(spec));
            match spec.is_power_of(&g, &u) {
                Some(m) if m.abs().is_one() => {}
                _ => return None,
            }
        }
    }
    let start = *comp.iter().find(|&&v| zc(v) == 1)?;
    let mut order = vec![start];
    let mut edges = Vec::new();
    while edges.len() < chain_edges.len() {
        let a = *order.last().unwrap();
        let e = *chain_edges.iter().find(|&&e| !edges.contains(&e) && (t.edges[e].src == a || t.edges[e].dst == a))?;
        edges.push(e);
        order.push(if t.edges[e].src == a { t.edges[e].dst } else { t.edges[e].src });
    }
    Some((order, edges))
}

fn split_chain(t: &MarkedGraphOfGroups, (order, edges): &(Vec<usize>, Vec<usize>), eps: &Q) -> MarkedGraphOfGroups {
    let spec = t.spec.clone();
    let mut w = t.clone();
    // relift outwards from the base (or from w₀) so every chain edge has t = 1
    let pivot = order.iter().position(|&v| v == w.base).unwrap_or(0);
    for dir in [1isize, -1] {
        let mut i = pivot as isize;
        loop {
            let (a, j) = (i as usize, i + dir);
            if j < 0 || j as usize >= order.len() {
                break;
            }
            let e = edges[if dir > 0 { a } else { a - 1 }];
            let out = w.edges[e].src == order[a];
            let tau = w.end_tau((e, out));
            w.relift(order[j as usize], &tau);
            i = j;
        }
    }
    let c = cyclic_generator(&spec, &w.vertices[order[0]].generators(&spec));
    let pos = |v: usize| order.iter().position(|&u| u == v);
    let m = order.len() - 1;
    let closing = w.edges.len();
    // lap from w_i: along the chain to w_m, across the closing edge, back to w_i
    let lap = |b: &mut PathBuf, i: usize, k: &BigInt| {
        let mut seq: Vec<(usize, bool)> = Vec::new();
        for j in i..m {
            seq.push((edges[j], w.edges[edges[j]].src == order[j]));
        }
        seq.push((closing, true));
        for j in 0..i {
            seq.push((edges[j], w.edges[edges[j]].src == order[j]));
        }
        let mut left = k.abs();
        while left.is_positive() {
            if k.is_positive() {
                for &(e, f) in &seq {
                    b.hop(e, f, true);
                }
            } else {
                for &(e, f) in seq.iter().rev() {
                    b.hop(e, !f, true);
                }
            }
            left -= 1;
        }
    };
    let at = |b: &mut PathBuf, v: usize, y: &Word| match pos(v) {
        Some(i) => lap(b, i, &spec.is_power_of(y, &c).expect("chain element is a power of c")),
        None => b.mul(y),
    };
    let mut paths = Vec::new();
    for p in w.free_marking.iter().chain(w.factor_marking.iter()) {
        let mut b = PathBuf::new(&spec, p.start);
        at(&mut b, p.start, &p.head);
        for h in &p.hops {
            b.hop(h.edge, h.forward, false);
            at(&mut b, w.far(h.edge, h.forward), &h.elem);
        }
        paths.push(b.path);
    }
    let mut out = w.clone();
    for &v in order {
        out.vertices[v] = VertexGroup::trivial();
    }
    for &e in edges {
        out.edges[e].group = None;
    }
    out.edges.push(Edge { src: order[m], dst: order[0], length: eps.clone(), t: c, group: None });
    out.factor_marking = paths.split_off(w.free_marking.len());
    out.free_marking = paths;
    out
}

// ---- decomposition over a listed basis ----

#[derive(Clone, Debug, PartialEq)]
enum Piece {
    Free(Word),
    Peripheral(usize, Word),
}

/// Writes `y` as a product of elements of the pieces by a best-first search
/// that peels pieces off the right end, ordered by remaining letter length.
fn decompose(spec: &FactorSpec, pieces: &[Piece], y: &Word, budget: usize) -> Option<Vec<(usize, Word)>> {
    let mut parent: HashMap<Word, Option<(Word, usize, Word)>> = HashMap::new();
    let mut heap = BinaryHeap::new();
    parent.insert(y.clone(), None);
    heap.push(Reverse((y.letter_length(), 0usize, y.clone())));
    let mut tick = 0usize;
    let mut pops = 0usize;
    while let Some(Reverse((_, _, r))) = heap.pop() {
        if r.is_identity() {
            let mut out = Vec::new();
            let mut cur = r;
            while let Some(Some((prev, j, el))) = parent.get(&cur).cloned() {
                out.push((j, el));
                cur = prev;
            }
            // walking back from the identity meets the leftmost piece first
            return Some(out);
        }
        pops += 1;
        if pops > budget {
            return None;
        }
        for (j, piece) in pieces.iter().enumerate() {
            let mut moves: Vec<Word> = Vec::new();
            match piece {
                Piece::Free(b) => {
                    moves.push(b.clone());
                    moves.push(spec.inverse(b));
                    if let ([Letter::Gen { index: i, exp: e }], Some(Letter::Gen { index: k, exp: f })) = (b.letters(), r.letters().last()) {
                        if i == k && e.abs().is_one() && f.abs() > BigInt::one() {
                            moves.push(spec.letter(Letter::Gen { index: *i, exp: f.clone() }));
                        }
                    }
                }
                Piece::Peripheral(i, c) => {
                    let w = spec.mul(&r, c);
                    if let Some(Letter::Per { factor, elt }) = w.letters().last() {
                        if factor == i {
                            let e = spec.letter(Letter::Per { factor: *i, elt: elt.clone() });
                            moves.push(spec.conj(c, &e));
                        }
                    }
                }
            }
            for el in moves {
                let next = spec.mul(&r, &spec.inverse(&el));
                if !parent.contains_key(&next) {
                    parent.insert(next.clone(), Some((r.clone(), j, el)));
                    tick += 1;
                    heap.push(Reverse((next.letter_length(), tick, next)));
                }
            }
        }
    }
    None
}

// ---- grushko_approximate ----

#[derive(Clone, Debug)]
pub struct Approximation {
    pub tree: MarkedGraphOfGroups,
    pub n: u64,
    /// Blown-up vertices plus eliminated edge groups.
    pub moves: usize,
    /// Largest new local edge length, times `n`.
    pub scale: Q,
    /// Local hops (new short edges) in each rewritten marking path, free
    /// generators first.
    pub local_hops: Vec<usize>,
}

impl Approximation {
    /// `C(w) = 4·scale·Σ_s |s|·(h_s + 1)` over the syllables `s` of `w`,
    /// where `h_s` counts local hops in the marking path of the syllable's
    /// generator (twice for a peripheral syllable, which goes out and back).
    pub fn constant(&self, w: &Word) -> Q {
        let nf = self.tree.spec.free_rank;
        let mut total = BigInt::zero();
        for l in w.letters() {
            let (k, h) = match l {
                Letter::Gen { index, exp } => (exp.abs(), self.local_hops[index - 1]),
                Letter::Per { factor, .. } => (BigInt::one(), 2 * self.local_hops[nf + factor - 1]),
            };
            total += k * BigInt::from(h + 1);
        }
        Q::from_integer(BigInt::from(4) * total) * &self.scale
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Plain,
    Blow,
}

struct Component {
    root: usize,
    c: Word,
    /// Loop length times `n`.
    gap: Q,
}

struct Node {
    vertex: usize,
    piece: usize,
    comp: usize,
    g: Word,
    dist: Q,
    parent_len: Q,
    sign: i64,
    m: BigInt,
}

/// Approximates a very small simplicial tree by a Grushko tree `T_n`.
pub fn grushko_approximate(t: &MarkedGraphOfGroups, n: u64, budget: usize) -> Result<Approximation> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let rep = t.validate(budget)?;
    if !rep.is_very_small || !rep.is_small {
        let why = rep.violations.iter().map(|v| v.axiom.clone()).collect::<Vec<_>>().join(", ");
        return Err(Error::Refused(format!("tree is not very small ({why})")));
    }
    if rep.is_grushko {
        let hops = t.free_marking.iter().chain(t.factor_marking.iter()).map(|_| 0).collect();
        return Ok(Approximation { tree: t.clone(), n, moves: 0, scale: Q::zero(), local_hops: hops });
    }
    let spec = t.spec.clone();
    let nq = Q::from_integer(BigInt::from(n));
    let inv_n = Q::one() / &nq;

    let mut kinds = Vec::new();
    let mut pieces: Vec<Vec<Piece>> = Vec::new();
    for (v, vg) in t.vertices.iter().enumerate() {
        let free: Vec<Word> = vg.free.iter().filter(|w| !w.is_identity()).cloned().collect();
        if vg.is_trivial() || (vg.peripherals.len() == 1 && free.is_empty()) {
            kinds.push(Kind::Plain);
            pieces.push(vec![]);
            continue;
        }
        let ps: Vec<Piece> = vg
            .peripherals
            .iter()
            .map(|(i, c)| Piece::Peripheral(*i, c.clone()))
            .chain(free.into_iter().map(Piece::Free))
            .collect();
        if subgroup_rank(&spec, &vg.generators(&spec)).rk_k() != ps.len() {
            return Err(Error::Refused(format!("vertex {v}: listed generators are not a free basis of the stabilizer")));
        }
        kinds.push(Kind::Blow);
        pieces.push(ps);
    }

    // basis elements linked by edge groups
    let mut node_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut adj: Vec<Vec<(usize, bool, usize)>> = Vec::new();
    let cyc: Vec<usize> = (0..t.edges.len()).filter(|&e| t.edges[e].group.is_some()).collect();
    let mut end_node: HashMap<(usize, bool), usize> = HashMap::new();
    for &e in &cyc {
        for out in [true, false] {
            let v = t.near(e, out);
            let g = t.end_group(e, out).unwrap();
            let gi = spec.inverse(&g);
            let j = pieces[v]
                .iter()
                .position(|p| matches!(p, Piece::Free(b) if *b == g || *b == gi))
                .ok_or_else(|| Error::Refused(format!("edge {e}: its group is not a listed basis element at vertex {v}")))?;
            let id = *node_of.entry((v, j)).or_insert_with(|| {
                nodes.push(Node {
                    vertex: v,
                    piece: j,
                    comp: usize::MAX,
                    g: Word::identity(),
                    dist: Q::zero(),
                    parent_len: Q::zero(),
                    sign: 1,
                    m: BigInt::zero(),
                });
                adj.push(vec![]);
                nodes.len() - 1
            });
            end_node.insert((e, out), id);
        }
        let (a, b) = (end_node[&(e, true)], end_node[&(e, false)]);
        if a == b {
            return Err(Error::Refused(format!("edge {e} links a basis element to itself")));
        }
        adj[a].push((e, true, b));
        adj[b].push((e, false, a));
    }
    let mut comps: Vec<Component> = Vec::new();
    for start in 0..nodes.len() {
        if nodes[start].comp != usize::MAX {
            continue;
        }
        let ci = comps.len();
        let mut members = vec![start];
        nodes[start].comp = ci;
        let mut q = VecDeque::from([start]);
        while let Some(a) = q.pop_front() {
            for &(_, _, b) in &adj[a] {
                if nodes[b].comp == usize::MAX {
                    nodes[b].comp = ci;
                    members.push(b);
                    q.push_back(b);
                }
            }
        }
        let edge_count: usize = members.iter().map(|&a| adj[a].len()).sum::<usize>() / 2;
        if edge_count + 1 != members.len() {
            return Err(Error::Refused("edge groups link basis elements in a cycle".into()));
        }
        if members.iter().any(|&a| adj[a].len() > 2) {
            return Err(Error::Refused("an edge group fixes a tripod".into()));
        }
        // designated endpoint: the extremal element with the least vertex id
        let root = *members
            .iter()
            .filter(|&&a| adj[a].len() == 1)
            .min_by_key(|&&a| (nodes[a].vertex, nodes[a].piece))
            .unwrap();
        let Piece::Free(c) = pieces[nodes[root].vertex][nodes[root].piece].clone() else { unreachable!() };
        let mut lens = Vec::new();
        let mut q = VecDeque::from([root]);
        let mut done = vec![root];
        while let Some(a) = q.pop_front() {
            for &(e, out, b) in &adj[a] {
                if done.contains(&b) {
                    continue;
                }
                done.push(b);
                let len = t.edges[e].length.clone();
                lens.push(len.clone());
                nodes[b].g = spec.mul(&nodes[a].g, &t.end_tau((e, out)));
                nodes[b].dist = &nodes[a].dist + &len;
                nodes[b].parent_len = len;
                q.push_back(b);
            }
        }
        let gap = span_generator(&lens);
        for &b in &members {
            let Piece::Free(beta) = &pieces[nodes[b].vertex][nodes[b].piece] else { unreachable!() };
            let x = spec.conj(&nodes[b].g, beta);
            nodes[b].sign = if x == c {
                1
            } else if x == spec.inverse(&c) {
                -1
            } else {
                return Err(Error::Refused(format!("vertex {}: linked basis element is not conjugate to {c}", nodes[b].vertex)));
            };
            let m = &nodes[b].dist / &gap * &nq;
            nodes[b].m = m.to_integer();
        }
        comps.push(Component { root, c, gap });
    }

    // the new graph: T's vertices keep their ids, trivial edges keep theirs
    let mut out = MarkedGraphOfGroups {
        spec: spec.clone(),
        vertices: Vec::new(),
        edges: Vec::new(),
        base: t.base,
        free_marking: vec![],
        factor_marking: vec![],
    };
    for (v, vg) in t.vertices.iter().enumerate() {
        out.vertices.push(if kinds[v] == Kind::Plain { vg.clone() } else { VertexGroup::trivial() });
    }
    let mut emap: HashMap<usize, usize> = HashMap::new();
    for (e, ed) in t.edges.iter().enumerate() {
        if ed.group.is_none() {
            emap.insert(e, out.edges.len());
            out.edges.push(ed.clone());
        }
    }
    let mut scale = Q::zero();
    let mut push_local = |out: &mut MarkedGraphOfGroups, ed: Edge| {
        let s = &ed.length * &nq;
        if s > scale {
            scale = s;
        }
        out.edges.push(ed);
        out.edges.len() - 1
    };
    let mut local_edge: HashMap<(usize, usize), usize> = HashMap::new();
    for v in 0..t.vertices.len() {
        // spokes and unlinked loops at one vertex share a single 1/n, so a
        // blow-up adds at most 1/n of volume however many factors it frees
        let unlinked = pieces[v]
            .iter()
            .enumerate()
            .filter(|(j, p)| matches!(p, Piece::Peripheral(..)) || !node_of.contains_key(&(v, *j)))
            .count()
            .max(1);
        let share = &inv_n / Q::from_integer(BigInt::from(unlinked));
        for (j, piece) in pieces[v].iter().enumerate() {
            match piece {
                Piece::Peripheral(i, c) => {
                    out.vertices.push(VertexGroup::peripheral(*i, c.clone()));
                    let sv = out.vertices.len() - 1;
                    let id = push_local(&mut out, Edge { src: v, dst: sv, length: share.clone(), t: Word::identity(), group: None });
                    local_edge.insert((v, j), id);
                }
                Piece::Free(b) => {
                    let length = match node_of.get(&(v, j)) {
                        Some(&a) if comps[nodes[a].comp].root != a => continue,
                        Some(&a) => &comps[nodes[a].comp].gap * &inv_n,
                        None => share.clone(),
                    };
                    let id = push_local(&mut out, Edge { src: v, dst: v, length, t: b.clone(), group: None });
                    local_edge.insert((v, j), id);
                }
            }
        }
    }
    let mut attach: HashMap<usize, usize> = HashMap::new();
    for (a, nd) in nodes.iter().enumerate() {
        let comp = &comps[nd.comp];
        if comp.root == a {
            continue;
        }
        let tw = spec.mul(&spec.pow(&comp.c, &nd.m), &nd.g);
        let src = nodes[comp.root].vertex;
        let id = push_local(&mut out, Edge { src, dst: nd.vertex, length: &nd.parent_len * &inv_n, t: tw, group: None });
        attach.insert(a, id);
    }
    let root_loop = |a: usize| local_edge[&(nodes[comps[nodes[a].comp].root].vertex, nodes[comps[nodes[a].comp].root].piece)];

    let local = |b: &mut PathBuf, v: usize, y: &Word| -> Result<()> {
        if y.is_identity() {
            return Ok(());
        }
        if kinds[v] == Kind::Plain {
            b.mul(y);
            return Ok(());
        }
        let letters = decompose(&spec, &pieces[v], y, budget.max(64))
            .ok_or_else(|| Error::Inconclusive(format!("could not write {y} over the basis of vertex {v}")))?;
        for (j, el) in letters {
            match &pieces[v][j] {
                Piece::Peripheral(..) => {
                    let sp = local_edge[&(v, j)];
                    b.hop(sp, true, true);
                    b.mul(&el);
                    b.hop(sp, false, true);
                }
                Piece::Free(beta) => {
                    let k = spec.is_power_of(&el, beta).expect("peeled a power of the basis element");
                    match node_of.get(&(v, j)) {
                        Some(&a) if comps[nodes[a].comp].root != a => {
                            b.hop(attach[&a], false, true);
                            b.laps(root_loop(a), &(k * nodes[a].sign), true);
                            b.hop(attach[&a], true, true);
                        }
                        _ => b.laps(local_edge[&(v, j)], &k, true),
                    }
                }
            }
        }
        Ok(())
    };
    let rewrite = |p: &Path| -> Result<PathBuf> {
        let mut b = PathBuf::new(&spec, p.start);
        local(&mut b, p.start, &p.head)?;
        for h in &p.hops {
            match emap.get(&h.edge) {
                Some(&ne) => b.hop(ne, h.forward, false),
                None => {
                    let (a, z) = (end_node[&(h.edge, h.forward)], end_node[&(h.edge, !h.forward)]);
                    let root = comps[nodes[a].comp].root;
                    if a != root {
                        b.hop(attach[&a], false, true);
                    }
                    b.laps(root_loop(a), &(&nodes[a].m - &nodes[z].m), false);
                    if z != root {
                        b.hop(attach[&z], true, true);
                    }
                }
            }
            local(&mut b, t.far(h.edge, h.forward), &h.elem)?;
        }
        Ok(b)
    };
    let mut local_hops = Vec::new();
    for p in &t.free_marking {
        let b = rewrite(p)?;
        local_hops.push(b.local);
        out.free_marking.push(b.path);
    }
    for (i, p) in t.factor_marking.iter().enumerate() {
        let mut b = rewrite(p)?;
        let q = t.path_end(p);
        if kinds[q] == Kind::Blow {
            // move on to the spoke carrying this factor
            let pv = t.path_value(p);
            let stab = t.stab_graph(q);
            let factor = i + 1;
            let cands: Vec<BigInt> = match spec.factor(factor) {
                FactorModel::InfiniteCyclic => (-8..=8).map(BigInt::from).collect(),
                f => f.elements().unwrap_or_default(),
            };
            let mut found = None;
            'search: for (j, piece) in pieces[q].iter().enumerate() {
                let Piece::Peripheral(fi, c) = piece else { continue };
                if *fi != factor {
                    continue;
                }
                for g in &cands {
                    let gw = spec.letter(Letter::Per { factor, elt: g.clone() });
                    let y = spec.mul_all([&spec.inverse(&pv), &gw, &spec.inverse(c)]);
                    if stab.contains(&y) {
                        found = Some((j, y));
                        break 'search;
                    }
                }
            }
            let (j, y) = found.ok_or_else(|| Error::Inconclusive(format!("factor {factor}: no spoke found at vertex {q}")))?;
            local(&mut b, q, &y)?;
            b.hop(local_edge[&(q, j)], true, true);
        }
        local_hops.push(b.local);
        out.factor_marking.push(b.path);
    }
    out.check_structure()?;
    let moves = kinds.iter().filter(|k| **k == Kind::Blow).count() + cyc.len();
    Ok(Approximation { tree: out, n, moves, scale, local_hops })
}

// ---- reports ----

#[derive(Clone, Debug, PartialEq)]
pub struct DominationReport {
    pub probes: usize,
    /// `(w, ‖w‖_{T_n}, ‖w‖_T)` with the first smaller.
    pub violations: Vec<(Word, Q, Q)>,
    pub volume_gap: Q,
}

impl DominationReport {
    pub fn to_json(&self, spec: &FactorSpec) -> Value {
        json!({
            "format": 1,
            "probes": self.probes,
            "volume_gap": q_to_json(&self.volume_gap),
            "violations": self.violations.iter().map(|(w, a, b)| json!({
                "word": spec.word_to_json(w), "approx": q_to_json(a), "target": q_to_json(b),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Checks `‖w‖_{T_n} ≥ ‖w‖_T` on the probes and reports the quotient volume
/// gap `vol(T_n) − vol(T)`.
pub fn check_lipschitz_domination(tn: &MarkedGraphOfGroups, t: &MarkedGraphOfGroups, probes: &[Word]) -> Result<DominationReport> {
    if tn.spec != t.spec {
        return Err(Error::IncompatibleContext("trees act for different free products".into()));
    }
    let a = tn.checked_spectrum(probes)?;
    let b = t.checked_spectrum(probes)?;
    let violations = probes
        .iter()
        .zip(a.into_iter().zip(b))
        .filter(|(_, (x, y))| x < y)
        .map(|(w, (x, y))| (w.clone(), x, y))
        .collect();
    Ok(DominationReport { probes: probes.len(), violations, volume_gap: tn.quotient_volume() - t.quotient_volume() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub n: u64,
    pub max_deviation: Q,
    /// Probes whose deviation exceeds `C(w)/n`: `(w, deviation, bound)`.
    pub over_bound: Vec<(Word, Q, Q)>,
    pub domination: DominationReport,
}

impl ConvergenceReport {
    pub fn to_json(&self, spec: &FactorSpec) -> Value {
        json!({
            "format": 1,
            "n": self.n,
            "max_deviation": q_to_json(&self.max_deviation),
            "over_bound": self.over_bound.iter().map(|(w, d, c)| json!({
                "word": spec.word_to_json(w), "deviation": q_to_json(d), "bound": q_to_json(c),
            })).collect::<Vec<_>>(),
            "domination": self.domination.to_json(spec),
        })
    }
}

pub fn convergence_report(ap: &Approximation, t: &MarkedGraphOfGroups, probes: &[Word]) -> Result<ConvergenceReport> {
    let a = ap.tree.checked_spectrum(probes)?;
    let b = t.checked_spectrum(probes)?;
    let nq = Q::from_integer(BigInt::from(ap.n));
    let mut max_deviation = Q::zero();
    let mut over_bound = Vec::new();
    for (w, (x, y)) in probes.iter().zip(a.iter().zip(b.iter())) {
        let d = (x - y).abs();
        let bound = ap.constant(w) / &nq;
        if d > bound {
            over_bound.push((w.clone(), d.clone(), bound));
        }
        if d > max_deviation {
            max_deviation = d;
        }
    }
    let domination = check_lipschitz_domination(&ap.tree, t, probes)?;
    Ok(ConvergenceReport { n: ap.n, max_deviation, over_bound, domination })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::index::lattice_ranks;
    use crate::rational::{q, qi};
    use crate::trees::probe_words;

    fn spectrum(t: &MarkedGraphOfGroups, ws: &[Word]) -> Vec<Q> {
        t.length_spectrum(ws)
    }

    #[test]
    fn loop_replace_edge_of_groups() {
        let t = catalog::edge_of_groups();
        let s = t.spec.clone();
        let eps = q(1, 10);
        let t1 = loop_replace(&t, 0, &eps).unwrap();
        assert_eq!(t1.edges.len(), t.edges.len() + 1);
        let t2 = loop_replace(&t1, 1, &eps).unwrap();
        assert_eq!(t2.edges.len(), t.edges.len() + 2);
        let abc = [s.x(1, 1), s.x(2, 1), s.mul(&s.x(1, 1), &s.x(2, 1))];
        assert_eq!(spectrum(&t2, &abc), vec![q(1, 10), q(1, 10), q(11, 5)]);
        assert_eq!(spectrum(&t, &abc), vec![qi(0), qi(0), qi(2)]);
        assert!(t2.validate(1000).unwrap().is_grushko);
        // same spectrum as the barbell
        let probes = probe_words(&s, 4, 500);
        assert_eq!(spectrum(&t2, &probes), spectrum(&catalog::barbell(eps.clone()), &probes));
    }

    #[test]
    fn loop_replace_bound_and_domination() {
        let t = catalog::edge_of_groups();
        let probes = probe_words(&t.spec, 4, 500);
        let base = spectrum(&t, &probes);
        for n in [2i64, 5, 10, 40] {
            let eps = q(1, n);
            let t2 = loop_replace(&loop_replace(&t, 0, &eps).unwrap(), 1, &eps).unwrap();
            for (w, (a, b)) in probes.iter().zip(spectrum(&t2, &probes).iter().zip(&base)) {
                assert!(a >= b, "{w}");
            }
            let r = check_lipschitz_domination(&t2, &t, &probes).unwrap();
            assert!(r.violations.is_empty());
            assert_eq!(r.volume_gap, &eps * qi(2));
        }
    }

    #[test]
    fn loop_replace_wrong_type() {
        let t = catalog::unit_theta();
        assert!(matches!(loop_replace(&t, 0, &q(1, 2)), Err(Error::Precondition(_))));
        assert!(matches!(loop_replace(&catalog::edge_of_groups(), 0, &qi(0)), Err(Error::Domain(_))));
    }

    #[test]
    fn chain_split_instance() {
        let t = catalog::chain_instance();
        let rep = t.validate(1000).unwrap();
        assert!(rep.is_very_small && rep.is_minimal, "{:?}", rep.violations);
        let t2 = chain_split(&t, &q(1, 3)).unwrap();
        assert_eq!(t2.edges.len(), 6);
        let rep2 = t2.validate(1000).unwrap();
        assert!(rep2.is_very_small, "{:?}", rep2.violations);
        assert!(lattice_ranks(&t2).r_z >= lattice_ranks(&t).r_z);
        assert!(matches!(chain_split(&catalog::hnn(), &q(1, 3)), Err(Error::NotApplicable(_))));
        assert!(matches!(chain_split(&catalog::unit_theta(), &q(1, 3)), Err(Error::NotApplicable(_))));
        let mut p = catalog::peripheral_edge();
        p.edges[0].group = Some(p.spec.p(1, 1));
        assert!(matches!(chain_split(&p, &q(1, 3)), Err(Error::Refused(_))));
    }

    #[test]
    fn decomposition_peels_basis() {
        let s = FactorSpec::new(1, vec![FactorModel::FiniteCyclic { order: 3 }]).unwrap();
        let a = s.conj(&s.x(1, 1), &s.p(1, 1));
        let pieces = [Piece::Peripheral(1, s.x(1, 1)), Piece::Free(s.x(1, 2))];
        let y = s.mul_all([&a, &s.x(1, 4), &s.inverse(&a), &s.x(1, -2)]);
        let d = decompose(&s, &pieces, &y, 1000).unwrap();
        let prod = s.mul_all(d.iter().map(|(_, e)| e));
        assert_eq!(prod, y);
    }

    fn check_target(t: &MarkedGraphOfGroups) -> Vec<Q> {
        let probes = probe_words(&t.spec, 4, 500);
        let mut maxes = Vec::new();
        for n in [4u64, 8, 16, 32] {
            let ap = grushko_approximate(t, n, 2000).unwrap();
            let rep = ap.tree.validate(2000).unwrap();
            assert!(rep.is_grushko, "n={n}: {:?}", rep.violations);
            let c = convergence_report(&ap, t, &probes).unwrap();
            assert!(c.over_bound.is_empty(), "n={n}: {:?}", &c.over_bound[..c.over_bound.len().min(3)]);
            maxes.push(c.max_deviation);
        }
        maxes
    }

    #[test]
    fn approximates_edge_of_groups() {
        let t = catalog::edge_of_groups();
        let ap = grushko_approximate(&t, 10, 1000).unwrap();
        let probes = probe_words(&t.spec, 4, 500);
        assert_eq!(spectrum(&ap.tree, &probes), spectrum(&catalog::barbell(q(1, 10)), &probes));
        let s = t.spec.clone();
        let short = [s.x(1, 1), s.x(2, 1), s.mul(&s.x(1, 1), &s.x(2, 1))];
        assert_eq!(convergence_report(&ap, &t, &short).unwrap().max_deviation, q(1, 5));
        // each a/b syllable of a cyclic word costs one loop of length 1/10
        assert_eq!(convergence_report(&ap, &t, &probes).unwrap().max_deviation, q(2, 5));
        let m = check_target(&t);
        assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
    }

    #[test]
    fn approximates_hnn() {
        let t = catalog::hnn();
        let s = t.spec.clone();
        for n in [4u64, 8, 16, 32] {
            let ap = grushko_approximate(&t, n, 1000).unwrap();
            assert_eq!(ap.tree.translation_length(&s.x(1, 1)), q(1, n as i64));
            let ts = ap.tree.translation_length(&s.x(2, 1));
            assert!((ts - qi(1)).abs() <= q(1, n as i64));
        }
        let m = check_target(&t);
        assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
    }

    #[test]
    fn approximates_other_targets() {
        for t in [catalog::amalgam(), catalog::chain_instance(), catalog::mixed_trivial_arc()] {
            let m = check_target(&t);
            assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
        }
    }

    #[test]
    fn grushko_input_unchanged_and_refusals() {
        let r = catalog::rose(&FactorSpec::free(2));
        assert_eq!(grushko_approximate(&r, 7, 100).unwrap().tree, r);
        assert!(matches!(grushko_approximate(&catalog::tame_chain(2), 4, 1000), Err(Error::Refused(_))));
        assert!(matches!(grushko_approximate(&r, 0, 100), Err(Error::Domain(_))));
    }

    #[test]
    fn shrunk_tree_is_caught() {
        let t = catalog::edge_of_groups();
        let mut shrunk = t.clone();
        shrunk.edges[0].length = q(9, 10);
        let s = t.spec.clone();
        let ab = s.mul(&s.x(1, 1), &s.x(2, 1));
        let r = check_lipschitz_domination(&shrunk, &t, &[ab.clone()]).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].0, ab);
        let same = check_lipschitz_domination(&t, &t, &probe_words(&s, 3, 100)).unwrap();
        assert!(same.violations.is_empty() && same.volume_gap == qi(0));
    }
}
