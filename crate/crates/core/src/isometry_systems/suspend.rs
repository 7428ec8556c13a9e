//! Suspension of a simplicial tree relative to a finite subtree `K` of its
//! Bass–Serre tree.
//!
//! Vertices of the Bass–Serre tree are written `g·ṽ`. The system lives on
//! `F = K ⊔ K₁ ⊔ … ⊔ K_k` with `K_i = G_i·K / G_i`: one isometry
//! `K ∩ x_j⁻¹K → K ∩ x_jK` per free generator, and the quotient maps
//! `K → K_i` cut into pieces on which they are injective.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_traits::Zero;

use super::{IsometrySystem, MetricForest, PartialIsometry, Point, SystemMarking};
use crate::error::{Error, Result};
use crate::rational::Q;
use crate::subgroups::KuroshGraph;
use crate::trees::{Hop, MarkedGraphOfGroups, Path};
use crate::words::{FactorModel, Letter, Word};

/// The vertex `elem·ṽ` of the Bass–Serre tree.
#[derive(Clone, Debug, PartialEq)]
pub struct TreePoint {
    pub vertex: usize,
    pub elem: Word,
}

/// A suspended tree: forest nodes `0..k_points.len()` are the vertices of
/// `K`, in order.
#[derive(Clone, Debug)]
pub struct Suspension {
    pub system: IsometrySystem,
    pub k_points: Vec<TreePoint>,
    /// A node of `K` in the orbit of each quotient vertex, if any.
    pub vertex_nodes: Vec<Option<usize>>,
    /// The node of `K` fixed by each factor.
    pub special_nodes: Vec<usize>,
}

// powers tried when deciding whether two points differ by an element of an
// infinite cyclic factor
const CYCLIC_SEARCH: i64 = 16;

struct Ctx<'a> {
    t: &'a MarkedGraphOfGroups,
    stabs: Vec<KuroshGraph>,
    span: Vec<Path>,
}

impl<'a> Ctx<'a> {
    fn new(t: &'a MarkedGraphOfGroups) -> Ctx<'a> {
        let stabs = (0..t.vertices.len()).map(|v| t.stab_graph(v)).collect();
        // spanning paths from the base, crossing edges with trivial elements
        let mut span: Vec<Option<Path>> = vec![None; t.vertices.len()];
        span[t.base] = Some(Path::at(t.base, Word::identity()));
        let mut queue = VecDeque::from([t.base]);
        while let Some(u) = queue.pop_front() {
            for (e, out) in t.ends(u) {
                let w = t.far(e, out);
                if span[w].is_none() {
                    let mut p = span[u].clone().unwrap();
                    p.hops.push(Hop { edge: e, forward: out, elem: Word::identity() });
                    span[w] = Some(p);
                    queue.push_back(w);
                }
            }
        }
        let span = span.into_iter().map(|p| p.expect("connected quotient")).collect();
        Ctx { t, stabs, span }
    }

    fn same(&self, p: &TreePoint, q: &TreePoint) -> bool {
        let s = &self.t.spec;
        p.vertex == q.vertex && self.stabs[p.vertex].contains(&s.mul(&s.inverse(&p.elem), &q.elem))
    }

    fn translate(&self, g: &Word, p: &TreePoint) -> TreePoint {
        TreePoint { vertex: p.vertex, elem: self.t.spec.mul(g, &p.elem) }
    }

    /// A path from the base lift to `p`.
    fn route(&self, p: &TreePoint) -> Path {
        let t = self.t;
        let s = &t.spec;
        let sv = t.path_value(&self.span[p.vertex]);
        let head = t.word_path(&s.mul(&p.elem, &s.inverse(&sv)));
        t.concat(&head, &self.span[p.vertex])
    }

    /// Vertices along the geodesic `[p, q]`, with the quotient edge crossed
    /// to reach each one after the first.
    fn geodesic(&self, p: &TreePoint, q: &TreePoint) -> Vec<(TreePoint, Option<(usize, bool)>)> {
        let t = self.t;
        let s = &t.spec;
        let rp = self.route(p);
        let path = t.reduce_path(&t.concat(&t.left_mul(&p.elem, &t.reverse(&rp)), &self.route(q)));
        let mut out = vec![(p.clone(), None)];
        let mut acc = path.head.clone();
        for h in &path.hops {
            let tt = &t.edges[h.edge].t;
            acc = if h.forward { s.mul(&acc, tt) } else { s.mul(&acc, &s.inverse(tt)) };
            out.push((TreePoint { vertex: t.far(h.edge, h.forward), elem: acc.clone() }, Some((h.edge, h.forward))));
            acc = s.mul(&acc, &h.elem);
        }
        out
    }

    fn push_unique(&self, pts: &mut Vec<TreePoint>, p: TreePoint) -> usize {
        match pts.iter().position(|q| self.same(q, &p)) {
            Some(i) => i,
            None => {
                pts.push(p);
                pts.len() - 1
            }
        }
    }
}

/// Vertices visited by a path, starting at its start lift.
fn path_points(t: &MarkedGraphOfGroups, p: &Path) -> Vec<TreePoint> {
    let s = &t.spec;
    let mut out = vec![TreePoint { vertex: p.start, elem: p.head.clone() }];
    let mut acc = p.head.clone();
    for h in &p.hops {
        let tt = &t.edges[h.edge].t;
        acc = if h.forward { s.mul(&acc, tt) } else { s.mul(&acc, &s.inverse(tt)) };
        acc = s.mul(&acc, &h.elem);
        out.push(TreePoint { vertex: t.far(h.edge, h.forward), elem: acc.clone() });
    }
    out
}

/// Unit steps of a word: free letters one power at a time, peripheral
/// letters whole.
fn unit_prefixes(spec: &crate::words::FactorSpec, w: &Word) -> Vec<Word> {
    let mut out = Vec::new();
    let mut acc = Word::identity();
    for l in w.letters() {
        match l {
            Letter::Gen { index, exp } => {
                let step = if exp > &BigInt::zero() { 1 } else { -1 };
                let mut k = exp.clone();
                while !k.is_zero() {
                    acc = spec.mul(&acc, &spec.x(*index, step));
                    out.push(acc.clone());
                    k -= step;
                }
            }
            Letter::Per { .. } => {
                acc = spec.mul(&acc, &spec.letter(l.clone()));
                out.push(acc.clone());
            }
        }
    }
    out
}

/// A finite subtree `K` large enough for the suspension to give back the
/// tree: the hull of the base lift, every vertex the marking paths visit,
/// a lifted fundamental domain, and for each stabilizer generator `y` of a
/// chosen lift `P` the points `p⁻¹·P` for the prefixes `p` of `y` (so the
/// relation `y·P = P` is carried by a leaf), likewise for edge groups.
pub fn fundamental_subtree(t: &MarkedGraphOfGroups) -> Vec<TreePoint> {
    let ctx = Ctx::new(t);
    let s = &t.spec;
    let mut targets: Vec<TreePoint> = vec![TreePoint { vertex: t.base, elem: Word::identity() }];
    for p in t.free_marking.iter().chain(&t.factor_marking) {
        targets.extend(path_points(t, p));
    }
    let lift: Vec<Word> = ctx.span.iter().map(|p| t.path_value(p)).collect();
    for (v, sv) in lift.iter().enumerate() {
        targets.push(TreePoint { vertex: v, elem: sv.clone() });
    }
    for e in &t.edges {
        targets.push(TreePoint { vertex: e.dst, elem: s.mul(&lift[e.src], &e.t) });
        targets.push(TreePoint { vertex: e.src, elem: s.mul(&lift[e.dst], &s.inverse(&e.t)) });
    }
    for (v, vg) in t.vertices.iter().enumerate() {
        let p = TreePoint { vertex: v, elem: lift[v].clone() };
        for y in vg.generators(s) {
            let big = s.mul_all([&lift[v], &y, &s.inverse(&lift[v])]);
            for pre in unit_prefixes(s, &big) {
                targets.push(ctx.translate(&s.inverse(&pre), &p));
            }
        }
    }
    for e in &t.edges {
        if let Some(c) = &e.group {
            let p = TreePoint { vertex: e.src, elem: lift[e.src].clone() };
            let q = TreePoint { vertex: e.dst, elem: s.mul(&lift[e.src], &e.t) };
            let big = s.mul_all([&lift[e.src], c, &s.inverse(&lift[e.src])]);
            for pre in unit_prefixes(s, &big) {
                let g = s.inverse(&pre);
                targets.push(ctx.translate(&g, &p));
                targets.push(ctx.translate(&g, &q));
            }
        }
    }
    let base = targets[0].clone();
    let mut hull: Vec<TreePoint> = Vec::new();
    for q in &targets {
        for (p, _) in ctx.geodesic(&base, q) {
            ctx.push_unique(&mut hull, p);
        }
    }
    hull
}

/// Suspends `t` relative to the subtree spanned by the vertices `k`.
///
/// Fails with a precondition error when `K` is disconnected, misses the
/// base lift or a fixed point of a factor, or is disjoint from `x_j·K`.
pub fn suspend(t: &MarkedGraphOfGroups, k: &[TreePoint]) -> Result<Suspension> {
    t.check_structure()?;
    let ctx = Ctx::new(t);
    let s = &t.spec;
    let mut pts: Vec<TreePoint> = Vec::new();
    for p in k {
        if p.vertex >= t.vertices.len() {
            return Err(Error::Domain(format!("no vertex {}", p.vertex)));
        }
        s.check_word(&p.elem)?;
        ctx.push_unique(&mut pts, p.clone());
    }
    let n = pts.len();
    if n == 0 {
        return Err(Error::Precondition("K is empty".into()));
    }
    let find = |p: &TreePoint| pts.iter().position(|q| ctx.same(q, p));

    // edges of K: pairs at distance one hop
    let mut kedges: Vec<(usize, usize, Q)> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let g = ctx.geodesic(&pts[i], &pts[j]);
            if g.len() == 2 {
                let (e, _) = g[1].1.unwrap();
                kedges.push((i, j, t.edges[e].length.clone()));
                adj[i].push(kedges.len() - 1);
                adj[j].push(kedges.len() - 1);
            }
        }
    }
    let other = |e: usize, v: usize| if kedges[e].0 == v { kedges[e].1 } else { kedges[e].0 };
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &e in &adj[u] {
            let w = other(e, u);
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    if let Some(v) = seen.iter().position(|x| !x) {
        return Err(Error::Precondition(format!("K is not connected (vertex {v} of K is cut off)")));
    }
    let base = find(&TreePoint { vertex: t.base, elem: Word::identity() })
        .ok_or_else(|| Error::Precondition("K does not contain the base lift".into()))?;
    let mut special_nodes = Vec::new();
    for (i, p) in t.factor_marking.iter().enumerate() {
        let x = TreePoint { vertex: t.path_end(p), elem: t.path_value(p) };
        special_nodes
            .push(find(&x).ok_or_else(|| Error::Precondition(format!("K does not contain the fixed point of G_{}", i + 1)))?);
    }

    let induced = |nodes: &BTreeSet<usize>| -> Vec<usize> {
        // leaves of the subtree of K spanned by `nodes`
        let mut leaves: Vec<usize> = nodes
            .iter()
            .copied()
            .filter(|v| adj[*v].iter().filter(|e| nodes.contains(&other(**e, *v))).count() <= 1)
            .collect();
        leaves.sort();
        leaves
    };

    let mut isos = Vec::new();
    for j in 1..=s.free_rank {
        let xj = s.x(j, 1);
        let mut map = BTreeMap::new();
        for (i, p) in pts.iter().enumerate() {
            if let Some(q) = find(&ctx.translate(&xj, p)) {
                map.insert(i, q);
            }
        }
        if map.is_empty() {
            return Err(Error::Precondition(format!("K ∩ x_{j}·K is empty")));
        }
        let leaves = induced(&map.keys().copied().collect());
        let mut phi = PartialIsometry::new(
            leaves.iter().map(|v| Point::Node(*v)).collect(),
            leaves.iter().map(|v| Point::Node(map[v])).collect(),
        );
        phi.label = xj;
        isos.push(phi);
    }

    let mut forest = MetricForest { nodes: n, edges: kedges.clone(), special: Vec::new() };
    let mut special_factors = Vec::new();
    for (fi, &xi) in special_nodes.iter().enumerate() {
        let factor = fi + 1;
        let elements: Vec<Word> = match s.factor(factor) {
            FactorModel::InfiniteCyclic => (1..=CYCLIC_SEARCH).flat_map(|m| [m, -m]).map(|m| s.p(factor, m)).collect(),
            f => f
                .elements()
                .unwrap_or_default()
                .into_iter()
                .filter(|a| !f.is_identity(a))
                .map(|a| s.letter(Letter::Per { factor, elt: a }))
                .collect(),
        };
        // breadth-first from the fixed point; each node joins the class of an
        // earlier node it is a G_i-translate of
        let mut order = vec![xi];
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut depth: Vec<Option<Q>> = vec![None; n];
        depth[xi] = Some(Q::zero());
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &e in &adj[u] {
                let w = other(e, u);
                if depth[w].is_none() {
                    depth[w] = Some(depth[u].clone().unwrap() + &kedges[e].2);
                    parent[w] = Some((u, e));
                    order.push(w);
                }
            }
        }
        let mut class = vec![0usize; n];
        let mut h: Vec<Word> = vec![Word::identity(); n];
        let mut reps: Vec<usize> = Vec::new();
        for &u in &order {
            let mut found = None;
            for (c, &r) in reps.iter().enumerate() {
                if pts[r].vertex != pts[u].vertex || depth[r] != depth[u] {
                    continue;
                }
                if let Some(g) = elements.iter().find(|g| ctx.same(&ctx.translate(g, &pts[r]), &pts[u])) {
                    found = Some((c, g.clone()));
                    break;
                }
            }
            match found {
                Some((c, g)) => {
                    class[u] = c;
                    h[u] = g;
                }
                None => {
                    class[u] = reps.len();
                    reps.push(u);
                }
            }
        }
        let off = forest.nodes;
        forest.nodes += reps.len();
        for &r in &reps {
            if let Some((p, e)) = parent[r] {
                forest.edges.push((off + class[p], off + class[r], kedges[e].2.clone()));
            }
        }
        forest.special.push(off + class[xi]);
        special_factors.push(factor);

        // point label of u: rep = h_u⁻¹·u; an edge takes its child's label
        let lambda: Vec<Word> = h.iter().map(|g| s.inverse(g)).collect();
        let mut edge_label: BTreeMap<usize, usize> = BTreeMap::new();
        for &u in &order {
            if let Some((_, e)) = parent[u] {
                edge_label.insert(e, u);
            }
        }
        // pieces: maximal connected sets of edges with equal labels
        let mut uf: Vec<usize> = (0..kedges.len()).collect();
        fn root(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        for v in 0..n {
            for a in 0..adj[v].len() {
                for b in a + 1..adj[v].len() {
                    let (e1, e2) = (adj[v][a], adj[v][b]);
                    if lambda[edge_label[&e1]] == lambda[edge_label[&e2]] {
                        let (r1, r2) = (root(&mut uf, e1), root(&mut uf, e2));
                        uf[r1] = r2;
                    }
                }
            }
        }
        let mut pieces: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for e in 0..kedges.len() {
            let r = root(&mut uf, e);
            pieces.entry(r).or_default().push(e);
        }
        if kedges.is_empty() {
            let mut phi = PartialIsometry::new(vec![Point::Node(xi)], vec![Point::Node(off + class[xi])]);
            phi.label = Word::identity();
            isos.push(phi);
        }
        for es in pieces.values() {
            let label = lambda[edge_label[&es[0]]].clone();
            let nodes: BTreeSet<usize> = es.iter().flat_map(|e| [kedges[*e].0, kedges[*e].1]).collect();
            let leaves = induced(&nodes);
            let mut phi = PartialIsometry::new(
                leaves.iter().map(|v| Point::Node(*v)).collect(),
                leaves.iter().map(|v| Point::Node(off + class[*v])).collect(),
            );
            for v in &nodes {
                if lambda[*v] != label {
                    phi.point_labels.push((Point::Node(*v), lambda[*v].clone()));
                }
            }
            phi.label = label;
            isos.push(phi);
        }
    }
    let marking =
        SystemMarking { spec: s.clone(), special_factors, base: Point::Node(base), generators: (0..s.free_rank).collect() };
    let system = IsometrySystem::new(forest, isos, Some(marking))?;
    let vertex_nodes = (0..t.vertices.len()).map(|v| pts.iter().position(|p| p.vertex == v)).collect();
    Ok(Suspension { system, k_points: pts, vertex_nodes, special_nodes })
}
