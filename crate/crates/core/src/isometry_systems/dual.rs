//! The tree dual to a system with compact leaves.
//!
//! After saturating the singular set under the pseudogroup, every
//! elementary interval of the forest maps exactly onto elementary
//! intervals, so leaf classes of points and of intervals are finite. Point
//! classes are the vertex orbits of the dual tree and interval classes its
//! edge orbits. The labels `φ(x) = λ·x` turn cycles of a leaf graph into
//! stabilizer elements and tree paths into the elements `h` with
//! `x = h·(class representative)`; these give the lifts of the quotient
//! graph of groups and the marking.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use num_traits::Zero;
use serde_json::{json, Value};

use super::{ImanishiReport, IsometrySystem, Point};
use crate::approx::cyclic_generator;
use crate::error::{Error, Result};
use crate::rational::{q_to_json, Q};
use crate::trees::{Edge, Hop, MarkedGraphOfGroups, Path, VertexGroup};
use crate::words::Word;

#[derive(Clone, Debug)]
pub struct DualTree {
    pub tree: MarkedGraphOfGroups,
    pub classification: ImanishiReport,
    /// `δ(base, x)` for the saturated singular points, computed as shortest
    /// paths with forest distance along intervals and zero along leaves.
    pub delta: Vec<(Point, Q)>,
}

impl DualTree {
    pub fn to_json(&self, sys: &IsometrySystem) -> Value {
        let f = &sys.forest;
        let delta: Vec<Value> = self.delta.iter().map(|(p, d)| json!([f.point_to_json(p), q_to_json(d)])).collect();
        json!({
            "format": 1,
            "tree": self.tree.to_json(),
            "classification": self.classification.to_json(),
            "delta_from_base": delta,
        })
    }
}

struct Classes {
    class: Vec<usize>,
    h: Vec<Word>,
    /// Orientation relative to the class representative (intervals only).
    aligned: Vec<bool>,
    reps: Vec<usize>,
    gens: Vec<Vec<Word>>,
}

/// Connected components of a labelled relation graph on `0..n`; an edge
/// `(a, b, λ, same)` says `b = λ·a`, with `same` false when the
/// identification reverses orientation.
fn classes(
    sys: &IsometrySystem,
    n: usize,
    order: &[usize],
    edges: &[(usize, usize, Word, bool)],
) -> Result<Classes> {
    let s = &sys.marking.as_ref().unwrap().spec;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, (a, b, _, _)) in edges.iter().enumerate() {
        adj[*a].push(k);
        adj[*b].push(k);
    }
    let mut c = Classes {
        class: vec![usize::MAX; n],
        h: vec![Word::identity(); n],
        aligned: vec![true; n],
        reps: Vec::new(),
        gens: Vec::new(),
    };
    let mut tree_edge = vec![false; edges.len()];
    for &r in order {
        if c.class[r] != usize::MAX {
            continue;
        }
        let id = c.reps.len();
        c.reps.push(r);
        c.gens.push(Vec::new());
        c.class[r] = id;
        let mut queue = VecDeque::from([r]);
        while let Some(u) = queue.pop_front() {
            for &k in &adj[u] {
                let (a, b, lam, same) = &edges[k];
                let (w, hw) = if *a == u { (*b, s.mul(lam, &c.h[u])) } else { (*a, s.mul(&s.inverse(lam), &c.h[u])) };
                if c.class[w] == usize::MAX {
                    c.class[w] = id;
                    c.h[w] = hw;
                    c.aligned[w] = c.aligned[u] == *same;
                    tree_edge[k] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    for (k, (a, b, lam, same)) in edges.iter().enumerate() {
        if tree_edge[k] {
            continue;
        }
        if (c.aligned[*b] == (c.aligned[*a] == *same)) == false {
            return Err(Error::Refused("a leaf reverses an interval (inversion); subdivide first".into()));
        }
        let z = s.mul_all([&s.inverse(&c.h[*b]), lam, &c.h[*a]]);
        if !z.is_identity() && !c.gens[c.class[*a]].contains(&z) {
            c.gens[c.class[*a]].push(z);
        }
    }
    Ok(c)
}

struct Walker<'a> {
    t: &'a MarkedGraphOfGroups,
    path: Path,
    value: Word,
}

impl<'a> Walker<'a> {
    fn correct(&mut self, target: &Word) {
        let s = &self.t.spec;
        let g = s.mul(&s.inverse(&self.value), target);
        match self.path.hops.last_mut() {
            Some(h) => h.elem = s.mul(&h.elem, &g),
            None => self.path.head = s.mul(&self.path.head, &g),
        }
        self.value = target.clone();
    }

    fn hop(&mut self, e: usize, forward: bool) {
        let s = &self.t.spec;
        let tt = &self.t.edges[e].t;
        self.value = if forward { s.mul(&self.value, tt) } else { s.mul(&self.value, &s.inverse(tt)) };
        self.path.hops.push(Hop { edge: e, forward, elem: Word::identity() });
    }
}

/// Reassembles the marked graph of groups dual to a system with compact
/// leaves. Dense-candidate systems are refused with the classification.
pub fn dual_tree(sys: &IsometrySystem, budget: usize) -> Result<DualTree> {
    let f = &sys.forest;
    let g = sys.geometry();
    let report = sys.imanishi_classify(budget);
    if !report.all_compact() {
        return Err(Error::Refused(format!("dense-candidate leaves: {}", report.to_json())));
    }
    let m = sys
        .marking
        .as_ref()
        .ok_or_else(|| Error::Precondition("dual_tree needs marking data (labels, special factors, base)".into()))?;
    let s = &m.spec;
    let mut seeds = sys.singular_set();
    seeds.extend((0..f.nodes).map(Point::Node));
    seeds.insert(m.base.clone());
    let pts: Vec<Point> = sys
        .closure(seeds, budget)
        .ok_or_else(|| Error::Inconclusive(format!("singular orbits exceed {budget} points")))?
        .into_iter()
        .collect();
    let pidx: BTreeMap<Point, usize> = pts.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let base_comp = g.component(&m.base);

    // elementary intervals, per edge in increasing order
    let mut per_edge: Vec<Vec<Q>> = f.edges.iter().map(|(_, _, l)| vec![Q::zero(), l.clone()]).collect();
    for p in &pts {
        if let Point::Inner(e, t) = p {
            per_edge[*e].push(t.clone());
        }
    }
    let mut intervals: Vec<(usize, Q, Q)> = Vec::new();
    let mut first_on: Vec<usize> = Vec::new();
    for (e, cuts) in per_edge.iter_mut().enumerate() {
        cuts.sort();
        cuts.dedup();
        first_on.push(intervals.len());
        for w in cuts.windows(2) {
            intervals.push((e, w[0].clone(), w[1].clone()));
        }
    }
    let interval_at = |e: usize, t: &Q| -> usize {
        let cuts = &per_edge[e];
        let k = cuts.iter().position(|c| c > t).expect("inside the edge");
        first_on[e] + k - 1
    };
    let two = Q::from_integer(2.into());

    // relation graphs
    let mut pedges = Vec::new();
    for (a, x) in pts.iter().enumerate() {
        for i in 0..sys.isometries.len() {
            if let Some(y) = sys.apply(i, false, x) {
                pedges.push((a, pidx[&y], sys.label_at(i, x).clone(), true));
            }
        }
    }
    let mut iedges = Vec::new();
    for (k, (e, a, b)) in intervals.iter().enumerate() {
        let (pa, pb, pm) = (f.at(*e, a.clone()), f.at(*e, b.clone()), f.at(*e, (a + b) / &two));
        for i in 0..sys.isometries.len() {
            let d = sys.domain(i);
            if !(d.contains(&pa) && d.contains(&pb) && d.contains(&pm)) {
                continue;
            }
            let Point::Inner(e2, t2) = sys.apply(i, false, &pm).unwrap() else {
                return Err(Error::Obstruction("an interval midpoint maps to a node".into()));
            };
            let j = interval_at(e2, &t2);
            let same = sys.apply(i, false, &pa).unwrap() == f.at(e2, intervals[j].1.clone());
            iedges.push((k, j, sys.isometries[i].label.clone(), same));
        }
    }
    let in_base = |p: &Point| g.component(p) == base_comp;
    let mut porder: Vec<usize> = vec![pidx[&m.base]];
    porder.extend((0..pts.len()).filter(|i| in_base(&pts[*i])));
    porder.extend(0..pts.len());
    let pc = classes(sys, pts.len(), &porder, &pedges)?;
    let mut iorder: Vec<usize> = (0..intervals.len()).filter(|k| in_base(&f.at(intervals[*k].0, intervals[*k].1.clone()))).collect();
    iorder.extend(0..intervals.len());
    let ic = classes(sys, intervals.len(), &iorder, &iedges)?;

    // quotient graph of groups
    let mut vertices: Vec<VertexGroup> = pc.gens.iter().map(|gs| VertexGroup::free(gs.clone())).collect();
    for (node, factor) in f.special.iter().zip(&m.special_factors) {
        let a = pidx[&Point::Node(*node)];
        vertices[pc.class[a]].peripherals.push((*factor, s.inverse(&pc.h[a])));
    }
    let mut edges = Vec::new();
    for (c, &r) in ic.reps.iter().enumerate() {
        let (e, a, b) = &intervals[r];
        let pa = pidx[&f.at(*e, a.clone())];
        let pb = pidx[&f.at(*e, b.clone())];
        let group = if ic.gens[c].is_empty() {
            None
        } else {
            let conj: Vec<Word> = ic.gens[c].iter().map(|z| s.mul_all([&s.inverse(&pc.h[pa]), z, &pc.h[pa]])).collect();
            Some(cyclic_generator(s, &conj))
        };
        edges.push(Edge {
            src: pc.class[pa],
            dst: pc.class[pb],
            length: b - a,
            t: s.mul(&s.inverse(&pc.h[pa]), &pc.h[pb]),
            group,
        });
    }
    let base_v = pc.class[pidx[&m.base]];
    let mut tree = MarkedGraphOfGroups {
        spec: s.clone(),
        vertices,
        edges,
        base: base_v,
        free_marking: Vec::new(),
        factor_marking: Vec::new(),
    };

    // marking paths: walk through the forest, crossing one elementary
    // interval at a time, inside the copy `h·K`
    let walk = |w: &mut Walker, from: &Point, to: &Point, h: &Word| -> Result<()> {
        let legs = g.legs(from, to).ok_or_else(|| Error::Precondition("marking walk leaves the base component".into()))?;
        for leg in legs {
            let up = leg.to > leg.from;
            let mut cuts: Vec<&Q> = per_edge[leg.edge]
                .iter()
                .filter(|c| if up { **c >= leg.from && **c <= leg.to } else { **c <= leg.from && **c >= leg.to })
                .collect();
            if !up {
                cuts.reverse();
            }
            for pair in cuts.windows(2) {
                let k = interval_at(leg.edge, if up { pair[0] } else { pair[1] });
                let c = ic.class[k];
                let (re, ra, rb) = &intervals[ic.reps[c]];
                let x_is_rep_left = up == ic.aligned[k];
                let cx = pidx[&f.at(*re, if x_is_rep_left { ra.clone() } else { rb.clone() })];
                let target = s.mul_all([h, &ic.h[k], &pc.h[cx]]);
                w.correct(&target);
                w.hop(c, x_is_rep_left);
            }
        }
        Ok(())
    };
    let start = Walker { t: &tree, path: Path::at(base_v, Word::identity()), value: Word::identity() };
    let mut free_marking = Vec::new();
    for (j, &gi) in m.generators.iter().enumerate() {
        let phi = &sys.isometries[gi];
        let z0 = phi.domain[0].clone();
        let z = phi.range[0].clone();
        let lam = sys.label_at(gi, &z0).clone();
        if lam != s.x(j + 1, 1) {
            return Err(Error::Malformed(format!("isometry {gi} is not labelled x_{}", j + 1)));
        }
        let mut w = Walker { t: &tree, path: start.path.clone(), value: start.value.clone() };
        walk(&mut w, &m.base, &z, &Word::identity())?;
        walk(&mut w, &z0, &m.base, &lam)?;
        w.correct(&lam);
        free_marking.push(w.path);
    }
    let mut factor_marking = Vec::new();
    for (node, factor) in f.special.iter().zip(&m.special_factors) {
        let sp = Point::Node(*node);
        let y = pts
            .iter()
            .find(|y| in_base(y) && (0..sys.isometries.len()).any(|i| sys.apply(i, false, y).as_ref() == Some(&sp)))
            .ok_or_else(|| Error::Precondition(format!("special point of G_{factor} is not reached from the base component")))?;
        let mut w = Walker { t: &tree, path: start.path.clone(), value: start.value.clone() };
        walk(&mut w, &m.base, y, &Word::identity())?;
        w.correct(&pc.h[pidx[&sp]]);
        factor_marking.push(w.path);
    }
    tree.free_marking = free_marking;
    tree.factor_marking = factor_marking;
    tree.check_structure()?;

    // δ from the base over the saturated point set
    let mut dist: Vec<Option<Q>> = vec![None; pts.len()];
    let mut heap = BinaryHeap::new();
    let b = pidx[&m.base];
    dist[b] = Some(Q::zero());
    heap.push(Reverse((Q::zero(), b)));
    let mut nbrs: Vec<Vec<(usize, Q)>> = vec![Vec::new(); pts.len()];
    for (a, bb, _, _) in &pedges {
        nbrs[*a].push((*bb, Q::zero()));
        nbrs[*bb].push((*a, Q::zero()));
    }
    for (e, a, bq) in &intervals {
        let (x, y) = (pidx[&f.at(*e, a.clone())], pidx[&f.at(*e, bq.clone())]);
        nbrs[x].push((y, bq - a));
        nbrs[y].push((x, bq - a));
    }
    let mut done = BTreeSet::new();
    while let Some(Reverse((d, u))) = heap.pop() {
        if !done.insert(u) {
            continue;
        }
        for (w, l) in &nbrs[u] {
            let nd = &d + l;
            if dist[*w].as_ref().map_or(true, |x| &nd < x) {
                dist[*w] = Some(nd.clone());
                heap.push(Reverse((nd, *w)));
            }
        }
    }
    for (i, d) in dist.iter().enumerate() {
        if d.as_ref().is_some_and(|d| d.is_zero()) != (pc.class[i] == base_v) {
            return Err(Error::Obstruction(format!("δ and leaf classes disagree at {:?}", pts[i])));
        }
    }
    let delta = pts.iter().cloned().zip(dist).filter_map(|(p, d)| d.map(|d| (p, d))).collect();
    Ok(DualTree { tree, classification: report, delta })
}
