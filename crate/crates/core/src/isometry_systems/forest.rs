//! Finite metric forests with exact rational coordinates.
//!
//! A point is a node or a position on an edge measured from its `src` end.
//! Subtrees are stored edge by edge as closed sub-intervals plus the set of
//! nodes they contain; in a forest any convex set has that form.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::error::{malformed, Error, Result};
use crate::rational::{q_from_json, q_to_json, Q};

#[derive(Clone, Debug, PartialEq)]
pub struct MetricForest {
    pub nodes: usize,
    /// `(src, dst, length)`.
    pub edges: Vec<(usize, usize, Q)>,
    /// Special points (fixed points of factors), as nodes.
    pub special: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    Node(usize),
    /// Strictly inside the edge.
    Inner(usize, Q),
}

impl MetricForest {
    pub fn len(&self, e: usize) -> &Q {
        &self.edges[e].2
    }

    /// Canonical point at offset `t` on edge `e`.
    pub fn at(&self, e: usize, t: Q) -> Point {
        let (a, b, l) = &self.edges[e];
        if t.is_zero() {
            Point::Node(*a)
        } else if &t == l {
            Point::Node(*b)
        } else {
            Point::Inner(e, t)
        }
    }

    pub fn total_length(&self) -> Q {
        self.edges.iter().map(|e| e.2.clone()).sum()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().map(|(a, b, _)| (*a == v) as usize + (*b == v) as usize).sum()
    }

    /// Valence of a point in the forest.
    pub fn valence(&self, p: &Point) -> usize {
        match p {
            Point::Node(v) => self.degree(*v),
            Point::Inner(..) => 2,
        }
    }

    pub fn check(&self) -> Result<()> {
        for (i, (a, b, l)) in self.edges.iter().enumerate() {
            if *a >= self.nodes || *b >= self.nodes {
                return malformed(format!("forest edge {i} has an endpoint out of range"));
            }
            if !l.is_positive() {
                return malformed(format!("forest edge {i} has non-positive length"));
            }
        }
        // a forest has no cycle: union-find over the edges
        let mut uf: Vec<usize> = (0..self.nodes).collect();
        fn root(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        for (i, (a, b, _)) in self.edges.iter().enumerate() {
            let (ra, rb) = (root(&mut uf, *a), root(&mut uf, *b));
            if ra == rb {
                return malformed(format!("forest edge {i} closes a cycle"));
            }
            uf[ra] = rb;
        }
        if let Some(s) = self.special.iter().find(|s| **s >= self.nodes) {
            return malformed(format!("special point {s} out of range"));
        }
        Ok(())
    }

    pub fn point_to_json(&self, p: &Point) -> Value {
        match p {
            Point::Node(v) => json!({"node": v}),
            Point::Inner(e, t) => json!({"edge": e, "at": q_to_json(t)}),
        }
    }

    pub fn point_from_json(&self, v: &Value) -> Result<Point> {
        if let Some(n) = v.get("node") {
            let n = n.as_u64().ok_or_else(|| Error::Malformed("node must be an integer".into()))? as usize;
            if n >= self.nodes {
                return malformed(format!("node {n} out of range"));
            }
            return Ok(Point::Node(n));
        }
        let e = v
            .get("edge")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Malformed(format!("bad point {v}")))? as usize;
        if e >= self.edges.len() {
            return malformed(format!("edge {e} out of range"));
        }
        let t = q_from_json(v.get("at").ok_or_else(|| Error::Malformed("point needs \"at\"".into()))?)?;
        if t.is_negative() || &t > self.len(e) {
            return malformed(format!("offset outside edge {e}"));
        }
        Ok(self.at(e, t))
    }

    pub fn to_json(&self) -> Value {
        let edges: Vec<Value> = self.edges.iter().map(|(a, b, l)| json!([a, b, q_to_json(l)])).collect();
        json!({"nodes": self.nodes, "edges": edges, "special": self.special})
    }

    pub fn from_json(v: &Value) -> Result<MetricForest> {
        let nodes = v
            .get("nodes")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Malformed("forest needs \"nodes\"".into()))? as usize;
        let mut edges = Vec::new();
        for e in v.get("edges").and_then(Value::as_array).ok_or_else(|| Error::Malformed("forest needs \"edges\"".into()))? {
            let arr = e.as_array().filter(|a| a.len() == 3).ok_or_else(|| Error::Malformed(format!("bad edge {e}")))?;
            let a = arr[0].as_u64().ok_or_else(|| Error::Malformed("bad edge endpoint".into()))? as usize;
            let b = arr[1].as_u64().ok_or_else(|| Error::Malformed("bad edge endpoint".into()))? as usize;
            edges.push((a, b, q_from_json(&arr[2])?));
        }
        let special = match v.get("special") {
            None => Vec::new(),
            Some(s) => s
                .as_array()
                .ok_or_else(|| Error::Malformed("\"special\" must be an array".into()))?
                .iter()
                .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| Error::Malformed("bad special point".into())))
                .collect::<Result<_>>()?,
        };
        let f = MetricForest { nodes, edges, special };
        f.check()?;
        Ok(f)
    }
}

/// A closed convex subset: per-edge closed intervals and contained nodes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Subtree {
    pub nodes: BTreeSet<usize>,
    pub spans: BTreeMap<usize, (Q, Q)>,
}

impl Subtree {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.spans.is_empty()
    }

    pub fn contains(&self, p: &Point) -> bool {
        match p {
            Point::Node(v) => self.nodes.contains(v),
            Point::Inner(e, t) => self.spans.get(e).is_some_and(|(a, b)| a <= t && t <= b),
        }
    }

    pub fn length(&self) -> Q {
        self.spans.values().map(|(a, b)| b - a).sum()
    }

    fn add_interval(&mut self, f: &MetricForest, e: usize, x: &Q, y: &Q) {
        let (lo, hi) = if x <= y { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) };
        let (a, b, l) = &f.edges[e];
        if lo.is_zero() {
            self.nodes.insert(*a);
        }
        if &hi == l {
            self.nodes.insert(*b);
        }
        if lo == hi && (lo.is_zero() || &lo == l) {
            return;
        }
        let s = self.spans.entry(e).or_insert((lo.clone(), hi.clone()));
        if lo < s.0 {
            s.0 = lo;
        }
        if hi > s.1 {
            s.1 = hi;
        }
    }

    fn add_point(&mut self, f: &MetricForest, p: &Point) {
        match p {
            Point::Node(v) => {
                self.nodes.insert(*v);
            }
            Point::Inner(e, t) => self.add_interval(f, *e, t, t),
        }
    }

    pub fn intersect(&self, f: &MetricForest, other: &Subtree) -> Subtree {
        let nodes = self.nodes.intersection(&other.nodes).copied().collect();
        let mut spans = BTreeMap::new();
        for (e, (a1, b1)) in &self.spans {
            if let Some((a2, b2)) = other.spans.get(e) {
                let a = a1.max(a2).clone();
                let b = b1.min(b2).clone();
                if a > b || (a == b && (a.is_zero() || &a == f.len(*e))) {
                    continue;
                }
                spans.insert(*e, (a, b));
            }
        }
        Subtree { nodes, spans }
    }

    /// Number of directions at `p` that stay inside the subtree.
    pub fn valence(&self, f: &MetricForest, p: &Point) -> usize {
        match p {
            Point::Node(v) => {
                if !self.nodes.contains(v) {
                    return 0;
                }
                let mut k = 0;
                for (e, (a, b)) in &self.spans {
                    let (s, d, l) = &f.edges[*e];
                    if s == v && a.is_zero() && b.is_positive() {
                        k += 1;
                    }
                    if d == v && b == l && a < l {
                        k += 1;
                    }
                }
                k
            }
            Point::Inner(e, t) => match self.spans.get(e) {
                Some((a, b)) if a <= t && t <= b => (t > a) as usize + (t < b) as usize,
                _ => 0,
            },
        }
    }

    /// Extremal points (valence ≤ 1), sorted.
    pub fn leaves(&self, f: &MetricForest) -> Vec<Point> {
        let mut out = BTreeSet::new();
        for v in &self.nodes {
            if self.valence(f, &Point::Node(*v)) <= 1 {
                out.insert(Point::Node(*v));
            }
        }
        for (e, (a, b)) in &self.spans {
            if a.is_positive() {
                out.insert(f.at(*e, a.clone()));
            }
            if b < f.len(*e) {
                out.insert(f.at(*e, b.clone()));
            }
        }
        out.into_iter().collect()
    }
}

/// One piece of a geodesic: along `edge` from offset `from` to `to`.
#[derive(Clone, Debug)]
pub struct Leg {
    pub edge: usize,
    pub from: Q,
    pub to: Q,
}

/// All-pairs node distances and first hops, for geodesic queries.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub forest: MetricForest,
    pub adj: Vec<Vec<(usize, usize)>>,
    pub comp: Vec<usize>,
    dist: Vec<Vec<Option<Q>>>,
    next: Vec<Vec<Option<(usize, usize)>>>,
}

impl Geometry {
    pub fn new(forest: &MetricForest) -> Geometry {
        let n = forest.nodes;
        let mut adj = vec![Vec::new(); n];
        for (i, (a, b, _)) in forest.edges.iter().enumerate() {
            adj[*a].push((i, *b));
            adj[*b].push((i, *a));
        }
        let mut comp = vec![usize::MAX; n];
        let mut dist = vec![vec![None; n]; n];
        let mut next = vec![vec![None; n]; n];
        for s in 0..n {
            dist[s][s] = Some(Q::zero());
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &(e, w) in &adj[u] {
                    if dist[s][w].is_none() {
                        let d = dist[s][u].clone().unwrap() + forest.len(e);
                        dist[s][w] = Some(d);
                        next[s][w] = if u == s { Some((e, w)) } else { next[s][u] };
                        queue.push_back(w);
                    }
                }
            }
            if comp[s] == usize::MAX {
                for w in 0..n {
                    if dist[s][w].is_some() {
                        comp[w] = s;
                    }
                }
            }
        }
        Geometry { forest: forest.clone(), adj, comp, dist, next }
    }

    /// Nodes a point sees as `(node, offset)`.
    fn exits(&self, p: &Point) -> Vec<(usize, Q)> {
        match p {
            Point::Node(v) => vec![(*v, Q::zero())],
            Point::Inner(e, t) => {
                let (a, b, l) = &self.forest.edges[*e];
                vec![(*a, t.clone()), (*b, l - t)]
            }
        }
    }

    pub fn component(&self, p: &Point) -> usize {
        match p {
            Point::Node(v) => self.comp[*v],
            Point::Inner(e, _) => self.comp[self.forest.edges[*e].0],
        }
    }

    pub fn dist(&self, p: &Point, q: &Point) -> Option<Q> {
        if let (Point::Inner(e1, t1), Point::Inner(e2, t2)) = (p, q) {
            if e1 == e2 {
                return Some((t1 - t2).abs());
            }
        }
        let mut best: Option<Q> = None;
        for (u, ou) in self.exits(p) {
            for (v, ov) in self.exits(q) {
                if let Some(d) = &self.dist[u][v] {
                    let c = &ou + d + &ov;
                    if best.as_ref().map_or(true, |b| &c < b) {
                        best = Some(c);
                    }
                }
            }
        }
        best
    }

    /// Geodesic from `p` to `q` as a list of legs; `None` across components.
    pub fn legs(&self, p: &Point, q: &Point) -> Option<Vec<Leg>> {
        if let (Point::Inner(e1, t1), Point::Inner(e2, t2)) = (p, q) {
            if e1 == e2 {
                return Some(vec![Leg { edge: *e1, from: t1.clone(), to: t2.clone() }]);
            }
        }
        let mut best: Option<(Q, usize, usize)> = None;
        for (u, ou) in self.exits(p) {
            for (v, ov) in self.exits(q) {
                if let Some(d) = &self.dist[u][v] {
                    let c = &ou + d + &ov;
                    if best.as_ref().map_or(true, |b| c < b.0) {
                        best = Some((c, u, v));
                    }
                }
            }
        }
        let (_, u, v) = best?;
        let f = &self.forest;
        let mut legs = Vec::new();
        if let Point::Inner(e, t) = p {
            let end = if f.edges[*e].0 == u { Q::zero() } else { f.len(*e).clone() };
            legs.push(Leg { edge: *e, from: t.clone(), to: end });
        }
        let mut x = u;
        while x != v {
            let (e, w) = self.next[x][v].expect("same component");
            let (from, to) = if f.edges[e].0 == x { (Q::zero(), f.len(e).clone()) } else { (f.len(e).clone(), Q::zero()) };
            legs.push(Leg { edge: e, from, to });
            x = w;
        }
        if let Point::Inner(e, t) = q {
            let start = if f.edges[*e].0 == v { Q::zero() } else { f.len(*e).clone() };
            legs.push(Leg { edge: *e, from: start, to: t.clone() });
        }
        legs.retain(|l| l.from != l.to);
        Some(legs)
    }

    /// The point at distance `s` from `p` on the geodesic towards `q`.
    pub fn along(&self, p: &Point, q: &Point, s: &Q) -> Point {
        let mut rest = s.clone();
        if rest.is_zero() {
            return p.clone();
        }
        for leg in self.legs(p, q).expect("same component") {
            let l = (&leg.to - &leg.from).abs();
            if rest <= l {
                let t = if leg.to > leg.from { &leg.from + &rest } else { &leg.from - &rest };
                return self.forest.at(leg.edge, t);
            }
            rest -= l;
        }
        q.clone()
    }

    pub fn hull(&self, points: &[Point]) -> Subtree {
        let mut s = Subtree::default();
        let Some(first) = points.first() else { return s };
        for p in points {
            s.add_point(&self.forest, p);
            if let Some(legs) = self.legs(first, p) {
                for l in legs {
                    s.add_interval(&self.forest, l.edge, &l.from, &l.to);
                }
            }
        }
        s
    }

    /// Is `x` on the geodesic `[p, q]`?
    pub fn between(&self, p: &Point, x: &Point, q: &Point) -> bool {
        match (self.dist(p, x), self.dist(x, q), self.dist(p, q)) {
            (Some(a), Some(b), Some(c)) => a + b == c,
            _ => false,
        }
    }

    /// Image of `x` under the isometry sending `from[k] ↦ to[k]`; `x` must
    /// lie in the hull of `from`.
    pub fn transport(&self, from: &[Point], to: &[Point], x: &Point) -> Point {
        if from.len() == 1 {
            return to[0].clone();
        }
        for i in 0..from.len() {
            if &from[i] == x {
                return to[i].clone();
            }
        }
        for i in 0..from.len() {
            for j in i + 1..from.len() {
                if self.between(&from[i], x, &from[j]) {
                    let d = self.dist(&from[i], x).unwrap();
                    return self.along(&to[i], &to[j], &d);
                }
            }
        }
        panic!("point outside the anchored subtree")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn star() -> MetricForest {
        // center 0 with three arms of lengths 1, 2, 1/2
        MetricForest { nodes: 4, edges: vec![(0, 1, qi(1)), (0, 2, qi(2)), (3, 0, q(1, 2))], special: vec![] }
    }

    #[test]
    fn distances_and_geodesics() {
        let f = star();
        let g = Geometry::new(&f);
        let p = Point::Inner(0, q(1, 2));
        let r = Point::Inner(2, q(1, 4));
        assert_eq!(g.dist(&p, &r), Some(q(3, 4)));
        assert_eq!(g.along(&p, &r, &q(1, 2)), Point::Node(0));
        assert_eq!(g.along(&p, &r, &q(5, 8)), Point::Inner(2, q(3, 8)));
        assert!(g.between(&Point::Node(1), &Point::Node(0), &Point::Node(2)));
    }

    #[test]
    fn hull_intersection_and_leaves() {
        let f = star();
        let g = Geometry::new(&f);
        let h = g.hull(&[Point::Node(1), Point::Inner(1, qi(1))]);
        assert_eq!(h.length(), qi(2));
        assert_eq!(h.leaves(&f), vec![Point::Node(1), Point::Inner(1, qi(1))]);
        assert_eq!(h.valence(&f, &Point::Node(0)), 2);
        let k = g.hull(&[Point::Node(3), Point::Node(2)]);
        let i = h.intersect(&f, &k);
        assert_eq!(i.length(), qi(1));
        assert_eq!(i.leaves(&f), vec![Point::Node(0), Point::Inner(1, qi(1))]);
        let single = g.hull(&[Point::Node(3), Point::Node(0)]).intersect(&f, &h);
        assert_eq!(single.leaves(&f), vec![Point::Node(0)]);
        assert!(g.hull(&[Point::Node(3)]).intersect(&f, &h).is_empty());
    }

    #[test]
    fn cycles_are_malformed() {
        let f = MetricForest { nodes: 2, edges: vec![(0, 1, qi(1)), (1, 0, qi(1))], special: vec![] };
        assert!(f.check().is_err());
    }
}
