//! Systems of partial isometries between closed subtrees of a finite metric
//! forest, the suspension of a simplicial tree relative to a finite subtree
//! `K`, and the dual tree read back off a system whose leaves are compact.
//!
//! An isometry is stored by anchors: the extremal points of its domain and
//! their images. In a tree, an isometry between convex sets is determined by
//! what it does on the extremal points of the domain.

mod dual;
mod forest;
mod suspend;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{malformed, Error, Result};
use crate::rational::{q_to_json, Q};
use crate::words::{FactorSpec, Word};

pub use dual::{dual_tree, DualTree};
pub use forest::{Geometry, Leg, MetricForest, Point, Subtree};
pub use suspend::{fundamental_subtree, suspend, Suspension, TreePoint};

#[derive(Clone, Debug, PartialEq)]
pub struct PartialIsometry {
    /// Extremal points of the domain.
    pub domain: Vec<Point>,
    /// Their images, in the same order.
    pub range: Vec<Point>,
    /// Group element `λ` with `φ(x) = λ·x` in the dual tree, when the system
    /// carries marking data. Individual points may override it.
    pub label: Word,
    pub point_labels: Vec<(Point, Word)>,
}

impl PartialIsometry {
    pub fn new(domain: Vec<Point>, range: Vec<Point>) -> Self {
        PartialIsometry { domain, range, label: Word::identity(), point_labels: Vec::new() }
    }
}

/// Group-theoretic data attached to a system: which factor each special
/// point belongs to, the base point, and which isometry realizes each free
/// generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemMarking {
    pub spec: FactorSpec,
    pub special_factors: Vec<usize>,
    pub base: Point,
    pub generators: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct IsometrySystem {
    pub forest: MetricForest,
    pub isometries: Vec<PartialIsometry>,
    pub marking: Option<SystemMarking>,
    geom: Geometry,
    dom: Vec<Subtree>,
    ran: Vec<Subtree>,
}

/// A composite `φ_{s₁}∘…∘φ_{sₙ}` with nonempty domain.
#[derive(Clone, Debug)]
pub struct Composite {
    pub word: Vec<i64>,
    pub domain: Vec<Point>,
    pub range: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Independence {
    /// Some reduced word fixes the nondegenerate arc `[u, v]`.
    Violated { word: Vec<i64>, arc: (Point, Point) },
    IndependentUpTo(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VolumeReport {
    pub forest: Q,
    pub bases: Q,
}

impl VolumeReport {
    pub fn equal(&self) -> bool {
        self.forest == self.bases
    }
    pub fn to_json(&self) -> Value {
        json!({"format": 1, "forest": q_to_json(&self.forest), "bases": q_to_json(&self.bases), "equal": self.equal()})
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafTag {
    /// Every orbit closes; certified when the whole singular set closes.
    Compact { certified: bool },
    DenseCandidate,
}

#[derive(Clone, Debug)]
pub struct LeafComponent {
    /// Open pieces `(edge, a, b)`.
    pub pieces: Vec<(usize, Q, Q)>,
    pub tag: LeafTag,
}

#[derive(Clone, Debug)]
pub struct ImanishiReport {
    pub components: Vec<LeafComponent>,
    /// Size of the orbit closure of the singular set, when it closed.
    pub closure: Option<usize>,
    /// Common denominator of all coordinates.
    pub denominator: BigInt,
    /// Number of points of the `1/denominator` lattice; orbits of lattice
    /// points never leave it, so a budget this large always closes.
    pub lattice_bound: BigInt,
}

impl ImanishiReport {
    pub fn all_compact(&self) -> bool {
        self.components.iter().all(|c| matches!(c.tag, LeafTag::Compact { .. }))
    }

    pub fn to_json(&self) -> Value {
        let comps: Vec<Value> = self
            .components
            .iter()
            .map(|c| {
                let pieces: Vec<Value> =
                    c.pieces.iter().map(|(e, a, b)| json!({"edge": e, "from": q_to_json(a), "to": q_to_json(b)})).collect();
                let (tag, certified) = match c.tag {
                    LeafTag::Compact { certified } => ("compact-leaves", certified),
                    LeafTag::DenseCandidate => ("dense-candidate", false),
                };
                json!({"pieces": pieces, "tag": tag, "certified": certified})
            })
            .collect();
        json!({
            "format": 1,
            "components": comps,
            "closure": self.closure,
            "denominator": self.denominator.to_string(),
            "lattice_bound": self.lattice_bound.to_string(),
            "all_compact": self.all_compact(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeafIndex {
    pub points: Vec<Point>,
    pub edges: usize,
    pub special: usize,
    pub index: i64,
}

impl IsometrySystem {
    pub fn new(forest: MetricForest, isometries: Vec<PartialIsometry>, marking: Option<SystemMarking>) -> Result<Self> {
        forest.check()?;
        let geom = Geometry::new(&forest);
        let valid = |p: &Point| match p {
            Point::Node(v) => *v < forest.nodes,
            Point::Inner(e, t) => *e < forest.edges.len() && t.is_positive() && t < forest.len(*e),
        };
        let mut dom = Vec::new();
        let mut ran = Vec::new();
        for (i, phi) in isometries.iter().enumerate() {
            if phi.domain.is_empty() || phi.domain.len() != phi.range.len() {
                return malformed(format!("isometry {i}: domain and range anchors must be nonempty and match"));
            }
            if !phi.domain.iter().chain(&phi.range).all(valid) {
                return malformed(format!("isometry {i}: anchor is not a point of the forest"));
            }
            for a in 0..phi.domain.len() {
                for b in a + 1..phi.domain.len() {
                    let d1 = geom.dist(&phi.domain[a], &phi.domain[b]);
                    let d2 = geom.dist(&phi.range[a], &phi.range[b]);
                    if d1.is_none() || d1 != d2 {
                        return malformed(format!("isometry {i} does not preserve distances between anchors {a}, {b}"));
                    }
                }
            }
            dom.push(geom.hull(&phi.domain));
            ran.push(geom.hull(&phi.range));
        }
        if let Some(m) = &marking {
            if m.special_factors.len() != forest.special.len() {
                return malformed("one factor per special point is required");
            }
            if m.special_factors.iter().any(|i| *i == 0 || *i > m.spec.k()) {
                return malformed("special point factor out of range");
            }
            if m.generators.len() != m.spec.free_rank || m.generators.iter().any(|g| *g >= isometries.len()) {
                return malformed("one isometry per free generator is required");
            }
            if !valid(&m.base) {
                return malformed("base point is not a point of the forest");
            }
            for phi in &isometries {
                m.spec.check_word(&phi.label)?;
                for (p, w) in &phi.point_labels {
                    if !valid(p) {
                        return malformed("labelled point is not a point of the forest");
                    }
                    m.spec.check_word(w)?;
                }
            }
        }
        Ok(IsometrySystem { forest, isometries, marking, geom, dom, ran })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn domain(&self, i: usize) -> &Subtree {
        &self.dom[i]
    }

    pub fn range(&self, i: usize) -> &Subtree {
        &self.ran[i]
    }

    /// `φ_i(x)` (or `φ_i⁻¹(x)`), `None` outside the base.
    pub fn apply(&self, i: usize, inverse: bool, x: &Point) -> Option<Point> {
        let phi = &self.isometries[i];
        let (base, from, to) =
            if inverse { (&self.ran[i], &phi.range, &phi.domain) } else { (&self.dom[i], &phi.domain, &phi.range) };
        if !base.contains(x) {
            return None;
        }
        Some(self.geom.transport(from, to, x))
    }

    /// Label of `φ_i` at a domain point.
    pub fn label_at(&self, i: usize, x: &Point) -> &Word {
        let phi = &self.isometries[i];
        phi.point_labels.iter().find(|(p, _)| p == x).map(|(_, w)| w).unwrap_or(&phi.label)
    }

    fn letter(&self, s: i64) -> (usize, bool) {
        ((s.unsigned_abs() - 1) as usize, s < 0)
    }

    fn single(&self, s: i64) -> Composite {
        let (i, inv) = self.letter(s);
        let phi = &self.isometries[i];
        let (d, r) = if inv { (phi.range.clone(), phi.domain.clone()) } else { (phi.domain.clone(), phi.range.clone()) };
        Composite { word: vec![s], domain: d, range: r }
    }

    /// `φ_s ∘ c`, or `None` when its domain is empty.
    fn extend(&self, c: &Composite, s: i64) -> Option<Composite> {
        let (i, inv) = self.letter(s);
        let base = if inv { &self.ran[i] } else { &self.dom[i] };
        let y = self.geom.hull(&c.range).intersect(&self.forest, base);
        if y.is_empty() {
            return None;
        }
        let leaves = y.leaves(&self.forest);
        let domain: Vec<Point> = leaves.iter().map(|l| self.geom.transport(&c.range, &c.domain, l)).collect();
        let range: Vec<Point> = leaves.iter().map(|l| self.apply(i, inv, l).expect("inside the base")).collect();
        let mut word = vec![s];
        word.extend_from_slice(&c.word);
        Some(Composite { word, domain, range })
    }

    fn check_letters(&self, word: &[i64]) -> Result<()> {
        let m = self.isometries.len() as u64;
        for (k, s) in word.iter().enumerate() {
            if *s == 0 {
                return malformed("isometry letters are nonzero signed indices");
            }
            if s.unsigned_abs() > m {
                return Err(Error::Domain(format!("no isometry {}", s.unsigned_abs())));
            }
            if k > 0 && word[k - 1] == -s {
                return malformed(format!("unreduced word: letters {} and {} cancel", k - 1, k));
            }
        }
        Ok(())
    }

    /// The composite `φ_{s₁}∘…∘φ_{sₙ}` (rightmost applied first); `None` when
    /// its domain is empty. Letters are signed 1-based indices.
    pub fn compose_word(&self, word: &[i64]) -> Result<Option<Composite>> {
        self.check_letters(word)?;
        let Some((last, rest)) = word.split_last() else {
            return malformed("empty word");
        };
        let mut c = self.single(*last);
        for s in rest.iter().rev() {
            match self.extend(&c, *s) {
                Some(n) => c = n,
                None => return Ok(None),
            }
        }
        Ok(Some(c))
    }

    /// A nondegenerate arc fixed pointwise by the composite, if any. On a
    /// segment the displacement `d(p,z) − d(φp,z)` is affine along the overlap
    /// of `[p,q]` and `[φp,φq]`, so checking the overlap's ends suffices.
    pub fn fixed_arc(&self, c: &Composite) -> Option<(Point, Point)> {
        let g = &self.geom;
        let f = &self.forest;
        for i in 0..c.domain.len() {
            for j in i + 1..c.domain.len() {
                let (p, q, pp) = (&c.domain[i], &c.domain[j], &c.range[i]);
                let ov = g.hull(&[p.clone(), q.clone()]).intersect(f, &g.hull(&[c.range[i].clone(), c.range[j].clone()]));
                if !ov.length().is_positive() {
                    continue;
                }
                let ends = ov.leaves(f);
                let fixed = |z: &Point| g.dist(p, z) == g.dist(pp, z);
                if ends.len() == 2 && fixed(&ends[0]) && fixed(&ends[1]) {
                    return Some((ends[0].clone(), ends[1].clone()));
                }
            }
        }
        None
    }

    /// Searches reduced words up to length `max_len`, shortest first, for one
    /// fixing a nondegenerate arc.
    pub fn independent_generators(&self, max_len: usize) -> Independence {
        let m = self.isometries.len() as i64;
        let letters: Vec<i64> = (1..=m).flat_map(|i| [i, -i]).collect();
        let mut frontier: Vec<Composite> = letters.iter().map(|s| self.single(*s)).collect();
        for len in 1..=max_len {
            for c in &frontier {
                if let Some(arc) = self.fixed_arc(c) {
                    return Independence::Violated { word: c.word.clone(), arc };
                }
            }
            if len == max_len {
                break;
            }
            let mut next = Vec::new();
            for c in &frontier {
                for s in &letters {
                    if *s == -c.word[0] {
                        continue;
                    }
                    if let Some(n) = self.extend(c, *s) {
                        next.push(n);
                    }
                }
            }
            frontier = next;
        }
        Independence::IndependentUpTo(max_len)
    }

    /// `|F|` against `Σ |A_φ|`.
    pub fn volume_identity(&self) -> VolumeReport {
        VolumeReport { forest: self.forest.total_length(), bases: self.dom.iter().map(|d| d.length()).sum() }
    }

    /// Branch points, base endpoints and special points.
    pub fn singular_set(&self) -> BTreeSet<Point> {
        let f = &self.forest;
        let mut s: BTreeSet<Point> = (0..f.nodes).filter(|v| f.degree(*v) >= 3).map(Point::Node).collect();
        for d in self.dom.iter().chain(&self.ran) {
            s.extend(d.leaves(f));
        }
        s.extend(f.special.iter().map(|v| Point::Node(*v)));
        s
    }

    /// Images of `x` under every isometry and inverse defined there.
    pub fn neighbours(&self, x: &Point) -> Vec<(usize, bool, Point)> {
        let mut out = Vec::new();
        for i in 0..self.isometries.len() {
            for inv in [false, true] {
                if let Some(y) = self.apply(i, inv, x) {
                    out.push((i, inv, y));
                }
            }
        }
        out
    }

    /// Saturation of `seeds` under the pseudogroup; `None` past `budget` points.
    pub fn closure(&self, seeds: impl IntoIterator<Item = Point>, budget: usize) -> Option<BTreeSet<Point>> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        for s in seeds {
            if seen.insert(s.clone()) {
                queue.push_back(s);
            }
        }
        while let Some(x) = queue.pop_front() {
            if seen.len() > budget {
                return None;
            }
            for (_, _, y) in self.neighbours(&x) {
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        (seen.len() <= budget).then_some(seen)
    }

    /// Common denominator of every coordinate in the data.
    pub fn denominator(&self) -> BigInt {
        let mut d = BigInt::one();
        let mut take = |x: &Q| d = d.lcm(x.denom());
        for (_, _, l) in &self.forest.edges {
            take(l);
        }
        for phi in &self.isometries {
            for p in phi.domain.iter().chain(&phi.range) {
                if let Point::Inner(_, t) = p {
                    take(t);
                }
            }
        }
        d
    }

    /// Components of `F` minus the singular set, each tagged by whether its
    /// leaves are compact.
    pub fn imanishi_classify(&self, budget: usize) -> ImanishiReport {
        let f = &self.forest;
        let den = self.denominator();
        let lattice: BigInt = f.edges.iter().map(|(_, _, l)| (l * Q::from_integer(den.clone())).to_integer()).sum::<BigInt>()
            - BigInt::from(f.edges.len())
            + BigInt::from(f.nodes);
        let sing = self.singular_set();
        let mut seeds = sing.clone();
        seeds.extend((0..f.nodes).map(Point::Node));
        let closed = self.closure(seeds, budget);

        // open pieces between consecutive singular points (nodes included as
        // cut points only when singular), glued across regular nodes
        let mut pieces: Vec<(usize, Q, Q)> = Vec::new();
        for (e, (_, _, l)) in f.edges.iter().enumerate() {
            let mut cuts: Vec<Q> = vec![Q::zero(), l.clone()];
            for p in &sing {
                if let Point::Inner(pe, t) = p {
                    if *pe == e {
                        cuts.push(t.clone());
                    }
                }
            }
            cuts.sort();
            cuts.dedup();
            for w in cuts.windows(2) {
                pieces.push((e, w[0].clone(), w[1].clone()));
            }
        }
        let mut uf: Vec<usize> = (0..pieces.len()).collect();
        fn root(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        for v in 0..f.nodes {
            if sing.contains(&Point::Node(v)) {
                continue;
            }
            let touching: Vec<usize> = pieces
                .iter()
                .enumerate()
                .filter(|(_, (e, a, b))| {
                    let (s, d, l) = &f.edges[*e];
                    (*s == v && a.is_zero()) || (*d == v && b == l)
                })
                .map(|(k, _)| k)
                .collect();
            for w in touching.windows(2) {
                let (a, b) = (root(&mut uf, w[0]), root(&mut uf, w[1]));
                uf[a] = b;
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for k in 0..pieces.len() {
            let r = root(&mut uf, k);
            groups.entry(r).or_default().push(k);
        }
        let two = Q::from_integer(BigInt::from(2));
        let components = groups
            .values()
            .map(|ks| {
                let tag = if closed.is_some() {
                    LeafTag::Compact { certified: true }
                } else {
                    let (e, a, b) = &pieces[ks[0]];
                    let mid = f.at(*e, (a + b) / &two);
                    if self.closure([mid], budget).is_some() {
                        LeafTag::Compact { certified: false }
                    } else {
                        LeafTag::DenseCandidate
                    }
                };
                LeafComponent { pieces: ks.iter().map(|k| pieces[*k].clone()).collect(), tag }
            })
            .collect();
        ImanishiReport { components, closure: closed.map(|c| c.len()), denominator: den, lattice_bound: lattice }
    }

    /// `Σ_{x∈V(S)} (v_F(x) − 2) + Σ_{e∈E(S)} (2 − v_φ(e)) + 2·#special` over the
    /// leaf graph `S` of the orbit of `x`.
    pub fn leaf_index(&self, x: &Point, budget: usize) -> Result<LeafIndex> {
        let orbit = self
            .closure([x.clone()], budget)
            .ok_or_else(|| Error::Inconclusive(format!("orbit exceeds {budget} points")))?;
        let f = &self.forest;
        let mut index: i64 = 0;
        let mut edges = 0;
        let mut special = 0;
        for z in &orbit {
            index += f.valence(z) as i64 - 2;
            if let Point::Node(v) = z {
                special += f.special.iter().filter(|s| *s == v).count();
            }
            for i in 0..self.isometries.len() {
                if self.dom[i].contains(z) {
                    edges += 1;
                    index += 2 - self.dom[i].valence(f, z) as i64;
                }
            }
        }
        index += 2 * special as i64;
        Ok(LeafIndex { points: orbit.into_iter().collect(), edges, special, index })
    }

    // ---- JSON ----

    pub fn to_json(&self) -> Value {
        let f = &self.forest;
        let pts = |ps: &[Point]| -> Vec<Value> { ps.iter().map(|p| f.point_to_json(p)).collect() };
        let isos: Vec<Value> = self
            .isometries
            .iter()
            .map(|phi| {
                let mut v = json!({"domain": pts(&phi.domain), "range": pts(&phi.range)});
                if let Some(m) = &self.marking {
                    v["label"] = m.spec.word_to_json(&phi.label);
                    if !phi.point_labels.is_empty() {
                        v["point_labels"] = Value::Array(
                            phi.point_labels.iter().map(|(p, w)| json!([f.point_to_json(p), m.spec.word_to_json(w)])).collect(),
                        );
                    }
                }
                v
            })
            .collect();
        let mut out = json!({"format": 1, "forest": f.to_json(), "isometries": isos});
        if let Some(m) = &self.marking {
            out["marking"] = json!({
                "spec": m.spec.to_json(),
                "special_factors": m.special_factors,
                "base": f.point_to_json(&m.base),
                "generators": m.generators,
            });
        }
        out
    }

    pub fn from_json(v: &Value) -> Result<IsometrySystem> {
        crate::trees::check_format(v)?;
        let forest = MetricForest::from_json(v.get("forest").ok_or_else(|| Error::Malformed("system needs \"forest\"".into()))?)?;
        let marking = match v.get("marking") {
            None => None,
            Some(m) => {
                let spec = FactorSpec::from_json(m.get("spec").ok_or_else(|| Error::Malformed("marking needs \"spec\"".into()))?)?;
                let ints = |key: &str| -> Result<Vec<usize>> {
                    m.get(key)
                        .and_then(Value::as_array)
                        .ok_or_else(|| Error::Malformed(format!("marking needs \"{key}\"")))?
                        .iter()
                        .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| Error::Malformed(format!("bad entry in {key}"))))
                        .collect()
                };
                let base = forest.point_from_json(m.get("base").ok_or_else(|| Error::Malformed("marking needs \"base\"".into()))?)?;
                Some(SystemMarking { special_factors: ints("special_factors")?, generators: ints("generators")?, base, spec })
            }
        };
        let mut isos = Vec::new();
        for iv in v.get("isometries").and_then(Value::as_array).ok_or_else(|| Error::Malformed("system needs \"isometries\"".into()))? {
            let pts = |key: &str| -> Result<Vec<Point>> {
                iv.get(key)
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Malformed(format!("isometry needs \"{key}\"")))?
                    .iter()
                    .map(|p| forest.point_from_json(p))
                    .collect()
            };
            let mut phi = PartialIsometry::new(pts("domain")?, pts("range")?);
            if let Some(m) = &marking {
                if let Some(l) = iv.get("label") {
                    phi.label = m.spec.word_from_json(l)?;
                }
                if let Some(pl) = iv.get("point_labels").and_then(Value::as_array) {
                    for e in pl {
                        let a = e.as_array().filter(|a| a.len() == 2).ok_or_else(|| Error::Malformed("bad point label".into()))?;
                        phi.point_labels.push((forest.point_from_json(&a[0])?, m.spec.word_from_json(&a[1])?));
                    }
                }
            }
            isos.push(phi);
        }
        IsometrySystem::new(forest, isos, marking)
    }
}

impl Composite {
    pub fn to_json(&self, f: &MetricForest) -> Value {
        let pts = |ps: &[Point]| -> Vec<Value> { ps.iter().map(|p| f.point_to_json(p)).collect() };
        json!({"format": 1, "word": self.word, "domain": pts(&self.domain), "range": pts(&self.range)})
    }
}

impl Independence {
    pub fn to_json(&self, f: &MetricForest) -> Value {
        match self {
            Independence::Violated { word, arc } => json!({
                "format": 1, "independent": false, "word": word,
                "arc": [f.point_to_json(&arc.0), f.point_to_json(&arc.1)],
            }),
            Independence::IndependentUpTo(l) => json!({"format": 1, "independent": true, "up_to": l}),
        }
    }
}

// ---- example systems ----

/// Two isometries of `[0,1]`: `[0,1−α] → [α,1]` and `[1−α,1] → [0,α]`, the
/// rotation by `α` cut at `1−α`.
pub fn rotation_pair(alpha: &Q) -> IsometrySystem {
    assert!(alpha.is_positive() && alpha < &Q::one(), "rotation angle must lie in (0,1)");
    let forest = MetricForest { nodes: 2, edges: vec![(0, 1, Q::one())], special: vec![] };
    let cut = Q::one() - alpha;
    let a = forest.at(0, alpha.clone());
    let c = forest.at(0, cut);
    let isos = vec![
        PartialIsometry::new(vec![Point::Node(0), c.clone()], vec![a.clone(), Point::Node(1)]),
        PartialIsometry::new(vec![c, Point::Node(1)], vec![Point::Node(0), a]),
    ];
    IsometrySystem::new(forest, isos, None).expect("well-formed")
}

/// The identity of `[0,1]`.
pub fn identity_segment() -> IsometrySystem {
    let forest = MetricForest { nodes: 2, edges: vec![(0, 1, Q::one())], special: vec![] };
    let isos = vec![PartialIsometry::new(vec![Point::Node(0), Point::Node(1)], vec![Point::Node(0), Point::Node(1)])];
    IsometrySystem::new(forest, isos, None).expect("well-formed")
}

/// A single shift `[0,1/2] → [1/2,1]`.
pub fn single_shift() -> IsometrySystem {
    let forest = MetricForest { nodes: 2, edges: vec![(0, 1, Q::one())], special: vec![] };
    let half = forest.at(0, Q::new(BigInt::one(), BigInt::from(2)));
    let isos = vec![PartialIsometry::new(vec![Point::Node(0), half.clone()], vec![half, Point::Node(1)])];
    IsometrySystem::new(forest, isos, None).expect("well-formed")
}

#[cfg(test)]
mod tests;
