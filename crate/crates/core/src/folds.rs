//! Equivariant edge folds on marked graphs of groups, greedy fold sequences
//! between trees, and extraction of a vertex whose group splits freely
//! relative to its incident edge groups.
//!
//! An end `(e, outgoing)` at `v` leaves `ṽ` towards `τ·ṽ_far`, where
//! `τ = t` for the source end and `τ = t⁻¹` for the target end. Folding the
//! end `o₁` with `g·o₂` (for `g ∈ Stab(ṽ)`) identifies the two tree edges
//! `[ṽ, τ₁ṽ₁]` and `[ṽ, gτ₂ṽ₂]` equivariantly.

use std::collections::HashSet;

use num_integer::Integer;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::subgroups::KuroshGraph;
use crate::trees::{fingerprint, probe_words, Hop, MarkedGraphOfGroups, Path};
use crate::words::{FactorSpec, Word};

/// An edge end at a vertex: `(edge, outgoing)`.
pub type End = (usize, bool);

/// Which two ends to fold and by which element of the vertex group.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldSpec {
    pub vertex: usize,
    pub first: End,
    pub second: End,
    /// `g ∈ Stab(ṽ)`: the fold identifies `first` with `g·second`.
    pub element: Word,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldStep {
    pub spec: FoldSpec,
    pub fold_type: u8,
    pub result: MarkedGraphOfGroups,
    /// Far-vertex group after the fold as a free product of two blocks
    /// (old generators, new generators), in the result's coordinates.
    pub far_vertex: usize,
    pub blocks: (Vec<Word>, Vec<Word>),
    /// Whether the tree before the fold had an edge with trivial group.
    pub had_trivial_edge: bool,
}

impl FoldStep {
    pub fn to_json(&self) -> Value {
        let s = &self.result.spec;
        let end = |(e, o): End| json!({"edge": e, "outgoing": o});
        json!({
            "vertex": self.spec.vertex,
            "first": end(self.spec.first),
            "second": end(self.spec.second),
            "element": s.word_to_json(&self.spec.element),
            "type": self.fold_type,
        })
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidFold(msg.into()))
}

/// Generator of `⟨a, b⟩` when that group is cyclic and visibly so
/// (both are powers of a common maximal root).
fn cyclic_join(s: &FactorSpec, a: Option<&Word>, b: Option<&Word>) -> Result<Option<Word>> {
    match (a, b) {
        (None, None) => Ok(None),
        (Some(x), None) | (None, Some(x)) => Ok(Some(x.clone())),
        (Some(x), Some(y)) => {
            let (r, _) = s.max_root(x)?;
            match (s.is_power_of(x, &r), s.is_power_of(y, &r)) {
                (Some(m), Some(n)) => Ok(Some(s.pow(&r, &m.gcd(&n)))),
                _ => invalid(format!("⟨{x}, {y}⟩ is not cyclic; the folded edge group would not be")),
            }
        }
    }
}

/// Bookkeeping returned by the low-level fold so callers can track lifts.
#[derive(Clone, Debug, Default)]
pub(crate) struct FoldEffect {
    /// `(vertex, s)`: the lift of `vertex` (old numbering) became `s·ṽ`.
    pub relift: Option<(usize, Word)>,
    /// Old vertex index → new index.
    pub vertex_map: Vec<usize>,
}

impl MarkedGraphOfGroups {
    fn all_paths_mut(&mut self) -> impl Iterator<Item = &mut Path> {
        self.free_marking.iter_mut().chain(self.factor_marking.iter_mut())
    }

    /// `τ` of an end: the element carrying `ṽ_far` to the far endpoint.
    pub fn end_tau(&self, (e, out): End) -> Word {
        let t = &self.edges[e].t;
        if out {
            t.clone()
        } else {
            self.spec.inverse(t)
        }
    }

    pub fn end_far(&self, (e, out): End) -> usize {
        self.far(e, out)
    }

    fn end_at(&self, v: usize, (e, out): End) -> bool {
        e < self.edges.len() && if out { self.edges[e].src == v } else { self.edges[e].dst == v }
    }

    /// Replaces the lift `ṽ` by `s·ṽ`, rewriting every `t`, edge group and
    /// marking path so that the tree and the marking are unchanged.
    pub(crate) fn relift(&mut self, v: usize, s: &Word) {
        assert_ne!(v, self.base, "the base lift is pinned by the marking");
        if s.is_identity() {
            return;
        }
        let sp = self.spec.clone();
        let si = sp.inverse(s);
        let vg = &mut self.vertices[v];
        for (_, c) in vg.peripherals.iter_mut() {
            *c = sp.mul(s, c);
        }
        for w in vg.free.iter_mut() {
            *w = sp.mul_all([s, &*w, &si]);
        }
        for ed in self.edges.iter_mut() {
            if ed.src == v {
                ed.t = sp.mul(s, &ed.t);
                if let Some(g) = ed.group.as_mut() {
                    *g = sp.mul_all([s, &*g, &si]);
                }
            }
            if ed.dst == v {
                ed.t = sp.mul(&ed.t, &si);
            }
        }
        let far: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.src, e.dst)).collect();
        for p in self.all_paths_mut() {
            assert_ne!(p.start, v);
            for h in p.hops.iter_mut() {
                let arrive = if h.forward { far[h.edge].1 } else { far[h.edge].0 };
                if arrive == v {
                    h.elem = sp.mul_all([s, &h.elem, &si]);
                }
            }
        }
    }

    /// Identifies vertex `gone` with `keep`; both lifts must be the same
    /// point. Returns the old→new vertex map.
    pub(crate) fn merge_vertices(&mut self, keep: usize, gone: usize) -> Vec<usize> {
        assert_ne!(keep, gone);
        assert_ne!(gone, self.base);
        let extra = std::mem::take(&mut self.vertices[gone]);
        let kg = &mut self.vertices[keep];
        kg.peripherals.extend(extra.peripherals);
        kg.free.extend(extra.free);
        let map: Vec<usize> = (0..self.vertices.len())
            .map(|u| {
                let u = if u == gone { keep } else { u };
                if u > gone {
                    u - 1
                } else {
                    u
                }
            })
            .collect();
        self.vertices.remove(gone);
        for ed in self.edges.iter_mut() {
            ed.src = map[ed.src];
            ed.dst = map[ed.dst];
        }
        for p in self.all_paths_mut() {
            p.start = map[p.start];
        }
        self.base = map[self.base];
        map
    }

    /// Drops edge `e` and renumbers hops; no hop may still use it.
    fn drop_edge(&mut self, e: usize) {
        self.edges.remove(e);
        for p in self.all_paths_mut() {
            for h in p.hops.iter_mut() {
                debug_assert_ne!(h.edge, e);
                if h.edge > e {
                    h.edge -= 1;
                }
            }
        }
    }

    /// Contracts a loop whose `t` fixes `ṽ`: `t` joins the vertex group and
    /// crossings of the loop are absorbed into the neighbouring elements.
    pub(crate) fn contract_loop(&mut self, e: usize) {
        let sp = self.spec.clone();
        let ed = self.edges[e].clone();
        assert_eq!(ed.src, ed.dst);
        if !ed.t.is_identity() && !self.stab_graph(ed.src).contains(&ed.t) {
            self.vertices[ed.src].free.push(ed.t.clone());
        }
        let ti = sp.inverse(&ed.t);
        for p in self.all_paths_mut() {
            let mut head = p.head.clone();
            let mut hops: Vec<Hop> = Vec::with_capacity(p.hops.len());
            for h in p.hops.drain(..) {
                if h.edge == e {
                    let tt = if h.forward { &ed.t } else { &ti };
                    match hops.last_mut() {
                        Some(prev) => prev.elem = sp.mul_all([&prev.elem, tt, &h.elem]),
                        None => head = sp.mul_all([&head, tt, &h.elem]),
                    }
                } else {
                    hops.push(h);
                }
            }
            p.head = head;
            p.hops = hops;
        }
        self.drop_edge(e);
    }

    /// Contracts any edge whose endpoints' lifts `ṽ_src` and `t·ṽ_dst` are to
    /// be identified. Returns the effect on vertex numbering and lifts.
    pub(crate) fn contract_edge(&mut self, e: usize) -> FoldEffect {
        let ed = self.edges[e].clone();
        let mut eff = FoldEffect { relift: None, vertex_map: (0..self.vertices.len()).collect() };
        if ed.src != ed.dst {
            let (keep, gone, s) = if ed.dst != self.base {
                (ed.src, ed.dst, ed.t.clone())
            } else {
                (ed.dst, ed.src, self.spec.inverse(&ed.t))
            };
            self.relift(gone, &s);
            eff.relift = Some((gone, s));
            eff.vertex_map = self.merge_vertices(keep, gone);
        }
        self.contract_loop(e);
        eff
    }
}

/// Performs one fold. See the module docs for the convention; unequal edge
/// lengths are handled by first subdividing the longer edge.
pub fn fold(t: &MarkedGraphOfGroups, fs: &FoldSpec) -> Result<FoldStep> {
    fold_with_effect(t, fs).map(|(_, step, _)| step)
}

pub(crate) fn fold_with_effect(t: &MarkedGraphOfGroups, fs: &FoldSpec) -> Result<(MarkedGraphOfGroups, FoldStep, FoldEffect)> {
    let v = fs.vertex;
    if v >= t.vertices.len() || !t.end_at(v, fs.first) || !t.end_at(v, fs.second) {
        return invalid("the two ends do not share the given vertex");
    }
    let s = t.spec.clone();
    let g = &fs.element;
    if !g.is_identity() && !t.stab_graph(v).contains(g) {
        return invalid(format!("{g} is not in the vertex group"));
    }
    let had_trivial_edge = t.edges.iter().any(|e| e.group.is_none());
    let mut w = t.clone();
    let mut eff = FoldEffect { relift: None, vertex_map: (0..t.vertices.len()).collect() };

    if fs.first == fs.second {
        // Type 3: the edge orbit folds onto itself.
        let o = fs.first;
        let c = w.end_group(o.0, o.1);
        let noop = g.is_identity() || c.as_ref().is_some_and(|c| s.is_power_of(g, c).is_some());
        if noop {
            return invalid("g fixes the edge already; the fold would be the identity");
        }
        let c_new = cyclic_join(&s, c.as_ref(), Some(g))?.expect("nontrivial");
        let ed = &mut w.edges[o.0];
        ed.group = Some(if o.1 { c_new } else { s.mul_all([&ed.t, &c_new, &s.inverse(&ed.t)]) });
        let f = w.end_far(o);
        let tau = w.end_tau(o);
        let h = s.mul_all([&s.inverse(&tau), g, &tau]);
        let old = w.vertices[f].generators(&s);
        w.vertices[f].free.push(h.clone());
        let step = FoldStep {
            spec: fs.clone(),
            fold_type: 3,
            result: w.clone(),
            far_vertex: f,
            blocks: (old, vec![h]),
            had_trivial_edge,
        };
        return Ok((w, step, eff));
    }

    let (mut o1, mut o2) = (fs.first, fs.second);
    if o1.0 == o2.0 {
        return invalid("an edge cannot be folded onto its own reverse without subdividing it first");
    }
    let fold_type = if w.end_group(o1.0, o1.1).is_some() && w.end_group(o2.0, o2.1).is_some() { 1 } else { 2 };

    // Equal lengths: cut the longer edge so that the piece at `v` matches.
    let (l1, l2) = (w.edges[o1.0].length.clone(), w.edges[o2.0].length.clone());
    if l1 != l2 {
        let (o, l) = if l1 > l2 { (&mut o1, l2) } else { (&mut o2, l1) };
        let at = if o.1 { l } else { &w.edges[o.0].length - &l };
        w.subdivide(o.0, &at)?;
        if !o.1 {
            *o = (w.edges.len() - 1, false);
        }
        eff.vertex_map.push(w.vertices.len() - 1);
    }

    let mut g = g.clone();
    let (f1, f2) = (w.end_far(o1), w.end_far(o2));
    let h = s.mul_all([&s.inverse(&w.end_tau(o1)), &g, &w.end_tau(o2)]);
    let far_vertex;
    let blocks;
    if f1 == f2 {
        let old = w.vertices[f1].generators(&s);
        let new = if h.is_identity() || w.stab_graph(f1).contains(&h) {
            vec![]
        } else {
            w.vertices[f1].free.push(h.clone());
            vec![h.clone()]
        };
        far_vertex = f1;
        blocks = (old, new);
    } else {
        let (keep, gone, r) = if f2 != w.base { (f1, f2, h.clone()) } else { (f2, f1, s.inverse(&h)) };
        w.relift(gone, &r);
        if gone == v {
            g = s.conj(&r, &g);
        }
        let a = w.vertices[keep].generators(&s);
        let b = w.vertices[gone].generators(&s);
        let map = w.merge_vertices(keep, gone);
        for m in eff.vertex_map.iter_mut() {
            *m = map[*m];
        }
        eff.relift = Some((gone, r));
        far_vertex = map[keep];
        blocks = (a, b);
    }

    // Identify the two edges; `k` is the correction at the far end.
    let (tau1, tau2) = (w.end_tau(o1), w.end_tau(o2));
    let k = s.mul_all([&s.inverse(&tau1), &g, &tau2]);
    debug_assert!(k.is_identity() || w.stab_graph(w.end_far(o1)).contains(&k));
    let c1 = w.end_group(o1.0, o1.1);
    let c2 = w.end_group(o2.0, o2.1).map(|c| s.conj(&g, &c));
    let c_new = cyclic_join(&s, c1.as_ref(), c2.as_ref())?;
    {
        let ed = &mut w.edges[o1.0];
        ed.group = c_new.map(|c| if o1.1 { c } else { s.mul_all([&ed.t, &c, &s.inverse(&ed.t)]) });
    }
    let (gi, ki) = (s.inverse(&g), s.inverse(&k));
    for p in w.all_paths_mut() {
        for i in 0..p.hops.len() {
            if p.hops[i].edge != o2.0 {
                continue;
            }
            let leaving = p.hops[i].forward == o2.1;
            let (right, left) = if leaving { (&gi, &k) } else { (&ki, &g) };
            if i == 0 {
                p.head = s.mul(&p.head, right);
            } else {
                p.hops[i - 1].elem = s.mul(&p.hops[i - 1].elem, right);
            }
            let h = &mut p.hops[i];
            h.elem = s.mul(left, &h.elem);
            h.edge = o1.0;
            h.forward = if leaving { o1.1 } else { !o1.1 };
        }
    }
    w.drop_edge(o2.0);
    let step = FoldStep { spec: fs.clone(), fold_type, result: w.clone(), far_vertex, blocks, had_trivial_edge };
    Ok((w, step, eff))
}

// ---- fold sequences ----

/// Outcome of [`fold_sequence`].
#[derive(Clone, Debug)]
pub struct FoldSequence {
    /// `T₀` after collapsing edges with degenerate image and subdividing at
    /// preimages of vertices, so that every edge maps onto one edge.
    pub start: MarkedGraphOfGroups,
    pub steps: Vec<FoldStep>,
    /// Fold types available just before each step.
    pub available: Vec<Vec<u8>>,
    /// Final tree and, per vertex, a path in the target reaching its image.
    pub end: MarkedGraphOfGroups,
    pub images: Vec<Path>,
    pub probes: Vec<Word>,
}

/// Point `g·F` as a reduced path from the base of `t`.
fn translate(t: &MarkedGraphOfGroups, g: &Word, f: &Path) -> Path {
    t.reduce_path(&t.concat(&t.word_path(g), f))
}

/// Geodesic from point `a` to point `b` (both given as paths from the base),
/// expressed from the lift of `a`'s end vertex after translating by `a⁻¹`.
fn segment(t: &MarkedGraphOfGroups, a: &Path, b: &Path) -> Path {
    t.reduce_path(&t.concat(&t.reverse(a), b))
}

fn edge_image(w: &MarkedGraphOfGroups, t: &MarkedGraphOfGroups, img: &[Path], e: usize) -> Path {
    let ed = &w.edges[e];
    segment(t, &img[ed.src], &translate(t, &ed.t, &img[ed.dst]))
}

fn apply_effect(img: &mut Vec<Path>, eff: &FoldEffect, new_len: usize) {
    // A relifted vertex is always the one merged away, so its image can go.
    let gone = eff.relift.as_ref().map(|(v, _)| *v);
    let mut out: Vec<Option<Path>> = vec![None; new_len];
    for (u, p) in img.iter().enumerate() {
        if Some(u) != gone {
            out[eff.vertex_map[u]] = Some(p.clone());
        }
    }
    *img = out.into_iter().map(|p| p.expect("every vertex keeps an image")).collect();
}

/// A fold available in `w` under the map to `t`.
#[derive(Clone, Debug)]
struct Candidate {
    spec: FoldSpec,
    fold_type: u8,
}

fn candidates(w: &MarkedGraphOfGroups, t: &MarkedGraphOfGroups, img: &[Path], budget: usize) -> Vec<Candidate> {
    let s = &w.spec;
    let mut out = Vec::new();
    for v in 0..w.vertices.len() {
        let ends = w.ends(v);
        if ends.len() < 1 {
            continue;
        }
        let hgraph = if w.vertices[v].is_trivial() { None } else { Some(w.stab_graph(v)) };
        let in_h = |g: &Word| g.is_identity() || hgraph.as_ref().is_some_and(|h| h.contains(g));
        let fv = t.path_value(&img[v]);
        // Direction of each end in the target: (T-end, coset representative).
        let dirs: Vec<((usize, bool), Word)> = ends
            .iter()
            .map(|&o| {
                let far = translate(t, &w.end_tau(o), &img[w.end_far(o)]);
                let seg = segment(t, &img[v], &far);
                debug_assert_eq!(seg.hops.len(), 1, "edges map onto single edges");
                ((seg.hops[0].edge, seg.hops[0].forward), seg.head)
            })
            .collect();
        for i in 0..ends.len() {
            for j in i..ends.len() {
                if dirs[i].0 != dirs[j].0 {
                    continue;
                }
                let (te, tf) = dirs[i].0;
                let c = t.end_group(te, tf);
                let (y1, y2) = (&dirs[i].1, &dirs[j].1);
                let (o1, o2) = (ends[i], ends[j]);
                if i == j {
                    let (Some(c), Some(_)) = (&c, &hgraph) else { continue };
                    let d = s.conj(&s.mul(&fv, y1), c);
                    let cw = w.end_group(o1.0, o1.1);
                    for m in 1..=budget as i64 {
                        let g = s.powi(&d, m);
                        if g.is_identity() {
                            break;
                        }
                        if in_h(&g) {
                            if cw.as_ref().map_or(true, |cw| s.is_power_of(&g, cw).is_none()) {
                                out.push(Candidate { spec: FoldSpec { vertex: v, first: o1, second: o1, element: g }, fold_type: 3 });
                            }
                            break;
                        }
                    }
                    continue;
                }
                let fold_type = if w.end_group(o1.0, o1.1).is_some() && w.end_group(o2.0, o2.1).is_some() { 1 } else { 2 };
                let frame = |mid: &Word| s.mul_all([&fv, y1, mid, &s.inverse(y2), &s.inverse(&fv)]);
                let found = match &c {
                    None => Some(frame(&Word::identity())).filter(|g| in_h(g)),
                    Some(c) if hgraph.is_none() => {
                        s.is_power_of(&s.mul(&s.inverse(y1), y2), c).map(|_| Word::identity())
                    }
                    Some(c) => (0..=budget as i64)
                        .flat_map(|m| if m == 0 { vec![0] } else { vec![m, -m] })
                        .map(|m| frame(&s.powi(c, m)))
                        .find(|g| in_h(g)),
                };
                if let Some(g) = found {
                    if o1.0 == o2.0 {
                        // Would identify an edge with its own reverse: an inversion.
                        continue;
                    }
                    out.push(Candidate { spec: FoldSpec { vertex: v, first: o1, second: o2, element: g }, fold_type });
                }
            }
        }
    }
    out
}

/// Collapses and subdivides `t0` so that the equivariant map to `t` sending
/// the base to the base, and each peripheral vertex `c·G_i` to `c·Fix(G_i)`,
/// is simplicial.
fn preprocess(t0: &MarkedGraphOfGroups, t: &MarkedGraphOfGroups) -> Result<(MarkedGraphOfGroups, Vec<Path>)> {
    if t0.spec != t.spec {
        return Err(Error::IncompatibleContext("trees over different free products".into()));
    }
    t0.check_structure()?;
    t.check_structure()?;
    let mut img = Vec::new();
    for vg in &t0.vertices {
        if !vg.free.iter().all(Word::is_identity) || vg.peripherals.len() > 1 {
            return Err(Error::Precondition("the source must be a Grushko tree".into()));
        }
        img.push(match vg.peripherals.first() {
            None => Path::at(t.base, Word::identity()),
            Some((i, c)) => t.reduce_path(&t.concat(&t.word_path(c), &t.factor_marking[i - 1])),
        });
    }
    if t0.edges.iter().any(|e| e.group.is_some()) {
        return Err(Error::Precondition("the source must be a Grushko tree".into()));
    }
    let mut w = t0.clone();
    while let Some(e) = (0..w.edges.len()).find(|&e| edge_image(&w, t, &img, e).hops.is_empty()) {
        let eff = w.contract_edge(e);
        let n = w.vertices.len();
        apply_effect(&mut img, &eff, n);
    }
    for e in 0..w.edges.len() {
        let seg = edge_image(&w, t, &img, e);
        w.edges[e].length = t.path_length(&seg);
        let src = w.edges[e].src;
        let mut cur = e;
        for j in 0..seg.hops.len() - 1 {
            let l = t.edges[seg.hops[j].edge].length.clone();
            let v = w.subdivide(cur, &l)?;
            let prefix = Path { start: seg.start, head: seg.head.clone(), hops: seg.hops[..=j].to_vec() };
            debug_assert_eq!(v, img.len());
            img.push(t.reduce_path(&t.concat(&img[src], &prefix)));
            cur = w.edges.len() - 1;
        }
    }
    Ok((w, img))
}

/// Decomposes the equivariant map `T₀ → T` into folds, performing type 1
/// folds first, then type 2, then type 3, and always folding by the least
/// power of an edge stabilizer available (the maximality rule). `budget`
/// bounds the power searches. The end result is compared with `T` on all
/// words of at most 4 syllables (at most 500 of them).
pub fn fold_sequence(t0: &MarkedGraphOfGroups, t: &MarkedGraphOfGroups, budget: usize) -> Result<FoldSequence> {
    let (start, mut img) = preprocess(t0, t)?;
    let mut w = start.clone();
    let mut steps = Vec::new();
    let mut available = Vec::new();
    let mut seen = HashSet::new();
    seen.insert(fingerprint(&w));
    loop {
        let cands = candidates(&w, t, &img, budget);
        let Some(best) = cands.iter().min_by_key(|c| c.fold_type) else { break };
        let mut types: Vec<u8> = cands.iter().map(|c| c.fold_type).collect();
        types.sort_unstable();
        types.dedup();
        let (next, step, eff) = fold_with_effect(&w, &best.spec)?;
        debug_assert_eq!(step.fold_type, best.fold_type);
        let n = next.vertices.len();
        apply_effect(&mut img, &eff, n);
        w = next;
        if !seen.insert(fingerprint(&w)) {
            return Err(Error::Obstruction("fold search revisited a tree".into()));
        }
        available.push(types);
        steps.push(step);
        if steps.len() > 64 * (budget + start.edges.len() + 1) {
            return Err(Error::Obstruction("fold sequence exceeded its step budget".into()));
        }
    }
    let probes = probe_words(&t.spec, 4, 500);
    if w.length_spectrum(&probes) != t.length_spectrum(&probes) {
        return Err(Error::Obstruction(
            "no further folds apply but the folded tree differs from the target on the probe words".into(),
        ));
    }
    Ok(FoldSequence { start, steps, available, end: w, images: img, probes })
}

impl FoldSequence {
    pub fn to_json(&self, target: &MarkedGraphOfGroups) -> Value {
        let s = &target.spec;
        let spectrum = |t: &MarkedGraphOfGroups| -> Vec<Value> {
            t.length_spectrum(&self.probes).iter().map(crate::rational::q_to_json).collect()
        };
        json!({
            "format": 1,
            "probes": self.probes.iter().map(|w| s.word_to_json(w)).collect::<Vec<_>>(),
            "start_spectrum": spectrum(&self.start),
            "steps": self.steps.iter().zip(&self.available).map(|(st, av)| {
                let mut j = st.to_json();
                j["available_types"] = json!(av);
                j["spectrum"] = json!(spectrum(&st.result));
                j
            }).collect::<Vec<_>>(),
            "target_spectrum": spectrum(target),
        })
    }
}

// ---- splitting vertex ----

/// A vertex of `T` with its group written as `⟨A⟩ * ⟨B⟩`, generators given
/// in the coordinates of the vertex's lift in `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplittingCertificate {
    pub vertex: usize,
    pub blocks: (Vec<Word>, Vec<Word>),
    pub fold_type: u8,
    /// For each incident edge group and peripheral piece: a description,
    /// the block (0 or 1) and `z ∈ G_v` with `z·piece·z⁻¹` inside it.
    pub pieces: Vec<(String, usize, Word)>,
}

impl SplittingCertificate {
    pub fn to_json(&self, spec: &FactorSpec) -> Value {
        let ws = |v: &Vec<Word>| v.iter().map(|w| spec.word_to_json(w)).collect::<Vec<_>>();
        json!({
            "format": 1,
            "vertex": self.vertex,
            "blocks": [ws(&self.blocks.0), ws(&self.blocks.1)],
            "fold_type": self.fold_type,
            "pieces": self.pieces.iter().map(|(d, b, z)| json!({"piece": d, "block": b, "conjugator": spec.word_to_json(z)})).collect::<Vec<_>>(),
        })
    }
}

/// Folds the standard rose onto `T` and reads the vertex off the last fold
/// that removed an edge with trivial stabilizer.
pub fn find_splitting_vertex(t: &MarkedGraphOfGroups, budget: usize) -> Result<SplittingCertificate> {
    if let Some(e) = t.edges.iter().position(|e| e.group.is_none()) {
        return Err(Error::Precondition(format!("edge {e} has trivial group")));
    }
    let seq = fold_sequence(&crate::catalog::rose(&t.spec), t, budget)?;
    let Some(k) = seq.steps.iter().rposition(|st| st.had_trivial_edge) else {
        return Err(Error::Obstruction("no fold removed a trivial edge".into()));
    };
    if k + 1 != seq.steps.len() {
        return Err(Error::Obstruction(format!(
            "{} fold(s) follow the last one touching a trivial edge",
            seq.steps.len() - k - 1
        )));
    }
    let st = &seq.steps[k];
    let f = &seq.images[st.far_vertex];
    let s = &t.spec;
    let val = t.path_value(f);
    let back = |ws: &Vec<Word>| ws.iter().map(|b| s.conj(&s.inverse(&val), b)).collect::<Vec<_>>();
    let blocks = (back(&st.blocks.0), back(&st.blocks.1));
    let v = t.path_end(f);
    let mut pieces_in = Vec::new();
    for (e, o) in t.ends(v) {
        pieces_in.push((format!("edge {e} {}", if o { "source" } else { "target" }), vec![t.end_group(e, o).expect("checked nontrivial")]));
    }
    for (i, c) in &t.vertices[v].peripherals {
        let gens = t.spec.factor(*i).generators();
        let ws = gens.into_iter().map(|a| s.conj(c, &s.letter(crate::words::Letter::Per { factor: *i, elt: a }))).collect();
        pieces_in.push((format!("peripheral G_{i}"), ws));
    }
    let graphs = [KuroshGraph::build(s, &blocks.0), KuroshGraph::build(s, &blocks.1)];
    let all: Vec<Word> = blocks.0.iter().chain(&blocks.1).cloned().collect();
    let mut pieces = Vec::new();
    for (desc, ws) in pieces_in {
        let hit = short_products(s, &all, budget.max(1) * 64).into_iter().find_map(|z| {
            let zi = s.inverse(&z);
            (0..2).find(|&b| ws.iter().all(|w| graphs[b].contains(&s.mul_all([&z, w, &zi])))).map(|b| (b, z))
        });
        match hit {
            Some((b, z)) => pieces.push((desc, b, z)),
            None => return Err(Error::Inconclusive(format!("could not place {desc} in a block within budget"))),
        }
    }
    Ok(SplittingCertificate { vertex: v, blocks, fold_type: st.fold_type, pieces })
}

/// Products of the generators and their inverses in order of length,
/// starting with the identity; at most `cap` of them.
fn short_products(s: &FactorSpec, gens: &[Word], cap: usize) -> Vec<Word> {
    let mut alpha: Vec<Word> = gens.iter().flat_map(|g| [g.clone(), s.inverse(g)]).collect();
    alpha.dedup();
    let mut seen = HashSet::new();
    seen.insert(Word::identity());
    let mut out = vec![Word::identity()];
    let mut i = 0;
    while i < out.len() && out.len() < cap {
        for a in &alpha {
            let w = s.mul(&out[i], a);
            if seen.insert(w.clone()) {
                out.push(w);
            }
        }
        i += 1;
    }
    out.truncate(cap);
    out
}
