//! Index theory for simplicial very small trees: `i(x) = 2·rk_K(Stab(x)) +
//! v₁(x) − 2`, its total over vertex orbits, the five shapes of index-1
//! vertices, and the length lattices `Λ ⊇ L ⊇ 2Λ`.

use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::{in_span, q_to_json, rank, span_generator, Q};
use crate::trees::MarkedGraphOfGroups;
use crate::words::Word;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexIndex {
    pub vertex: usize,
    pub stab_rank: usize,
    /// Orbits of directions with trivial stabilizer.
    pub v1: usize,
    pub index: i64,
    /// Directions at the lift, `None` when infinitely many.
    pub t_valence: Option<BigInt>,
    pub branch_or_inversion: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexReport {
    pub records: Vec<VertexIndex>,
    pub total: i64,
    pub branch_orbits: usize,
    /// `2·rk_K(G,F) − 2`.
    pub bound: i64,
}

impl IndexReport {
    pub fn to_json(&self) -> Value {
        json!({
            "format": 1,
            "total": self.total,
            "bound": self.bound,
            "branch_orbits": self.branch_orbits,
            "vertices": self.records.iter().map(|r| json!({
                "vertex": r.vertex, "stab_rank": r.stab_rank, "v1": r.v1, "index": r.index,
                "t_valence": r.t_valence.as_ref().map(|k| k.to_string()),
                "branch_or_inversion": r.branch_or_inversion,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn table(&self) -> String {
        let mut out = String::from("vertex  rk_K  v1  i(x)  directions  branch\n");
        for r in &self.records {
            let tv = r.t_valence.as_ref().map(|k| k.to_string()).unwrap_or_else(|| "inf".into());
            out.push_str(&format!(
                "{:>6}  {:>4}  {:>2}  {:>4}  {:>10}  {}\n",
                r.vertex, r.stab_rank, r.v1, r.index, tv, r.branch_or_inversion
            ));
        }
        out.push_str(&format!("i(T) = {}   2rk_K - 2 = {}   b = {}\n", self.total, self.bound, self.branch_orbits));
        out
    }
}

pub fn vertex_record(t: &MarkedGraphOfGroups, v: usize) -> VertexIndex {
    let stab_rank = t.stab_rank(v);
    let ends = t.ends(v);
    let v1 = ends.iter().filter(|(e, _)| t.edges[*e].group.is_none()).count();
    let index = 2 * stab_rank as i64 + v1 as i64 - 2;
    let t_valence = t.t_valence(v);
    let two = BigInt::from(2);
    let branch_or_inversion = match &t_valence {
        None => true,
        Some(k) if *k >= BigInt::from(3) => true,
        // a single end of index 2: the stabilizer swaps the two directions
        Some(k) => *k == two && ends.len() == 1,
    };
    VertexIndex { vertex: v, stab_rank, v1, index, t_valence, branch_or_inversion }
}

/// `i(x)` for the orbit of quotient vertex `v`.
pub fn local_index(t: &MarkedGraphOfGroups, v: usize) -> i64 {
    vertex_record(t, v).index
}

/// Index report without any refusal or equality check.
pub fn index_report(t: &MarkedGraphOfGroups) -> IndexReport {
    let records: Vec<VertexIndex> = (0..t.vertices.len()).map(|v| vertex_record(t, v)).collect();
    let total = records.iter().map(|r| r.index).sum();
    let branch_orbits = records.iter().filter(|r| r.branch_or_inversion).count();
    IndexReport { records, total, branch_orbits, bound: 2 * t.spec.rk_k() as i64 - 2 }
}

/// Total index of a very small simplicial tree; equality with
/// `2·rk_K(G,F) − 2` is required.
pub fn total_index(t: &MarkedGraphOfGroups, budget: usize) -> Result<IndexReport> {
    let v = t.validate(budget)?;
    if !v.is_very_small {
        return Err(Error::Refused("total_index needs a very small tree".into()));
    }
    let r = index_report(t);
    if r.total != r.bound {
        let worst: Vec<String> = r.records.iter().map(|x| format!("v{}: i={}", x.vertex, x.index)).collect();
        return Err(Error::Obstruction(format!(
            "i(T) = {} differs from 2rk_K - 2 = {} ({})",
            r.total,
            r.bound,
            worst.join(", ")
        )));
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VertexType {
    /// 1: three trivial directions, trivial stabilizer.
    TrivialTripod,
    /// 2: one trivial direction, peripheral stabilizer.
    Peripheral,
    /// 3: one trivial direction, cyclic nonperipheral stabilizer.
    CyclicLeaf,
    /// 4: cyclic stabilizer, one cyclic and one trivial edge.
    CyclicMixed,
    /// 5: cyclic stabilizer, two cyclic edges and one trivial edge.
    CyclicFork,
    Unclassified(String),
}

impl VertexType {
    pub fn tag(&self) -> Option<u8> {
        match self {
            VertexType::TrivialTripod => Some(1),
            VertexType::Peripheral => Some(2),
            VertexType::CyclicLeaf => Some(3),
            VertexType::CyclicMixed => Some(4),
            VertexType::CyclicFork => Some(5),
            VertexType::Unclassified(_) => None,
        }
    }
}

pub fn classify_vertex(t: &MarkedGraphOfGroups, v: usize) -> VertexType {
    let s = &t.spec;
    let rec = vertex_record(t, v);
    if rec.index != 1 {
        return VertexType::Unclassified(format!("index {} is not 1", rec.index));
    }
    let vg = &t.vertices[v];
    let ends = t.ends(v);
    let cyclic_ends = ends.len() - rec.v1;
    let gens = vg.generators(s);
    let cyclic_nonperipheral = || -> bool {
        gens.len() >= 1 && rec.stab_rank == 1 && vg.peripherals.is_empty() && {
            let (r, _) = s.max_root(&gens[0]).unwrap();
            gens.iter().all(|g| s.is_power_of(g, &r).is_some())
        }
    };
    match (ends.len(), cyclic_ends) {
        (3, 0) if vg.is_trivial() => VertexType::TrivialTripod,
        (1, 0) if vg.peripherals.len() == 1 && vg.free.iter().all(Word::is_identity) => VertexType::Peripheral,
        (1, 0) if cyclic_nonperipheral() => VertexType::CyclicLeaf,
        (2, 1) if cyclic_nonperipheral() => VertexType::CyclicMixed,
        (3, 2) if cyclic_nonperipheral() => VertexType::CyclicFork,
        (n, c) => VertexType::Unclassified(format!("valence {n} with {c} cyclic edges")),
    }
}

pub fn classify_vertices(t: &MarkedGraphOfGroups) -> Vec<VertexType> {
    (0..t.vertices.len()).map(|v| classify_vertex(t, v)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeReport {
    /// Lengths of the segments between consecutive branch/inversion points.
    pub lambda_generators: Vec<Q>,
    /// Translation lengths of the marking generators, their pairwise
    /// products and the short probe words.
    pub l_generators: Vec<Q>,
    /// Rank of the ℤ-span of `Λ` (at most 1 for rational lengths).
    pub r_z: usize,
    /// Rank with every edge length treated as an independent variable.
    pub r_z_formal: usize,
    pub branch_orbits: usize,
    /// `rk_f + b − 1`.
    pub bound: i64,
    pub containment_ok: bool,
    pub relations: Vec<String>,
    pub warnings: Vec<String>,
}

impl LatticeReport {
    pub fn to_json(&self) -> Value {
        json!({
            "format": 1,
            "lambda_generators": self.lambda_generators.iter().map(q_to_json).collect::<Vec<_>>(),
            "l_generators": self.l_generators.iter().map(q_to_json).collect::<Vec<_>>(),
            "r_z": self.r_z,
            "r_z_formal": self.r_z_formal,
            "branch_orbits": self.branch_orbits,
            "bound": self.bound,
            "containment_ok": self.containment_ok,
            "relations": self.relations,
            "warnings": self.warnings,
        })
    }
}

/// Segments of the quotient graph between branch/inversion vertices, as
/// `(length, per-edge counts)`.
pub fn segments(t: &MarkedGraphOfGroups) -> Vec<(Q, Vec<i64>)> {
    let special: Vec<bool> = (0..t.vertices.len()).map(|v| vertex_record(t, v).branch_or_inversion).collect();
    let mut used = vec![false; t.edges.len()];
    let mut out = Vec::new();
    let walk = |e0: usize, out0: bool, used: &mut Vec<bool>| {
        let mut counts = vec![0i64; t.edges.len()];
        let mut len = Q::zero();
        let (mut e, mut fwd) = (e0, out0);
        loop {
            used[e] = true;
            counts[e] += 1;
            len += &t.edges[e].length;
            let w = t.far(e, fwd);
            if special[w] {
                break;
            }
            // the other end at w
            let next = t.ends(w).into_iter().find(|&(f, o)| !(f == e && o != fwd) && !used[f]);
            match next {
                Some((f, o)) => {
                    e = f;
                    fwd = o;
                }
                None => break,
            }
        }
        (len, counts)
    };
    for v in 0..t.vertices.len() {
        if !special[v] {
            continue;
        }
        for (e, o) in t.ends(v) {
            if !used[e] {
                out.push(walk(e, o, &mut used));
            }
        }
    }
    for e in 0..t.edges.len() {
        if !used[e] {
            out.push(walk(e, true, &mut used));
        }
    }
    out
}

const L_PROBES: usize = 300;

pub fn lattice_ranks(t: &MarkedGraphOfGroups) -> LatticeReport {
    let s = &t.spec;
    let rep = index_report(t);
    let segs = segments(t);
    let lambda: Vec<Q> = segs.iter().map(|(l, _)| l.clone()).collect();
    let mut gens: Vec<Word> = (1..=s.free_rank).map(|j| s.x(j, 1)).collect();
    for i in 1..=s.k() {
        gens.push(s.letter(crate::words::Letter::Per { factor: i, elt: s.factor(i).generators()[0].clone() }));
    }
    let mut words = gens.clone();
    for a in 0..gens.len() {
        for b in a + 1..gens.len() {
            words.push(s.mul(&gens[a], &gens[b]));
            words.push(s.mul(&gens[a], &s.inverse(&gens[b])));
        }
    }
    // generators and their products alone can miss L: products of conjugate
    // elliptics realize lengths that no short product of generators does
    for w in crate::trees::probe_words(s, 4, L_PROBES) {
        if !words.contains(&w) {
            words.push(w);
        }
    }
    let l: Vec<Q> = words.iter().map(|w| t.translation_length(w)).collect();
    let r_z = rank(&lambda.iter().map(|x| vec![x.clone()]).collect::<Vec<_>>());
    let to_q = |c: &Vec<i64>| c.iter().map(|&k| Q::from_integer(BigInt::from(k))).collect::<Vec<Q>>();
    let r_z_formal = rank(&segs.iter().map(|(_, c)| to_q(c)).collect::<Vec<_>>());
    let g_lambda = span_generator(&lambda);
    let g_l = span_generator(&l);
    let mut relations = Vec::new();
    let mut containment_ok = true;
    for (w, x) in words.iter().zip(&l) {
        if !in_span(x, &g_lambda) {
            containment_ok = false;
            relations.push(format!("L ⊄ Λ: ‖{w}‖ = {x}"));
        }
    }
    for x in &lambda {
        let two_x = x * Q::from_integer(BigInt::from(2));
        if !in_span(&two_x, &g_l) {
            containment_ok = false;
            relations.push(format!("2Λ ⊄ L: 2·{x}"));
        }
    }
    let bound = s.free_rank as i64 + rep.branch_orbits as i64 - 1;
    let mut warnings = Vec::new();
    if r_z as i64 > bound || r_z_formal as i64 > bound {
        warnings.push(format!("rank bound rk_f + b - 1 = {bound} exceeded"));
    }
    let max_edges = 3 * s.free_rank as i64 + 2 * s.k() as i64 - 3;
    let grushko = t.edges.iter().all(|e| e.group.is_none())
        && t.vertices.iter().all(|v| v.is_trivial() || (v.peripherals.len() == 1 && v.free.iter().all(Word::is_identity)));
    if !grushko && r_z_formal as i64 >= max_edges {
        warnings.push(format!("non-Grushko tree reaches the maximal rank {max_edges}"));
    }
    LatticeReport {
        lambda_generators: lambda,
        l_generators: l,
        r_z,
        r_z_formal,
        branch_orbits: rep.branch_orbits,
        bound,
        containment_ok,
        relations,
        warnings,
    }
}

/// Quotient edge count against `3·rk_f + 2|F| − 3`.
pub fn edge_count_check(t: &MarkedGraphOfGroups) -> bool {
    let s = &t.spec;
    (t.edges.len() as i64) <= 3 * s.free_rank as i64 + 2 * s.k() as i64 - 3
}

/// `i(T)` without validation.
pub fn total(t: &MarkedGraphOfGroups) -> i64 {
    index_report(t).total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::rational::{q, qi};
    use crate::words::{FactorModel, FactorSpec};

    #[test]
    fn local_examples() {
        let f2 = FactorSpec::free(2);
        assert_eq!(local_index(&catalog::rose(&f2), 0), 2);
        let s = FactorSpec::new(1, vec![FactorModel::FiniteCyclic { order: 2 }, FactorModel::FiniteCyclic { order: 3 }]).unwrap();
        let r = catalog::rose(&s);
        assert_eq!(local_index(&r, 1), 1);
        let rep = total_index(&r, 4).unwrap();
        assert_eq!((rep.total, rep.bound), (4, 4));
        let mut b = catalog::barbell(q(1, 10));
        let w = b.subdivide(2, &q(1, 2)).unwrap();
        assert_eq!(local_index(&b, w), 0);
        assert_eq!(total(&b), 2);
        assert_eq!(total_index(&catalog::peripheral_edge(), 4).unwrap().total, 2);
        assert_eq!(total_index(&catalog::hnn(), 4).unwrap().total, 2);
        assert!(matches!(total_index(&catalog::tame_chain(2), 4), Err(Error::Refused(_))));
    }

    #[test]
    fn vertex_types() {
        let tags = |t: &MarkedGraphOfGroups| classify_vertices(t).iter().map(VertexType::tag).collect::<Vec<_>>();
        assert_eq!(tags(&catalog::barbell(q(1, 10))), vec![Some(1), Some(1)]);
        assert_eq!(tags(&catalog::edge_of_groups()), vec![Some(3), Some(3)]);
        let s = FactorSpec::new(1, vec![FactorModel::FiniteCyclic { order: 2 }]).unwrap();
        assert_eq!(tags(&catalog::rose(&s))[1], Some(2));
        assert_eq!(tags(&catalog::rose(&FactorSpec::free(2))), vec![None]);
    }

    #[test]
    fn lattices() {
        let r = lattice_ranks(&catalog::rose(&FactorSpec::free(2)));
        assert_eq!(r.lambda_generators, vec![qi(1), qi(1)]);
        assert_eq!((r.r_z, r.bound), (1, 2));
        assert!(r.containment_ok);
        let b = lattice_ranks(&catalog::barbell(q(1, 10)));
        // 1/10 and 1 span (1/10)ℤ: one rational direction, three free edge variables
        assert_eq!((b.r_z, b.r_z_formal, b.bound), (1, 3, 3));
        assert!(b.containment_ok && b.warnings.is_empty());
        let t7 = catalog::barbell(q(1, 7)).scaled(&qi(7));
        assert_eq!(lattice_ranks(&t7).r_z, lattice_ranks(&catalog::barbell(q(1, 7))).r_z);
    }

    #[test]
    fn edge_counts() {
        assert!(edge_count_check(&catalog::rose(&FactorSpec::free(2))));
        assert!(edge_count_check(&catalog::peripheral_edge()));
        assert!(!edge_count_check(&{
            let mut t = catalog::unit_theta();
            t.subdivide(0, &q(1, 2)).unwrap();
            t
        }));
    }
}
