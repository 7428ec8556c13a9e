//! Standard example trees used by tests, the acceptance suite and the CLI.

use num_traits::One;

use crate::rational::{qi, Q};
use crate::trees::{Edge, Hop, MarkedGraphOfGroups, Path, VertexGroup};
use crate::words::{FactorModel, FactorSpec, Word};

fn hop(edge: usize, forward: bool) -> Hop {
    Hop { edge, forward, elem: Word::identity() }
}

fn trivial_edge(src: usize, dst: usize, length: Q, t: Word) -> Edge {
    Edge { src, dst, length, t, group: None }
}

/// The standard `(G,F)`-free splitting: a trivial center with one loop
/// `x_j` per free generator and one edge to a vertex fixed by each `G_i`.
pub fn standard_rose(spec: &FactorSpec, petal: Q, spoke: Q) -> MarkedGraphOfGroups {
    let mut vertices = vec![VertexGroup::trivial()];
    let mut edges = Vec::new();
    let mut free_marking = Vec::new();
    for j in 1..=spec.free_rank {
        edges.push(trivial_edge(0, 0, petal.clone(), spec.x(j, 1)));
        free_marking.push(Path { start: 0, head: Word::identity(), hops: vec![hop(edges.len() - 1, true)] });
    }
    let mut factor_marking = Vec::new();
    for i in 1..=spec.k() {
        vertices.push(VertexGroup::peripheral(i, Word::identity()));
        edges.push(trivial_edge(0, i, spoke.clone(), Word::identity()));
        factor_marking.push(Path { start: 0, head: Word::identity(), hops: vec![hop(edges.len() - 1, true)] });
    }
    MarkedGraphOfGroups { spec: spec.clone(), vertices, edges, base: 0, free_marking, factor_marking }
}

/// Standard rose with unit lengths.
pub fn rose(spec: &FactorSpec) -> MarkedGraphOfGroups {
    standard_rose(spec, Q::one(), Q::one())
}

/// `F₂` barbell: loops `x₁`, `x₂` of length `eps` joined by a bar of length 1.
pub fn barbell(eps: Q) -> MarkedGraphOfGroups {
    let spec = FactorSpec::free(2);
    let edges = vec![
        trivial_edge(0, 0, eps.clone(), spec.x(1, 1)),
        trivial_edge(1, 1, eps, spec.x(2, 1)),
        trivial_edge(0, 1, Q::one(), Word::identity()),
    ];
    let free_marking = vec![
        Path { start: 0, head: Word::identity(), hops: vec![hop(0, true)] },
        Path { start: 0, head: Word::identity(), hops: vec![hop(2, true), hop(1, true), hop(2, false)] },
    ];
    MarkedGraphOfGroups {
        spec,
        vertices: vec![VertexGroup::trivial(), VertexGroup::trivial()],
        edges,
        base: 0,
        free_marking,
        factor_marking: vec![],
    }
}

/// One edge of length 1 between vertices `⟨x₁⟩` and `⟨x₂⟩` in `F₂`.
pub fn edge_of_groups() -> MarkedGraphOfGroups {
    let spec = FactorSpec::free(2);
    let edges = vec![trivial_edge(0, 1, Q::one(), Word::identity())];
    let free_marking = vec![
        Path::at(0, spec.x(1, 1)),
        Path { start: 0, head: Word::identity(), hops: vec![Hop { edge: 0, forward: true, elem: spec.x(2, 1) }, hop(0, false)] },
    ];
    MarkedGraphOfGroups {
        vertices: vec![VertexGroup::free(vec![spec.x(1, 1)]), VertexGroup::free(vec![spec.x(2, 1)])],
        spec,
        edges,
        base: 0,
        free_marking,
        factor_marking: vec![],
    }
}

/// The same edge for `G = ℤ * ℤ` with both factors peripheral: a Grushko tree.
pub fn peripheral_edge() -> MarkedGraphOfGroups {
    let spec = FactorSpec::new(0, vec![FactorModel::InfiniteCyclic, FactorModel::InfiniteCyclic]).unwrap();
    MarkedGraphOfGroups {
        vertices: vec![VertexGroup::peripheral(1, Word::identity()), VertexGroup::peripheral(2, Word::identity())],
        edges: vec![trivial_edge(0, 1, Q::one(), Word::identity())],
        base: 0,
        free_marking: vec![],
        factor_marking: vec![Path::at(0, Word::identity()), Path { start: 0, head: Word::identity(), hops: vec![hop(0, true)] }],
        spec,
    }
}

/// HNN extension over `⟨c⟩` in `F₂ = ⟨c, s⟩` (`c = x₁`, `s = x₂`): one vertex
/// `⟨a, c⟩` with `a = s·c·s⁻¹`, and a loop of length 1 with `t = s⁻¹`, whose
/// group `⟨c⟩` is identified with `⟨a⟩` at the other end.
pub fn hnn() -> MarkedGraphOfGroups {
    let spec = FactorSpec::free(2);
    let c = spec.x(1, 1);
    let a = spec.conj(&spec.x(2, 1), &c);
    MarkedGraphOfGroups {
        vertices: vec![VertexGroup::free(vec![a, c.clone()])],
        edges: vec![Edge { src: 0, dst: 0, length: Q::one(), t: spec.x(2, -1), group: Some(c.clone()) }],
        base: 0,
        free_marking: vec![Path::at(0, c), Path { start: 0, head: Word::identity(), hops: vec![hop(0, false)] }],
        factor_marking: vec![],
        spec,
    }
}

/// Amalgam `⟨x₁, x₃⟩ *_{⟨x₃⟩} ⟨x₂, x₃⟩` in `F₃`, edge length 1.
pub fn amalgam() -> MarkedGraphOfGroups {
    let spec = FactorSpec::free(3);
    let c = spec.x(3, 1);
    MarkedGraphOfGroups {
        vertices: vec![VertexGroup::free(vec![spec.x(1, 1), c.clone()]), VertexGroup::free(vec![spec.x(2, 1), c.clone()])],
        edges: vec![Edge { src: 0, dst: 1, length: Q::one(), t: Word::identity(), group: Some(c.clone()) }],
        base: 0,
        free_marking: vec![
            Path::at(0, spec.x(1, 1)),
            Path { start: 0, head: Word::identity(), hops: vec![Hop { edge: 0, forward: true, elem: spec.x(2, 1) }, hop(0, false)] },
            Path::at(0, c),
        ],
        factor_marking: vec![],
        spec,
    }
}

/// The truncated chain `⟨a⟩ *_{⟨a²⟩} ⟨a²⟩ * … *_{⟨a^{2^d}⟩} ⟨a^{2^d}⟩ * ⟨b⟩`
/// in `F₂ = ⟨a, b⟩`; the edge with group `⟨a^{2^k}⟩` has length `1/2^k`,
/// and `b` is a unit loop at the last vertex.
pub fn tame_chain(d: u32) -> MarkedGraphOfGroups {
    assert!(d >= 1);
    let spec = FactorSpec::free(2);
    let apow = |k: u32| spec.x(1, 1i64 << k);
    let mut vertices = vec![VertexGroup::free(vec![spec.x(1, 1)])];
    let mut edges = Vec::new();
    for k in 1..=d {
        vertices.push(VertexGroup::free(vec![apow(k)]));
        edges.push(Edge {
            src: (k - 1) as usize,
            dst: k as usize,
            length: Q::new(1.into(), (1i64 << k).into()),
            t: Word::identity(),
            group: Some(apow(k)),
        });
    }
    edges.push(trivial_edge(d as usize, d as usize, Q::one(), spec.x(2, 1)));
    let mut hops: Vec<Hop> = (0..d as usize).map(|e| hop(e, true)).collect();
    hops.push(hop(d as usize, true));
    hops.extend((0..d as usize).rev().map(|e| hop(e, false)));
    MarkedGraphOfGroups {
        vertices,
        edges,
        base: 0,
        free_marking: vec![Path::at(0, spec.x(1, 1)), Path { start: 0, head: Word::identity(), hops }],
        factor_marking: vec![],
        spec,
    }
}

/// `F₂` theta graph: two trivial vertices joined by three edges
/// `t = 1, x₁, x₂` with the given lengths.
pub fn theta(l: [Q; 3]) -> MarkedGraphOfGroups {
    let spec = FactorSpec::free(2);
    let [l0, l1, l2] = l;
    MarkedGraphOfGroups {
        vertices: vec![VertexGroup::trivial(), VertexGroup::trivial()],
        edges: vec![
            trivial_edge(0, 1, l0, Word::identity()),
            trivial_edge(0, 1, l1, spec.x(1, 1)),
            trivial_edge(0, 1, l2, spec.x(2, 1)),
        ],
        base: 0,
        free_marking: vec![
            Path { start: 0, head: Word::identity(), hops: vec![hop(1, true), hop(0, false)] },
            Path { start: 0, head: Word::identity(), hops: vec![hop(2, true), hop(0, false)] },
        ],
        factor_marking: vec![],
        spec,
    }
}

/// Unit theta.
pub fn unit_theta() -> MarkedGraphOfGroups {
    theta([qi(1), qi(1), qi(1)])
}

/// Two-edge `⟨c⟩`-chain in `F₃ = ⟨c, x, y⟩` (`c, x, y = x₁, x₂, x₃`): vertices
/// `w₀ — w₁ — w₂` with group `⟨c⟩` joined by unit edges with group `⟨c⟩`,
/// and a trivial base `u` joined to `w₀, w₁, w₂` with `t = 1, x, y`.
pub fn chain_instance() -> MarkedGraphOfGroups {
    let spec = FactorSpec::free(3);
    let c = spec.x(1, 1);
    let cyc = || VertexGroup::free(vec![c.clone()]);
    let edges = vec![
        Edge { src: 1, dst: 2, length: Q::one(), t: Word::identity(), group: Some(c.clone()) },
        Edge { src: 2, dst: 3, length: Q::one(), t: Word::identity(), group: Some(c.clone()) },
        trivial_edge(0, 1, Q::one(), Word::identity()),
        trivial_edge(0, 2, Q::one(), spec.x(2, 1)),
        trivial_edge(0, 3, Q::one(), spec.x(3, 1)),
    ];
    let free_marking = vec![
        Path { start: 0, head: Word::identity(), hops: vec![Hop { edge: 2, forward: true, elem: c.clone() }, hop(2, false)] },
        Path { start: 0, head: Word::identity(), hops: vec![hop(3, true), hop(0, false), hop(2, false)] },
        Path { start: 0, head: Word::identity(), hops: vec![hop(4, true), hop(1, false), hop(0, false), hop(2, false)] },
    ];
    MarkedGraphOfGroups {
        vertices: vec![VertexGroup::trivial(), cyc(), cyc(), cyc()],
        edges,
        base: 0,
        free_marking,
        factor_marking: vec![],
        spec,
    }
}

/// `ℤ/2 * F₂` with one trivial edge between `⟨ℤ/2, x₁⟩` and `⟨x₂⟩`: all arc
/// stabilizers trivial, but not a Grushko tree.
pub fn mixed_trivial_arc() -> MarkedGraphOfGroups {
    let spec = FactorSpec::new(2, vec![FactorModel::FiniteCyclic { order: 2 }]).unwrap();
    MarkedGraphOfGroups {
        vertices: vec![
            VertexGroup { peripherals: vec![(1, Word::identity())], free: vec![spec.x(1, 1)] },
            VertexGroup::free(vec![spec.x(2, 1)]),
        ],
        edges: vec![trivial_edge(0, 1, Q::one(), Word::identity())],
        base: 0,
        free_marking: vec![
            Path::at(0, spec.x(1, 1)),
            Path { start: 0, head: Word::identity(), hops: vec![Hop { edge: 0, forward: true, elem: spec.x(2, 1) }, hop(0, false)] },
        ],
        factor_marking: vec![Path::at(0, Word::identity())],
        spec,
    }
}
