//! Clause-cloud graphs: one clique ("cloud") per clause whose vertices are the
//! clause's admissible literal assignments, plus an edge between every pair of
//! vertices that give some shared variable different values.

use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::formula::Formula;
use crate::graph::{Graph, DENSE_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Seven satisfying assignments per clause.
    Full,
    /// Four odd-weight assignments per clause.
    Xor,
}

impl Variant {
    pub fn cloud_size(self) -> usize {
        self.assignments().len()
    }

    /// Literal-value triples of one cloud, in vertex order.
    pub fn assignments(self) -> &'static [[bool; 3]] {
        match self {
            Variant::Full => &FULL_ORDER,
            Variant::Xor => &XOR_ORDER,
        }
    }
}

const T: bool = true;
const F: bool = false;

/// Odd-weight assignments, in the order used by the published 16-vertex fixture.
pub const XOR_ORDER: [[bool; 3]; 4] = [[T, T, T], [F, T, F], [T, F, F], [F, F, T]];

/// The xor cloud followed by the three even-weight satisfying assignments, so that
/// the xor graph is the induced subgraph on the first four vertices of every cloud.
pub const FULL_ORDER: [[bool; 3]; 7] = [[T, T, T], [F, T, F], [T, F, F], [F, F, T], [T, T, F], [T, F, T], [F, T, T]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CloudVertex {
    pub clause_idx: usize,
    pub lit_values: [bool; 3],
}

/// Value the vertex assigns to variable `x`, if `x` occurs in its clause.
pub fn vertex_var_value(f: &Formula, v: &CloudVertex, x: u32) -> Option<bool> {
    let clause = f.clause(v.clause_idx);
    clause.position_of(x).map(|pos| clause.lits()[pos].var_value_for(v.lit_values[pos]))
}

/// True iff the clauses share a variable that the two vertices set differently.
pub fn contradicts(f: &Formula, u: &CloudVertex, v: &CloudVertex) -> bool {
    let cu = f.clause(u.clause_idx);
    cu.lits()
        .iter()
        .zip(u.lit_values)
        .any(|(lit, val)| vertex_var_value(f, v, lit.var()).is_some_and(|other| other != lit.var_value_for(val)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloudGraph {
    variant: Variant,
    vertices: Vec<CloudVertex>,
    clouds: Vec<Range<usize>>,
    graph: Graph,
}

impl CloudGraph {
    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn vertices(&self) -> &[CloudVertex] {
        &self.vertices
    }

    pub fn vertex(&self, idx: usize) -> &CloudVertex {
        &self.vertices[idx]
    }

    /// Vertex index range of each clause's cloud.
    pub fn clouds(&self) -> &[Range<usize>] {
        &self.clouds
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn cloud_count(&self) -> usize {
        self.clouds.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.graph.has_edge(u, v)
    }

    /// Index of the vertex for `(clause_idx, lit_values)`.
    pub fn vertex_index(&self, clause_idx: usize, lit_values: [bool; 3]) -> Option<usize> {
        let pos = self.variant.assignments().iter().position(|&a| a == lit_values)?;
        self.clouds.get(clause_idx).map(|r| r.start + pos)
    }

    /// JSON sidecar mapping 1-based vertex ids to their clause and literal values.
    pub fn vertex_map_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| {
                serde_json::json!({
                    "vertex": i + 1,
                    "clause_idx": v.clause_idx,
                    "lit_values": v.lit_values.map(u8::from),
                })
            })
            .collect();
        serde_json::json!({ "variant": self.variant, "vertices": rows })
    }
}

pub fn build_graph(f: &Formula, variant: Variant) -> CloudGraph {
    build_graph_with_limit(f, variant, DENSE_LIMIT)
}

/// Like [`build_graph`], choosing sparse adjacency above `dense_limit` vertices.
pub fn build_graph_with_limit(f: &Formula, variant: Variant, dense_limit: usize) -> CloudGraph {
    let k = variant.cloud_size();
    let m = f.m();
    let vertices: Vec<CloudVertex> = (0..m)
        .flat_map(|clause_idx| {
            variant.assignments().iter().map(move |&lit_values| CloudVertex { clause_idx, lit_values })
        })
        .collect();
    let clouds: Vec<Range<usize>> = (0..m).map(|i| i * k..(i + 1) * k).collect();

    let mut edges = Vec::new();
    for r in &clouds {
        for u in r.clone() {
            for v in u + 1..r.end {
                edges.push((u, v));
            }
        }
    }

    // only clause pairs sharing a variable can contribute cross-cloud edges
    let mut occurrences: Vec<Vec<usize>> = vec![Vec::new(); f.n() as usize + 1];
    for (i, c) in f.clauses().iter().enumerate() {
        for v in c.vars() {
            occurrences[v as usize].push(i);
        }
    }
    let mut seen = HashSet::new();
    for occ in &occurrences {
        for (a, &i) in occ.iter().enumerate() {
            for &j in &occ[a + 1..] {
                if i == j || !seen.insert((i, j)) {
                    continue;
                }
                for u in clouds[i].clone() {
                    for v in clouds[j].clone() {
                        if contradicts(f, &vertices[u], &vertices[v]) {
                            edges.push((u, v));
                        }
                    }
                }
            }
        }
    }

    let graph = Graph::from_edges_with_limit(vertices.len(), edges, dense_limit)
        .expect("cloud edges are in range and loop free");
    CloudGraph { variant, vertices, clouds, graph }
}
