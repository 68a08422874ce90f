//! Undirected simple graphs with dense or sparse adjacency, DIMACS graph I/O and
//! an exact maximum independent set search for small instances.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vertex count at or below which adjacency is stored as a bit matrix.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Adjacency {
    /// Row-major bit matrix, `words_per_row` u64 words per row.
    Dense { words_per_row: usize, bits: Vec<u64> },
    /// Sorted neighbour lists.
    Sparse { lists: Vec<Vec<u32>> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edge_count: usize,
    adj: Adjacency,
}

impl Graph {
    /// Builds a graph from an edge list. Self loops are rejected; repeated edges collapse.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_edges_with_limit(n, edges, DENSE_LIMIT)
    }

    pub fn from_edges_with_limit(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        dense_limit: usize,
    ) -> Result<Self> {
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!("edge ({u}, {v}) out of range for {n} vertices")));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self loop at vertex {u}")));
            }
            lists[u].push(v as u32);
            lists[v].push(u as u32);
        }
        let mut edge_count = 0;
        for l in &mut lists {
            l.sort_unstable();
            l.dedup();
            edge_count += l.len();
        }
        edge_count /= 2;
        let adj = if n <= dense_limit {
            let words_per_row = n.div_ceil(64).max(1);
            let mut bits = vec![0u64; words_per_row * n];
            for (u, l) in lists.iter().enumerate() {
                for &v in l {
                    bits[u * words_per_row + v as usize / 64] |= 1 << (v % 64);
                }
            }
            Adjacency::Dense { words_per_row, bits }
        } else {
            Adjacency::Sparse { lists }
        };
        Ok(Self { n, edge_count, adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.adj, Adjacency::Dense { .. })
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        match &self.adj {
            Adjacency::Dense { words_per_row, bits } => bits[u * words_per_row + v / 64] >> (v % 64) & 1 == 1,
            Adjacency::Sparse { lists } => lists[u].binary_search(&(v as u32)).is_ok(),
        }
    }

    /// Neighbours of `u` in increasing order.
    pub fn neighbors(&self, u: usize) -> Vec<usize> {
        match &self.adj {
            Adjacency::Dense { words_per_row, bits } => {
                let row = &bits[u * words_per_row..(u + 1) * words_per_row];
                let mut out = Vec::new();
                for (w, &word) in row.iter().enumerate() {
                    let mut word = word;
                    while word != 0 {
                        let b = word.trailing_zeros() as usize;
                        out.push(w * 64 + b);
                        word &= word - 1;
                    }
                }
                out
            }
            Adjacency::Sparse { lists } => lists[u].iter().map(|&v| v as usize).collect(),
        }
    }

    /// Edges `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for u in 0..self.n {
            out.extend(self.neighbors(u).into_iter().filter(|&v| v > u).map(|v| (u, v)));
        }
        out
    }

    /// Dense 0/1 adjacency matrix.
    pub fn adjacency_matrix(&self) -> Vec<Vec<u8>> {
        (0..self.n).map(|u| (0..self.n).map(|v| self.has_edge(u, v) as u8).collect()).collect()
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(i, &u)| set[i + 1..].iter().all(|&v| u != v && !self.has_edge(u, v)))
    }

    /// DIMACS graph format, 1-based vertices.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p edge {} {}\n", self.n, self.edge_count);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "e {} {}", u + 1, v + 1);
        }
        out
    }

    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let bad = |msg: String| Error::Parse { line: line_no, msg };
            let toks: Vec<&str> = raw.split_whitespace().collect();
            match toks.first().copied() {
                None | Some("c") => {}
                Some("p") => {
                    if toks.len() != 4 || !matches!(toks[1], "edge" | "col") {
                        return Err(bad("expected 'p edge <n> <m>'".into()));
                    }
                    let n = toks[2].parse().map_err(|_| bad("invalid vertex count".into()))?;
                    let m = toks[3].parse().map_err(|_| bad("invalid edge count".into()))?;
                    header = Some((n, m));
                }
                Some("e") => {
                    let Some((n, _)) = header else {
                        return Err(bad("edge before header".into()));
                    };
                    if toks.len() != 3 {
                        return Err(bad("expected 'e <u> <v>'".into()));
                    }
                    let parse = |t: &str| -> Result<usize> {
                        let v: usize = t.parse().map_err(|_| bad(format!("invalid vertex '{t}'")))?;
                        if v == 0 || v > n {
                            return Err(bad(format!("vertex {v} out of range 1..={n}")));
                        }
                        Ok(v - 1)
                    };
                    edges.push((parse(toks[1])?, parse(toks[2])?));
                }
                Some(other) => return Err(bad(format!("unexpected line type '{other}'"))),
            }
        }
        let (n, _) = header.ok_or(Error::Parse { line: 0, msg: "missing 'p edge' header".into() })?;
        Self::from_edges(n, edges)
    }
}

/// Exact maximum independent set by branch and bound with a greedy clique-cover bound.
/// Limited to 128 vertices.
pub fn max_independent_set(g: &Graph) -> Result<Vec<usize>> {
    let n = g.vertex_count();
    if n > 128 {
        return Err(Error::TooLarge { size: n, limit: 128 });
    }
    let nbr: Vec<u128> = (0..n).map(|u| g.neighbors(u).into_iter().fold(0u128, |acc, v| acc | 1 << v)).collect();
    let all = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let mut search = MisSearch { nbr: &nbr, best: 0, best_len: 0 };
    search.run(all, 0, 0);
    Ok((0..n).filter(|&v| search.best >> v & 1 == 1).collect())
}

struct MisSearch<'a> {
    nbr: &'a [u128],
    best: u128,
    best_len: u32,
}

impl MisSearch<'_> {
    /// Greedy partition of `cand` into cliques; its size bounds any independent subset.
    fn clique_cover(&self, mut cand: u128) -> u32 {
        let mut cliques = 0;
        while cand != 0 {
            let v = cand.trailing_zeros();
            let mut clique_cand = cand & self.nbr[v as usize];
            cand &= !(1u128 << v);
            while clique_cand != 0 {
                let w = clique_cand.trailing_zeros();
                cand &= !(1u128 << w);
                clique_cand &= self.nbr[w as usize] & !(1u128 << w);
            }
            cliques += 1;
        }
        cliques
    }

    fn run(&mut self, cand: u128, chosen: u128, len: u32) {
        if cand == 0 {
            if len > self.best_len {
                self.best = chosen;
                self.best_len = len;
            }
            return;
        }
        if len + self.clique_cover(cand) <= self.best_len {
            return;
        }
        // branch on the candidate with the most candidate neighbours
        let mut pick = cand.trailing_zeros();
        let mut pick_deg = 0;
        let mut rest = cand;
        while rest != 0 {
            let v = rest.trailing_zeros();
            rest &= rest - 1;
            let d = (self.nbr[v as usize] & cand).count_ones();
            if d > pick_deg {
                pick = v;
                pick_deg = d;
            }
        }
        let bit = 1u128 << pick;
        self.run(cand & !bit & !self.nbr[pick as usize], chosen | bit, len + 1);
        if pick_deg > 0 {
            self.run(cand & !bit, chosen, len);
        }
    }
}
