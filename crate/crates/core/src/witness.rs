//! Exact vector solution of value `m` for the theta program on the xor cloud graph,
//! built from a GE3 closure that did not reach `0 = 1`.
//!
//! Coordinate 0 is the constant direction shared with `v0`; coordinate `j + 1`
//! belongs to free class `j`. Entries are stored as integers scaled by 4, so every
//! inner product is an integer scaled by 16 and verification never touches floats.

use std::fmt;

use num_traits::{FromPrimitive, Num};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::ge3::{is_legal, Ge3Closure, VarStatus};
use crate::linalg::SymMatrix;
use crate::reduction::{CloudGraph, Variant, XOR_ORDER};
use crate::{Exact, Real};

/// Scale applied to stored vector entries.
pub const SCALE: i64 = 4;

/// One clause literal after replacing its variable by class information.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    /// The literal has a forced truth value.
    Fixed(bool),
    /// The literal equals `s_class XOR sign`.
    Free { class: usize, sign: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClauseType {
    /// Three distinct free classes.
    Distinct,
    /// One fixed slot and one free class occurring twice.
    Paired,
    /// Three fixed slots.
    Fixed,
}

impl ClauseType {
    pub fn number(self) -> u8 {
        match self {
            ClauseType::Distinct => 1,
            ClauseType::Paired => 2,
            ClauseType::Fixed => 3,
        }
    }

    /// Legal odd assignments of a clause of this type.
    pub fn legal_count(self) -> usize {
        match self {
            ClauseType::Distinct => 4,
            ClauseType::Paired => 2,
            ClauseType::Fixed => 1,
        }
    }

    /// Scaled magnitude of every nonzero entry of a legal vector.
    fn magnitude(self) -> i64 {
        SCALE / self.legal_count() as i64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassClause {
    pub source: usize,
    pub slots: [Slot; 3],
    pub kind: ClauseType,
}

impl ClassClause {
    /// Distinct free classes in slot order.
    pub fn free_classes(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(3);
        for s in self.slots {
            if let Slot::Free { class, .. } = s {
                if !out.contains(&class) {
                    out.push(class);
                }
            }
        }
        out
    }
}

/// Translates every clause into class literals and assigns its type.
pub fn classify(f: &Formula, closure: &Ge3Closure) -> Result<Vec<ClassClause>> {
    if closure.is_refuted() {
        return Err(Error::InvalidInput("closure is refuted; no witness exists".into()));
    }
    f.clauses()
        .iter()
        .enumerate()
        .map(|(source, clause)| {
            let mut slots = [Slot::Fixed(false); 3];
            for (slot, lit) in slots.iter_mut().zip(clause.lits()) {
                *slot = match closure.status(lit.var()) {
                    Some(VarStatus::Fixed(b)) => Slot::Fixed(lit.value_under(b)),
                    Some(VarStatus::Free { class, sign }) => Slot::Free { class, sign: sign ^ lit.is_negated() },
                    None => return Err(Error::InvalidInput(format!("variable {} unknown to the closure", lit.var()))),
                };
            }
            let fixed = slots.iter().filter(|s| matches!(s, Slot::Fixed(_))).count();
            let mut classes: Vec<usize> = slots
                .iter()
                .filter_map(|s| if let Slot::Free { class, .. } = s { Some(*class) } else { None })
                .collect();
            classes.sort_unstable();
            classes.dedup();
            let kind = match (fixed, classes.len()) {
                (0, 3) => ClauseType::Distinct,
                (1, 1) => ClauseType::Paired,
                (3, 0) => ClauseType::Fixed,
                _ => {
                    return Err(Error::InternalInconsistency(format!(
                        "clause {} has {fixed} fixed slots and {} distinct free classes",
                        source + 1,
                        classes.len()
                    )))
                }
            };
            Ok(ClassClause { source, slots, kind })
        })
        .collect()
}

/// Sparse vector with integer entries scaled by [`SCALE`], sorted by coordinate.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseVec {
    pub entries: Vec<(u32, i64)>,
}

impl SparseVec {
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, v)| v == 0)
    }

    pub fn get(&self, coord: u32) -> i64 {
        self.entries.iter().find(|&&(c, _)| c == coord).map_or(0, |&(_, v)| v)
    }

    /// Inner product of the scaled vectors, i.e. scaled by `SCALE^2`.
    pub fn dot(&self, other: &SparseVec) -> i64 {
        let (mut i, mut j, mut acc) = (0, 0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i], other.entries[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.1 * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessVectors {
    /// One constant coordinate plus one per free class.
    pub dim: usize,
    pub v0: SparseVec,
    /// Indexed like the vertices of the xor cloud graph.
    pub vecs: Vec<SparseVec>,
}

pub fn build_vectors(f: &Formula, closure: &Ge3Closure) -> Result<WitnessVectors> {
    let classified = classify(f, closure)?;
    let dim = closure.classes().len() + 1;
    let mut vecs = Vec::with_capacity(4 * f.m());
    for cc in &classified {
        let clause = f.clause(cc.source);
        let q = cc.kind.magnitude();
        let mut legal = 0;
        for lit_values in XOR_ORDER {
            if !is_legal(closure, clause, lit_values) {
                vecs.push(SparseVec::default());
                continue;
            }
            legal += 1;
            let mut entries = vec![(0u32, q)];
            for (slot, val) in cc.slots.iter().zip(lit_values) {
                if let Slot::Free { class, sign } = *slot {
                    let coord = class as u32 + 1;
                    if entries.iter().any(|&(c, _)| c == coord) {
                        continue;
                    }
                    let rep_true = val ^ sign;
                    entries.push((coord, if rep_true { q } else { -q }));
                }
            }
            entries.sort_unstable_by_key(|&(c, _)| c);
            vecs.push(SparseVec { entries });
        }
        if legal != cc.kind.legal_count() {
            return Err(Error::InternalInconsistency(format!(
                "clause {} of type {} has {legal} legal assignments",
                cc.source + 1,
                cc.kind.number()
            )));
        }
    }
    Ok(WitnessVectors { dim, v0: SparseVec { entries: vec![(0, SCALE)] }, vecs })
}

impl WitnessVectors {
    /// `<v0, v>` summed over each cloud of four vertices.
    pub fn cloud_sums(&self) -> Vec<Exact> {
        self.vecs
            .chunks(4)
            .map(|cloud| {
                let s: i64 = cloud.iter().map(|v| v.dot(&self.v0)).sum();
                Exact::new(s, SCALE * SCALE)
            })
            .collect()
    }

    /// Gram matrix of `(v0, v_1, ..., v_N)`.
    /// Dense coordinates of vertex `idx` (or `v0` for `None`) in any scalar with
    /// exact small-integer division, e.g. `f64` or [`Exact`].
    pub fn coordinates<T: Num + FromPrimitive + Clone>(&self, idx: Option<usize>) -> Vec<T> {
        let v = idx.map_or(&self.v0, |i| &self.vecs[i]);
        let scale = T::from_i64(SCALE).expect("small integer");
        (0..self.dim as u32).map(|c| T::from_i64(v.get(c)).expect("small integer") / scale.clone()).collect()
    }

    pub fn gram_matrix<T: Real>(&self) -> SymMatrix<T> {
        let all: Vec<&SparseVec> = std::iter::once(&self.v0).chain(&self.vecs).collect();
        let scale = T::from_i64(SCALE * SCALE).expect("small integer");
        let mut g = SymMatrix::zeros(all.len());
        for i in 0..all.len() {
            for j in i..all.len() {
                let d = T::from_i64(all[i].dot(all[j])).expect("small integer") / scale;
                g.set(i, j, d);
            }
        }
        g
    }

    pub fn to_json(&self, graph: &CloudGraph) -> serde_json::Value {
        let vectors: Vec<serde_json::Value> = self
            .vecs
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let vx = graph.vertices().get(i);
                serde_json::json!({
                    "vertex": i + 1,
                    "clause_idx": vx.map(|x| x.clause_idx),
                    "lit_values": vx.map(|x| x.lit_values.map(u8::from)),
                    "entries": v.entries.iter().filter(|e| e.1 != 0).map(|&(c, x)| serde_json::json!([c, x])).collect::<Vec<_>>(),
                })
            })
            .collect();
        let objective: Exact = self.vecs.iter().map(|v| Exact::new(v.dot(&self.v0), SCALE * SCALE)).sum();
        serde_json::json!({
            "dim": self.dim,
            "denominator": SCALE,
            "v0": self.v0.entries,
            "vectors": vectors,
            "objective": objective.to_string(),
        })
    }
}

/// A violated constraint of the vector program, values as exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    UnitV0 { value: Exact },
    NormLink { vertex: usize, norm: Exact, with_v0: Exact },
    Negative { u: usize, v: usize, value: Exact },
    EdgeNotOrthogonal { u: usize, v: usize, value: Exact },
    Objective { expected: Exact, actual: Exact },
}

impl Violation {
    /// Short name of the violated constraint.
    pub fn constraint(&self) -> &'static str {
        match self {
            Violation::UnitV0 { .. } => "unit-v0",
            Violation::NormLink { .. } => "norm-equals-projection",
            Violation::Negative { .. } => "pairwise-nonnegative",
            Violation::EdgeNotOrthogonal { .. } => "edge-orthogonal",
            Violation::Objective { .. } => "objective-equals-m",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnitV0 { value } => write!(f, "unit-v0: <v0,v0> = {value}"),
            Violation::NormLink { vertex, norm, with_v0 } => {
                write!(f, "norm-equals-projection: vertex {}: <v,v> = {norm}, <v,v0> = {with_v0}", vertex + 1)
            }
            Violation::Negative { u, v, value } => {
                write!(f, "pairwise-nonnegative: <v{},v{}> = {value}", u + 1, v + 1)
            }
            Violation::EdgeNotOrthogonal { u, v, value } => {
                write!(f, "edge-orthogonal: <v{},v{}> = {value}", u + 1, v + 1)
            }
            Violation::Objective { expected, actual } => {
                write!(f, "objective-equals-m: expected {expected}, got {actual}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub objective: Exact,
    pub ok: bool,
    pub violation_count: usize,
    /// The first violations found, at most [`VerifyOptions::max_reported`].
    pub violations: Vec<Violation>,
    pub pairs_checked_directly: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Up to this many vertices every pair is checked by direct inner product.
    pub full_pair_limit: usize,
    pub max_reported: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { full_pair_limit: 2048, max_reported: 1000 }
    }
}

pub fn verify(w: &WitnessVectors, g: &CloudGraph, f: &Formula) -> Result<VerifyReport> {
    verify_with(w, g, f, VerifyOptions::default())
}

/// Checks every constraint of the program in integer arithmetic.
///
/// Above `full_pair_limit` vertices, nonnegativity is still checked for every pair:
/// pairs whose supports meet outside coordinate 0 are multiplied out, and every
/// other pair has inner product `u[0] * v[0]`, which is nonnegative for all such
/// pairs exactly when no vector has a negative coordinate 0 (vectors that do are
/// scanned against all others).
pub fn verify_with(w: &WitnessVectors, g: &CloudGraph, f: &Formula, opts: VerifyOptions) -> Result<VerifyReport> {
    if g.variant() != Variant::Xor {
        return Err(Error::InvalidInput("witness verification needs the xor cloud graph".into()));
    }
    let n = w.vecs.len();
    if n != g.vertex_count() || n != 4 * f.m() {
        return Err(Error::InvalidInput(format!(
            "witness has {n} vectors, graph has {} vertices, formula has {} clauses",
            g.vertex_count(),
            f.m()
        )));
    }
    for v in std::iter::once(&w.v0).chain(&w.vecs) {
        if let Some(&(c, _)) = v.entries.iter().find(|&&(c, _)| c as usize >= w.dim) {
            return Err(Error::InvalidInput(format!("coordinate {c} outside dimension {}", w.dim)));
        }
        if v.entries.windows(2).any(|p| p[0].0 >= p[1].0) {
            return Err(Error::InvalidInput("sparse entries must be sorted by coordinate".into()));
        }
    }

    let sq = SCALE * SCALE;
    let exact = |x: i64| Exact::new(x, sq);
    let mut violations = Vec::new();

    let unit = w.v0.dot(&w.v0);
    if unit != sq {
        violations.push(Violation::UnitV0 { value: exact(unit) });
    }
    for (i, v) in w.vecs.iter().enumerate() {
        let (norm, proj) = (v.dot(v), v.dot(&w.v0));
        if norm != proj {
            violations.push(Violation::NormLink { vertex: i, norm: exact(norm), with_v0: exact(proj) });
        }
    }

    let negatives_for = |u: usize, others: &mut dyn Iterator<Item = usize>| -> Vec<Violation> {
        others
            .filter_map(|v| {
                let d = w.vecs[u].dot(&w.vecs[v]);
                (d < 0).then(|| Violation::Negative { u: u.min(v), v: u.max(v), value: exact(d) })
            })
            .collect()
    };

    let pairs_checked = if n <= opts.full_pair_limit {
        let found: Vec<Violation> =
            (0..n).into_par_iter().flat_map_iter(|u| negatives_for(u, &mut (u + 1..n))).collect();
        violations.extend(found);
        n * n.saturating_sub(1) / 2
    } else {
        let mut by_coord: Vec<Vec<usize>> = vec![Vec::new(); w.dim];
        for (i, v) in w.vecs.iter().enumerate() {
            for &(c, x) in &v.entries {
                if c != 0 && x != 0 {
                    by_coord[c as usize].push(i);
                }
            }
        }
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for list in &by_coord {
            for (a, &u) in list.iter().enumerate() {
                pairs.extend(list[a + 1..].iter().map(|&v| (u, v)));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut checked = pairs.len();
        violations.extend(
            pairs
                .into_par_iter()
                .filter_map(|(u, v)| {
                    let d = w.vecs[u].dot(&w.vecs[v]);
                    (d < 0).then(|| Violation::Negative { u, v, value: exact(d) })
                })
                .collect::<Vec<_>>(),
        );
        let negative_lead: Vec<usize> = (0..n).filter(|&i| w.vecs[i].get(0) < 0).collect();
        for &u in &negative_lead {
            let found = negatives_for(u, &mut (0..n).filter(|&v| v != u && (v > u || w.vecs[v].get(0) >= 0)));
            checked += n - 1;
            for viol in found {
                if !violations.contains(&viol) {
                    violations.push(viol);
                }
            }
        }
        checked
    };

    for (u, v) in g.graph().edges() {
        let d = w.vecs[u].dot(&w.vecs[v]);
        if d != 0 {
            violations.push(Violation::EdgeNotOrthogonal { u, v, value: exact(d) });
        }
    }

    let objective: Exact = exact(w.vecs.iter().map(|v| v.dot(&w.v0)).sum());
    let expected = Exact::from_integer(f.m() as i64);
    if objective != expected {
        violations.push(Violation::Objective { expected, actual: objective });
    }

    let violation_count = violations.len();
    violations.truncate(opts.max_reported);
    Ok(VerifyReport {
        objective,
        ok: violation_count == 0,
        violation_count,
        violations,
        pairs_checked_directly: pairs_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ge3::saturate;
    use crate::reduction::build_graph;

    fn formula(n: u32, clauses: &[[i64; 3]]) -> Formula {
        Formula::from_dimacs_clauses(n, clauses).unwrap()
    }

    fn scaled(v: &SparseVec, dim: usize) -> Vec<i64> {
        (0..dim as u32).map(|c| v.get(c)).collect()
    }

    #[test]
    fn single_clause_type_one_vectors() {
        let f = formula(3, &[[1, 2, 3]]);
        let c = saturate(&f).unwrap();
        let w = build_vectors(&f, &c).unwrap();
        assert_eq!(w.dim, 4);
        let rows: Vec<Vec<i64>> = w.vecs.iter().map(|v| scaled(v, 4)).collect();
        assert_eq!(rows, vec![vec![1, 1, 1, 1], vec![1, -1, 1, -1], vec![1, 1, -1, -1], vec![1, -1, -1, 1]]);
        let report = verify(&w, &build_graph(&f, Variant::Xor), &f).unwrap();
        assert!(report.ok, "{:?}", report.violations);
        assert_eq!(report.objective, Exact::from_integer(1));
    }

    #[test]
    fn published_type_one_table() {
        // clause (~s1, s2, s4) with s1..s4 the classes of x1..x4, x3 unused
        let f = formula(4, &[[-1, 2, 4]]);
        let c = saturate(&f).unwrap();
        let w = build_vectors(&f, &c).unwrap();
        let row = |lv: [bool; 3]| {
            let pos = XOR_ORDER.iter().position(|&a| a == lv).unwrap();
            scaled(&w.vecs[pos], 5)
        };
        assert_eq!(row([true, true, true]), vec![1, -1, 1, 0, 1]);
        assert_eq!(row([true, false, false]), vec![1, -1, -1, 0, -1]);
        assert_eq!(row([false, true, false]), vec![1, 1, 1, 0, -1]);
        assert_eq!(row([false, false, true]), vec![1, 1, -1, 0, 1]);
    }

    #[test]
    fn type_two_and_three() {
        let f = formula(5, &[[1, 2, 3], [1, 2, 4], [3, 4, 5]]);
        let c = saturate(&f).unwrap();
        let cc = classify(&f, &c).unwrap();
        assert_eq!(cc[0].kind, ClauseType::Distinct);
        assert_eq!(cc[2].kind, ClauseType::Paired);
        let w = build_vectors(&f, &c).unwrap();
        let nonzero: Vec<&SparseVec> = w.vecs[8..12].iter().filter(|v| !v.is_zero()).collect();
        assert_eq!(nonzero.len(), 2);
        for v in &nonzero {
            assert_eq!(v.get(0), 2);
            assert_eq!(v.entries.len(), 2);
            assert_eq!(v.entries[1].1.abs(), 2);
        }
        assert!(verify(&w, &build_graph(&f, Variant::Xor), &f).unwrap().ok);

        // every variable of the last clause fixed
        let f = formula(7, &[[1, 2, 3], [1, 2, 4], [3, 4, 5], [1, 6, 3], [1, 6, 4], [3, 4, 7], [5, 7, -2]]);
        let c = saturate(&f).unwrap();
        assert!(!c.is_refuted(), "{:?}", c.derivation());
        let cc = classify(&f, &c).unwrap();
        assert_eq!(cc[6].kind, ClauseType::Fixed);
        let w = build_vectors(&f, &c).unwrap();
        let nonzero: Vec<&SparseVec> = w.vecs[24..28].iter().filter(|v| !v.is_zero()).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].entries, vec![(0, 4)]);
        assert!(verify(&w, &build_graph(&f, Variant::Xor), &f).unwrap().ok);
    }

    #[test]
    fn refuted_closure_is_rejected() {
        let f = crate::formula::gadget_formula();
        let c = saturate(&f).unwrap();
        assert!(matches!(build_vectors(&f, &c), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn corrupted_sign_is_caught() {
        let f = Formula::gen_random(60, 40, 4).unwrap();
        let c = saturate(&f).unwrap();
        assert!(!c.is_refuted());
        let mut w = build_vectors(&f, &c).unwrap();
        let g = build_graph(&f, Variant::Xor);
        assert!(verify(&w, &g, &f).unwrap().ok);
        w.vecs[0].entries[1].1 *= -1;
        let report = verify(&w, &g, &f).unwrap();
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::EdgeNotOrthogonal { .. } | Violation::Negative { .. })));
    }

    #[test]
    fn sparse_pair_mode_agrees_with_full_scan() {
        let f = Formula::gen_random(80, 60, 8).unwrap();
        let c = saturate(&f).unwrap();
        let g = build_graph(&f, Variant::Xor);
        let mut w = build_vectors(&f, &c).unwrap();
        let sparse = VerifyOptions { full_pair_limit: 0, ..Default::default() };
        assert!(verify_with(&w, &g, &f, sparse).unwrap().ok);
        // a negative lead coordinate is caught by both modes
        w.vecs[5].entries[0].1 = -1;
        let full = verify(&w, &g, &f).unwrap();
        let fast = verify_with(&w, &g, &f, sparse).unwrap();
        let negs = |r: &VerifyReport| {
            let mut v: Vec<Violation> =
                r.violations.iter().filter(|v| matches!(v, Violation::Negative { .. })).cloned().collect();
            v.sort_by_key(|x| format!("{x:?}"));
            v
        };
        assert!(!negs(&full).is_empty());
        assert_eq!(negs(&full), negs(&fast));
    }

    #[test]
    fn dimension_mismatch_is_invalid_input() {
        let f = formula(3, &[[1, 2, 3]]);
        let c = saturate(&f).unwrap();
        let mut w = build_vectors(&f, &c).unwrap();
        w.dim = 2;
        assert!(matches!(verify(&w, &build_graph(&f, Variant::Xor), &f), Err(Error::InvalidInput(_))));
        let f2 = formula(3, &[[1, 2, 3], [1, 2, -3]]);
        let w = build_vectors(&f, &c).unwrap();
        assert!(verify(&w, &build_graph(&f2, Variant::Xor), &f2).is_err());
    }

    #[test]
    fn cloud_sums_are_one() {
        let f = Formula::gen_random(20, 30, 1).unwrap();
        let c = saturate(&f).unwrap();
        if c.is_refuted() {
            return;
        }
        let w = build_vectors(&f, &c).unwrap();
        assert!(w.cloud_sums().iter().all(|s| *s == Exact::from_integer(1)));
    }

    #[test]
    fn coordinates_in_every_scalar() {
        let f = formula(3, &[[1, 2, 3]]);
        let w = build_vectors(&f, &saturate(&f).unwrap()).unwrap();
        let q = Exact::new(1, 4);
        assert_eq!(w.coordinates::<Exact>(Some(1)), vec![q, -q, q, -q]);
        assert_eq!(w.coordinates::<f32>(Some(2)), vec![0.25, 0.25, -0.25, -0.25]);
        assert_eq!(w.coordinates::<f64>(None), vec![1.0, 0.0, 0.0, 0.0]);
        let dot = |a: &[Exact], b: &[Exact]| a.iter().zip(b).map(|(x, y)| x * y).sum::<Exact>();
        let (v0, v) = (w.coordinates::<Exact>(None), w.coordinates::<Exact>(Some(3)));
        assert_eq!(dot(&v, &v), dot(&v, &v0));
        let g = w.gram_matrix::<f64>();
        assert_eq!(g.get(0, 4), 0.25);
    }
}
