//! Narrow mod-2 elimination: derive new equations over at most three variables by
//! adding two existing ones, until nothing new appears or `0 = 1` is reached.
//!
//! Saturation is a width-ordered worklist. Only partner equations that can yield a
//! result of width at most three are enumerated, using a per-variable index and a
//! per-pair index over width-3 equations.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Clause3, Formula, XorEquation};

/// Sum of two equations, if the narrow rule allows it.
///
/// Returns `None` when the sum has more than three variables or is the trivial `0 = 0`.
pub fn add_equations(a: &XorEquation, b: &XorEquation) -> Option<XorEquation> {
    let (x, y) = (a.vars(), b.vars());
    let mut out: ArrayVec<u32, 3> = ArrayVec::new();
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let next = match (x.get(i), y.get(j)) {
            (Some(&p), Some(&q)) if p == q => {
                i += 1;
                j += 1;
                continue;
            }
            (Some(&p), Some(&q)) if p < q => {
                i += 1;
                p
            }
            (Some(&p), None) => {
                i += 1;
                p
            }
            (_, Some(&q)) => {
                j += 1;
                q
            }
            (None, None) => unreachable!(),
        };
        out.try_push(next).ok()?;
    }
    let rhs = a.rhs() ^ b.rhs();
    if out.is_empty() && !rhs {
        return None;
    }
    Some(XorEquation::from_sorted(out, rhs))
}

/// Number of distinct canonical equations over `n` variables with at most three
/// variables, plus the two constant equations.
pub fn default_equation_cap(n: u32) -> usize {
    let n = n as u128;
    let choose3 = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
    let choose2 = n * n.saturating_sub(1) / 2;
    let total = 8 * choose3 + 4 * choose2 + 2 * n + 2;
    usize::try_from(total).unwrap_or(usize::MAX)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Ge3Options {
    /// Maximum number of stored equations; `None` uses [`default_equation_cap`].
    pub equation_cap: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub left: XorEquation,
    pub right: XorEquation,
    pub result: XorEquation,
}

/// A refutation: clause axioms used, then additions in dependency order ending in `0 = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub axioms: Vec<(usize, XorEquation)>,
    pub steps: Vec<TraceStep>,
}

impl Derivation {
    /// Checks every step against `f`: operands are clause parity views or earlier
    /// results, each result is the narrow sum of its operands, and the last is `0 = 1`.
    pub fn replays(&self, f: &Formula) -> bool {
        let mut known: HashSet<XorEquation> = HashSet::new();
        for (idx, eq) in &self.axioms {
            if *idx >= f.m() || f.clause(*idx).to_xor() != *eq {
                return false;
            }
            known.insert(eq.clone());
        }
        for step in &self.steps {
            if !known.contains(&step.left) || !known.contains(&step.right) {
                return false;
            }
            if add_equations(&step.left, &step.right).as_ref() != Some(&step.result) {
                return false;
            }
            known.insert(step.result.clone());
        }
        self.steps.last().is_some_and(|s| s.result.is_contradiction())
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, eq) in &self.axioms {
            writeln!(f, "clause {}: {}", idx + 1, eq)?;
        }
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(f, "step {}: ({}) + ({}) => {}", i + 1, s.left, s.right, s.result)?;
        }
        Ok(())
    }
}

/// A class of free variables tied together by width-2 equations.
/// Each member `x` satisfies `x = representative XOR sign`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedClass {
    pub representative: u32,
    pub members: Vec<(u32, bool)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarStatus {
    Fixed(bool),
    /// Free variable: class index and sign relative to the class representative.
    Free {
        class: usize,
        sign: bool,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ge3Closure {
    n: u32,
    equations: Vec<XorEquation>,
    axiom_count: usize,
    refuted: bool,
    derivation: Option<Derivation>,
    status: Vec<Option<VarStatus>>,
    classes: Vec<SignedClass>,
}

impl Ge3Closure {
    pub fn n(&self) -> u32 {
        self.n
    }

    /// All equations reached, the distinct clause equations first.
    pub fn equations(&self) -> &[XorEquation] {
        &self.equations
    }

    pub fn axiom_count(&self) -> usize {
        self.axiom_count
    }

    pub fn derived_equations(&self) -> &[XorEquation] {
        &self.equations[self.axiom_count..]
    }

    pub fn contains(&self, eq: &XorEquation) -> bool {
        self.equations.contains(eq)
    }

    pub fn is_refuted(&self) -> bool {
        self.refuted
    }

    pub fn derivation(&self) -> Option<&Derivation> {
        self.derivation.as_ref()
    }

    /// Status of variable `x`; `None` for refuted closures or out-of-range indices.
    pub fn status(&self, x: u32) -> Option<VarStatus> {
        self.status.get(x as usize).copied().flatten()
    }

    pub fn fixed_value(&self, x: u32) -> Option<bool> {
        match self.status(x)? {
            VarStatus::Fixed(b) => Some(b),
            VarStatus::Free { .. } => None,
        }
    }

    pub fn fixed(&self) -> Vec<(u32, bool)> {
        (1..=self.n).filter_map(|x| self.fixed_value(x).map(|b| (x, b))).collect()
    }

    /// Free classes, numbered by their smallest member.
    pub fn classes(&self) -> &[SignedClass] {
        &self.classes
    }

    /// Free classes plus the single fixed class.
    pub fn class_count(&self) -> usize {
        self.classes.len() + 1
    }

    pub fn to_json(&self) -> serde_json::Value {
        let fixed: serde_json::Map<String, serde_json::Value> =
            self.fixed().into_iter().map(|(x, b)| (x.to_string(), (b as u8).into())).collect();
        let classes: Vec<serde_json::Value> = self
            .classes
            .iter()
            .map(|c| {
                serde_json::json!({
                    "representative": c.representative,
                    "members": c.members.iter().map(|&(x, s)| serde_json::json!([x, s as u8])).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "refuted": self.refuted,
            "equations": self.equations.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "derived_count": self.equations.len() - self.axiom_count,
            "fixed": fixed,
            "classes": classes,
            "trace": self.derivation,
        })
    }
}

#[derive(Clone, Copy, Debug)]
enum Origin {
    Axiom(usize),
    Sum(usize, usize),
}

#[derive(Default)]
struct Store {
    eqs: Vec<XorEquation>,
    origin: Vec<Origin>,
    ids: HashMap<XorEquation, usize>,
    // indices over processed equations only
    by_var: HashMap<u32, Vec<usize>>,
    by_pair: HashMap<(u32, u32), Vec<usize>>,
    units: Vec<usize>,
    doubles: Vec<usize>,
}

impl Store {
    fn insert(&mut self, eq: XorEquation, origin: Origin) -> Option<usize> {
        if self.ids.contains_key(&eq) {
            return None;
        }
        let id = self.eqs.len();
        self.ids.insert(eq.clone(), id);
        self.eqs.push(eq);
        self.origin.push(origin);
        Some(id)
    }

    fn index(&mut self, id: usize) {
        let vars = self.eqs[id].vars().to_vec();
        for &v in &vars {
            self.by_var.entry(v).or_default().push(id);
        }
        match vars.len() {
            1 => self.units.push(id),
            2 => self.doubles.push(id),
            3 => {
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    self.by_pair.entry((vars[a], vars[b])).or_default().push(id);
                }
            }
            _ => {}
        }
    }

    /// Processed equations whose sum with `id` can have width at most three.
    fn partners(&self, id: usize) -> Vec<usize> {
        let vars = self.eqs[id].vars();
        let width_of = |j: &usize| self.eqs[*j].width();
        let mut out: Vec<usize> = Vec::new();
        let by_var = |want: &dyn Fn(usize) -> bool, out: &mut Vec<usize>| {
            for v in vars {
                if let Some(list) = self.by_var.get(v) {
                    out.extend(list.iter().filter(|j| want(width_of(j))));
                }
            }
        };
        match vars.len() {
            3 => {
                by_var(&|w| w <= 2, &mut out);
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    if let Some(list) = self.by_pair.get(&(vars[a], vars[b])) {
                        out.extend(list);
                    }
                }
            }
            2 => {
                by_var(&|w| w >= 2, &mut out);
                out.extend(&self.units);
            }
            1 => {
                by_var(&|w| w == 3, &mut out);
                out.extend(&self.doubles);
                out.extend(&self.units);
            }
            _ => {}
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn derivation(&self, root: usize) -> Derivation {
        let mut seen = HashSet::new();
        let mut axioms = Vec::new();
        let mut steps = Vec::new();
        // iterative post-order so deep derivations do not overflow the stack
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                if let Origin::Sum(a, b) = self.origin[id] {
                    steps.push(TraceStep {
                        left: self.eqs[a].clone(),
                        right: self.eqs[b].clone(),
                        result: self.eqs[id].clone(),
                    });
                }
                continue;
            }
            if !seen.insert(id) {
                continue;
            }
            match self.origin[id] {
                Origin::Axiom(clause) => axioms.push((clause, self.eqs[id].clone())),
                Origin::Sum(a, b) => {
                    stack.push((id, true));
                    stack.push((b, false));
                    stack.push((a, false));
                }
            }
        }
        axioms.sort_by_key(|(c, _)| *c);
        Derivation { axioms, steps }
    }
}

pub fn saturate(f: &Formula) -> Result<Ge3Closure> {
    saturate_with(f, Ge3Options::default())
}

pub fn saturate_with(f: &Formula, opts: Ge3Options) -> Result<Ge3Closure> {
    let cap = opts.equation_cap.unwrap_or_else(|| default_equation_cap(f.n()));
    let mut store = Store::default();
    let mut queues: [VecDeque<usize>; 4] = Default::default();

    for (i, c) in f.clauses().iter().enumerate() {
        let eq = c.to_xor();
        if let Some(id) = store.insert(eq, Origin::Axiom(i)) {
            queues[3].push_back(id);
        }
    }
    let axiom_count = store.eqs.len();
    if axiom_count > cap {
        return Err(Error::ResourceLimit(format!("{axiom_count} clause equations exceed cap {cap}")));
    }

    let mut contradiction = None;
    'outer: while let Some(id) = queues.iter_mut().find_map(VecDeque::pop_front) {
        for other in store.partners(id) {
            let Some(sum) = add_equations(&store.eqs[other], &store.eqs[id]) else {
                continue;
            };
            let width = sum.width();
            if let Some(new_id) = store.insert(sum, Origin::Sum(other, id)) {
                if width == 0 {
                    contradiction = Some(new_id);
                    break 'outer;
                }
                if store.eqs.len() > cap {
                    return Err(Error::ResourceLimit(format!("saturation exceeded the cap of {cap} equations")));
                }
                queues[width].push_back(new_id);
            }
        }
        store.index(id);
    }

    let mut closure = Ge3Closure {
        n: f.n(),
        equations: store.eqs.clone(),
        axiom_count,
        refuted: contradiction.is_some(),
        derivation: contradiction.map(|root| store.derivation(root)),
        status: vec![None; f.n() as usize + 1],
        classes: Vec::new(),
    };
    if !closure.refuted {
        extract_classes(&mut closure)?;
    }
    Ok(closure)
}

/// Union-find over variables where each node stores its parity relative to its parent.
struct ParityUnionFind {
    parent: Vec<u32>,
    parity: Vec<bool>,
    rank: Vec<u8>,
}

impl ParityUnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), parity: vec![false; n], rank: vec![0; n] }
    }

    /// Root of `x` and the parity of `x` relative to it.
    fn find(&mut self, x: u32) -> (u32, bool) {
        let mut path = Vec::new();
        let mut cur = x;
        while self.parent[cur as usize] != cur {
            path.push(cur);
            cur = self.parent[cur as usize];
        }
        let root = cur;
        // walk back from the node nearest the root, compressing as we go
        let mut acc = false;
        for &node in path.iter().rev() {
            acc ^= self.parity[node as usize];
            self.parity[node as usize] = acc;
            self.parent[node as usize] = root;
        }
        (root, if path.is_empty() { false } else { self.parity[x as usize] })
    }

    /// Records `x XOR y = rel`; returns false if it contradicts earlier relations.
    fn union(&mut self, x: u32, y: u32, rel: bool) -> bool {
        let (rx, px) = self.find(x);
        let (ry, py) = self.find(y);
        if rx == ry {
            return px ^ py == rel;
        }
        let (big, small) = if self.rank[rx as usize] >= self.rank[ry as usize] { (rx, ry) } else { (ry, rx) };
        self.parent[small as usize] = big;
        self.parity[small as usize] = px ^ py ^ rel;
        if self.rank[big as usize] == self.rank[small as usize] {
            self.rank[big as usize] += 1;
        }
        true
    }
}

fn extract_classes(closure: &mut Ge3Closure) -> Result<()> {
    let n = closure.n as usize;
    let mut fixed: Vec<Option<bool>> = vec![None; n + 1];
    for eq in closure.equations.iter().filter(|e| e.width() == 1) {
        let x = eq.vars()[0] as usize;
        if fixed[x].is_some_and(|b| b != eq.rhs()) {
            return Err(Error::InternalInconsistency(format!("x{x} fixed to both values")));
        }
        fixed[x] = Some(eq.rhs());
    }

    let mut uf = ParityUnionFind::new(n + 1);
    for eq in closure.equations.iter().filter(|e| e.width() == 2) {
        let (x, y) = (eq.vars()[0], eq.vars()[1]);
        match (fixed[x as usize], fixed[y as usize]) {
            (Some(a), Some(b)) if a ^ b == eq.rhs() => {}
            (None, None) => {
                if !uf.union(x, y, eq.rhs()) {
                    return Err(Error::InternalInconsistency(format!("inconsistent signs for x{x}, x{y}")));
                }
            }
            _ => return Err(Error::InternalInconsistency(format!("equation {eq} links fixed and free variables"))),
        }
    }

    let mut class_of_root: HashMap<u32, usize> = HashMap::new();
    for x in 1..=n as u32 {
        if let Some(b) = fixed[x as usize] {
            closure.status[x as usize] = Some(VarStatus::Fixed(b));
            continue;
        }
        let (root, parity) = uf.find(x);
        let class = *class_of_root.entry(root).or_insert_with(|| {
            closure.classes.push(SignedClass { representative: x, members: Vec::new() });
            closure.classes.len() - 1
        });
        let rep = closure.classes[class].representative;
        let sign = parity ^ uf.find(rep).1;
        closure.classes[class].members.push((x, sign));
        closure.status[x as usize] = Some(VarStatus::Free { class, sign });
    }
    Ok(())
}

/// Whether a literal assignment of `clause` agrees with every fixed value and class
/// relation known to the closure.
pub fn is_legal(closure: &Ge3Closure, clause: &Clause3, lit_values: [bool; 3]) -> bool {
    let mut seen: [Option<(usize, bool)>; 3] = [None; 3];
    for (k, (lit, val)) in clause.lits().iter().zip(lit_values).enumerate() {
        let x = lit.var_value_for(val);
        match closure.status(lit.var()) {
            Some(VarStatus::Fixed(b)) if b != x => return false,
            Some(VarStatus::Free { class, sign }) => {
                let rep_value = x ^ sign;
                if seen[..k].iter().flatten().any(|&(c, r)| c == class && r != rep_value) {
                    return false;
                }
                seen[k] = Some((class, rep_value));
            }
            _ => {}
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::gadget_formula;

    fn eq(vars: &[u32], rhs: bool) -> XorEquation {
        XorEquation::new(vars, rhs).unwrap()
    }

    fn formula(n: u32, clauses: &[[i64; 3]]) -> Formula {
        Formula::from_dimacs_clauses(n, clauses).unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(add_equations(&eq(&[1, 2, 3], true), &eq(&[1, 2, 4], true)), Some(eq(&[3, 4], false)));
        assert_eq!(add_equations(&eq(&[1, 2, 3], true), &eq(&[1, 4, 5], true)), None);
        assert_eq!(add_equations(&eq(&[1, 2], false), &eq(&[1, 2], true)), Some(XorEquation::contradiction()));
        assert_eq!(add_equations(&eq(&[1, 2], true), &eq(&[1, 2], true)), None);
        assert_eq!(add_equations(&eq(&[1], true), &eq(&[2, 3], false)), Some(eq(&[1, 2, 3], true)));
    }

    #[test]
    fn default_cap_bounds_equation_count() {
        assert_eq!(default_equation_cap(3), 8 + 12 + 6 + 2);
        // canonical equations over 3 variables: every subset, either rhs
        let canonical: usize = 2 * (1 << 3);
        assert!(default_equation_cap(3) >= canonical);
    }

    #[test]
    fn three_equation_family_derives_nothing() {
        // x1+x2+x3=1, x1+x4+x5=1, x2+x4+x6=1
        let f = formula(6, &[[1, 2, 3], [1, 4, 5], [2, 4, 6]]);
        let c = saturate(&f).unwrap();
        assert!(!c.is_refuted());
        assert!(c.derived_equations().is_empty());
        assert_eq!(c.axiom_count(), 3);
    }

    #[test]
    fn gadget_is_refuted_with_replayable_trace() {
        let f = gadget_formula();
        let c = saturate(&f).unwrap();
        assert!(c.is_refuted());
        let d = c.derivation().unwrap();
        assert_eq!(d.steps.len(), 3);
        assert!(d.replays(&f));
    }

    #[test]
    fn fixes_and_classes() {
        let f = formula(5, &[[1, 2, 3], [1, 2, 4], [3, 4, 5]]);
        let c = saturate(&f).unwrap();
        assert!(!c.is_refuted());
        assert_eq!(c.fixed_value(5), Some(true));
        let (Some(VarStatus::Free { class: c3, sign: s3 }), Some(VarStatus::Free { class: c4, sign: s4 })) =
            (c.status(3), c.status(4))
        else {
            panic!("x3 and x4 should be free");
        };
        assert_eq!(c3, c4);
        assert_eq!(s3, s4);
        assert!(c.contains(&eq(&[3, 4], false)));
        assert!(c.contains(&eq(&[5], true)));
    }

    #[test]
    fn conflicting_duplicates_refute_in_one_step() {
        let f = formula(3, &[[1, 2, 3], [-1, 2, 3]]);
        let c = saturate(&f).unwrap();
        assert!(c.is_refuted());
        let d = c.derivation().unwrap();
        assert_eq!(d.steps.len(), 1);
        assert!(d.replays(&f));
    }

    #[test]
    fn tampered_trace_does_not_replay() {
        let f = gadget_formula();
        let mut d = saturate(&f).unwrap().derivation().unwrap().clone();
        d.steps[0].result = eq(&[3, 4], true);
        assert!(!d.replays(&f));
    }

    #[test]
    fn cap_is_enforced() {
        let f = formula(5, &[[1, 2, 3], [1, 2, 4], [3, 4, 5]]);
        let err = saturate_with(&f, Ge3Options { equation_cap: Some(3) }).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
    }

    #[test]
    fn legality() {
        let empty = saturate(&formula(3, &[[1, 2, 3]])).unwrap();
        let clause = Clause3::from_dimacs([1, 2, 3]).unwrap();
        for lv in crate::reduction::XOR_ORDER {
            assert!(is_legal(&empty, &clause, lv));
        }

        // x11 fixed to 0
        let f = formula(12, &[[1, 2, 3], [1, 2, 4], [3, 4, -11]]);
        let c = saturate(&f).unwrap();
        assert!(!c.is_refuted());
        assert_eq!(c.fixed_value(11), Some(false));
        let probe = Clause3::from_dimacs([5, 6, 11]).unwrap();
        assert!(!is_legal(&c, &probe, [false, false, true]));
        assert!(is_legal(&c, &probe, [true, false, false]));

        // x1 = ~x9 in one class: (x1, x9, x11) = (1, 1, 0) is illegal
        let f = formula(12, &[[5, 6, 1], [5, 6, -9], [2, 3, 7], [2, 3, 8], [7, 8, -11]]);
        let c = saturate(&f).unwrap();
        assert!(!c.is_refuted());
        assert!(c.contains(&eq(&[1, 9], true)));
        assert_eq!(c.fixed_value(11), Some(false));
        let probe = Clause3::from_dimacs([1, 9, 11]).unwrap();
        assert!(!is_legal(&c, &probe, [true, true, false]));
        assert!(is_legal(&c, &probe, [true, false, false]));
    }

    #[test]
    fn parity_union_find() {
        let mut uf = ParityUnionFind::new(6);
        assert!(uf.union(1, 2, true));
        assert!(uf.union(2, 3, true));
        assert!(uf.union(4, 3, false));
        assert!(!(uf.find(1).1 ^ uf.find(3).1));
        assert!(!(uf.find(1).1 ^ uf.find(4).1));
        assert!(!uf.union(1, 4, true));
        assert!(uf.union(1, 4, false));
    }
}
