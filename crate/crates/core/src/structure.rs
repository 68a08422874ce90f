//! Finite-scale checkers for the structural facts behind narrow elimination
//! failing on sparse formulas: Hall-type matchings of small subformulas, variables
//! private to one clause, minimum implying subformulas, and the four-clause pattern
//! that narrow elimination does refute.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Assignment, Clause3, Formula, Literal, XorEquation};

/// Largest variable count for the enumeration-based checks.
pub const ENUMERATION_LIMIT: u32 = 20;

/// True iff the clauses can be matched injectively to variables they contain.
pub fn hall_satisfiable(sub: &[Clause3]) -> bool {
    let mut var_ids: HashMap<u32, usize> = HashMap::new();
    let adj: Vec<Vec<usize>> = sub
        .iter()
        .map(|c| {
            c.vars()
                .iter()
                .map(|&v| {
                    let next = var_ids.len();
                    *var_ids.entry(v).or_insert(next)
                })
                .collect()
        })
        .collect();
    if sub.len() > var_ids.len() {
        return false;
    }
    let mut owner: Vec<Option<usize>> = vec![None; var_ids.len()];
    (0..sub.len()).all(|c| {
        let mut visited = vec![false; var_ids.len()];
        augment(c, &adj, &mut owner, &mut visited)
    })
}

fn augment(c: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], visited: &mut [bool]) -> bool {
    for &v in &adj[c] {
        if visited[v] {
            continue;
        }
        visited[v] = true;
        if owner[v].is_none_or(|other| augment(other, adj, owner, visited)) {
            owner[v] = Some(c);
            return true;
        }
    }
    false
}

/// Variables occurring in exactly one clause of `sub`.
pub fn special_variables(sub: &[Clause3]) -> BTreeSet<u32> {
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for c in sub {
        for v in c.vars() {
            *counts.entry(v).or_default() += 1;
        }
    }
    counts.into_iter().filter(|&(_, k)| k == 1).map(|(v, _)| v).collect()
}

/// Satisfying set of an equation over all `2^n` assignments, as a bitset.
fn satisfying_bits(eq: &XorEquation, n: u32) -> Vec<u64> {
    let total = 1usize << n;
    let mut bits = vec![0u64; total.div_ceil(64)];
    let mask: u64 = eq.vars().iter().fold(0, |acc, &v| acc | 1 << (v - 1));
    for a in 0..total as u64 {
        if ((a & mask).count_ones() % 2 == 1) == eq.rhs() {
            bits[a as usize / 64] |= 1 << (a % 64);
        }
    }
    bits
}

/// Whether some assignment satisfies every clause's parity view (by enumeration).
pub fn xor_satisfiable_by_enumeration(f: &Formula) -> Result<bool> {
    Ok(find_assignment(f, |f, a| f.is_xor_satisfied_by(a))?.is_some())
}

/// Whether some assignment satisfies the formula as CNF (by enumeration).
pub fn cnf_satisfiable_by_enumeration(f: &Formula) -> Result<bool> {
    Ok(find_assignment(f, |f, a| f.is_cnf_satisfied_by(a))?.is_some())
}

fn find_assignment(f: &Formula, ok: impl Fn(&Formula, &Assignment) -> bool) -> Result<Option<Assignment>> {
    if f.n() > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { size: f.n() as usize, limit: ENUMERATION_LIMIT as usize });
    }
    Ok((0..1u64 << f.n()).map(|mask| Assignment::from_mask(f.n(), mask)).find(|a| ok(f, a)))
}

/// Minimum number of the formula's parity equations that together imply `target`,
/// searching sub-collections of size at most `limit`.
pub fn mu(f: &Formula, target: &XorEquation, limit: usize) -> Result<Option<usize>> {
    let n = f.n();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { size: n as usize, limit: ENUMERATION_LIMIT as usize });
    }
    if target.vars().iter().any(|&v| v > n) {
        return Err(Error::InvalidInput(format!("{target} mentions variables beyond {n}")));
    }
    let words = (1usize << n).div_ceil(64);
    let tail_mask = if n >= 6 { u64::MAX } else { (1u64 << (1u32 << n)) - 1 };
    let violating: Vec<u64> = satisfying_bits(target, n)
        .iter()
        .enumerate()
        .map(|(i, w)| if i + 1 == words { !w & tail_mask } else { !w })
        .collect();
    let eqs: Vec<Vec<u64>> = f.xor_equations().iter().map(|e| satisfying_bits(e, n)).collect();

    for size in 1..=limit.min(eqs.len()) {
        let mut chosen = Vec::with_capacity(size);
        let all = vec![u64::MAX; words];
        if implies_with(&eqs, &violating, size, 0, &all, &mut chosen) {
            return Ok(Some(size));
        }
    }
    Ok(None)
}

fn implies_with(
    eqs: &[Vec<u64>],
    violating: &[u64],
    size: usize,
    start: usize,
    acc: &[u64],
    chosen: &mut Vec<usize>,
) -> bool {
    if chosen.len() == size {
        return acc.iter().zip(violating).all(|(a, v)| a & v == 0);
    }
    let remaining = size - chosen.len();
    for i in start..=eqs.len() - remaining {
        let next: Vec<u64> = acc.iter().zip(&eqs[i]).map(|(a, b)| a & b).collect();
        chosen.push(i);
        let found = implies_with(eqs, violating, size, i + 1, &next, chosen);
        chosen.pop();
        if found {
            return true;
        }
    }
    false
}

/// Four clauses `c1, c2, c3, c4` where `c1, c2` share two literals, `c3, c4` share
/// two literals, the remaining literals of `c1` and `c3` are equal, and those of
/// `c2` and `c4` are complementary. Their parity views sum to `0 = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternHit {
    pub indices: [usize; 4],
    /// Literals shared by `c1, c2` and by `c3, c4`.
    pub shared: [[Literal; 2]; 2],
    /// Third literal of `c1` (equal to that of `c3`).
    pub equal_third: Literal,
    /// Third literal of `c2` (the complement of that of `c4`).
    pub complementary_third: Literal,
}

#[derive(Clone, Copy, Debug)]
struct MatchedPair {
    a: usize,
    b: usize,
    shared: [Literal; 2],
    third_a: Literal,
    third_b: Literal,
}

fn matched_pairs(f: &Formula) -> Vec<MatchedPair> {
    let mut buckets: HashMap<[Literal; 2], Vec<(usize, Literal)>> = HashMap::new();
    for (i, c) in f.clauses().iter().enumerate() {
        let mut l = *c.lits();
        l.sort();
        for (x, y, third) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
            buckets.entry([l[x], l[y]]).or_default().push((i, l[third]));
        }
    }
    let mut keys: Vec<&[Literal; 2]> = buckets.keys().collect();
    keys.sort();
    let mut out = Vec::new();
    for key in keys {
        let bucket = &buckets[key];
        for (p, &(a, third_a)) in bucket.iter().enumerate() {
            for &(b, third_b) in &bucket[p + 1..] {
                out.push(MatchedPair { a, b, shared: *key, third_a, third_b });
            }
        }
    }
    out
}

/// Unordered clause pairs sharing at least two identical literals.
pub fn matched_pair_count(f: &Formula) -> usize {
    matched_pairs(f).iter().map(|p| (p.a, p.b)).collect::<HashSet<_>>().len()
}

/// Expected matched pairs `c^2 n / 8` for `m = c n^{3/2}` under the
/// first-two-literals convention.
pub fn matched_pair_reference(n: u32, m: usize) -> f64 {
    let n = n as f64;
    let c = m as f64 / n.powf(1.5);
    c * c * n / 8.0
}

/// All four-clause patterns, each pairing of clauses reported once.
pub fn find_pattern(f: &Formula) -> Vec<PatternHit> {
    let pairs = matched_pairs(f);
    // oriented pair (first, second) keyed by (third of first, third of second)
    let mut by_thirds: HashMap<(Literal, Literal), Vec<(usize, bool)>> = HashMap::new();
    for (id, p) in pairs.iter().enumerate() {
        by_thirds.entry((p.third_a, p.third_b)).or_default().push((id, false));
        by_thirds.entry((p.third_b, p.third_a)).or_default().push((id, true));
    }
    let orient = |p: &MatchedPair, flip: bool| {
        if flip {
            (p.b, p.a, p.third_b, p.third_a)
        } else {
            (p.a, p.b, p.third_a, p.third_b)
        }
    };

    let mut seen = HashSet::new();
    let mut hits = Vec::new();
    for (id, p) in pairs.iter().enumerate() {
        for flip in [false, true] {
            let (c1, c2, t1, t2) = orient(p, flip);
            let Some(partners) = by_thirds.get(&(t1, t2.complement())) else {
                continue;
            };
            for &(qid, qflip) in partners {
                let q = &pairs[qid];
                let (c3, c4, _, _) = orient(q, qflip);
                let idx = [c1, c2, c3, c4];
                if (0..4).any(|i| (i + 1..4).any(|j| idx[i] == idx[j])) {
                    continue;
                }
                let key = pairing_key(idx);
                if !seen.insert((key, id.min(qid), id.max(qid))) {
                    continue;
                }
                hits.push(PatternHit {
                    indices: idx,
                    shared: [p.shared, q.shared],
                    equal_third: t1,
                    complementary_third: t2,
                });
            }
        }
    }
    hits.sort_by_key(|h| (pairing_key(h.indices), h.shared));
    dedup_pairings(hits)
}

/// `{{c1, c2}, {c3, c4}}` as a sorted tuple.
fn pairing_key(idx: [usize; 4]) -> [usize; 4] {
    let p = [idx[0].min(idx[1]), idx[0].max(idx[1])];
    let q = [idx[2].min(idx[3]), idx[2].max(idx[3])];
    let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
    [lo[0], lo[1], hi[0], hi[1]]
}

fn dedup_pairings(hits: Vec<PatternHit>) -> Vec<PatternHit> {
    let mut seen = HashSet::new();
    hits.into_iter().filter(|h| seen.insert(pairing_key(h.indices))).collect()
}

/// Subformula size below which random subformulas are expected to be matchable:
/// `max(2, ceil(ln n / (4 ln ln n)))`.
pub fn small_subformula_size(n: u32) -> usize {
    let ln = (n.max(3) as f64).ln();
    let k = (ln / (4.0 * ln.ln().max(f64::MIN_POSITIVE))).ceil();
    (k.max(2.0)) as usize
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleReport {
    pub check: String,
    pub subformula_sizes: (usize, usize),
    pub samples: usize,
    pub violations: usize,
}

fn sample_subformulas(f: &Formula, sizes: (usize, usize), samples: usize, seed: u64) -> Vec<Vec<Clause3>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (sizes.0.min(f.m()), sizes.1.min(f.m()));
    if f.m() == 0 || lo == 0 {
        return Vec::new();
    }
    (0..samples)
        .map(|_| {
            let size = rand::Rng::gen_range(&mut rng, lo..=hi.max(lo));
            index::sample(&mut rng, f.m(), size).iter().map(|i| *f.clause(i)).collect()
        })
        .collect()
}

/// Samples subformulas of size `k` and counts those without a clause-to-variable matching.
pub fn hall_report(f: &Formula, k: usize, samples: usize, seed: u64) -> SampleReport {
    let subs = sample_subformulas(f, (k, k), samples, seed);
    SampleReport {
        check: "hall-matching".into(),
        subformula_sizes: (k, k),
        samples: subs.len(),
        violations: subs.iter().filter(|s| !hall_satisfiable(s)).count(),
    }
}

/// Samples subformulas with sizes in `[ceil(k/3), floor(2k/3)]` and counts those
/// with fewer than four special variables.
pub fn special_variable_report(f: &Formula, k: usize, samples: usize, seed: u64) -> SampleReport {
    let lo = k.div_ceil(3).max(1);
    let hi = (2 * k / 3).max(lo);
    let subs = sample_subformulas(f, (lo, hi), samples, seed);
    SampleReport {
        check: "special-variables".into(),
        subformula_sizes: (lo, hi),
        samples: subs.len(),
        violations: subs.iter().filter(|s| special_variables(s).len() < 4).count(),
    }
}
