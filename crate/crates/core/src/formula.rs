//! 3CNF formulas, their parity (3XOR) views, random generation and DIMACS I/O.

use std::fmt;
use std::fmt::Write as _;

use arrayvec::ArrayVec;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A literal over a 1-based variable index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    var: u32,
    negated: bool,
}

impl Literal {
    pub fn new(var: u32, negated: bool) -> Result<Self> {
        if var == 0 {
            return Err(Error::InvalidParameters("variable index must be >= 1".into()));
        }
        Ok(Self { var, negated })
    }

    pub fn pos(var: u32) -> Self {
        assert!(var >= 1, "variable index must be >= 1");
        Self { var, negated: false }
    }

    pub fn neg(var: u32) -> Self {
        assert!(var >= 1, "variable index must be >= 1");
        Self { var, negated: true }
    }

    /// Signed DIMACS encoding; `0` is rejected.
    pub fn from_dimacs(code: i64) -> Result<Self> {
        let var = u32::try_from(code.unsigned_abs())
            .map_err(|_| Error::InvalidParameters(format!("literal {code} out of range")))?;
        Self::new(var, code < 0)
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }

    pub fn var(self) -> u32 {
        self.var
    }

    pub fn is_negated(self) -> bool {
        self.negated
    }

    pub fn complement(self) -> Self {
        Self { var: self.var, negated: !self.negated }
    }

    /// Truth value of the literal when its variable takes `value`.
    pub fn value_under(self, value: bool) -> bool {
        value ^ self.negated
    }

    /// Variable value that makes the literal evaluate to `lit_value`.
    pub fn var_value_for(self, lit_value: bool) -> bool {
        lit_value ^ self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "~x{}", self.var)
        } else {
            write!(f, "x{}", self.var)
        }
    }
}

/// A clause of exactly three literals over pairwise distinct variables.
///
/// Literal order is kept as given; [`Clause3::canonical`] sorts by variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[Literal; 3]", into = "[Literal; 3]")]
pub struct Clause3 {
    lits: [Literal; 3],
}

impl Clause3 {
    pub fn new(lits: [Literal; 3]) -> Result<Self> {
        let [a, b, c] = lits.map(Literal::var);
        if a == 0 || b == 0 || c == 0 {
            return Err(Error::InvalidParameters("variable index must be >= 1".into()));
        }
        if a == b || a == c || b == c {
            let var = if a == b || a == c { a } else { b };
            return Err(Error::DuplicateVariable { line: 0, var });
        }
        Ok(Self { lits })
    }

    /// Builds a clause from signed DIMACS literals, e.g. `[1, -2, 4]`.
    pub fn from_dimacs(codes: [i64; 3]) -> Result<Self> {
        let mut lits = [Literal::pos(1); 3];
        for (slot, code) in lits.iter_mut().zip(codes) {
            *slot = Literal::from_dimacs(code)?;
        }
        Self::new(lits)
    }

    pub fn lits(&self) -> &[Literal; 3] {
        &self.lits
    }

    pub fn vars(&self) -> [u32; 3] {
        self.lits.map(Literal::var)
    }

    pub fn max_var(&self) -> u32 {
        self.vars().into_iter().max().unwrap_or(0)
    }

    /// Position of `var` within the clause, if it occurs.
    pub fn position_of(&self, var: u32) -> Option<usize> {
        self.lits.iter().position(|l| l.var == var)
    }

    /// Same clause with literals sorted by variable index.
    pub fn canonical(&self) -> Self {
        let mut lits = self.lits;
        lits.sort();
        Self { lits }
    }

    /// Parity view: satisfied exactly by assignments making an odd number of literals true.
    pub fn to_xor(&self) -> XorEquation {
        let negations = self.lits.iter().filter(|l| l.negated).count();
        let rhs = negations % 2 == 0;
        let mut vars: ArrayVec<u32, 3> = self.vars().into_iter().collect();
        vars.sort_unstable();
        XorEquation { vars, rhs }
    }

    /// Literal truth values under `a`, in clause order.
    pub fn lit_values(&self, a: &Assignment) -> [bool; 3] {
        self.lits.map(|l| l.value_under(a.get(l.var)))
    }

    pub fn eval_odd(&self, a: &Assignment) -> bool {
        self.lit_values(a).into_iter().filter(|&b| b).count() % 2 == 1
    }

    pub fn eval_cnf(&self, a: &Assignment) -> bool {
        self.lit_values(a).into_iter().any(|b| b)
    }
}

impl TryFrom<[Literal; 3]> for Clause3 {
    type Error = Error;

    fn try_from(lits: [Literal; 3]) -> Result<Self> {
        Self::new(lits)
    }
}

impl From<Clause3> for [Literal; 3] {
    fn from(c: Clause3) -> Self {
        c.lits
    }
}

impl fmt::Display for Clause3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.lits;
        write!(f, "({a}, {b}, {c})")
    }
}

/// A parity constraint over at most three variables: `sum(vars) = rhs (mod 2)`.
///
/// Variables are kept sorted and distinct, so structural equality is semantic equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct XorEquation {
    vars: ArrayVec<u32, 3>,
    rhs: bool,
}

impl XorEquation {
    /// Canonicalises `vars`: sorts them and cancels repeated variables in pairs.
    /// Fails when more than three variables survive.
    pub fn new(vars: &[u32], rhs: bool) -> Result<Self> {
        let mut sorted = vars.to_vec();
        sorted.sort_unstable();
        let mut kept: Vec<u32> = Vec::with_capacity(sorted.len());
        for v in sorted {
            if v == 0 {
                return Err(Error::InvalidParameters("variable index must be >= 1".into()));
            }
            if kept.last() == Some(&v) {
                kept.pop();
            } else {
                kept.push(v);
            }
        }
        let vars = ArrayVec::try_from(kept.as_slice()).map_err(|_| {
            Error::InvalidParameters(format!("equation has {} variables, at most 3 allowed", kept.len()))
        })?;
        Ok(Self { vars, rhs })
    }

    /// `0 = 1`.
    pub fn contradiction() -> Self {
        Self { vars: ArrayVec::new(), rhs: true }
    }

    /// Caller guarantees `vars` is sorted, distinct and non-zero.
    pub(crate) fn from_sorted(vars: ArrayVec<u32, 3>, rhs: bool) -> Self {
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));
        Self { vars, rhs }
    }

    pub fn vars(&self) -> &[u32] {
        &self.vars
    }

    pub fn rhs(&self) -> bool {
        self.rhs
    }

    pub fn width(&self) -> usize {
        self.vars.len()
    }

    pub fn is_contradiction(&self) -> bool {
        self.vars.is_empty() && self.rhs
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.vars.iter().fold(false, |acc, &v| acc ^ a.get(v)) == self.rhs
    }
}

impl fmt::Display for XorEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.vars.is_empty() {
            return write!(f, "0 = {}", self.rhs as u8);
        }
        let lhs: Vec<String> = self.vars.iter().map(|v| format!("x{v}")).collect();
        write!(f, "{} = {}", lhs.join(" + "), self.rhs as u8)
    }
}

/// Truth assignment indexed by variable `1..=n`; slot 0 is unused.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn all_false(n: u32) -> Self {
        Self { bits: vec![false; n as usize + 1] }
    }

    /// Low `n` bits of `mask`: bit `i - 1` holds variable `i`.
    pub fn from_mask(n: u32, mask: u64) -> Self {
        let mut bits = vec![false; n as usize + 1];
        for (i, b) in bits.iter_mut().enumerate().skip(1) {
            *b = (mask >> (i - 1)) & 1 == 1;
        }
        Self { bits }
    }

    pub fn n(&self) -> u32 {
        (self.bits.len() - 1) as u32
    }

    pub fn get(&self, var: u32) -> bool {
        self.bits[var as usize]
    }

    pub fn set(&mut self, var: u32, value: bool) {
        self.bits[var as usize] = value;
    }
}

/// A 3CNF formula over variables `1..=n`. Duplicate clauses are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    n: u32,
    clauses: Vec<Clause3>,
}

impl Formula {
    pub fn new(n: u32, clauses: Vec<Clause3>) -> Result<Self> {
        for (i, c) in clauses.iter().enumerate() {
            let var = c.max_var();
            if var > n {
                return Err(Error::OutOfRange { line: i + 1, var, n });
            }
        }
        Ok(Self { n, clauses })
    }

    /// Builds a formula from signed DIMACS triples.
    pub fn from_dimacs_clauses(n: u32, clauses: &[[i64; 3]]) -> Result<Self> {
        let clauses = clauses.iter().map(|&c| Clause3::from_dimacs(c)).collect::<Result<_>>()?;
        Self::new(n, clauses)
    }

    /// `m` clauses drawn independently: three distinct variables uniformly without
    /// replacement and three independent fair polarity bits.
    pub fn gen_random(n: u32, m: usize, seed: u64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameters(format!("need n >= 3 variables, got {n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clauses = (0..m)
            .map(|_| {
                let picked = index::sample(&mut rng, n as usize, 3);
                let mut lits = [Literal::pos(1); 3];
                for (slot, v) in lits.iter_mut().zip(picked.iter()) {
                    *slot = Literal { var: v as u32 + 1, negated: rng.gen() };
                }
                Clause3 { lits }
            })
            .collect();
        Ok(Self { n, clauses })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause3] {
        &self.clauses
    }

    pub fn clause(&self, idx: usize) -> &Clause3 {
        &self.clauses[idx]
    }

    /// Appends a clause, growing `n` if needed.
    pub fn push(&mut self, clause: Clause3) {
        self.n = self.n.max(clause.max_var());
        self.clauses.push(clause);
    }

    pub fn xor_equations(&self) -> Vec<XorEquation> {
        self.clauses.iter().map(Clause3::to_xor).collect()
    }

    /// Sub-formula made of the clauses at `indices` (same `n`).
    pub fn subformula(&self, indices: &[usize]) -> Self {
        Self { n: self.n, clauses: indices.iter().map(|&i| self.clauses[i]).collect() }
    }

    pub fn is_cnf_satisfied_by(&self, a: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.eval_cnf(a))
    }

    pub fn is_xor_satisfied_by(&self, a: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.eval_odd(a))
    }

    /// Parses DIMACS CNF text. Every clause must have exactly three literals on
    /// distinct variables and the clause count must match the header.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(u32, usize)> = None;
        let mut clauses = Vec::new();
        let mut pending: Vec<(i64, usize)> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('%') {
                break;
            }
            if line.starts_with('p') {
                if header.is_some() {
                    return Err(Error::Parse { line: line_no, msg: "duplicate header".into() });
                }
                header = Some(parse_header(line, line_no)?);
                continue;
            }
            let Some((n, _)) = header else {
                return Err(Error::Parse { line: line_no, msg: "clause before 'p cnf' header".into() });
            };
            for tok in line.split_whitespace() {
                let code: i64 =
                    tok.parse().map_err(|_| Error::Parse { line: line_no, msg: format!("invalid literal '{tok}'") })?;
                if code != 0 {
                    pending.push((code, line_no));
                    continue;
                }
                clauses.push(finish_clause(&pending, n, line_no)?);
                pending.clear();
            }
        }

        let Some((n, m)) = header else {
            return Err(Error::Parse { line: 0, msg: "missing 'p cnf' header".into() });
        };
        if let Some(&(_, line)) = pending.last() {
            // A trailing clause without its terminating 0 is still accepted.
            clauses.push(finish_clause(&pending, n, line)?);
        }
        if clauses.len() != m {
            return Err(Error::Parse { line: 0, msg: format!("header declares {m} clauses, found {}", clauses.len()) });
        }
        Ok(Self { n, clauses })
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.n, self.clauses.len());
        for c in &self.clauses {
            let [a, b, d] = c.lits.map(Literal::to_dimacs);
            let _ = writeln!(out, "{a} {b} {d} 0");
        }
        out
    }
}

fn parse_header(line: &str, line_no: usize) -> Result<(u32, usize)> {
    let bad = |msg: &str| Error::Parse { line: line_no, msg: msg.to_string() };
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 4 || toks[0] != "p" || toks[1] != "cnf" {
        return Err(bad("expected header 'p cnf <n> <m>'"));
    }
    let n = toks[2].parse().map_err(|_| bad("invalid variable count"))?;
    let m = toks[3].parse().map_err(|_| bad("invalid clause count"))?;
    Ok((n, m))
}

fn finish_clause(pending: &[(i64, usize)], n: u32, line: usize) -> Result<Clause3> {
    if pending.len() != 3 {
        return Err(Error::NotThreeCnf { line, len: pending.len() });
    }
    let mut lits = [Literal::pos(1); 3];
    for (slot, &(code, l)) in lits.iter_mut().zip(pending) {
        let lit = Literal::from_dimacs(code).map_err(|e| Error::Parse { line: l, msg: e.to_string() })?;
        if lit.var > n {
            return Err(Error::OutOfRange { line: l, var: lit.var, n });
        }
        *slot = lit;
    }
    Clause3::new(lits).map_err(|e| match e {
        Error::DuplicateVariable { var, .. } => Error::DuplicateVariable { line, var },
        other => other,
    })
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dimacs())
    }
}

/// The four-clause pattern `(x1,x2,x3) (x1,x2,x4) (x5,x6,x3) (x5,x6,~x4)` whose
/// parity views sum to `0 = 1`.
pub fn gadget_formula() -> Formula {
    Formula::from_dimacs_clauses(6, &[[1, 2, 3], [1, 2, 4], [5, 6, 3], [5, 6, -4]])
        .expect("gadget clauses are well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clause(codes: [i64; 3]) -> Clause3 {
        Clause3::from_dimacs(codes).unwrap()
    }

    #[test]
    fn gen_random_rejects_small_n() {
        assert!(matches!(Formula::gen_random(2, 5, 0), Err(Error::InvalidParameters(_))));
    }

    #[test]
    fn gen_random_n3_uses_all_three_vars() {
        for seed in 0..20 {
            let f = Formula::gen_random(3, 1, seed).unwrap();
            let mut vars = f.clause(0).vars();
            vars.sort();
            assert_eq!(vars, [1, 2, 3]);
        }
    }

    #[test]
    fn gen_random_empty() {
        let f = Formula::gen_random(100, 0, 7).unwrap();
        assert_eq!(f.m(), 0);
        assert_eq!(f.n(), 100);
    }

    #[test]
    fn gen_random_polarity_is_fair() {
        let f = Formula::gen_random(50, 10_000, 42).unwrap();
        let total = 30_000.0;
        let negated = f.clauses().iter().flat_map(|c| c.lits()).filter(|l| l.is_negated()).count() as f64;
        let sigma = (total * 0.25f64).sqrt();
        assert!((negated - total / 2.0).abs() < 3.0 * sigma, "negated = {negated}");
    }

    #[test]
    fn gen_random_is_deterministic() {
        let a = Formula::gen_random(40, 100, 9).unwrap();
        let b = Formula::gen_random(40, 100, 9).unwrap();
        let c = Formula::gen_random(40, 100, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn parse_simple() {
        let f = Formula::parse_dimacs("p cnf 3 1\n1 2 3 0\n").unwrap();
        assert_eq!(f.n(), 3);
        assert_eq!(f.clauses(), &[clause([1, 2, 3])]);
    }

    #[test]
    fn parse_sign_convention() {
        let f = Formula::parse_dimacs("p cnf 4 1\n1 -2 4 0\n").unwrap();
        let lits = f.clause(0).lits();
        assert_eq!(lits, &[Literal::pos(1), Literal::neg(2), Literal::pos(4)]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            Formula::parse_dimacs("p cnf 3 1\n1 1 2 0\n"),
            Err(Error::DuplicateVariable { var: 1, line: 2 })
        ));
        assert!(matches!(Formula::parse_dimacs("p cnf 3 1\n1 2 0\n"), Err(Error::NotThreeCnf { len: 2, .. })));
        assert!(matches!(Formula::parse_dimacs("p cnf 3 1\n1 2 5 0\n"), Err(Error::OutOfRange { var: 5, n: 3, .. })));
        assert!(matches!(Formula::parse_dimacs("p dnf 3 1\n1 2 3 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(Formula::parse_dimacs("1 2 3 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(Formula::parse_dimacs("p cnf 3 2\n1 2 3 0\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn parse_comments_and_multiline_clauses() {
        let text = "c hello\np cnf 5 2\n1 -2\n 3 0 -4 5\n1 0\n%\n0\n";
        let f = Formula::parse_dimacs(text).unwrap();
        assert_eq!(f.clauses(), &[clause([1, -2, 3]), clause([-4, 5, 1])]);
    }

    #[test]
    fn to_xor_examples() {
        assert_eq!(clause([1, 2, 3]).to_xor(), XorEquation::new(&[1, 2, 3], true).unwrap());
        assert_eq!(clause([5, 6, -4]).to_xor(), XorEquation::new(&[4, 5, 6], false).unwrap());
        assert_eq!(clause([-1, -2, -3]).to_xor(), XorEquation::new(&[1, 2, 3], false).unwrap());
    }

    #[test]
    fn eval_odd_examples() {
        let c = clause([1, 2, 3]);
        let mut a = Assignment::all_false(3);
        a.set(1, true);
        assert!(c.eval_odd(&a));
        a.set(2, true);
        assert!(!c.eval_odd(&a));
    }

    #[test]
    fn odd_and_cnf_counts_over_all_sign_patterns() {
        for signs in 0..8u8 {
            let codes = [1, 2, 3].map(|v: i64| if signs >> (v - 1) & 1 == 1 { -v } else { v });
            let c = clause(codes);
            let xor = c.to_xor();
            let (mut odd, mut cnf) = (0, 0);
            for mask in 0..8 {
                let a = Assignment::from_mask(3, mask);
                let o = c.eval_odd(&a);
                assert_eq!(o, xor.is_satisfied_by(&a));
                if o {
                    odd += 1;
                    assert!(c.eval_cnf(&a));
                }
                cnf += c.eval_cnf(&a) as u32;
            }
            assert_eq!((odd, cnf), (4, 7));
        }
    }

    #[test]
    fn xor_equation_canonicalises() {
        let e = XorEquation::new(&[3, 1, 2], true).unwrap();
        assert_eq!(e.vars(), &[1, 2, 3]);
        let e = XorEquation::new(&[3, 1, 3], false).unwrap();
        assert_eq!(e.vars(), &[1]);
        assert!(XorEquation::new(&[1, 2, 3, 4], false).is_err());
        assert!(XorEquation::contradiction().is_contradiction());
    }

    #[test]
    fn gadget_parities_sum_to_contradiction() {
        let eqs = gadget_formula().xor_equations();
        let rhs = eqs.iter().fold(false, |acc, e| acc ^ e.rhs());
        assert!(rhs);
        let all: Vec<u32> = eqs.iter().flat_map(|e| e.vars().to_vec()).collect();
        assert_eq!(XorEquation::new(&all, rhs).unwrap(), XorEquation::contradiction());
    }

    #[test]
    fn clause_rejects_duplicates() {
        assert!(Clause3::from_dimacs([1, -1, 2]).is_err());
        assert!(Clause3::from_dimacs([0, 1, 2]).is_err());
    }
}
