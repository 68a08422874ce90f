use std::fs;
use std::path::PathBuf;

use elusion::ge3::{saturate_with, Derivation, Ge3Options};
use elusion::structure::{
    cnf_satisfiable_by_enumeration, find_pattern, matched_pair_count, matched_pair_reference,
    xor_satisfiable_by_enumeration, PatternHit,
};
use elusion::theta::{clique_cover_upper_bound, solve_theta, ThetaOptions};
use elusion::witness::{build_vectors, verify, VerifyReport};
use elusion::{build_graph, saturate, Formula, Ge3Closure, Literal, Variant};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{ClauseCount, Cli, Command, Format, SolverArgs, Source};
use crate::error::Failure;
use crate::report::{write_to, Report};

/// A report plus a failure to raise after the report is written.
struct Outcome {
    report: Report,
    failure: Option<Failure>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome { report, failure: None }
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let format = cli.format;
    let outcome = match &cli.command {
        Command::Gen(src) => gen(&load(src, cli.seed)?, format).into(),
        Command::Reduce { source, variant, vertex_map } => {
            reduce(&load(source, cli.seed)?, (*variant).into(), vertex_map.as_ref(), format)?.into()
        }
        Command::Ge3 { source, cap } => ge3(&load(source, cli.seed)?, *cap, format)?.into(),
        Command::Witness { source, vectors } => witness(&load(source, cli.seed)?, *vectors, format)?,
        Command::Theta { source, variant, solver } => {
            theta(&load(source, cli.seed)?, (*variant).into(), solver, format)?.into()
        }
        Command::Pattern(src) => pattern(&load(src, cli.seed)?, format).into(),
        Command::Pipeline { source, theta, audit, solver } => {
            pipeline(&load(source, cli.seed)?, *theta, *audit, solver, format)?
        }
        Command::Scan { n, m, seeds, theta, solver } => scan(n, m, cli.seed, *seeds, *theta, solver, format)?.into(),
    };
    write_to(cli.out.as_deref(), &outcome.report.render()?)?;
    outcome.failure.map_or(Ok(()), Err)
}

fn load(src: &Source, seed: u64) -> Result<Formula, Failure> {
    match (&src.input, src.n, src.m) {
        (Some(path), _, _) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            Ok(Formula::parse_dimacs(&text)?)
        }
        (None, Some(n), Some(m)) => Ok(Formula::gen_random(n, m.resolve(n), seed)?),
        _ => Err(Failure::Usage("give --input FILE, or both --n and --m".into())),
    }
}

fn dimacs_clauses(f: &Formula) -> Vec<[i64; 3]> {
    f.clauses().iter().map(|c| c.lits().map(Literal::to_dimacs)).collect()
}

fn gen(f: &Formula, format: Option<Format>) -> Report {
    match format {
        None => Report::Text(f.to_dimacs()),
        Some(Format::Json) => Report::Json(json!({ "n": f.n(), "m": f.m(), "clauses": dimacs_clauses(f) })),
        Some(Format::Csv) => Report::Table {
            header: vec!["lit1", "lit2", "lit3"],
            rows: dimacs_clauses(f).iter().map(|c| c.iter().map(i64::to_string).collect()).collect(),
        },
    }
}

fn reduce(
    f: &Formula,
    variant: Variant,
    vertex_map: Option<&PathBuf>,
    format: Option<Format>,
) -> Result<Report, Failure> {
    let g = build_graph(f, variant);
    if let Some(path) = vertex_map {
        let text = serde_json::to_string_pretty(&g.vertex_map_json()).expect("JSON values serialize");
        write_to(Some(path), &(text + "\n"))?;
    }
    let edges: Vec<[usize; 2]> = g.graph().edges().into_iter().map(|(u, v)| [u + 1, v + 1]).collect();
    Ok(match format {
        None => Report::Text(g.graph().to_dimacs()),
        Some(Format::Json) => Report::Json(json!({
            "variant": variant,
            "clauses": f.m(),
            "vertices": g.vertex_count(),
            "edge_count": edges.len(),
            "edges": edges,
            "vertex_map": g.vertex_map_json()["vertices"],
        })),
        Some(Format::Csv) => Report::Table {
            header: vec!["u", "v"],
            rows: edges.iter().map(|e| vec![e[0].to_string(), e[1].to_string()]).collect(),
        },
    })
}

fn trace_lines(d: &Derivation) -> Vec<String> {
    d.to_string().lines().map(str::to_owned).collect()
}

fn ge3_summary(c: &Ge3Closure) -> Value {
    json!({
        "refuted": c.is_refuted(),
        "equations": c.equations().len(),
        "derived": c.derived_equations().len(),
        "fixed": c.fixed().len(),
        "classes": c.classes().len(),
        "trace_steps": c.derivation().map_or(0, |d| d.steps.len()),
    })
}

fn ge3(f: &Formula, cap: Option<usize>, format: Option<Format>) -> Result<Report, Failure> {
    let c = saturate_with(f, Ge3Options { equation_cap: cap })?;
    Ok(match format {
        Some(Format::Csv) => {
            let s = ge3_summary(&c);
            Report::Table {
                header: vec!["n", "m", "refuted", "equations", "derived", "fixed", "classes", "trace_steps"],
                rows: vec![[
                    json!(f.n()),
                    json!(f.m()),
                    s["refuted"].clone(),
                    s["equations"].clone(),
                    s["derived"].clone(),
                    s["fixed"].clone(),
                    s["classes"].clone(),
                    s["trace_steps"].clone(),
                ]
                .iter()
                .map(Value::to_string)
                .collect()],
            }
        }
        _ => {
            let mut v = c.to_json();
            v["n"] = json!(f.n());
            v["m"] = json!(f.m());
            v["trace_lines"] = json!(c.derivation().map(trace_lines));
            Report::Json(v)
        }
    })
}

fn verify_json(r: &VerifyReport) -> Value {
    json!({
        "verified": r.ok,
        "objective": r.objective.to_string(),
        "violation_count": r.violation_count,
        "violations": r.violations.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "pairs_checked_directly": r.pairs_checked_directly,
    })
}

fn witness(f: &Formula, with_vectors: bool, format: Option<Format>) -> Result<Outcome, Failure> {
    let c = saturate(f)?;
    let (body, verified, failure) = if c.is_refuted() {
        let body = json!({
            "refuted": true,
            "reason": "GE3 derives 0 = 1, so no witness exists",
            "trace_lines": c.derivation().map(trace_lines),
        });
        (body, None, None)
    } else {
        let w = build_vectors(f, &c)?;
        let g = build_graph(f, Variant::Xor);
        let r = verify(&w, &g, f)?;
        let mut body = verify_json(&r);
        body["refuted"] = json!(false);
        body["dim"] = json!(w.dim);
        if with_vectors {
            body["vectors"] = w.to_json(&g);
        }
        let failure =
            (!r.ok).then(|| Failure::Internal(format!("witness for an unrefuted formula failed: {}", r.violations[0])));
        (body, Some(r), failure)
    };
    let report = match format {
        Some(Format::Csv) => Report::Table {
            header: vec!["n", "m", "refuted", "verified", "objective", "violations"],
            rows: vec![vec![
                f.n().to_string(),
                f.m().to_string(),
                c.is_refuted().to_string(),
                verified.as_ref().map_or(String::new(), |r| r.ok.to_string()),
                verified.as_ref().map_or(String::new(), |r| r.objective.to_string()),
                verified.as_ref().map_or(String::new(), |r| r.violation_count.to_string()),
            ]],
        },
        _ => {
            let mut body = body;
            body["n"] = json!(f.n());
            body["m"] = json!(f.m());
            Report::Json(body)
        }
    };
    Ok(Outcome { report, failure })
}

fn theta_options(s: &SolverArgs) -> Result<ThetaOptions<f64>, Failure> {
    if !(s.tol > 0.0 && s.tol.is_finite()) || s.max_iter == 0 {
        return Err(Failure::Usage("--tol must be positive and --max-iter at least 1".into()));
    }
    Ok(ThetaOptions { tol: s.tol, max_iter: s.max_iter, dense_limit: s.dense_limit, ..Default::default() })
}

fn theta(f: &Formula, variant: Variant, solver: &SolverArgs, format: Option<Format>) -> Result<Report, Failure> {
    let opts = theta_options(solver)?;
    let g = build_graph(f, variant);
    let sol = solve_theta(g.graph(), &opts)?;
    let bound = clique_cover_upper_bound(&g);
    Ok(match format {
        Some(Format::Csv) => Report::Table {
            header: vec![
                "variant",
                "m",
                "vertices",
                "value",
                "max_residual",
                "iterations",
                "converged",
                "clique_cover_bound",
            ],
            rows: vec![vec![
                format!("{variant:?}").to_lowercase(),
                f.m().to_string(),
                g.vertex_count().to_string(),
                format!("{:.8}", sol.value),
                format!("{:.3e}", sol.residuals.max()),
                sol.iterations.to_string(),
                sol.converged.to_string(),
                bound.to_string(),
            ]],
        },
        _ => {
            let mut v = sol.to_json();
            v["variant"] = json!(variant);
            v["m"] = json!(f.m());
            v["vertices"] = json!(g.vertex_count());
            v["clique_cover_bound"] = json!(bound);
            Report::Json(v)
        }
    })
}

fn hit_json(h: &PatternHit) -> Value {
    json!({
        "clauses": h.indices.map(|i| i + 1),
        "shared": h.shared.map(|p| p.map(Literal::to_dimacs)),
        "equal_third": h.equal_third.to_dimacs(),
        "complementary_third": h.complementary_third.to_dimacs(),
    })
}

fn pattern(f: &Formula, format: Option<Format>) -> Report {
    let hits = find_pattern(f);
    match format {
        Some(Format::Csv) => Report::Table {
            header: vec!["c1", "c2", "c3", "c4", "shared12", "shared34", "equal_third", "complementary_third"],
            rows: hits
                .iter()
                .map(|h| {
                    let pair = |p: [Literal; 2]| format!("{} {}", p[0].to_dimacs(), p[1].to_dimacs());
                    let mut row: Vec<String> = h.indices.iter().map(|i| (i + 1).to_string()).collect();
                    row.extend([pair(h.shared[0]), pair(h.shared[1])]);
                    row.extend([h.equal_third.to_dimacs().to_string(), h.complementary_third.to_dimacs().to_string()]);
                    row
                })
                .collect(),
        },
        _ => Report::Json(json!({
            "n": f.n(),
            "m": f.m(),
            "matched_pairs": matched_pair_count(f),
            "matched_pair_reference": matched_pair_reference(f.n(), f.m()),
            "hit_count": hits.len(),
            "hits": hits.iter().map(hit_json).collect::<Vec<_>>(),
        })),
    }
}

#[derive(Debug)]
struct ThetaRun {
    value: f64,
    max_residual: f64,
    iterations: usize,
    converged: bool,
}

/// GE3 and, when it does not refute, the verified witness and optionally theta.
#[derive(Debug)]
struct Analysis {
    closure: Ge3Closure,
    witness: Option<VerifyReport>,
    theta: Result<ThetaRun, String>,
}

impl Analysis {
    fn witness_ok(&self) -> bool {
        self.witness.as_ref().is_some_and(|r| r.ok)
    }

    fn verdict(&self, m: usize) -> String {
        if self.closure.is_refuted() {
            "unsatisfiable".into()
        } else if self.witness_ok() {
            format!("SDP value = {m} (elusion certified)")
        } else {
            "witness failed verification".into()
        }
    }
}

fn analyze(f: &Formula, theta: Option<&ThetaOptions<f64>>) -> Result<Analysis, Failure> {
    let closure = saturate(f)?;
    let witness = if closure.is_refuted() {
        None
    } else {
        let w = build_vectors(f, &closure)?;
        Some(verify(&w, &build_graph(f, Variant::Xor), f)?)
    };
    let theta = match theta {
        None => Err("not requested".to_owned()),
        Some(opts) if 4 * f.m() + 1 > opts.dense_limit => {
            Err(format!("4m+1 = {} exceeds the dense limit {}", 4 * f.m() + 1, opts.dense_limit))
        }
        Some(opts) => {
            let sol = solve_theta(build_graph(f, Variant::Xor).graph(), opts)?;
            Ok(ThetaRun {
                value: sol.value,
                max_residual: sol.residuals.max(),
                iterations: sol.iterations,
                converged: sol.converged,
            })
        }
    };
    Ok(Analysis { closure, witness, theta })
}

fn pipeline(
    f: &Formula,
    with_theta: bool,
    audit: bool,
    solver: &SolverArgs,
    format: Option<Format>,
) -> Result<Outcome, Failure> {
    let opts = theta_options(solver)?;
    let a = analyze(f, with_theta.then_some(&opts))?;
    let mut failure = None;
    if !a.closure.is_refuted() && !a.witness_ok() {
        failure = Some(Failure::Internal("GE3 did not refute but the witness failed verification".into()));
    }
    let audit_json = if audit {
        let xor_sat = xor_satisfiable_by_enumeration(f)?;
        let cnf_sat = cnf_satisfiable_by_enumeration(f)?;
        if a.closure.is_refuted() && xor_sat {
            failure = Some(Failure::Internal("reported unsatisfiable on a satisfiable parity system".into()));
        }
        json!({ "xor_satisfiable": xor_sat, "cnf_satisfiable": cnf_sat, "consistent": !(a.closure.is_refuted() && xor_sat) })
    } else {
        Value::Null
    };
    let theta_json = match &a.theta {
        Ok(t) => json!({
            "value": t.value,
            "max_residual": t.max_residual,
            "iterations": t.iterations,
            "converged": t.converged,
            "agrees_with_m": (t.value - f.m() as f64).abs() <= 2.0 * opts.tol.max(1e-3),
        }),
        Err(reason) if with_theta => json!({ "skipped": reason }),
        Err(_) => Value::Null,
    };
    let verdict = a.verdict(f.m());
    let report = match format {
        Some(Format::Csv) => Report::Table {
            header: vec!["n", "m", "verdict", "trace_steps", "objective", "theta", "theta_converged"],
            rows: vec![vec![
                f.n().to_string(),
                f.m().to_string(),
                verdict,
                a.closure.derivation().map_or(String::new(), |d| d.steps.len().to_string()),
                a.witness.as_ref().map_or(String::new(), |r| r.objective.to_string()),
                a.theta.as_ref().map_or(String::new(), |t| format!("{:.8}", t.value)),
                a.theta.as_ref().map_or(String::new(), |t| t.converged.to_string()),
            ]],
        },
        _ => Report::Json(json!({
            "n": f.n(),
            "m": f.m(),
            "verdict": verdict,
            "ge3": ge3_summary(&a.closure),
            "trace_lines": a.closure.derivation().map(trace_lines),
            "witness": a.witness.as_ref().map(verify_json),
            "theta": theta_json,
            "audit": audit_json,
        })),
    };
    Ok(Outcome { report, failure })
}

struct Task {
    cell: usize,
    n: u32,
    m: usize,
    seed: u64,
}

struct TaskResult {
    cell: usize,
    refuted: bool,
    witness_ok: bool,
    pattern_found: bool,
    matched_pairs: usize,
    theta: Option<ThetaRun>,
}

const SCAN_HEADER: [&str; 15] = [
    "n",
    "m_expr",
    "m",
    "seeds",
    "ge3_refuted",
    "witness_verified",
    "pattern_found",
    "ge3_refutation_rate",
    "witness_success_rate",
    "pattern_hit_rate",
    "mean_matched_pairs",
    "matched_pair_reference",
    "theta_runs",
    "theta_mean",
    "theta_unconverged",
];

fn scan(
    ns: &[u32],
    ms: &[ClauseCount],
    base_seed: u64,
    seeds: u64,
    with_theta: bool,
    solver: &SolverArgs,
    format: Option<Format>,
) -> Result<Report, Failure> {
    let opts = theta_options(solver)?;
    let cells: Vec<(u32, ClauseCount, usize)> =
        ns.iter().flat_map(|&n| ms.iter().map(move |&m| (n, m, m.resolve(n)))).collect();
    if let Some(&(n, _, _)) = cells.iter().find(|c| c.0 < 3) {
        return Err(Failure::Usage(format!("scan needs n >= 3, got {n}")));
    }
    let tasks: Vec<Task> = cells
        .iter()
        .enumerate()
        .flat_map(|(cell, &(n, _, m))| (0..seeds).map(move |s| Task { cell, n, m, seed: base_seed + s }))
        .collect();
    let results: Vec<TaskResult> = tasks
        .par_iter()
        .map(|t| {
            let f = Formula::gen_random(t.n, t.m, t.seed)?;
            let theta_opts = (with_theta && 4 * t.m < opts.dense_limit).then_some(&opts);
            let a = analyze(&f, theta_opts)?;
            if a.witness_ok() == a.closure.is_refuted() {
                return Err(Failure::Internal(format!(
                    "n={} m={} seed={}: witness success must equal GE3 non-refutation",
                    t.n, t.m, t.seed
                )));
            }
            Ok(TaskResult {
                cell: t.cell,
                refuted: a.closure.is_refuted(),
                witness_ok: a.witness_ok(),
                pattern_found: !find_pattern(&f).is_empty(),
                matched_pairs: matched_pair_count(&f),
                theta: a.theta.ok(),
            })
        })
        .collect::<Result<_, Failure>>()?;

    let rows: Vec<Vec<String>> = cells
        .iter()
        .enumerate()
        .map(|(cell, &(n, expr, m))| {
            let rs: Vec<&TaskResult> = results.iter().filter(|r| r.cell == cell).collect();
            let count = |p: fn(&TaskResult) -> bool| rs.iter().filter(|r| p(r)).count();
            let rate =
                |k: usize| if rs.is_empty() { String::new() } else { format!("{:.4}", k as f64 / rs.len() as f64) };
            let (refuted, verified, found) =
                (count(|r| r.refuted), count(|r| r.witness_ok), count(|r| r.pattern_found));
            let thetas: Vec<&ThetaRun> = rs.iter().filter_map(|r| r.theta.as_ref()).collect();
            let mean_pairs = rs.iter().map(|r| r.matched_pairs as f64).sum::<f64>() / rs.len().max(1) as f64;
            vec![
                n.to_string(),
                expr.to_string(),
                m.to_string(),
                rs.len().to_string(),
                refuted.to_string(),
                verified.to_string(),
                found.to_string(),
                rate(refuted),
                rate(verified),
                rate(found),
                format!("{mean_pairs:.2}"),
                format!("{:.2}", matched_pair_reference(n, m)),
                thetas.len().to_string(),
                if thetas.is_empty() {
                    String::new()
                } else {
                    format!("{:.6}", thetas.iter().map(|t| t.value).sum::<f64>() / thetas.len() as f64)
                },
                thetas.iter().filter(|t| !t.converged).count().to_string(),
            ]
        })
        .collect();

    Ok(match format {
        Some(Format::Json) => Report::Json(Value::Array(
            rows.iter()
                .map(|r| Value::Object(SCAN_HEADER.iter().zip(r).map(|(k, v)| ((*k).to_owned(), json!(v))).collect()))
                .collect(),
        )),
        _ => Report::Table { header: SCAN_HEADER.to_vec(), rows },
    })
}
