use std::path::Path;

use serde_json::json;
use skewlab_core::extreal::parse_rational;
use skewlab_core::graphcore::{cycle_basis, enumerate_explorations, good_cycle_sweep, preprocess, MAX_ENUM_K};
use skewlab_core::momentengine::{moment_deterministic_identity, phi_table, recursion_moments, PropagatorSpec, RecursionForm};
use skewlab_core::{build_matrix, ModelConfig};

use crate::output::{f, Run};
use crate::{Failure, Form, GraphCmd};

fn check_k(k: usize) -> anyhow::Result<()> {
    if k == 0 || k > MAX_ENUM_K {
        return Err(Failure::Usage(format!("--k must be in 1..={MAX_ENUM_K}")).into());
    }
    Ok(())
}

pub fn run(action: GraphCmd, threads: usize) -> anyhow::Result<()> {
    match action {
        GraphCmd::Enumerate { k, out_dir } => enumerate(k, &out_dir, threads),
        GraphCmd::Goodcycles { k, out_dir } => goodcycles(k, &out_dir, threads),
        GraphCmd::Phi { k, n, freq, rho, out_dir } => {
            check_k(k)?;
            let spec = PropagatorSpec::effective(&freq, n, rho)?;
            let config = json!({"k": k, "n": n, "m": spec.m(), "freq": freq.label(), "rho": rho});
            let mut run = Run::new(&out_dir, "graphs phi", config.clone(), threads)?;
            let table = phi_table(k, &spec)?;
            let (re, im) = table.iter().fold((0.0, 0.0), |(a, b), r| (a + r.re, b + r.im));
            let meta = [("freq", freq.label()), ("k", k.to_string()), ("n", n.to_string()), ("m", spec.m().to_string())];
            run.csv(
                "phi.csv",
                &meta,
                &["graph", "n", "re", "im", "abs", "reducible"],
                table.iter().map(|r| vec![r.id.clone(), r.n.to_string(), f(r.re), f(r.im), f(r.abs), r.reducible.to_string()]),
            )?;
            run.json("summary.json", &json!({"config": config, "graph_sum": [re, im]}))?;
            println!("sum of Phi over {} explorations = {re} + {im}i", table.len());
            run.finish()?;
            Ok(())
        }
        GraphCmd::Recursion { kmax, rho, form, out_dir } => {
            let r = parse_rational(&rho).ok_or_else(|| Failure::Usage(format!("bad --rho {rho:?}")))?;
            let form = match form {
                Form::Proof => RecursionForm::Proof,
                Form::Statement => RecursionForm::Statement,
            };
            let table = recursion_moments(kmax, &r, form)?;
            let config = json!({"kmax": kmax, "rho": table.rho, "form": form});
            let mut run = Run::new(&out_dir, "graphs recursion", config.clone(), threads)?;
            let rho_one = r == parse_rational("1").expect("literal");
            run.csv(
                "recursion.csv",
                &[("rho", table.rho.clone()), ("form", format!("{form:?}").to_lowercase())],
                &["k", "mu_tilde", "catalan_if_rho1", "polynomial"],
                (0..=kmax).map(|k| {
                    vec![
                        k.to_string(),
                        table.mu_tilde[k].clone(),
                        if rho_one { table.catalan[k].clone() } else { String::new() },
                        table.reducible_polys[k].clone(),
                    ]
                }),
            )?;
            run.json("summary.json", &json!({"config": config, "table": table}))?;
            println!("{}", table.mu_tilde.join(","));
            run.finish()?;
            Ok(())
        }
        GraphCmd::Identity { k, n, model, out_dir } => {
            let m = model
                .deterministic()
                .ok_or_else(|| Failure::Usage("identity needs --model a, b or c".into()))?;
            if k == 0 {
                return Err(Failure::Usage("--k must be positive".into()).into());
            }
            let x = build_matrix(&ModelConfig::deterministic(m, n)?)?;
            let r = moment_deterministic_identity(k, &x)?;
            let config = json!({"k": k, "n": n, "model": format!("{m:?}")});
            let mut run = Run::new(&out_dir, "graphs identity", config.clone(), threads)?;
            run.csv(
                "identity.csv",
                &[("model", format!("{m:?}"))],
                &["k", "n", "trace_moment", "graph_sum", "graph_sum_imag", "abs_diff"],
                [vec![k.to_string(), n.to_string(), f(r.lhs), f(r.rhs), f(r.rhs_imag), f(r.diff)]],
            )?;
            run.json("summary.json", &json!({"config": config, "report": r}))?;
            println!("trace moment = {}, graph sum = {}, |diff| = {}", r.lhs, r.rhs, r.diff);
            run.finish()?;
            if !r.holds(1e-8) {
                return Err(Failure::Violation(format!("identity fails: |diff| = {}", r.diff)).into());
            }
            Ok(())
        }
    }
}

fn enumerate(k: usize, out: &Path, threads: usize) -> anyhow::Result<()> {
    check_k(k)?;
    let config = json!({"k": k});
    let mut run = Run::new(out, "graphs enumerate", config.clone(), threads)?;
    let mut rows = Vec::new();
    let mut graphs = Vec::new();
    for e in enumerate_explorations(k)? {
        let g = e.graph();
        let (reduced, _) = preprocess(&g.multigraph())?;
        let edges: Vec<String> = e.edges().iter().map(|(a, b)| format!("{a}>{b}")).collect();
        rows.push(vec![
            e.id(),
            k.to_string(),
            e.l().to_string(),
            edges.join(" "),
            cycle_basis(&g)?.dim.to_string(),
            reduced.is_point().to_string(),
            reduced.vertices.len().to_string(),
            reduced.edges.len().to_string(),
        ]);
        let mut j = g.to_json();
        j["id"] = json!(e.id());
        graphs.push(j);
    }
    run.csv(
        "explorations.csv",
        &[("k", k.to_string())],
        &["graph", "k", "l", "edges", "cycle_dim", "reducible", "reduced_vertices", "reduced_edges"],
        rows.iter().cloned(),
    )?;
    run.json("explorations.json", &json!(graphs))?;
    println!("{} explorations on {k} edges", rows.len());
    run.finish()?;
    Ok(())
}

fn goodcycles(k: usize, out: &Path, threads: usize) -> anyhow::Result<()> {
    check_k(k)?;
    let config = json!({"k_max": k});
    let mut run = Run::new(out, "graphs goodcycles", config.clone(), threads)?;
    let mut recs = Vec::new();
    for kk in 1..=k {
        recs.extend(good_cycle_sweep(kk)?);
    }
    let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
    run.csv(
        "goodcycles.csv",
        &[("k_max", k.to_string())],
        &["graph", "k", "l", "reduced_vertices", "reduced_edges", "cycle_len", "verified"],
        recs.iter().map(|r| {
            vec![
                r.id.clone(),
                r.k.to_string(),
                r.l.to_string(),
                r.reduced_vertices.to_string(),
                r.reduced_edges.to_string(),
                opt(r.cycle_len),
                r.verified.map(|v| v.to_string()).unwrap_or_else(|| "point".into()),
            ]
        }),
    )?;
    let bad: Vec<&str> = recs.iter().filter(|r| r.is_violation()).map(|r| r.id.as_str()).collect();
    let nontrivial = recs.iter().filter(|r| r.verified.is_some()).count();
    run.json("summary.json", &json!({"config": config, "graphs": recs.len(), "nontrivial": nontrivial, "violations": bad}))?;
    println!("{} graphs, {nontrivial} non-point after preprocessing, {} violations", recs.len(), bad.len());
    run.finish()?;
    if !bad.is_empty() {
        return Err(Failure::Violation(format!("no good cycle for {}", bad.join(", "))).into());
    }
    Ok(())
}
