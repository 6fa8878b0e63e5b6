use std::path::Path;
use std::time::Instant;

use serde_json::json;
use skewlab_core::expsum::{
    es_for_kind, fit_decay, random_freq_mean, random_freq_mean_exact, EsMethod, BRUTE_MAX_N,
};
use skewlab_core::matrixmodel::rows_for;
use skewlab_core::FrequencyKind;

use crate::output::{f, Run};
use crate::{Failure, Method};

pub struct Args {
    pub freq: FrequencyKind,
    pub n_list: Vec<usize>,
    pub method: Method,
    pub rho: f64,
    pub samples: usize,
    pub seed: u64,
}

pub fn run(a: &Args, out: &Path, threads: usize) -> anyhow::Result<()> {
    if a.n_list.is_empty() || a.n_list.contains(&0) {
        return Err(Failure::Usage("--n-list needs positive integers".into()).into());
    }
    if a.method == Method::Brute {
        if let Some(n) = a.n_list.iter().find(|&&n| n > BRUTE_MAX_N) {
            return Err(Failure::Usage(format!("brute force is limited to N <= {BRUTE_MAX_N}, got {n}")).into());
        }
    }
    let method_name = match a.method {
        Method::Brute => "brute",
        Method::Square => "square",
        Method::Bound => "bound",
        Method::MeanRandom => "mean-random",
    };
    let config = json!({
        "freq": a.freq.label(), "n_list": a.n_list, "method": method_name,
        "rho": a.rho, "samples": a.samples, "seed": a.seed,
    });
    let mut run = Run::new(out, "expsum", config.clone(), threads)?;
    let mut values = Vec::new();
    let mut rows = Vec::new();
    for &n in &a.n_list {
        let t0 = Instant::now();
        let m = rows_for(a.rho, n);
        match a.method {
            Method::MeanRandom => {
                let est = random_freq_mean(n, a.rho, a.samples, a.seed)?;
                values.push(est.mean);
                rows.push(vec![n.to_string(), m.to_string(), method_name.into(), f(est.mean), f(est.stderr), f(random_freq_mean_exact(m, n))]);
            }
            _ => {
                let route = match a.method {
                    Method::Brute => EsMethod::BruteForce,
                    Method::Square => EsMethod::CompletedSquare,
                    _ => EsMethod::GeometricBound,
                };
                let r = es_for_kind(&a.freq, n, a.rho, route)?;
                values.push(r.number());
                rows.push(vec![n.to_string(), m.to_string(), method_name.into(), f(r.number()), String::new(), String::new()]);
            }
        }
        run.time(&format!("N={n}"), t0);
        println!("N = {n}: {}", values.last().expect("pushed"));
    }
    let meta = [("freq", a.freq.label()), ("rho", f(a.rho)), ("method", method_name.to_string())];
    run.csv("expsum.csv", &meta, &["n", "m", "method", "value", "stderr", "exact_mean"], rows)?;
    let mut summary = json!({"config": config, "values": values});
    if a.n_list.len() >= 2 {
        let fit = fit_decay(&a.n_list, &values)?;
        run.csv(
            "decay.csv",
            &meta,
            &["slope", "intercept", "r2", "points"],
            [vec![f(fit.slope), f(fit.intercept), f(fit.r2), a.n_list.len().to_string()]],
        )?;
        println!("slope = {}", fit.slope);
        summary["slope"] = json!(fit.slope);
        summary["r2"] = json!(fit.r2);
    }
    run.json("summary.json", &summary)?;
    run.finish()?;
    Ok(())
}
