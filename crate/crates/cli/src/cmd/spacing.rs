use std::path::Path;
use std::time::Instant;

use serde_json::json;
use skewlab_core::spectra::{eigenvalues_h, level_spacing, singular_values, wigner_cdf, wigner_surmise, Histogram};
use skewlab_core::{Error as CoreError, FrequencyKind};

use crate::output::{f, Run};
use crate::{Failure, Model};

pub struct Args {
    pub model: Model,
    pub freq: FrequencyKind,
    pub n: usize,
    pub seed: u64,
    pub energy: f64,
    pub cutoff_exp: f64,
    pub bins: usize,
    pub s_max: f64,
}

pub fn run(a: &Args, out: &Path, threads: usize) -> anyhow::Result<()> {
    if !(a.cutoff_exp > 0.0) {
        return Err(Failure::Usage("--cutoff-exp must be positive".into()).into());
    }
    if !(a.energy > -2.0 && a.energy < 2.0) {
        return Err(Failure::Usage("--energy must lie in (-2, 2)".into()).into());
    }
    if a.bins == 0 || !(a.s_max > 0.0) {
        return Err(Failure::Usage("--bins and --s-max must be positive".into()).into());
    }
    let t = (a.n as f64).powf(-a.cutoff_exp);
    let t0 = Instant::now();
    let x = super::model_matrix(a.model, &a.freq, a.n, 1.0, a.seed)?;
    let sigma = singular_values(&x)?;
    let eigs = eigenvalues_h(&sigma, x.rows(), x.cols());
    let grid: Vec<f64> = (0..=a.bins).map(|b| a.s_max * b as f64 / a.bins as f64).collect();
    let sample = match level_spacing(&eigs, a.energy, t, a.n, &grid) {
        Ok(s) => s,
        Err(CoreError::EmptyWindow { energy, t }) => {
            return Err(Failure::Empty(format!("no eigenvalue pairs within {t} of {energy}")).into())
        }
        Err(e) => return Err(e.into()),
    };
    let config = json!({
        "model": format!("{:?}", a.model).to_lowercase(),
        "freq": x.config.freq.kind.label(),
        "n": a.n, "seed": a.seed, "energy": a.energy,
        "cutoff_exp": a.cutoff_exp, "t": t, "bins": a.bins, "s_max": a.s_max,
    });
    let mut run = Run::new(out, "spacing", config.clone(), threads)?;
    run.time("spectrum", t0);
    let ks = sample.ks_to_surmise()?;
    let hist = Histogram::new(&sample.s_values, a.bins, Some((0.0, a.s_max)), sample.s_values.len() as f64)?;
    let dens = hist.values();
    let meta = [("model", config["model"].to_string()), ("n", a.n.to_string()), ("energy", f(a.energy)), ("t", f(t)), ("gaps", sample.s_values.len().to_string())];
    run.csv(
        "spacing.csv",
        &meta,
        &["s_lo", "s_hi", "density", "surmise", "lambda_cdf", "wigner_cdf"],
        (0..a.bins).map(|b| {
            let (lo, hi) = (grid[b], grid[b + 1]);
            vec![f(lo), f(hi), f(dens[b]), f(wigner_surmise(0.5 * (lo + hi))), f(sample.lambda_cdf[b + 1]), f(wigner_cdf(hi))]
        }),
    )?;
    run.json("summary.json", &json!({"config": config, "gaps": sample.s_values.len(), "ks_surmise": ks}))?;
    println!("gaps = {}", sample.s_values.len());
    println!("KS(spacing, surmise) = {ks}");
    run.finish()?;
    Ok(())
}
