use std::path::Path;
use std::time::Instant;

use serde_json::json;
use skewlab_core::spectra::{ks_distance, mp_edges, semicircle_cdf, semicircle_density, SpectralSummary};
use skewlab_core::FrequencyKind;

use crate::output::{f, Run};
use crate::{Failure, Model};

pub struct Args {
    pub model: Model,
    pub freq: FrequencyKind,
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
    pub bins: usize,
    pub kmax: usize,
}

pub fn run(a: &Args, out: &Path, threads: usize) -> anyhow::Result<()> {
    if a.bins == 0 || a.kmax == 0 {
        return Err(Failure::Usage("--bins and --kmax must be positive".into()).into());
    }
    let t0 = Instant::now();
    let x = super::model_matrix(a.model, &a.freq, a.n, a.rho, a.seed)?;
    let config = json!({
        "model": format!("{:?}", a.model).to_lowercase(),
        "freq": x.config.freq.kind.label(),
        "n": a.n, "m": x.rows(), "rho": a.rho, "seed": a.seed,
        "bins": a.bins, "kmax": a.kmax,
    });
    let mut run = Run::new(out, "spectrum", config.clone(), threads)?;
    run.time("build", t0);
    let t1 = Instant::now();
    let s = SpectralSummary::from_matrix(&x, a.kmax)?;
    run.time("eigensolve", t1);

    let full = s.esd_full(a.bins)?;
    let half = s.esd_2n(a.bins)?;
    let (df, dh) = (full.values(), half.values());
    let meta = [("model", config["model"].to_string()), ("freq", x.config.freq.kind.label()), ("n", a.n.to_string()), ("m", s.m.to_string()), ("seed", a.seed.to_string())];
    run.csv(
        "esd.csv",
        &meta,
        &["bin_lo", "bin_hi", "count", "density_full", "density_2n", "semicircle"],
        (0..a.bins).map(|b| {
            let (lo, hi) = (full.bin_edges[b], full.bin_edges[b + 1]);
            vec![f(lo), f(hi), full.counts[b].to_string(), f(df[b]), f(dh[b]), f(semicircle_density(0.5 * (lo + hi)))]
        }),
    )?;
    run.csv(
        "moments.csv",
        &meta,
        &["k", "order", "mu"],
        s.moments.iter().enumerate().map(|(i, m)| vec![(i + 1).to_string(), (2 * i + 2).to_string(), f(*m)]),
    )?;
    let ks = if s.m == s.n { Some(ks_distance(&s.eigs, semicircle_cdf)?) } else { None };
    let summary = json!({
        "config": config,
        "moments": s.moments,
        "sigma_max": s.sigma.first(),
        "ks_semicircle": ks,
        "mp_edges": if s.m != s.n { Some(mp_edges(a.rho)?) } else { None },
    });
    run.json("summary.json", &summary)?;
    for (i, m) in s.moments.iter().enumerate() {
        println!("mu^({}) = {m}", 2 * i + 2);
    }
    if let Some(ks) = ks {
        println!("KS(ESD, semicircle) = {ks}");
    }
    run.finish()?;
    Ok(())
}
