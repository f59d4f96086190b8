//! Ant colony optimisation for continuous domains: a ranked solution archive
//! defines a Gaussian mixture from which new solutions are sampled.

use super::{AlgorithmConfig, Candidate, OptimizerError, Search};

fn sort_desc(archive: &mut [Candidate]) {
    archive.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
}

pub(super) fn run(search: &mut Search<'_>, config: &AlgorithmConfig, requested: &[f64]) -> Result<(), OptimizerError> {
    let p = config.acor;
    let k = config.population;
    let init = search.initial(k, requested, config.seed_with_request);
    let mut archive = search.evaluate(init)?;
    if config.epochs == 0 {
        return Ok(());
    }
    sort_desc(&mut archive);
    search.end_epoch(&archive);

    let q = p.intensification * k as f64;
    let weights: Vec<f64> = (0..k)
        .map(|r| (-(r as f64).powi(2) / (2.0 * q * q)).exp() / (q * (2.0 * std::f64::consts::PI).sqrt()))
        .collect();
    let total: f64 = weights.iter().sum();
    let dims = search.dims();

    for _ in 1..config.epochs {
        let mut samples = Vec::with_capacity(p.sample_count);
        for _ in 0..p.sample_count {
            let mut u = search.uniform() * total;
            let mut guide = k - 1;
            for (r, w) in weights.iter().enumerate() {
                if u < *w {
                    guide = r;
                    break;
                }
                u -= w;
            }
            let x: Vec<f64> = (0..dims)
                .map(|d| {
                    let mu = archive[guide].x[d];
                    let spread = if k > 1 {
                        archive.iter().map(|a| (a.x[d] - mu).abs()).sum::<f64>() / (k - 1) as f64
                    } else {
                        0.0
                    };
                    mu + p.zeta * spread * search.normal()
                })
                .collect();
            samples.push(x);
        }
        let fresh = search.evaluate(samples)?;
        archive.extend(fresh);
        sort_desc(&mut archive);
        archive.truncate(k);
        search.end_epoch(&archive);
    }
    Ok(())
}
