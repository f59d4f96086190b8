//! Differential evolution, rand/1/bin with greedy replacement.

use rand::Rng;

use super::{AlgorithmConfig, OptimizerError, Search};

pub(super) fn run(search: &mut Search<'_>, config: &AlgorithmConfig, requested: &[f64]) -> Result<(), OptimizerError> {
    let p = config.de;
    let n = config.population;
    let init = search.initial(n, requested, config.seed_with_request);
    let mut pop = search.evaluate(init)?;
    if config.epochs == 0 {
        return Ok(());
    }
    search.end_epoch(&pop);

    let dims = search.dims();
    for _ in 1..config.epochs {
        let mut trials = Vec::with_capacity(n);
        for i in 0..n {
            let mut pick = [i; 3];
            for k in 0..3 {
                loop {
                    let r = search.rng.gen_range(0..n);
                    if r != i && !pick[..k].contains(&r) {
                        pick[k] = r;
                        break;
                    }
                }
            }
            let [a, b, c] = pick;
            let forced = if dims > 0 { search.rng.gen_range(0..dims) } else { 0 };
            let mut x = pop[i].x.clone();
            for (d, v) in x.iter_mut().enumerate() {
                if d == forced || search.uniform() < p.cr {
                    *v = pop[a].x[d] + p.wf * (pop[b].x[d] - pop[c].x[d]);
                }
            }
            trials.push(x);
        }
        let trials = search.evaluate(trials)?;
        for (slot, t) in pop.iter_mut().zip(trials) {
            if t.fitness >= slot.fitness {
                *slot = t;
            }
        }
        search.end_epoch(&pop);
    }
    Ok(())
}
