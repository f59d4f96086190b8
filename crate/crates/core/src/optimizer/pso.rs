//! Particle swarm with Clerc's constriction factor and a global-best topology.

use super::{argmax, AlgorithmConfig, Candidate, OptimizerError, Search};

fn constriction(phi: f64) -> f64 {
    if phi <= 4.0 {
        // Constriction is only defined above 4; fall back to no damping.
        return 1.0;
    }
    2.0 / (2.0 - phi - (phi * phi - 4.0 * phi).sqrt()).abs()
}

pub(super) fn run(search: &mut Search<'_>, config: &AlgorithmConfig, requested: &[f64]) -> Result<(), OptimizerError> {
    let p = config.pso;
    let n = config.population;
    let dims = search.dims();
    let chi = constriction(p.c1 + p.c2);
    let vmax: Vec<f64> = (0..dims).map(|d| p.alpha * search.bounds.range(d)).collect();

    let init = search.initial(n, requested, config.seed_with_request);
    let mut velocity: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dims).map(|d| (2.0 * search.uniform() - 1.0) * vmax[d]).collect())
        .collect();
    let mut pop = search.evaluate(init)?;
    if config.epochs == 0 {
        return Ok(());
    }
    let mut personal: Vec<Candidate> = pop.clone();
    let mut global = personal[argmax(&personal)].clone();
    search.end_epoch(&pop);

    for _ in 1..config.epochs {
        let mut moved = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = pop[i].x.clone();
            for d in 0..dims {
                let (r1, r2) = (search.uniform(), search.uniform());
                let v = chi
                    * (velocity[i][d]
                        + p.c1 * r1 * (personal[i].x[d] - x[d])
                        + p.c2 * r2 * (global.x[d] - x[d]));
                velocity[i][d] = v.clamp(-vmax[d], vmax[d]);
                x[d] += velocity[i][d];
            }
            moved.push(x);
        }
        pop = search.evaluate(moved)?;
        for (best, cur) in personal.iter_mut().zip(&pop) {
            if cur.fitness > best.fitness {
                *best = cur.clone();
            }
        }
        let leader = argmax(&personal);
        if personal[leader].fitness > global.fitness {
            global = personal[leader].clone();
        }
        search.end_epoch(&pop);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    #[test]
    fn constriction_for_default_coefficients() {
        assert!((super::constriction(4.1) - 0.729_843_788).abs() < 1e-8);
    }
}
