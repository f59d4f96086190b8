//! Simulated annealing on a single solution with geometric cooling.

use super::{AlgorithmConfig, OptimizerError, Search};

pub(super) fn run(search: &mut Search<'_>, config: &AlgorithmConfig, requested: &[f64]) -> Result<(), OptimizerError> {
    let p = config.sa;
    let init = search.initial(1, requested, config.seed_with_request);
    let mut current = search.evaluate(init)?.remove(0);
    if config.epochs == 0 {
        return Ok(());
    }
    search.end_epoch(std::slice::from_ref(&current));

    let mut temperature = p.initial_temperature;
    for _ in 1..config.epochs {
        let mut x = current.x.clone();
        for (d, v) in x.iter_mut().enumerate() {
            *v += search.normal() * p.step_scale * search.bounds.range(d);
        }
        let u = search.uniform();
        let cand = search.evaluate(vec![x])?.remove(0);
        let gain = cand.fitness - current.fitness;
        if gain >= 0.0 || (temperature > 0.0 && u < (gain / temperature).exp()) {
            current = cand;
        }
        temperature *= p.cooling_rate;
        search.end_epoch(std::slice::from_ref(&current));
    }
    Ok(())
}
