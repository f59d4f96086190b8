//! Grey wolf optimiser, whale optimisation, and a hybrid that picks one of
//! the two update rules per individual with equal probability.

use super::{AlgorithmConfig, Candidate, OptimizerError, Search};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Variant {
    Gwo,
    Woa,
    Hybrid,
}

/// The three best distinct candidates seen so far, best first.
fn update_leaders(leaders: &mut Vec<Candidate>, pop: &[Candidate]) {
    for c in pop {
        if leaders.iter().any(|l| l.x == c.x) {
            continue;
        }
        leaders.push(c.clone());
        leaders.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
        leaders.truncate(3);
    }
}

fn gwo_step(search: &mut Search<'_>, x: &[f64], leaders: &[Candidate], a: f64) -> Vec<f64> {
    (0..x.len())
        .map(|d| {
            let mut sum = 0.0;
            for l in leaders {
                let big_a = 2.0 * a * search.uniform() - a;
                let c = 2.0 * search.uniform();
                sum += l.x[d] - big_a * (c * l.x[d] - x[d]).abs();
            }
            sum / leaders.len() as f64
        })
        .collect()
}

fn woa_step(search: &mut Search<'_>, x: &[f64], pop: &[Candidate], best: &Candidate, a: f64) -> Vec<f64> {
    const B: f64 = 1.0;
    let big_a = 2.0 * a * search.uniform() - a;
    let c = 2.0 * search.uniform();
    let p = search.uniform();
    let l = 2.0 * search.uniform() - 1.0;
    if p < 0.5 {
        let target = if big_a.abs() < 1.0 {
            best.x.clone()
        } else {
            let r = (search.uniform() * pop.len() as f64) as usize;
            pop[r.min(pop.len() - 1)].x.clone()
        };
        (0..x.len()).map(|d| target[d] - big_a * (c * target[d] - x[d]).abs()).collect()
    } else {
        let spiral = (B * l).exp() * (2.0 * std::f64::consts::PI * l).cos();
        (0..x.len()).map(|d| (best.x[d] - x[d]).abs() * spiral + best.x[d]).collect()
    }
}

pub(super) fn run(
    search: &mut Search<'_>,
    config: &AlgorithmConfig,
    requested: &[f64],
    variant: Variant,
) -> Result<(), OptimizerError> {
    let n = config.population;
    let init = search.initial(n, requested, config.seed_with_request);
    let mut pop = search.evaluate(init)?;
    if config.epochs == 0 {
        return Ok(());
    }
    let mut leaders = Vec::with_capacity(3);
    update_leaders(&mut leaders, &pop);
    search.end_epoch(&pop);

    for epoch in 1..config.epochs {
        let a = 2.0 * (1.0 - epoch as f64 / config.epochs as f64);
        let mut moved = Vec::with_capacity(n);
        for i in 0..n {
            let use_gwo = match variant {
                Variant::Gwo => true,
                Variant::Woa => false,
                Variant::Hybrid => search.uniform() < 0.5,
            };
            let x = if use_gwo {
                gwo_step(search, &pop[i].x, &leaders, a)
            } else {
                woa_step(search, &pop[i].x, &pop, &leaders[0], a)
            };
            moved.push(x);
        }
        pop = search.evaluate(moved)?;
        update_leaders(&mut leaders, &pop);
        search.end_epoch(&pop);
    }
    Ok(())
}
