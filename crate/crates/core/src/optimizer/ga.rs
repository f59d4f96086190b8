//! Generational GA: tournament selection, uniform crossover, Gaussian
//! mutation and a single elite carried over in place of the worst child.

use rand::Rng;

use super::{argmax, AlgorithmConfig, Candidate, OptimizerError, Search};

fn tournament(search: &mut Search<'_>, pop: &[Candidate], size: usize) -> usize {
    let mut best = search.rng.gen_range(0..pop.len());
    for _ in 1..size {
        let c = search.rng.gen_range(0..pop.len());
        if pop[c].fitness > pop[best].fitness {
            best = c;
        }
    }
    best
}

pub(super) fn run(search: &mut Search<'_>, config: &AlgorithmConfig, requested: &[f64]) -> Result<(), OptimizerError> {
    let p = config.ga;
    let n = config.population;
    let init = search.initial(n, requested, config.seed_with_request);
    let mut pop = search.evaluate(init)?;
    if config.epochs == 0 {
        return Ok(());
    }
    search.end_epoch(&pop);

    let dims = search.dims();
    for _ in 1..config.epochs {
        let mut children = Vec::with_capacity(n);
        while children.len() < n {
            let a = tournament(search, &pop, p.tournament_size);
            let b = tournament(search, &pop, p.tournament_size);
            let (mut c1, mut c2) = (pop[a].x.clone(), pop[b].x.clone());
            if search.uniform() < p.pc {
                for d in 0..dims {
                    if search.rng.gen_bool(0.5) {
                        std::mem::swap(&mut c1[d], &mut c2[d]);
                    }
                }
            }
            for child in [c1, c2] {
                if children.len() == n {
                    break;
                }
                let mut child = child;
                for (d, gene) in child.iter_mut().enumerate() {
                    if search.uniform() < p.pm {
                        *gene += search.normal() * p.mutation_scale * search.bounds.range(d);
                    }
                }
                children.push(child);
            }
        }
        let elite = pop[argmax(&pop)].clone();
        let mut next = search.evaluate(children)?;
        let worst = next
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.fitness.total_cmp(&y.1.fitness))
            .map(|(i, _)| i)
            .unwrap();
        if elite.fitness > next[worst].fitness {
            next[worst] = elite;
        }
        pop = next;
        search.end_epoch(&pop);
    }
    Ok(())
}
