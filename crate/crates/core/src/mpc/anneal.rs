//! Simulated annealing over a box-bounded vector.
//!
//! Every move `m` draws its randomness from its own stream seeded by
//! `(rng_seed, m)`, so a proposal depends only on the current point and the
//! move index. That lets upcoming moves be evaluated speculatively (assuming
//! rejection) and replayed in order: the accepted chain is bit-identical to
//! the one-at-a-time run.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{mix_seed, InitialTemp, SaSettings};
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};
use crate::params::Bounds;

/// Moves evaluated ahead of the acceptance walk in parallel mode.
const SPECULATION_WINDOW: usize = 8;
const AUTO_TEMP_STREAM: u64 = 0xA17E_D00D;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealOutcome {
    pub best: Vec<f64>,
    pub best_cost: f64,
    pub initial_cost: f64,
    pub initial_temp: f64,
    /// Moves walked (independent of speculation).
    pub moves: usize,
    pub accepted: usize,
}

struct Proposal {
    point: Vec<f64>,
    uniform: f64,
}

fn propose(current: &[f64], bounds: &[Bounds], sigma_scale: f64, settings: &SaSettings, stream: u64) -> Proposal {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(settings.rng_seed, stream));
    let dim = current.len();
    let max_touch = ((settings.subset_fraction * dim as f64).ceil() as usize).clamp(1, dim);
    let count = rng.random_range(1..=max_touch);
    let mut point = current.to_vec();
    for i in sample(&mut rng, dim, count) {
        let b = bounds[i];
        let noise: f64 = rng.sample(StandardNormal);
        point[i] = b.clamp(point[i] + noise * sigma_scale * b.span());
    }
    Proposal {
        point,
        uniform: rng.random(),
    }
}

fn sanitize(cost: f64) -> f64 {
    if cost.is_nan() {
        f64::INFINITY
    } else {
        cost
    }
}

fn auto_temperature<F>(objective: &F, start: &[f64], start_cost: f64, bounds: &[Bounds], settings: &SaSettings) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = SaSettings::AUTO_TEMP_SAMPLES;
    let costs = par::map_range(n, settings.parallelism, |i| {
        let p = propose(start, bounds, settings.perturb_scale, settings, AUTO_TEMP_STREAM.wrapping_add(i as u64) << 32);
        sanitize(objective(&p.point))
    });
    let finite: Vec<f64> = costs.into_iter().filter(|c| c.is_finite()).collect();
    let std = if finite.len() > 1 {
        let mean = finite.iter().sum::<f64>() / finite.len() as f64;
        (finite.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (finite.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    if std.is_finite() && std > 0.0 {
        std
    } else {
        (0.1 * start_cost.abs()).max(1e-12)
    }
}

/// Minimizes `objective` starting from `start` (clamped into `bounds`).
///
/// Temperature and perturbation size both shrink by `cooling_rate` per level;
/// a move perturbs a random subset of coordinates with Gaussian noise of
/// standard deviation `perturb_scale * range * cooling_rate^level` and is
/// accepted by the Metropolis rule. The best point ever evaluated is returned.
pub fn anneal<F>(objective: F, bounds: &[Bounds], start: &[f64], settings: &SaSettings) -> Result<AnnealOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    settings.validate()?;
    if start.len() != bounds.len() || start.is_empty() {
        return Err(Error::input("annealing start and bounds must have equal, nonzero length"));
    }
    let mut current: Vec<f64> = start.iter().zip(bounds).map(|(x, b)| b.clamp(*x)).collect();
    let mut current_cost = sanitize(objective(&current));
    let initial_cost = current_cost;
    let t0 = match settings.initial_temp {
        InitialTemp::Fixed(t) => t,
        InitialTemp::Auto => auto_temperature(&objective, &current, current_cost, bounds, settings),
    };

    let mut best = current.clone();
    let mut best_cost = current_cost;
    let mut accepted = 0;
    let total = settings.total_moves();
    let window = if settings.parallelism == Parallelism::Parallel {
        SPECULATION_WINDOW
    } else {
        1
    };
    let level_of = |m: usize| (m / settings.moves_per_temp) as i32;

    let mut m = 0;
    while m < total {
        let end = (m + window).min(total);
        let batch: Vec<Proposal> = (m..end)
            .map(|k| {
                let scale = settings.perturb_scale * settings.cooling_rate.powi(level_of(k));
                propose(&current, bounds, scale, settings, k as u64)
            })
            .collect();
        let costs = par::map(&batch, settings.parallelism, |p| sanitize(objective(&p.point)));

        let mut next = end;
        for (offset, (proposal, cost)) in batch.into_iter().zip(costs).enumerate() {
            let k = m + offset;
            if cost < best_cost {
                best_cost = cost;
                best.clone_from(&proposal.point);
            }
            let temp = t0 * settings.cooling_rate.powi(level_of(k));
            let delta = cost - current_cost;
            if delta <= 0.0 || proposal.uniform < (-delta / temp).exp() {
                current = proposal.point;
                current_cost = cost;
                accepted += 1;
                next = k + 1;
                break;
            }
        }
        m = next;
    }

    Ok(AnnealOutcome {
        best,
        best_cost,
        initial_cost,
        initial_temp: t0,
        moves: total,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum()
    }

    fn settings(seed: u64) -> SaSettings {
        SaSettings {
            rng_seed: seed,
            ..SaSettings::default()
        }
    }

    #[test]
    fn improves_on_start() {
        let bounds = vec![Bounds::new(-2.0, 2.0); 4];
        let out = anneal(sphere, &bounds, &[1.5, -1.5, 1.0, -1.0], &settings(3)).unwrap();
        assert!(out.best_cost <= out.initial_cost);
        assert!(out.best_cost < 0.1, "{}", out.best_cost);
    }

    #[test]
    fn deterministic_for_seed() {
        let bounds = vec![Bounds::new(-2.0, 2.0); 3];
        let a = anneal(sphere, &bounds, &[1.0, 1.0, 1.0], &settings(9)).unwrap();
        let b = anneal(sphere, &bounds, &[1.0, 1.0, 1.0], &settings(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn speculative_replay_matches_sequential() {
        let bounds = vec![Bounds::new(-2.0, 2.0); 6];
        let start = [1.0, -1.0, 0.5, 0.0, 1.9, -1.9];
        for seed in 0..5 {
            let seq = anneal(sphere, &bounds, &start, &settings(seed)).unwrap();
            let par_settings = SaSettings {
                parallelism: Parallelism::Parallel,
                ..settings(seed)
            };
            let par = anneal(sphere, &bounds, &start, &par_settings).unwrap();
            assert_eq!(seq, par);
        }
    }

    #[test]
    fn stays_in_bounds() {
        let bounds = vec![Bounds::new(0.0, 1.0), Bounds::new(-0.5, 0.5)];
        let out = anneal(|x| -(x[0] + x[1]), &bounds, &[0.5, 0.0], &settings(1)).unwrap();
        assert!(bounds.iter().zip(&out.best).all(|(b, x)| b.contains(*x)));
    }

    #[test]
    fn nan_objective_never_wins() {
        let bounds = vec![Bounds::new(-1.0, 1.0)];
        let out = anneal(|x| if x[0] > 0.0 { f64::NAN } else { x[0] * x[0] }, &bounds, &[-0.5], &settings(2)).unwrap();
        assert!(out.best[0] <= 0.0);
    }

    #[test]
    fn rejects_shape_mismatch() {
        assert!(anneal(sphere, &[Bounds::new(0.0, 1.0)], &[0.0, 0.0], &settings(0)).is_err());
    }
}
