//! The optimization loop: observe, refit, acquire, repeat.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::gp::acquisition::{acquire_next_features, candidate_set};
use crate::gp::hyperfit::{default_hyper, default_log_bounds, feature_ranges, fit_hyperparams};
use crate::gp::kernel::FeatureMap;
use crate::gp::state::{GpState, MeanPolicy};
use crate::sim::Bounds;

/// Knobs of a single optimization run. Two runs with equal settings and
/// an equal objective produce identical traces.
#[derive(Debug, Clone)]
pub struct BoSettings {
    pub budget: usize,
    pub seed: u64,
    pub mean: MeanPolicy,
    /// Uniform candidates per acquisition.
    pub n_uniform: usize,
    /// Local perturbations per observed point.
    pub n_local: usize,
    /// Perturbation width as a fraction of each dimension's span.
    pub local_sigma: f64,
}

impl BoSettings {
    pub fn new(budget: usize, seed: u64) -> Self {
        BoSettings {
            budget,
            seed,
            mean: MeanPolicy::Median,
            n_uniform: 10_000,
            n_local: 8,
            local_sigma: 0.05,
        }
    }
}

/// One objective evaluation in a run's trace.
#[derive(Debug, Clone, PartialEq)]
pub struct BoTrial {
    /// 1-based trial index.
    pub trial: usize,
    pub params: Vec<f64>,
    pub cost: f64,
    pub best_so_far: f64,
}

/// Completed run: the trace plus per-trial wall-clock timings. Timings
/// stay in memory; serialized outputs carry only the trace.
#[derive(Debug, Clone)]
pub struct BoResult {
    pub kernel: String,
    pub seed: u64,
    pub trials: Vec<BoTrial>,
    pub wall: Vec<Duration>,
}

impl BoResult {
    pub fn best(&self) -> f64 {
        self.trials.last().map_or(f64::INFINITY, |t| t.best_so_far)
    }

    /// 1-based index of the first trial at or below `threshold`, if any.
    pub fn first_below(&self, threshold: f64) -> Option<usize> {
        self.trials.iter().find(|t| t.cost < threshold).map(|t| t.trial)
    }
}

/// Runs BO for exactly `budget` evaluations of `objective`. The first
/// point is uniform random; afterwards hyperparameters are refit and the
/// next point maximizes EI over a fresh candidate pool. An objective
/// error is scored as `failure_cost` and the run continues.
///
/// The length-scale box spans the feature ranges of observed points and
/// the current candidate pool together, so a cluster of early
/// observations cannot pin the scales to a degenerate sliver.
pub fn bo_run<F>(
    mut objective: F,
    failure_cost: f64,
    feature: &FeatureMap,
    bounds: &Bounds,
    settings: &BoSettings,
) -> Result<BoResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    assert!(settings.budget >= 1, "budget must be at least 1");
    let mut rng = ChaCha20Rng::seed_from_u64(settings.seed);
    let mut trials: Vec<BoTrial> = Vec::with_capacity(settings.budget);
    let mut wall = Vec::with_capacity(settings.budget);
    let mut observed: Vec<Vec<f64>> = Vec::new();
    let mut feats: Vec<Vec<f64>> = Vec::new();
    let mut costs: Vec<f64> = Vec::new();
    let mut hyper = None;

    let mut next = bounds.sample_uniform(&mut rng);
    for trial in 1..=settings.budget {
        let t0 = Instant::now();
        let cost = objective(&next).unwrap_or(failure_cost);
        observed.push(next.clone());
        feats.push(feature.apply(&next));
        costs.push(cost);
        let best = trials
            .last()
            .map_or(cost, |t: &BoTrial| t.best_so_far.min(cost));
        trials.push(BoTrial {
            trial,
            params: next.clone(),
            cost,
            best_so_far: best,
        });

        if trial < settings.budget {
            let fit_seed = rng.random::<u64>();
            let cands = candidate_set(
                bounds,
                &observed,
                settings.n_uniform,
                settings.n_local,
                settings.local_sigma,
                &mut rng,
            );
            let cand_feats: Vec<Vec<f64>> = cands.iter().map(|c| feature.apply(c)).collect();
            let mut pool = feats.clone();
            pool.extend_from_slice(&cand_feats);
            let log_bounds = default_log_bounds(&feature_ranges(&pool), &costs);
            let prev = hyper.unwrap_or_else(|| default_hyper(&log_bounds));
            let fit = fit_hyperparams(&feats, &costs, settings.mean, &log_bounds, &prev, fit_seed);
            hyper = Some(fit.hyper.clone());
            let gp = GpState::fit(feats.clone(), costs.clone(), fit.hyper, settings.mean)?;
            let idx = acquire_next_features(&gp, &cand_feats, best);
            next = cands[idx].clone();
        }
        wall.push(t0.elapsed());
    }

    Ok(BoResult {
        kernel: feature.label().to_string(),
        seed: settings.seed,
        trials,
        wall,
    })
}
