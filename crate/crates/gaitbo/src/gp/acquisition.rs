//! Expected Improvement and candidate-set maximization.

use rand::Rng;
use statrs::function::erf::erfc;

use crate::gp::kernel::FeatureMap;
use crate::gp::state::GpState;
use crate::sim::Bounds;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement below `best` for a posterior (mu, var), under the
/// minimization convention. Degenerate variance reduces to the hard
/// improvement max(0, best - mu).
pub fn expected_improvement(mu: f64, var: f64, best: f64) -> f64 {
    let sigma = var.max(0.0).sqrt();
    if sigma < 1e-12 {
        return (best - mu).max(0.0);
    }
    let z = (best - mu) / sigma;
    ((best - mu) * std_normal_cdf(z) + sigma * std_normal_pdf(z)).max(0.0)
}

/// Seeded candidate pool: `n_uniform` points uniform over the bounds,
/// then `n_local` Gaussian perturbations (scaled per dimension) around
/// every observed point, clamped into the box. Uniform candidates come
/// first so the tie rule favors them.
pub fn candidate_set<R: Rng>(
    bounds: &Bounds,
    observed: &[Vec<f64>],
    n_uniform: usize,
    n_local: usize,
    local_sigma: f64,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n_uniform + observed.len() * n_local);
    for _ in 0..n_uniform {
        out.push(bounds.sample_uniform(rng));
    }
    let span = bounds.span();
    for x in observed {
        for _ in 0..n_local {
            let mut p: Vec<f64> = x
                .iter()
                .zip(&span)
                .map(|(v, s)| {
                    // Box-Muller, one draw per coordinate
                    let u1: f64 = rng.random::<f64>().max(1e-300);
                    let u2: f64 = rng.random();
                    let g = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                    v + local_sigma * s * g
                })
                .collect();
            bounds.clamp(&mut p);
            out.push(p);
        }
    }
    out
}

/// Index of the EI-maximizing candidate, scored on already-mapped
/// features; exact ties keep the lowest index.
pub fn acquire_next_features(gp: &GpState, features: &[Vec<f64>], best: f64) -> usize {
    assert!(!features.is_empty(), "empty candidate set");
    let mut best_i = 0;
    let mut best_ei = f64::NEG_INFINITY;
    for (i, feat) in features.iter().enumerate() {
        let (mu, var) = gp.posterior(feat);
        let ei = expected_improvement(mu, var, best);
        if ei > best_ei {
            best_ei = ei;
            best_i = i;
        }
    }
    best_i
}

/// Index of the EI-maximizing candidate; exact ties keep the lowest index.
pub fn acquire_next(
    gp: &GpState,
    feature: &FeatureMap,
    candidates: &[Vec<f64>],
    best: f64,
) -> usize {
    assert!(!candidates.is_empty(), "empty candidate set");
    let feats: Vec<Vec<f64>> = candidates.iter().map(|c| feature.apply(c)).collect();
    acquire_next_features(gp, &feats, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use crate::gp::kernel::Hyper;
    use crate::gp::state::MeanPolicy;

    #[test]
    fn at_the_incumbent_ei_is_the_normal_density() {
        let ei = expected_improvement(5.0, 1.0, 5.0);
        assert!((ei - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((ei - 0.398942).abs() < 1e-6);
    }

    #[test]
    fn degenerate_sigma_reduces_to_hard_improvement() {
        assert_eq!(expected_improvement(6.0, 0.0, 5.0), 0.0);
        assert_eq!(expected_improvement(2.0, 0.0, 5.0), 3.0);
        assert_eq!(expected_improvement(2.0, 1e-30, 5.0), 3.0);
    }

    #[test]
    fn ei_is_nonnegative_and_increasing_in_sigma() {
        let mut prev = 0.0;
        for sigma in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0] {
            let ei = expected_improvement(7.0, sigma * sigma, 5.0);
            assert!(ei >= prev, "EI not monotone at sigma {sigma}");
            prev = ei;
        }
        for mu in [-3.0, 0.0, 4.9, 5.0, 5.1, 50.0] {
            assert!(expected_improvement(mu, 2.0, 5.0) >= 0.0);
        }
    }

    #[test]
    fn ei_matches_its_integral_meaning_roughly() {
        // trapezoid quadrature of E[max(0, best - Y)] for Y ~ N(mu, var)
        let (mu, var, best) = (4.0f64, 2.25f64, 5.0f64);
        let sigma = var.sqrt();
        let mut acc = 0.0;
        let m = 40000;
        for i in 0..m {
            let z = -8.0 + 16.0 * (i as f64 + 0.5) / m as f64;
            let y = mu + sigma * z;
            acc += (best - y).max(0.0) * std_normal_pdf(z) * (16.0 / m as f64);
        }
        assert!((expected_improvement(mu, var, best) - acc).abs() < 1e-6);
    }

    fn tiny_gp() -> GpState {
        GpState::fit(
            vec![vec![0.0], vec![2.0]],
            vec![1.0, 3.0],
            Hyper::new(1.0, vec![1.0], 1e-6).unwrap(),
            MeanPolicy::Zero,
        )
        .unwrap()
    }

    #[test]
    fn single_candidate_is_chosen() {
        let gp = tiny_gp();
        let cands = vec![vec![5.0]];
        assert_eq!(acquire_next(&gp, &FeatureMap::Identity, &cands, 1.0), 0);
    }

    #[test]
    fn exact_ties_keep_the_lowest_index() {
        let gp = tiny_gp();
        // symmetric candidates have identical EI by construction
        let cands = vec![vec![-7.0], vec![9.0], vec![-7.0]];
        let i = acquire_next(&gp, &FeatureMap::Identity, &cands, 1.0);
        assert_eq!(i, 0);
    }

    #[test]
    fn argmax_agrees_with_brute_force() {
        let gp = tiny_gp();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let bounds = Bounds::new(vec![-4.0], vec![6.0]).unwrap();
        let cands = candidate_set(&bounds, &[vec![0.0], vec![2.0]], 200, 4, 0.05, &mut rng);
        let chosen = acquire_next(&gp, &FeatureMap::Identity, &cands, 1.0);
        let ei_of = |c: &Vec<f64>| {
            let (mu, var) = gp.posterior(c);
            expected_improvement(mu, var, 1.0)
        };
        for (i, c) in cands.iter().enumerate() {
            let (a, b) = (ei_of(c), ei_of(&cands[chosen]));
            assert!(a < b || (a == b && chosen <= i), "candidate {i} beats choice");
        }
    }

    #[test]
    fn candidate_set_layout_and_bounds() {
        let bounds = Bounds::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let obs = vec![vec![0.5, 0.0], vec![0.99, 0.99]];
        let cands = candidate_set(&bounds, &obs, 50, 8, 0.05, &mut rng);
        assert_eq!(cands.len(), 50 + 2 * 8);
        assert!(cands.iter().all(|c| bounds.contains(c)));
        // local perturbations cluster near their anchors
        for c in &cands[50..58] {
            assert!((c[0] - 0.5).abs() < 0.2 && c[1].abs() < 0.4);
        }
    }

    #[test]
    fn candidate_set_is_seed_deterministic() {
        let bounds = Bounds::new(vec![0.0], vec![1.0]).unwrap();
        let a = candidate_set(&bounds, &[], 20, 0, 0.05, &mut ChaCha20Rng::seed_from_u64(9));
        let b = candidate_set(&bounds, &[], 20, 0, 0.05, &mut ChaCha20Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}
