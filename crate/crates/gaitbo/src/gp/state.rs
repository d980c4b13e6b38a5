//! GP conditioning and posterior queries.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::gp::kernel::{kernel_features, Hyper};

/// Offset subtracted from observations before conditioning. `Median` keeps
/// the posterior honest when most early samples sit on the fall-cost
/// plateau; `Zero` is the textbook prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanPolicy {
    Zero,
    Median,
}

impl MeanPolicy {
    pub fn offset(&self, y: &[f64]) -> f64 {
        match self {
            MeanPolicy::Zero => 0.0,
            MeanPolicy::Median => median(y),
        }
    }
}

fn median(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let mut s = y.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Jitter escalation: relative steps tried on top of the noise diagonal
/// when the factorization fails.
const JITTER_FIRST: f64 = 1e-10;
const JITTER_LAST: f64 = 1e-4;

/// A GP conditioned on feature-space observations, holding the Cholesky
/// factor of (K + noise2 I) and the precomputed weight vector.
#[derive(Debug, Clone)]
pub struct GpState {
    pub features: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub hyper: Hyper,
    pub mean_offset: f64,
    /// Relative jitter that made the factorization succeed (0 when none
    /// was needed).
    pub jitter: f64,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
}

impl GpState {
    /// Conditions on `(features, y)`. Escalates diagonal jitter from 1e-10
    /// to 1e-4 of the mean diagonal before giving up.
    pub fn fit(
        features: Vec<Vec<f64>>,
        y: Vec<f64>,
        hyper: Hyper,
        policy: MeanPolicy,
    ) -> Result<Self> {
        hyper.validate()?;
        if features.len() != y.len() {
            return Err(Error::config("feature rows and observations differ in count"));
        }
        if features.iter().any(|f| f.len() != hyper.length.len()) {
            return Err(Error::config("feature width does not match length scales"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite observation in GP data".into()));
        }
        let offset = policy.offset(&y);
        let n = y.len();
        if n == 0 {
            return Ok(GpState {
                features,
                y,
                hyper,
                mean_offset: offset,
                jitter: 0.0,
                chol: None,
                alpha: DVector::zeros(0),
            });
        }

        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let k = kernel_features(&hyper, &features[i], &features[j]);
                gram[(i, j)] = k;
                gram[(j, i)] = k;
            }
        }
        let mean_diag = gram.trace() / n as f64 + hyper.noise2;

        let mut jitter_rel = 0.0;
        let chol = loop {
            let mut k = gram.clone();
            let bump = hyper.noise2 + jitter_rel * mean_diag;
            for i in 0..n {
                k[(i, i)] += bump;
            }
            match Cholesky::new(k) {
                Some(c) => break c,
                None => {
                    jitter_rel = if jitter_rel == 0.0 {
                        JITTER_FIRST
                    } else {
                        jitter_rel * 10.0
                    };
                    if jitter_rel > JITTER_LAST {
                        return Err(Error::Numerical(format!(
                            "kernel matrix not positive definite at jitter {JITTER_LAST:.0e}"
                        )));
                    }
                }
            }
        };

        let centered = DVector::from_iterator(n, y.iter().map(|v| v - offset));
        let alpha = chol.solve(&centered);
        Ok(GpState {
            features,
            y,
            hyper,
            mean_offset: offset,
            jitter: jitter_rel,
            chol: Some(chol),
            alpha,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Log marginal likelihood of the centered observations under the
    /// current hyperparameters.
    pub fn log_marginal(&self) -> f64 {
        let n = self.len();
        if n == 0 {
            return 0.0;
        }
        let chol = self.chol.as_ref().unwrap();
        let centered = DVector::from_iterator(n, self.y.iter().map(|v| v - self.mean_offset));
        let quad = centered.dot(&self.alpha);
        let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * quad - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    /// Posterior mean and latent variance at a feature point. With no
    /// observations this is the prior. Variance is clamped at zero.
    pub fn posterior(&self, feat: &[f64]) -> (f64, f64) {
        let n = self.len();
        if n == 0 {
            return (self.mean_offset, self.hyper.signal2);
        }
        let k_star = DVector::from_iterator(
            n,
            self.features
                .iter()
                .map(|f| kernel_features(&self.hyper, f, feat)),
        );
        let mu = self.mean_offset + k_star.dot(&self.alpha);
        let v = self.chol.as_ref().unwrap().solve(&k_star);
        let var = self.hyper.signal2 - k_star.dot(&v);
        (mu, var.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn se1(noise2: f64) -> Hyper {
        Hyper::new(1.0, vec![1.0], noise2).unwrap()
    }

    #[test]
    fn empty_state_returns_prior() {
        let gp = GpState::fit(vec![], vec![], se1(0.0), MeanPolicy::Zero).unwrap();
        assert_eq!(gp.posterior(&[3.0]), (0.0, 1.0));
    }

    #[test]
    fn interpolates_a_noise_free_observation() {
        let gp = GpState::fit(vec![vec![0.0]], vec![1.0], se1(0.0), MeanPolicy::Zero).unwrap();
        let (mu, var) = gp.posterior(&[0.0]);
        assert!((mu - 1.0).abs() < 1e-12);
        assert!(var < 1e-12);
    }

    #[test]
    fn posterior_one_length_scale_away_matches_hand_values() {
        let gp = GpState::fit(vec![vec![0.0]], vec![1.0], se1(0.0), MeanPolicy::Zero).unwrap();
        let (mu, var) = gp.posterior(&[1.0]);
        assert!((mu - (-0.5f64).exp()).abs() < 1e-12, "mu {mu}");
        assert!((var - (1.0 - (-1.0f64).exp())).abs() < 1e-12, "var {var}");
        assert!((mu - 0.606531).abs() < 1e-6);
        assert!((var - 0.632121).abs() < 1e-6);
    }

    #[test]
    fn median_centering_shifts_the_far_field() {
        let feats = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![10.0, 11.0, 30.0];
        let gp = GpState::fit(feats, y, se1(1e-6), MeanPolicy::Median).unwrap();
        assert_eq!(gp.mean_offset, 11.0);
        // far from every observation the posterior falls back to the median
        let (mu, var) = gp.posterior(&[100.0]);
        assert!((mu - 11.0).abs() < 1e-9);
        assert!((var - 1.0).abs() < 1e-9);
    }

    #[test]
    fn even_count_median_averages_the_middle_pair() {
        let gp = GpState::fit(
            vec![vec![0.0], vec![5.0], vec![10.0], vec![15.0]],
            vec![4.0, 8.0, 2.0, 100.0],
            se1(1e-6),
            MeanPolicy::Median,
        )
        .unwrap();
        assert_eq!(gp.mean_offset, 6.0);
    }

    #[test]
    fn variance_at_training_points_stays_within_noise() {
        let feats: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 * 0.1, (i % 7) as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let noise2 = 1e-4;
        let hyper = Hyper::new(2.0, vec![0.5, 1.5], noise2).unwrap();
        let gp = GpState::fit(feats.clone(), y, hyper, MeanPolicy::Median).unwrap();
        for f in &feats {
            let (_, var) = gp.posterior(f);
            assert!(var <= noise2 + 1e-8, "var {var} at {f:?}");
        }
    }

    #[test]
    fn duplicate_points_trigger_jitter_not_failure() {
        // identical rows with zero noise make the Gram matrix singular
        let feats = vec![vec![1.0], vec![1.0], vec![2.0]];
        let y = vec![3.0, 3.0, 4.0];
        let gp = GpState::fit(feats, y, se1(0.0), MeanPolicy::Zero).unwrap();
        assert!(gp.jitter > 0.0);
        let (mu, _) = gp.posterior(&[1.0]);
        assert!((mu - 3.0).abs() < 1e-3);
    }

    #[test]
    fn non_finite_observations_are_rejected() {
        let r = GpState::fit(vec![vec![0.0]], vec![f64::NAN], se1(0.0), MeanPolicy::Zero);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }

    #[test]
    fn mismatched_widths_are_rejected() {
        let r = GpState::fit(
            vec![vec![0.0, 1.0]],
            vec![1.0],
            se1(0.0),
            MeanPolicy::Zero,
        );
        assert!(r.is_err());
    }
}
