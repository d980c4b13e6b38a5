use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::config::{GroundProfile, PerturbationFactors};

/// Scale range for mass, inertia, and CoM offset perturbations.
pub const SCALE_LO: f64 = 0.85;
pub const SCALE_HI: f64 = 1.15;

/// Rough ground segment length range [m].
pub const SEGMENT_LEN_LO: f64 = 0.3;
pub const SEGMENT_LEN_HI: f64 = 1.0;

/// Rough ground height magnitude bound [m].
pub const HEIGHT_MAX: f64 = 0.06;

/// Draw plant perturbation factors for one seed.  Draw order is mass,
/// inertia, CoM offset; each is uniform in `[SCALE_LO, SCALE_HI)`.
pub fn perturbation_factors(seed: u64) -> PerturbationFactors {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha20Rng| SCALE_LO + (SCALE_HI - SCALE_LO) * rng.random::<f64>();
    PerturbationFactors {
        mass_scale: draw(&mut rng),
        inertia_scale: draw(&mut rng),
        com_scale: draw(&mut rng),
    }
}

/// Piecewise-constant rough ground out to `extent` meters.  Seed 0 is
/// reserved for flat ground.  The region behind `x = 0.3` stays flat so the
/// walker always starts on level footing; from there segment lengths are
/// uniform in `[SEGMENT_LEN_LO, SEGMENT_LEN_HI)` and heights uniform in
/// `[-HEIGHT_MAX, HEIGHT_MAX)`, drawn length-then-height per segment.
pub fn rough_ground(seed: u64, extent: f64) -> GroundProfile {
    if seed == 0 {
        return GroundProfile::flat();
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut breaks = vec![(f64::NEG_INFINITY, 0.0)];
    let mut x = 0.3;
    while x < extent {
        let len = SEGMENT_LEN_LO + (SEGMENT_LEN_HI - SEGMENT_LEN_LO) * rng.random::<f64>();
        let h = HEIGHT_MAX * (2.0 * rng.random::<f64>() - 1.0);
        breaks.push((x, h));
        x += len;
    }
    GroundProfile::from_breaks(breaks).expect("generated breakpoints are ordered")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_are_deterministic_per_seed() {
        let a = perturbation_factors(42);
        let b = perturbation_factors(42);
        assert_eq!(a, b);
        let c = perturbation_factors(43);
        assert_ne!(a, c);
    }

    #[test]
    fn factors_stay_in_range() {
        for seed in 0..500 {
            let f = perturbation_factors(seed);
            for s in [f.mass_scale, f.inertia_scale, f.com_scale] {
                assert!((SCALE_LO..SCALE_HI).contains(&s), "seed {seed}: {s}");
            }
        }
    }

    #[test]
    fn ground_seed_zero_is_flat() {
        let g = rough_ground(0, 30.0);
        assert!(g.is_flat());
        assert_eq!(g.height(7.3), 0.0);
    }

    #[test]
    fn ground_segments_respect_bounds() {
        for seed in 1..100 {
            let g = rough_ground(seed, 25.0);
            let breaks = g.breaks();
            assert!(breaks.len() > 20, "expected many segments, got {}", breaks.len());
            for w in breaks.windows(2).skip(1) {
                let len = w[1].0 - w[0].0;
                assert!((SEGMENT_LEN_LO..SEGMENT_LEN_HI).contains(&len));
            }
            for &(_, h) in &breaks[1..] {
                assert!(h.abs() < HEIGHT_MAX);
            }
        }
    }

    #[test]
    fn ground_start_region_is_level() {
        for seed in 1..50 {
            let g = rough_ground(seed, 25.0);
            assert_eq!(g.height(0.0), 0.0);
            assert_eq!(g.height(0.29), 0.0);
        }
    }
}
