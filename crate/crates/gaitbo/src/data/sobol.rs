use crate::error::{Error, Result};
use crate::sim::Bounds;

/// Highest supported dimension of the direction-number table.
pub const MAX_DIM: usize = 16;

/// Primitive polynomial degree, coefficient mask, and initial direction
/// values per dimension past the first.
const POLYS: [(u32, u32, &[u32]); 15] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

const BITS: usize = 32;

/// Gray-code Sobol sequence over the unit cube.  The all-zero first point of
/// the raw sequence is skipped, so every emitted coordinate is strictly
/// inside (0, 1).
pub struct SobolSeq {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl SobolSeq {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::config(format!(
                "sobol dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        let mut directions = Vec::with_capacity(dim);
        let mut first = [0u32; BITS];
        for (k, slot) in first.iter_mut().enumerate() {
            *slot = 1 << (BITS - 1 - k);
        }
        directions.push(first);
        for &(s, a, m) in POLYS.iter().take(dim - 1) {
            let s = s as usize;
            let mut v = [0u32; BITS];
            for k in 0..s {
                v[k] = m[k] << (BITS - 1 - k);
            }
            for k in s..BITS {
                v[k] = v[k - s] ^ (v[k - s] >> s);
                for i in 1..s {
                    if (a >> (s - 1 - i)) & 1 == 1 {
                        v[k] ^= v[k - i];
                    }
                }
            }
            directions.push(v);
        }
        Ok(SobolSeq {
            state: vec![0; directions.len()],
            directions,
            index: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    /// Next point in the unit cube.
    pub fn next_point(&mut self) -> Vec<f64> {
        // Gray-code update: flip the direction given by the lowest zero bit
        // of the running index.
        let bit = self.index.trailing_ones() as usize;
        self.index += 1;
        let scale = 1.0 / (1u64 << BITS) as f64;
        self.state
            .iter_mut()
            .zip(&self.directions)
            .map(|(s, v)| {
                *s ^= v[bit];
                *s as f64 * scale
            })
            .collect()
    }
}

/// First `n` Sobol points mapped into `bounds`.
pub fn sobol_grid(bounds: &Bounds, n: usize) -> Result<Vec<Vec<f64>>> {
    bounds.validate()?;
    let mut seq = SobolSeq::new(bounds.dim())?;
    Ok((0..n).map(|_| bounds.lerp(&seq.next_point())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_prefix() {
        let b = Bounds::new(vec![0.0], vec![1.0]).unwrap();
        let pts = sobol_grid(&b, 3).unwrap();
        assert_eq!(pts, vec![vec![0.5], vec![0.75], vec![0.25]]);
    }

    #[test]
    fn points_stay_strictly_inside() {
        let b = Bounds::new(vec![-2.0; MAX_DIM], vec![3.0; MAX_DIM]).unwrap();
        for p in sobol_grid(&b, 2000).unwrap() {
            for &x in &p {
                assert!(x > -2.0 && x < 3.0);
            }
        }
    }

    #[test]
    fn every_axis_is_dyadically_stratified() {
        // the first 2^k points of a proper Sobol sequence put exactly one
        // point in each length 2^-k dyadic bin of every axis
        let k = 5usize;
        let n = 1 << k;
        let mut seq = SobolSeq::new(MAX_DIM).unwrap();
        let mut counts = vec![vec![0usize; n]; MAX_DIM];
        // the skipped zero point belongs to the first block, so include it
        for (axis, c) in counts.iter_mut().enumerate() {
            let _ = axis;
            c[0] += 1;
        }
        for _ in 0..n - 1 {
            let p = seq.next_point();
            for (axis, &x) in p.iter().enumerate() {
                counts[axis][(x * n as f64) as usize] += 1;
            }
        }
        for (axis, c) in counts.iter().enumerate() {
            assert!(
                c.iter().all(|&v| v == 1),
                "axis {axis} not stratified: {c:?}"
            );
        }
    }

    #[test]
    fn discrepancy_beats_random_sampling() {
        use rand::{Rng, SeedableRng};

        fn star_discrepancy_1d(mut xs: Vec<f64>) -> f64 {
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = xs.len() as f64;
            xs.iter()
                .enumerate()
                .map(|(i, &x)| {
                    let hi = (i as f64 + 1.0) / n - x;
                    let lo = x - i as f64 / n;
                    hi.max(lo)
                })
                .fold(0.0, f64::max)
        }

        let n = 512;
        let b = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let sobol = sobol_grid(&b, n).unwrap();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(11);
        for axis in 0..2 {
            let d_sobol = star_discrepancy_1d(sobol.iter().map(|p| p[axis]).collect());
            let uniform: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let d_uniform = star_discrepancy_1d(uniform);
            assert!(
                d_sobol < d_uniform,
                "axis {axis}: sobol {d_sobol} vs uniform {d_uniform}"
            );
        }
    }

    #[test]
    fn sequence_is_deterministic() {
        let b = Bounds::new(vec![0.1, -1.0, 5.0], vec![0.4, 1.0, 9.0]).unwrap();
        assert_eq!(sobol_grid(&b, 100).unwrap(), sobol_grid(&b, 100).unwrap());
    }

    #[test]
    fn dimension_limit_enforced() {
        assert!(SobolSeq::new(0).is_err());
        assert!(SobolSeq::new(MAX_DIM + 1).is_err());
        SobolSeq::new(MAX_DIM).unwrap();
    }
}
