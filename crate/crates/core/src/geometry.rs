//! Binary parallel-beam projection matrices on square and cubic grids.
//!
//! Each direction partitions the pixels into rays; a row of the matrix is
//! the indicator of one ray. Rows are grouped by direction and ordered by
//! increasing ray index inside a group.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// 2D directions in the order they are added: 90°, 0°, ∓45°, ∓arctan 2, ∓arctan ½.
pub const DIRECTIONS_2D: [[i64; 2]; 8] = [
    [0, 1],
    [1, 0],
    [1, 1],
    [1, -1],
    [1, 2],
    [1, -2],
    [2, 1],
    [2, -1],
];

pub const AXIS_DIRECTIONS_3D: [[i64; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

pub const DIAGONAL_DIRECTIONS_3D: [[i64; 3]; 4] =
    [[1, 1, 0], [1, -1, 0], [1, 0, 1], [1, 0, -1]];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionGeometry {
    pub dim: usize,
    pub d: usize,
    pub num_dirs: usize,
    pub directions: Vec<Vec<i64>>,
}

impl ProjectionGeometry {
    pub fn new(dim: usize, d: usize, num_dirs: usize) -> Result<Self> {
        let directions: Vec<Vec<i64>> = match dim {
            2 => {
                if d < 4 {
                    return Err(Error::invalid(format!("2D projections need d >= 4, got {d}")));
                }
                if !(3..=8).contains(&num_dirs) {
                    return Err(Error::invalid(format!(
                        "2D projections use 3 to 8 directions, got {num_dirs}"
                    )));
                }
                DIRECTIONS_2D[..num_dirs].iter().map(|v| v.to_vec()).collect()
            }
            3 => {
                if d < 2 {
                    return Err(Error::invalid(format!("3D projections need d >= 2, got {d}")));
                }
                match num_dirs {
                    3 => AXIS_DIRECTIONS_3D.iter().map(|v| v.to_vec()).collect(),
                    4 => DIAGONAL_DIRECTIONS_3D.iter().map(|v| v.to_vec()).collect(),
                    _ => {
                        return Err(Error::invalid(format!(
                            "3D projections use 3 or 4 directions, got {num_dirs}"
                        )))
                    }
                }
            }
            _ => return Err(Error::invalid(format!("dimension must be 2 or 3, got {dim}"))),
        };
        Ok(ProjectionGeometry {
            dim,
            d,
            num_dirs,
            directions,
        })
    }

    pub fn n(&self) -> usize {
        self.d.pow(self.dim as u32)
    }

    /// Number of rays for each direction.
    pub fn ray_counts(&self) -> Vec<usize> {
        let d = self.d;
        (0..self.num_dirs)
            .map(|k| match (self.dim, self.num_dirs, k) {
                (2, _, 0 | 1) => d,
                (2, _, 2 | 3) => 2 * d - 1,
                (2, _, _) => d + d / 2,
                (3, 3, _) => d * d,
                _ => d * (2 * d - 1),
            })
            .collect()
    }

    /// Total number of rays, i.e. the row count of the projection matrix.
    pub fn num_rays(&self) -> usize {
        self.ray_counts().iter().sum()
    }

    /// Ray index of the pixel at `c` for direction number `k`.
    fn ray(&self, k: usize, c: [usize; 3]) -> usize {
        let d = self.d as i64;
        let [i, j, l] = c.map(|x| x as i64);
        let t = match (self.dim, self.num_dirs, k) {
            (2, _, 0) => i,
            (2, _, 1) => j,
            (2, _, 2) => i - j + d - 1,
            (2, _, 3) => i + j,
            // strips of two adjacent digital lines
            (2, _, 4) => (2 * i - j + d).div_euclid(2),
            (2, _, 5) => (2 * i + j + 1).div_euclid(2),
            (2, _, 6) => (2 * j - i + d).div_euclid(2),
            (2, _, 7) => (2 * j + i + 1).div_euclid(2),
            (3, 3, 0) => j * d + l,
            (3, 3, 1) => i * d + l,
            (3, 3, 2) => i * d + j,
            (3, 4, 0) => (i - j + d - 1) * d + l,
            (3, 4, 1) => (i + j) * d + l,
            (3, 4, 2) => (i - l + d - 1) * d + j,
            (3, 4, 3) => (i + l) * d + j,
            _ => unreachable!("direction index checked at construction"),
        };
        t as usize
    }

    pub fn build(&self) -> SparseMatrix {
        let d = self.d;
        let n = self.n();
        let counts = self.ray_counts();
        let nrows: usize = counts.iter().sum();
        // counting sort of the pixels by ray; pixels are visited in
        // increasing order, so every row comes out sorted
        let mut indptr = vec![0usize; nrows + 1];
        let mut rays = vec![0usize; n * self.num_dirs];
        let mut offset = 0;
        for (k, &count) in counts.iter().enumerate() {
            for v in 0..n {
                let c = if self.dim == 2 {
                    [v / d, v % d, 0]
                } else {
                    [v / (d * d), (v / d) % d, v % d]
                };
                let t = self.ray(k, c);
                debug_assert!(t < count);
                rays[k * n + v] = offset + t;
                indptr[offset + t + 1] += 1;
            }
            offset += count;
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        let mut next = indptr.clone();
        let mut indices = vec![0usize; n * self.num_dirs];
        for k in 0..self.num_dirs {
            for v in 0..n {
                let r = rays[k * n + v];
                indices[next[r]] = v;
                next[r] += 1;
            }
        }
        let values = vec![1.0; indices.len()];
        SparseMatrix::from_csr_parts(nrows, n, indptr, indices, values)
    }
}

/// Row count for `num_dirs` directions on a `d × d` grid, written the way it
/// is usually tabulated.
pub fn table_rows_2d(d: usize, num_dirs: usize) -> usize {
    let h = d / 2;
    match num_dirs {
        3 => 4 * d - 1,
        4 => 6 * d - 2,
        5 => 7 * d + h - 2,
        6 => 8 * d + 2 * h - 2,
        7 => 9 * d + 3 * h - 2,
        8 => 10 * d + 4 * h - 2,
        _ => panic!("no row formula for {num_dirs} directions"),
    }
}

pub fn table_rows_3d(d: usize, num_dirs: usize) -> usize {
    match num_dirs {
        3 => 3 * d * d,
        4 => 8 * d * d - 4 * d,
        _ => panic!("no row formula for {num_dirs} directions"),
    }
}

pub fn build_projection_2d(d: usize, num_dirs: usize) -> Result<SparseMatrix> {
    Ok(ProjectionGeometry::new(2, d, num_dirs)?.build())
}

pub fn build_projection_3d(d: usize, num_dirs: usize) -> Result<SparseMatrix> {
    Ok(ProjectionGeometry::new(3, d, num_dirs)?.build())
}

/// How the nonzero entries of a projection matrix are randomized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum Perturbation {
    /// Every nonzero becomes an independent uniform draw from `(lo, hi)`.
    Interval { lo: f64, hi: f64 },
    /// Every nonzero moves by a uniform draw from `[-eps, eps]`, then each
    /// column is scaled to unit Euclidean length.
    Epsilon { eps: f64 },
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation::Interval { lo: 0.9, hi: 1.1 }
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::Interval { lo, hi } => write!(f, "interval:{lo},{hi}"),
            Perturbation::Epsilon { eps } => write!(f, "epsilon:{eps}"),
        }
    }
}

impl FromStr for Perturbation {
    type Err = Error;

    /// Parses `interval:LO,HI` or `epsilon:EPS`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected SCHEME:ARGS, got '{s}'")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("'{args}': {e}")))?;
        match (kind, nums.as_slice()) {
            ("interval", &[lo, hi]) => Ok(Perturbation::Interval { lo, hi }),
            ("epsilon", &[eps]) => Ok(Perturbation::Epsilon { eps }),
            _ => Err(Error::Parse(format!("unknown perturbation '{s}'"))),
        }
    }
}

/// Randomizes the nonzero entries of `a`, keeping its sparsity pattern.
pub fn perturb(a: &SparseMatrix, seed: u64, scheme: Perturbation) -> Result<SparseMatrix> {
    if a.values().iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("perturbation expects a nonnegative matrix"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match scheme {
        Perturbation::Interval { lo, hi } => {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::invalid(format!("empty interval ({lo}, {hi})")));
            }
            if lo <= 0.0 {
                return Err(Error::invalid("interval must lie above zero to keep the pattern"));
            }
            Ok(a.map_entries(|_, _, _| {
                if lo == hi {
                    return lo;
                }
                loop {
                    let x = rng.random_range(lo..hi);
                    if x > lo {
                        return x;
                    }
                }
            }))
        }
        Perturbation::Epsilon { eps } => {
            let min = a.values().iter().copied().fold(f64::INFINITY, f64::min);
            if !(eps >= 0.0) || eps >= min {
                return Err(Error::invalid(format!(
                    "eps = {eps} must be nonnegative and below the smallest entry {min}"
                )));
            }
            let shifted = a.map_entries(|_, _, v| {
                if eps == 0.0 {
                    v
                } else {
                    v + rng.random_range(-eps..=eps)
                }
            });
            let norms = shifted.col_norms();
            Ok(shifted.map_entries(|_, j, v| v / norms[j]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        let a = build_projection_2d(6, 3).unwrap();
        assert_eq!(a.shape(), (23, 36));
        assert_eq!(build_projection_2d(6, 8).unwrap().nrows(), 70);
        assert_eq!(build_projection_2d(5, 5).unwrap().nrows(), 35);
        let a = build_projection_3d(5, 3).unwrap();
        assert_eq!(a.nrows(), 75);
        assert!(a.row_sums().iter().all(|&s| s == 5.0));
        assert_eq!(build_projection_3d(5, 4).unwrap().nrows(), 180);
        assert_eq!(build_projection_3d(2, 3).unwrap().shape(), (12, 8));
    }

    #[test]
    fn rows_match_formulas() {
        for d in 4..20 {
            for k in 3..=8 {
                let g = ProjectionGeometry::new(2, d, k).unwrap();
                assert_eq!(g.num_rays(), table_rows_2d(d, k), "d={d} k={k}");
            }
        }
        for d in 2..8 {
            for k in 3..=4 {
                let g = ProjectionGeometry::new(3, d, k).unwrap();
                assert_eq!(g.num_rays(), table_rows_3d(d, k));
            }
        }
    }

    #[test]
    fn every_ray_is_hit_and_columns_sum_to_dirs() {
        for (dim, d, k) in [(2, 7, 8), (2, 8, 8), (3, 4, 3), (3, 5, 4)] {
            let a = ProjectionGeometry::new(dim, d, k).unwrap().build();
            assert!(a.is_binary());
            assert!(a.row_sums().iter().all(|&s| s >= 1.0), "empty ray");
            assert!(a.col_sums().iter().all(|&s| s == k as f64));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_projection_2d(3, 3).is_err());
        assert!(build_projection_2d(8, 9).is_err());
        assert!(build_projection_3d(4, 5).is_err());
        assert!(build_projection_3d(1, 3).is_err());
    }

    #[test]
    fn perturbation_schemes() {
        let a = build_projection_2d(6, 4).unwrap();
        assert_eq!(perturb(&a, 1, Perturbation::Interval { lo: 1.0, hi: 1.0 }).unwrap(), a);
        let p = perturb(&a, 1, Perturbation::default()).unwrap();
        assert_eq!(p.nnz(), a.nnz());
        assert!(p.values().iter().all(|&v| v > 0.9 && v < 1.1));
        assert!(p.triplets().zip(a.triplets()).all(|(x, y)| (x.0, x.1) == (y.0, y.1)));
        assert_eq!(p, perturb(&a, 1, Perturbation::default()).unwrap());
        let e = perturb(&a, 2, Perturbation::Epsilon { eps: 0.1 }).unwrap();
        assert!(e.col_norms().iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert!(perturb(&a, 0, Perturbation::Interval { lo: 1.1, hi: 0.9 }).is_err());
        assert!(perturb(&a, 0, Perturbation::Epsilon { eps: 1.0 }).is_err());
    }

    #[test]
    fn parse_scheme() {
        assert_eq!(
            "interval:0.9,1.1".parse::<Perturbation>().unwrap(),
            Perturbation::Interval { lo: 0.9, hi: 1.1 }
        );
        assert_eq!(
            "epsilon:0.05".parse::<Perturbation>().unwrap(),
            Perturbation::Epsilon { eps: 0.05 }
        );
        assert!("gauss:1".parse::<Perturbation>().is_err());
    }
}
