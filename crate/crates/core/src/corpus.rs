//! Seeded corpora of coefficient fields and boundary data.

use crate::coeff::{self, CoefficientField, FamilyKind, FamilyParams};
use crate::error::Result;
use crate::grid::{self, BoundaryField, GridSpec};
use crate::linalg::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// `members` coefficients of one family, item `i` seeded by `item_seed(master_seed, i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub kind: FamilyKind,
    pub members: usize,
    #[serde(default)]
    pub params: FamilyParams,
    #[serde(default)]
    pub master_seed: u64,
}

impl CorpusSpec {
    pub fn seed(&self, index: usize) -> u64 {
        item_seed(self.master_seed, index as u64)
    }

    pub fn member(&self, grid: GridSpec, index: usize) -> Result<CoefficientField> {
        coeff::make_family(self.kind, &self.params, grid, self.seed(index))
    }

    pub fn build(&self, grid: GridSpec) -> Result<Vec<CoefficientField>> {
        (0..self.members).map(|i| self.member(grid, i)).collect()
    }
}

/// SplitMix64 mix of `(master, index)`.
pub fn item_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random mean-zero complex trigonometric polynomial with `|k|∞ ≤ bandwidth`,
/// coefficients decaying like `1/|k|`. Independent of `N` for `N > 2·bandwidth`.
pub fn random_smooth_scalar(grid: GridSpec, bandwidth: i64, seed: u64) -> BoundaryField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![c64::new(0.0, 0.0); grid.total()];
    let ks: Vec<[i64; 2]> = if grid.dim == 1 {
        (-bandwidth..=bandwidth).map(|a| [a, 0]).collect()
    } else {
        (-bandwidth..=bandwidth).flat_map(|a| (-bandwidth..=bandwidth).map(move |b| [a, b])).collect()
    };
    for k in ks {
        if k == [0, 0] {
            continue;
        }
        let mag = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        let z = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / mag;
        values[grid.flat_of(k)] += z;
    }
    let modes = values[1..].to_vec();
    grid::scalar_from_modes(grid, &modes)
}

/// Real-valued variant of [`random_smooth_scalar`] in physical representation.
pub fn random_real_scalar(grid: GridSpec, bandwidth: i64, seed: u64) -> BoundaryField {
    random_smooth_scalar(grid, bandwidth, seed).to_physical().map_values(|z| c64::new(z.re, 0.0))
}

/// Random V-coordinate vector made of two smooth scalars.
pub fn random_vcoords(grid: GridSpec, bandwidth: i64, seed: u64) -> Vec<c64> {
    let a = grid::modes_of(&random_smooth_scalar(grid, bandwidth, seed), 0);
    let b = grid::modes_of(&random_smooth_scalar(grid, bandwidth, item_seed(seed, 1)), 0);
    a.into_iter().chain(b).collect()
}

/// Random V-coordinate vector with independent Gaussian-like entries in every mode.
pub fn random_dense_vcoords(grid: GridSpec, seed: u64) -> Vec<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..grid.h0_dim()).map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Random real stream function (`n = 2`) for divergence-free perturbations.
pub fn random_stream_function(grid: GridSpec, bandwidth: i64, seed: u64) -> BoundaryField {
    random_real_scalar(grid, bandwidth, seed)
}
