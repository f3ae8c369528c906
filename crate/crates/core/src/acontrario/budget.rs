use serde::{Deserialize, Serialize};

use crate::imaging::Pyramid;

/// Number of tests `N = N_k · N_ch · Σ_s |Ω_s|` shared by every pixel test of a frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestBudget {
    pub n_kernels: usize,
    pub n_channels: usize,
    pub pixel_counts: Vec<usize>,
    pub total: u64,
}

impl TestBudget {
    /// Budget for per-scale `(width, height)` geometries.
    pub fn from_sizes(
        sizes: impl IntoIterator<Item = (usize, usize)>,
        n_kernels: usize,
        n_channels: usize,
    ) -> Self {
        let pixel_counts: Vec<usize> = sizes.into_iter().map(|(w, h)| w * h).collect();
        let pixels: u64 = pixel_counts.iter().map(|&c| c as u64).sum();
        Self {
            n_kernels,
            n_channels,
            total: n_kernels as u64 * n_channels as u64 * pixels,
            pixel_counts,
        }
    }
}

pub fn compute_test_budget(pyramid: &Pyramid, n_kernels: usize, n_channels: usize) -> TestBudget {
    TestBudget::from_sizes(
        pyramid.levels().iter().map(|l| (l.width(), l.height())),
        n_kernels,
        n_channels,
    )
}
