//! Fixtures shared by the criterion benchmarks under `benches/`.

use hsr_core::heatmap::{generate_gt_heatmap, normalize_to_distribution};
use hsr_core::synth::generate_corpus;
use hsr_core::{CorruptionSpec, Heatmap, Landmark};

/// A noiseless 64x64 heatmap with an off-lattice peak.
pub fn clean_heatmap(sigma: f64) -> Heatmap {
    generate_gt_heatmap(Landmark::new(24.2, 23.8), sigma, 64, 64).expect("valid fixture")
}

/// `count` noisy 64x64 planes from a fixed seed.
pub fn noisy_planes(count: usize, noise: f64) -> Vec<Heatmap> {
    generate_corpus(count, 3.0, 64, &CorruptionSpec::with_noise(noise, 1))
        .expect("valid fixture")
        .planes
}

/// Two normalized `size x size` distributions with nearby peaks.
pub fn distribution_pair(size: usize) -> (Heatmap, Heatmap) {
    let c = size as f64 / 2.0;
    let make = |u, v| {
        let h = generate_gt_heatmap(Landmark::new(u, v), 3.0, size, size).expect("valid fixture");
        normalize_to_distribution(&h, 1e-8)
            .expect("valid fixture")
            .distribution
    };
    (make(c, c), make(c + 0.7, c - 1.3))
}
