use std::sync::Arc;

use crate::model::{log_degeneracy, MomentLattice};

/// Probability vector over the sites of a [`MomentLattice`].
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    lattice: Arc<MomentLattice>,
    values: Vec<f64>,
}

impl Distribution {
    pub fn new(lattice: Arc<MomentLattice>, values: Vec<f64>) -> Self {
        assert_eq!(lattice.len(), values.len(), "one value per lattice site");
        Distribution { lattice, values }
    }

    /// Normalized distribution from unnormalized log-weights.
    pub fn from_log_weights(lattice: Arc<MomentLattice>, logs: &[f64]) -> (Self, f64) {
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut values: Vec<f64> = logs.iter().map(|&l| (l - top).exp()).collect();
        let z: f64 = values.iter().sum();
        for v in &mut values {
            *v /= z;
        }
        (Distribution::new(lattice, values), top + z.ln())
    }

    /// All mass on one site.
    pub fn point(lattice: Arc<MomentLattice>, index: usize) -> Self {
        let mut values = vec![0.0; lattice.len()];
        values[index] = 1.0;
        Distribution::new(lattice, values)
    }

    pub fn lattice(&self) -> &Arc<MomentLattice> {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// The distribution with `m1` reversed.
    pub fn mirrored(&self) -> Self {
        let values = (0..self.values.len())
            .map(|i| self.values[self.lattice.mirror_index(i)])
            .collect();
        Distribution::new(Arc::clone(&self.lattice), values)
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Fully disordered magnet: `P(m) = G_N(m) / (2l+1)^N`.
pub fn initial_paramagnet(lattice: Arc<MomentLattice>) -> Distribution {
    let logs: Vec<f64> = lattice.sites().iter().map(|&o| log_degeneracy(o)).collect();
    Distribution::from_log_weights(lattice, &logs).0
}
