use crate::model::SectorTables;

/// Moments and thermodynamic functionals of a distribution in one sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub m1_mean: f64,
    pub m2_mean: f64,
    /// `U = sum P H_s`.
    pub energy: f64,
    /// `S = -sum P ln(P / G_N)`.
    pub entropy: f64,
    pub total_prob: f64,
}

impl Observables {
    pub fn free_energy(&self, temperature: f64) -> f64 {
        self.energy - temperature * self.entropy
    }
}

/// Nonpositive entries contribute nothing to the entropy.
pub fn observables(p: &[f64], tables: &SectorTables) -> Observables {
    assert_eq!(p.len(), tables.len());
    let mut out = Observables {
        m1_mean: 0.0,
        m2_mean: 0.0,
        energy: 0.0,
        entropy: 0.0,
        total_prob: 0.0,
    };
    for (i, &v) in p.iter().enumerate() {
        out.total_prob += v;
        if v == 0.0 {
            continue;
        }
        let m = tables.moments[i];
        out.m1_mean += v * m.m1;
        out.m2_mean += v * m.m2;
        out.energy += v * tables.energy[i];
        if v > 0.0 {
            out.entropy -= v * (v.ln() - tables.log_degeneracy[i]);
        }
    }
    out
}
