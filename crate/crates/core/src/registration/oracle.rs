//! Brute-force master equation over individual spin configurations.
//!
//! Every one of the `(2l+1)^N` microstates is kept, each spin flips on its own
//! with rate `K(dH) / (2l T)`, and the result is integrated exactly by
//! uniformization. Summing over microstates with equal occupations gives an
//! independent check of the lumped lattice dynamics.

use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{sector_hamiltonian, Level, ModelConfig, Moments, MomentLattice, Occupation, Sector, Spin};
use crate::registration::Distribution;

pub const ORACLE_MAX_SPINS: u32 = 4;

#[derive(Debug, Clone)]
pub struct ConfigSpace {
    spin: Spin,
    n: u32,
    /// Lattice index of each microstate.
    site_of: Vec<usize>,
    edges: Vec<(usize, usize, f64)>,
    outflow: Vec<f64>,
    lattice: Arc<MomentLattice>,
}

fn levels(spin: Spin) -> &'static [Level] {
    match spin {
        Spin::Half => &[Level::Minus, Level::Plus],
        Spin::One => &[Level::Minus, Level::Zero, Level::Plus],
    }
}

impl ConfigSpace {
    pub fn new(cfg: &ModelConfig, sector: Sector) -> Result<Self> {
        cfg.validate()?;
        sector.check(cfg.spin)?;
        if cfg.n > ORACLE_MAX_SPINS {
            return Err(Error::OracleTooLarge(cfg.n as usize));
        }
        let spin = cfg.spin;
        let lv = levels(spin);
        let base = lv.len();
        let n = cfg.n as usize;
        let states = base.pow(cfg.n);
        let lattice = Arc::new(MomentLattice::new(spin, cfg.n));
        let kernel = cfg.kernel();
        let per_spin = match spin {
            Spin::Half => 0.5 / cfg.temperature,
            Spin::One => 1.0 / cfg.temperature,
        };

        let digits = |mut c: usize| {
            let mut d = vec![0usize; n];
            for slot in d.iter_mut() {
                *slot = c % base;
                c /= base;
            }
            d
        };
        let occupation = |d: &[usize]| {
            let mut occ = Occupation::new(0, 0, 0);
            for &k in d {
                match lv[k] {
                    Level::Minus => occ.minus += 1,
                    Level::Zero => occ.zero += 1,
                    Level::Plus => occ.plus += 1,
                }
            }
            occ
        };
        let energy = |d: &[usize]| sector_hamiltonian(cfg, sector, Moments::of(spin, occupation(d)));

        let mut site_of = Vec::with_capacity(states);
        let mut edges = Vec::new();
        let mut outflow = vec![0.0; states];
        for c in 0..states {
            let d = digits(c);
            site_of.push(lattice.index_of(occupation(&d)).expect("occupation on lattice"));
            let e0 = energy(&d);
            for i in 0..n {
                for (k, &to) in lv.iter().enumerate() {
                    let from = lv[d[i]];
                    let allowed = spin.flips().iter().any(|f| f.from == from && f.to == to);
                    if !allowed {
                        continue;
                    }
                    let mut e = d.clone();
                    e[i] = k;
                    let target = e.iter().rev().fold(0, |acc, &x| acc * base + x);
                    let rate = per_spin * kernel.eval(energy(&e) - e0);
                    edges.push((c, target, rate));
                    outflow[c] += rate;
                }
            }
        }
        Ok(ConfigSpace {
            spin,
            n: cfg.n,
            site_of,
            edges,
            outflow,
            lattice,
        })
    }

    pub fn len(&self) -> usize {
        self.site_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.site_of.is_empty()
    }

    pub fn lattice(&self) -> &Arc<MomentLattice> {
        &self.lattice
    }

    /// Total flip rate out of microstate `c`.
    pub fn outflow(&self, c: usize) -> f64 {
        self.outflow[c]
    }

    /// One microstate belonging to lattice site `site`.
    pub fn representative(&self, site: usize) -> Option<usize> {
        self.site_of.iter().position(|&s| s == site)
    }

    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.len() as f64; self.len()]
    }

    pub fn marginal(&self, q: &[f64]) -> Distribution {
        let mut values = vec![0.0; self.lattice.len()];
        for (c, &v) in q.iter().enumerate() {
            values[self.site_of[c]] += v;
        }
        Distribution::new(self.lattice.clone(), values)
    }

    fn apply(&self, q: &[f64], out: &mut [f64]) {
        for (o, (&v, &r)) in out.iter_mut().zip(q.iter().zip(&self.outflow)) {
            *o = -r * v;
        }
        for &(s, t, r) in &self.edges {
            out[t] += r * q[s];
        }
    }

    /// `exp(Q tau) q0` by uniformization with Poisson weights.
    pub fn propagate(&self, q0: &[f64], tau: f64) -> Vec<f64> {
        let lambda = self.outflow.iter().copied().fold(0.0, f64::max);
        if tau == 0.0 || lambda == 0.0 {
            return q0.to_vec();
        }
        let lt = lambda * tau;
        let mut v = q0.to_vec();
        let mut qv = vec![0.0; v.len()];
        let mut acc = vec![0.0; v.len()];
        let mut weight_sum = 0.0;
        let mut k = 0u32;
        loop {
            let w = (-lt + f64::from(k) * lt.ln() - ln_gamma(f64::from(k) + 1.0)).exp();
            for (a, &x) in acc.iter_mut().zip(&v) {
                *a += w * x;
            }
            weight_sum += w;
            if f64::from(k) > lt && (w < 1e-20 || 1.0 - weight_sum < 1e-17) {
                break;
            }
            self.apply(&v, &mut qv);
            for (x, &d) in v.iter_mut().zip(&qv) {
                *x += d / lambda;
            }
            k += 1;
        }
        acc
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn n(&self) -> u32 {
        self.n
    }
}

/// Lattice marginals of the brute-force evolution from the paramagnet.
pub fn oracle_evolve(cfg: &ModelConfig, sector: Sector, times: &[f64]) -> Result<Vec<Distribution>> {
    let space = ConfigSpace::new(cfg, sector)?;
    let q0 = space.uniform();
    Ok(times
        .iter()
        .map(|&t| space.marginal(&space.propagate(&q0, t)))
        .collect())
}
