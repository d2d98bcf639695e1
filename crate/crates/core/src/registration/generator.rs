use rayon::prelude::*;

use crate::model::{Spin, SectorTables};

/// Lattices at least this large are swept in parallel.
const PAR_THRESHOLD: usize = 2048;
const PAR_CHUNK: usize = 512;

/// One directed rate edge of the master equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    /// Rate per unit of `tau = gamma T t`.
    pub rate: f64,
}

/// Sparse master-equation generator for one diagonal sector.
///
/// Edges are stored grouped by target so that each entry of `dP/dtau` is a
/// private sum; the sweep is deterministic however it is scheduled.
#[derive(Debug, Clone)]
pub struct SectorGenerator {
    offsets: Vec<usize>,
    sources: Vec<usize>,
    rates: Vec<f64>,
    outflow: Vec<f64>,
}

impl SectorGenerator {
    /// Single-flip rates `count(from) / (2l T) * K(H(target) - H(source))`.
    pub fn build(tables: &SectorTables) -> Self {
        let cfg = &tables.cfg;
        let kernel = cfg.kernel();
        let per_spin = match cfg.spin {
            Spin::Half => 0.5 / cfg.temperature,
            Spin::One => 1.0 / cfg.temperature,
        };
        let lattice = &tables.lattice;
        let mut edges = Vec::with_capacity(lattice.len() * cfg.spin.flips().len());
        for (source, occ) in lattice.sites().iter().enumerate() {
            for link in lattice.links(source) {
                let count = occ.count(link.flip.from);
                debug_assert!(count > 0, "links only exist for occupied levels");
                let omega = tables.energy[link.target] - tables.energy[source];
                edges.push(Edge {
                    source,
                    target: link.target,
                    rate: f64::from(count) * per_spin * kernel.eval(omega),
                });
            }
        }
        SectorGenerator::from_edges(lattice.len(), &edges)
    }

    pub fn from_edges(n_sites: usize, edges: &[Edge]) -> Self {
        let mut counts = vec![0usize; n_sites + 1];
        let mut outflow = vec![0.0; n_sites];
        for e in edges {
            assert!(e.source < n_sites && e.target < n_sites, "edge leaves the lattice");
            assert!(e.rate >= 0.0, "negative rate {}", e.rate);
            counts[e.target + 1] += 1;
            outflow[e.source] += e.rate;
        }
        for i in 0..n_sites {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut sources = vec![0; edges.len()];
        let mut rates = vec![0.0; edges.len()];
        for e in edges {
            let slot = fill[e.target];
            sources[slot] = e.source;
            rates[slot] = e.rate;
            fill[e.target] += 1;
        }
        SectorGenerator {
            offsets,
            sources,
            rates,
            outflow,
        }
    }

    /// The same topology with every rate set to zero.
    pub fn zeroed(&self) -> Self {
        SectorGenerator {
            offsets: self.offsets.clone(),
            sources: self.sources.clone(),
            rates: vec![0.0; self.rates.len()],
            outflow: vec![0.0; self.outflow.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.outflow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outflow.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.rates.len()
    }

    pub fn outflow(&self) -> &[f64] {
        &self.outflow
    }

    pub fn max_outflow(&self) -> f64 {
        self.outflow.iter().copied().fold(0.0, f64::max)
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.len()).flat_map(move |target| {
            (self.offsets[target]..self.offsets[target + 1]).map(move |k| Edge {
                source: self.sources[k],
                target,
                rate: self.rates[k],
            })
        })
    }

    /// Edges leaving `source`, in no particular order.
    pub fn edges_from(&self, source: usize) -> Vec<Edge> {
        self.edges().filter(|e| e.source == source).collect()
    }

    fn site_rate(&self, p: &[f64], i: usize) -> f64 {
        let mut gain = 0.0;
        for k in self.offsets[i]..self.offsets[i + 1] {
            gain += self.rates[k] * p[self.sources[k]];
        }
        gain - self.outflow[i] * p[i]
    }

    /// `out = Q p`.
    pub fn apply(&self, p: &[f64], out: &mut [f64]) {
        assert_eq!(p.len(), self.len());
        assert_eq!(out.len(), self.len());
        if self.len() >= PAR_THRESHOLD {
            out.par_chunks_mut(PAR_CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| {
                    let base = c * PAR_CHUNK;
                    for (j, o) in chunk.iter_mut().enumerate() {
                        *o = self.site_rate(p, base + j);
                    }
                });
        } else {
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.site_rate(p, i);
            }
        }
    }
}
