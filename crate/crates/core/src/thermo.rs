//! Dynamical free energy, Gibbs states, and the energy bookkeeping of a
//! measurement (decoupling and reset).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{
    interaction_density, ModelConfig, MomentLattice, Moments, Occupation, Sector, SectorTables,
    Spin,
};
use crate::registration::{
    evolve_observed, initial_paramagnet, observables, ConservationReport, Distribution,
    EvolveControls, SectorGenerator,
};

/// `F_dyn = sum P [H_s + T ln(P / G_N)]`.
pub fn dynamical_free_energy(p: &[f64], tables: &SectorTables) -> f64 {
    observables(p, tables).free_energy(tables.cfg.temperature)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoPoint {
    pub tau: f64,
    pub f_dyn: f64,
    pub energy: f64,
    pub entropy: f64,
    pub m1_mean: f64,
    pub m2_mean: f64,
    pub total_prob: f64,
}

impl ThermoPoint {
    pub fn of(tau: f64, p: &[f64], tables: &SectorTables) -> Self {
        let o = observables(p, tables);
        ThermoPoint {
            tau,
            f_dyn: o.free_energy(tables.cfg.temperature),
            energy: o.energy,
            entropy: o.entropy,
            m1_mean: o.m1_mean,
            m2_mean: o.m2_mean,
            total_prob: o.total_prob,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoSeries {
    pub spin: Spin,
    pub points: Vec<ThermoPoint>,
}

impl ThermoSeries {
    pub fn first(&self) -> &ThermoPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &ThermoPoint {
        self.points.last().expect("series is never empty")
    }

    /// Largest rise of `F_dyn` between consecutive grid points.
    pub fn max_increase(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1].f_dyn - w[0].f_dyn)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// First grid time at which `select` has covered `fraction` of its total
    /// change over the series, linearly interpolated.
    pub fn time_to_fraction(&self, fraction: f64, select: impl Fn(&ThermoPoint) -> f64) -> f64 {
        let a = select(self.first());
        let b = select(self.last());
        let goal = a + fraction * (b - a);
        for w in self.points.windows(2) {
            let (x0, x1) = (select(&w[0]), select(&w[1]));
            if (x0 - goal) * (x1 - goal) <= 0.0 && x0 != x1 {
                let f = (goal - x0) / (x1 - x0);
                return w[0].tau + f * (w[1].tau - w[0].tau);
            }
        }
        self.last().tau
    }

    /// First grid time where `|dF_dyn/dtau| / |F_dyn|` drops below `rel_slope`.
    pub fn plateau(&self, rel_slope: f64) -> Option<f64> {
        self.points.windows(2).find_map(|w| {
            let dt = w[1].tau - w[0].tau;
            if dt <= 0.0 {
                return None;
            }
            let slope = (w[1].f_dyn - w[0].f_dyn).abs() / dt;
            (slope <= rel_slope * w[1].f_dyn.abs()).then_some(w[1].tau)
        })
    }
}

/// Which part of the lattice a restricted Gibbs state keeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Restriction {
    /// `m2 < 1/3` for `s = 0`, `s m1 > 1/3` for `s = +-1`; the half-line of
    /// the sign of `s` for spin 1/2. Sites exactly on the cut are dropped.
    Basin,
    /// The basin, further cut to a square of half-width `half_width` around
    /// its most probable site.
    PeakWindow { half_width: f64 },
}

/// Exact integer test of the basin rule.
pub fn in_basin(spin: Spin, sector: Sector, occ: Occupation) -> bool {
    let n = i64::from(occ.total());
    let diff = i64::from(occ.plus) - i64::from(occ.minus);
    let s = i64::from(sector.label());
    match spin {
        Spin::Half => s * diff > 0,
        Spin::One if s == 0 => 3 * i64::from(occ.n2()) < n,
        Spin::One => 3 * s * diff > n,
    }
}

#[derive(Debug, Clone)]
pub struct GibbsState {
    pub distribution: Distribution,
    pub ln_z: f64,
    /// `-T ln Z`.
    pub free_energy: f64,
    pub m1_mean: f64,
    pub m2_mean: f64,
    pub sites_kept: usize,
}

/// `P proportional to G_N e^{-H_s/T}` over the whole lattice or a restriction.
pub fn gibbs(tables: &SectorTables, restrict: Option<Restriction>) -> Result<GibbsState> {
    let t = tables.cfg.temperature;
    let lattice = &tables.lattice;
    let logs: Vec<f64> = (0..tables.len())
        .map(|i| tables.log_degeneracy[i] - tables.energy[i] / t)
        .collect();
    let mut keep: Vec<bool> = match restrict {
        None => vec![true; tables.len()],
        Some(_) => lattice
            .sites()
            .iter()
            .map(|&o| in_basin(tables.cfg.spin, tables.sector, o))
            .collect(),
    };
    if let Some(Restriction::PeakWindow { half_width }) = restrict {
        let peak = (0..tables.len())
            .filter(|&i| keep[i])
            .max_by(|&a, &b| logs[a].total_cmp(&logs[b]))
            .ok_or(Error::EmptyRestriction)?;
        let mp = tables.moments[peak];
        for (i, k) in keep.iter_mut().enumerate() {
            let m = tables.moments[i];
            *k = *k && (m.m1 - mp.m1).abs() <= half_width && (m.m2 - mp.m2).abs() <= half_width;
        }
    }
    let kept = keep.iter().filter(|&&k| k).count();
    if kept == 0 {
        return Err(Error::EmptyRestriction);
    }
    let masked: Vec<f64> = logs
        .iter()
        .zip(&keep)
        .map(|(&l, &k)| if k { l } else { f64::NEG_INFINITY })
        .collect();
    let (distribution, ln_z) = Distribution::from_log_weights(Arc::clone(lattice), &masked);
    let o = observables(distribution.values(), tables);
    Ok(GibbsState {
        distribution,
        ln_z,
        free_energy: -t * ln_z,
        m1_mean: o.m1_mean,
        m2_mean: o.m2_mean,
        sites_kept: kept,
    })
}

/// Large-N restricted `<m2>` in the `s = 0` basin.
///
/// Near the `m2 = 0` minimum each spin independently leaves `sigma = 0` with
/// Boltzmann weight `w = exp(-h/T)`, `h = dE/dm2` at `m1 = 0`, so
/// `m2 = 2w / (1 + 2w)`; iterated to self-consistency from `m2 = 0`.
pub fn gibbs_limit_m2(cfg: &ModelConfig) -> f64 {
    let s = 0.0;
    let field = |m2: f64| {
        let a = 1.0 - 1.5 * m2;
        let c2 = a * a;
        3.0 * a * (0.5 * cfg.j2 + 0.5 * cfg.j4 * c2) + 1.5 * cfg.g * (1.0 - 1.5 * s * s)
    };
    let mut m2 = 0.0;
    for _ in 0..200 {
        let w = (-field(m2) / cfg.temperature).exp();
        let next = 2.0 * w / (1.0 + 2.0 * w);
        if (next - m2).abs() <= 1e-16 * next.abs() {
            return next;
        }
        m2 = next;
    }
    m2
}

/// Polynomial extrapolation in `1/N` of the exact restricted `<m2>` at
/// the given sizes (Neville's scheme evaluated at `1/N = 0`).
pub fn extrapolate_m2(cfg: &ModelConfig, sizes: &[u32]) -> Result<(Vec<f64>, f64)> {
    let mut values = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let tables = SectorTables::build(&cfg.with_size(n))?;
        values.push(gibbs(&tables, Some(Restriction::Basin))?.m2_mean);
    }
    let x: Vec<f64> = sizes.iter().map(|&n| 1.0 / f64::from(n)).collect();
    let mut p = values.clone();
    for k in 1..p.len() {
        for i in (k..p.len()).rev() {
            p[i] = (x[i] * p[i - 1] - x[i - k] * p[i]) / (x[i] - x[i - k]);
        }
    }
    let limit = *p.last().ok_or_else(|| Error::InvalidConfig("no sizes".into()))?;
    Ok((values, limit))
}

/// Work `-<H_SA>` needed to switch the coupling off.
pub fn decoupling_energy(p: &[f64], tables: &SectorTables) -> f64 {
    let n = f64::from(tables.cfg.n);
    -n * p
        .iter()
        .zip(&tables.moments)
        .map(|(&v, &m)| v * interaction_density(&tables.cfg, tables.sector, m))
        .sum::<f64>()
}

/// Moments of the `s = +-1` relaxation from `<m2>` of the `s = 0` one.
pub fn sector_map(m2_s0: f64, sign: i8) -> Moments {
    Moments::new(f64::from(sign.signum()) * (1.0 - 1.5 * m2_s0), 1.0 - 0.5 * m2_s0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetEnergy {
    pub total: f64,
    pub per_spin: f64,
    /// `-N T ln(2l+1)`.
    pub f_paramagnet: f64,
    /// `-T ln Z` of the restricted `g = 0` Gibbs state.
    pub f_gibbs: f64,
}

/// `F_pm - F_G` for returning the `g = 0` ferromagnet to the paramagnet.
///
/// Above the ordering temperature there is no basin to restrict to and the
/// full Gibbs state is used.
pub fn reset_energy(cfg: &ModelConfig) -> Result<ResetEnergy> {
    let free = cfg.with_coupling(0.0);
    let tables = SectorTables::build(&free)?;
    let g = if ferromagnetic(&tables) {
        gibbs(&tables, Some(Restriction::Basin))?
    } else {
        gibbs(&tables, None)?
    };
    let n = f64::from(cfg.n);
    let f_pm = -n * cfg.temperature * f64::from(cfg.spin.multiplicity()).ln();
    let total = f_pm - g.free_energy;
    Ok(ResetEnergy {
        total,
        per_spin: total / n,
        f_paramagnet: f_pm,
        f_gibbs: g.free_energy,
    })
}

/// Whether the basin outweighs the most disordered site, i.e. whether a
/// ferromagnetic minimum exists to be restricted to.
fn ferromagnetic(tables: &SectorTables) -> bool {
    let t = tables.cfg.temperature;
    let log_w = |i: usize| tables.log_degeneracy[i] - tables.energy[i] / t;
    let disordered = (0..tables.len())
        .max_by(|&a, &b| tables.log_degeneracy[a].total_cmp(&tables.log_degeneracy[b]))
        .expect("lattice is never empty");
    let basin = (0..tables.len())
        .filter(|&i| in_basin(tables.cfg.spin, tables.sector, tables.lattice.site(i)))
        .map(log_w)
        .fold(f64::NEG_INFINITY, f64::max);
    basin > log_w(disordered)
}

/// Result of a monitored registration run.
#[derive(Debug, Clone)]
pub struct RegistrationRun {
    pub series: ThermoSeries,
    pub snapshots: Vec<(f64, Distribution)>,
    pub report: ConservationReport,
    /// Largest per-step rise of `F_dyn` (negative when strictly decreasing).
    pub max_step_increase: f64,
    pub tolerance: f64,
}

impl RegistrationRun {
    pub fn final_distribution(&self) -> &Distribution {
        &self.snapshots.last().expect("at least one snapshot").1
    }
}

/// Evolves `p0` over `grid` while checking the H-theorem after every step.
///
/// The run aborts when `F_dyn` rises by more than `1e-8 |F_dyn(0)|` in one
/// step. Every grid time is recorded in the series and returned as a snapshot.
pub fn run_registration(
    tables: &SectorTables,
    gen: &SectorGenerator,
    p0: &Distribution,
    grid: &[f64],
    controls: &EvolveControls,
) -> Result<RegistrationRun> {
    let f0 = dynamical_free_energy(p0.values(), tables);
    let tolerance = 1e-8 * f0.abs();
    let mut prev = f0;
    let mut max_step_increase = f64::NEG_INFINITY;
    let mut times: Vec<f64> = grid.to_vec();
    if times.first() != Some(&0.0) {
        times.insert(0, 0.0);
    }
    let traj = evolve_observed(p0, gen, &times, controls, |tau, p| {
        if tau == 0.0 {
            return Ok(());
        }
        let f = dynamical_free_energy(p, tables);
        let rise = f - prev;
        max_step_increase = max_step_increase.max(rise);
        if rise > tolerance {
            return Err(Error::HTheorem {
                tau,
                increase: rise,
                tolerance,
            });
        }
        prev = f;
        Ok(())
    })?;
    let points = traj
        .snapshots
        .iter()
        .map(|(tau, p)| ThermoPoint::of(*tau, p.values(), tables))
        .collect();
    Ok(RegistrationRun {
        series: ThermoSeries {
            spin: tables.cfg.spin,
            points,
        },
        snapshots: traj.snapshots,
        report: traj.report,
        max_step_increase,
        tolerance,
    })
}

/// Registration from the paramagnet in `cfg.sector`.
pub fn register(cfg: &ModelConfig, grid: &[f64], controls: &EvolveControls) -> Result<RegistrationRun> {
    let tables = SectorTables::build(cfg)?;
    let gen = SectorGenerator::build(&tables);
    let p0 = initial_paramagnet(Arc::clone(&tables.lattice));
    run_registration(&tables, &gen, &p0, grid, controls)
}

/// Relaxation after `g` is switched off at the state `p_dc`.
pub fn post_decoupling_relax(
    p_dc: &Distribution,
    cfg: &ModelConfig,
    sector: Sector,
    grid: &[f64],
    controls: &EvolveControls,
) -> Result<RegistrationRun> {
    let free = cfg.with_coupling(0.0);
    let lattice: Arc<MomentLattice> = Arc::clone(p_dc.lattice());
    let tables = SectorTables::new(&free, sector, lattice)?;
    let gen = SectorGenerator::build(&tables);
    run_registration(&tables, &gen, p_dc, grid, controls)
}

/// Uniform grid `0, dt, ..., tau_max` (the last point is always `tau_max`).
pub fn time_grid(tau_max: f64, dt: f64) -> Vec<f64> {
    if tau_max <= 0.0 {
        return vec![0.0];
    }
    let steps = (tau_max / dt).round().max(1.0) as usize;
    (0..=steps)
        .map(|k| if k == steps { tau_max } else { tau_max * k as f64 / steps as f64 })
        .collect()
}
