use crate::error::{Error, Result};
use crate::registration::{Distribution, SectorGenerator};

/// Step-size and tolerance controls of the RK4 integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveControls {
    /// `dtau = safety / max outflow`.
    pub safety: f64,
    pub norm_tol: f64,
    pub negativity_tol: f64,
    pub min_step: f64,
}

impl Default for EvolveControls {
    fn default() -> Self {
        EvolveControls {
            safety: 0.1,
            norm_tol: 1e-9,
            negativity_tol: 1e-9,
            min_step: 1e-12,
        }
    }
}

impl EvolveControls {
    pub fn with_safety(safety: f64) -> Self {
        EvolveControls {
            safety,
            ..EvolveControls::default()
        }
    }
}

/// Worst conservation figures seen over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationReport {
    pub steps: usize,
    pub max_drift: f64,
    pub min_value: f64,
    pub max_step: f64,
}

impl ConservationReport {
    fn start(p: &[f64]) -> Self {
        ConservationReport {
            steps: 0,
            max_drift: (p.iter().sum::<f64>() - 1.0).abs(),
            min_value: p.iter().copied().fold(f64::INFINITY, f64::min),
            max_step: 0.0,
        }
    }

    pub fn merge(&mut self, other: &ConservationReport) {
        self.steps += other.steps;
        self.max_drift = self.max_drift.max(other.max_drift);
        self.min_value = self.min_value.min(other.min_value);
        self.max_step = self.max_step.max(other.max_step);
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `(tau, P(tau))` at each requested time, in order.
    pub snapshots: Vec<(f64, Distribution)>,
    pub report: ConservationReport,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Distribution> {
        self.snapshots.last().map(|(_, p)| p)
    }
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Rk4 {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            stage: vec![0.0; n],
        }
    }

    fn step(&mut self, gen: &SectorGenerator, p: &mut [f64], h: f64) {
        gen.apply(p, &mut self.k1);
        axpy(&mut self.stage, p, 0.5 * h, &self.k1);
        gen.apply(&self.stage, &mut self.k2);
        axpy(&mut self.stage, p, 0.5 * h, &self.k2);
        gen.apply(&self.stage, &mut self.k3);
        axpy(&mut self.stage, p, h, &self.k3);
        gen.apply(&self.stage, &mut self.k4);
        let w = h / 6.0;
        for i in 0..p.len() {
            p[i] += w * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

fn axpy(out: &mut [f64], x: &[f64], a: f64, y: &[f64]) {
    for ((o, &xi), &yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + a * yi;
    }
}

/// Integrates `dP/dtau = Q P` with classical RK4, stopping exactly at each
/// entry of `times` (which must be sorted and nonnegative).
///
/// `observer` sees the state after every accepted step and at `tau = 0`.
pub fn evolve_observed<F>(
    p0: &Distribution,
    gen: &SectorGenerator,
    times: &[f64],
    controls: &EvolveControls,
    mut observer: F,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64]) -> Result<()>,
{
    if gen.len() != p0.values().len() {
        return Err(Error::InvalidConfig(
            "generator and distribution live on different lattices".into(),
        ));
    }
    if !(controls.safety > 0.0) {
        return Err(Error::InvalidConfig("safety factor must be positive".into()));
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig(
            "snapshot times must be sorted and nonnegative".into(),
        ));
    }

    let rho = gen.max_outflow();
    let h_max = if rho > 0.0 { controls.safety / rho } else { f64::INFINITY };
    if h_max < controls.min_step {
        return Err(Error::StepUnderflow { dtau: h_max });
    }

    let mut p = p0.values().to_vec();
    let mut report = ConservationReport::start(&p);
    let mut rk = Rk4::new(p.len());
    let mut snapshots = Vec::with_capacity(times.len());
    let mut tau = 0.0;
    observer(tau, &p)?;

    for &target in times {
        let span = target - tau;
        if span > 0.0 {
            let steps = if h_max.is_finite() {
                (span / h_max).ceil().max(1.0) as usize
            } else {
                1
            };
            let h = span / steps as f64;
            report.max_step = report.max_step.max(h);
            let start = tau;
            for k in 1..=steps {
                rk.step(gen, &mut p, h);
                tau = if k == steps { target } else { start + k as f64 * h };
                report.steps += 1;
                check(&p, tau, controls, &mut report)?;
                observer(tau, &p)?;
            }
        }
        snapshots.push((target, Distribution::new(p0.lattice().clone(), p.clone())));
    }
    Ok(Trajectory { snapshots, report })
}

pub fn evolve(
    p0: &Distribution,
    gen: &SectorGenerator,
    times: &[f64],
    controls: &EvolveControls,
) -> Result<Trajectory> {
    evolve_observed(p0, gen, times, controls, |_, _| Ok(()))
}

fn check(p: &[f64], tau: f64, controls: &EvolveControls, report: &mut ConservationReport) -> Result<()> {
    let mut total = 0.0;
    let mut min = f64::INFINITY;
    let mut site = 0;
    for (i, &v) in p.iter().enumerate() {
        total += v;
        if v < min {
            min = v;
            site = i;
        }
    }
    let drift = total - 1.0;
    report.max_drift = report.max_drift.max(drift.abs());
    report.min_value = report.min_value.min(min);
    if drift.abs() > controls.norm_tol {
        return Err(Error::NormalizationDrift { tau, drift });
    }
    if min < -controls.negativity_tol {
        return Err(Error::NegativeProbability { tau, value: min, site });
    }
    Ok(())
}
