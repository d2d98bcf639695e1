use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};

use cwsim_core::registration::{ConfigSpace, SectorGenerator};
use cwsim_core::thermo::{
    decoupling_energy, dynamical_free_energy, post_decoupling_relax, reset_energy,
    run_registration, RegistrationRun,
};
use cwsim_core::truncation::{
    dephasing_time, offdiag_envelope, recurrence_time, upper_envelope, OffDiagonalPair,
};
use cwsim_core::{
    evolve, gibbs, initial_paramagnet, time_grid, Distribution, EvolveControls, ModelConfig,
    Restriction, SectorTables, Spin, ThermoSeries,
};
use num_complex::Complex64;

use crate::csv::{fmt_num, snapshot_name, Cell, Table};
use crate::settings::{ensure_positive, Settings};

/// Relative `F_dyn` slope below which registration counts as finished.
const PLATEAU_SLOPE: f64 = 1e-6;

fn controls(settings: &Settings, default_safety: f64) -> Result<EvolveControls> {
    let safety = ensure_positive("safety", settings.f64_or("safety", default_safety)?)?;
    Ok(EvolveControls::with_safety(safety))
}

fn merged_grid(tau_max: f64, dt: f64, extra: &[f64]) -> Vec<f64> {
    let mut grid = time_grid(tau_max, dt);
    grid.extend(extra.iter().copied().filter(|&t| t <= tau_max));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn timeseries_table(series: &ThermoSeries, offset: f64) -> Table {
    let mut t = Table::new(&["tau", "F_dyn", "U", "S", "m1_mean", "m2_mean", "total_prob"]);
    for p in &series.points {
        let m2 = match series.spin {
            Spin::One => Cell::Num(p.m2_mean),
            Spin::Half => Cell::Empty,
        };
        t.row([
            Cell::Num(p.tau + offset),
            Cell::Num(p.f_dyn),
            Cell::Num(p.energy),
            Cell::Num(p.entropy),
            Cell::Num(p.m1_mean),
            m2,
            Cell::Num(p.total_prob),
        ]);
    }
    t
}

fn snapshot_table(p: &Distribution, pmin: f64) -> Table {
    let l = p.lattice();
    let mut t = match l.spin() {
        Spin::One => Table::new(&["m1", "m2", "P"]),
        Spin::Half => Table::new(&["m1", "P"]),
    };
    for (i, &v) in p.values().iter().enumerate() {
        if v < pmin {
            continue;
        }
        let m = l.moments(i);
        match l.spin() {
            Spin::One => t.nums(&[m.m1, m.m2, v]),
            Spin::Half => t.nums(&[m.m1, v]),
        }
    }
    t
}

fn write_snapshots(
    dir: &Path,
    run: &RegistrationRun,
    wanted: &[f64],
    pmin: f64,
    offset: f64,
) -> Result<()> {
    for &tau in wanted {
        let (_, p) = run
            .snapshots
            .iter()
            .find(|(t, _)| *t == tau)
            .with_context(|| format!("snapshot time {tau} outside the run"))?;
        snapshot_table(p, pmin).write(&dir.join(snapshot_name(tau + offset)))?;
    }
    Ok(())
}

fn registration(cfg: &ModelConfig, grid: &[f64], c: &EvolveControls) -> Result<RegistrationRun> {
    let tables = SectorTables::build(cfg)?;
    let gen = SectorGenerator::build(&tables);
    let p0 = initial_paramagnet(Arc::clone(&tables.lattice));
    Ok(run_registration(&tables, &gen, &p0, grid, c)?)
}

pub fn register(settings: &Settings, out: &Path) -> Result<()> {
    let cfg = settings.model()?;
    let tau_max = settings.f64_or("tau_max", 25.0)?;
    if tau_max < 0.0 {
        bail!("`tau_max` must be nonnegative");
    }
    let dt = ensure_positive("dt", settings.f64_or("dt", 0.1)?)?;
    let snaps = settings.list_or("snapshots", &[])?;
    if let Some(bad) = snaps.iter().find(|&&t| t < 0.0 || t > tau_max) {
        bail!("snapshot time {bad} outside [0, {tau_max}]");
    }
    let pmin = settings.f64_or("pmin", 0.0)?;
    let grid = merged_grid(tau_max, dt, &snaps);
    let run = registration(&cfg, &grid, &controls(settings, 0.1)?)?;
    timeseries_table(&run.series, 0.0).write(&out.join("timeseries.csv"))?;
    write_snapshots(out, &run, &snaps, pmin, 0.0)
}

pub fn truncate(settings: &Settings, out: &Path) -> Result<()> {
    let cfg = settings.model()?;
    if cfg.spin != Spin::One {
        bail!("truncate needs spin one");
    }
    let gamma = settings.f64_or("gamma", 0.0)?;
    let s_tilde = settings.sector_tilde(&cfg)?;
    let pair = OffDiagonalPair::new(&cfg, cfg.sector, s_tilde, Complex64::new(1.0, 0.0))?;
    let t1 = recurrence_time(&cfg, 1)?;
    let tau = dephasing_time(&cfg)?;
    let mut times: Vec<f64> = (0..=3000).map(|k| t1 * f64::from(k) / 1000.0).collect();
    times.push(tau);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let ratios: Vec<Complex64> = times
        .iter()
        .map(|&t| offdiag_envelope(t, &pair, &cfg, gamma))
        .collect();
    let norms: Vec<f64> = ratios.iter().map(|r| r.norm()).collect();
    let env = upper_envelope(&norms);
    let mut table = Table::new(&["t", "re_ratio", "im_ratio", "envelope_upper"]);
    for ((t, r), e) in times.iter().zip(&ratios).zip(&env) {
        table.nums(&[*t, r.re, r.im, *e]);
    }
    table.write(&out.join("truncation.csv"))
}

pub fn gibbs_cmd(settings: &Settings, out: &Path) -> Result<()> {
    let cfg = settings.model()?;
    let mut table = Table::new(&["sector", "restricted", "lnZ", "F", "m1_mean", "m2_mean"]);
    for &s in cfg.spin.sectors() {
        let tables = SectorTables::build(&cfg.with_sector(s))?;
        for (name, r) in [("no", None), ("yes", Some(Restriction::Basin))] {
            let g = gibbs(&tables, r)?;
            table.row([
                Cell::Num(s.value(cfg.spin)),
                Cell::Text(name.into()),
                Cell::Num(g.ln_z),
                Cell::Num(g.free_energy),
                Cell::Num(g.m1_mean),
                Cell::Num(g.m2_mean),
            ]);
        }
    }
    table.write(&out.join("gibbs.csv"))
}

/// Registration up to `tau_max`, with the decoupling time resolved either from
/// `t_dc` or from the first `F_dyn` plateau.
fn registration_to_decoupling(settings: &Settings, cfg: &ModelConfig) -> Result<(RegistrationRun, f64)> {
    let tau_max = ensure_positive("tau_max", settings.f64_or("tau_max", 25.0)?)?;
    let dt = ensure_positive("dt", settings.f64_or("dt", 0.1)?)?;
    let fixed = settings.opt_f64("t_dc")?;
    if let Some(t) = fixed {
        if !(0.0..=tau_max).contains(&t) {
            bail!("`t_dc` = {t} outside [0, {tau_max}]");
        }
    }
    let grid = merged_grid(tau_max, dt, fixed.as_slice());
    let run = registration(cfg, &grid, &controls(settings, 0.1)?)?;
    let t_dc = fixed
        .or_else(|| run.series.plateau(PLATEAU_SLOPE))
        .unwrap_or(tau_max);
    Ok((run, t_dc))
}

fn state_at(run: &RegistrationRun, tau: f64) -> Result<&Distribution> {
    run.snapshots
        .iter()
        .find(|(t, _)| *t == tau)
        .map(|(_, p)| p)
        .with_context(|| format!("no state recorded at tau = {tau}"))
}

pub fn decouple(settings: &Settings, out: &Path) -> Result<()> {
    let cfg = settings.model()?;
    let (run, t_dc) = registration_to_decoupling(settings, &cfg)?;
    let p_dc = state_at(&run, t_dc)?;
    let relax_tau = ensure_positive("relax_tau", settings.f64_or("relax_tau", 25.0)?)?;
    let dt = settings.f64_or("dt", 0.1)?;
    let relax = post_decoupling_relax(
        p_dc,
        &cfg,
        cfg.sector,
        &time_grid(relax_tau, dt),
        &controls(settings, 0.1)?,
    )?;

    timeseries_table(&run.series, 0.0).write(&out.join("timeseries.csv"))?;
    let dir = out.join("decouple");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    timeseries_table(&relax.series, t_dc).write(&dir.join("timeseries.csv"))?;
    snapshot_table(p_dc, settings.f64_or("pmin", 0.0)?).write(&dir.join(snapshot_name(t_dc)))?;

    let tables = SectorTables::build(&cfg)?;
    let free = SectorTables::build(&cfg.with_coupling(0.0))?;
    let g0 = gibbs(&free, Some(Restriction::Basin))?;
    let mut t = Table::new(&[
        "t_dc",
        "U_dc",
        "F_dyn_before",
        "F_dyn_after_switch",
        "F_dyn_end",
        "F_gibbs_g0",
        "m2_start",
        "m2_end",
        "m2_gibbs_g0",
    ]);
    t.nums(&[
        t_dc,
        decoupling_energy(p_dc.values(), &tables),
        dynamical_free_energy(p_dc.values(), &tables),
        relax.series.first().f_dyn,
        relax.series.last().f_dyn,
        g0.free_energy,
        relax.series.first().m2_mean,
        relax.series.last().m2_mean,
        g0.m2_mean,
    ]);
    t.write(&dir.join("summary.csv"))
}

pub fn energetics(settings: &Settings, out: &Path) -> Result<()> {
    let cfg = settings.model()?;
    let (run, t_dc) = registration_to_decoupling(settings, &cfg)?;
    let p_dc = state_at(&run, t_dc)?;
    let tables = SectorTables::build(&cfg)?;
    let u_dc = decoupling_energy(p_dc.values(), &tables);
    let reset = reset_energy(&cfg)?;
    let mut t = Table::new(&["N", "t_dc", "U_dc", "U_reset", "U_reset_per_spin", "F_pm", "F_G"]);
    t.nums(&[
        f64::from(cfg.n),
        t_dc,
        u_dc,
        reset.total,
        reset.per_spin,
        reset.f_paramagnet,
        reset.f_gibbs,
    ]);
    t.write(&out.join("energetics.csv"))
}

pub fn oracle_check(settings: &Settings, out: &Path) -> Result<()> {
    let cfg = settings.model()?;
    let checkpoints = settings.list_or("checkpoints", &[0.1, 1.0, 5.0])?;
    let mut sorted = checkpoints.clone();
    sorted.sort_by(f64::total_cmp);
    // the exact integration needs a finer RK4 step than the default
    let c = controls(settings, 0.005)?;
    let space = ConfigSpace::new(&cfg, cfg.sector)?;
    let tables = SectorTables::build(&cfg)?;
    let gen = SectorGenerator::build(&tables);
    let p0 = initial_paramagnet(Arc::clone(&tables.lattice));
    let lumped = evolve(&p0, &gen, &sorted, &c)?;
    let q0 = space.uniform();
    let mut t = Table::new(&["tau", "max_abs"]);
    let mut worst = 0.0f64;
    for (tau, p) in &lumped.snapshots {
        let d = p.max_abs_diff(&space.marginal(&space.propagate(&q0, *tau)));
        worst = worst.max(d);
        t.nums(&[*tau, d]);
    }
    t.write(&out.join("oracle_report.csv"))?;
    if worst > 1e-10 {
        bail!("oracle deviation {} exceeds 1e-10", fmt_num(worst));
    }
    Ok(())
}
