//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits successfully after reporting, so that known failures stay visible
//! without breaking the workspace test run. Set `CWSIM_ACCEPTANCE_STRICT=1`
//! to turn any FAIL into a nonzero exit.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use cwsim_core::registration::{ConservationReport, SectorGenerator};
use cwsim_core::thermo::{
    dynamical_free_energy, gibbs_limit_m2, post_decoupling_relax, reset_energy, RegistrationRun,
};
use cwsim_core::truncation::{
    dephasing_factor, dephasing_time, recurrence_time, OffDiagonalPair,
};
use cwsim_core::{
    evolve, gibbs, initial_paramagnet, oracle_evolve, register, time_grid, EvolveControls,
    ModelConfig, Restriction, Sector, SectorTables, Spin,
};
use num_complex::Complex64;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Outcome {
            pass,
            summary: summary.into(),
            details: Vec::new(),
        }
    }
}

#[derive(Default)]
struct Runs {
    conservation: Vec<(String, ConservationReport)>,
}

impl Runs {
    fn note(&mut self, label: &str, report: &ConservationReport) {
        self.conservation.push((label.to_string(), *report));
    }
}

fn reference_cfg() -> ModelConfig {
    ModelConfig::default()
}

fn oracle_equivalence(runs: &mut Runs) -> Outcome {
    let times = [0.1, 1.0, 5.0];
    // RK4 truncation error at the default safety factor is ~1e-7
    let controls = EvolveControls::with_safety(0.005);
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    let cases = [(Spin::One, 2), (Spin::One, 3), (Spin::Half, 3), (Spin::Half, 4)];
    for (spin, n) in cases {
        let base = match spin {
            Spin::One => reference_cfg(),
            Spin::Half => ModelConfig::spin_half(),
        };
        for &sector in spin.sectors() {
            let cfg = ModelConfig { n, sector, ..base.clone() };
            let tables = SectorTables::build(&cfg).unwrap();
            let gen = SectorGenerator::build(&tables);
            let p0 = initial_paramagnet(Arc::clone(&tables.lattice));
            let lumped = evolve(&p0, &gen, &times, &controls).unwrap();
            runs.note(&format!("oracle {spin} N={n} s={}", sector.label()), &lumped.report);
            let brute = oracle_evolve(&cfg, sector, &times).unwrap();
            for ((tau, p), q) in lumped.snapshots.iter().zip(&brute) {
                let d = p.max_abs_diff(q);
                worst = worst.max(d);
                details.push(format!(
                    "spin {spin} N={n} s={:+} tau={tau}: max-abs {d:.3e}",
                    sector.label()
                ));
            }
        }
    }
    let mut o = Outcome::new(
        worst <= 1e-10,
        format!("oracle equivalence, worst max-abs {worst:.3e} (limit 1e-10)"),
    );
    o.details = details;
    o
}

struct SectorRuns {
    zero: RegistrationRun,
    plus: RegistrationRun,
    minus: RegistrationRun,
    half_plus: RegistrationRun,
    half_minus: RegistrationRun,
}

fn registration_runs(runs: &mut Runs) -> SectorRuns {
    let controls = EvolveControls::default();
    let cfg = reference_cfg();
    let zero = register(&cfg, &time_grid(25.0, 0.05), &controls).unwrap();
    let plus = register(&cfg.with_sector(Sector::new(1)), &time_grid(60.0, 0.05), &controls).unwrap();
    let minus = register(&cfg.with_sector(Sector::new(-1)), &time_grid(60.0, 0.05), &controls).unwrap();
    let half = ModelConfig::spin_half();
    let half_plus = register(&half, &time_grid(25.0, 0.05), &controls).unwrap();
    let half_minus = register(&half.with_sector(Sector::new(-1)), &time_grid(25.0, 0.05), &controls).unwrap();
    for (label, run) in [
        ("spin 1 s=0", &zero),
        ("spin 1 s=+1", &plus),
        ("spin 1 s=-1", &minus),
        ("spin 1/2 s=+1/2", &half_plus),
        ("spin 1/2 s=-1/2", &half_minus),
    ] {
        runs.note(label, &run.report);
    }
    SectorRuns {
        zero,
        plus,
        minus,
        half_plus,
        half_minus,
    }
}

fn conservation(runs: &Runs) -> Outcome {
    let mut drift = 0.0f64;
    let mut min = f64::INFINITY;
    let mut details = Vec::new();
    for (label, r) in &runs.conservation {
        drift = drift.max(r.max_drift);
        min = min.min(r.min_value);
        details.push(format!(
            "{label}: {} steps, |sum P - 1| <= {:.2e}, min P = {:.2e}",
            r.steps, r.max_drift, r.min_value
        ));
    }
    let mut o = Outcome::new(
        drift <= 1e-9 && min >= -1e-9,
        format!(
            "conservation and positivity over {} runs: max drift {drift:.2e}, min P {min:.2e}",
            runs.conservation.len()
        ),
    );
    o.details = details;
    o
}

fn h_theorem(s: &SectorRuns) -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    let cfg = reference_cfg();
    for (label, run, label_s, terminal) in [
        ("spin 1 s=0, tau=25", &s.zero, 0, true),
        ("spin 1 s=+1, tau=60", &s.plus, 1, true),
        ("spin 1 s=-1, tau=60", &s.minus, -1, true),
        ("spin 1/2 s=+1/2, tau=25", &s.half_plus, 1, false),
        ("spin 1/2 s=-1/2, tau=25", &s.half_minus, -1, false),
    ] {
        let step_ok = run.max_step_increase <= run.tolerance;
        pass &= step_ok;
        let mut line = format!(
            "{label}: max per-step rise {:.2e} (tolerance {:.2e})",
            run.max_step_increase, run.tolerance
        );
        if terminal {
            let tables = SectorTables::build(&cfg.with_sector(Sector::new(label_s))).unwrap();
            let g = gibbs(&tables, None).unwrap();
            let gap = (run.series.last().f_dyn - g.free_energy).abs();
            let limit = 1e-6 * g.free_energy.abs();
            pass &= gap <= limit;
            line.push_str(&format!(
                ", terminal |F_dyn + T ln Z| = {gap:.2e} (limit {limit:.2e})"
            ));
        }
        details.push(line);
    }
    let mut o = Outcome::new(pass, "H-theorem and terminal free energy");
    o.details = details;
    o
}

fn reference_numbers(s: &SectorRuns, runs: &mut Runs) -> Outcome {
    let cfg = reference_cfg();
    let mut details = Vec::new();
    let mut pass = true;
    let mut check = |label: String, got: f64, want: f64, tol: f64| {
        let rel = (got - want).abs() / want;
        let ok = rel <= tol;
        pass &= ok;
        details.push(format!(
            "[{}] {label}: {got:.4e} vs {want:.4e} (rel {rel:.3}, tol {tol})",
            if ok { "ok" } else { "off" }
        ));
    };

    let conventions = [
        ("1/3 cut", Restriction::Basin),
        ("peak window 0.1", Restriction::PeakWindow { half_width: 0.1 }),
    ];
    for (name, r) in conventions {
        let with_g = gibbs(&SectorTables::build(&cfg).unwrap(), Some(r)).unwrap();
        let without = gibbs(&SectorTables::build(&cfg.with_coupling(0.0)).unwrap(), Some(r)).unwrap();
        check(format!("N=100 g=0.15 <m2> ({name})"), with_g.m2_mean, 9.975e-4, 0.01);
        check(format!("N=100 g=0 <m2> ({name})"), without.m2_mean, 12.69e-4, 0.01);
    }
    check("N->inf g=0.15 <m2>".into(), gibbs_limit_m2(&cfg), 3.63e-4, 0.03);
    check("N->inf g=0 <m2>".into(), gibbs_limit_m2(&cfg.with_coupling(0.0)), 11.5e-4, 0.03);

    let p_dc = s.zero.final_distribution();
    let relax = post_decoupling_relax(
        p_dc,
        &cfg,
        Sector::new(0),
        &time_grid(25.0, 0.25),
        &EvolveControls::default(),
    )
    .unwrap();
    runs.note("post-decoupling s=0", &relax.report);
    check("post-decoupling start <m2>".into(), relax.series.first().m2_mean, 9.975e-4, 0.01);
    check("post-decoupling end <m2>".into(), relax.series.last().m2_mean, 12.69e-4, 0.01);

    let mut o = Outcome::new(pass, "restricted-Gibbs <m2> reference values (finite N, N->inf, decoupling)");
    o.details = details;
    o
}

fn sector_structure(s: &SectorRuns) -> Outcome {
    let cfg = reference_cfg();
    let ln_z: Vec<f64> = [-1, 0, 1]
        .iter()
        .map(|&l| gibbs(&SectorTables::build(&cfg.with_sector(Sector::new(l))).unwrap(), None).unwrap().ln_z)
        .collect();
    let z_spread = ln_z
        .iter()
        .map(|v| (v - ln_z[1]).abs() / ln_z[1].abs())
        .fold(0.0, f64::max);

    let f_gap = s
        .plus
        .series
        .points
        .iter()
        .zip(&s.minus.series.points)
        .map(|(a, b)| (a.f_dyn - b.f_dyn).abs() / a.f_dyn.abs())
        .fold(0.0, f64::max);

    let t0 = s.zero.series.time_to_fraction(0.9, |p| p.m2_mean);
    let t1 = s.plus.series.time_to_fraction(0.9, |p| p.m2_mean);
    let ratio = t1 / t0;

    let pass = z_spread <= 1e-12 && f_gap <= 1e-12 && ratio >= 1.5;
    let mut o = Outcome::new(pass, "sector structure (ln Z, F_dyn mirror, slower s=+-1)");
    o.details = vec![
        format!("ln Z over s = -1, 0, 1: {ln_z:?}, relative spread {z_spread:.2e} (limit 1e-12)"),
        format!("max |F_dyn(+1) - F_dyn(-1)| / |F_dyn| = {f_gap:.2e} (limit 1e-12)"),
        format!("90% time of <m2>: s=0 {t0:.3}, s=1 {t1:.3}, ratio {ratio:.2} (need >= 1.5)"),
    ];
    o
}

fn truncation() -> Outcome {
    let cfg = reference_cfg();
    let t1 = recurrence_time(&cfg, 1).unwrap();
    let tau = dephasing_time(&cfg).unwrap();
    let uniform = OffDiagonalPair::uniform(&cfg, Sector::new(0), Sector::new(1)).unwrap();
    let at_t1 = dephasing_factor(t1, &uniform);
    let at_tau = dephasing_factor(tau, &uniform).re;
    let e1 = (-1f64).exp();
    let recur_ok = (at_t1.re - 1.0).abs() <= 1e-12 && at_t1.im.abs() <= 1e-12;
    let gauss_ok = (at_tau - e1).abs() <= 0.05 * e1;

    let sweep: Vec<f64> = (1..=5)
        .map(|k| {
            let c = ModelConfig {
                delta_g_std: 0.002 * f64::from(k) * cfg.g,
                ..cfg.clone()
            };
            let p = OffDiagonalPair::new(&c, Sector::new(0), Sector::new(1), Complex64::new(1.0, 0.0)).unwrap();
            dephasing_factor(t1, &p).norm()
        })
        .collect();
    let monotone = sweep.windows(2).all(|w| w[1] < w[0]);
    let suppressed = sweep[4] < 0.9;

    let pass = recur_ok && gauss_ok && monotone && suppressed;
    let mut o = Outcome::new(pass, "truncation (recurrence, Gaussian law, spread suppression)");
    o.details = vec![
        format!("ratio at t1 = {t1:.6}: {:.15} {:+.2e}i", at_t1.re, at_t1.im),
        format!(
            "ratio at tau_dph = {tau:.5}: {at_tau:.5} vs e^-1 = {e1:.5} (rel {:.3}, limit 0.05)",
            (at_tau - e1).abs() / e1
        ),
        format!("|ratio(t1)| for spread/g = 0.002..0.010: {sweep:.4?} (last must be < 0.9, decreasing)"),
    ];
    o
}

fn energetics(s: &SectorRuns, runs: &mut Runs) -> Outcome {
    let cfg = reference_cfg();
    let resets: Vec<(u32, f64)> = [50, 100, 200]
        .iter()
        .map(|&n| (n, reset_energy(&cfg.with_size(n)).unwrap().total))
        .collect();
    let per_spin: Vec<f64> = resets.iter().map(|(n, u)| u / f64::from(*n)).collect();
    let mean = per_spin.iter().sum::<f64>() / per_spin.len() as f64;
    let spread = per_spin
        .iter()
        .map(|u| (u / mean - 1.0).abs())
        .fold(0.0, f64::max);
    let positive = resets.iter().all(|(_, u)| *u > 0.0);

    let reg_drop = s.zero.series.first().f_dyn - s.zero.series.last().f_dyn;
    let p_dc = s.zero.final_distribution();
    let relax = post_decoupling_relax(
        p_dc,
        &cfg,
        Sector::new(0),
        &time_grid(25.0, 0.25),
        &EvolveControls::default(),
    )
    .unwrap();
    runs.note("post-decoupling (energetics)", &relax.report);
    let post_drop = relax.series.first().f_dyn - relax.series.last().f_dyn;
    let ratio = post_drop / reg_drop;

    let free = SectorTables::build(&cfg.with_coupling(0.0)).unwrap();
    let f_dc = dynamical_free_energy(p_dc.values(), &free);

    let pass = positive && spread <= 0.02 && ratio.abs() < 1e-2;
    let mut o = Outcome::new(pass, "energetics (U_reset > 0 and extensive, decoupling drop)");
    o.details = vec![
        format!("U_reset at N = 50, 100, 200: {:?}", resets.iter().map(|r| r.1).collect::<Vec<_>>()),
        format!("U_reset / N: {per_spin:.6?}, max deviation from mean {spread:.4} (limit 0.02)"),
        format!(
            "F_dyn drop: registration {reg_drop:.6}, after decoupling {post_drop:.3e} (from {f_dc:.6}), ratio {ratio:.2e} (limit 1e-2)"
        ),
    ];
    o
}

fn fig1_spin_half(s: &SectorRuns) -> Outcome {
    let run = &s.half_plus;
    let nu = 1.0 / 100.0;
    let mut peaks = Vec::new();
    let mut stds = Vec::new();
    for (_, p) in &run.snapshots {
        let l = p.lattice();
        peaks.push(l.moments(p.argmax()).m1);
        let (mut m, mut m2) = (0.0, 0.0);
        for (i, &v) in p.values().iter().enumerate() {
            let x = l.moments(i).m1;
            m += v * x;
            m2 += v * x * x;
        }
        stds.push((m2 - m * m).max(0.0).sqrt());
    }
    let monotone = peaks.windows(2).all(|w| w[1] >= w[0]);
    let starts = peaks[0].abs() < 1e-12;
    let reaches = (0.5 - peaks.last().unwrap()).abs() <= 2.0 * nu + 1e-12;
    let (k, &top) = stds
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let broadens = top > stds[0] && k > 0;
    let narrows = *stds.last().unwrap() < top && k + 1 < stds.len();
    let pass = monotone && starts && reaches && broadens && narrows;
    let mut o = Outcome::new(pass, "spin-1/2 peak drift with broadening then narrowing");
    o.details = vec![
        format!(
            "peak m1: start {:.2}, end {:.2}, monotone {monotone}",
            peaks[0],
            peaks.last().unwrap()
        ),
        format!(
            "std m1: start {:.4}, max {top:.4} at tau {:.2}, end {:.4}",
            stds[0],
            run.snapshots[k].0,
            stds.last().unwrap()
        ),
    ];
    o
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut runs = Runs::default();
    let c1 = oracle_equivalence(&mut runs);
    let sectors = registration_runs(&mut runs);
    let c3 = h_theorem(&sectors);
    let c4 = reference_numbers(&sectors, &mut runs);
    let c5 = sector_structure(&sectors);
    let c6 = truncation();
    let c7 = energetics(&sectors, &mut runs);
    let c8 = fig1_spin_half(&sectors);
    let c2 = conservation(&runs);

    let all = [c1, c2, c3, c4, c5, c6, c7, c8];
    let mut failed = 0;
    for (i, o) in all.iter().enumerate() {
        println!("[{}] criterion {}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.summary);
        for d in &o.details {
            println!("       {d}");
        }
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1}s)",
        all.len() - failed,
        start.elapsed().as_secs_f64()
    );
    let strict = std::env::var("CWSIM_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
