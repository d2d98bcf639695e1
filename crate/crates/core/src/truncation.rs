//! Early-time decay of the off-diagonal blocks `r_{s s'}(t)` of a spin-1
//! measurement: dephasing by the coupling to S, then bath decoherence.
//!
//! Times here are raw `t`, not `tau`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, Sector, Spin};

/// A cat term `r_{s s'}` together with the per-spin couplings `g_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffDiagonalPair {
    pub s: Sector,
    pub s_tilde: Sector,
    pub r0: Complex64,
    pub couplings: Vec<f64>,
}

impl OffDiagonalPair {
    /// Couplings are drawn from `cfg` (see [`sample_couplings`]).
    pub fn new(cfg: &ModelConfig, s: Sector, s_tilde: Sector, r0: Complex64) -> Result<Self> {
        require_spin_one(cfg)?;
        s.check(cfg.spin)?;
        s_tilde.check(cfg.spin)?;
        if s == s_tilde {
            return Err(Error::DiagonalPair(s.label()));
        }
        if !(r0.norm() <= 1.0) {
            return Err(Error::InvalidConfig(format!("|r0| = {} exceeds 1", r0.norm())));
        }
        Ok(OffDiagonalPair {
            s,
            s_tilde,
            r0,
            couplings: sample_couplings(cfg),
        })
    }

    pub fn uniform(cfg: &ModelConfig, s: Sector, s_tilde: Sector) -> Result<Self> {
        let cfg = ModelConfig {
            delta_g_std: 0.0,
            ..cfg.clone()
        };
        OffDiagonalPair::new(&cfg, s, s_tilde, Complex64::new(1.0, 0.0))
    }

    pub fn swapped(&self) -> Self {
        OffDiagonalPair {
            s: self.s_tilde,
            s_tilde: self.s,
            r0: self.r0.conj(),
            couplings: self.couplings.clone(),
        }
    }
}

fn require_spin_one(cfg: &ModelConfig) -> Result<()> {
    if cfg.spin != Spin::One {
        return Err(Error::InvalidConfig(
            "truncation dynamics is implemented for spin 1 only".into(),
        ));
    }
    Ok(())
}

/// `g_n = g + delta_g_std * z_n` with `z_n` standard normal from a ChaCha
/// stream seeded by `cfg.seed`. The same seed gives the same `z_n` for every
/// spread, so sweeps over `delta_g_std` are nested.
pub fn sample_couplings(cfg: &ModelConfig) -> Vec<f64> {
    let n = cfg.n as usize;
    if cfg.delta_g_std == 0.0 {
        return vec![cfg.g; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            cfg.g + cfg.delta_g_std * z
        })
        .collect()
}

/// Kronecker delta written as the polynomial used for the `H_SA` diagonal.
fn delta(sigma: i8, s: i8) -> f64 {
    let (sg, s) = (f64::from(sigma), f64::from(s));
    1.0 / 3.0 + (2.0 / 3.0 - s * s) * (1.0 - 1.5 * sg * sg) + 0.5 * s * sg
}

/// `r(t)/r(0)` from the free precession of every spin in the coupling to S.
pub fn dephasing_factor(t: f64, pair: &OffDiagonalPair) -> Complex64 {
    let (s, st) = (pair.s.label(), pair.s_tilde.label());
    let mut ratio = Complex64::new(1.0, 0.0);
    for &g in &pair.couplings {
        let mut spin = Complex64::new(0.0, 0.0);
        for sigma in -1..=1 {
            let phase = 1.5 * g * t * (delta(sigma, s) - delta(sigma, st));
            spin += Complex64::from_polar(1.0 / 3.0, phase);
        }
        ratio *= spin;
    }
    ratio
}

/// Closed form `(1/3 + 2/3 cos(3 g t / 2))^N` for uniform couplings.
pub fn uniform_dephasing(t: f64, g: f64, n: u32) -> f64 {
    (1.0 / 3.0 + 2.0 / 3.0 * (1.5 * g * t).cos()).powi(n as i32)
}

/// `tau_dph = 2 / (g sqrt(3N))`.
pub fn dephasing_time(cfg: &ModelConfig) -> Result<f64> {
    if cfg.g <= 0.0 {
        return Err(Error::ZeroCoupling);
    }
    Ok(2.0 / (cfg.g * (3.0 * f64::from(cfg.n)).sqrt()))
}

/// `t_n = 4 pi n / (3 g)`.
pub fn recurrence_time(cfg: &ModelConfig, n: u32) -> Result<f64> {
    if cfg.g <= 0.0 {
        return Err(Error::ZeroCoupling);
    }
    Ok(4.0 * PI * f64::from(n) / (3.0 * cfg.g))
}

/// Energy change `H_s(sigma + alpha) - H_s(sigma)` of one spin in the coupling.
pub fn frequency_shift(sigma: i8, alpha: i8, s: i8, g: f64) -> f64 {
    let (sg, a, s) = (f64::from(sigma), f64::from(alpha), f64::from(s));
    1.5 * g * ((1.0 - 1.5 * s * s) * (1.0 + 2.0 * a * sg) - 0.5 * s * a)
}

/// Long-time `Re dB_sigma/dt` per unit `gamma` for an off-diagonal pair.
pub fn decoherence_rate(sigma: i8, s: Sector, s_tilde: Sector, cfg: &ModelConfig) -> f64 {
    let k = cfg.kernel();
    [-1i8, 1]
        .iter()
        .map(|&a| {
            k.eval(frequency_shift(sigma, a, s.label(), cfg.g))
                + k.eval(frequency_shift(sigma, a, s_tilde.label(), cfg.g))
        })
        .sum::<f64>()
        * 0.5
}

/// The `s = s'` counterpart, `(1/2) sum_alpha [K(D) - K(-D)]` per unit `gamma`.
pub fn diagonal_rate(sigma: i8, s: Sector, cfg: &ModelConfig) -> f64 {
    let k = cfg.kernel();
    [-1i8, 1]
        .iter()
        .map(|&a| k.odd_part(frequency_shift(sigma, a, s.label(), cfg.g)))
        .sum::<f64>()
        * 0.5
}

/// Accumulated damping exponents `Re B_sigma` for `sigma = -1, 0, 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceState {
    pub b_re: [f64; 3],
    rates: [f64; 3],
}

impl DecoherenceState {
    /// `gamma` is the bath coupling in the units of `t`.
    pub fn new(pair: &OffDiagonalPair, cfg: &ModelConfig, gamma: f64) -> Self {
        let mut rates = [0.0; 3];
        for (slot, sigma) in rates.iter_mut().zip(-1i8..=1) {
            *slot = gamma * decoherence_rate(sigma, pair.s, pair.s_tilde, cfg);
        }
        DecoherenceState { b_re: [0.0; 3], rates }
    }

    pub fn rates(&self) -> [f64; 3] {
        self.rates
    }

    pub fn advance(&mut self, dt: f64) {
        for (b, r) in self.b_re.iter_mut().zip(&self.rates) {
            *b += r * dt;
        }
    }

    /// Per-spin-count damping `exp(-N Re B_sigma)`.
    pub fn damping(&self, n: u32) -> [f64; 3] {
        self.b_re.map(|b| (-f64::from(n) * b).exp())
    }
}

/// `r(t)/r(0)` with dephasing and the weakest of the three bath dampings.
pub fn offdiag_envelope(t: f64, pair: &OffDiagonalPair, cfg: &ModelConfig, gamma: f64) -> Complex64 {
    let mut state = DecoherenceState::new(pair, cfg, gamma);
    state.advance(t);
    let damping = state.damping(cfg.n).iter().copied().fold(0.0, f64::max);
    dephasing_factor(t, pair) * damping
}

/// Running maximum of `|values|` taken from the right: the upper envelope.
pub fn upper_envelope(values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    let mut best: f64 = 0.0;
    for (o, v) in out.iter_mut().zip(values).rev() {
        best = best.max(v.abs());
        *o = best;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg() -> ModelConfig {
        ModelConfig::default()
    }

    fn pair(s: i8, st: i8) -> OffDiagonalPair {
        OffDiagonalPair::uniform(&cfg(), Sector::new(s), Sector::new(st)).unwrap()
    }

    #[test]
    fn delta_polynomial_is_kronecker() {
        for sigma in -1..=1 {
            for s in -1..=1 {
                let want = if sigma == s { 1.0 } else { 0.0 };
                assert!((delta(sigma, s) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dephasing_matches_closed_form_for_all_pairs() {
        for (s, st) in [(0, 1), (1, 0), (-1, 1), (0, -1)] {
            let p = pair(s, st);
            for t in [0.0, 0.3, 1.7, 9.0, 40.0] {
                let r = dephasing_factor(t, &p);
                let want = uniform_dephasing(t, 0.15, 100);
                assert!((r.re - want).abs() <= 1e-12 * want.abs().max(1e-300) + 1e-300);
                assert!(r.im.abs() <= 1e-12 * r.re.abs().max(1e-30));
            }
        }
    }

    #[test]
    fn recurrences_and_dephasing_time() {
        let p = pair(0, 1);
        let t1 = recurrence_time(&cfg(), 1).unwrap();
        assert!((dephasing_factor(t1, &p).re - 1.0).abs() <= 1e-12);
        assert!((dephasing_factor(0.0, &p) - 1.0).norm() == 0.0);

        let tau = dephasing_time(&cfg()).unwrap();
        assert_relative_eq!(tau, 0.769_800_358_919_501, max_relative = 1e-12);
        let r = dephasing_factor(tau, &p).re;
        assert!((r - (-1f64).exp()).abs() <= 0.05 * (-1f64).exp());

        let c = cfg();
        assert_relative_eq!(dephasing_time(&c.with_size(400)).unwrap(), tau / 2.0, max_relative = 1e-14);
        assert_relative_eq!(dephasing_time(&c.with_coupling(0.3)).unwrap(), tau / 2.0, max_relative = 1e-14);
        assert_eq!(dephasing_time(&c.with_coupling(0.0)), Err(Error::ZeroCoupling));
    }

    #[test]
    fn short_time_gaussian_law() {
        let p = pair(1, -1);
        let tau = dephasing_time(&cfg()).unwrap();
        for k in 1..=30 {
            let t = 0.3 * tau * f64::from(k) / 30.0;
            let x = t / tau;
            let err = (dephasing_factor(t, &p).re.ln() + x * x).abs();
            assert!(err <= 0.1 * x.powi(4), "t/tau = {x}: {err}");
        }
    }

    #[test]
    fn rejects_diagonal_pairs_and_spin_half() {
        assert_eq!(
            OffDiagonalPair::uniform(&cfg(), Sector::new(1), Sector::new(1)).unwrap_err(),
            Error::DiagonalPair(1)
        );
        assert!(OffDiagonalPair::uniform(&ModelConfig::spin_half(), Sector::new(1), Sector::new(-1)).is_err());
    }

    #[test]
    fn spread_breaks_the_recurrence_monotonically() {
        let t1 = recurrence_time(&cfg(), 1).unwrap();
        let mut last = 1.0;
        for k in 1..=5 {
            let c = ModelConfig { delta_g_std: 0.0006 * f64::from(k), seed: 0, ..cfg() };
            let p = OffDiagonalPair::new(&c, Sector::new(0), Sector::new(1), Complex64::new(0.5, 0.0)).unwrap();
            let r = dephasing_factor(t1, &p).norm();
            assert!(r < last, "spread {}: {r} >= {last}", c.delta_g_std);
            last = r;
        }
        let c = ModelConfig { delta_g_std: 0.0015, ..cfg() };
        let p = OffDiagonalPair::new(&c, Sector::new(0), Sector::new(1), Complex64::new(0.5, 0.0)).unwrap();
        assert!(dephasing_factor(t1, &p).norm() < 0.9);
    }

    #[test]
    fn seeded_couplings_are_reproducible() {
        let c = ModelConfig { delta_g_std: 0.01, seed: 42, ..cfg() };
        assert_eq!(sample_couplings(&c), sample_couplings(&c));
        let d = ModelConfig { seed: 43, ..c.clone() };
        assert_ne!(sample_couplings(&c), sample_couplings(&d));
    }

    #[test]
    fn frequency_shift_example() {
        assert_relative_eq!(frequency_shift(0, 1, 1, 0.15), -1.5 * 0.15, max_relative = 1e-15);
    }

    #[test]
    fn decoherence_is_strong_on_the_registration_scale() {
        let c = cfg();
        for (s, st) in [(0, 1), (0, -1), (1, -1)] {
            for sigma in -1..=1 {
                let rate = decoherence_rate(sigma, Sector::new(s), Sector::new(st), &c);
                assert!(rate > 0.0);
                // N Re B over tau_reg = 1/(gamma T)
                assert!(f64::from(c.n) * rate / c.temperature >= 10.0);
            }
        }
    }

    #[test]
    fn diagonal_rate_is_the_odd_part_of_the_kernel() {
        let c = cfg();
        let k = c.kernel();
        for s in -1..=1 {
            for sigma in -1..=1 {
                let direct: f64 = [-1i8, 1]
                    .iter()
                    .map(|&a| {
                        let d = frequency_shift(sigma, a, s, c.g);
                        k.eval(d) - k.eval(-d)
                    })
                    .sum::<f64>()
                    * 0.5;
                assert!((direct - diagonal_rate(sigma, Sector::new(s), &c)).abs() < 1e-14);
                let off = decoherence_rate(sigma, Sector::new(s), Sector::new(if s == 1 { 0 } else { 1 }), &c);
                assert!(diagonal_rate(sigma, Sector::new(s), &c).abs() < off);
            }
        }
    }

    #[test]
    fn envelope_reduces_to_dephasing_without_bath() {
        let p = pair(0, 1);
        for t in [0.0, 0.5, 3.0] {
            assert_eq!(offdiag_envelope(t, &p, &cfg(), 0.0), dephasing_factor(t, &p));
        }
    }

    #[test]
    fn envelope_is_hermitian() {
        let c = ModelConfig { delta_g_std: 0.003, seed: 1, ..cfg() };
        let p = OffDiagonalPair::new(&c, Sector::new(-1), Sector::new(0), Complex64::new(0.2, 0.1)).unwrap();
        for t in [0.1, 2.0, 30.0] {
            let a = offdiag_envelope(t, &p, &c, 1e-3);
            let b = offdiag_envelope(t, &p.swapped(), &c, 1e-3);
            assert!((a - b.conj()).norm() <= 1e-15);
        }
    }

    #[test]
    fn upper_envelope_is_nonincreasing() {
        let e = upper_envelope(&[0.1, -0.9, 0.3, 0.5, -0.2]);
        assert_eq!(e, vec![0.9, 0.9, 0.5, 0.5, 0.2]);
    }

    proptest! {
        #[test]
        fn bounded_by_one(t in 0.0f64..200.0, std in 0.0f64..0.02, seed in 0u64..50) {
            let c = ModelConfig { delta_g_std: std, seed, ..cfg() };
            let p = OffDiagonalPair::new(&c, Sector::new(1), Sector::new(0), Complex64::new(1.0, 0.0)).unwrap();
            prop_assert!(dephasing_factor(t, &p).norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn rate_mirror_invariance(g in 0.01f64..0.5, s in -1i8..=1, st in -1i8..=1, sigma in -1i8..=1) {
            prop_assume!(s != st);
            let c = cfg().with_coupling(g);
            let a = decoherence_rate(sigma, Sector::new(s), Sector::new(st), &c);
            let b = decoherence_rate(-sigma, Sector::new(-s), Sector::new(-st), &c);
            prop_assert!((a - b).abs() <= 1e-14 * a.abs());
        }
    }
}
