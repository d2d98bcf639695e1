//! Order-parameter lattices, degeneracies and Hamiltonians of the spin-1/2 and
//! spin-1 Curie-Weiss apparatus.
//!
//! A macrostate of the magnet is identified by its occupation numbers
//! `(N_-, N_0, N_+)`: how many of the `N` apparatus spins sit at each value of
//! `sigma_z`. For spin one-half `N_0` is always zero. The moments
//! `m1 = (1/N) sum sigma` and `m2 = (1/N) sum sigma^2` are derived from the
//! occupations and never used as keys.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::kernel::BathKernel;

/// Spin of the measured system, which is also the spin of every apparatus spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Half,
    One,
}

impl Spin {
    /// Number of eigenvalues, `2l + 1`.
    pub fn multiplicity(self) -> u32 {
        match self {
            Spin::Half => 2,
            Spin::One => 3,
        }
    }

    /// The value `l`.
    pub fn magnitude(self) -> f64 {
        match self {
            Spin::Half => 0.5,
            Spin::One => 1.0,
        }
    }

    pub fn sectors(self) -> &'static [Sector] {
        const HALF: [Sector; 2] = [Sector(-1), Sector(1)];
        const ONE: [Sector; 3] = [Sector(-1), Sector(0), Sector(1)];
        match self {
            Spin::Half => &HALF,
            Spin::One => &ONE,
        }
    }

    /// Single-spin flips that the bath can induce, `(from, to)`.
    pub fn flips(self) -> &'static [Flip] {
        const HALF: [Flip; 2] = [
            Flip::new(Level::Plus, Level::Minus),
            Flip::new(Level::Minus, Level::Plus),
        ];
        // Order matches the (alpha, beta) channels of the lumped generator:
        // (+,+), (-,+), (+,-), (-,-).
        const ONE: [Flip; 4] = [
            Flip::new(Level::Plus, Level::Zero),
            Flip::new(Level::Minus, Level::Zero),
            Flip::new(Level::Zero, Level::Minus),
            Flip::new(Level::Zero, Level::Plus),
        ];
        match self {
            Spin::Half => &HALF,
            Spin::One => &ONE,
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spin::Half => f.write_str("half"),
            Spin::One => f.write_str("one"),
        }
    }
}

impl FromStr for Spin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "half" | "1/2" | "0.5" => Ok(Spin::Half),
            "one" | "1" => Ok(Spin::One),
            other => Err(Error::InvalidConfig(format!("unknown spin '{other}'"))),
        }
    }
}

/// Eigenvalue branch `s` of the measured `s_z`.
///
/// The label is `s` itself for spin one and the sign of `s = +-1/2` for spin
/// one-half, so that labels are always integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sector(i8);

impl Sector {
    pub const fn new(label: i8) -> Self {
        Sector(label)
    }

    pub fn label(self) -> i8 {
        self.0
    }

    /// The physical eigenvalue `s`.
    pub fn value(self, spin: Spin) -> f64 {
        f64::from(self.0) * spin.magnitude()
    }

    pub fn mirrored(self) -> Self {
        Sector(-self.0)
    }

    pub fn is_valid_for(self, spin: Spin) -> bool {
        spin.sectors().contains(&self)
    }

    pub fn check(self, spin: Spin) -> Result<Self> {
        if self.is_valid_for(spin) {
            Ok(self)
        } else {
            Err(Error::InvalidSector {
                spin: spin.to_string(),
                label: self.0,
            })
        }
    }

    /// Parses a physical eigenvalue (`-1`, `0`, `1`, `0.5`, `-1/2`, ...).
    pub fn parse(text: &str, spin: Spin) -> Result<Self> {
        let text = text.trim();
        let value = match text.split_once('/') {
            Some((num, den)) => {
                let num: f64 = num
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad sector '{text}'")))?;
                let den: f64 = den
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad sector '{text}'")))?;
                num / den
            }
            None => text
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad sector '{text}'")))?,
        };
        let label = value / spin.magnitude();
        if label.fract() != 0.0 || label.abs() > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "sector {text} is not an eigenvalue for spin {spin}"
            )));
        }
        Sector(label as i8).check(spin)
    }
}

/// The value of one apparatus spin: `-l`, `0` (spin one only) or `+l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Minus,
    Zero,
    Plus,
}

impl Level {
    pub fn sign(self) -> i8 {
        match self {
            Level::Minus => -1,
            Level::Zero => 0,
            Level::Plus => 1,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Self> {
        match sign {
            -1 => Some(Level::Minus),
            0 => Some(Level::Zero),
            1 => Some(Level::Plus),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Flip {
    pub from: Level,
    pub to: Level,
}

impl Flip {
    pub const fn new(from: Level, to: Level) -> Self {
        Flip { from, to }
    }
}

/// Occupation numbers `(N_-, N_0, N_+)` of a macrostate; a lattice site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Occupation {
    pub minus: u32,
    pub zero: u32,
    pub plus: u32,
}

impl Occupation {
    pub const fn new(minus: u32, zero: u32, plus: u32) -> Self {
        Occupation { minus, zero, plus }
    }

    /// Spin-1 site from the labels `m1 = (2 n1 - n2)/N`, `m2 = n2/N`.
    pub fn from_labels(n: u32, n1: u32, n2: u32) -> Option<Self> {
        (n2 <= n && n1 <= n2).then(|| Occupation::new(n2 - n1, n - n2, n1))
    }

    /// Spin-1/2 site with `up` spins at `+1/2`.
    pub fn from_up_count(n: u32, up: u32) -> Option<Self> {
        (up <= n).then(|| Occupation::new(n - up, 0, up))
    }

    pub fn total(&self) -> u32 {
        self.minus + self.zero + self.plus
    }

    pub fn n1(&self) -> u32 {
        self.plus
    }

    pub fn n2(&self) -> u32 {
        self.plus + self.minus
    }

    pub fn count(&self, level: Level) -> u32 {
        match level {
            Level::Minus => self.minus,
            Level::Zero => self.zero,
            Level::Plus => self.plus,
        }
    }

    fn count_mut(&mut self, level: Level) -> &mut u32 {
        match level {
            Level::Minus => &mut self.minus,
            Level::Zero => &mut self.zero,
            Level::Plus => &mut self.plus,
        }
    }

    /// The macrostate reached when one spin goes `from -> to`, if any spin is
    /// available to flip.
    pub fn flipped(&self, flip: Flip) -> Option<Self> {
        if self.count(flip.from) == 0 {
            return None;
        }
        let mut next = *self;
        *next.count_mut(flip.from) -= 1;
        *next.count_mut(flip.to) += 1;
        Some(next)
    }

    pub fn mirrored(&self) -> Self {
        Occupation::new(self.plus, self.zero, self.minus)
    }
}

/// Real-valued order parameters. For spin one-half `m2` is the constant `1/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub m1: f64,
    pub m2: f64,
}

impl Moments {
    pub const fn new(m1: f64, m2: f64) -> Self {
        Moments { m1, m2 }
    }

    pub fn of(spin: Spin, occ: Occupation) -> Self {
        let n = f64::from(occ.total());
        let l = spin.magnitude();
        let diff = f64::from(occ.plus) - f64::from(occ.minus);
        let ends = f64::from(occ.plus + occ.minus);
        Moments::new(l * diff / n, l * l * ends / n)
    }
}

/// All physical and numerical parameters of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub spin: Spin,
    /// Number of apparatus spins.
    pub n: u32,
    pub j2: f64,
    pub j4: f64,
    /// System-apparatus coupling.
    pub g: f64,
    /// Bath temperature `T = 1/beta`.
    pub temperature: f64,
    /// Debye cutoff `Gamma` of the bath spectrum.
    pub cutoff: f64,
    pub sector: Sector,
    /// Standard deviation of the per-spin coupling spread `delta g_n`.
    pub delta_g_std: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            spin: Spin::One,
            n: 100,
            j2: 0.0,
            j4: 1.0,
            g: 0.15,
            temperature: 0.2,
            cutoff: 10.0,
            sector: Sector(0),
            delta_g_std: 0.0,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// Default parameters for a spin-1/2 apparatus, sector `s = +1/2`.
    pub fn spin_half() -> Self {
        ModelConfig {
            spin: Spin::Half,
            sector: Sector(1),
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "cutoff must be positive, got {}",
                self.cutoff
            )));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::InvalidConfig(format!("g must be nonnegative, got {}", self.g)));
        }
        if !(self.delta_g_std >= 0.0 && self.delta_g_std.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "delta_g_std must be nonnegative, got {}",
                self.delta_g_std
            )));
        }
        if !self.j2.is_finite() || !self.j4.is_finite() {
            return Err(Error::InvalidConfig("couplings must be finite".into()));
        }
        self.sector.check(self.spin)?;
        Ok(())
    }

    pub fn nu(&self) -> f64 {
        1.0 / f64::from(self.n)
    }

    pub fn kernel(&self) -> BathKernel {
        BathKernel::new(self.temperature, self.cutoff)
    }

    pub fn with_coupling(&self, g: f64) -> Self {
        ModelConfig { g, ..self.clone() }
    }

    pub fn with_size(&self, n: u32) -> Self {
        ModelConfig { n, ..self.clone() }
    }

    pub fn with_sector(&self, sector: Sector) -> Self {
        ModelConfig {
            sector,
            ..self.clone()
        }
    }
}

/// Spin fractions `(x_-, x_0, x_+)`; `x_0 = 0` for spin one-half.
pub fn spin_fractions(occ: Occupation) -> [f64; 3] {
    let n = f64::from(occ.total());
    [
        f64::from(occ.minus) / n,
        f64::from(occ.zero) / n,
        f64::from(occ.plus) / n,
    ]
}

/// Fractions recovered from real moments (large-N diagnostics).
pub fn fractions_from_moments(spin: Spin, m: Moments) -> [f64; 3] {
    match spin {
        Spin::Half => [0.5 - m.m1, 0.0, 0.5 + m.m1],
        Spin::One => [(m.m2 - m.m1) / 2.0, 1.0 - m.m2, (m.m2 + m.m1) / 2.0],
    }
}

/// `ln G_N`, the log of the multinomial number of microstates.
pub fn log_degeneracy(occ: Occupation) -> f64 {
    ln_multinomial(occ, |k| ln_gamma(f64::from(k) + 1.0))
}

/// Sums the `+-1` terms in a fixed order so that mirror images agree bitwise.
pub(crate) fn ln_multinomial(occ: Occupation, ln_fact: impl Fn(u32) -> f64) -> f64 {
    let (lo, hi) = if occ.minus <= occ.plus {
        (occ.minus, occ.plus)
    } else {
        (occ.plus, occ.minus)
    };
    ln_fact(occ.total()) - ln_fact(occ.zero) - ln_fact(lo) - ln_fact(hi)
}

/// Large-N entropy per spin, `-sum x ln x`.
pub fn entropy_density(spin: Spin, m: Moments) -> f64 {
    fractions_from_moments(spin, m)
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum()
}

/// The cosine order parameter `C_2` in terms of the moments.
pub fn c2(spin: Spin, m: Moments) -> f64 {
    match spin {
        Spin::Half => 4.0 * m.m1 * m.m1,
        Spin::One => {
            let a = 1.0 - 1.5 * m.m2;
            a * a + 0.75 * m.m1 * m.m1
        }
    }
}

/// Magnet energy per spin at `g = 0`.
pub fn magnet_energy_density(cfg: &ModelConfig, m: Moments) -> f64 {
    let c = c2(cfg.spin, m);
    -0.5 * cfg.j2 * c - 0.25 * cfg.j4 * c * c
}

/// System-apparatus interaction per spin, `I_s(m)`.
pub fn interaction_density(cfg: &ModelConfig, s: Sector, m: Moments) -> f64 {
    let sv = s.value(cfg.spin);
    match cfg.spin {
        Spin::Half => -4.0 * cfg.g * sv * m.m1,
        Spin::One => -cfg.g * ((1.0 - 1.5 * sv * sv) * (1.0 - 1.5 * m.m2) + 0.75 * sv * m.m1),
    }
}

/// Extensive Hamiltonian `H_s(m)` of magnet plus coupling in sector `s`.
pub fn sector_hamiltonian(cfg: &ModelConfig, s: Sector, m: Moments) -> f64 {
    f64::from(cfg.n) * (magnet_energy_density(cfg, m) + interaction_density(cfg, s, m))
}

/// Exact finite-N free energy `H_s - T ln G_N` of one macrostate.
pub fn free_energy(cfg: &ModelConfig, s: Sector, occ: Occupation) -> f64 {
    sector_hamiltonian(cfg, s, Moments::of(cfg.spin, occ)) - cfg.temperature * log_degeneracy(occ)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub flip: Flip,
    pub target: usize,
}

/// Enumeration of all macrostates with their single-flip neighbours.
///
/// Spin-1 sites are ordered by `n2` then `n1`, spin-1/2 sites by the number of
/// up spins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentLattice {
    spin: Spin,
    n: u32,
    sites: Vec<Occupation>,
    link_offsets: Vec<usize>,
    links: Vec<Link>,
}

impl MomentLattice {
    pub fn new(spin: Spin, n: u32) -> Self {
        let sites: Vec<Occupation> = match spin {
            Spin::Half => (0..=n)
                .map(|up| Occupation::from_up_count(n, up).unwrap())
                .collect(),
            Spin::One => (0..=n)
                .flat_map(|n2| (0..=n2).map(move |n1| Occupation::from_labels(n, n1, n2).unwrap()))
                .collect(),
        };
        let mut lattice = MomentLattice {
            spin,
            n,
            sites,
            link_offsets: Vec::new(),
            links: Vec::new(),
        };
        let mut offsets = Vec::with_capacity(lattice.sites.len() + 1);
        let mut links = Vec::with_capacity(lattice.sites.len() * spin.flips().len());
        offsets.push(0);
        for occ in &lattice.sites {
            for &flip in spin.flips() {
                if let Some(next) = occ.flipped(flip) {
                    let target = lattice
                        .index_of(next)
                        .expect("single flip stays on the lattice");
                    links.push(Link { flip, target });
                }
            }
            offsets.push(links.len());
        }
        lattice.link_offsets = offsets;
        lattice.links = links;
        lattice
    }

    pub fn for_config(cfg: &ModelConfig) -> Arc<Self> {
        Arc::new(MomentLattice::new(cfg.spin, cfg.n))
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Occupation] {
        &self.sites
    }

    pub fn site(&self, index: usize) -> Occupation {
        self.sites[index]
    }

    pub fn index_of(&self, occ: Occupation) -> Option<usize> {
        if occ.total() != self.n {
            return None;
        }
        match self.spin {
            Spin::Half => (occ.zero == 0).then_some(occ.plus as usize),
            Spin::One => {
                let n2 = occ.n2() as usize;
                Some(n2 * (n2 + 1) / 2 + occ.n1() as usize)
            }
        }
    }

    /// Index of the site with `m1` reversed.
    pub fn mirror_index(&self, index: usize) -> usize {
        self.index_of(self.sites[index].mirrored())
            .expect("mirror image is on the lattice")
    }

    pub fn links(&self, index: usize) -> &[Link] {
        &self.links[self.link_offsets[index]..self.link_offsets[index + 1]]
    }

    pub fn moments(&self, index: usize) -> Moments {
        Moments::of(self.spin, self.sites[index])
    }

    /// Site with all spins at `level`.
    pub fn corner(&self, level: Level) -> Option<usize> {
        let mut occ = Occupation::new(0, 0, 0);
        *occ.count_mut(level) = self.n;
        self.index_of(occ)
    }
}

/// Per-site tables for one sector: energies, log-degeneracies and moments.
#[derive(Debug, Clone)]
pub struct SectorTables {
    pub cfg: ModelConfig,
    pub sector: Sector,
    pub lattice: Arc<MomentLattice>,
    pub energy: Vec<f64>,
    pub log_degeneracy: Vec<f64>,
    pub moments: Vec<Moments>,
}

impl SectorTables {
    pub fn new(cfg: &ModelConfig, sector: Sector, lattice: Arc<MomentLattice>) -> Result<Self> {
        cfg.validate()?;
        sector.check(cfg.spin)?;
        if lattice.spin() != cfg.spin || lattice.n() != cfg.n {
            return Err(Error::InvalidConfig(
                "lattice does not match the configuration".into(),
            ));
        }
        let ln_fact = ln_factorials(cfg.n);
        let moments: Vec<Moments> = (0..lattice.len()).map(|i| lattice.moments(i)).collect();
        let energy = moments
            .iter()
            .map(|&m| sector_hamiltonian(cfg, sector, m))
            .collect();
        let log_degeneracy = lattice
            .sites()
            .iter()
            .map(|&o| ln_multinomial(o, |k| ln_fact[k as usize]))
            .collect();
        Ok(SectorTables {
            cfg: cfg.clone(),
            sector,
            lattice,
            energy,
            log_degeneracy,
            moments,
        })
    }

    /// Tables for `cfg.sector` on a fresh lattice.
    pub fn build(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        SectorTables::new(cfg, cfg.sector, MomentLattice::for_config(cfg))
    }

    pub fn len(&self) -> usize {
        self.energy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energy.is_empty()
    }

    pub fn free_energy(&self, index: usize) -> f64 {
        self.energy[index] - self.cfg.temperature * self.log_degeneracy[index]
    }
}

fn ln_factorials(n: u32) -> Vec<f64> {
    (0..=n).map(|k| ln_gamma(f64::from(k) + 1.0)).collect()
}
