//! Fock-space configurations of spin-1/2 fermions on `L` spatial sites.
//!
//! A [`Config`] stores one occupation bitmask per spin channel. Spin-orbitals
//! are indexed canonically as `p = spin * L + site` with the up block first,
//! and every fermionic phase is computed with respect to the creation-operator
//! string ordered by ascending `p`. With this block ordering, restricted-mode
//! determinants factorize into independent spin blocks with no extra sign.

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::error::FockError;
use crate::util::binomial;

/// Hard cap on spatial sites imposed by the 64-bit occupation masks.
pub const MAX_SITES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Dn,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Dn];

    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Dn => 1,
        }
    }
}

/// Whether orbitals carry a definite spin (restricted) or mix spin channels
/// inside a single determinant (generalized).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SpinMode {
    #[default]
    Restricted,
    Generalized,
}

/// Electron-sector description: site count and per-spin electron numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SystemSpec {
    pub sites: usize,
    pub n_up: usize,
    pub n_dn: usize,
    pub spin_mode: SpinMode,
}

impl SystemSpec {
    pub fn new(
        sites: usize,
        n_up: usize,
        n_dn: usize,
        spin_mode: SpinMode,
    ) -> Result<Self, FockError> {
        if sites == 0 || sites > MAX_SITES {
            return Err(FockError::InvalidSpec(format!(
                "sites must be in 1..={MAX_SITES}, got {sites}"
            )));
        }
        if n_up > sites || n_dn > sites {
            return Err(FockError::InvalidSpec(format!(
                "electron counts ({n_up}, {n_dn}) exceed {sites} sites"
            )));
        }
        Ok(SystemSpec {
            sites,
            n_up,
            n_dn,
            spin_mode,
        })
    }

    pub fn n_elec(&self) -> usize {
        self.n_up + self.n_dn
    }

    pub fn n_spin(&self, spin: Spin) -> usize {
        match spin {
            Spin::Up => self.n_up,
            Spin::Dn => self.n_dn,
        }
    }

    /// Number of configurations in the (N_up, N_dn) sector.
    pub fn sector_dim(&self) -> u128 {
        binomial(self.sites, self.n_up) * binomial(self.sites, self.n_dn)
    }

    /// True if `cfg` has the declared per-spin electron counts.
    pub fn contains(&self, cfg: &Config) -> bool {
        cfg.up.count_ones() as usize == self.n_up && cfg.dn.count_ones() as usize == self.n_dn
    }
}

/// Canonical spin-orbital index `p = spin * L + site`; up block first.
pub fn spin_orbital_index(sites: usize, site: usize, spin: Spin) -> Result<usize, FockError> {
    if site >= sites {
        return Err(FockError::SiteOutOfRange { site, sites });
    }
    Ok(spin.index() * sites + site)
}

/// Inverse of [`spin_orbital_index`].
pub fn spin_orbital_split(sites: usize, p: usize) -> (Spin, usize) {
    if p < sites {
        (Spin::Up, p)
    } else {
        (Spin::Dn, p - sites)
    }
}

/// An electronic Fock configuration: one occupation bit per (site, spin).
///
/// The derived ordering is lexicographic in `(up, dn)`, which is the canonical
/// enumeration order of a sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub up: u64,
    pub dn: u64,
}

impl Config {
    pub const VACUUM: Config = Config { up: 0, dn: 0 };

    pub fn new(up: u64, dn: u64) -> Self {
        Config { up, dn }
    }

    pub fn from_site_lists(up_sites: &[usize], dn_sites: &[usize]) -> Self {
        let mut cfg = Config::VACUUM;
        for &s in up_sites {
            cfg.up |= 1 << s;
        }
        for &s in dn_sites {
            cfg.dn |= 1 << s;
        }
        cfg
    }

    pub fn mask(&self, spin: Spin) -> u64 {
        match spin {
            Spin::Up => self.up,
            Spin::Dn => self.dn,
        }
    }

    fn mask_mut(&mut self, spin: Spin) -> &mut u64 {
        match spin {
            Spin::Up => &mut self.up,
            Spin::Dn => &mut self.dn,
        }
    }

    /// Local occupation state of `site`: 0 empty, 1 up, 2 down, 3 double.
    pub fn site_state(&self, site: usize) -> u8 {
        (((self.up >> site) & 1) + 2 * ((self.dn >> site) & 1)) as u8
    }

    /// Occupancy of the canonical spin-orbital `p` (needs the site count).
    pub fn occupied(&self, sites: usize, p: usize) -> bool {
        let (spin, site) = spin_orbital_split(sites, p);
        (self.mask(spin) >> site) & 1 == 1
    }

    pub fn site_occupied(&self, spin: Spin, site: usize) -> bool {
        (self.mask(spin) >> site) & 1 == 1
    }

    /// Occupied sites of one spin channel in ascending order.
    pub fn occupied_sites(&self, spin: Spin) -> Vec<usize> {
        bits_ascending(self.mask(spin))
    }

    /// Occupied canonical spin-orbitals in ascending order.
    pub fn occupied_spin_orbitals(&self, sites: usize) -> Vec<usize> {
        let mut v = bits_ascending(self.up);
        v.extend(bits_ascending(self.dn).into_iter().map(|s| s + sites));
        v
    }

    /// Number of doubly occupied sites.
    pub fn double_occupancy(&self) -> u32 {
        (self.up & self.dn).count_ones()
    }

    /// Number of occupied spin-orbitals with canonical index strictly below `p`.
    fn occupied_below(&self, sites: usize, p: usize) -> u32 {
        if p < sites {
            (self.up & low_bits(p)).count_ones()
        } else {
            self.up.count_ones() + (self.dn & low_bits(p - sites)).count_ones()
        }
    }
}

fn low_bits(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn bits_ascending(mut mask: u64) -> Vec<usize> {
    let mut v = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        let b = mask.trailing_zeros() as usize;
        v.push(b);
        mask &= mask - 1;
    }
    v
}

/// A one- or two-electron excitation between configurations.
///
/// Lists hold canonical spin-orbital indices. The associated operator string
/// is `c+_{create[0]} c+_{create[1]} c_{annihilate[1]} c_{annihilate[0]}`,
/// so a double excitation composes the two single moves
/// `annihilate[0] -> create[0]` (applied first) and `annihilate[1] -> create[1]`,
/// and its parity equals the product of the stepwise parities whenever the
/// stepwise path is occupancy-legal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Excitation {
    pub annihilate: ArrayVec<usize, 2>,
    pub create: ArrayVec<usize, 2>,
}

impl Excitation {
    pub fn single(from: usize, to: usize) -> Self {
        let mut annihilate = ArrayVec::new();
        let mut create = ArrayVec::new();
        annihilate.push(from);
        create.push(to);
        Excitation { annihilate, create }
    }

    pub fn double(from0: usize, to0: usize, from1: usize, to1: usize) -> Self {
        let mut annihilate = ArrayVec::new();
        let mut create = ArrayVec::new();
        annihilate.push(from0);
        annihilate.push(from1);
        create.push(to0);
        create.push(to1);
        Excitation { annihilate, create }
    }

    /// The excitation that undoes this one.
    pub fn inverse(&self) -> Self {
        Excitation {
            annihilate: self.create.clone(),
            create: self.annihilate.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.annihilate == self.create
    }
}

/// Apply an excitation operator string to `cfg`, returning the target
/// configuration and the fermionic parity (+1 or -1).
///
/// Operators act right-to-left: annihilators in list order, then creators in
/// reverse list order. Each operator contributes `(-1)^(occupied below index)`
/// evaluated on the intermediate occupancy, which is the phase of the ordered
/// creation-string convention. Annihilating a hole or creating onto a particle
/// is a contract violation.
pub fn apply_excitation(
    sites: usize,
    cfg: &Config,
    ex: &Excitation,
) -> Result<(Config, i8), FockError> {
    let mut out = *cfg;
    let mut sign: i8 = 1;
    for &q in ex.annihilate.iter() {
        let (spin, site) = spin_orbital_split(sites, q);
        if site >= sites {
            return Err(FockError::SiteOutOfRange { site, sites });
        }
        if !out.site_occupied(spin, site) {
            return Err(FockError::InvalidExcitation(format!(
                "annihilating unoccupied spin-orbital {q}"
            )));
        }
        if out.occupied_below(sites, q) % 2 == 1 {
            sign = -sign;
        }
        *out.mask_mut(spin) &= !(1 << site);
    }
    for &p in ex.create.iter().rev() {
        let (spin, site) = spin_orbital_split(sites, p);
        if site >= sites {
            return Err(FockError::SiteOutOfRange { site, sites });
        }
        if out.site_occupied(spin, site) {
            return Err(FockError::InvalidExcitation(format!(
                "creating onto occupied spin-orbital {p}"
            )));
        }
        if out.occupied_below(sites, p) % 2 == 1 {
            sign = -sign;
        }
        *out.mask_mut(spin) |= 1 << site;
    }
    Ok((out, sign))
}

/// All configurations of the sector in ascending `(up, dn)` order.
///
/// Fails with a resource error when the sector exceeds `max_configs`.
pub fn enumerate_sector(spec: &SystemSpec, max_configs: usize) -> Result<Vec<Config>, FockError> {
    let dim = spec.sector_dim();
    if dim > max_configs as u128 {
        return Err(FockError::SectorTooLarge {
            needed: dim,
            budget: max_configs,
        });
    }
    let ups = masks_with_popcount(spec.sites, spec.n_up);
    let dns = masks_with_popcount(spec.sites, spec.n_dn);
    let mut out = Vec::with_capacity(dim as usize);
    for &up in &ups {
        for &dn in &dns {
            out.push(Config { up, dn });
        }
    }
    Ok(out)
}

/// All `L`-bit masks with exactly `n` set bits, ascending (Gosper's hack).
fn masks_with_popcount(l: usize, n: usize) -> Vec<u64> {
    debug_assert!(l >= 1 && l <= 64 && n <= l);
    if n == 0 {
        return vec![0];
    }
    if n == l {
        return vec![low_bits(l)];
    }
    let count = binomial(l, n) as usize;
    let mut out = Vec::with_capacity(count);
    let mut mask = low_bits(n);
    let limit = low_bits(n) << (l - n);
    loop {
        out.push(mask);
        if mask == limit {
            break;
        }
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    out
}
