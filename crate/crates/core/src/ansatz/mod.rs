//! The CP-decomposed backflow determinant ansatz.
//!
//! Each orbital entry is a configuration-dependent coefficient
//!
//! ```text
//! phi[mu, i; n] = sum_{m < M} prod_{nu < K} eps[mu, i, state(n, x[mu, nu]), nu, m]
//! ```
//!
//! where `x` is an `L x K` lookup table restricting the backflow range of
//! every site to its `K` most entangled partners, `M` is the support
//! dimension, and `state` is the four-valued spinful occupation of a site.
//! The amplitude of a configuration is the determinant of the occupied
//! orbital matrix: one determinant per spin block in restricted mode, a
//! single determinant over spin-orbitals in generalized mode. All parameters
//! are real; amplitudes are carried as `(sign, log)` pairs.
//!
//! The factor tensor is stored flat in the index order
//! `[block][mu][i][s][nu][m]` with the up block first in restricted mode;
//! this is also the checkpoint serialization order and the column order of
//! the optimizer's parameter vector.

mod checkpoint;
mod context;
mod derivatives;

pub use checkpoint::{load_checkpoint, read_checkpoint_file, save_checkpoint, write_checkpoint_file};
pub use context::EvalContext;
pub use derivatives::{log_derivatives, SparseRow};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::error::FockError;
use crate::fock::{Config, SpinMode, SystemSpec};
use crate::hamiltonians::{ExchangeMatrix, HubbardSpec};
use crate::util::{det_sign_log, SignLog};

/// Mean-field orbital coefficients used to seed the ansatz; one `L x N_spin`
/// occupied block per spin channel.
#[derive(Clone, Debug, PartialEq)]
pub struct HfOrbitals {
    pub up: DMatrix<f64>,
    pub dn: DMatrix<f64>,
}

impl HfOrbitals {
    pub fn sites(&self) -> usize {
        self.up.nrows()
    }

    /// Warn when two rows of an occupied block are proportional: the seeded
    /// determinant then vanishes on some configurations.
    pub fn check_row_degeneracy(&self) {
        for (name, block) in [("up", &self.up), ("dn", &self.dn)] {
            let (l, n) = (block.nrows(), block.ncols());
            if n == 0 {
                continue;
            }
            for a in 0..l {
                for b in a + 1..l {
                    let ra = block.row(a);
                    let rb = block.row(b);
                    let na = ra.norm();
                    let nb = rb.norm();
                    if na == 0.0 || nb == 0.0 {
                        continue;
                    }
                    let cos = ra.dot(&rb) / (na * nb);
                    if (cos.abs() - 1.0).abs() < 1e-12 {
                        log::warn!("{name} orbital block rows {a} and {b} are proportional");
                    }
                }
            }
        }
    }
}

/// `L x K` table of backflow partner sites; row `mu` lists the sites whose
/// occupation the orbitals of site `mu` may depend on.
#[derive(Clone, Debug, PartialEq)]
pub struct LookupTable {
    sites: usize,
    k: usize,
    rows: Vec<u32>,
    /// For each site `w`: the `(row, nu)` slots that read `w`.
    rev: Vec<Vec<(u32, u32)>>,
}

impl LookupTable {
    /// Build from explicit rows; rows must be duplicate-free and in range.
    /// The production constructors additionally place each site first in its
    /// own row, but that normalization is not required here (amplitudes are
    /// invariant under within-row reordering).
    pub fn new(sites: usize, k: usize, rows: Vec<u32>) -> Result<Self, FockError> {
        if k == 0 || k > sites {
            return Err(FockError::InvalidSpec(format!(
                "lookup range K={k} out of 1..={sites}"
            )));
        }
        if rows.len() != sites * k {
            return Err(FockError::InvalidSpec(format!(
                "lookup table has {} entries, expected {}",
                rows.len(),
                sites * k
            )));
        }
        for mu in 0..sites {
            let row = &rows[mu * k..(mu + 1) * k];
            for (i, &w) in row.iter().enumerate() {
                if w as usize >= sites {
                    return Err(FockError::SiteOutOfRange {
                        site: w as usize,
                        sites,
                    });
                }
                if row[..i].contains(&w) {
                    return Err(FockError::InvalidSpec(format!(
                        "lookup row {mu} contains site {w} twice"
                    )));
                }
            }
        }
        let mut rev = vec![Vec::new(); sites];
        for mu in 0..sites {
            for nu in 0..k {
                rev[rows[mu * k + nu] as usize].push((mu as u32, nu as u32));
            }
        }
        Ok(LookupTable { sites, k, rows, rev })
    }

    /// Full-range table: row `mu` is `mu` followed by the other sites ascending.
    pub fn full(sites: usize) -> Self {
        Self::ranked(sites, sites, |_mu, _w| 0.0)
    }

    /// Row `mu` holds `mu` first, then the `k - 1` sites with the largest
    /// exchange integral `K[mu, w]`, ties broken by ascending site index.
    pub fn from_exchange(exchange: &ExchangeMatrix, k: usize) -> Self {
        Self::ranked(exchange.orbitals(), k, |mu, w| exchange.k[(mu, w)])
    }

    /// Row `mu` holds `mu` first, then the `k - 1` sites closest in lattice
    /// graph distance, ties broken by ascending site index.
    pub fn from_lattice(spec: &HubbardSpec, k: usize) -> Self {
        let dist = spec.graph_distances();
        Self::ranked(spec.sites(), k, |mu, w| {
            // larger score = more entangled; unreachable sites rank last
            -(dist[mu][w].min(u32::MAX - 1) as f64)
        })
    }

    fn ranked(sites: usize, k: usize, score: impl Fn(usize, usize) -> f64) -> Self {
        assert!(k >= 1 && k <= sites);
        let mut rows = Vec::with_capacity(sites * k);
        for mu in 0..sites {
            let mut others: Vec<usize> = (0..sites).filter(|&w| w != mu).collect();
            others.sort_by(|&a, &b| score(mu, b).total_cmp(&score(mu, a)).then(a.cmp(&b)));
            rows.push(mu as u32);
            rows.extend(others.into_iter().take(k - 1).map(|w| w as u32));
        }
        Self::new(sites, k, rows).expect("ranked rows are valid")
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, site: usize) -> &[u32] {
        &self.rows[site * self.k..(site + 1) * self.k]
    }

    pub fn entry(&self, site: usize, nu: usize) -> usize {
        self.rows[site * self.k + nu] as usize
    }

    pub fn rows_flat(&self) -> &[u32] {
        &self.rows
    }

    pub(crate) fn reverse(&self, site: usize) -> &[(u32, u32)] {
        &self.rev[site]
    }
}

/// The variational parameter tensor of the CP-decomposed backflow state.
#[derive(Clone, Debug, PartialEq)]
pub struct CpdParams {
    pub spec: SystemSpec,
    pub support_dim: usize,
    pub lookup: LookupTable,
    factors: Vec<f64>,
}

impl CpdParams {
    /// Backflow range `K`.
    pub fn range(&self) -> usize {
        self.lookup.k()
    }

    pub fn n_blocks(&self) -> usize {
        match self.spec.spin_mode {
            SpinMode::Restricted => 2,
            SpinMode::Generalized => 1,
        }
    }

    /// Number of rows in a block's orbital table (`L` per spin block in
    /// restricted mode, `2L` in generalized mode).
    pub fn block_rows(&self, _block: usize) -> usize {
        match self.spec.spin_mode {
            SpinMode::Restricted => self.spec.sites,
            SpinMode::Generalized => 2 * self.spec.sites,
        }
    }

    /// Number of orbitals in a block (electron count of the block).
    pub fn block_orbs(&self, block: usize) -> usize {
        match self.spec.spin_mode {
            SpinMode::Restricted => {
                if block == 0 {
                    self.spec.n_up
                } else {
                    self.spec.n_dn
                }
            }
            SpinMode::Generalized => self.spec.n_elec(),
        }
    }

    fn block_size(&self, block: usize) -> usize {
        self.block_rows(block) * self.block_orbs(block) * 4 * self.range() * self.support_dim
    }

    pub fn block_offset(&self, block: usize) -> usize {
        (0..block).map(|b| self.block_size(b)).sum()
    }

    pub fn n_params(&self) -> usize {
        (0..self.n_blocks()).map(|b| self.block_size(b)).sum()
    }

    /// Spatial site of a block row.
    #[inline]
    pub fn row_site(&self, _block: usize, mu: usize) -> usize {
        match self.spec.spin_mode {
            SpinMode::Restricted => mu,
            SpinMode::Generalized => {
                if mu < self.spec.sites {
                    mu
                } else {
                    mu - self.spec.sites
                }
            }
        }
    }

    /// Flat index of `eps[block][mu][i][s][nu][m]`.
    #[inline]
    pub fn index(&self, block: usize, mu: usize, i: usize, s: usize, nu: usize, m: usize) -> usize {
        let k = self.range();
        let md = self.support_dim;
        self.block_offset(block) + (((mu * self.block_orbs(block) + i) * 4 + s) * k + nu) * md + m
    }

    /// Offset of `eps[block][mu][i][0][0][0]`; the `(s, nu, m)` strides are
    /// `(K * M, M, 1)`.
    #[inline]
    pub fn slice_base(&self, block: usize, mu: usize, i: usize) -> usize {
        self.block_offset(block)
            + (mu * self.block_orbs(block) + i) * 4 * self.range() * self.support_dim
    }

    #[inline]
    pub fn factor(&self, idx: usize) -> f64 {
        self.factors[idx]
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn factors_mut(&mut self) -> &mut [f64] {
        &mut self.factors
    }

    /// Apply a dense parameter update `theta += delta`.
    pub fn apply_delta(&mut self, delta: &[f64]) {
        assert_eq!(delta.len(), self.factors.len());
        for (f, d) in self.factors.iter_mut().zip(delta) {
            *f += d;
        }
    }

    /// All-zero tensor of the right shape.
    pub fn zeros(spec: SystemSpec, support_dim: usize, lookup: LookupTable) -> Self {
        assert_eq!(lookup.sites(), spec.sites);
        assert!(support_dim >= 1);
        let mut p = CpdParams {
            spec,
            support_dim,
            lookup,
            factors: Vec::new(),
        };
        p.factors = vec![0.0; p.n_params()];
        p
    }

    /// Seed the tensor so the state reproduces the mean-field determinant:
    /// the orbital coefficient sits at the self slot `nu = 0` of the first
    /// component, the remaining slots of that component are 1, and the other
    /// components are 0. Gaussian noise of scale `sigma` is added everywhere,
    /// drawn in flat index order from a ChaCha stream seeded with `seed`.
    ///
    /// Components `m > 0` start at exactly zero when `sigma = 0`; their
    /// gradients vanish there (a zero factor annihilates the product rule),
    /// so a nonzero noise scale is required to activate them.
    pub fn init_from_hf(
        hf: &HfOrbitals,
        spec: SystemSpec,
        support_dim: usize,
        lookup: LookupTable,
        sigma: f64,
        seed: u64,
    ) -> Result<Self, FockError> {
        if hf.up.nrows() != spec.sites
            || hf.dn.nrows() != spec.sites
            || hf.up.ncols() != spec.n_up
            || hf.dn.ncols() != spec.n_dn
        {
            return Err(FockError::InvalidSpec(format!(
                "orbital blocks ({}x{}, {}x{}) do not match spec (L={}, N=({}, {}))",
                hf.up.nrows(),
                hf.up.ncols(),
                hf.dn.nrows(),
                hf.dn.ncols(),
                spec.sites,
                spec.n_up,
                spec.n_dn
            )));
        }
        hf.check_row_degeneracy();
        let mut p = Self::zeros(spec, support_dim, lookup);
        let coeff = |block: usize, mu: usize, i: usize| -> f64 {
            match spec.spin_mode {
                SpinMode::Restricted => {
                    if block == 0 {
                        hf.up[(mu, i)]
                    } else {
                        hf.dn[(mu, i)]
                    }
                }
                SpinMode::Generalized => {
                    // block-diagonal embedding: up orbitals live on up rows
                    let l = spec.sites;
                    if mu < l && i < spec.n_up {
                        hf.up[(mu, i)]
                    } else if mu >= l && i >= spec.n_up {
                        hf.dn[(mu - l, i - spec.n_up)]
                    } else {
                        0.0
                    }
                }
            }
        };
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).expect("sigma must be non-negative");
        let (k, md) = (p.range(), p.support_dim);
        let mut idx = 0;
        for block in 0..p.n_blocks() {
            for mu in 0..p.block_rows(block) {
                for i in 0..p.block_orbs(block) {
                    for _s in 0..4 {
                        for nu in 0..k {
                            for m in 0..md {
                                let base = if m == 0 && nu == 0 {
                                    coeff(block, mu, i)
                                } else if m == 0 {
                                    1.0
                                } else {
                                    0.0
                                };
                                p.factors[idx] = base + normal.sample(&mut rng);
                                idx += 1;
                            }
                        }
                    }
                }
            }
        }
        debug_assert_eq!(idx, p.factors.len());
        Ok(p)
    }

    /// Occupied rows of a block for `cfg`, in canonical ascending order.
    pub fn occupied_rows(&self, block: usize, cfg: &Config) -> Vec<usize> {
        match self.spec.spin_mode {
            SpinMode::Restricted => {
                if block == 0 {
                    cfg.occupied_sites(crate::fock::Spin::Up)
                } else {
                    cfg.occupied_sites(crate::fock::Spin::Dn)
                }
            }
            SpinMode::Generalized => cfg.occupied_spin_orbitals(self.spec.sites),
        }
    }

    /// Configuration-dependent orbital coefficient `phi[mu, i; cfg]`.
    pub fn orbital_value(&self, block: usize, mu: usize, i: usize, cfg: &Config) -> f64 {
        let site = self.row_site(block, mu);
        let row = self.lookup.row(site);
        let base = self.slice_base(block, mu, i);
        let (k, md) = (self.range(), self.support_dim);
        let mut sum = 0.0;
        for m in 0..md {
            let mut prod = 1.0;
            for (nu, &w) in row.iter().enumerate() {
                let s = cfg.site_state(w as usize) as usize;
                prod *= self.factors[base + (s * k + nu) * md + m];
            }
            sum += prod;
        }
        sum
    }

    /// Occupied orbital matrix of one block; rows follow `rows`.
    pub fn block_matrix(&self, block: usize, cfg: &Config, rows: &[usize]) -> DMatrix<f64> {
        let n = self.block_orbs(block);
        assert_eq!(rows.len(), n, "configuration outside the declared sector");
        DMatrix::from_fn(n, n, |r, i| {
            let v = self.orbital_value(block, rows[r], i, cfg);
            assert!(v.is_finite(), "non-finite orbital value at row {r}, col {i}");
            v
        })
    }

    /// Amplitude of `cfg` as `(sign, log)`; the product of the block
    /// determinants evaluated from scratch.
    pub fn log_amplitude(&self, cfg: &Config) -> SignLog {
        let mut amp = SignLog::new(1, 0.0);
        for block in 0..self.n_blocks() {
            let rows = self.occupied_rows(block, cfg);
            let a = self.block_matrix(block, cfg, &rows);
            amp = amp.mul(det_sign_log(a));
        }
        amp
    }
}
