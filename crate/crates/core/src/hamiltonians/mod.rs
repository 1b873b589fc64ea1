//! Hamiltonians, connected-configuration enumeration and local energies.
//!
//! Both system families expose the same surface: a diagonal element, a stream
//! of connected configurations with their matrix elements, and a local-energy
//! evaluation `E_loc(n) = sum_n' <n|H|n'> psi(n')/psi(n)` with amplitude
//! ratios computed in (sign, log) space. For ab initio Hamiltonians, double
//! excitations can be enumerated through a magnitude-presorted screening
//! index so that the sum is truncated at a threshold on the antisymmetrized
//! element magnitude (applied before parity dressing). The diagonal element
//! is always emitted regardless of threshold, and zero matrix elements are
//! never emitted.

pub mod abinitio;
pub mod fcidump;
pub mod hubbard;
pub mod screening;

pub use abinitio::{AbInitioHamiltonian, ExchangeMatrix, TwoElectronStore};
pub use fcidump::{parse_fcidump, write_fcidump};
pub use hubbard::HubbardSpec;
pub use screening::ScreeningIndex;

use crate::error::SampleError;
use crate::fock::{apply_excitation, Config, Excitation, Spin};
use crate::util::SignLog;

/// One term of the connected-configuration stream.
#[derive(Clone, Debug)]
pub struct ConnectedTerm {
    pub target: Config,
    /// `None` marks the diagonal term.
    pub excitation: Option<Excitation>,
    /// Full matrix element `<target|H|source>` including parity.
    pub element: f64,
}

/// Anything that can supply wavefunction amplitudes for a reference
/// configuration and for configurations connected to it by an excitation.
pub trait AmplitudeSource {
    /// Amplitude of the reference configuration.
    fn base(&self) -> SignLog;
    /// Amplitude of the configuration reached from the reference by `ex`.
    fn excited(&mut self, target: &Config, ex: &Excitation) -> SignLog;
}

/// Adapter turning a plain amplitude function into an [`AmplitudeSource`].
pub struct FnAmplitude<F: FnMut(&Config) -> SignLog> {
    f: F,
    base: SignLog,
}

impl<F: FnMut(&Config) -> SignLog> FnAmplitude<F> {
    pub fn new(reference: &Config, mut f: F) -> Self {
        let base = f(reference);
        FnAmplitude { f, base }
    }
}

impl<F: FnMut(&Config) -> SignLog> AmplitudeSource for FnAmplitude<F> {
    fn base(&self) -> SignLog {
        self.base
    }
    fn excited(&mut self, target: &Config, _ex: &Excitation) -> SignLog {
        (self.f)(target)
    }
}

/// Hubbard lattice model with cached bond adjacency.
#[derive(Clone, Debug)]
pub struct HubbardModel {
    pub spec: HubbardSpec,
    adjacency: Vec<Vec<(usize, f64)>>,
}

/// Ab initio integral store with its screening index.
#[derive(Clone, Debug)]
pub struct AbInitioModel {
    pub ham: AbInitioHamiltonian,
    screening: ScreeningIndex,
}

/// A second-quantized Hamiltonian in one of the two supported families.
#[derive(Clone, Debug)]
pub enum Hamiltonian {
    Hubbard(HubbardModel),
    AbInitio(Box<AbInitioModel>),
}

impl Hamiltonian {
    pub fn hubbard(spec: HubbardSpec) -> Self {
        let l = spec.sites();
        let mut adjacency = vec![Vec::new(); l];
        for bond in spec.bonds() {
            adjacency[bond.a].push((bond.b, bond.mult as f64));
            adjacency[bond.b].push((bond.a, bond.mult as f64));
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|&(s, _)| s);
        }
        Hamiltonian::Hubbard(HubbardModel { spec, adjacency })
    }

    pub fn ab_initio(ham: AbInitioHamiltonian) -> Self {
        let screening = ScreeningIndex::build(&ham);
        Hamiltonian::AbInitio(Box::new(AbInitioModel { ham, screening }))
    }

    pub fn sites(&self) -> usize {
        match self {
            Hamiltonian::Hubbard(m) => m.spec.sites(),
            Hamiltonian::AbInitio(m) => m.ham.l,
        }
    }

    pub fn as_hubbard(&self) -> Option<&HubbardModel> {
        match self {
            Hamiltonian::Hubbard(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_ab_initio(&self) -> Option<&AbInitioHamiltonian> {
        match self {
            Hamiltonian::AbInitio(m) => Some(&m.ham),
            _ => None,
        }
    }

    /// Diagonal matrix element `<n|H|n>`.
    pub fn diagonal(&self, cfg: &Config) -> f64 {
        match self {
            Hamiltonian::Hubbard(m) => m.spec.u * cfg.double_occupancy() as f64,
            Hamiltonian::AbInitio(m) => ab_initio_diagonal(&m.ham, cfg),
        }
    }

    /// Stream the diagonal and every connected configuration with its matrix
    /// element. `threshold > 0` enumerates double excitations through the
    /// screening index and stops each candidate walk at the first amplitude
    /// below threshold; `threshold = 0` enumerates the complete set directly.
    pub fn for_each_connected<F: FnMut(ConnectedTerm)>(
        &self,
        cfg: &Config,
        threshold: f64,
        f: &mut F,
    ) {
        f(ConnectedTerm {
            target: *cfg,
            excitation: None,
            element: self.diagonal(cfg),
        });
        match self {
            Hamiltonian::Hubbard(m) => hubbard_hops(m, cfg, f),
            Hamiltonian::AbInitio(m) => {
                ab_initio_singles(&m.ham, cfg, f);
                if threshold > 0.0 {
                    ab_initio_doubles_screened(&m.ham, &m.screening, cfg, threshold, f);
                } else {
                    ab_initio_doubles_direct(&m.ham, cfg, f);
                }
            }
        }
    }

    /// Like [`Self::for_each_connected`] but forcing the screening-index walk
    /// for doubles at any threshold, including zero. Used to validate that the
    /// screened enumeration reproduces the direct one.
    pub fn for_each_connected_via_screening<F: FnMut(ConnectedTerm)>(
        &self,
        cfg: &Config,
        threshold: f64,
        f: &mut F,
    ) {
        match self {
            Hamiltonian::Hubbard(_) => self.for_each_connected(cfg, threshold, f),
            Hamiltonian::AbInitio(m) => {
                f(ConnectedTerm {
                    target: *cfg,
                    excitation: None,
                    element: self.diagonal(cfg),
                });
                ab_initio_singles(&m.ham, cfg, f);
                ab_initio_doubles_screened(&m.ham, &m.screening, cfg, threshold, f);
            }
        }
    }

    /// Collect the connected stream into a vector.
    pub fn connected_elements(&self, cfg: &Config, threshold: f64) -> Vec<ConnectedTerm> {
        let mut out = Vec::new();
        self.for_each_connected(cfg, threshold, &mut |t| out.push(t));
        out
    }

    /// Local energy of `cfg` under the amplitudes provided by `src`.
    pub fn local_energy<S: AmplitudeSource>(
        &self,
        cfg: &Config,
        src: &mut S,
        threshold: f64,
    ) -> Result<f64, SampleError> {
        let base = src.base();
        if base.is_zero() {
            return Err(SampleError::ZeroAmplitude);
        }
        let mut acc = 0.0;
        self.for_each_connected(cfg, threshold, &mut |term| match &term.excitation {
            None => acc += term.element,
            Some(ex) => {
                let t = src.excited(&term.target, ex);
                if !t.is_zero() {
                    acc += term.element * t.ratio_to(base);
                }
            }
        });
        if acc.is_finite() {
            Ok(acc)
        } else {
            Err(SampleError::NonFinite(format!("local energy {acc}")))
        }
    }
}

fn hubbard_hops<F: FnMut(ConnectedTerm)>(m: &HubbardModel, cfg: &Config, f: &mut F) {
    let l = m.spec.sites();
    if m.spec.t == 0.0 {
        return;
    }
    for spin in Spin::BOTH {
        for a in cfg.occupied_sites(spin) {
            for &(b, mult) in &m.adjacency[a] {
                if cfg.site_occupied(spin, b) {
                    continue;
                }
                let from = spin.index() * l + a;
                let to = spin.index() * l + b;
                let ex = Excitation::single(from, to);
                let (target, parity) =
                    apply_excitation(l, cfg, &ex).expect("hop is occupancy-legal");
                f(ConnectedTerm {
                    target,
                    excitation: Some(ex),
                    element: -m.spec.t * mult * parity as f64,
                });
            }
        }
    }
}

/// Occupied spin-orbitals as (spatial site, spin) pairs, canonical order.
fn occupied_pairs(cfg: &Config) -> Vec<(usize, Spin)> {
    let mut occ: Vec<(usize, Spin)> = cfg
        .occupied_sites(Spin::Up)
        .into_iter()
        .map(|s| (s, Spin::Up))
        .collect();
    occ.extend(cfg.occupied_sites(Spin::Dn).into_iter().map(|s| (s, Spin::Dn)));
    occ
}

fn ab_initio_diagonal(h: &AbInitioHamiltonian, cfg: &Config) -> f64 {
    let occ = occupied_pairs(cfg);
    let mut e = h.e_core;
    for &(w, _) in &occ {
        e += h.h1[(w, w)];
    }
    for (a, &(wa, sa)) in occ.iter().enumerate() {
        for (b, &(wb, sb)) in occ.iter().enumerate() {
            if a == b {
                continue;
            }
            let mut v = h.eri(wa, wa, wb, wb);
            if sa == sb {
                v -= h.eri(wa, wb, wb, wa);
            }
            e += 0.5 * v;
        }
    }
    e
}

fn ab_initio_singles<F: FnMut(ConnectedTerm)>(h: &AbInitioHamiltonian, cfg: &Config, f: &mut F) {
    let l = h.l;
    let occ = occupied_pairs(cfg);
    for spin in Spin::BOTH {
        for q in cfg.occupied_sites(spin) {
            for p in 0..l {
                if cfg.site_occupied(spin, p) {
                    continue;
                }
                let mut elem = h.h1[(p, q)];
                for &(w, tau) in &occ {
                    if w == q && tau == spin {
                        continue;
                    }
                    elem += h.eri(p, q, w, w);
                    if tau == spin {
                        elem -= h.eri(p, w, w, q);
                    }
                }
                if elem == 0.0 {
                    continue;
                }
                let from = spin.index() * l + q;
                let to = spin.index() * l + p;
                let ex = Excitation::single(from, to);
                let (target, parity) =
                    apply_excitation(l, cfg, &ex).expect("single is occupancy-legal");
                f(ConnectedTerm {
                    target,
                    excitation: Some(ex),
                    element: elem * parity as f64,
                });
            }
        }
    }
}

/// Emit one double excitation: move `q -> p` in `spin_a` and `s -> r` in
/// `spin_b`, with bare antisymmetrized amplitude `amp`.
#[inline]
fn emit_double<F: FnMut(ConnectedTerm)>(
    l: usize,
    cfg: &Config,
    q: usize,
    p: usize,
    spin_a: Spin,
    s: usize,
    r: usize,
    spin_b: Spin,
    amp: f64,
    f: &mut F,
) {
    let ex = Excitation::double(
        spin_a.index() * l + q,
        spin_a.index() * l + p,
        spin_b.index() * l + s,
        spin_b.index() * l + r,
    );
    let (target, parity) = apply_excitation(l, cfg, &ex).expect("double is occupancy-legal");
    f(ConnectedTerm {
        target,
        excitation: Some(ex),
        element: amp * parity as f64,
    });
}

fn ab_initio_doubles_direct<F: FnMut(ConnectedTerm)>(
    h: &AbInitioHamiltonian,
    cfg: &Config,
    f: &mut F,
) {
    let l = h.l;
    // same spin
    for spin in Spin::BOTH {
        let occ = cfg.occupied_sites(spin);
        let unocc: Vec<usize> = (0..l).filter(|&s| !cfg.site_occupied(spin, s)).collect();
        for a in 0..occ.len() {
            for b in a + 1..occ.len() {
                let (q, s) = (occ[a], occ[b]);
                for ip in 0..unocc.len() {
                    for ir in ip + 1..unocc.len() {
                        let (p, r) = (unocc[ip], unocc[ir]);
                        let amp = h.eri(p, q, r, s) - h.eri(p, s, r, q);
                        if amp != 0.0 {
                            emit_double(l, cfg, q, p, spin, s, r, spin, amp, f);
                        }
                    }
                }
            }
        }
    }
    // opposite spin: q, p in the up channel; s, r in the dn channel
    let occ_up = cfg.occupied_sites(Spin::Up);
    let occ_dn = cfg.occupied_sites(Spin::Dn);
    let unocc_up: Vec<usize> = (0..l).filter(|&s| !cfg.site_occupied(Spin::Up, s)).collect();
    let unocc_dn: Vec<usize> = (0..l).filter(|&s| !cfg.site_occupied(Spin::Dn, s)).collect();
    for &q in &occ_up {
        for &s in &occ_dn {
            for &p in &unocc_up {
                for &r in &unocc_dn {
                    let amp = h.eri(p, q, r, s);
                    if amp != 0.0 {
                        emit_double(l, cfg, q, p, Spin::Up, s, r, Spin::Dn, amp, f);
                    }
                }
            }
        }
    }
}

fn ab_initio_doubles_screened<F: FnMut(ConnectedTerm)>(
    h: &AbInitioHamiltonian,
    idx: &ScreeningIndex,
    cfg: &Config,
    threshold: f64,
    f: &mut F,
) {
    let l = h.l;
    for spin in Spin::BOTH {
        let occ = cfg.occupied_sites(spin);
        for a in 0..occ.len() {
            for b in a + 1..occ.len() {
                let (q, s) = (occ[a], occ[b]);
                for cand in idx.same_spin(q, s) {
                    if cand.amp.abs() < threshold {
                        break;
                    }
                    let (p, r) = (cand.p as usize, cand.r as usize);
                    if !cfg.site_occupied(spin, p) && !cfg.site_occupied(spin, r) {
                        emit_double(l, cfg, q, p, spin, s, r, spin, cand.amp, f);
                    }
                }
            }
        }
    }
    let occ_up = cfg.occupied_sites(Spin::Up);
    let occ_dn = cfg.occupied_sites(Spin::Dn);
    for &q in &occ_up {
        for &s in &occ_dn {
            for cand in idx.opposite(q, s) {
                if cand.amp.abs() < threshold {
                    break;
                }
                let (p, r) = (cand.p as usize, cand.r as usize);
                if !cfg.site_occupied(Spin::Up, p) && !cfg.site_occupied(Spin::Dn, r) {
                    emit_double(l, cfg, q, p, Spin::Up, s, r, Spin::Dn, cand.amp, f);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{enumerate_sector, SpinMode, SystemSpec};
    use rand::{Rng, SeedableRng};
    use std::collections::HashMap;

    fn random_lookup_amplitudes(spec: &SystemSpec, seed: u64) -> HashMap<Config, SignLog> {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        enumerate_sector(spec, 100_000)
            .unwrap()
            .into_iter()
            .map(|c| {
                let v: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                (c, SignLog::from_value(v))
            })
            .collect()
    }

    fn random_ab_initio(l: usize, seed: u64) -> AbInitioHamiltonian {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let mut h = AbInitioHamiltonian::empty(l);
        h.e_core = rng.gen::<f64>();
        for i in 0..l {
            for j in 0..=i {
                let v = rng.gen::<f64>() - 0.5;
                h.h1[(i, j)] = v;
                h.h1[(j, i)] = v;
                for k in 0..l {
                    for m in 0..=k {
                        h.h2.set(i, j, k, m, rng.gen::<f64>() - 0.5);
                    }
                }
            }
        }
        h
    }

    #[test]
    fn two_site_tight_binding_ground_energy() {
        // 1x2 open chain, t=1, U=0, sector (1,0): H is 2x2 with off-diagonal -1.
        let h = Hamiltonian::hubbard(HubbardSpec {
            nx: 2,
            ny: 1,
            t: 1.0,
            u: 0.0,
            periodic_x: false,
            periodic_y: false,
        });
        let spec = SystemSpec::new(2, 1, 0, SpinMode::Restricted).unwrap();
        let cfgs = enumerate_sector(&spec, 10).unwrap();
        let mut m = nalgebra::DMatrix::<f64>::zeros(2, 2);
        for (j, cfg) in cfgs.iter().enumerate() {
            for term in h.connected_elements(cfg, 0.0) {
                let i = cfgs.iter().position(|c| c == &term.target).unwrap();
                m[(i, j)] += term.element;
            }
        }
        assert_eq!(m[(0, 0)], 0.0);
        assert_eq!(m[(0, 1)], -1.0);
        assert_eq!(m[(1, 0)], -1.0);
        let eig = m.symmetric_eigen();
        let e0 = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((e0 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn hubbard_offdiagonal_count_is_hop_count() {
        let h = Hamiltonian::hubbard(HubbardSpec {
            nx: 4,
            ny: 1,
            t: 1.0,
            u: 8.0,
            periodic_x: false,
            periodic_y: false,
        });
        let spec = SystemSpec::new(4, 2, 2, SpinMode::Restricted).unwrap();
        for cfg in enumerate_sector(&spec, 100).unwrap() {
            let mut hops = 0;
            for spin in Spin::BOTH {
                for a in cfg.occupied_sites(spin) {
                    for d in [0usize, 1] {
                        if let Some(b) = h.as_hubbard().unwrap().spec.neighbor(a, d) {
                            if !cfg.site_occupied(spin, b) {
                                hops += 1;
                            }
                        }
                    }
                }
            }
            let terms = h.connected_elements(&cfg, 0.0);
            assert_eq!(terms.len() - 1, hops);
        }
    }

    #[test]
    fn hubbard_diagonal_counts_double_occupancy() {
        let h = Hamiltonian::hubbard(HubbardSpec {
            nx: 2,
            ny: 2,
            t: 1.0,
            u: 7.5,
            periodic_x: true,
            periodic_y: true,
        });
        let cfg = Config::from_site_lists(&[0, 1], &[0, 2]);
        assert_eq!(h.diagonal(&cfg), 7.5);
    }

    #[test]
    fn hubbard_and_fcidump_paths_agree_on_local_energy() {
        let spec = HubbardSpec {
            nx: 4,
            ny: 1,
            t: 1.0,
            u: 8.0,
            periodic_x: false,
            periodic_y: false,
        };
        let lattice = Hamiltonian::hubbard(spec);
        let integrals = Hamiltonian::ab_initio(spec.to_ab_initio());
        let sector = SystemSpec::new(4, 2, 2, SpinMode::Restricted).unwrap();
        let psi = random_lookup_amplitudes(&sector, 42);
        for cfg in enumerate_sector(&sector, 100).unwrap() {
            if psi[&cfg].is_zero() {
                continue;
            }
            let mut src_a = FnAmplitude::new(&cfg, |c: &Config| psi[c]);
            let mut src_b = FnAmplitude::new(&cfg, |c: &Config| psi[c]);
            let ea = lattice.local_energy(&cfg, &mut src_a, 0.0).unwrap();
            let eb = integrals.local_energy(&cfg, &mut src_b, 0.0).unwrap();
            assert!(
                (ea - eb).abs() < 1e-12 * (1.0 + ea.abs()),
                "cfg {cfg:?}: {ea} vs {eb}"
            );
        }
    }

    #[test]
    fn assembled_matrix_is_hermitian() {
        let h = Hamiltonian::ab_initio(random_ab_initio(4, 7));
        let sector = SystemSpec::new(4, 2, 1, SpinMode::Restricted).unwrap();
        let cfgs = enumerate_sector(&sector, 10_000).unwrap();
        let index: HashMap<Config, usize> =
            cfgs.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let n = cfgs.len();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for (j, cfg) in cfgs.iter().enumerate() {
            for term in h.connected_elements(cfg, 0.0) {
                m[(index[&term.target], j)] += term.element;
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (m[(i, j)] - m[(j, i)]).abs() < 1e-12,
                    "H[{i},{j}] = {} vs H[{j},{i}] = {}",
                    m[(i, j)],
                    m[(j, i)]
                );
            }
        }
    }

    #[test]
    fn screened_walk_at_zero_threshold_matches_direct_enumeration() {
        let h = Hamiltonian::ab_initio(random_ab_initio(5, 23));
        let sector = SystemSpec::new(5, 2, 2, SpinMode::Restricted).unwrap();
        for cfg in enumerate_sector(&sector, 1000).unwrap().into_iter().take(20) {
            let mut direct: Vec<(Config, f64)> = Vec::new();
            h.for_each_connected(&cfg, 0.0, &mut |t| direct.push((t.target, t.element)));
            let mut screened: Vec<(Config, f64)> = Vec::new();
            h.for_each_connected_via_screening(&cfg, 0.0, &mut |t| {
                screened.push((t.target, t.element))
            });
            let key = |v: &mut Vec<(Config, f64)>| {
                v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)))
            };
            key(&mut direct);
            key(&mut screened);
            assert_eq!(direct.len(), screened.len());
            for (d, s) in direct.iter().zip(&screened) {
                assert_eq!(d.0, s.0);
                assert_eq!(d.1, s.1);
            }
        }
    }

    #[test]
    fn pruning_is_monotone_in_threshold() {
        let h = Hamiltonian::ab_initio(random_ab_initio(5, 31));
        let sector = SystemSpec::new(5, 2, 2, SpinMode::Restricted).unwrap();
        let cfg = enumerate_sector(&sector, 1000).unwrap()[17];
        let collect = |thr: f64| -> Vec<Config> {
            let mut v = Vec::new();
            h.for_each_connected_via_screening(&cfg, thr, &mut |t| {
                if t.excitation.map_or(false, |e| e.annihilate.len() == 2) {
                    v.push(t.target);
                }
            });
            v.sort();
            v
        };
        let mut last_len = usize::MAX;
        for thr in [0.0, 1e-6, 1e-3, 1e-1, 1.0] {
            let set = collect(thr);
            assert!(set.len() <= last_len);
            last_len = set.len();
            let loose = collect(thr / 10.0);
            for c in &set {
                assert!(loose.binary_search(c).is_ok());
            }
        }
    }

    #[test]
    fn local_energy_rejects_zero_amplitude() {
        let h = Hamiltonian::hubbard(HubbardSpec {
            nx: 2,
            ny: 1,
            t: 1.0,
            u: 4.0,
            periodic_x: false,
            periodic_y: false,
        });
        let cfg = Config::from_site_lists(&[0], &[0]);
        let mut src = FnAmplitude::new(&cfg, |_: &Config| SignLog::ZERO);
        assert_eq!(
            h.local_energy(&cfg, &mut src, 0.0),
            Err(SampleError::ZeroAmplitude)
        );
    }
}
