//! Exact diagonalization built from raw operator strings.
//!
//! Matrix elements here are derived by applying every Hamiltonian term as an
//! explicit creation/annihilation string, with no shared code with the
//! Slater-Condon rules of the production path. This keeps the oracle an
//! independent cross-check of `hamiltonians::Hamiltonian::for_each_connected`.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::EdError;
use crate::fock::{apply_excitation, enumerate_sector, Config, Excitation, Spin, SystemSpec};
use crate::hamiltonians::Hamiltonian;
use crate::util::SignLog;

/// Largest sector dimension for which a dense matrix is assembled.
pub const DENSE_LIMIT: usize = 16_384;
/// Largest sector dimension for the matrix-free Lanczos path.
pub const LANCZOS_LIMIT: usize = 1_000_000;
/// Dimension at which `ground_state` switches from dense to Lanczos.
const DENSE_EIG_LIMIT: usize = 900;

/// An eigenvector over an enumerated sector, usable as a lookup-table
/// amplitude evaluator.
#[derive(Clone, Debug)]
pub struct EdVector {
    pub spec: SystemSpec,
    pub energy: f64,
    pub configs: Vec<Config>,
    pub amplitudes: Vec<f64>,
    index: HashMap<Config, usize>,
}

impl EdVector {
    fn new(spec: SystemSpec, energy: f64, configs: Vec<Config>, amplitudes: Vec<f64>) -> Self {
        let index = configs.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        EdVector {
            spec,
            energy,
            configs,
            amplitudes,
            index,
        }
    }

    pub fn amplitude(&self, cfg: &Config) -> SignLog {
        match self.index.get(cfg) {
            Some(&i) => SignLog::from_value(self.amplitudes[i]),
            None => SignLog::ZERO,
        }
    }

    pub fn index_of(&self, cfg: &Config) -> Option<usize> {
        self.index.get(cfg).copied()
    }

    /// Spinned one-body RDM `gamma^sigma_ij = <c+_{i sigma} c_{j sigma}>`.
    pub fn rdm1_spinned(&self, spin: Spin) -> DMatrix<f64> {
        let l = self.spec.sites;
        let mut g = DMatrix::zeros(l, l);
        for (n, cfg) in self.configs.iter().enumerate() {
            let vn = self.amplitudes[n];
            if vn == 0.0 {
                continue;
            }
            for i in 0..l {
                for j in 0..l {
                    let ex = Excitation::single(
                        spin.index() * l + j,
                        spin.index() * l + i,
                    );
                    if let Ok((target, parity)) = apply_excitation(l, cfg, &ex) {
                        if let Some(&m) = self.index.get(&target) {
                            g[(i, j)] += self.amplitudes[m] * parity as f64 * vn;
                        }
                    }
                }
            }
        }
        g
    }

    /// Spinned two-body RDM with chemist index pairing:
    /// `Gamma^{st}_{ijkl} = <c+_{i s} c+_{k t} c_{l t} c_{j s}>`, returned as a
    /// flat tensor indexed `[i][j][k][l]`.
    pub fn rdm2_spinned(&self, sa: Spin, sb: Spin) -> Vec<f64> {
        let l = self.spec.sites;
        let mut g = vec![0.0; l * l * l * l];
        for (n, cfg) in self.configs.iter().enumerate() {
            let vn = self.amplitudes[n];
            if vn == 0.0 {
                continue;
            }
            for i in 0..l {
                for j in 0..l {
                    for k in 0..l {
                        for m in 0..l {
                            // string c+_{i sa} c+_{k sb} c_{m sb} c_{j sa}
                            let ex = Excitation::double(
                                sa.index() * l + j,
                                sa.index() * l + i,
                                sb.index() * l + m,
                                sb.index() * l + k,
                            );
                            if let Ok((target, parity)) = apply_excitation(l, cfg, &ex) {
                                if let Some(&t) = self.index.get(&target) {
                                    g[((i * l + j) * l + k) * l + m] +=
                                        self.amplitudes[t] * parity as f64 * vn;
                                }
                            }
                        }
                    }
                }
            }
        }
        g
    }

    /// Direct `<S^z_a S^z_b>`; both operators are diagonal in the Fock basis.
    pub fn direct_szsz(&self, a: usize, b: usize) -> f64 {
        let sz = |cfg: &Config, site: usize| -> f64 {
            match cfg.site_state(site) {
                1 => 0.5,
                2 => -0.5,
                _ => 0.0,
            }
        };
        self.configs
            .iter()
            .zip(&self.amplitudes)
            .map(|(cfg, v)| v * v * sz(cfg, a) * sz(cfg, b))
            .sum()
    }
}

/// Apply one Hamiltonian term-by-term to a source configuration, accumulating
/// `coefficient * parity` into the map of reached configurations.
fn scatter_column(h: &Hamiltonian, cfg: &Config, mut sink: impl FnMut(Config, f64)) {
    let l = h.sites();
    match h {
        Hamiltonian::Hubbard(m) => {
            sink(*cfg, m.spec.u * cfg.double_occupancy() as f64);
            if m.spec.t != 0.0 {
                for bond in m.spec.bonds() {
                    for (a, b) in [(bond.a, bond.b), (bond.b, bond.a)] {
                        for spin in Spin::BOTH {
                            let ex =
                                Excitation::single(spin.index() * l + a, spin.index() * l + b);
                            if let Ok((target, parity)) = apply_excitation(l, cfg, &ex) {
                                sink(target, -m.spec.t * bond.mult as f64 * parity as f64);
                            }
                        }
                    }
                }
            }
        }
        Hamiltonian::AbInitio(m) => {
            let ham = &m.ham;
            sink(*cfg, ham.e_core);
            for spin in Spin::BOTH {
                for i in 0..l {
                    for j in 0..l {
                        let v = ham.h1[(i, j)];
                        if v == 0.0 {
                            continue;
                        }
                        let ex = Excitation::single(spin.index() * l + j, spin.index() * l + i);
                        if let Ok((target, parity)) = apply_excitation(l, cfg, &ex) {
                            sink(target, v * parity as f64);
                        }
                    }
                }
            }
            for sa in Spin::BOTH {
                for sb in Spin::BOTH {
                    for i in 0..l {
                        for j in 0..l {
                            for k in 0..l {
                                for q in 0..l {
                                    let v = ham.eri(i, j, k, q);
                                    if v == 0.0 {
                                        continue;
                                    }
                                    // 1/2 (ij|kq) c+_{i sa} c+_{k sb} c_{q sb} c_{j sa}
                                    let ex = Excitation::double(
                                        sa.index() * l + j,
                                        sa.index() * l + i,
                                        sb.index() * l + q,
                                        sb.index() * l + k,
                                    );
                                    if let Ok((target, parity)) = apply_excitation(l, cfg, &ex) {
                                        sink(target, 0.5 * v * parity as f64);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Dense Hamiltonian matrix over the enumerated sector.
pub fn dense_hamiltonian(
    h: &Hamiltonian,
    spec: &SystemSpec,
) -> Result<(DMatrix<f64>, Vec<Config>), EdError> {
    let dim = spec.sector_dim();
    if dim > DENSE_LIMIT as u128 {
        return Err(EdError::TooLarge {
            dim: dim as usize,
            limit: DENSE_LIMIT,
        });
    }
    let cfgs = enumerate_sector(spec, DENSE_LIMIT)?;
    let index: HashMap<Config, usize> = cfgs.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let n = cfgs.len();
    let mut m = DMatrix::zeros(n, n);
    for (j, cfg) in cfgs.iter().enumerate() {
        scatter_column(h, cfg, |target, v| {
            m[(index[&target], j)] += v;
        });
    }
    Ok((m, cfgs))
}

/// Matrix-free application `out = H v` over the enumerated sector.
fn apply_hamiltonian(
    h: &Hamiltonian,
    cfgs: &[Config],
    index: &HashMap<Config, usize>,
    v: &[f64],
    out: &mut [f64],
) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (j, cfg) in cfgs.iter().enumerate() {
        let vj = v[j];
        if vj == 0.0 {
            continue;
        }
        scatter_column(h, cfg, |target, elem| {
            out[index[&target]] += elem * vj;
        });
    }
}

/// Ground state of the sector, dense below [`DENSE_EIG_LIMIT`], otherwise
/// Lanczos with full reorthogonalization. The returned vector is normalized.
pub fn ground_state(h: &Hamiltonian, spec: &SystemSpec) -> Result<EdVector, EdError> {
    let dim = spec.sector_dim();
    if dim > LANCZOS_LIMIT as u128 {
        return Err(EdError::TooLarge {
            dim: dim as usize,
            limit: LANCZOS_LIMIT,
        });
    }
    let dim = dim as usize;
    if dim <= DENSE_EIG_LIMIT {
        let (m, cfgs) = dense_hamiltonian(h, spec)?;
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let ground = order[0];
        let energy = eig.eigenvalues[ground];
        let mut vec: Vec<f64> = eig.eigenvectors.column(ground).iter().cloned().collect();
        fix_gauge(&mut vec);
        Ok(EdVector::new(*spec, energy, cfgs, vec))
    } else {
        let cfgs = enumerate_sector(spec, LANCZOS_LIMIT)?;
        let index: HashMap<Config, usize> =
            cfgs.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let (energy, mut vec) = lanczos_ground(
            |v, out| apply_hamiltonian(h, &cfgs, &index, v, out),
            dim,
            1e-11,
            500,
        )?;
        fix_gauge(&mut vec);
        Ok(EdVector::new(*spec, energy, cfgs, vec))
    }
}

/// Deterministic sign gauge: the largest-magnitude component is positive.
fn fix_gauge(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Lanczos iteration with full reorthogonalization for the lowest eigenpair.
pub fn lanczos_ground(
    apply: impl Fn(&[f64], &mut [f64]),
    dim: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>), EdError> {
    assert!(dim > 0);
    if dim == 1 {
        let mut out = vec![0.0];
        apply(&[1.0], &mut out);
        return Ok((out[0], vec![1.0]));
    }
    let m_max = max_iter.min(dim);
    // Deterministic start vector with components on every basis state.
    let mut v: Vec<f64> = (0..dim)
        .map(|i| 1.0 + 0.5 * ((i as f64 * 0.7391) % 1.0))
        .collect();
    normalize(&mut v);
    let mut basis: Vec<Vec<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut last_energy = f64::INFINITY;

    for it in 0..m_max {
        apply(&basis[it], &mut w);
        let alpha = dot(&basis[it], &w);
        alphas.push(alpha);
        for (wi, bi) in w.iter_mut().zip(&basis[it]) {
            *wi -= alpha * bi;
        }
        if it > 0 {
            let beta_prev = betas[it - 1];
            for (wi, bi) in w.iter_mut().zip(&basis[it - 1]) {
                *wi -= beta_prev * bi;
            }
        }
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let beta = dot(&w, &w).sqrt();
        let m = alphas.len();
        let check = beta < 1e-14 || it + 1 == m_max || (it + 1) % 5 == 0;
        if check {
            let (theta, s) = tridiag_ground(&alphas, &betas);
            let residual = beta * s[m - 1].abs();
            let scale = theta.abs().max(1.0);
            if (residual < tol * scale && (last_energy - theta).abs() < tol * scale)
                || beta < 1e-14
            {
                let mut ground = vec![0.0; dim];
                for (k, b) in basis.iter().enumerate() {
                    for (g, bi) in ground.iter_mut().zip(b) {
                        *g += s[k] * bi;
                    }
                }
                normalize(&mut ground);
                return Ok((theta, ground));
            }
            last_energy = theta;
        }
        if beta < 1e-14 {
            // invariant subspace exhausted; handled above
            break;
        }
        betas.push(beta);
        let next: Vec<f64> = w.iter().map(|x| x / beta).collect();
        basis.push(next);
    }
    let (theta, s) = tridiag_ground(&alphas, &betas);
    let m = alphas.len();
    let residual = betas.last().copied().unwrap_or(0.0) * s[m - 1].abs();
    Err(EdError::NotConverged {
        residual,
        iters: alphas.len(),
    })
}

/// Lowest eigenpair of the tridiagonal Lanczos matrix.
fn tridiag_ground(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut ground = 0;
    for i in 1..m {
        if eig.eigenvalues[i] < eig.eigenvalues[ground] {
            ground = i;
        }
    }
    (
        eig.eigenvalues[ground],
        eig.eigenvectors.column(ground).iter().cloned().collect(),
    )
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::SpinMode;
    use crate::hamiltonians::HubbardSpec;
    use rand::{Rng, SeedableRng};

    fn hubbard(nx: usize, ny: usize, t: f64, u: f64, px: bool, py: bool) -> Hamiltonian {
        Hamiltonian::hubbard(HubbardSpec {
            nx,
            ny,
            t,
            u,
            periodic_x: px,
            periodic_y: py,
        })
    }

    #[test]
    fn two_site_hubbard_analytic_spectrum() {
        let u = 8.0;
        let h = hubbard(2, 1, 1.0, u, false, false);
        let spec = SystemSpec::new(2, 1, 1, SpinMode::Restricted).unwrap();
        let gs = ground_state(&h, &spec).unwrap();
        let analytic = 0.5 * (u - (u * u + 16.0).sqrt());
        assert!((gs.energy - analytic).abs() < 1e-10);
        assert!((gs.energy + 0.47213595).abs() < 1e-7);
    }

    #[test]
    fn dense_matrix_is_hermitian() {
        let h = hubbard(4, 1, 1.0, 4.0, false, false);
        let spec = SystemSpec::new(4, 2, 2, SpinMode::Restricted).unwrap();
        let (m, _) = dense_hamiltonian(&h, &spec).unwrap();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                assert!((m[(i, j)] - m[(j, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_oracle_matches_connected_elements() {
        // Hubbard path
        let h = hubbard(4, 1, 1.0, 8.0, true, false);
        let spec = SystemSpec::new(4, 2, 2, SpinMode::Restricted).unwrap();
        check_paths_agree(&h, &spec);
        // ab initio path with random 8-fold-symmetric integrals
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(77);
        let mut ham = crate::hamiltonians::AbInitioHamiltonian::empty(4);
        ham.e_core = 0.37;
        for i in 0..4 {
            for j in 0..=i {
                let v = rng.gen::<f64>() - 0.5;
                ham.h1[(i, j)] = v;
                ham.h1[(j, i)] = v;
                for k in 0..4 {
                    for l in 0..=k {
                        ham.h2.set(i, j, k, l, rng.gen::<f64>() - 0.5);
                    }
                }
            }
        }
        let h = Hamiltonian::ab_initio(ham);
        for (nu, nd) in [(2, 2), (2, 1), (1, 1), (3, 2)] {
            let spec = SystemSpec::new(4, nu, nd, SpinMode::Restricted).unwrap();
            check_paths_agree(&h, &spec);
        }
    }

    fn check_paths_agree(h: &Hamiltonian, spec: &SystemSpec) {
        let (dense, cfgs) = dense_hamiltonian(h, spec).unwrap();
        let index: std::collections::HashMap<Config, usize> =
            cfgs.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let n = cfgs.len();
        let mut prod = DMatrix::<f64>::zeros(n, n);
        for (j, cfg) in cfgs.iter().enumerate() {
            for term in h.connected_elements(cfg, 0.0) {
                prod[(index[&term.target], j)] += term.element;
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (dense[(i, j)] - prod[(i, j)]).abs() < 1e-12,
                    "entry ({i},{j}): oracle {} vs production {}",
                    dense[(i, j)],
                    prod[(i, j)]
                );
            }
        }
    }

    #[test]
    fn free_fermion_ground_energy() {
        // U=0: E0 is the sum of the lowest single-particle energies per spin.
        let spec_h = HubbardSpec {
            nx: 4,
            ny: 1,
            t: 1.0,
            u: 0.0,
            periodic_x: false,
            periodic_y: false,
        };
        let h = Hamiltonian::hubbard(spec_h);
        let sector = SystemSpec::new(4, 2, 1, SpinMode::Restricted).unwrap();
        let gs = ground_state(&h, &sector).unwrap();
        let eig = spec_h.hopping_matrix().symmetric_eigen();
        let mut evs: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        evs.sort_by(|a, b| a.total_cmp(b));
        let want = evs[0] + evs[1] + evs[0];
        assert!((gs.energy - want).abs() < 1e-10);
    }

    #[test]
    fn one_electron_sector_is_h1_spectrum() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let mut ham = crate::hamiltonians::AbInitioHamiltonian::empty(3);
        for i in 0..3 {
            for j in 0..=i {
                let v = rng.gen::<f64>() - 0.5;
                ham.h1[(i, j)] = v;
                ham.h1[(j, i)] = v;
            }
        }
        let eig = ham.h1.clone().symmetric_eigen();
        let want = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let h = Hamiltonian::ab_initio(ham);
        let sector = SystemSpec::new(3, 1, 0, SpinMode::Restricted).unwrap();
        let gs = ground_state(&h, &sector).unwrap();
        assert!((gs.energy - want).abs() < 1e-12);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let h = hubbard(3, 2, 1.0, 6.0, false, false);
        let spec = SystemSpec::new(6, 3, 3, SpinMode::Restricted).unwrap();
        let dim = spec.sector_dim() as usize;
        assert_eq!(dim, 400);
        let (m, _) = dense_hamiltonian(&h, &spec).unwrap();
        let eig = m.clone().symmetric_eigen();
        let dense_e0 = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let (lanczos_e0, vec) = lanczos_ground(
            |v, out| {
                let mv = &m * DMatrix::from_column_slice(dim, 1, v);
                out.copy_from_slice(mv.as_slice());
            },
            dim,
            1e-11,
            500,
        )
        .unwrap();
        assert!((dense_e0 - lanczos_e0).abs() < 1e-9 * dense_e0.abs().max(1.0));
        // residual check
        let x = DMatrix::from_column_slice(dim, 1, &vec);
        let r = &m * &x - lanczos_e0 * &x;
        assert!(r.norm() < 1e-8);
    }

    #[test]
    fn ed_energies_invariant_under_site_relabeling() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(13);
        let mut ham = crate::hamiltonians::AbInitioHamiltonian::empty(4);
        ham.e_core = -1.0;
        for i in 0..4 {
            for j in 0..=i {
                let v = rng.gen::<f64>() - 0.5;
                ham.h1[(i, j)] = v;
                ham.h1[(j, i)] = v;
                for k in 0..4 {
                    for l in 0..=k {
                        ham.h2.set(i, j, k, l, rng.gen::<f64>() - 0.5);
                    }
                }
            }
        }
        // random permutation of sites
        let perm = [2usize, 0, 3, 1];
        let mut permuted = crate::hamiltonians::AbInitioHamiltonian::empty(4);
        permuted.e_core = ham.e_core;
        for i in 0..4 {
            for j in 0..4 {
                permuted.h1[(perm[i], perm[j])] = ham.h1[(i, j)];
                for k in 0..4 {
                    for l in 0..4 {
                        permuted
                            .h2
                            .set(perm[i], perm[j], perm[k], perm[l], ham.eri(i, j, k, l));
                    }
                }
            }
        }
        let spec = SystemSpec::new(4, 2, 2, SpinMode::Restricted).unwrap();
        let e0 = ground_state(&Hamiltonian::ab_initio(ham), &spec).unwrap().energy;
        let e1 = ground_state(&Hamiltonian::ab_initio(permuted), &spec)
            .unwrap()
            .energy;
        assert!((e0 - e1).abs() < 1e-10);
    }

    #[test]
    fn ed_vector_local_energy_is_constant() {
        let h = hubbard(4, 1, 1.0, 8.0, false, false);
        let spec = SystemSpec::new(4, 2, 2, SpinMode::Restricted).unwrap();
        let gs = ground_state(&h, &spec).unwrap();
        for cfg in &gs.configs {
            if gs.amplitude(cfg).is_zero() {
                continue;
            }
            let mut src = crate::hamiltonians::FnAmplitude::new(cfg, |c: &Config| gs.amplitude(c));
            let e_loc = h.local_energy(cfg, &mut src, 0.0).unwrap();
            assert!(
                (e_loc - gs.energy).abs() < 1e-8,
                "E_loc {} vs E0 {}",
                e_loc,
                gs.energy
            );
        }
    }

    #[test]
    fn rdm1_trace_counts_electrons() {
        let h = hubbard(3, 1, 1.0, 2.0, false, false);
        let spec = SystemSpec::new(3, 2, 1, SpinMode::Restricted).unwrap();
        let gs = ground_state(&h, &spec).unwrap();
        let g_up = gs.rdm1_spinned(Spin::Up);
        let g_dn = gs.rdm1_spinned(Spin::Dn);
        assert!((g_up.trace() - 2.0).abs() < 1e-12);
        assert!((g_dn.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn h2_dissociation_spin_correlation() {
        // Two-site Hubbard at large U approximates a dissociated singlet:
        // <S^z_0 S^z_1> -> -1/4.
        let h = hubbard(2, 1, 0.02, 8.0, false, false);
        let spec = SystemSpec::new(2, 1, 1, SpinMode::Restricted).unwrap();
        let gs = ground_state(&h, &spec).unwrap();
        let c = gs.direct_szsz(0, 1);
        assert!((c + 0.25).abs() < 1e-3, "got {c}");
        assert!((gs.direct_szsz(0, 0) - 0.25).abs() < 1e-3);
    }
}
