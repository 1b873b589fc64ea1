//! Mean-field orbitals and determinant energies used to seed the ansatz.
//!
//! Hubbard lattices use the hopping-matrix eigenvectors (the restricted
//! mean-field orbitals of a uniform-density state). Ab initio Hamiltonians
//! run a damped closed-shell self-consistent field when the sector is
//! closed-shell, falling back to core-Hamiltonian orbitals otherwise.

use nalgebra::DMatrix;

use crate::ansatz::HfOrbitals;
use crate::hamiltonians::{AbInitioHamiltonian, HubbardSpec};

/// Eigenvalues ascending with deterministically gauged eigenvectors
/// (largest-magnitude component of each column is positive).
pub fn sorted_eigvecs(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let mut v: Vec<f64> = eig.eigenvectors.column(src).iter().cloned().collect();
        let mut best = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[best].abs() {
                best = i;
            }
        }
        if v[best] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for (r, x) in v.iter().enumerate() {
            vectors[(r, col)] = *x;
        }
    }
    (values, vectors)
}

/// Tight-binding orbitals of the lattice: lowest hopping-matrix eigenvectors.
pub fn hubbard_orbitals(spec: &HubbardSpec, n_up: usize, n_dn: usize) -> HfOrbitals {
    let (_, c) = sorted_eigvecs(&spec.hopping_matrix());
    HfOrbitals {
        up: c.columns(0, n_up).into_owned(),
        dn: c.columns(0, n_dn).into_owned(),
    }
}

/// Mean-field orbitals for an integral store.
///
/// Closed-shell sectors (`n_up == n_dn > 0`) run a damped Roothaan SCF in the
/// orthonormal sampling basis; anything else takes core-Hamiltonian orbitals.
/// Non-convergence falls back to the last iterate with a warning: seeding
/// quality affects optimization speed, not correctness.
pub fn scf_orbitals(h: &AbInitioHamiltonian, n_up: usize, n_dn: usize) -> HfOrbitals {
    let _ = h.l;
    if n_up != n_dn || n_up == 0 {
        let (_, c) = sorted_eigvecs(&h.h1);
        return HfOrbitals {
            up: c.columns(0, n_up).into_owned(),
            dn: c.columns(0, n_dn).into_owned(),
        };
    }
    let n_occ = n_up;
    let density = |c: &DMatrix<f64>| -> DMatrix<f64> {
        let occ = c.columns(0, n_occ);
        2.0 * &occ * occ.transpose()
    };
    let (_, c0) = sorted_eigvecs(&h.h1);
    let mut p = density(&c0);
    let mut c_final = c0;
    let mut converged = false;
    for _ in 0..300 {
        let f = fock_matrix(h, &p);
        let (_, c) = sorted_eigvecs(&f);
        let p_new = density(&c);
        let delta = (&p_new - &p).abs().max();
        p = 0.7 * p_new + 0.3 * &p;
        c_final = c;
        if delta < 1e-11 {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("SCF did not converge to 1e-11; using last iterate");
    }
    HfOrbitals {
        up: c_final.columns(0, n_occ).into_owned(),
        dn: c_final.columns(0, n_occ).into_owned(),
    }
}

/// Closed-shell Fock matrix `F = h1 + G(P)` with total density `P`.
fn fock_matrix(h: &AbInitioHamiltonian, p: &DMatrix<f64>) -> DMatrix<f64> {
    let l = h.l;
    let mut f = h.h1.clone();
    for mu in 0..l {
        for nu in 0..l {
            let mut g = 0.0;
            for la in 0..l {
                for si in 0..l {
                    g += p[(la, si)] * (h.eri(mu, nu, si, la) - 0.5 * h.eri(mu, la, si, nu));
                }
            }
            f[(mu, nu)] += g;
        }
    }
    f
}

/// Mean-field energy of the determinant built from `orbs`, valid for any
/// (not necessarily converged) orbital set:
/// `E = sum h P + 1/2 sum (mu nu|la si) [P_mn P_ls - sum_s D^s_ms D^s_nl] + e_core`.
pub fn determinant_energy(h: &AbInitioHamiltonian, orbs: &HfOrbitals) -> f64 {
    let l = h.l;
    let d_up = &orbs.up * orbs.up.transpose();
    let d_dn = &orbs.dn * orbs.dn.transpose();
    let p = &d_up + &d_dn;
    let mut e = h.e_core;
    for mu in 0..l {
        for nu in 0..l {
            e += h.h1[(mu, nu)] * p[(mu, nu)];
        }
    }
    for mu in 0..l {
        for nu in 0..l {
            for la in 0..l {
                for si in 0..l {
                    let eri = h.eri(mu, nu, la, si);
                    if eri == 0.0 {
                        continue;
                    }
                    let coulomb = p[(mu, nu)] * p[(la, si)];
                    let exchange =
                        d_up[(mu, si)] * d_up[(nu, la)] + d_dn[(mu, si)] * d_dn[(nu, la)];
                    e += 0.5 * eri * (coulomb - exchange);
                }
            }
        }
    }
    e
}

/// Mean-field energy for a Hubbard lattice determinant.
pub fn hubbard_determinant_energy(spec: &HubbardSpec, orbs: &HfOrbitals) -> f64 {
    determinant_energy(&spec.to_ab_initio(), orbs)
}
