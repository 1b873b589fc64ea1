//! Ab initio integral storage in chemist notation with 8-fold symmetry.

use nalgebra::DMatrix;

/// Two-electron integrals `(ij|kl)` over real orbitals, stored once per
/// 8-fold-symmetric equivalence class.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoElectronStore {
    l: usize,
    data: Vec<f64>,
}

impl TwoElectronStore {
    pub fn new(l: usize) -> Self {
        let np = l * (l + 1) / 2;
        TwoElectronStore {
            l,
            data: vec![0.0; np * (np + 1) / 2],
        }
    }

    pub fn orbitals(&self) -> usize {
        self.l
    }

    #[inline]
    fn pair(i: usize, j: usize) -> usize {
        let (p, q) = if i >= j { (i, j) } else { (j, i) };
        p * (p + 1) / 2 + q
    }

    #[inline]
    fn index(i: usize, j: usize, k: usize, l: usize) -> usize {
        let ij = Self::pair(i, j);
        let kl = Self::pair(k, l);
        let (a, b) = if ij >= kl { (ij, kl) } else { (kl, ij) };
        a * (a + 1) / 2 + b
    }

    /// Chemist-notation integral `(ij|kl)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[Self::index(i, j, k, l)]
    }

    /// Assign `(ij|kl)` and all its symmetry images.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.data[Self::index(i, j, k, l)] = v;
    }

    /// Canonical representatives `(i, j, k, l, value)` with `i >= j`,
    /// `k >= l`, `pair(i,j) >= pair(k,l)`, in deterministic order.
    pub fn canonical_entries(&self) -> Vec<(usize, usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.l {
            for j in 0..=i {
                let ij = Self::pair(i, j);
                for k in 0..self.l {
                    for m in 0..=k {
                        let kl = Self::pair(k, m);
                        if kl > ij {
                            continue;
                        }
                        let v = self.data[Self::index(i, j, k, m)];
                        out.push((i, j, k, m, v));
                    }
                }
            }
        }
        out
    }
}

/// One- and two-electron integrals plus core energy, all in Hartree.
#[derive(Clone, Debug, PartialEq)]
pub struct AbInitioHamiltonian {
    pub l: usize,
    pub h1: DMatrix<f64>,
    pub h2: TwoElectronStore,
    pub e_core: f64,
    /// Electron count declared by the integral file (metadata).
    pub nelec: usize,
    /// Twice the spin projection declared by the integral file (metadata).
    pub ms2: i32,
}

impl AbInitioHamiltonian {
    pub fn empty(l: usize) -> Self {
        AbInitioHamiltonian {
            l,
            h1: DMatrix::zeros(l, l),
            h2: TwoElectronStore::new(l),
            e_core: 0.0,
            nelec: 0,
            ms2: 0,
        }
    }

    #[inline]
    pub fn eri(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.h2.get(i, j, k, l)
    }

    /// Exchange matrix `K_{uv} = (uv|uv)`.
    pub fn exchange_matrix(&self) -> ExchangeMatrix {
        let l = self.l;
        let mut k = DMatrix::zeros(l, l);
        for u in 0..l {
            for v in 0..l {
                k[(u, v)] = self.eri(u, v, u, v);
            }
        }
        let em = ExchangeMatrix { k };
        em.check_diagonal_dominance();
        em
    }
}

/// Symmetric matrix of exchange integrals used to rank orbital entanglement.
#[derive(Clone, Debug, PartialEq)]
pub struct ExchangeMatrix {
    pub k: DMatrix<f64>,
}

impl ExchangeMatrix {
    pub fn orbitals(&self) -> usize {
        self.k.nrows()
    }

    /// For localized bases the on-site integral should dominate its row;
    /// a violation is suspicious but not fatal.
    fn check_diagonal_dominance(&self) {
        let l = self.orbitals();
        for u in 0..l {
            for v in 0..l {
                if v != u && self.k[(u, v)] > self.k[(u, u)] {
                    log::warn!(
                        "exchange matrix row {u}: off-diagonal K[{u},{v}] = {} exceeds diagonal {}",
                        self.k[(u, v)],
                        self.k[(u, u)]
                    );
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn eightfold_symmetry() {
        let mut s = TwoElectronStore::new(4);
        s.set(0, 1, 2, 3, 0.25);
        for (i, j, k, l) in [
            (0, 1, 2, 3),
            (1, 0, 2, 3),
            (0, 1, 3, 2),
            (1, 0, 3, 2),
            (2, 3, 0, 1),
            (3, 2, 0, 1),
            (2, 3, 1, 0),
            (3, 2, 1, 0),
        ] {
            assert_eq!(s.get(i, j, k, l), 0.25);
        }
        assert_eq!(s.get(0, 0, 0, 0), 0.0);
    }

    #[test]
    fn exchange_matrix_is_symmetric() {
        let mut h = AbInitioHamiltonian::empty(5);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for i in 0..5 {
            for j in 0..=i {
                for k in 0..5 {
                    for l in 0..=k {
                        h.h2.set(i, j, k, l, rng.gen::<f64>());
                    }
                }
            }
        }
        let em = h.exchange_matrix();
        for u in 0..5 {
            for v in 0..5 {
                assert_eq!(em.k[(u, v)], em.k[(v, u)]);
            }
        }
    }

    #[test]
    fn hubbard_exchange_is_diagonal() {
        let spec = super::super::hubbard::HubbardSpec {
            nx: 4,
            ny: 1,
            t: 1.0,
            u: 8.0,
            periodic_x: false,
            periodic_y: false,
        };
        let em = spec.to_ab_initio().exchange_matrix();
        for u in 0..4 {
            for v in 0..4 {
                let want = if u == v { 8.0 } else { 0.0 };
                assert_eq!(em.k[(u, v)], want);
            }
        }
    }
}
