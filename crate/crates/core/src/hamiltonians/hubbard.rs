//! Fermi-Hubbard lattice specification on a rectangular grid.

use serde::{Deserialize, Serialize};

use super::abinitio::{AbInitioHamiltonian, TwoElectronStore};
use nalgebra::DMatrix;

/// A rectangular Hubbard lattice with hopping `t` and on-site interaction `u`.
///
/// Sites are indexed row-major, `site = y * nx + x`. Periodic wrapping on an
/// axis of length two produces doubled bonds, so the hopping matrix element
/// between such a pair is `-2t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HubbardSpec {
    pub nx: usize,
    pub ny: usize,
    pub t: f64,
    pub u: f64,
    #[serde(default)]
    pub periodic_x: bool,
    #[serde(default)]
    pub periodic_y: bool,
}

/// An undirected lattice bond with its multiplicity folded into `mult`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub mult: u32,
}

impl HubbardSpec {
    pub fn sites(&self) -> usize {
        self.nx * self.ny
    }

    pub fn site_index(&self, x: usize, y: usize) -> usize {
        y * self.nx + x
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.nx, site / self.nx)
    }

    /// Lattice position in units of the lattice constant.
    pub fn position(&self, site: usize) -> [f64; 3] {
        let (x, y) = self.coords(site);
        [x as f64, y as f64, 0.0]
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.nx == 0 || self.ny == 0 {
            return Err("lattice dimensions must be positive".into());
        }
        if self.sites() > crate::fock::MAX_SITES {
            return Err(format!("lattice has {} sites, max is 64", self.sites()));
        }
        if !self.t.is_finite() || !self.u.is_finite() {
            return Err("t and U must be finite".into());
        }
        Ok(())
    }

    /// Nearest-neighbor bonds with multiplicities, sorted by `(a, b)`.
    pub fn bonds(&self) -> Vec<Bond> {
        let mut counts = std::collections::BTreeMap::new();
        let mut add = |a: usize, b: usize| {
            if a != b {
                let key = (a.min(b), a.max(b));
                *counts.entry(key).or_insert(0u32) += 1;
            }
        };
        for y in 0..self.ny {
            for x in 0..self.nx {
                let s = self.site_index(x, y);
                if self.nx > 1 {
                    if x + 1 < self.nx {
                        add(s, self.site_index(x + 1, y));
                    } else if self.periodic_x {
                        add(s, self.site_index(0, y));
                    }
                }
                if self.ny > 1 {
                    if y + 1 < self.ny {
                        add(s, self.site_index(x, y + 1));
                    } else if self.periodic_y {
                        add(s, self.site_index(x, 0));
                    }
                }
            }
        }
        counts
            .into_iter()
            .map(|((a, b), mult)| Bond { a, b, mult })
            .collect()
    }

    /// Neighbor of `site` in direction `dir` (0: +x, 1: -x, 2: +y, 3: -y).
    ///
    /// Returns `None` for moves leaving an open boundary or wrapping onto the
    /// same site.
    pub fn neighbor(&self, site: usize, dir: usize) -> Option<usize> {
        let (x, y) = self.coords(site);
        let target = match dir {
            0 => {
                if x + 1 < self.nx {
                    Some(self.site_index(x + 1, y))
                } else if self.periodic_x {
                    Some(self.site_index(0, y))
                } else {
                    None
                }
            }
            1 => {
                if x > 0 {
                    Some(self.site_index(x - 1, y))
                } else if self.periodic_x {
                    Some(self.site_index(self.nx - 1, y))
                } else {
                    None
                }
            }
            2 => {
                if y + 1 < self.ny {
                    Some(self.site_index(x, y + 1))
                } else if self.periodic_y {
                    Some(self.site_index(x, 0))
                } else {
                    None
                }
            }
            3 => {
                if y > 0 {
                    Some(self.site_index(x, y - 1))
                } else if self.periodic_y {
                    Some(self.site_index(x, self.ny - 1))
                } else {
                    None
                }
            }
            _ => None,
        };
        target.filter(|&s| s != site)
    }

    pub const N_DIRECTIONS: usize = 4;

    /// Breadth-first graph distances from every site over the bond graph.
    pub fn graph_distances(&self) -> Vec<Vec<u32>> {
        let l = self.sites();
        let mut adj = vec![Vec::new(); l];
        for bond in self.bonds() {
            adj[bond.a].push(bond.b);
            adj[bond.b].push(bond.a);
        }
        (0..l)
            .map(|start| {
                let mut dist = vec![u32::MAX; l];
                let mut queue = std::collections::VecDeque::new();
                dist[start] = 0;
                queue.push_back(start);
                while let Some(s) = queue.pop_front() {
                    for &n in &adj[s] {
                        if dist[n] == u32::MAX {
                            dist[n] = dist[s] + 1;
                            queue.push_back(n);
                        }
                    }
                }
                dist
            })
            .collect()
    }

    /// One-particle hopping matrix `h(1)` with bond multiplicities.
    pub fn hopping_matrix(&self) -> DMatrix<f64> {
        let l = self.sites();
        let mut h = DMatrix::zeros(l, l);
        for bond in self.bonds() {
            h[(bond.a, bond.b)] -= self.t * bond.mult as f64;
            h[(bond.b, bond.a)] -= self.t * bond.mult as f64;
        }
        h
    }

    /// Express the lattice model as an integral store: `h(1)` from hopping and
    /// `(ii|ii) = U`. Electron-count metadata is left at zero.
    pub fn to_ab_initio(&self) -> AbInitioHamiltonian {
        let l = self.sites();
        let mut h2 = TwoElectronStore::new(l);
        for i in 0..l {
            h2.set(i, i, i, i, self.u);
        }
        AbInitioHamiltonian {
            l,
            h1: self.hopping_matrix(),
            h2,
            e_core: 0.0,
            nelec: 0,
            ms2: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(nx: usize, ny: usize, px: bool, py: bool) -> HubbardSpec {
        HubbardSpec {
            nx,
            ny,
            t: 1.0,
            u: 4.0,
            periodic_x: px,
            periodic_y: py,
        }
    }

    #[test]
    fn open_chain_bonds() {
        let b = spec(4, 1, false, false).bonds();
        assert_eq!(
            b,
            vec![
                Bond { a: 0, b: 1, mult: 1 },
                Bond { a: 1, b: 2, mult: 1 },
                Bond { a: 2, b: 3, mult: 1 },
            ]
        );
    }

    #[test]
    fn two_by_two_periodic_has_doubled_bonds() {
        let b = spec(2, 2, true, true).bonds();
        assert_eq!(b.len(), 4);
        assert!(b.iter().all(|bond| bond.mult == 2));
    }

    #[test]
    fn periodic_ring_bonds() {
        let b = spec(4, 1, true, false).bonds();
        assert_eq!(b.len(), 4);
        assert!(b.iter().all(|bond| bond.mult == 1));
    }

    #[test]
    fn neighbors_respect_boundaries() {
        let s = spec(2, 1, false, false);
        assert_eq!(s.neighbor(1, 0), None);
        assert_eq!(s.neighbor(1, 1), Some(0));
        assert_eq!(s.neighbor(0, 2), None);
        let s = spec(3, 1, true, false);
        assert_eq!(s.neighbor(2, 0), Some(0));
        // wrapping onto self is suppressed
        let s = spec(1, 3, true, true);
        assert_eq!(s.neighbor(0, 0), None);
    }

    #[test]
    fn graph_distances_on_ring() {
        let d = spec(4, 1, true, false).graph_distances();
        assert_eq!(d[0], vec![0, 1, 2, 1]);
    }
}
