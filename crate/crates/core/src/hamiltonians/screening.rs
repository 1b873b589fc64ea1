//! Magnitude-presorted double-excitation candidates.
//!
//! For every occupied pair key (same-spin spatial pair or opposite-spin
//! ordered pair) the index stores all target pairs sorted descending by the
//! magnitude of the antisymmetrized two-body amplitude, so a pruned local
//! energy evaluation can stop at the first candidate below threshold instead
//! of scanning every matrix element. Thresholds compare against the bare
//! antisymmetrized amplitude before any parity dressing.

use super::abinitio::AbInitioHamiltonian;

/// A candidate double-excitation target pair with its bare amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub p: u16,
    pub r: u16,
    pub amp: f64,
}

/// Presorted two-body amplitudes keyed by annihilated pairs.
#[derive(Clone, Debug)]
pub struct ScreeningIndex {
    l: usize,
    /// Keyed by triangular pair index of spatial `(q < s)`; candidates have
    /// `p < r` and amplitude `(pq|rs) - (ps|rq)`.
    same_spin: Vec<Vec<Candidate>>,
    /// Keyed by `q * l + s` with `q` the up-spatial and `s` the dn-spatial
    /// index; candidates are ordered pairs `(p, r)` with amplitude `(pq|rs)`.
    opposite: Vec<Vec<Candidate>>,
}

fn tri_index(q: usize, s: usize) -> usize {
    debug_assert!(q < s);
    s * (s - 1) / 2 + q
}

impl ScreeningIndex {
    pub fn build(h: &AbInitioHamiltonian) -> Self {
        let l = h.l;
        let mut same_spin = vec![Vec::new(); l * (l.saturating_sub(1)) / 2];
        for s in 0..l {
            for q in 0..s {
                let list = &mut same_spin[tri_index(q, s)];
                for r in 0..l {
                    for p in 0..r {
                        let amp = h.eri(p, q, r, s) - h.eri(p, s, r, q);
                        if amp != 0.0 {
                            list.push(Candidate {
                                p: p as u16,
                                r: r as u16,
                                amp,
                            });
                        }
                    }
                }
                sort_candidates(list);
            }
        }
        let mut opposite = vec![Vec::new(); l * l];
        for q in 0..l {
            for s in 0..l {
                let list = &mut opposite[q * l + s];
                for p in 0..l {
                    for r in 0..l {
                        let amp = h.eri(p, q, r, s);
                        if amp != 0.0 {
                            list.push(Candidate {
                                p: p as u16,
                                r: r as u16,
                                amp,
                            });
                        }
                    }
                }
                sort_candidates(list);
            }
        }
        ScreeningIndex {
            l,
            same_spin,
            opposite,
        }
    }

    /// Candidates for a same-spin annihilated spatial pair `q < s`.
    pub fn same_spin(&self, q: usize, s: usize) -> &[Candidate] {
        &self.same_spin[tri_index(q, s)]
    }

    /// Candidates for an opposite-spin annihilated pair (`q` up, `s` dn).
    pub fn opposite(&self, q: usize, s: usize) -> &[Candidate] {
        &self.opposite[q * self.l + s]
    }
}

fn sort_candidates(list: &mut [Candidate]) {
    list.sort_unstable_by(|a, b| {
        b.amp
            .abs()
            .total_cmp(&a.amp.abs())
            .then(a.p.cmp(&b.p))
            .then(a.r.cmp(&b.r))
    });
}
