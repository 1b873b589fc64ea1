//! Analytic log-derivatives of the amplitude with respect to the factors.
//!
//! For an occupied row `mu` of a block determinant, the derivative of
//! `log psi` with respect to `eps[mu, i, s, nu, m]` is
//! `(A^-1)[i, row(mu)] * prod_{nu' != nu} eps[mu, i, s_{nu'}, nu', m]`,
//! nonzero only when `s` equals the current occupation state of the slot's
//! site. The exclusion products are formed from prefix/suffix partial
//! products, which handles exact zero factors without division.

use super::CpdParams;
use crate::error::SampleError;
use crate::fock::Config;

/// One sample's sparse log-derivative row, sorted by flat parameter index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRow {
    pub entries: Vec<(u32, f64)>,
}

impl SparseRow {
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i as usize]).sum()
    }
}

/// Sparse map from flat parameter index to `d log|psi| / d eps`.
pub fn log_derivatives(params: &CpdParams, cfg: &Config) -> Result<SparseRow, SampleError> {
    let k = params.range();
    let md = params.support_dim;
    let mut entries = Vec::new();
    let mut fbuf = vec![0.0; k];
    let mut pre = vec![0.0; k + 1];
    let mut suf = vec![0.0; k + 1];
    for b in 0..params.n_blocks() {
        let n = params.block_orbs(b);
        if n == 0 {
            continue;
        }
        let rows = params.occupied_rows(b, cfg);
        let a = params.block_matrix(b, cfg, &rows);
        let inv = a.try_inverse().ok_or(SampleError::SingularMatrix)?;
        for (r, &mu) in rows.iter().enumerate() {
            let site = params.row_site(b, mu);
            let lrow = params.lookup.row(site);
            for i in 0..n {
                let g = inv[(i, r)];
                let base = params.slice_base(b, mu, i);
                for m in 0..md {
                    for (nu, &w) in lrow.iter().enumerate() {
                        let s = cfg.site_state(w as usize) as usize;
                        fbuf[nu] = params.factor(base + (s * k + nu) * md + m);
                    }
                    pre[0] = 1.0;
                    for nu in 0..k {
                        pre[nu + 1] = pre[nu] * fbuf[nu];
                    }
                    suf[k] = 1.0;
                    for nu in (0..k).rev() {
                        suf[nu] = fbuf[nu] * suf[nu + 1];
                    }
                    for nu in 0..k {
                        let val = g * pre[nu] * suf[nu + 1];
                        if val != 0.0 {
                            let s = cfg.site_state(lrow[nu] as usize) as usize;
                            entries.push((params.index(b, mu, i, s, nu, m) as u32, val));
                        }
                    }
                }
            }
        }
    }
    entries.sort_unstable_by_key(|e| e.0);
    Ok(SparseRow { entries })
}
