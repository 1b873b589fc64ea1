//! Incremental amplitude evaluation along a Markov chain.
//!
//! The context caches, for every (row, orbital, component), the product of
//! CP factors over the lookup slots of the current configuration. Exact zero
//! factors are tracked by count so the nonzero partial product survives
//! division updates. A proposed excitation evaluates the target amplitude
//! into a pending trial without touching committed state, so rejection is
//! free; committing swaps the trial in. A full rebuild every
//! `rebuild_period` accepted moves bounds multiplicative drift, and any
//! division by a factor below the guard forces a rebuild on commit.

use arrayvec::ArrayVec;
use nalgebra::DMatrix;

use super::CpdParams;
use crate::error::FockError;
use crate::fock::{apply_excitation, Config, Excitation};
use crate::hamiltonians::AmplitudeSource;
use crate::util::{det_sign_log, SignLog};

const DIVISION_GUARD: f64 = 1e-300;

/// Product of nonzero factors plus a count of exact zeros.
#[derive(Clone, Copy, Debug)]
struct ZProd {
    nz: f64,
    zeros: u32,
}

impl ZProd {
    #[inline]
    fn value(self) -> f64 {
        if self.zeros == 0 {
            self.nz
        } else {
            0.0
        }
    }
}

struct CtxBlock {
    orbs: usize,
    /// rows * orbs * M factor products for the current configuration.
    prods: Vec<ZProd>,
    /// rows * orbs orbital values for the current configuration.
    phi: Vec<f64>,
    occ: Vec<usize>,
    det: SignLog,
}

struct PendingRow {
    row: usize,
    prods: Vec<ZProd>,
    phi: Vec<f64>,
}

struct PendingBlock {
    touched: Vec<PendingRow>,
    occ: Vec<usize>,
    det: SignLog,
}

struct Pending {
    target: Config,
    blocks: Vec<PendingBlock>,
    amp: SignLog,
    guard: bool,
}

/// Single-chain mutable evaluation state for one [`CpdParams`].
pub struct EvalContext<'p> {
    params: &'p CpdParams,
    cfg: Config,
    blocks: Vec<CtxBlock>,
    amp: SignLog,
    accepted: usize,
    rebuild_period: usize,
    pending: Option<Pending>,
}

impl<'p> EvalContext<'p> {
    pub fn new(params: &'p CpdParams, cfg: Config) -> Self {
        let mut ctx = EvalContext {
            params,
            cfg,
            blocks: Vec::new(),
            amp: SignLog::ZERO,
            accepted: 0,
            rebuild_period: params.spec.sites.max(1),
            pending: None,
        };
        ctx.rebuild();
        ctx
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    /// Amplitude of the current configuration.
    pub fn amplitude(&self) -> SignLog {
        self.amp
    }

    /// Accepted moves since the last full rebuild.
    pub fn moves_since_rebuild(&self) -> usize {
        self.accepted
    }

    pub fn set_rebuild_period(&mut self, period: usize) {
        self.rebuild_period = period.max(1);
    }

    /// Rebuild all cached products and determinants from scratch.
    pub fn rebuild(&mut self) {
        self.pending = None;
        self.accepted = 0;
        let p = self.params;
        let md = p.support_dim;
        let mut amp = SignLog::new(1, 0.0);
        let mut blocks = Vec::with_capacity(p.n_blocks());
        for b in 0..p.n_blocks() {
            let rows = p.block_rows(b);
            let orbs = p.block_orbs(b);
            let mut prods = vec![ZProd { nz: 1.0, zeros: 0 }; rows * orbs * md];
            let mut phi = vec![0.0; rows * orbs];
            for mu in 0..rows {
                for i in 0..orbs {
                    let mut sum = 0.0;
                    for m in 0..md {
                        let zp = product_from_scratch(p, b, mu, i, m, &self.cfg);
                        sum += zp.value();
                        prods[(mu * orbs + i) * md + m] = zp;
                    }
                    phi[mu * orbs + i] = sum;
                }
            }
            let occ = p.occupied_rows(b, &self.cfg);
            assert_eq!(occ.len(), orbs, "configuration outside the declared sector");
            let det = block_det(orbs, &occ, |r, i| phi[occ[r] * orbs + i]);
            amp = amp.mul(det);
            blocks.push(CtxBlock {
                orbs,
                prods,
                phi,
                occ,
                det,
            });
        }
        self.blocks = blocks;
        self.amp = amp;
    }

    /// Jump to an arbitrary configuration.
    pub fn set_config(&mut self, cfg: Config) {
        self.cfg = cfg;
        self.rebuild();
    }

    /// Evaluate the amplitude of the configuration reached by `ex` without
    /// committing. The trial stays pending until `commit` or `reject`; a
    /// second `propose` replaces it.
    pub fn propose(&mut self, ex: &Excitation) -> Result<SignLog, FockError> {
        let p = self.params;
        let l = p.spec.sites;
        let (target, _) = apply_excitation(l, &self.cfg, ex)?;

        let mut changed: ArrayVec<(usize, u8, u8), 4> = ArrayVec::new();
        let mut diff = (self.cfg.up ^ target.up) | (self.cfg.dn ^ target.dn);
        while diff != 0 {
            let w = diff.trailing_zeros() as usize;
            diff &= diff - 1;
            changed.push((w, self.cfg.site_state(w), target.site_state(w)));
        }

        let md = p.support_dim;
        let k = p.range();
        let mut guard = false;
        let mut amp = SignLog::new(1, 0.0);
        let mut pending_blocks = Vec::with_capacity(self.blocks.len());
        for (b, blk) in self.blocks.iter().enumerate() {
            // group the changed lookup slots by block row
            let mut touched_slots: Vec<(usize, ArrayVec<(u32, u8, u8), 4>)> = Vec::new();
            for &(w, so, sn) in &changed {
                for &(mu_site, nu) in p.lookup.reverse(w) {
                    for row in block_rows_of_site(p, mu_site as usize) {
                        match touched_slots.iter_mut().find(|(r, _)| *r == row) {
                            Some((_, slots)) => slots.push((nu, so, sn)),
                            None => {
                                let mut slots = ArrayVec::new();
                                slots.push((nu, so, sn));
                                touched_slots.push((row, slots));
                            }
                        }
                    }
                }
            }
            touched_slots.sort_unstable_by_key(|(r, _)| *r);

            let orbs = blk.orbs;
            let mut touched = Vec::with_capacity(touched_slots.len());
            for (row, slots) in touched_slots {
                let mut prods =
                    blk.prods[row * orbs * md..(row + 1) * orbs * md].to_vec();
                let mut phi = vec![0.0; orbs];
                for i in 0..orbs {
                    let base = p.slice_base(b, row, i);
                    let mut sum = 0.0;
                    for m in 0..md {
                        let zp = &mut prods[i * md + m];
                        let mut ok = true;
                        for &(nu, so, sn) in &slots {
                            let f_old =
                                p.factor(base + (so as usize * k + nu as usize) * md + m);
                            if f_old == 0.0 {
                                zp.zeros -= 1;
                            } else if f_old.abs() < DIVISION_GUARD {
                                ok = false;
                                break;
                            } else {
                                zp.nz /= f_old;
                            }
                            let f_new =
                                p.factor(base + (sn as usize * k + nu as usize) * md + m);
                            if f_new == 0.0 {
                                zp.zeros += 1;
                            } else {
                                zp.nz *= f_new;
                            }
                        }
                        if !ok {
                            guard = true;
                            *zp = product_from_scratch(p, b, row, i, m, &target);
                        }
                        sum += zp.value();
                    }
                    phi[i] = sum;
                }
                touched.push(PendingRow { row, prods, phi });
            }

            let occ = p.occupied_rows(b, &target);
            debug_assert_eq!(occ.len(), orbs);
            let det = if touched.is_empty() && occ == blk.occ {
                blk.det
            } else {
                block_det(orbs, &occ, |r, i| {
                    let row = occ[r];
                    match touched.iter().find(|pr| pr.row == row) {
                        Some(pr) => pr.phi[i],
                        None => blk.phi[row * orbs + i],
                    }
                })
            };
            amp = amp.mul(det);
            pending_blocks.push(PendingBlock { touched, occ, det });
        }

        self.pending = Some(Pending {
            target,
            blocks: pending_blocks,
            amp,
            guard,
        });
        Ok(amp)
    }

    /// Make the pending trial the current state.
    ///
    /// Panics if no trial is pending.
    pub fn commit(&mut self) {
        let pending = self.pending.take().expect("commit without pending proposal");
        let md = self.params.support_dim;
        self.cfg = pending.target;
        for (blk, pb) in self.blocks.iter_mut().zip(pending.blocks) {
            let orbs = blk.orbs;
            for pr in pb.touched {
                let pstart = pr.row * orbs * md;
                blk.prods[pstart..pstart + orbs * md].copy_from_slice(&pr.prods);
                let fstart = pr.row * orbs;
                blk.phi[fstart..fstart + orbs].copy_from_slice(&pr.phi);
            }
            blk.occ = pb.occ;
            blk.det = pb.det;
        }
        self.amp = pending.amp;
        self.accepted += 1;
        if pending.guard || self.accepted >= self.rebuild_period {
            self.rebuild();
        }
    }

    /// Drop the pending trial.
    pub fn reject(&mut self) {
        self.pending = None;
    }
}

/// Block rows reading the lookup row of a spatial site.
fn block_rows_of_site(p: &CpdParams, site: usize) -> ArrayVec<usize, 2> {
    let mut rows = ArrayVec::new();
    match p.spec.spin_mode {
        crate::fock::SpinMode::Restricted => rows.push(site),
        crate::fock::SpinMode::Generalized => {
            rows.push(site);
            rows.push(site + p.spec.sites);
        }
    }
    rows
}

fn product_from_scratch(
    p: &CpdParams,
    block: usize,
    mu: usize,
    i: usize,
    m: usize,
    cfg: &Config,
) -> ZProd {
    let site = p.row_site(block, mu);
    let k = p.range();
    let md = p.support_dim;
    let base = p.slice_base(block, mu, i);
    let mut nz = 1.0;
    let mut zeros = 0;
    for (nu, &w) in p.lookup.row(site).iter().enumerate() {
        let s = cfg.site_state(w as usize) as usize;
        let f = p.factor(base + (s * k + nu) * md + m);
        if f == 0.0 {
            zeros += 1;
        } else {
            nz *= f;
        }
    }
    ZProd { nz, zeros }
}

fn block_det(n: usize, occ: &[usize], entry: impl Fn(usize, usize) -> f64) -> SignLog {
    debug_assert_eq!(occ.len(), n);
    if n == 0 {
        return SignLog::new(1, 0.0);
    }
    det_sign_log(DMatrix::from_fn(n, n, entry))
}

impl AmplitudeSource for EvalContext<'_> {
    fn base(&self) -> SignLog {
        self.amp
    }

    fn excited(&mut self, _target: &Config, ex: &Excitation) -> SignLog {
        match self.propose(ex) {
            Ok(amp) => {
                self.reject();
                amp
            }
            Err(_) => {
                debug_assert!(false, "connected excitation must be legal");
                SignLog::ZERO
            }
        }
    }
}
