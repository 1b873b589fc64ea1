//! Representability constructors: explicit parameter tensors whose
//! amplitudes factor into a Jastrow-type prefactor times a static
//! determinant, plus the independent evaluator they are checked against.
//!
//! The factored subset pins the orbital coefficient to the self slot and a
//! site-keyed CP factor everywhere, so the determinant pulls the CP products
//! out as a per-orbital prefactor. The Gutzwiller state is the special case
//! with a double-occupancy penalty on one designated orbital.

use nalgebra::DMatrix;

use crate::ansatz::{CpdParams, HfOrbitals, LookupTable};
use crate::fock::{Config, Spin, SpinMode, SystemSpec};
use crate::util::SignLog;

/// Site-keyed CP factors of one orbital: `kappa[s][w][m]` flattened as
/// `(s * L + w) * M + m`.
pub type OrbitalCp = Vec<f64>;

/// Per-orbital CP factors for both spin blocks of a restricted state.
#[derive(Clone, Debug)]
pub struct JastrowCp {
    pub sites: usize,
    pub support_dim: usize,
    pub up: Vec<OrbitalCp>,
    pub dn: Vec<OrbitalCp>,
}

impl JastrowCp {
    /// All-ones factors: the identity Jastrow.
    pub fn ones(sites: usize, support_dim: usize, n_up: usize, n_dn: usize) -> Self {
        let table = vec![1.0; 4 * sites * support_dim];
        JastrowCp {
            sites,
            support_dim,
            up: vec![table.clone(); n_up],
            dn: vec![table; n_dn],
        }
    }

    fn block(&self, block: usize) -> &[OrbitalCp] {
        if block == 0 {
            &self.up
        } else {
            &self.dn
        }
    }

    #[inline]
    fn get(&self, block: usize, i: usize, s: usize, w: usize, m: usize) -> f64 {
        self.block(block)[i][(s * self.sites + w) * self.support_dim + m]
    }

    /// The CP prefactor of one orbital: `sum_m prod_w kappa[state(w)][w][m]`.
    pub fn orbital_prefactor(&self, block: usize, i: usize, cfg: &Config) -> f64 {
        let mut sum = 0.0;
        for m in 0..self.support_dim {
            let mut prod = 1.0;
            for w in 0..self.sites {
                prod *= self.get(block, i, cfg.site_state(w) as usize, w, m);
            }
            sum += prod;
        }
        sum
    }
}

/// Build the factored-subset tensor `eps[mu, i, s, nu, m] =
/// kappa_i(s, x[mu, nu], m) * (phi[mu, i] at the self slot)` so that every
/// amplitude equals `prod_i CP_i(n) * det(phi_occ)`.
pub fn factored_cpd(hf: &HfOrbitals, spec: SystemSpec, kappa: &JastrowCp) -> CpdParams {
    assert_eq!(spec.spin_mode, SpinMode::Restricted);
    assert_eq!(kappa.sites, spec.sites);
    assert_eq!(kappa.up.len(), spec.n_up);
    assert_eq!(kappa.dn.len(), spec.n_dn);
    let l = spec.sites;
    let lookup = LookupTable::full(l);
    let mut p = CpdParams::zeros(spec, kappa.support_dim, lookup);
    for block in 0..p.n_blocks() {
        let phi = if block == 0 { &hf.up } else { &hf.dn };
        for mu in 0..l {
            for i in 0..p.block_orbs(block) {
                for s in 0..4 {
                    for nu in 0..p.range() {
                        let w = p.lookup.entry(mu, nu);
                        for m in 0..p.support_dim {
                            let mut v = kappa.get(block, i, s, w, m);
                            if nu == 0 {
                                v *= phi[(mu, i)];
                            }
                            let idx = p.index(block, mu, i, s, nu, m);
                            p.factors_mut()[idx] = v;
                        }
                    }
                }
            }
        }
    }
    p
}

/// Gutzwiller parameterization at `M = 1`: the first up orbital (or first dn
/// orbital when the up block is empty) carries a factor `exp(g_w)` on every
/// doubly occupied site, so amplitudes are
/// `exp(sum_w g_w [state(w) = 3]) * det(phi_occ)`.
pub fn gutzwiller_cpd(hf: &HfOrbitals, spec: SystemSpec, g: &[f64]) -> CpdParams {
    assert_eq!(g.len(), spec.sites);
    let mut kappa = JastrowCp::ones(spec.sites, 1, spec.n_up, spec.n_dn);
    let carrier = if spec.n_up > 0 {
        &mut kappa.up[0]
    } else {
        &mut kappa.dn[0]
    };
    for (w, &gw) in g.iter().enumerate() {
        carrier[3 * spec.sites + w] = gw.exp();
    }
    factored_cpd(hf, spec, &kappa)
}

/// Independent reference: the Jastrow prefactor times a plain determinant of
/// the static orbitals, evaluated with dense linear algebra.
pub fn jastrow_det_amplitude(
    hf: &HfOrbitals,
    spec: &SystemSpec,
    kappa: &JastrowCp,
    cfg: &Config,
) -> f64 {
    let mut value = 1.0;
    for block in 0..2 {
        let (phi, n, spin) = if block == 0 {
            (&hf.up, spec.n_up, Spin::Up)
        } else {
            (&hf.dn, spec.n_dn, Spin::Dn)
        };
        for i in 0..n {
            value *= kappa.orbital_prefactor(block, i, cfg);
        }
        let rows = cfg.occupied_sites(spin);
        assert_eq!(rows.len(), n);
        if n > 0 {
            let a = DMatrix::from_fn(n, n, |r, i| phi[(rows[r], i)]);
            value *= a.determinant();
        }
    }
    value
}

/// Gutzwiller reference amplitude `exp(sum_w g_w [n_w = 3]) * det(phi_occ)`.
pub fn gutzwiller_reference(
    hf: &HfOrbitals,
    spec: &SystemSpec,
    g: &[f64],
    cfg: &Config,
) -> f64 {
    let mut jastrow = 0.0;
    for (w, &gw) in g.iter().enumerate() {
        if cfg.site_state(w) == 3 {
            jastrow += gw;
        }
    }
    let kappa = JastrowCp::ones(spec.sites, 1, spec.n_up, spec.n_dn);
    jastrow.exp() * jastrow_det_amplitude(hf, spec, &kappa, cfg)
}

/// Compare a `(sign, log)` amplitude with a plain reference value.
pub fn matches_reference(amp: SignLog, reference: f64, tol: f64) -> bool {
    (amp.value() - reference).abs() <= tol * reference.abs().max(1e-30)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::enumerate_sector;
    use rand::{Rng, SeedableRng};

    fn random_hf(l: usize, n_up: usize, n_dn: usize, seed: u64) -> HfOrbitals {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        HfOrbitals {
            up: DMatrix::from_fn(l, n_up, |_, _| rng.gen::<f64>() - 0.5),
            dn: DMatrix::from_fn(l, n_dn, |_, _| rng.gen::<f64>() - 0.5),
        }
    }

    #[test]
    fn gutzwiller_zero_g_is_plain_determinant() {
        let spec = SystemSpec::new(4, 2, 2, SpinMode::Restricted).unwrap();
        let hf = random_hf(4, 2, 2, 1);
        let p = gutzwiller_cpd(&hf, spec, &[0.0; 4]);
        for cfg in enumerate_sector(&spec, 100).unwrap() {
            let want = gutzwiller_reference(&hf, &spec, &[0.0; 4], &cfg);
            assert!(matches_reference(p.log_amplitude(&cfg), want, 1e-12));
        }
    }

    #[test]
    fn gutzwiller_suppresses_double_occupancy() {
        let spec = SystemSpec::new(2, 1, 1, SpinMode::Restricted).unwrap();
        let hf = random_hf(2, 1, 1, 2);
        let g = [-10.0, -10.0];
        let p = gutzwiller_cpd(&hf, spec, &g);
        let doubly = Config::from_site_lists(&[0], &[0]);
        let singly = Config::from_site_lists(&[0], &[1]);
        let plain = gutzwiller_cpd(&hf, spec, &[0.0, 0.0]);
        let ratio_doubly =
            p.log_amplitude(&doubly).value() / plain.log_amplitude(&doubly).value();
        let ratio_singly =
            p.log_amplitude(&singly).value() / plain.log_amplitude(&singly).value();
        assert!((ratio_doubly - (-10.0f64).exp()).abs() < 1e-12);
        assert!((ratio_singly - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gutzwiller_matches_reference_on_chain_sector() {
        let spec = SystemSpec::new(4, 2, 2, SpinMode::Restricted).unwrap();
        let hf = random_hf(4, 2, 2, 3);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(4);
        let g: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() - 0.5).collect();
        let p = gutzwiller_cpd(&hf, spec, &g);
        for cfg in enumerate_sector(&spec, 100).unwrap() {
            let want = gutzwiller_reference(&hf, &spec, &g, &cfg);
            assert!(
                matches_reference(p.log_amplitude(&cfg), want, 1e-12),
                "cfg {cfg:?}: {} vs {want}",
                p.log_amplitude(&cfg).value()
            );
        }
    }

    #[test]
    fn factored_cpd_matches_independent_evaluator() {
        let spec = SystemSpec::new(4, 2, 1, SpinMode::Restricted).unwrap();
        let hf = random_hf(4, 2, 1, 5);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(6);
        let mut kappa = JastrowCp::ones(4, 2, 2, 1);
        for block in [&mut kappa.up, &mut kappa.dn] {
            for orb in block {
                for v in orb.iter_mut() {
                    *v = 0.5 + rng.gen::<f64>();
                }
            }
        }
        let p = factored_cpd(&hf, spec, &kappa);
        for cfg in enumerate_sector(&spec, 100).unwrap() {
            let want = jastrow_det_amplitude(&hf, &spec, &kappa, &cfg);
            assert!(
                matches_reference(p.log_amplitude(&cfg), want, 1e-12),
                "cfg {cfg:?}"
            );
        }
    }

    #[test]
    fn all_ones_kappa_scales_by_support_dimension_power() {
        // kappa = 1 with M components: each orbital prefactor is M, a global
        // constant that cannot change normalized expectations
        let spec = SystemSpec::new(3, 1, 1, SpinMode::Restricted).unwrap();
        let hf = random_hf(3, 1, 1, 7);
        let kappa = JastrowCp::ones(3, 2, 1, 1);
        let p = factored_cpd(&hf, spec, &kappa);
        let plain = JastrowCp::ones(3, 1, 1, 1);
        let q = factored_cpd(&hf, spec, &plain);
        for cfg in enumerate_sector(&spec, 100).unwrap() {
            let a = p.log_amplitude(&cfg).value();
            let b = q.log_amplitude(&cfg).value();
            assert!((a - 4.0 * b).abs() < 1e-12 * b.abs().max(1e-30));
        }
    }
}
