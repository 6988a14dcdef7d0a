//! Finite-temperature, nonsecular Bloch-Redfield dephasing.
//!
//! Site dephasers are split into eigen-operators `A_m(ω)` of the chain
//! Hamiltonian, weighted by the noise-power spectrum and recombined as
//! `Λ_m = Σ_ω S(ω) A_m(ω)`. The generator keeps every cross-frequency term:
//!
//! ```text
//! D(ρ) = Γ Σ_m ½ (Λ_m ρ A_m + A_m ρ Λ_m† − A_m Λ_m ρ − ρ Λ_m† A_m)
//! ```
//!
//! which reduces to `Γ·𝒥₀·Σ_m D[A_m]` whenever `S` is constant. Baths on
//! different sites are uncorrelated. Lamb-shift terms are dropped.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chain::{EigenDecomposition, Hamiltonian};
use crate::lindblad::{coherent_and_transport, TransportSpec};
use crate::liouvillian::{sparse_op, Liouvillian, SuperOpBuilder};
use crate::{Error, Result, C64};

/// Splittings closer than this are the same channel.
pub const FREQUENCY_TOLERANCE: f64 = 1e-9;

/// Bath spectral density `𝒥(ω)` for `ω ≥ 0`.
pub trait SpectralDensity: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn density(&self, omega: f64) -> f64;

    /// Value used for the `ω = 0` channel at inverse temperature `beta`.
    fn zero_frequency_power(&self, beta: f64) -> f64;
}

/// Frequency-independent density `𝒥(ω) = 𝒥₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flat {
    pub magnitude: f64,
}

impl SpectralDensity for Flat {
    fn name(&self) -> &'static str {
        "flat"
    }

    fn density(&self, _omega: f64) -> f64 {
        self.magnitude
    }

    /// The Bose factor diverges at `ω → 0`; the zero-frequency channel is
    /// pinned to `𝒥₀` so that it reproduces plain pure dephasing.
    fn zero_frequency_power(&self, _beta: f64) -> f64 {
        self.magnitude
    }
}

/// `𝒥(ω) = λ·(2/π)·ω·γ / (ω² + γ²)` with `γ = 1/τ` the Lorentzian linewidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeLorentz {
    pub coupling: f64,
    pub linewidth: f64,
}

pub fn drude_lorentz(omega: f64, coupling: f64, linewidth: f64) -> f64 {
    let w = omega.abs();
    coupling * (2.0 / std::f64::consts::PI) * w * linewidth / (w * w + linewidth * linewidth)
}

impl SpectralDensity for DrudeLorentz {
    fn name(&self) -> &'static str {
        "drude-lorentz"
    }

    fn density(&self, omega: f64) -> f64 {
        drude_lorentz(omega, self.coupling, self.linewidth)
    }

    /// `lim_{ω→0} (N_BE(ω) + 1)·𝒥(ω) = 2λ / (π β γ)`.
    fn zero_frequency_power(&self, beta: f64) -> f64 {
        if beta.is_infinite() {
            0.0
        } else {
            2.0 * self.coupling / (std::f64::consts::PI * beta * self.linewidth)
        }
    }
}

#[derive(Debug, Clone)]
pub struct BathSpec {
    /// `β` in units of `1/J`; `f64::INFINITY` is zero temperature.
    pub inverse_temperature: f64,
    pub spectral_density: Arc<dyn SpectralDensity>,
}

impl BathSpec {
    pub fn new(
        inverse_temperature: f64,
        spectral_density: Arc<dyn SpectralDensity>,
    ) -> Result<Self> {
        if !(inverse_temperature > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "inverse temperature must be positive, got {inverse_temperature}"
            )));
        }
        Ok(Self {
            inverse_temperature,
            spectral_density,
        })
    }

    pub fn flat(inverse_temperature: f64, magnitude: f64) -> Result<Self> {
        Self::new(inverse_temperature, Arc::new(Flat { magnitude }))
    }
}

/// `1 / (e^{βω} − 1)` for `ω > 0`.
pub fn bose_einstein(omega: f64, beta: f64) -> f64 {
    1.0 / (beta * omega).exp_m1()
}

/// Noise power for a transition that releases energy `ω` into the bath
/// (`ω > 0`, emission) or absorbs `|ω|` from it (`ω < 0`).
pub fn noise_power(omega: f64, bath: &BathSpec) -> f64 {
    let beta = bath.inverse_temperature;
    let sd = &bath.spectral_density;
    if omega.abs() < FREQUENCY_TOLERANCE {
        sd.zero_frequency_power(beta)
    } else if omega > 0.0 {
        (bose_einstein(omega, beta) + 1.0) * sd.density(omega)
    } else {
        bose_einstein(-omega, beta) * sd.density(-omega)
    }
}

/// One Bohr frequency and the eigenbasis index pairs `(a, b)` with
/// `E_b − E_a ≈ ω`.
#[derive(Debug, Clone)]
pub struct Channel {
    pub omega: f64,
    pub pairs: Vec<(usize, usize)>,
}

/// Eigen-operator split of a family of site operators.
#[derive(Debug, Clone)]
pub struct EigenOperatorSet {
    basis: DMatrix<f64>,
    /// Each operator rewritten in the eigenbasis.
    in_eigenbasis: Vec<DMatrix<f64>>,
    pub channels: Vec<Channel>,
}

/// Groups eigen-splittings into channels and expresses each operator in the
/// eigenbasis; `A_m(ω) = Σ_{E_b−E_a=ω} Π_a A_m Π_b`.
pub fn eigenoperator_decomposition(
    eigen: &EigenDecomposition,
    operators: &[DMatrix<f64>],
) -> EigenOperatorSet {
    let n = eigen.energies.len();
    let mut splittings: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .map(|(a, b)| (eigen.energies[b] - eigen.energies[a], a, b))
        .collect();
    splittings.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut channels: Vec<Channel> = Vec::new();
    for (omega, a, b) in splittings {
        match channels.last_mut() {
            Some(ch) if (omega - ch.omega).abs() < FREQUENCY_TOLERANCE => ch.pairs.push((a, b)),
            _ => channels.push(Channel {
                omega,
                pairs: vec![(a, b)],
            }),
        }
    }
    // Anchor each channel on its mean so ±ω channels stay exact mirrors.
    for ch in &mut channels {
        let mean = ch
            .pairs
            .iter()
            .map(|&(a, b)| eigen.energies[b] - eigen.energies[a])
            .sum::<f64>()
            / ch.pairs.len() as f64;
        ch.omega = if mean.abs() < FREQUENCY_TOLERANCE {
            0.0
        } else {
            mean
        };
    }

    let v = &eigen.vectors;
    EigenOperatorSet {
        basis: v.clone(),
        in_eigenbasis: operators.iter().map(|a| v.transpose() * a * v).collect(),
        channels,
    }
}

impl EigenOperatorSet {
    pub fn n_operators(&self) -> usize {
        self.in_eigenbasis.len()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.omega).collect()
    }

    /// `A_m(ω)` of channel `channel` in the site basis.
    pub fn component(&self, m: usize, channel: usize) -> DMatrix<f64> {
        let n = self.basis.nrows();
        let mut eig = DMatrix::zeros(n, n);
        for &(a, b) in &self.channels[channel].pairs {
            eig[(a, b)] = self.in_eigenbasis[m][(a, b)];
        }
        &self.basis * eig * self.basis.transpose()
    }

    /// `Λ_m = Σ_ω S(ω) A_m(ω)` in the site basis.
    pub fn noise_weighted(&self, m: usize, bath: &BathSpec) -> DMatrix<f64> {
        self.weighted_by(m, |omega| noise_power(omega, bath))
    }

    /// `Σ_ω power(ω) A_m(ω)` in the site basis.
    pub fn weighted_by(&self, m: usize, power: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.basis.nrows();
        let mut eig = DMatrix::zeros(n, n);
        for ch in &self.channels {
            let s = power(ch.omega);
            for &(a, b) in &ch.pairs {
                eig[(a, b)] = s * self.in_eigenbasis[m][(a, b)];
            }
        }
        &self.basis * eig * self.basis.transpose()
    }
}

fn embed(m: &DMatrix<f64>, dim: usize) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(dim, dim);
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            out[(r, c)] = C64::new(m[(r, c)], 0.0);
        }
    }
    out
}

/// Site dephasers `2|i⟩⟨i| − I` on the `N`-site block.
pub fn site_dephasers(n_sites: usize) -> Vec<DMatrix<f64>> {
    (0..n_sites)
        .map(|i| {
            let mut a = -DMatrix::<f64>::identity(n_sites, n_sites);
            a[(i, i)] = 1.0;
            a
        })
        .collect()
}

/// Adds `rate · D_Redfield` to `builder`.
fn add_redfield_dissipator(
    builder: &mut SuperOpBuilder,
    h: &Hamiltonian,
    power: &dyn Fn(f64) -> f64,
    rate: f64,
) {
    if rate == 0.0 {
        return;
    }
    let n = h.n_sites();
    let dim = builder.dim();
    let ops = site_dephasers(n);
    let set = eigenoperator_decomposition(&h.eigen(), &ops);
    let half = C64::new(0.5 * rate, 0.0);
    for (m, a) in ops.iter().enumerate() {
        let lambda = set.weighted_by(m, power);
        let a_full = embed(a, dim);
        let l_full = embed(&lambda, dim);
        let l_adj = l_full.adjoint();
        let (a_s, l_s, ld_s) = (sparse_op(&a_full), sparse_op(&l_full), sparse_op(&l_adj));
        builder
            .sandwich(&l_s, &a_s, half)
            .sandwich(&a_s, &ld_s, half)
            .left(&sparse_op(&(&a_full * &l_full)), -half)
            .right(&sparse_op(&(&l_adj * &a_full)), -half);
    }
}

/// `−i[H,·]` + pump/trap dissipators + `Γ·D_Redfield`.
///
/// `transport.dephasing_rate` is ignored in favour of `gamma`.
pub fn build_redfield_liouvillian(
    h: &Hamiltonian,
    gamma: f64,
    bath: &BathSpec,
    transport: &TransportSpec,
) -> Result<Liouvillian> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::NegativeRate {
            name: "dephasing_rate",
            value: gamma,
        });
    }
    let (mut builder, _) = coherent_and_transport(h, &transport.with_dephasing(0.0))?;
    add_redfield_dissipator(&mut builder, h, &|w| noise_power(w, bath), gamma);
    Ok(builder.build())
}

/// The bath part alone at unit coupling, on the generator's space for
/// `transport`.
pub fn redfield_dissipator(
    h: &Hamiltonian,
    bath: &BathSpec,
    transport: &TransportSpec,
) -> Liouvillian {
    let mut builder = SuperOpBuilder::new(transport.dim(h.n_sites()));
    add_redfield_dissipator(&mut builder, h, &|w| noise_power(w, bath), 1.0);
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_hamiltonian, ChainSpec, SiteEnergies};
    use crate::lindblad::build_liouvillian;
    use crate::solver::steady_state;

    fn flat(beta: f64) -> BathSpec {
        BathSpec::flat(beta, 1.0).unwrap()
    }

    #[test]
    fn zero_temperature_power() {
        let bath = flat(f64::INFINITY);
        assert_eq!(noise_power(1.0, &bath), 1.0);
        assert_eq!(noise_power(-1.0, &bath), 0.0);
    }

    #[test]
    fn unit_temperature_emission() {
        let s = noise_power(1.0, &flat(1.0));
        let expected = 1.0 / (std::f64::consts::E - 1.0) + 1.0;
        assert!((s - expected).abs() < 1e-14);
        assert!((s - 1.582).abs() < 1e-3);
    }

    #[test]
    fn detailed_balance_per_channel() {
        for beta in [0.1, 1.0, 10.0] {
            let bath = flat(beta);
            for omega in [1e-3, 0.3, 1.0, 2.5] {
                let ratio = noise_power(-omega, &bath) / noise_power(omega, &bath);
                assert!((ratio - (-beta * omega).exp()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn drude_lorentz_shape() {
        let (lambda, gamma) = (0.7, 2.0);
        assert!(
            (drude_lorentz(gamma, lambda, gamma) - lambda / std::f64::consts::PI).abs() < 1e-15
        );
        assert_eq!(drude_lorentz(0.0, lambda, gamma), 0.0);
        let tail: Vec<f64> = (0..20)
            .map(|k| drude_lorentz(gamma * 1.5f64.powi(k + 1), lambda, gamma))
            .collect();
        assert!(tail.windows(2).all(|w| w[1] < w[0]));
        assert!(tail.last().unwrap() < &1e-3);
        let sd = DrudeLorentz {
            coupling: lambda,
            linewidth: gamma,
        };
        let bath = BathSpec::new(1.0, Arc::new(sd)).unwrap();
        let near_zero = noise_power(1e-7, &bath);
        assert!((near_zero - sd.zero_frequency_power(1.0)).abs() < 1e-6);
    }

    #[test]
    fn single_site_has_one_zero_channel() {
        let h = build_hamiltonian(&SiteEnergies::new(vec![0.4]), 1.0);
        let ops = site_dephasers(1);
        let set = eigenoperator_decomposition(&h.eigen(), &ops);
        assert_eq!(set.frequencies(), vec![0.0]);
        assert!((set.component(0, 0) - &ops[0]).amax() < 1e-15);
    }

    #[test]
    fn dimer_frequencies() {
        let h = build_hamiltonian(&SiteEnergies::new(vec![0.0, 0.0]), 1.0);
        let set = eigenoperator_decomposition(&h.eigen(), &site_dephasers(2));
        let f = set.frequencies();
        assert_eq!(f.len(), 3);
        assert!((f[0] + 2.0).abs() < 1e-12 && f[1] == 0.0 && (f[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn components_complete_and_mirror() {
        let h = ChainSpec::new(6, 0.0, 0.0, 0).unwrap().hamiltonian();
        let ops = site_dephasers(6);
        let set = eigenoperator_decomposition(&h.eigen(), &ops);
        for m in 0..6 {
            let total = (0..set.channels.len())
                .map(|c| set.component(m, c))
                .fold(DMatrix::zeros(6, 6), |acc, x| acc + x);
            assert!((total - &ops[m]).amax() < 1e-10);
        }
        let f = set.frequencies();
        for (c, &omega) in f.iter().enumerate() {
            let mirror = f
                .iter()
                .position(|&x| (x + omega).abs() < 1e-12)
                .expect("mirror channel");
            for m in 0..6 {
                assert!(
                    (set.component(m, mirror) - set.component(m, c).transpose()).amax() < 1e-10
                );
            }
        }
    }

    #[test]
    fn constant_spectrum_recovers_lindblad() {
        let h = ChainSpec::new(5, 0.3, 0.8, 4).unwrap().hamiltonian();
        let t = TransportSpec::new(0.0);
        let (gamma, j0) = (0.7, 1.3);
        let (mut builder, _) = coherent_and_transport(&h, &t).unwrap();
        add_redfield_dissipator(&mut builder, &h, &|_| j0, gamma);
        let redfield = builder.build().to_dense();
        let lindblad = build_liouvillian(&h, &t.with_dephasing(gamma * j0))
            .unwrap()
            .to_dense();
        assert!((redfield - lindblad).camax() < 1e-12);
    }

    #[test]
    fn single_site_matches_lindblad() {
        let h = build_hamiltonian(&SiteEnergies::new(vec![0.2]), 1.0);
        let t = TransportSpec::new(0.8);
        let lindblad = build_liouvillian(&h, &t).unwrap();
        let redfield = build_redfield_liouvillian(&h, 0.8, &flat(1.0), &t).unwrap();
        assert!((lindblad.to_dense() - redfield.to_dense()).camax() < 1e-12);
    }

    #[test]
    fn zero_coupling_matches_lindblad() {
        let h = ChainSpec::new(4, 0.1, 0.5, 2).unwrap().hamiltonian();
        let t = TransportSpec::new(0.0);
        let a = build_redfield_liouvillian(&h, 0.0, &flat(1.0), &t).unwrap();
        let b = build_liouvillian(&h, &t).unwrap();
        assert!((a.to_dense() - b.to_dense()).camax() < 1e-14);
    }

    #[test]
    fn trace_and_hermiticity_preserved() {
        let h = ChainSpec::new(5, 0.2, 1.0, 7).unwrap().hamiltonian();
        let l = build_redfield_liouvillian(&h, 0.5, &flat(1.0), &TransportSpec::new(0.0)).unwrap();
        assert!(l.trace_defect() < 1e-10);
        let rho = steady_state(&l).unwrap();
        assert!(rho.hermiticity_error() < 1e-10);
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        assert!(rho.min_eigenvalue() > -1e-6);
    }

    #[test]
    fn weak_coupling_thermalises() {
        let beta = 1.0;
        let h = ChainSpec::new(6, 0.0, 0.5, 13).unwrap().hamiltonian();
        let l =
            build_redfield_liouvillian(&h, 1e-2, &flat(beta), &TransportSpec::closed(0.0)).unwrap();
        let rho = steady_state(&l).unwrap();
        let eig = h.eigen();
        let v = eig.vectors.map(|x| C64::new(x, 0.0));
        let in_eig = v.adjoint() * &rho.matrix * &v;
        let z: f64 = eig.energies.iter().map(|e| (-beta * e).exp()).sum();
        for (a, e) in eig.energies.iter().enumerate() {
            let gibbs = (-beta * e).exp() / z;
            assert!(
                (in_eig[(a, a)].re - gibbs).abs() < 0.05 * gibbs,
                "{a}: {} vs {gibbs}",
                in_eig[(a, a)].re
            );
        }
    }
}
