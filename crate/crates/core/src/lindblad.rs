//! Pure-dephasing Lindblad generator with a pump/trap transport cycle.
//!
//! Population leaves the last site into the trap at `γ_trap` and is fed back
//! from the trap onto the chain at a matched total rate. Each site carries a
//! dephaser `2|i⟩⟨i| − I_site` at rate `Γ`.

use nalgebra::DMatrix;

use crate::chain::Hamiltonian;
use crate::liouvillian::{sparse_op, DensityMatrix, Liouvillian, SuperOpBuilder};
use crate::{Error, Result, C64};

pub const DEFAULT_TRAP_RATE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionMode {
    /// Re-inject equally onto every site at `γ_trap / N` each.
    #[default]
    AllSites,
    /// Re-inject onto one site (1-based index) at `γ_trap`.
    SingleSite(usize),
    /// No re-injection.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportSpec {
    pub dephasing_rate: f64,
    pub trap_rate: f64,
    pub injection: InjectionMode,
}

impl TransportSpec {
    pub fn new(dephasing_rate: f64) -> Self {
        Self {
            dephasing_rate,
            trap_rate: DEFAULT_TRAP_RATE,
            injection: InjectionMode::AllSites,
        }
    }

    /// A chain with neither extraction nor injection; its generator acts on
    /// the site block only.
    pub fn closed(dephasing_rate: f64) -> Self {
        Self {
            dephasing_rate,
            trap_rate: 0.0,
            injection: InjectionMode::None,
        }
    }

    pub fn with_injection(mut self, injection: InjectionMode) -> Self {
        self.injection = injection;
        self
    }

    pub fn with_trap_rate(mut self, trap_rate: f64) -> Self {
        self.trap_rate = trap_rate;
        self
    }

    pub fn with_dephasing(mut self, dephasing_rate: f64) -> Self {
        self.dephasing_rate = dephasing_rate;
        self
    }

    pub fn is_closed(&self) -> bool {
        self.trap_rate == 0.0 && self.injection == InjectionMode::None
    }

    /// Hilbert-space dimension of the generator for a chain of `n_sites`.
    pub fn dim(&self, n_sites: usize) -> usize {
        if self.is_closed() {
            n_sites
        } else {
            n_sites + 1
        }
    }

    /// Per-injector rate.
    pub fn injection_rate(&self, n_sites: usize) -> f64 {
        match self.injection {
            InjectionMode::AllSites => self.trap_rate / n_sites as f64,
            InjectionMode::SingleSite(_) => self.trap_rate,
            InjectionMode::None => 0.0,
        }
    }

    /// 0-based indices of the sites receiving re-injected population.
    pub fn injected_sites(&self, n_sites: usize) -> Result<Vec<usize>> {
        match self.injection {
            InjectionMode::AllSites => Ok((0..n_sites).collect()),
            InjectionMode::SingleSite(i) if (1..=n_sites).contains(&i) => Ok(vec![i - 1]),
            InjectionMode::SingleSite(index) => Err(Error::IndexOutOfRange { index, n_sites }),
            InjectionMode::None => Ok(Vec::new()),
        }
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        for (name, value) in [
            ("dephasing_rate", self.dephasing_rate),
            ("trap_rate", self.trap_rate),
        ] {
            if value < 0.0 || !value.is_finite() {
                return Err(Error::NegativeRate { name, value });
            }
        }
        self.injected_sites(n_sites).map(|_| ())
    }
}

#[derive(Debug, Clone)]
pub struct LindbladOperatorSet {
    pub dim: usize,
    pub dephasers: Vec<DMatrix<C64>>,
    /// `|trap⟩⟨N|`, absent for closed chains.
    pub extractor: Option<DMatrix<C64>>,
    /// `(site, |site⟩⟨trap|)`
    pub injectors: Vec<(usize, DMatrix<C64>)>,
}

fn unit(dim: usize, r: usize, c: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    m[(r, c)] = C64::new(1.0, 0.0);
    m
}

/// `2|i⟩⟨i| − I_site` for every site, embedded in a `dim`-level space.
pub fn dephasers(n_sites: usize, dim: usize) -> Vec<DMatrix<C64>> {
    (0..n_sites)
        .map(|i| {
            let mut a = DMatrix::zeros(dim, dim);
            for j in 0..n_sites {
                a[(j, j)] = C64::new(if i == j { 1.0 } else { -1.0 }, 0.0);
            }
            a
        })
        .collect()
}

/// Operators for an open chain over `{|1⟩…|N⟩, |trap⟩}`.
pub fn build_operator_set(n_sites: usize, injection: InjectionMode) -> Result<LindbladOperatorSet> {
    if n_sites == 0 {
        return Err(Error::InvalidParameter(
            "chain needs at least one site".into(),
        ));
    }
    let dim = n_sites + 1;
    let trap = n_sites;
    let sites = TransportSpec::new(0.0)
        .with_injection(injection)
        .injected_sites(n_sites)?;
    Ok(LindbladOperatorSet {
        dim,
        dephasers: dephasers(n_sites, dim),
        extractor: Some(unit(dim, trap, n_sites - 1)),
        injectors: sites.into_iter().map(|i| (i, unit(dim, i, trap))).collect(),
    })
}

fn closed_operator_set(n_sites: usize) -> LindbladOperatorSet {
    LindbladOperatorSet {
        dim: n_sites,
        dephasers: dephasers(n_sites, n_sites),
        extractor: None,
        injectors: Vec::new(),
    }
}

/// Restriction of the Hamiltonian to the generator's space.
pub(crate) fn hamiltonian_in(h: &Hamiltonian, dim: usize) -> DMatrix<C64> {
    h.matrix.view((0, 0), (dim, dim)).into_owned()
}

/// Adds `−i[H,·]` and the pump/trap dissipators, shared by every model.
pub(crate) fn coherent_and_transport(
    h: &Hamiltonian,
    spec: &TransportSpec,
) -> Result<(SuperOpBuilder, LindbladOperatorSet)> {
    let n = h.n_sites();
    spec.validate(n)?;
    let ops = if spec.is_closed() {
        closed_operator_set(n)
    } else {
        build_operator_set(n, spec.injection)?
    };
    let mut builder = SuperOpBuilder::new(ops.dim);
    builder.commutator(&sparse_op(&hamiltonian_in(h, ops.dim)));
    if let Some(ext) = &ops.extractor {
        builder.dissipator(&sparse_op(ext), spec.trap_rate);
    }
    let rate = spec.injection_rate(n);
    for (_, inj) in &ops.injectors {
        builder.dissipator(&sparse_op(inj), rate);
    }
    Ok((builder, ops))
}

/// `L(ρ) = −i[H,ρ] + Γ Σ D[A_deph,i] + γ_inj Σ D[A_inj,i] + γ_trap D[A_ext]`.
pub fn build_liouvillian(h: &Hamiltonian, spec: &TransportSpec) -> Result<Liouvillian> {
    let (mut builder, ops) = coherent_and_transport(h, spec)?;
    for a in &ops.dephasers {
        builder.dissipator(&sparse_op(a), spec.dephasing_rate);
    }
    Ok(builder.build())
}

/// `I_ss = γ_trap · ρ_NN`.
pub fn steady_current(rho: &DensityMatrix, n_sites: usize, spec: &TransportSpec) -> f64 {
    spec.trap_rate * rho.population(n_sites - 1)
}

/// Total rate of population leaving the trap.
pub fn injection_flux(rho: &DensityMatrix, n_sites: usize, spec: &TransportSpec) -> f64 {
    if spec.is_closed() {
        return 0.0;
    }
    let injectors = spec.injected_sites(n_sites).map(|s| s.len()).unwrap_or(0);
    spec.injection_rate(n_sites) * injectors as f64 * rho.population(n_sites)
}

/// Population variance (divisor `N`) of the site populations.
pub fn variance_of(populations: &[f64]) -> f64 {
    let n = populations.len() as f64;
    let mean = populations.iter().sum::<f64>() / n;
    populations.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n
}

/// Variance of the `n_sites` site populations; the trap is excluded.
pub fn population_variance(rho: &DensityMatrix, n_sites: usize) -> f64 {
    variance_of(&rho.populations()[..n_sites])
}

/// `Σ_n n² p_n` with `n` measured from the central site of an odd chain.
pub fn wavepacket_variance(rho: &DensityMatrix, n_sites: usize) -> Result<f64> {
    if n_sites.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "wavepacket variance needs an odd chain, got N = {n_sites}"
        )));
    }
    let half = (n_sites as f64 - 1.0) / 2.0;
    Ok((0..n_sites)
        .map(|i| (i as f64 - half).powi(2) * rho.population(i))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_hamiltonian, ChainSpec, SiteEnergies};
    use crate::solver::steady_state;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn dimer_dephaser() {
        let ops = build_operator_set(2, InjectionMode::AllSites).unwrap();
        let expected = DMatrix::from_diagonal(&nalgebra::dvector![c(1.0), c(-1.0), c(0.0)]);
        assert_eq!(ops.dephasers[0], expected);
    }

    #[test]
    fn operator_set_shapes() {
        let ops = build_operator_set(10, InjectionMode::AllSites).unwrap();
        assert_eq!(ops.injectors.len(), 10);
        for (i, inj) in &ops.injectors {
            assert_eq!(inj[(*i, 10)], c(1.0));
            assert_eq!(inj.iter().filter(|v| v.norm() > 0.0).count(), 1);
        }
        let ext = ops.extractor.unwrap();
        assert_eq!(ext[(10, 9)], c(1.0));
        assert_eq!(ext.iter().filter(|v| v.norm() > 0.0).count(), 1);
        for a in &ops.dephasers {
            assert_eq!(a, &a.adjoint());
            let sq = a * a;
            let block = sq.view((0, 0), (10, 10)).into_owned();
            assert_eq!(block, DMatrix::identity(10, 10));
        }

        let single = build_operator_set(20, InjectionMode::SingleSite(2)).unwrap();
        assert_eq!(single.injectors.len(), 1);
        assert_eq!(single.injectors[0].0, 1);
        assert_eq!(single.injectors[0].1[(1, 20)], c(1.0));
        assert!(matches!(
            build_operator_set(5, InjectionMode::SingleSite(6)),
            Err(Error::IndexOutOfRange {
                index: 6,
                n_sites: 5
            })
        ));
        assert!(build_operator_set(5, InjectionMode::SingleSite(0)).is_err());
    }

    #[test]
    fn rates_are_matched() {
        let spec = TransportSpec::new(1.0);
        assert_eq!(spec.injection_rate(10) * 10.0, spec.trap_rate);
        let single = spec.with_injection(InjectionMode::SingleSite(3));
        assert_eq!(single.injection_rate(10), spec.trap_rate);
    }

    #[test]
    fn negative_rates_rejected() {
        let h = ChainSpec::ordered(3).unwrap().hamiltonian();
        let err = build_liouvillian(&h, &TransportSpec::new(-1.0)).unwrap_err();
        assert!(matches!(
            err,
            Error::NegativeRate {
                name: "dephasing_rate",
                ..
            }
        ));
        let err = build_liouvillian(&h, &TransportSpec::new(1.0).with_trap_rate(-0.1)).unwrap_err();
        assert!(matches!(
            err,
            Error::NegativeRate {
                name: "trap_rate",
                ..
            }
        ));
    }

    #[test]
    fn closed_coherent_limit_has_imaginary_spectrum() {
        let h = ChainSpec::new(4, 0.2, 0.5, 3).unwrap().hamiltonian();
        let l = build_liouvillian(&h, &TransportSpec::closed(0.0)).unwrap();
        assert_eq!(l.dim(), 4);
        let schur = nalgebra::linalg::Schur::new(l.to_dense());
        for ev in schur.unpack().1.diagonal().iter() {
            assert!(ev.re.abs() < 1e-10, "{ev}");
        }
    }

    #[test]
    fn trace_preserved_and_spectrum_contractive() {
        for (seed, mode) in [
            (1, InjectionMode::AllSites),
            (2, InjectionMode::SingleSite(2)),
        ] {
            let h = ChainSpec::new(4, 0.3, 1.0, seed).unwrap().hamiltonian();
            let l = build_liouvillian(&h, &TransportSpec::new(0.4).with_injection(mode)).unwrap();
            assert!(l.trace_defect() < 1e-10);
            let t = nalgebra::linalg::Schur::new(l.to_dense()).unpack().1;
            for ev in t.diagonal().iter() {
                assert!(ev.re < 1e-8, "{ev}");
            }
        }
    }

    #[test]
    fn single_site_two_level_balance() {
        let h = build_hamiltonian(&SiteEnergies::new(vec![0.0]), 1.0);
        let spec = TransportSpec::new(1.0);
        assert_eq!(spec.injection_rate(1), 3.0);
        let rho = steady_state(&build_liouvillian(&h, &spec).unwrap()).unwrap();
        assert!((rho.population(0) - 0.5).abs() < 1e-10);
        assert!((rho.population(1) - 0.5).abs() < 1e-10);
        assert!((steady_current(&rho, 1, &spec) - 1.5).abs() < 1e-10);
    }

    #[test]
    fn steady_state_flux_balance() {
        let h = ChainSpec::new(6, 0.1, 0.8, 21).unwrap().hamiltonian();
        for mode in [InjectionMode::AllSites, InjectionMode::SingleSite(2)] {
            let spec = TransportSpec::new(0.3).with_injection(mode);
            let rho = steady_state(&build_liouvillian(&h, &spec).unwrap()).unwrap();
            let out = steady_current(&rho, 6, &spec);
            assert!((out - injection_flux(&rho, 6, &spec)).abs() < 1e-8);
            assert!((0.0..=spec.trap_rate).contains(&out));
        }
    }

    #[test]
    fn current_is_rate_times_population() {
        let mut m = DMatrix::zeros(3, 3);
        m[(1, 1)] = c(0.1);
        m[(2, 2)] = c(0.9);
        let rho = DensityMatrix::new(m).unwrap();
        assert!((steady_current(&rho, 2, &TransportSpec::new(0.0)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn variance_helpers() {
        assert_eq!(variance_of(&[0.25; 4]), 0.0);
        let n: f64 = 7.0;
        let mut pops = vec![0.0; 7];
        pops[3] = 1.0;
        let expected = (1.0 / n) * (1.0 - 1.0 / n).powi(2) + (1.0 - 1.0 / n) * (1.0 / n).powi(2);
        assert!((variance_of(&pops) - expected).abs() < 1e-15);

        let centre = DensityMatrix::site_projector(20, 41);
        assert_eq!(wavepacket_variance(&centre, 41).unwrap(), 0.0);
        let uniform = DensityMatrix::maximally_mixed_sites(41, 41);
        assert!((wavepacket_variance(&uniform, 41).unwrap() - 140.0).abs() < 1e-12);
        assert!(wavepacket_variance(&uniform, 40).is_err());
    }

    #[test]
    fn closed_dephasing_chain_relaxes_to_maximally_mixed() {
        let h = ChainSpec::new(5, 0.0, 0.7, 2).unwrap().hamiltonian();
        let rho =
            steady_state(&build_liouvillian(&h, &TransportSpec::closed(0.5)).unwrap()).unwrap();
        let mixed = DensityMatrix::maximally_mixed_sites(5, 5);
        assert!(rho.max_abs_diff(&mixed) < 1e-10);
    }

    #[test]
    fn non_unique_steady_state_detected() {
        // Closed coherent chain: every eigenprojector is stationary.
        let h = ChainSpec::ordered(3).unwrap().hamiltonian();
        let err =
            steady_state(&build_liouvillian(&h, &TransportSpec::closed(0.0)).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NonUniqueSteadyState { nullity } if nullity >= 3));
    }
}
