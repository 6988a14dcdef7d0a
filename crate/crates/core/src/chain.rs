//! Single-excitation tight-binding chains with a linear energy gradient and
//! Gaussian on-site disorder.
//!
//! Energies are in units of the nearest-neighbour coupling `J`. Sites are
//! indexed `0..N` internally; index `N` of every full-space matrix is the
//! trap (shelf) level, which has zero energy and no coherent coupling.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::{seed, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    pub n_sites: usize,
    /// Dimensionless gradient `(ε_first − ε_last) / (N·J)`.
    pub gradient: f64,
    /// Standard deviation of the on-site disorder, in units of `J`.
    pub disorder_strength: f64,
    pub coupling: f64,
    pub seed: u64,
}

impl ChainSpec {
    pub fn new(n_sites: usize, gradient: f64, disorder_strength: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            n_sites,
            gradient,
            disorder_strength,
            coupling: 1.0,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// An ordered, unbiased chain.
    pub fn ordered(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, 0.0, 0.0, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::InvalidParameter(
                "chain needs at least one site".into(),
            ));
        }
        if !(self.gradient >= 0.0 && self.gradient.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gradient must be finite and non-negative, got {}",
                self.gradient
            )));
        }
        if !(self.disorder_strength >= 0.0 && self.disorder_strength.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "disorder strength must be finite and non-negative, got {}",
                self.disorder_strength
            )));
        }
        if !(self.coupling > 0.0 && self.coupling.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coupling must be positive, got {}",
                self.coupling
            )));
        }
        Ok(())
    }

    /// Draws the site energies from this spec's own seed.
    pub fn sample_energies(&self) -> SiteEnergies {
        sample_site_energies(self, &mut seed::stream(self.seed))
    }

    pub fn hamiltonian(&self) -> Hamiltonian {
        build_hamiltonian(&self.sample_energies(), self.coupling)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteEnergies {
    pub values: Vec<f64>,
}

impl SiteEnergies {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Gradient baseline: falls linearly from `η·N·J` on the first site to zero
/// on the last, so the end-to-end drop is exactly `η·N·J`.
pub fn gradient_baseline(n_sites: usize, gradient: f64, coupling: f64) -> Vec<f64> {
    if n_sites < 2 {
        return vec![0.0; n_sites];
    }
    let n = n_sites as f64;
    let drop = gradient * coupling * n;
    (0..n_sites)
        .map(|i| drop * (n_sites - 1 - i) as f64 / (n - 1.0))
        .collect()
}

/// Baseline energies plus i.i.d. `Normal(0, σ)` perturbations drawn from `rng`.
///
/// With `σ = 0` nothing is drawn and the baseline is returned unchanged.
pub fn sample_site_energies<R: Rng + ?Sized>(spec: &ChainSpec, rng: &mut R) -> SiteEnergies {
    let mut values = gradient_baseline(spec.n_sites, spec.gradient, spec.coupling);
    if spec.disorder_strength > 0.0 {
        let normal = Normal::new(0.0, spec.disorder_strength * spec.coupling)
            .expect("validated disorder strength");
        for v in &mut values {
            *v += normal.sample(rng);
        }
    }
    SiteEnergies { values }
}

/// Chain Hamiltonian over `{|1⟩, …, |N⟩, |trap⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub matrix: DMatrix<C64>,
    site_energies: Vec<f64>,
    coupling: f64,
}

pub fn build_hamiltonian(energies: &SiteEnergies, coupling: f64) -> Hamiltonian {
    let n = energies.len();
    let mut matrix = DMatrix::<C64>::zeros(n + 1, n + 1);
    for (i, &e) in energies.values.iter().enumerate() {
        matrix[(i, i)] = C64::new(e, 0.0);
        if i + 1 < n {
            matrix[(i, i + 1)] = C64::new(coupling, 0.0);
            matrix[(i + 1, i)] = C64::new(coupling, 0.0);
        }
    }
    Hamiltonian {
        matrix,
        site_energies: energies.values.clone(),
        coupling,
    }
}

impl Hamiltonian {
    pub fn n_sites(&self) -> usize {
        self.site_energies.len()
    }

    /// Dimension of the full space including the trap.
    pub fn dim(&self) -> usize {
        self.n_sites() + 1
    }

    pub fn site_energies(&self) -> &[f64] {
        &self.site_energies
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Real symmetric `N×N` site block.
    pub fn site_block(&self) -> DMatrix<f64> {
        let n = self.n_sites();
        DMatrix::from_fn(n, n, |i, j| self.matrix[(i, j)].re)
    }

    pub fn eigen(&self) -> EigenDecomposition {
        EigenDecomposition::of_site_block(&self.site_block())
    }
}

/// Eigenstructure of the site block, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub energies: DVector<f64>,
    /// Column `α` holds `⟨i|E_α⟩` over sites.
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn of_site_block(block: &DMatrix<f64>) -> Self {
        let n = block.nrows();
        let eig = SymmetricEigen::new(block.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut vectors = DMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(k));
        }
        Self { energies, vectors }
    }

    /// Per-eigenstate participation ratio `1 / Σ_i |⟨i|E_α⟩|⁴`.
    pub fn participation_ratios(&self) -> Vec<f64> {
        self.vectors
            .column_iter()
            .map(|v| 1.0 / v.iter().map(|x| x.powi(4)).sum::<f64>())
            .collect()
    }
}

/// Eigenstate-averaged participation ratio of the site block.
///
/// `1` for a fully localised spectrum, `2(N+1)/3` for the ordered chain.
pub fn average_ipr(hamiltonian: &Hamiltonian) -> f64 {
    let ratios = hamiltonian.eigen().participation_ratios();
    ratios.iter().sum::<f64>() / ratios.len() as f64
}
