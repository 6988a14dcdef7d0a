//! Reduced steady-state solve for the pure-dephasing pump/trap chain.
//!
//! With dephasers `2|i⟩⟨i| − I_site` every site coherence decays at `4Γ` and
//! populations are untouched, so the site block obeys
//!
//! ```text
//! 0 = −i(Kρ − ρK†) + 4Γ·diag(ρ) + γ_inj·p·Σ_inj |i⟩⟨i|,
//! K = H − i(γ_trap/2)|N⟩⟨N| − 2iΓ,
//! ```
//!
//! with `p` the trap population. `K` is complex symmetric and its
//! eigenvectors do not depend on `Γ`, so one eigendecomposition per chain
//! turns each evaluation into an `(N+1)`-dimensional real linear solve for
//! the populations. Cost per `Γ` is `O(N⁴/4)` against `O(N⁶)` for the full
//! Liouvillian.

use nalgebra::{linalg::Schur, DMatrix, DVector};

use crate::chain::Hamiltonian;
use crate::lindblad::TransportSpec;
use crate::liouvillian::DensityMatrix;
use crate::{Error, Result, C64};

/// Minimum `|vᵀv|` of a unit eigenvector before the basis is treated as
/// defective.
const MIN_SYMMETRIC_NORM: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SpectralDephasing {
    n: usize,
    trap_rate: f64,
    injection_rate: f64,
    injected: Vec<usize>,
    eigenvalues: Vec<C64>,
    /// Columns normalised so that `VᵀV = I`.
    vectors: DMatrix<C64>,
    /// `V_ja·V_ka` for `j ≤ k`, row-major over pairs, split into parts.
    pair_re: Vec<f64>,
    pair_im: Vec<f64>,
    pairs: Vec<(usize, usize)>,
}

/// Site populations and trap population at one dephasing rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Populations {
    pub sites: DVector<f64>,
    pub trap: f64,
}

fn eigenvectors_from_schur(q: &DMatrix<C64>, t: &DMatrix<C64>) -> DMatrix<C64> {
    let n = t.nrows();
    let small = f64::EPSILON * t.camax().max(f64::MIN_POSITIVE);
    let mut y = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * y[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < small {
                denom = C64::new(small, 0.0);
            }
            y[(i, k)] = -s / denom;
        }
    }
    q * y
}

impl SpectralDephasing {
    /// Whether the reduced solve can represent chains under `spec`.
    pub fn supports(spec: &TransportSpec) -> bool {
        spec.trap_rate > 0.0 && spec.injection != crate::lindblad::InjectionMode::None
    }

    pub fn new(h: &Hamiltonian, spec: &TransportSpec) -> Result<Self> {
        let n = h.n_sites();
        spec.validate(n)?;
        if !Self::supports(spec) {
            return Err(Error::InvalidParameter(
                "reduced solve needs a positive trap rate and re-injection".into(),
            ));
        }
        let injected = spec.injected_sites(n)?;

        let mut k0: DMatrix<C64> = h.site_block().map(|v| C64::new(v, 0.0));
        k0[(n - 1, n - 1)] -= C64::new(0.0, 0.5 * spec.trap_rate);
        let schur = Schur::try_new(k0.clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::SolverFailure("Schur decomposition did not converge".into()))?;
        let (q, t) = schur.unpack();
        let eigenvalues: Vec<C64> = t.diagonal().iter().copied().collect();
        let mut vectors = eigenvectors_from_schur(&q, &t);

        for mut col in vectors.column_iter_mut() {
            let norm = col.norm();
            col /= C64::new(norm, 0.0);
            let sym: C64 = col.iter().map(|v| v * v).sum();
            if sym.norm() < MIN_SYMMETRIC_NORM {
                return Err(Error::SolverFailure(
                    "effective Hamiltonian is close to an exceptional point".into(),
                ));
            }
            col /= sym.sqrt();
        }
        let scale = k0.camax().max(1.0);
        let residual = (&k0 * &vectors
            - &vectors * DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone())))
        .camax();
        if !(residual < 1e-8 * scale * vectors.camax().max(1.0)) {
            return Err(Error::SolverFailure(format!(
                "inaccurate eigenvectors (residual {residual:.2e})"
            )));
        }

        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|k| (0..=k).map(move |j| (j, k))).collect();
        let mut pair_re = Vec::with_capacity(pairs.len() * n);
        let mut pair_im = Vec::with_capacity(pairs.len() * n);
        for &(j, k) in &pairs {
            for a in 0..n {
                let z = vectors[(j, a)] * vectors[(k, a)];
                pair_re.push(z.re);
                pair_im.push(z.im);
            }
        }

        Ok(Self {
            n,
            trap_rate: spec.trap_rate,
            injection_rate: spec.injection_rate(n),
            injected,
            eigenvalues,
            vectors,
            pair_re,
            pair_im,
            pairs,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    /// `W_ab = 1 / (4Γ + i(μ_a − μ̄_b))`, Hermitian.
    fn kernel(&self, gamma: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.n;
        let mut w_re = vec![0.0; n * n];
        let mut w_im = vec![0.0; n * n];
        let scale = self
            .eigenvalues
            .iter()
            .map(|m| m.norm())
            .fold(1.0, f64::max);
        for a in 0..n {
            for b in 0..n {
                let denom = C64::new(4.0 * gamma, 0.0)
                    + C64::new(0.0, 1.0) * (self.eigenvalues[a] - self.eigenvalues[b].conj());
                if denom.re <= 1e-13 * scale {
                    return Err(Error::NonUniqueSteadyState { nullity: 2 });
                }
                let w = denom.inv();
                w_re[a * n + b] = w.re;
                w_im[a * n + b] = w.im;
            }
        }
        Ok((w_re, w_im))
    }

    /// Response matrix `M_jk = ∫₀^∞ |⟨j|e^{−iKt}|k⟩|² dt`.
    fn response(&self, w_re: &[f64], w_im: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for (p, &(j, k)) in self.pairs.iter().enumerate() {
            let x = &self.pair_re[p * n..(p + 1) * n];
            let y = &self.pair_im[p * n..(p + 1) * n];
            let mut total = 0.0;
            for a in 0..n {
                let (xa, ya) = (x[a], y[a]);
                total += (xa * xa + ya * ya) * w_re[a * n + a];
                let wr = &w_re[a * n + a + 1..(a + 1) * n];
                let wi = &w_im[a * n + a + 1..(a + 1) * n];
                let (xb, yb) = (&x[a + 1..], &y[a + 1..]);
                let mut s1 = 0.0;
                let mut s2 = 0.0;
                for b in 0..wr.len() {
                    s1 += wr[b] * xb[b] + wi[b] * yb[b];
                    s2 += wr[b] * yb[b] - wi[b] * xb[b];
                }
                total += 2.0 * (xa * s1 + ya * s2);
            }
            m[(j, k)] = total;
            m[(k, j)] = total;
        }
        m
    }

    pub fn populations(&self, gamma: f64) -> Result<Populations> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::NegativeRate {
                name: "dephasing_rate",
                value: gamma,
            });
        }
        let n = self.n;
        let (w_re, w_im) = self.kernel(gamma)?;
        let m = self.response(&w_re, &w_im);

        let mut system = DMatrix::<f64>::zeros(n + 1, n + 1);
        for j in 0..n {
            for k in 0..n {
                system[(j, k)] = -4.0 * gamma * m[(j, k)];
            }
            system[(j, j)] += 1.0;
            system[(j, n)] =
                -self.injection_rate * self.injected.iter().map(|&i| m[(j, i)]).sum::<f64>();
        }
        system.row_mut(n).fill(1.0);
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let x = system
            .lu()
            .solve(&rhs)
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::SolverFailure("singular population system".into()))?;
        Ok(Populations {
            sites: x.rows(0, n).into_owned(),
            trap: x[n],
        })
    }

    pub fn current(&self, gamma: f64) -> Result<f64> {
        Ok(self.trap_rate * self.populations(gamma)?.sites[self.n - 1])
    }

    /// Full `(N+1)×(N+1)` steady state.
    pub fn steady_state(&self, gamma: f64) -> Result<DensityMatrix> {
        let n = self.n;
        let pops = self.populations(gamma)?;
        let (w_re, w_im) = self.kernel(gamma)?;
        let mut source = DVector::<f64>::from_fn(n, |k, _| 4.0 * gamma * pops.sites[k]);
        for &i in &self.injected {
            source[i] += self.injection_rate * pops.trap;
        }
        let v = &self.vectors;
        let s = DMatrix::from_diagonal(&source.map(|x| C64::new(x, 0.0)));
        let mut hat = v.transpose() * s * v.conjugate();
        for a in 0..n {
            for b in 0..n {
                hat[(a, b)] *= C64::new(w_re[a * n + b], w_im[a * n + b]);
            }
        }
        let block = v * hat * v.adjoint();
        let mut full = DMatrix::zeros(n + 1, n + 1);
        full.view_mut((0, 0), (n, n)).copy_from(&block);
        full[(n, n)] = C64::new(pops.trap, 0.0);
        DensityMatrix::new(full).map(DensityMatrix::normalized)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainSpec;
    use crate::lindblad::{build_liouvillian, InjectionMode};
    use crate::solver::steady_state;

    #[test]
    fn agrees_with_full_liouvillian() {
        for (seed, n, eta, sigma, gamma, mode) in [
            (1, 5, 0.0, 0.0, 0.05, InjectionMode::AllSites),
            (2, 6, 0.1, 1.0, 0.7, InjectionMode::AllSites),
            (3, 7, 1.0, 0.3, 4.0, InjectionMode::SingleSite(2)),
            (4, 4, 0.0, 3.0, 1e-3, InjectionMode::AllSites),
            (5, 1, 0.0, 0.0, 1.0, InjectionMode::AllSites),
        ] {
            let h = ChainSpec::new(n, eta, sigma, seed).unwrap().hamiltonian();
            let spec = TransportSpec::new(gamma).with_injection(mode);
            let dense = steady_state(&build_liouvillian(&h, &spec).unwrap()).unwrap();
            let fast = SpectralDephasing::new(&h, &spec).unwrap();
            let rho = fast.steady_state(gamma).unwrap();
            assert!(
                rho.max_abs_diff(&dense) < 1e-9,
                "seed {seed}: {}",
                rho.max_abs_diff(&dense)
            );
            let i_dense = 3.0 * dense.population(n - 1);
            assert!((fast.current(gamma).unwrap() - i_dense).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenvectors_are_complex_orthonormal() {
        let h = ChainSpec::new(12, 0.1, 0.5, 8).unwrap().hamiltonian();
        let fast = SpectralDephasing::new(&h, &TransportSpec::new(1.0)).unwrap();
        let gram = fast.vectors.transpose() * &fast.vectors;
        assert!((gram - DMatrix::identity(12, 12)).camax() < 1e-9);
    }

    #[test]
    fn closed_chain_rejected() {
        let h = ChainSpec::ordered(3).unwrap().hamiltonian();
        assert!(SpectralDephasing::new(&h, &TransportSpec::closed(1.0)).is_err());
    }
}
