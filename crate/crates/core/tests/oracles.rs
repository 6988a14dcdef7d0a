use enaqt_core::chain::{average_ipr, ChainSpec};
use enaqt_core::lindblad::{
    build_liouvillian, population_variance, wavepacket_variance, TransportSpec,
};
use enaqt_core::liouvillian::DensityMatrix;
use enaqt_core::model::{PureDephasing, TransportModel};
use enaqt_core::optimizer::{
    find_optimal_dephasing, is_single_peaked, LogGolden, SearchOptions, Status,
};
use enaqt_core::propagate::propagate;
use enaqt_core::solver::steady_state;
use enaqt_core::sweep::flat_chain;
use enaqt_core::C64;

fn sine_ipr(n: usize) -> f64 {
    let norm = 2.0 / (n as f64 + 1.0);
    let total: f64 = (1..=n)
        .map(|k| {
            let s: f64 = (1..=n)
                .map(|j| {
                    let psi2 = norm
                        * (std::f64::consts::PI * (k * j) as f64 / (n as f64 + 1.0))
                            .sin()
                            .powi(2);
                    psi2 * psi2
                })
                .sum();
            1.0 / s
        })
        .sum();
    total / n as f64
}

#[test]
fn ordered_ipr_matches_sine_modes() {
    for n in [1, 2, 5, 10, 17, 40] {
        let ipr = average_ipr(&ChainSpec::ordered(n).unwrap().hamiltonian());
        assert!((ipr - sine_ipr(n)).abs() < 1e-10, "N={n}");
    }
}

fn rk4(l: &enaqt_core::liouvillian::Liouvillian, rho0: &DensityMatrix, t: f64, h: f64) -> Vec<C64> {
    let mut y: Vec<C64> = rho0.matrix.as_slice().to_vec();
    let len = y.len();
    let mut k = vec![vec![C64::new(0.0, 0.0); len]; 4];
    let mut tmp = vec![C64::new(0.0, 0.0); len];
    for _ in 0..(t / h).round() as usize {
        l.apply_vec(&y, &mut k[0]);
        for (s, c) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
            for i in 0..len {
                tmp[i] = y[i] + k[s - 1][i] * (c * h);
            }
            l.apply_vec(&tmp, &mut k[s]);
        }
        for i in 0..len {
            y[i] += (k[0][i] + k[1][i] * 2.0 + k[2][i] * 2.0 + k[3][i]) * (h / 6.0);
        }
    }
    y
}

#[test]
fn steady_state_matches_fixed_step_rk4() {
    let h = ChainSpec::ordered(10).unwrap().hamiltonian();
    let l = build_liouvillian(&h, &TransportSpec::new(0.1)).unwrap();
    let ss = steady_state(&l).unwrap();
    let late = rk4(
        &l,
        &DensityMatrix::maximally_mixed_sites(10, 11),
        1000.0,
        0.05,
    );
    let diff = late
        .iter()
        .zip(ss.matrix.as_slice())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-6, "{diff}");
}

fn bessel_j(n: i32, x: f64) -> f64 {
    let m = n.unsigned_abs() as i32;
    let mut term = (x / 2.0).powi(m) / (1..=m).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..60 {
        term *= -(x / 2.0).powi(2) / (k as f64 * (k + m) as f64);
        sum += term;
    }
    if n < 0 && m % 2 == 1 {
        -sum
    } else {
        sum
    }
}

#[test]
fn closed_chain_follows_quantum_walk() {
    let n = 41;
    let l = build_liouvillian(&flat_chain(n), &TransportSpec::closed(0.0)).unwrap();
    let times = [0.5, 1.0, 1.5, 2.0];
    let states = propagate(&l, &DensityMatrix::site_projector(20, n), &times).unwrap();
    for (t, rho) in times.iter().zip(&states) {
        for site in 0..n {
            let expected = bessel_j(site as i32 - 20, 2.0 * t).powi(2);
            assert!(
                (rho.population(site) - expected).abs() < 1e-7,
                "t={t} site={site}"
            );
        }
        let v = wavepacket_variance(rho, n).unwrap();
        assert!((v - 2.0 * t * t).abs() < 0.02 * 2.0 * t * t);
    }
}

#[test]
fn closed_dephasing_chain_spreads_to_uniform() {
    let n = 11;
    let l = build_liouvillian(&flat_chain(n), &TransportSpec::closed(1.0)).unwrap();
    let out = propagate(&l, &DensityMatrix::site_projector(5, n), &[2000.0]).unwrap();
    assert!(out[0].max_abs_diff(&DensityMatrix::maximally_mixed_sites(n, n)) < 1e-8);
    assert!((wavepacket_variance(&out[0], n).unwrap() - 10.0).abs() < 1e-6);
}

#[test]
#[allow(clippy::approx_constant)]
fn ordered_ten_site_rate_follows_fitted_law() {
    let h = ChainSpec::ordered(10).unwrap().hamiltonian();
    let response = PureDephasing::fast()
        .prepare(&h, &TransportSpec::new(0.0))
        .unwrap();
    let r = find_optimal_dephasing(response.as_ref(), &LogGolden, &SearchOptions::default());
    assert_eq!(r.status, Status::Interior);
    let ipr = average_ipr(&h);
    let law = 1.59f64.exp() * ipr.powf(-3.14 + 0.07 * ipr);
    assert!(
        r.gamma_opt / law < 2.0 && law / r.gamma_opt < 2.0,
        "{} vs {law}",
        r.gamma_opt
    );
}

#[test]
fn disordered_chains_peak_then_enter_zeno_regime() {
    let model = PureDephasing::fast();
    let opts = SearchOptions {
        record_curve: true,
        ..Default::default()
    };
    for seed in 0..8 {
        let h = ChainSpec::new(12, 0.1, 0.8, seed).unwrap().hamiltonian();
        let response = model.prepare(&h, &TransportSpec::new(0.0)).unwrap();
        let r = find_optimal_dephasing(response.as_ref(), &LogGolden, &opts);
        let curve: Vec<f64> = r
            .curve_samples
            .as_ref()
            .unwrap()
            .iter()
            .map(|p| p.1)
            .collect();
        assert!(is_single_peaked(&curve), "seed {seed}");
        assert!(curve.iter().all(|&c| c <= r.current_max));
        assert!(response.current(1e3).unwrap() < r.current_max);
        let at_opt = response.population_variance(r.gamma_opt).unwrap();
        let below = response.population_variance(r.gamma_opt / 100.0).unwrap();
        assert!(at_opt <= below, "seed {seed}: {at_opt} > {below}");
        let rho = response.steady_state(r.gamma_opt).unwrap();
        assert!((population_variance(&rho, 12) - at_opt).abs() < 1e-12);
    }
}

#[test]
fn optimisation_is_repeatable() {
    let h = ChainSpec::new(8, 1.0, 0.5, 3).unwrap().hamiltonian();
    let response = PureDephasing::fast()
        .prepare(&h, &TransportSpec::new(0.0))
        .unwrap();
    let a = find_optimal_dephasing(response.as_ref(), &LogGolden, &SearchOptions::default());
    let b = find_optimal_dephasing(response.as_ref(), &LogGolden, &SearchOptions::default());
    assert_eq!(a, b);
}
