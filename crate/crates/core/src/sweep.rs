//! Disorder-ensemble experiments and their CSV/JSON artifacts.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{average_ipr, build_hamiltonian, ChainSpec, Hamiltonian, SiteEnergies};
use crate::lindblad::{build_liouvillian, wavepacket_variance, TransportSpec};
use crate::liouvillian::DensityMatrix;
use crate::model::{PureDephasing, TransportModel};
use crate::optimizer::{
    find_optimal_dephasing, log_grid, minimize_population_variance, LogGolden, PeakFinder,
    SearchOptions, Status,
};
use crate::propagate::propagate;
use crate::seed::derive_seed;
use crate::{Error, Result};

pub const DEFAULT_GRADIENTS: [f64; 4] = [0.0, 0.1, 1.0, 10.0];
pub const DEFAULT_REALIZATIONS: usize = 100;
pub const LARGE_CHAIN_REALIZATIONS: usize = 25;
pub const IPR_BIN_WIDTH: f64 = 0.5;

/// `σ = 0` followed by 24 log-spaced strengths in `[0.01, 10]`.
pub fn default_sigma_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain(log_grid(1e-2, 10.0, 24))
        .collect()
}

pub fn default_realizations(n_sites: usize) -> usize {
    if n_sites >= 50 {
        LARGE_CHAIN_REALIZATIONS
    } else {
        DEFAULT_REALIZATIONS
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub lengths: Vec<usize>,
    pub gradients: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Realizations per grid point; `None` picks [`default_realizations`].
    pub realizations: Option<usize>,
    pub master_seed: u64,
    pub model: Arc<dyn TransportModel>,
    pub peak_finder: Arc<dyn PeakFinder>,
    pub transport: TransportSpec,
    pub search: SearchOptions,
}

impl SweepConfig {
    pub fn new(lengths: Vec<usize>) -> Self {
        Self {
            lengths,
            gradients: DEFAULT_GRADIENTS.to_vec(),
            sigmas: default_sigma_grid(),
            realizations: None,
            master_seed: 0,
            model: Arc::new(PureDephasing::fast()),
            peak_finder: Arc::new(LogGolden),
            transport: TransportSpec::new(0.0),
            search: SearchOptions::default(),
        }
    }

    pub fn realizations_for(&self, n_sites: usize) -> usize {
        self.realizations
            .unwrap_or_else(|| default_realizations(n_sites))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, empty) in [
            ("lengths", self.lengths.is_empty()),
            ("gradients", self.gradients.is_empty()),
            ("sigmas", self.sigmas.is_empty()),
        ] {
            if empty {
                return Err(Error::InvalidParameter(format!("{name} grid is empty")));
            }
        }
        if self.realizations == Some(0) {
            return Err(Error::InvalidParameter(
                "realizations must be at least 1".into(),
            ));
        }
        for &n in &self.lengths {
            for &eta in &self.gradients {
                for &sigma in &self.sigmas {
                    ChainSpec::new(n, eta, sigma, 0)?;
                }
            }
            self.transport.validate(n)?;
        }
        self.search.validate()
    }

    /// Every `(N, η, σ, realization)` cell in grid order.
    pub fn work_items(&self) -> Vec<WorkItem> {
        let mut items = Vec::new();
        for (ni, &n) in self.lengths.iter().enumerate() {
            for (ei, &eta) in self.gradients.iter().enumerate() {
                for (si, &sigma) in self.sigmas.iter().enumerate() {
                    for r in 0..self.realizations_for(n) {
                        let seed = derive_seed(
                            self.master_seed,
                            &[ni as u64, ei as u64, si as u64, r as u64],
                        );
                        items.push(WorkItem {
                            n_sites: n,
                            gradient: eta,
                            sigma,
                            realization: r,
                            seed,
                        });
                    }
                }
            }
        }
        items
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkItem {
    pub n_sites: usize,
    pub gradient: f64,
    pub sigma: f64,
    pub realization: usize,
    pub seed: u64,
}

impl WorkItem {
    pub fn chain(&self) -> ChainSpec {
        ChainSpec {
            n_sites: self.n_sites,
            gradient: self.gradient,
            disorder_strength: self.sigma,
            coupling: 1.0,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "N")]
    pub n_sites: usize,
    pub eta: f64,
    pub sigma: f64,
    pub realization: usize,
    pub seed: u64,
    pub ipr: f64,
    pub gamma_opt: f64,
    #[serde(rename = "i_max")]
    pub current_max: f64,
    pub status: Status,
}

fn optimize_item(item: &WorkItem, config: &SweepConfig) -> SweepRecord {
    let h = item.chain().hamiltonian();
    let ipr = average_ipr(&h);
    let result = config.model.prepare(&h, &config.transport).map(|response| {
        find_optimal_dephasing(
            response.as_ref(),
            config.peak_finder.as_ref(),
            &config.search,
        )
    });
    let (gamma_opt, current_max, status) = match result {
        Ok(r) => (r.gamma_opt, r.current_max, r.status),
        Err(_) => (f64::NAN, f64::NAN, Status::Failed),
    };
    SweepRecord {
        n_sites: item.n_sites,
        eta: item.gradient,
        sigma: item.sigma,
        realization: item.realization,
        seed: item.seed,
        ipr,
        gamma_opt,
        current_max,
        status,
    }
}

/// Maps `f` over work items (in [`SweepConfig::work_items`] order) in
/// parallel. Ordered (`σ = 0`) cells are the same chain for every
/// realization, so only realization 0 is computed.
fn map_items<T, F>(items: &[WorkItem], f: F) -> Vec<T>
where
    T: Clone + Send + Sync,
    F: Fn(&WorkItem) -> T + Send + Sync,
{
    let is_copy = |it: &WorkItem| it.sigma == 0.0 && it.realization > 0;
    let computed: Vec<Option<T>> = items
        .par_iter()
        .map(|it| (!is_copy(it)).then(|| f(it)))
        .collect();
    let mut out: Vec<T> = Vec::with_capacity(items.len());
    for (i, (it, value)) in items.iter().zip(computed).enumerate() {
        match value {
            Some(v) => out.push(v),
            None => out.push(out[i - it.realization].clone()),
        }
    }
    out
}

fn with_seed(mut record: SweepRecord, item: &WorkItem) -> SweepRecord {
    record.realization = item.realization;
    record.seed = item.seed;
    record
}

/// One record per `(N, η, σ, realization)`, in grid order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let items = config.work_items();
    let records: Vec<SweepRecord> = map_items(&items, |item| optimize_item(item, config))
        .into_iter()
        .zip(&items)
        .map(|(r, item)| with_seed(r, item))
        .collect();
    if !records.is_empty() && records.iter().all(|r| r.status == Status::Failed) {
        return Err(Error::AllRecordsFailed);
    }
    Ok(records)
}

/// Ensemble-mean IPR per `(N, η, σ)` without any transport solve.
pub fn ipr_sweep(config: &SweepConfig) -> Result<Vec<(usize, f64, f64, f64)>> {
    config.validate()?;
    let items = config.work_items();
    let iprs = map_items(&items, |item| average_ipr(&item.chain().hamiltonian()));
    let mut groups: Vec<((usize, f64, f64), Vec<f64>)> = Vec::new();
    for (item, ipr) in items.iter().zip(iprs) {
        let key = (item.n_sites, item.gradient, item.sigma);
        match groups.last_mut() {
            Some((k, v)) if *k == key => v.push(ipr),
            _ => groups.push((key, vec![ipr])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|((n, eta, sigma), v)| (n, eta, sigma, v.iter().sum::<f64>() / v.len() as f64))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKey {
    N,
    Eta,
    Sigma,
    IprBin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// Population statistics; `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub key: Vec<(GroupKey, f64)>,
    pub count: usize,
    pub failed: usize,
    pub clipped_low: usize,
    pub clipped_high: usize,
    pub clipped_fraction: f64,
    pub ipr: Summary,
    pub gamma_opt: Summary,
    pub current_max: Summary,
}

fn key_value(record: &SweepRecord, key: GroupKey) -> f64 {
    match key {
        GroupKey::N => record.n_sites as f64,
        GroupKey::Eta => record.eta,
        GroupKey::Sigma => record.sigma,
        GroupKey::IprBin => (record.ipr / IPR_BIN_WIDTH).floor() * IPR_BIN_WIDTH,
    }
}

/// Statistics per group over non-failed records. Groups whose records all
/// failed produce no row.
pub fn aggregate(records: &[SweepRecord], keys: &[GroupKey]) -> Vec<GroupStats> {
    let mut groups: BTreeMap<Vec<u64>, Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        // Order-preserving bit pattern for non-negative keys.
        let k = keys.iter().map(|&k| key_value(r, k).to_bits()).collect();
        groups.entry(k).or_default().push(r);
    }
    groups
        .into_values()
        .filter_map(|members| {
            let ok: Vec<&SweepRecord> = members
                .iter()
                .copied()
                .filter(|r| r.status != Status::Failed)
                .collect();
            let pick = |f: fn(&SweepRecord) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
            let count_of = |s: Status| ok.iter().filter(|r| r.status == s).count();
            let (clipped_low, clipped_high) =
                (count_of(Status::ClippedLow), count_of(Status::ClippedHigh));
            Some(GroupStats {
                key: keys
                    .iter()
                    .map(|&k| (k, key_value(members[0], k)))
                    .collect(),
                count: ok.len(),
                failed: members.len() - ok.len(),
                clipped_low,
                clipped_high,
                clipped_fraction: (clipped_low + clipped_high) as f64 / ok.len().max(1) as f64,
                ipr: Summary::of(&pick(|r| r.ipr))?,
                gamma_opt: Summary::of(&pick(|r| r.gamma_opt))?,
                current_max: Summary::of(&pick(|r| r.current_max))?,
            })
        })
        .collect()
}

/// Fraction of non-failed records that hit either bound.
pub fn clipped_fraction(records: &[SweepRecord]) -> f64 {
    let ok = records
        .iter()
        .filter(|r| r.status != Status::Failed)
        .count();
    let clipped = records.iter().filter(|r| r.status.is_clipped()).count();
    clipped as f64 / ok.max(1) as f64
}

/// Ordered chains over a fine gradient grid.
pub fn gradient_only_scan(config: &SweepConfig, gradients: &[f64]) -> Result<Vec<SweepRecord>> {
    let scan = SweepConfig {
        gradients: gradients.to_vec(),
        sigmas: vec![0.0],
        realizations: Some(1),
        ..config.clone()
    };
    run_sweep(&scan)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformisationRecord {
    #[serde(rename = "N")]
    pub n_sites: usize,
    pub eta: f64,
    pub sigma: f64,
    pub realization: usize,
    pub seed: u64,
    pub ipr: f64,
    pub gamma_opt: f64,
    pub opt_status: Status,
    pub gamma_min_var: f64,
    pub var_status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformisationPoint {
    #[serde(rename = "N")]
    pub n_sites: usize,
    pub eta: f64,
    pub sigma: f64,
    pub realizations: usize,
    pub ipr_mean: f64,
    pub gamma_opt_mean: f64,
    pub gamma_min_var_mean: f64,
}

/// Per chain, the current-maximising rate and the variance-minimising rate
/// over the same bounds.
pub fn uniformisation_comparison(config: &SweepConfig) -> Result<Vec<UniformisationRecord>> {
    config.validate()?;
    if config.model.name() == "redfield" {
        return Err(Error::InvalidParameter(
            "uniformisation comparison needs a pure-dephasing model".into(),
        ));
    }
    let items = config.work_items();
    let evaluate = |item: &WorkItem| {
        let h = item.chain().hamiltonian();
        let ipr = average_ipr(&h);
        let (opt, var) = match config.model.prepare(&h, &config.transport) {
            Ok(response) => {
                let finder = config.peak_finder.as_ref();
                (
                    find_optimal_dephasing(response.as_ref(), finder, &config.search),
                    minimize_population_variance(response.as_ref(), finder, &config.search),
                )
            }
            Err(_) => (
                crate::optimizer::OptimizationResult::failed(0, 0),
                crate::optimizer::OptimizationResult::failed(0, 0),
            ),
        };
        UniformisationRecord {
            n_sites: item.n_sites,
            eta: item.gradient,
            sigma: item.sigma,
            realization: item.realization,
            seed: item.seed,
            ipr,
            gamma_opt: opt.gamma_opt,
            opt_status: opt.status,
            gamma_min_var: var.gamma_opt,
            var_status: var.status,
        }
    };
    let records: Vec<UniformisationRecord> = map_items(&items, evaluate)
        .into_iter()
        .zip(&items)
        .map(|(mut r, item)| {
            r.realization = item.realization;
            r.seed = item.seed;
            r
        })
        .collect();
    if records
        .iter()
        .all(|r| r.opt_status == Status::Failed && r.var_status == Status::Failed)
    {
        return Err(Error::AllRecordsFailed);
    }
    Ok(records)
}

/// Ensemble means per `(N, η, σ)` over records where both searches succeeded.
pub fn summarize_uniformisation(records: &[UniformisationRecord]) -> Vec<UniformisationPoint> {
    let mut points: Vec<UniformisationPoint> = Vec::new();
    let mut sums: Vec<(f64, f64, f64)> = Vec::new();
    for r in records {
        let same = points
            .last()
            .is_some_and(|p| p.n_sites == r.n_sites && p.eta == r.eta && p.sigma == r.sigma);
        if !same {
            points.push(UniformisationPoint {
                n_sites: r.n_sites,
                eta: r.eta,
                sigma: r.sigma,
                realizations: 0,
                ipr_mean: 0.0,
                gamma_opt_mean: 0.0,
                gamma_min_var_mean: 0.0,
            });
            sums.push((0.0, 0.0, 0.0));
        }
        if r.opt_status == Status::Failed || r.var_status == Status::Failed {
            continue;
        }
        let p = points.last_mut().expect("point pushed above");
        let s = sums.last_mut().expect("sum pushed above");
        p.realizations += 1;
        s.0 += r.ipr;
        s.1 += r.gamma_opt;
        s.2 += r.gamma_min_var;
    }
    for (p, s) in points.iter_mut().zip(sums) {
        let k = p.realizations.max(1) as f64;
        p.ipr_mean = s.0 / k;
        p.gamma_opt_mean = s.1 / k;
        p.gamma_min_var_mean = s.2 / k;
        if p.realizations == 0 {
            (p.ipr_mean, p.gamma_opt_mean, p.gamma_min_var_mean) = (f64::NAN, f64::NAN, f64::NAN);
        }
    }
    points
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceSample {
    pub t: f64,
    #[serde(rename = "gamma")]
    pub dephasing_rate: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientTrace {
    pub dephasing_rate: f64,
    /// Earliest output time after which every sample stays within 1% of
    /// `steady_value`.
    pub convergence_time: Option<f64>,
    pub samples: Vec<VarianceSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientResult {
    pub n_sites: usize,
    /// Variance of the uniform site distribution.
    pub steady_value: f64,
    pub traces: Vec<TransientTrace>,
}

impl TransientResult {
    pub fn samples(&self) -> impl Iterator<Item = &VarianceSample> {
        self.traces.iter().flat_map(|t| t.samples.iter())
    }
}

/// Spreading of a wavepacket started on the central site of a closed chain.
pub fn transient_experiment(
    chain: &Hamiltonian,
    rates: &[f64],
    times: &[f64],
) -> Result<TransientResult> {
    let n = chain.n_sites();
    let uniform = DensityMatrix::maximally_mixed_sites(n, n);
    let steady_value = wavepacket_variance(&uniform, n)?;
    let traces = rates
        .par_iter()
        .map(|&gamma| {
            let l = build_liouvillian(chain, &TransportSpec::closed(gamma))?;
            let states = propagate(&l, &DensityMatrix::site_projector(n / 2, n), times)?;
            let samples = times
                .iter()
                .zip(&states)
                .map(|(&t, rho)| {
                    Ok(VarianceSample {
                        t,
                        dephasing_rate: gamma,
                        variance: wavepacket_variance(rho, n)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let outside = samples
                .iter()
                .rposition(|s| (s.variance - steady_value).abs() > 0.01 * steady_value);
            let convergence_time = match outside {
                None => samples.first().map(|s| s.t),
                Some(i) => samples.get(i + 1).map(|s| s.t),
            };
            Ok(TransientTrace {
                dephasing_rate: gamma,
                convergence_time,
                samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransientResult {
        n_sites: n,
        steady_value,
        traces,
    })
}

/// An ordered chain of `n` sites with all site energies zero.
pub fn flat_chain(n: usize) -> Hamiltonian {
    build_hamiltonian(&SiteEnergies::new(vec![0.0; n]), 1.0)
}

pub fn write_csv<T: Serialize>(rows: &[T], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(reader: impl Read) -> Result<Vec<SweepRecord>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub const RECORD_HEADER: &str = "N,eta,sigma,realization,seed,ipr,gamma_opt,i_max,status";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub config: serde_json::Value,
    pub created_unix: u64,
    pub elapsed_seconds: f64,
    pub records: usize,
    pub status_counts: BTreeMap<String, usize>,
    pub clipped_fractions: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(experiment: &str, config: serde_json::Value) -> Self {
        Self {
            experiment: experiment.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            elapsed_seconds: 0.0,
            records: 0,
            status_counts: BTreeMap::new(),
            clipped_fractions: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn count_statuses<'a>(&mut self, statuses: impl IntoIterator<Item = &'a Status>) {
        for s in statuses {
            *self
                .status_counts
                .entry(s.as_str().to_string())
                .or_default() += 1;
            self.records += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(lengths: Vec<usize>) -> SweepConfig {
        SweepConfig {
            gradients: vec![0.0],
            sigmas: vec![0.0],
            realizations: Some(1),
            ..SweepConfig::new(lengths)
        }
    }

    #[test]
    fn default_grid_shape() {
        let g = default_sigma_grid();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 1e-2);
        assert_eq!(g[24], 10.0);
        assert_eq!(default_realizations(40), 100);
        assert_eq!(default_realizations(50), 25);
    }

    #[test]
    fn ordered_single_record() {
        let records = run_sweep(&small(vec![10])).unwrap();
        assert_eq!(records.len(), 1);
        assert!((records[0].ipr - 22.0 / 3.0).abs() < 0.01);
        assert_eq!(records[0].status, Status::Interior);
    }

    #[test]
    fn ordered_cells_replicated() {
        let config = SweepConfig {
            sigmas: vec![0.0, 0.5],
            realizations: Some(3),
            ..small(vec![5])
        };
        let records = run_sweep(&config).unwrap();
        assert_eq!(records.len(), 6);
        assert_eq!(records[0].gamma_opt, records[2].gamma_opt);
        assert_ne!(records[0].seed, records[1].seed);
        assert_eq!(records[1].realization, 1);
        assert_ne!(records[3].ipr, records[4].ipr);
    }

    #[test]
    fn sweep_is_deterministic() {
        let config = SweepConfig {
            gradients: vec![0.0, 1.0],
            sigmas: vec![0.3, 1.0],
            realizations: Some(2),
            master_seed: 42,
            ..SweepConfig::new(vec![4, 6])
        };
        let a = run_sweep(&config).unwrap();
        let b = run_sweep(&config).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let c = pool.install(|| run_sweep(&config)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn csv_roundtrip_and_header() {
        let records = run_sweep(&small(vec![3])).unwrap();
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), RECORD_HEADER);
        assert_eq!(read_records(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn single_record_group() {
        let records = run_sweep(&small(vec![3])).unwrap();
        let stats = aggregate(&records, &[GroupKey::N]);
        assert_eq!(stats.len(), 1);
        assert_eq!(stats[0].gamma_opt.mean, records[0].gamma_opt);
        assert_eq!(stats[0].gamma_opt.std, 0.0);
    }

    #[test]
    fn all_failed_group_has_no_row() {
        let mut records = run_sweep(&small(vec![3])).unwrap();
        records[0].status = Status::Failed;
        assert!(aggregate(&records, &[GroupKey::Eta]).is_empty());
    }

    #[test]
    fn ipr_bins() {
        let mut r = run_sweep(&small(vec![3])).unwrap().remove(0);
        r.ipr = 3.74;
        assert_eq!(key_value(&r, GroupKey::IprBin), 3.5);
    }

    #[test]
    fn gradient_scan_localises() {
        let records = gradient_only_scan(&small(vec![8]), &[0.0, 0.5, 1.0, 2.0]).unwrap();
        assert!(records.windows(2).all(|w| w[1].ipr < w[0].ipr));
    }

    #[test]
    fn single_site_uniformisation_is_degenerate() {
        let records = uniformisation_comparison(&small(vec![1])).unwrap();
        assert_eq!(records[0].opt_status, Status::ClippedLow);
        assert_eq!(records[0].var_status, Status::ClippedLow);
    }

    #[test]
    fn transient_limits() {
        let times = [0.0, 0.5, 1.0];
        let result = transient_experiment(&flat_chain(41), &[0.0], &times).unwrap();
        assert_eq!(result.steady_value, 140.0);
        let v = &result.traces[0].samples;
        assert_eq!(v[0].variance, 0.0);
        assert!((v[2].variance - 2.0).abs() < 0.04);
    }
}
