//! Monte Carlo sweeps over the number of D2D pairs.
//!
//! Each drop index fixes one CU layout (and one ordered sequence of D2D
//! pairs) for every D2D count in the sweep, so the curves compare the same
//! cells with more or fewer pairs switched on. Trials run in parallel when the
//! `parallel` feature is enabled; results are merged in trial order and are
//! bit-identical to a sequential run.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::allocation::{reuse_candidates, PowerLimits, PowerPair};
use crate::channel::TopologyRequest;
use crate::channel::{compute_gains, generate_topology, CellLayout, GainTable, PathlossModel};
use crate::error::{Error, Result};
use crate::matching::{build_weights, hungarian_match};
use crate::qos::{QosSpec, TrafficSpec};
use crate::units::spectral_efficiency;

/// Relative tolerance of the per-trial constraint audit.
pub const AUDIT_RTOL: f64 = 1e-9;

/// Stream used to derive the gain seed of a drop from its topology seed.
const GAIN_SEED_STREAM: u64 = 0x6761_696e;

/// How trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    /// Rayon's current pool. Same as `Sequential` without the `parallel`
    /// feature.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// Runs `f` with at most `workers` threads (0 = one per core).
#[cfg(feature = "parallel")]
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<T: Send>(_workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}

#[cfg(feature = "parallel")]
fn map_ordered<I, T, F>(items: &[I], mode: ExecMode, f: F) -> Result<Vec<T>>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        ExecMode::Parallel => items.par_iter().map(f).collect(),
        ExecMode::Sequential => items.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_ordered<I, T, F>(items: &[I], _mode: ExecMode, f: F) -> Result<Vec<T>>
where
    F: Fn(&I) -> Result<T>,
{
    items.iter().map(f).collect()
}

/// Which of the two bandwidth configurations a sweep belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// `n_cu` channels of `B / n_cu`.
    Baseline,
    /// Twice the CUs on channels of half the width.
    Sliced,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Baseline => "A",
            Scenario::Sliced => "B",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Scenario::Baseline => 0,
            Scenario::Sliced => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub layout: CellLayout,
    pub pathloss: PathlossModel,
    pub limits: PowerLimits,
    pub traffic: TrafficSpec,
    pub total_bandwidth_hz: f64,
    pub n_cu: usize,
    pub d2d_counts: Vec<usize>,
    pub n_drops: usize,
    pub base_seed: u64,
    pub d2d_pair_min_m: f64,
    pub d2d_pair_max_m: f64,
    /// Keep reuse pairs whose rate increment is negative.
    pub allow_unprofitable_reuse: bool,
    /// Allow as many D2D pairs as CUs.
    pub full_reuse: bool,
    /// Test hook: push every matched D2D to 10x its optimal power before the
    /// audit, which must then reject the trial.
    #[doc(hidden)]
    pub inject_power_overshoot: bool,
}

impl ScenarioConfig {
    /// Ten CUs sharing 4 MHz, sweeping 0..=10 D2D pairs over 100 drops.
    pub fn standard() -> Self {
        ScenarioConfig {
            layout: CellLayout::default(),
            pathloss: PathlossModel::default(),
            limits: PowerLimits::default(),
            traffic: TrafficSpec::control_default(),
            total_bandwidth_hz: 4e6,
            n_cu: 10,
            d2d_counts: (0..=10).collect(),
            n_drops: 100,
            base_seed: 2023,
            d2d_pair_min_m: 10.0,
            d2d_pair_max_m: 50.0,
            allow_unprofitable_reuse: true,
            full_reuse: true,
            inject_power_overshoot: false,
        }
    }

    pub fn channel_bandwidth_hz(&self) -> f64 {
        self.total_bandwidth_hz / self.n_cu as f64
    }

    pub fn qos(&self) -> Result<QosSpec> {
        QosSpec::new(self.traffic, self.channel_bandwidth_hz())
    }

    pub fn topology_request(&self, m_d2d: usize) -> TopologyRequest {
        TopologyRequest {
            n_cu: self.n_cu,
            n_d2d: m_d2d,
            d2d_pair_min_m: self.d2d_pair_min_m,
            d2d_pair_max_m: self.d2d_pair_max_m,
            full_reuse: self.full_reuse,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        self.pathloss.validate()?;
        self.limits.validate()?;
        if !(self.total_bandwidth_hz > 0.0 && self.total_bandwidth_hz.is_finite()) {
            return Err(Error::invalid("total_bandwidth_hz", "must be > 0"));
        }
        if self.n_drops == 0 {
            return Err(Error::invalid("n_drops", "must be >= 1"));
        }
        if self.d2d_counts.is_empty() {
            return Err(Error::invalid("d2d_counts", "must list at least one count"));
        }
        self.qos()?;
        for &m in &self.d2d_counts {
            self.topology_request(m).validate(&self.layout)?;
        }
        Ok(())
    }

    fn sliced(&self) -> Self {
        ScenarioConfig {
            n_cu: 2 * self.n_cu,
            ..self.clone()
        }
    }
}

/// Seed of drop `drop_index` in `scenario`.
pub fn drop_seed(base_seed: u64, scenario: Scenario, drop_index: usize) -> u64 {
    derive_seed(base_seed, scenario.stream(), drop_index as u64)
}

/// `index`-th 64-bit word of ChaCha stream `stream` keyed by `base`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// What happened on one channel of a drop.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    pub cu: usize,
    pub d2d: Option<usize>,
    pub p_cu_mw: f64,
    pub p_d2d_mw: f64,
    pub sinr_cu: f64,
    pub sinr_d2d: f64,
    pub rate_cu_bpshz: f64,
    pub rate_d2d_bpshz: f64,
}

impl ChannelReport {
    pub fn rate_bpshz(&self) -> f64 {
        self.rate_cu_bpshz + self.rate_d2d_bpshz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub m_d2d: usize,
    pub seed: u64,
    /// Sum over channels of the per-channel spectral efficiency.
    pub sum_spectral_efficiency_bpshz: f64,
    /// The same sum weighted by each channel's share of the total band.
    pub unit_data_rate_bpshz: f64,
    pub served_d2d_count: usize,
    pub offered_d2d_count: usize,
    pub unserved_d2d_count: usize,
    /// Weight of the optimal matching.
    pub matching_weight_bpshz: f64,
    pub channels: Vec<ChannelReport>,
}

/// Allocation outcome for one drop, independent of how the gains were made.
pub fn evaluate_drop(
    gains: &GainTable,
    qos: &QosSpec,
    limits: &PowerLimits,
    allow_unprofitable_reuse: bool,
) -> Result<(Vec<ChannelReport>, crate::matching::Assignment)> {
    let candidates = reuse_candidates(gains, qos, limits)?;
    let weights = build_weights(&candidates, gains, limits, allow_unprofitable_reuse);
    let assignment = hungarian_match(&weights);

    let mut channels: Vec<ChannelReport> = (0..gains.n_cu())
        .map(|i| {
            let sinr = limits.p_max_cu_mw * gains.g_cu_bs[i] / limits.noise_mw;
            ChannelReport {
                cu: i,
                d2d: None,
                p_cu_mw: limits.p_max_cu_mw,
                p_d2d_mw: 0.0,
                sinr_cu: sinr,
                sinr_d2d: 0.0,
                rate_cu_bpshz: spectral_efficiency(sinr),
                rate_d2d_bpshz: 0.0,
            }
        })
        .collect();
    for (i, j) in assignment.pairs() {
        let c = candidates
            .get(i, j)
            .ok_or_else(|| Error::Internal(format!("matched non-candidate pair ({i}, {j})")))?;
        let p = c.power;
        channels[i] = ChannelReport {
            cu: i,
            d2d: Some(j),
            p_cu_mw: p.p_cu_mw,
            p_d2d_mw: p.p_d2d_mw,
            sinr_cu: p.sinr_cu,
            sinr_d2d: p.sinr_d2d,
            rate_cu_bpshz: spectral_efficiency(p.sinr_cu),
            rate_d2d_bpshz: spectral_efficiency(p.sinr_d2d),
        };
    }
    Ok((channels, assignment))
}

/// Re-checks every reusing channel against the SINR floors and power caps,
/// recomputing SINRs from the gains.
fn audit(
    channels: &[ChannelReport],
    gains: &GainTable,
    qos: &QosSpec,
    limits: &PowerLimits,
) -> std::result::Result<(), String> {
    let mut seen = vec![false; gains.n_d2d()];
    for ch in channels {
        let Some(j) = ch.d2d else { continue };
        if std::mem::replace(&mut seen[j], true) {
            return Err(format!("D2D {j} reuses more than one channel"));
        }
        let p = PowerPair::evaluate(
            &gains.pair(ch.cu, j),
            ch.p_cu_mw,
            ch.p_d2d_mw,
            limits.noise_mw,
        );
        if !p.satisfies(qos, limits, AUDIT_RTOL) {
            return Err(format!(
                "pair (CU {}, D2D {j}) at P_cu = {} mW, P_d2d = {} mW gives SINR {} / {} \
                 against floors {} / {} and caps {} / {} mW",
                ch.cu,
                p.p_cu_mw,
                p.p_d2d_mw,
                p.sinr_cu,
                p.sinr_d2d,
                qos.sinr_min_cu,
                qos.sinr_min_d2d,
                limits.p_max_cu_mw,
                limits.p_max_d2d_mw
            ));
        }
    }
    Ok(())
}

/// One drop with `m_d2d` pairs: topology, gains, admission, power, matching.
pub fn run_trial(cfg: &ScenarioConfig, m_d2d: usize, drop_seed: u64) -> Result<TrialMetrics> {
    let topo = generate_topology(&cfg.layout, &cfg.topology_request(m_d2d), drop_seed)?;
    let gain_seed = derive_seed(drop_seed, GAIN_SEED_STREAM, 0);
    let gains = compute_gains(&cfg.layout, &topo, &cfg.pathloss, gain_seed)?;
    let qos = cfg.qos()?;
    let (mut channels, assignment) =
        evaluate_drop(&gains, &qos, &cfg.limits, cfg.allow_unprofitable_reuse)?;

    if cfg.inject_power_overshoot {
        for ch in channels.iter_mut().filter(|c| c.d2d.is_some()) {
            ch.p_d2d_mw *= 10.0;
        }
    }
    audit(&channels, &gains, &qos, &cfg.limits).map_err(|detail| Error::ConstraintViolation {
        seed: drop_seed,
        m_d2d,
        detail,
    })?;

    let sum: f64 = channels.iter().map(ChannelReport::rate_bpshz).sum();
    let share = cfg.channel_bandwidth_hz() / cfg.total_bandwidth_hz;
    let served = assignment.served();
    Ok(TrialMetrics {
        m_d2d,
        seed: drop_seed,
        sum_spectral_efficiency_bpshz: sum,
        unit_data_rate_bpshz: sum * share,
        served_d2d_count: served,
        offered_d2d_count: m_d2d,
        unserved_d2d_count: m_d2d - served,
        matching_weight_bpshz: assignment.total_weight_bpshz,
        channels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub drop_index: usize,
    pub metrics: TrialMetrics,
}

/// Statistics of the unit data rate at one D2D count.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub m_d2d: usize,
    pub mean_bpshz: f64,
    /// Sample standard deviation (0 for a single drop).
    pub std_bpshz: f64,
    pub min_bpshz: f64,
    pub max_bpshz: f64,
    pub mean_served: f64,
    /// Mean un-normalized sum over channels.
    pub mean_sum_bpshz: f64,
    pub trials: Vec<TrialRecord>,
}

impl SweepPoint {
    fn from_trials(m_d2d: usize, trials: Vec<TrialRecord>) -> Self {
        let n = trials.len() as f64;
        let rates = || trials.iter().map(|t| t.metrics.unit_data_rate_bpshz);
        let mean = rates().sum::<f64>() / n;
        let var = if trials.len() > 1 {
            rates().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        SweepPoint {
            m_d2d,
            mean_bpshz: mean,
            std_bpshz: var.sqrt(),
            min_bpshz: rates().fold(f64::INFINITY, f64::min),
            max_bpshz: rates().fold(f64::NEG_INFINITY, f64::max),
            mean_served: trials
                .iter()
                .map(|t| t.metrics.served_d2d_count as f64)
                .sum::<f64>()
                / n,
            mean_sum_bpshz: trials
                .iter()
                .map(|t| t.metrics.sum_spectral_efficiency_bpshz)
                .sum::<f64>()
                / n,
            trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub scenario: Scenario,
    pub n_cu: usize,
    pub channel_bandwidth_hz: f64,
    pub sinr_min: f64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn point(&self, m_d2d: usize) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.m_d2d == m_d2d)
    }

    pub fn trials(&self) -> impl Iterator<Item = &TrialRecord> {
        self.points.iter().flat_map(|p| &p.trials)
    }
}

/// Sweeps the baseline scenario with the default execution mode.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<SweepResult> {
    run_sweep_with(cfg, Scenario::Baseline, ExecMode::default())
}

pub fn run_sweep_with(
    cfg: &ScenarioConfig,
    scenario: Scenario,
    mode: ExecMode,
) -> Result<SweepResult> {
    cfg.validate()?;
    let work: Vec<(usize, usize)> = cfg
        .d2d_counts
        .iter()
        .flat_map(|&m| (0..cfg.n_drops).map(move |d| (m, d)))
        .collect();
    let records = map_ordered(&work, mode, |&(m, d)| {
        let seed = drop_seed(cfg.base_seed, scenario, d);
        Ok(TrialRecord {
            drop_index: d,
            metrics: run_trial(cfg, m, seed)?,
        })
    })?;

    let mut records = records.into_iter();
    let points = cfg
        .d2d_counts
        .iter()
        .map(|&m| SweepPoint::from_trials(m, records.by_ref().take(cfg.n_drops).collect()))
        .collect();
    Ok(SweepResult {
        scenario,
        n_cu: cfg.n_cu,
        channel_bandwidth_hz: cfg.channel_bandwidth_hz(),
        sinr_min: cfg.qos()?.sinr_min_cu,
        points,
    })
}

/// Sweeps `cfg` as is and with twice the CUs on half-width channels.
pub fn run_slicing_comparison(cfg: &ScenarioConfig) -> Result<(SweepResult, SweepResult)> {
    run_slicing_comparison_with(cfg, ExecMode::default())
}

pub fn run_slicing_comparison_with(
    cfg: &ScenarioConfig,
    mode: ExecMode,
) -> Result<(SweepResult, SweepResult)> {
    let a = run_sweep_with(cfg, Scenario::Baseline, mode)?;
    let b = run_sweep_with(&cfg.sliced(), Scenario::Sliced, mode)?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            n_drops: 6,
            d2d_counts: vec![0, 3, 10],
            ..ScenarioConfig::standard()
        }
    }

    #[test]
    fn no_d2d_is_the_cellular_baseline() {
        let cfg = small();
        let seed = drop_seed(cfg.base_seed, Scenario::Baseline, 0);
        let t = run_trial(&cfg, 0, seed).unwrap();
        let layout = &cfg.layout;
        let topo = generate_topology(layout, &cfg.topology_request(0), seed).unwrap();
        let gains = compute_gains(
            layout,
            &topo,
            &cfg.pathloss,
            derive_seed(seed, GAIN_SEED_STREAM, 0),
        )
        .unwrap();
        let expect: f64 = gains
            .g_cu_bs
            .iter()
            .map(|g| (1.0 + cfg.limits.p_max_cu_mw * g / cfg.limits.noise_mw).log2())
            .sum();
        assert!((t.sum_spectral_efficiency_bpshz - expect).abs() < 1e-12);
        assert!((t.unit_data_rate_bpshz - expect / 10.0).abs() < 1e-12);
        assert_eq!(t.served_d2d_count, 0);
        assert_eq!(t.unserved_d2d_count, 0);
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = small();
        let a = run_trial(&cfg, 7, 1234).unwrap();
        let b = run_trial(&cfg, 7, 1234).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn served_plus_unserved_is_offered() {
        let cfg = small();
        for d in 0..6 {
            let t = run_trial(&cfg, 10, drop_seed(cfg.base_seed, Scenario::Baseline, d)).unwrap();
            assert_eq!(t.served_d2d_count + t.unserved_d2d_count, 10);
            assert!(t.served_d2d_count <= t.offered_d2d_count);
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let cfg = small();
        let seq = run_sweep_with(&cfg, Scenario::Baseline, ExecMode::Sequential).unwrap();
        let par = run_sweep_with(&cfg, Scenario::Baseline, ExecMode::Parallel).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.points.len(), 3);
        assert!(seq.points.iter().all(|p| p.trials.len() == 6));
    }

    #[test]
    fn overshoot_hook_trips_the_audit() {
        let cfg = ScenarioConfig {
            inject_power_overshoot: true,
            ..small()
        };
        let err = run_sweep_with(&cfg, Scenario::Baseline, ExecMode::Sequential).unwrap_err();
        assert!(matches!(err, Error::ConstraintViolation { .. }), "{err}");
    }

    #[test]
    fn config_validation() {
        let mut cfg = small();
        cfg.d2d_counts = vec![11];
        assert!(matches!(cfg.validate(), Err(Error::TooManyD2d { .. })));
        let mut cfg = small();
        cfg.n_drops = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.total_bandwidth_hz = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let a = drop_seed(1, Scenario::Baseline, 0);
        assert_ne!(a, drop_seed(1, Scenario::Baseline, 1));
        assert_ne!(a, drop_seed(1, Scenario::Sliced, 0));
        assert_ne!(a, drop_seed(2, Scenario::Baseline, 0));
        assert_eq!(a, drop_seed(1, Scenario::Baseline, 0));
    }
}
