//! Monte-Carlo evaluation of the full protocol.
//!
//! A trial samples a pattern, places and routes the code, applies noise,
//! decodes, and records the estimated weight together with whether the
//! corrected state carries a logical error. Acceptance at any threshold
//! follows from the weight alone, so every `w_thr` is evaluated on the
//! same trials. The pattern and placement do not depend on `e_swap`, and
//! the noise stream is reused for every `e_swap` value as well.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::code::{choose_code_distance, num_data_qubits, syndrome, CodeLayout};
use crate::decode::{build_decoding_graphs, decode, residual_verdict, DecodingGraphs, LogicalOutcome, QubitWeights, Weighting};
use crate::error::{check_probability, Error, Result};
use crate::lattice::{sample_entanglement_pattern, EntanglementPattern, GridSpec};
use crate::pauli::{apply_swap_noise, effective_swap_rate, marginal_error_probability, sample_initial_errors};
use crate::rearrange::{select_placement, Placement, PlacementOptions};
use crate::rng::TrialStreams;

/// Where each trial's entanglement pattern comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PatternSource {
    /// Fresh Bernoulli(`p_gen`) pattern per trial.
    Random,
    /// The same pattern every trial.
    Fixed(EntanglementPattern),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub grid: GridSpec,
    pub p_gen: f64,
    pub e_init: f64,
    pub placement: PlacementOptions,
    pub weighting: Weighting,
    pub pattern: PatternSource,
}

impl ProtocolConfig {
    pub fn new(grid_size: usize, p_gen: f64, e_init: f64) -> Result<Self> {
        check_probability("p_gen", p_gen)?;
        check_probability("e_init", e_init)?;
        Ok(ProtocolConfig {
            grid: GridSpec::new(grid_size)?,
            p_gen,
            e_init,
            placement: PlacementOptions::default(),
            weighting: Weighting::Uniform,
            pattern: PatternSource::Random,
        })
    }

    /// Configuration 1 of the evaluation: `p_gen = 0.3`, `L = 19`, `e_init = 0.05`.
    pub fn configuration_1() -> Self {
        Self::new(19, 0.3, 0.05).expect("valid preset")
    }

    /// `p_gen = 0.1`, `L = 33`, `e_init = 0.05`.
    pub fn configuration_2() -> Self {
        Self::new(33, 0.1, 0.05).expect("valid preset")
    }

    /// `p_gen = 0.3`, `L = 23`, `e_init = 0.05`.
    pub fn configuration_3() -> Self {
        Self::new(23, 0.3, 0.05).expect("valid preset")
    }

    pub fn with_fixed_pattern(mut self, pattern: EntanglementPattern) -> Self {
        self.grid = pattern.grid();
        self.pattern = PatternSource::Fixed(pattern);
        self
    }
}

/// Threshold-independent record of one trial at one `e_swap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSample {
    /// `None` when the pattern could not host the minimum distance.
    pub realized_d: Option<usize>,
    pub total_swaps: usize,
    /// `None` when routing failed; such trials are never accepted.
    pub estimated_weight: Option<usize>,
    /// Logical error of the corrected state, whether or not it is accepted.
    pub residual_logical_error: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub realized_d: Option<usize>,
    pub total_swaps: usize,
    pub estimated_weight: Option<usize>,
    pub accepted: bool,
    /// Only ever set on accepted trials.
    pub logical_error: bool,
}

impl TrialSample {
    pub fn outcome(&self, w_thr: usize) -> TrialOutcome {
        let accepted = self.estimated_weight.is_some_and(|w| w <= w_thr);
        TrialOutcome {
            realized_d: self.realized_d,
            total_swaps: self.total_swaps,
            estimated_weight: self.estimated_weight,
            accepted,
            logical_error: accepted && self.residual_logical_error,
        }
    }
}

/// Uniform-weight decoding graphs, built once per distance and shared.
#[derive(Debug, Default)]
pub struct DecoderCache {
    graphs: Vec<OnceLock<DecodingGraphs>>,
}

impl DecoderCache {
    pub fn new(max_distance: usize) -> Self {
        DecoderCache {
            graphs: (0..=max_distance).map(|_| OnceLock::new()).collect(),
        }
    }

    fn uniform(&self, layout: &CodeLayout) -> Option<&DecodingGraphs> {
        self.graphs
            .get(layout.distance())
            .map(|cell| cell.get_or_init(|| build_decoding_graphs(layout, &QubitWeights::Uniform)))
    }
}

/// Outcome of the `e_swap`-independent half of a trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prepared {
    Insufficient,
    /// No collision-free schedule was found; counts as a protocol failure.
    RoutingFailed { distance: usize },
    Placed(Box<Placement>),
}

/// Pattern sampling and placement.
pub fn prepare_trial<R: Rng + ?Sized>(config: &ProtocolConfig, rng: &mut R) -> Result<Prepared> {
    let sampled;
    let pattern = match &config.pattern {
        PatternSource::Random => {
            sampled = sample_entanglement_pattern(config.grid, config.p_gen, rng)?;
            &sampled
        }
        PatternSource::Fixed(p) => p,
    };
    let distance = match choose_code_distance(pattern.count(), Some(pattern.grid()), config.placement.min_distance) {
        Ok(d) => d,
        Err(Error::InsufficientEntanglement { .. }) => return Ok(Prepared::Insufficient),
        Err(e) => return Err(e),
    };
    match select_placement(pattern, &config.placement) {
        Ok(p) => Ok(Prepared::Placed(Box::new(p))),
        Err(Error::RoutingBlocked { .. }) => Ok(Prepared::RoutingFailed { distance }),
        Err(e) => Err(e),
    }
}

/// Noise, decoding and verdict for a prepared trial.
pub fn evaluate_trial<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    placement: &Placement,
    e_swap: f64,
    rng: &mut R,
    cache: &DecoderCache,
) -> TrialSample {
    let layout = &placement.layout;
    let counts = &placement.plan.swap_counts;
    let e_tilde = effective_swap_rate(e_swap);
    let mut frame = sample_initial_errors(layout.num_data(), config.e_init, rng);
    apply_swap_noise(&mut frame, counts, e_tilde, rng);

    let owned;
    let graphs = match config.weighting {
        Weighting::Uniform => match cache.uniform(layout) {
            Some(g) => g,
            None => {
                owned = build_decoding_graphs(layout, &QubitWeights::Uniform);
                &owned
            }
        },
        Weighting::PerQubit => {
            let p = counts
                .iter()
                .map(|&k| marginal_error_probability(config.e_init, e_tilde, k))
                .collect();
            owned = build_decoding_graphs(layout, &QubitWeights::Depolarizing(p));
            &owned
        }
    };
    let correction = decode(graphs, &syndrome(layout, &frame));
    let residual = frame.compose(&correction.as_frame());
    debug_assert!(syndrome(layout, &residual).is_trivial());
    TrialSample {
        realized_d: Some(placement.distance),
        total_swaps: placement.plan.total_swaps(),
        estimated_weight: Some(correction.estimated_weight()),
        residual_logical_error: residual_verdict(&residual, layout) == LogicalOutcome::LogicalError,
    }
}

/// One trial: samples `e_swap`-independent placement from
/// `streams.placement` and noise from `streams.noise`.
pub fn run_trial(config: &ProtocolConfig, e_swap: f64, streams: &mut TrialStreams, cache: &DecoderCache) -> Result<TrialSample> {
    Ok(run_trial_multi(config, &[e_swap], streams, cache)?[0])
}

fn run_trial_multi(
    config: &ProtocolConfig,
    e_swaps: &[f64],
    streams: &mut TrialStreams,
    cache: &DecoderCache,
) -> Result<Vec<TrialSample>> {
    let prepared = prepare_trial(config, &mut streams.placement)?;
    Ok(e_swaps
        .iter()
        .map(|&e_swap| match &prepared {
            Prepared::Placed(p) => {
                let mut noise = streams.noise.clone();
                evaluate_trial(config, p, e_swap, &mut noise, cache)
            }
            Prepared::RoutingFailed { distance } => TrialSample {
                realized_d: Some(*distance),
                total_swaps: 0,
                estimated_weight: None,
                residual_logical_error: false,
            },
            Prepared::Insufficient => TrialSample {
                realized_d: None,
                total_swaps: 0,
                estimated_weight: None,
                residual_logical_error: false,
            },
        })
        .collect())
}

/// Serial or data-parallel execution of the trial loop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is on.
    #[default]
    Parallel,
}

/// Raw samples, `samples[e][trial]` for `e_swaps[e]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTable {
    pub e_swaps: Vec<f64>,
    pub samples: Vec<Vec<TrialSample>>,
}

pub fn sample_trials(
    config: &ProtocolConfig,
    e_swaps: &[f64],
    trials: usize,
    master_seed: u64,
    execution: Execution,
) -> Result<TrialTable> {
    for &e in e_swaps {
        check_probability("e_swap", e)?;
    }
    let cache = DecoderCache::new(config.grid.size().div_ceil(2));
    let one = |i: usize| {
        let mut streams = TrialStreams::derive(master_seed, i as u64);
        run_trial_multi(config, e_swaps, &mut streams, &cache)
    };
    let per_trial: Vec<Vec<TrialSample>> = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..trials).into_par_iter().map(one).collect::<Result<_>>()?
        }
        _ => (0..trials).map(one).collect::<Result<_>>()?,
    };
    let mut samples = vec![Vec::with_capacity(trials); e_swaps.len()];
    for row in per_trial {
        for (e, s) in row.into_iter().enumerate() {
            samples[e].push(s);
        }
    }
    Ok(TrialTable {
        e_swaps: e_swaps.to_vec(),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub p_gen: f64,
    pub grid_size: usize,
    pub e_init: f64,
    pub e_swap: f64,
    pub w_thr: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

/// Rows with fewer accepted trials than this are flagged.
pub const LOW_CONFIDENCE_ACCEPTED: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub d: usize,
    pub n_d: usize,
    pub n_acc: usize,
    pub n_err: usize,
    pub p_log: f64,
    /// `None` when nothing was accepted.
    pub e_log: Option<f64>,
    pub p_log_ci: Interval,
    pub e_log_ci: Option<Interval>,
    pub low_confidence: bool,
    pub median_total_swaps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub params: SweepParams,
    pub rows: Vec<DistanceRow>,
    pub n_total: usize,
    pub n_insufficient: usize,
    pub dominant_d: Option<usize>,
}

impl SweepRecord {
    pub fn row(&self, d: usize) -> Option<&DistanceRow> {
        self.rows.iter().find(|r| r.d == d)
    }

    pub fn dominant_row(&self) -> Option<&DistanceRow> {
        self.dominant_d.and_then(|d| self.row(d))
    }
}

/// 95% Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> Interval {
    if n == 0 {
        return Interval { low: 0.0, high: 1.0 };
    }
    let z = 1.959_963_984_540_054_f64;
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let denom = 1.0 + z * z / n_f;
    let center = (p + z * z / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z * z / (4.0 * n_f * n_f)).sqrt() / denom;
    Interval {
        low: if k == 0 { 0.0 } else { (center - half).clamp(0.0, p) },
        high: if k == n { 1.0 } else { (center + half).clamp(p, 1.0) },
    }
}

fn median(values: &mut [usize]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_unstable();
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m] as f64
    } else {
        (values[m - 1] + values[m]) as f64 / 2.0
    }
}

/// Buckets samples by realized distance and applies `w_thr`.
pub fn aggregate(config: &ProtocolConfig, e_swap: f64, samples: &[TrialSample], w_thr: usize) -> SweepRecord {
    let max_d = samples.iter().filter_map(|s| s.realized_d).max().unwrap_or(0);
    let mut n_d = vec![0usize; max_d + 1];
    let mut n_acc = vec![0usize; max_d + 1];
    let mut n_err = vec![0usize; max_d + 1];
    let mut swaps: Vec<Vec<usize>> = vec![Vec::new(); max_d + 1];
    let mut n_insufficient = 0;
    for s in samples {
        let Some(d) = s.realized_d else {
            n_insufficient += 1;
            continue;
        };
        let o = s.outcome(w_thr);
        n_d[d] += 1;
        n_acc[d] += o.accepted as usize;
        n_err[d] += o.logical_error as usize;
        swaps[d].push(s.total_swaps);
    }
    let rows: Vec<DistanceRow> = (0..=max_d)
        .filter(|&d| n_d[d] > 0)
        .map(|d| DistanceRow {
            d,
            n_d: n_d[d],
            n_acc: n_acc[d],
            n_err: n_err[d],
            p_log: n_acc[d] as f64 / n_d[d] as f64,
            e_log: (n_acc[d] > 0).then(|| n_err[d] as f64 / n_acc[d] as f64),
            p_log_ci: wilson_interval(n_acc[d], n_d[d]),
            e_log_ci: (n_acc[d] > 0).then(|| wilson_interval(n_err[d], n_acc[d])),
            low_confidence: n_acc[d] < LOW_CONFIDENCE_ACCEPTED,
            median_total_swaps: median(&mut swaps[d]),
        })
        .collect();
    // most frequent distance; the larger one on ties
    let dominant_d = rows.iter().max_by_key(|r| (r.n_d, r.d)).map(|r| r.d);
    SweepRecord {
        params: SweepParams {
            p_gen: config.p_gen,
            grid_size: config.grid.size(),
            e_init: config.e_init,
            e_swap,
            w_thr,
        },
        rows,
        n_total: samples.len(),
        n_insufficient,
        dominant_d,
    }
}

/// One record per `(e_swap, w_thr)`, `e_swap`-major.
pub fn sweep(
    config: &ProtocolConfig,
    e_swaps: &[f64],
    w_thrs: &[usize],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<SweepRecord>> {
    sweep_with(config, e_swaps, w_thrs, trials, master_seed, Execution::default())
}

pub fn sweep_with(
    config: &ProtocolConfig,
    e_swaps: &[f64],
    w_thrs: &[usize],
    trials: usize,
    master_seed: u64,
    execution: Execution,
) -> Result<Vec<SweepRecord>> {
    if e_swaps.is_empty() || w_thrs.is_empty() {
        return Err(Error::InvalidParameter {
            name: "sweep",
            reason: "e_swap and w_thr lists must be nonempty".into(),
        });
    }
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            reason: "at least one trial is required".into(),
        });
    }
    let table = sample_trials(config, e_swaps, trials, master_seed, execution)?;
    Ok(table
        .e_swaps
        .iter()
        .zip(&table.samples)
        .flat_map(|(&e, samples)| w_thrs.iter().map(move |&w| aggregate(config, e, samples, w)))
        .collect())
}

pub fn run_batch(config: &ProtocolConfig, e_swap: f64, w_thr: usize, trials: usize, master_seed: u64) -> Result<SweepRecord> {
    Ok(sweep(config, &[e_swap], &[w_thr], trials, master_seed)?.remove(0))
}

/// Largest threshold that can matter for a grid: all data qubits of the
/// largest code that fits.
pub fn max_threshold(grid: GridSpec) -> usize {
    num_data_qubits(grid.size().div_ceil(2))
}
