//! Observable-level layer: delay scans, finite-shot detection sampling with
//! time-slot decoding of the loop photon, parameter sweeps and event rates.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::growth::{full_report, grow_full, reduced_report, GrowthMode, MeasurementBasis};
use crate::metrics::{
    entanglement_length, parity_visibility, pm_label, pm_probabilities, visibility2, visibility3,
    LengthOutcome, VisibilityReport,
};
use crate::noise::{success_probability_bound, NoiseConfig};
use crate::optics::PbsAmplitudes;
use crate::qstate::{DensityMatrix, PureState, DEFAULT_DENSE_CAP};

/// Round trips the loop photon can make before it is forced out.
pub const MAX_ROUND_TRIPS: usize = 64;

/// Gaussian temporal overlap `I(δτ) = I₀·exp(−δτ²/(2τ_c²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapModel {
    pub peak: f64,
    pub coherence_time: f64,
}

impl OverlapModel {
    pub fn new(peak: f64, coherence_time: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&peak) {
            return Err(Error::invalid("peak", format!("{peak} outside [0, 1]")));
        }
        if !(coherence_time.is_finite() && coherence_time > 0.0) {
            return Err(Error::invalid(
                "coherence_time",
                format!("{coherence_time} must be positive"),
            ));
        }
        Ok(Self {
            peak,
            coherence_time,
        })
    }

    pub fn overlap(&self, delay: f64) -> f64 {
        self.peak * (-delay * delay / (2.0 * self.coherence_time * self.coherence_time)).exp()
    }
}

/// Delay scan of the two- or three-photon interference fringe.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeSpec {
    pub delays: Vec<f64>,
    pub model: OverlapModel,
    pub photons: usize,
    /// Loop phase in radians.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringePoint {
    pub delay: f64,
    pub indistinguishability: f64,
    /// Hong–Ou–Mandel coincidence probability `½(1 − I)`.
    pub coincidence_prob: f64,
    pub report: VisibilityReport,
}

/// Number of modes equivalent to overlap `i`; infinite when `i = 0`.
pub fn modes_for_overlap(i: f64) -> f64 {
    if i > 0.0 {
        1.0 / i
    } else {
        f64::INFINITY
    }
}

/// Fringe of an ideal chain whose only imperfection is the overlap at each delay.
pub fn delay_scan(spec: &FringeSpec) -> Result<Vec<FringePoint>> {
    let model = OverlapModel::new(spec.model.peak, spec.model.coherence_time)?;
    if !(spec.photons == 2 || spec.photons == 3) {
        return Err(Error::invalid(
            "photons",
            format!("{} must be 2 or 3", spec.photons),
        ));
    }
    spec.delays
        .iter()
        .map(|&delay| {
            if !delay.is_finite() {
                return Err(Error::invalid("delay", "must be finite"));
            }
            let i = model.overlap(delay);
            let cfg = NoiseConfig::ideal()
                .with_modes(modes_for_overlap(i))
                .with_loop_phase(spec.phase);
            let mut report = fringe_report(&cfg, spec.photons)?;
            report.phase = Some(spec.phase);
            Ok(FringePoint {
                delay,
                indistinguishability: i,
                coincidence_prob: 0.5 * (1.0 - i),
                report,
            })
        })
        .collect()
}

/// Visibility report of a freshly grown 2- or 3-photon state.
pub fn fringe_report(cfg: &NoiseConfig, photons: usize) -> Result<VisibilityReport> {
    let grown = grow_full(photons, cfg, GrowthMode::Cluster)?;
    let mut report = match photons {
        2 => visibility2(&grown.state)?,
        3 => visibility3(&grown.state)?,
        _ => {
            return Err(Error::invalid(
                "photons",
                format!("{photons} must be 2 or 3"),
            ))
        }
    };
    report.phase = Some(cfg.loop_phase);
    Ok(report)
}

/// Evenly spaced grid including both end points.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points)
            .map(|k| start + (stop - start) * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Polarization analysis basis of the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisBasis {
    PM,
    HV,
}

/// Labelled outcome distribution when every photon is analysed in `basis`.
pub fn outcome_distribution(state: &DensityMatrix, basis: AnalysisBasis) -> Vec<(String, f64)> {
    match basis {
        AnalysisBasis::PM => pm_probabilities(state),
        AnalysisBasis::HV => {
            let n = state.num_qubits();
            state
                .populations()
                .into_iter()
                .enumerate()
                .map(|(i, p)| (PureState::basis_label(i, n), p.max(0.0)))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleReport {
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
    pub counts: Vec<u64>,
    pub shots: u64,
    pub seed: u64,
    pub basis: AnalysisBasis,
    /// Parity visibility of the empirical frequencies (p/m basis only).
    pub visibility: Option<f64>,
    pub visibility_error: Option<f64>,
    /// Histogram of the loop photon's exit slot; index 0 is slot 1.
    pub slot_histogram: Vec<u64>,
    /// Probability mass of exits beyond the round-trip cap, which is folded
    /// into the last slot.
    pub truncated_mass: f64,
}

impl SampleReport {
    /// Poisson error `√count` for each outcome.
    pub fn count_errors(&self) -> Vec<f64> {
        self.counts.iter().map(|&k| (k as f64).sqrt()).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&k| k as f64 / self.shots as f64)
            .collect()
    }
}

/// Exit slot of the loop photon: the first analyser port leaves at slot 1,
/// the second keeps circulating and leaves after a geometric number of
/// extra round trips.
fn loop_exit_slot(outcome_bit: usize, rng: &mut ChaCha8Rng) -> usize {
    if outcome_bit == 0 {
        return 1;
    }
    let mut k = 1;
    while k < MAX_ROUND_TRIPS && rng.random_bool(0.5) {
        k += 1;
    }
    1 + k
}

/// Draws `shots` detection events and decodes the loop photon from its exit slot.
pub fn sample_detections(
    state: &DensityMatrix,
    shots: u64,
    seed: u64,
    basis: AnalysisBasis,
) -> Result<SampleReport> {
    if shots == 0 {
        return Err(Error::invalid("shots", "must be positive"));
    }
    let dist = outcome_distribution(state, basis);
    let probabilities: Vec<f64> = dist.iter().map(|(_, p)| *p).collect();
    let labels: Vec<String> = dist.into_iter().map(|(l, _)| l).collect();
    let index =
        WeightedIndex::new(&probabilities).map_err(|e| Error::invalid("state", e.to_string()))?;
    let n = state.num_qubits();
    let loop_bit = 1usize << (n - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; probabilities.len()];
    let mut slot_histogram = vec![0u64; MAX_ROUND_TRIPS + 1];
    for _ in 0..shots {
        let outcome = index.sample(&mut rng);
        let slot = loop_exit_slot(usize::from(outcome & loop_bit != 0), &mut rng);
        slot_histogram[slot - 1] += 1;
        let decoded = (outcome & !loop_bit) | if slot > 1 { loop_bit } else { 0 };
        counts[decoded] += 1;
    }

    let (visibility, visibility_error) = match basis {
        AnalysisBasis::PM => {
            let freq: Vec<(String, f64)> = counts
                .iter()
                .enumerate()
                .map(|(i, &k)| (pm_label(i, n), k as f64 / shots as f64))
                .collect();
            let v = parity_visibility(&freq);
            (
                Some(v),
                Some(((1.0 - v * v).max(0.0) / shots as f64).sqrt()),
            )
        }
        AnalysisBasis::HV => (None, None),
    };
    Ok(SampleReport {
        labels,
        probabilities,
        counts,
        shots,
        seed,
        basis,
        visibility,
        visibility_error,
        slot_histogram,
        truncated_mass: 0.5f64.powi(MAX_ROUND_TRIPS as i32),
    })
}

/// Expected `N`-fold coincidence rate `η^N · R`.
pub fn event_rate(efficiency: f64, pulse_rate: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(Error::invalid(
            "efficiency",
            format!("{efficiency} outside [0, 1]"),
        ));
    }
    if !(pulse_rate.is_finite() && pulse_rate >= 0.0) {
        return Err(Error::invalid(
            "pulse_rate",
            format!("{pulse_rate} must be non-negative"),
        ));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    Ok(efficiency.powi(n as i32) * pulse_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Modes,
    Depolarizing,
    CnotEpsilon,
    /// `|t_h|²`, keeping the baseline `|r_v|²`.
    PbsTransmission,
    ChainLength,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Modes => "modes",
            SweepAxis::Depolarizing => "depol",
            SweepAxis::CnotEpsilon => "cnot_eps",
            SweepAxis::PbsTransmission => "pbs_th2",
            SweepAxis::ChainLength => "n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    Length,
    EndToEnd,
    SuccessBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub metric: SweepMetric,
    pub baseline: NoiseConfig,
    pub basis: MeasurementBasis,
    /// `None` picks the configuration's default threshold.
    pub threshold: Option<f64>,
    pub cap: usize,
    /// Chain length for the end-to-end and success-bound metrics.
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub n: Option<usize>,
    pub length: Option<LengthOutcome>,
    pub c_end: Option<f64>,
    pub fidelity: Option<f64>,
    pub postselect_prob: Option<f64>,
    pub success_bound: Option<f64>,
}

impl SweepGrid {
    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("values", "sweep grid is empty"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "sweep values must be finite"));
        }
        let increasing = self.values.windows(2).all(|w| w[0] < w[1]);
        let decreasing = self.values.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) {
            return Err(Error::invalid(
                "values",
                "sweep values must be strictly monotone",
            ));
        }
        if self.axis == SweepAxis::ChainLength
            && self.values.iter().any(|&v| v < 2.0 || v.fract() != 0.0)
        {
            return Err(Error::invalid(
                "values",
                "chain lengths must be integers >= 2",
            ));
        }
        Ok(())
    }

    fn config_at(&self, value: f64) -> Result<(NoiseConfig, usize)> {
        let mut cfg = self.baseline;
        let mut n = self.n;
        match self.axis {
            SweepAxis::Modes => cfg.num_modes = value,
            SweepAxis::Depolarizing => cfg.depolarizing_p = value,
            SweepAxis::CnotEpsilon => cfg.cnot_epsilon = Some(value),
            SweepAxis::PbsTransmission => {
                cfg.pbs = PbsAmplitudes::from_intensities(
                    value,
                    self.baseline.pbs.r_v * self.baseline.pbs.r_v,
                )?
            }
            SweepAxis::ChainLength => n = value as usize,
        }
        cfg.validate()?;
        Ok((cfg, n))
    }

    fn row(&self, index: usize, value: f64) -> Result<SweepRow> {
        let (cfg, n) = self.config_at(value)?;
        let mut row = SweepRow {
            index,
            value,
            n: None,
            length: None,
            c_end: None,
            fidelity: None,
            postselect_prob: None,
            success_bound: None,
        };
        match self.metric {
            SweepMetric::Length => {
                let threshold = self.threshold.unwrap_or_else(|| cfg.default_threshold());
                row.length =
                    Some(entanglement_length(&cfg, self.basis, threshold, self.cap)?.length);
            }
            SweepMetric::EndToEnd => {
                let report = if n <= DEFAULT_DENSE_CAP {
                    full_report(n, &cfg, GrowthMode::Cluster, self.basis)?
                } else {
                    reduced_report(n, &cfg, self.basis, GrowthMode::Cluster)?
                };
                row.n = Some(n);
                row.c_end = Some(report.c_end);
                row.fidelity = report.fidelity;
                row.postselect_prob = Some(report.postselect_prob());
            }
            SweepMetric::SuccessBound => {
                row.n = Some(n);
                row.success_bound = Some(success_probability_bound(cfg.depolarizing_p, n)?);
            }
        }
        Ok(row)
    }
}

/// Evaluates every grid point in parallel; rows come back in grid order.
pub fn run_sweep(grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    grid.values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| grid.row(i, v))
        .collect()
}
