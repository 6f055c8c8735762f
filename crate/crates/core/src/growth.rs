//! Sequential chain growth through the loop.
//!
//! Qubit 0 is always the photon currently stored in the loop and the last
//! qubit is the first photon, which stays at the fixed end of the chain.
//! Each step rotates the loop photon, prepends a fresh photon, runs the
//! entangling process on `(fresh, loop)` and applies the loop phase. After
//! the gate the fresh photon stays in the loop and the old one leaves.

use crate::error::{Error, Result};
use crate::metrics::{concurrence, end_to_end_concurrence, fidelity};
use crate::noise::NoiseConfig;
use crate::optics::{entangling_gate, hadamard, phase, TwoQubitProcess};
use crate::qstate::{
    apply_unitary, partial_trace, project, tensor_with_cap, CMatrix, DensityMatrix, Projector,
    PureState, DEFAULT_DENSE_CAP, MAX_DENSE_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GrowthMode {
    /// The loop photon passes the waveplate every round.
    Cluster,
    /// The waveplate acts only before the first gate.
    Ghz,
}

impl GrowthMode {
    fn rotates(self, step: usize) -> bool {
        match self {
            GrowthMode::Cluster => true,
            GrowthMode::Ghz => step == 0,
        }
    }
}

/// Outcome that the middle photons are conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementBasis {
    /// Circular `|↑y⟩ = (|h⟩ + i|v⟩)/√2`.
    YUp,
    /// Diagonal `|p⟩`.
    PM,
}

impl MeasurementBasis {
    pub fn projector(self) -> Projector {
        match self {
            MeasurementBasis::YUp => Projector::up_y(),
            MeasurementBasis::PM => Projector::p(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeasurementBasis::YUp => "y",
            MeasurementBasis::PM => "pm",
        }
    }
}

/// Figures of merit after growing to `n` photons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritReport {
    pub n: usize,
    /// Concurrence of the end pair after conditioning the middle photons.
    pub c_end: f64,
    /// Overlap with the ideal chain; only available from the dense backend.
    pub fidelity: Option<f64>,
    /// Natural log of the cumulative gate post-selection probability.
    pub ln_postselect: f64,
    /// Natural log of the probability of the conditioning outcome.
    ///
    /// The reduced backend measures each photon as it leaves, so there the
    /// gate probabilities are conditional on earlier outcomes; the sum
    /// `ln_postselect + ln_conditioning` agrees between backends.
    pub ln_conditioning: f64,
    pub basis: MeasurementBasis,
}

impl MeritReport {
    pub fn postselect_prob(&self) -> f64 {
        self.ln_postselect.exp()
    }
}

fn check_length(n: usize, cap: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(
            "n",
            format!("chain needs at least 2 photons, got {n}"),
        ));
    }
    if n > cap {
        return Err(Error::Capacity { requested: n, cap });
    }
    Ok(())
}

/// The noiseless chain `|φ_N⟩` as a pure state.
pub fn ideal_chain(n: usize, mode: GrowthMode) -> Result<PureState> {
    check_length(n, MAX_DENSE_CAP)?;
    let gate = entangling_gate();
    let mut state = PureState::h();
    for step in 0..n - 1 {
        if mode.rotates(step) {
            state = state.apply(&hadamard(), &[0])?;
        }
        state = PureState::h().tensor(&state)?.apply(&gate, &[0, 1])?;
    }
    Ok(state)
}

/// State of a dense growth run together with its post-selection record.
#[derive(Debug, Clone, PartialEq)]
pub struct FullGrowth {
    pub state: DensityMatrix,
    /// Post-selection probability of each gate, in order.
    pub step_probs: Vec<f64>,
}

impl FullGrowth {
    pub fn ln_postselect(&self) -> f64 {
        self.step_probs.iter().map(|p| p.ln()).sum()
    }

    pub fn postselect_prob(&self) -> f64 {
        self.step_probs.iter().product()
    }
}

#[derive(Debug)]
struct Stepper {
    process: TwoQubitProcess,
    fresh: DensityMatrix,
    phase: Option<CMatrix>,
    mode: GrowthMode,
    cap: usize,
}

impl Stepper {
    fn new(cfg: &NoiseConfig, mode: GrowthMode, cap: usize) -> Result<Self> {
        Ok(Self {
            process: cfg.entangler()?,
            fresh: cfg.fresh_state()?,
            phase: (cfg.loop_phase != 0.0).then(|| phase(cfg.loop_phase)),
            mode,
            cap,
        })
    }

    /// One growth step; returns the gate post-selection probability.
    fn step(&self, rho: &DensityMatrix, step: usize) -> Result<(DensityMatrix, f64)> {
        let rotated;
        let rho = if self.mode.rotates(step) {
            rotated = apply_unitary(rho, &hadamard(), &[0])?;
            &rotated
        } else {
            rho
        };
        let joined = tensor_with_cap(&self.fresh, rho, self.cap)?;
        let (mut out, prob) = self.process.apply(&joined, [0, 1])?;
        if let Some(ph) = &self.phase {
            out = apply_unitary(&out, ph, &[0])?;
        }
        Ok((out, prob))
    }
}

/// Dense growth to `n` photons with the default capacity.
pub fn grow_full(n: usize, cfg: &NoiseConfig, mode: GrowthMode) -> Result<FullGrowth> {
    grow_full_with_cap(n, cfg, mode, DEFAULT_DENSE_CAP)
}

pub fn grow_full_with_cap(
    n: usize,
    cfg: &NoiseConfig,
    mode: GrowthMode,
    cap: usize,
) -> Result<FullGrowth> {
    if cap > MAX_DENSE_CAP {
        return Err(Error::Capacity {
            requested: cap,
            cap: MAX_DENSE_CAP,
        });
    }
    check_length(n, cap)?;
    let stepper = Stepper::new(cfg, mode, cap)?;
    let mut rho = PureState::h().to_density();
    let mut step_probs = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let (next, prob) = stepper.step(&rho, step)?;
        rho = next;
        step_probs.push(prob);
    }
    Ok(FullGrowth {
        state: rho,
        step_probs,
    })
}

/// Dense growth followed by the end-to-end and fidelity figures of merit.
pub fn full_report(
    n: usize,
    cfg: &NoiseConfig,
    mode: GrowthMode,
    basis: MeasurementBasis,
) -> Result<MeritReport> {
    let grown = grow_full(n, cfg, mode)?;
    let e2e = end_to_end_concurrence(&grown.state, basis)?;
    let reference = ideal_chain(n, mode)?;
    Ok(MeritReport {
        n,
        c_end: e2e.concurrence,
        fidelity: Some(fidelity(&grown.state, &reference)?),
        ln_postselect: grown.ln_postselect(),
        ln_conditioning: e2e.probability.ln(),
        basis,
    })
}

/// Memory-bounded growth that keeps only the loop photon and the chain end.
///
/// After each step the departing photon is projected onto the conditioning
/// outcome and traced out. Measuring a photon that no later operation
/// touches commutes with the rest of the growth, so the end-pair state
/// equals the dense result.
#[derive(Debug)]
pub struct ReducedGrowth {
    stepper: Stepper,
    projector: Projector,
    basis: MeasurementBasis,
    rho: DensityMatrix,
    n: usize,
    n_max: usize,
    ln_postselect: f64,
    ln_conditioning: f64,
    failed: bool,
}

/// Iterator over the merit reports for `n = 2, …, n_max`.
pub fn grow_reduced(
    n_max: usize,
    cfg: &NoiseConfig,
    basis: MeasurementBasis,
    mode: GrowthMode,
) -> Result<ReducedGrowth> {
    check_length(n_max, usize::MAX)?;
    Ok(ReducedGrowth {
        stepper: Stepper::new(cfg, mode, 3)?,
        projector: basis.projector(),
        basis,
        rho: PureState::h().to_density(),
        n: 1,
        n_max,
        ln_postselect: 0.0,
        ln_conditioning: 0.0,
        failed: false,
    })
}

impl ReducedGrowth {
    fn advance(&mut self) -> Result<MeritReport> {
        let (mut out, prob) = self.stepper.step(&self.rho, self.n - 1)?;
        self.ln_postselect += prob.ln();
        if out.num_qubits() == 3 {
            let (measured, cond) = project(&out, 1, &self.projector)?;
            self.ln_conditioning += cond.ln();
            out = partial_trace(&measured, &[0, 2])?;
        }
        self.rho = out;
        self.n += 1;
        Ok(MeritReport {
            n: self.n,
            c_end: concurrence(&self.rho)?,
            fidelity: None,
            ln_postselect: self.ln_postselect,
            ln_conditioning: self.ln_conditioning,
            basis: self.basis,
        })
    }

    /// Current `(loop, chain end)` pair state.
    pub fn pair_state(&self) -> &DensityMatrix {
        &self.rho
    }
}

impl Iterator for ReducedGrowth {
    type Item = Result<MeritReport>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.n >= self.n_max {
            return None;
        }
        let out = self.advance();
        self.failed = out.is_err();
        Some(out)
    }
}

/// Merit report of the reduced backend at exactly `n` photons.
pub fn reduced_report(
    n: usize,
    cfg: &NoiseConfig,
    basis: MeasurementBasis,
    mode: GrowthMode,
) -> Result<MeritReport> {
    let mut last = None;
    for report in grow_reduced(n, cfg, basis, mode)? {
        last = Some(report?);
    }
    last.ok_or_else(|| Error::invalid("n", "no growth step was taken"))
}
