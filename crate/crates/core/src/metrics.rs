//! Figures of merit: concurrence, end-to-end concurrence, entanglement
//! length, fidelity and the p/m-basis interference visibilities.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::growth::{grow_reduced, GrowthMode, MeasurementBasis};
use crate::noise::{to_pm_basis, NoiseConfig};
use crate::optics::pauli_y;
use crate::qstate::{partial_trace, project, DensityMatrix, PureState, C64};

/// Eigenvalues of ρ below this are treated as exact zeros when building the
/// square-root factor for the concurrence.
const EIGEN_CLIP: f64 = 1e-14;

/// Concurrence differences within this margin of the threshold count as not above it.
pub const LENGTH_TOL: f64 = 1e-12;

/// Default search cap for [`entanglement_length`].
pub const DEFAULT_LENGTH_CAP: usize = 4096;

fn require_qubits(state: &DensityMatrix, n: usize) -> Result<()> {
    if state.num_qubits() == n {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: 1 << n,
            found: state.dim(),
        })
    }
}

/// Wootters concurrence of a two-qubit state.
///
/// The `λᵢ` are obtained as the singular values of `Φᵀ(σ_y⊗σ_y)Φ` with
/// `ρ = ΦΦ†`, which equal the square roots of the eigenvalues of
/// `ρ(σ_y⊗σ_y)ρ*(σ_y⊗σ_y)` but avoid taking square roots of roundoff.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    require_qubits(rho, 2)?;
    let herm = (rho.entries() + rho.entries().adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut factor = DMatrix::<C64>::zeros(4, 4);
    for (k, &mu) in eig.eigenvalues.iter().enumerate() {
        if mu > EIGEN_CLIP {
            let col = eig.eigenvectors.column(k) * C64::new(mu.sqrt(), 0.0);
            factor.set_column(k, &col);
        }
    }
    let yy = pauli_y().kronecker(&pauli_y());
    let tau = factor.transpose() * yy * &factor;
    let mut lambda: Vec<f64> = tau.singular_values().iter().copied().collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    let c = lambda[0] - lambda[1] - lambda[2] - lambda[3];
    Ok(c.clamp(0.0, 1.0))
}

/// Closed-form concurrence of an X-shaped state:
/// `2·max(0, |ρ₁₄| − √(ρ₂₂ρ₃₃), |ρ₂₃| − √(ρ₁₁ρ₄₄))`.
pub fn x_state_concurrence(rho: &DensityMatrix) -> Result<f64> {
    require_qubits(rho, 2)?;
    let d = |i: usize| rho.get(i, i).re.max(0.0);
    let a = rho.get(0, 3).norm() - (d(1) * d(2)).sqrt();
    let b = rho.get(1, 2).norm() - (d(0) * d(3)).sqrt();
    Ok((2.0 * a.max(b)).clamp(0.0, 1.0))
}

/// Concurrence of the end pair and the probability of the conditioning outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndToEnd {
    pub concurrence: f64,
    pub probability: f64,
}

/// Projects qubits `1..n−1` onto the basis outcome, traces them out and
/// returns the concurrence of the remaining pair `(0, n−1)`.
pub fn end_to_end_concurrence(state: &DensityMatrix, basis: MeasurementBasis) -> Result<EndToEnd> {
    let n = state.num_qubits();
    if n < 2 {
        return Err(Error::invalid("state", "need at least two qubits"));
    }
    let proj = basis.projector();
    let mut rho = state.clone();
    let mut probability = 1.0;
    for q in 1..n - 1 {
        let (next, p) = project(&rho, q, &proj)?;
        rho = next;
        probability *= p;
    }
    let pair = partial_trace(&rho, &[0, n - 1])?;
    Ok(EndToEnd {
        concurrence: concurrence(&pair)?,
        probability,
    })
}

/// `⟨ψ|ρ|ψ⟩`, clipped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, reference: &PureState) -> Result<f64> {
    if rho.num_qubits() != reference.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: reference.amplitudes().len(),
        });
    }
    let psi = reference.amplitudes();
    let value = (psi.adjoint() * rho.entries() * psi)[(0, 0)].re;
    Ok(value.clamp(0.0, 1.0))
}

/// Outcome of an entanglement-length search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthOutcome {
    Finite(usize),
    /// The cap was reached with the concurrence still above threshold.
    CapReached(usize),
}

impl LengthOutcome {
    pub fn value(&self) -> usize {
        match *self {
            LengthOutcome::Finite(l) | LengthOutcome::CapReached(l) => l,
        }
    }

    pub fn is_cap(&self) -> bool {
        matches!(self, LengthOutcome::CapReached(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementLengthResult {
    pub length: LengthOutcome,
    pub threshold: f64,
    pub basis: MeasurementBasis,
    /// Last chain length with concurrence above threshold; `None` when even
    /// the two-photon pair is at or below it (the length is then reported as 2).
    pub last_above: Option<usize>,
    /// First chain length at or below threshold, if one was reached.
    pub first_below: Option<usize>,
}

/// Longest chain whose end pair keeps concurrence above `threshold`,
/// grown with the reduced backend in cluster mode.
pub fn entanglement_length(
    cfg: &NoiseConfig,
    basis: MeasurementBasis,
    threshold: f64,
    cap: usize,
) -> Result<EntanglementLengthResult> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::invalid("threshold", format!("{threshold} < 0")));
    }
    if cap < 2 {
        return Err(Error::invalid("cap", "cap must be at least 2"));
    }
    let mut last_above = None;
    for report in grow_reduced(cap, cfg, basis, GrowthMode::Cluster)? {
        let report = report?;
        if report.c_end - threshold > LENGTH_TOL {
            last_above = Some(report.n);
        } else {
            return Ok(EntanglementLengthResult {
                length: LengthOutcome::Finite(last_above.unwrap_or(2)),
                threshold,
                basis,
                last_above,
                first_below: Some(report.n),
            });
        }
    }
    Ok(EntanglementLengthResult {
        length: LengthOutcome::CapReached(cap),
        threshold,
        basis,
        last_above,
        first_below: None,
    })
}

/// p/m-basis outcome probabilities and the parity-weighted visibility.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityReport {
    /// Two-photon visibility; for a three-photon report this is the
    /// visibility of the embedded pair `(0, 1)`.
    pub v2: f64,
    pub v3: Option<f64>,
    /// Labels like `"pm"` (qubit 0 first) with their probabilities.
    pub outcome_probs: Vec<(String, f64)>,
    /// Loop phase the state was grown with, when known.
    pub phase: Option<f64>,
}

impl VisibilityReport {
    /// `v3` when present, `v2` otherwise.
    pub fn visibility(&self) -> f64 {
        self.v3.unwrap_or(self.v2)
    }

    pub fn probability(&self, label: &str) -> Option<f64> {
        self.outcome_probs
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| *p)
    }
}

/// p/m-basis labels, qubit 0 first.
pub fn pm_label(index: usize, num_qubits: usize) -> String {
    PureState::basis_label(index, num_qubits)
        .chars()
        .map(|ch| if ch == 'h' { 'p' } else { 'm' })
        .collect()
}

/// Outcome probabilities of measuring every qubit in the p/m basis.
pub fn pm_probabilities(rho: &DensityMatrix) -> Vec<(String, f64)> {
    let n = rho.num_qubits();
    to_pm_basis(rho)
        .populations()
        .into_iter()
        .enumerate()
        .map(|(i, p)| (pm_label(i, n), p.max(0.0)))
        .collect()
}

/// `Σ (−1)^{#m} P`: positive for an even number of `m` outcomes.
pub fn parity_visibility(probs: &[(String, f64)]) -> f64 {
    probs
        .iter()
        .map(|(label, p)| {
            if label.chars().filter(|&ch| ch == 'm').count() % 2 == 0 {
                *p
            } else {
                -*p
            }
        })
        .sum()
}

/// `V₂ = P_pp + P_mm − (P_pm + P_mp)`.
pub fn visibility2(rho: &DensityMatrix) -> Result<VisibilityReport> {
    require_qubits(rho, 2)?;
    let outcome_probs = pm_probabilities(rho);
    Ok(VisibilityReport {
        v2: parity_visibility(&outcome_probs),
        v3: None,
        outcome_probs,
        phase: None,
    })
}

/// `V₃ = P_ppp + P_pmm + P_mpm + P_mmp − (P_ppm + P_pmp + P_mpp + P_mmm)`.
pub fn visibility3(rho: &DensityMatrix) -> Result<VisibilityReport> {
    require_qubits(rho, 3)?;
    let outcome_probs = pm_probabilities(rho);
    let pair = partial_trace(rho, &[0, 1])?;
    Ok(VisibilityReport {
        v2: parity_visibility(&pm_probabilities(&pair)),
        v3: Some(parity_visibility(&outcome_probs)),
        outcome_probs,
        phase: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{distinguishability_process, rho_distinguishable_pm};
    use crate::optics::{hadamard, phase, waveplate};
    use crate::qstate::{apply_unitary, r, EXACT_TOL};

    fn dm(label: &str) -> DensityMatrix {
        PureState::from_label(label).unwrap().to_density()
    }

    fn bell(k: usize) -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let amps = match k {
            0 => [s, 0.0, 0.0, s],
            1 => [s, 0.0, 0.0, -s],
            2 => [0.0, s, s, 0.0],
            _ => [0.0, s, -s, 0.0],
        };
        PureState::new(amps.iter().map(|&a| r(a)).collect())
            .unwrap()
            .to_density()
    }

    fn classical() -> DensityMatrix {
        DensityMatrix::mixture(&[(0.5, &dm("hh")), (0.5, &dm("vv"))]).unwrap()
    }

    #[test]
    fn concurrence_of_bell_states() {
        for k in 0..4 {
            assert!(
                (concurrence(&bell(k)).unwrap() - 1.0).abs() < 1e-12,
                "bell {k}"
            );
        }
    }

    #[test]
    fn concurrence_of_separable_states() {
        assert!(concurrence(&classical()).unwrap() < 1e-12);
        for label in ["hh", "pm", "rl", "vp"] {
            assert!(concurrence(&dm(label)).unwrap() < 1e-12, "{label}");
        }
        assert!(concurrence(&DensityMatrix::maximally_mixed(2).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn concurrence_of_distinguishability_mixtures() {
        for p_id in [0.0, 0.1, 0.5, 2.0 / 3.0, 0.99, 1.0] {
            let rho =
                DensityMatrix::mixture(&[(p_id, &bell(0)), (1.0 - p_id, &classical())]).unwrap();
            let c = concurrence(&rho).unwrap();
            assert!((c - p_id).abs() < 1e-12, "p_id={p_id}: {c}");
            assert!((x_state_concurrence(&rho).unwrap() - p_id).abs() < 1e-12);
        }
    }

    #[test]
    fn concurrence_of_partially_entangled_pure_state() {
        // cos θ|hh> + sin θ|vv> has C = sin 2θ.
        for theta in [0.1, 0.4, 0.7] {
            let st = PureState::new(vec![r(f64::cos(theta)), r(0.0), r(0.0), r(f64::sin(theta))])
                .unwrap();
            let c = concurrence(&st.to_density()).unwrap();
            assert!((c - (2.0 * theta).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn concurrence_rejects_wrong_size() {
        assert!(concurrence(&dm("hhh")).is_err());
    }

    #[test]
    fn concurrence_local_unitary_invariance() {
        let rho = DensityMatrix::mixture(&[(0.7, &bell(2)), (0.3, &dm("hp"))]).unwrap();
        let base = concurrence(&rho).unwrap();
        let rotated = apply_unitary(&rho, &waveplate(0.3), &[0]).unwrap();
        let rotated = apply_unitary(&rotated, &(phase(1.1) * hadamard()), &[1]).unwrap();
        assert!((concurrence(&rotated).unwrap() - base).abs() < 1e-10);
    }

    #[test]
    fn end_to_end_trivial_cases() {
        let pair = end_to_end_concurrence(&bell(0), MeasurementBasis::YUp).unwrap();
        assert!((pair.concurrence - 1.0).abs() < 1e-12);
        assert_eq!(pair.probability, 1.0);
        let ghz = PureState::new(
            [0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.5, -0.5]
                .iter()
                .map(|&a| r(a))
                .collect(),
        )
        .unwrap()
        .to_density();
        let e = end_to_end_concurrence(&ghz, MeasurementBasis::YUp).unwrap();
        assert!((e.concurrence - 1.0).abs() < 1e-12);
        assert!((e.probability - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_cases() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = PureState::new(vec![r(s), r(0.0), r(0.0), r(s)]).unwrap();
        assert!((fidelity(&phi.to_density(), &phi).unwrap() - 1.0).abs() < EXACT_TOL);
        let rho_d = to_pm_basis(&rho_distinguishable_pm());
        assert!((fidelity(&rho_d, &phi).unwrap() - 0.5).abs() < EXACT_TOL);
        assert!(fidelity(&dm("h"), &phi).is_err());
    }

    #[test]
    fn visibility2_cases() {
        let v = visibility2(&bell(0)).unwrap();
        assert!((v.v2 - 1.0).abs() < EXACT_TOL);
        assert!((v.probability("pp").unwrap() - 0.5).abs() < EXACT_TOL);
        assert!(v.probability("pm").unwrap().abs() < EXACT_TOL);
        assert!(visibility2(&classical()).unwrap().v2.abs() < EXACT_TOL);

        let (out, _) = distinguishability_process(1.5)
            .unwrap()
            .apply(&dm("pp"), [0, 1])
            .unwrap();
        assert!((visibility2(&out).unwrap().v2 - 2.0 / 3.0).abs() < EXACT_TOL);
    }

    #[test]
    fn visibility_probabilities_sum_to_one() {
        let rho = DensityMatrix::mixture(&[(0.4, &dm("hpr")), (0.6, &dm("mvl"))]).unwrap();
        let v = visibility3(&rho).unwrap();
        let total: f64 = v.outcome_probs.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert_eq!(v.outcome_probs.len(), 8);
        assert_eq!(v.outcome_probs[3].0, "pmm");
    }

    #[test]
    fn pm_labels() {
        assert_eq!(pm_label(0, 2), "pp");
        assert_eq!(pm_label(2, 2), "mp");
        assert_eq!(pm_label(7, 3), "mmm");
    }

    #[test]
    fn length_argument_validation() {
        let cfg = NoiseConfig::ideal();
        assert!(entanglement_length(&cfg, MeasurementBasis::YUp, -1.0, 10).is_err());
        assert!(entanglement_length(&cfg, MeasurementBasis::YUp, 0.0, 1).is_err());
    }
}
