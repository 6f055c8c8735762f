//! Imperfection models: polarization depolarizing, photon distinguishability
//! in the post-selected beam splitter, source quality conversions, and the
//! two-photon-emission success bound.

use crate::error::{Error, Result};
use crate::optics::{
    exit_port_correction, faulty_entangling_gate, hadamard, identity2, pauli_x, pauli_y, pauli_z,
    pbs_transfer, PbsAmplitudes, TwoQubitProcess,
};
use crate::qstate::{apply_channel, r, CMatrix, DensityMatrix, PureState, C64};

/// Success probability when one photon enters the loop and two reach a detector.
pub const SINGLE_DETECTOR_SUCCESS: f64 = 2.0 / 3.0;

/// Threshold used for entanglement length when the only imperfection is a
/// unitary (imperfect beam splitter) error.
pub const UNITARY_ERROR_THRESHOLD: f64 = 1e-2;

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{p} is not a probability")))
    }
}

fn check_modes(num_modes: f64) -> Result<()> {
    if num_modes >= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("num_modes", format!("{num_modes} < 1")))
    }
}

/// Kraus terms of the single-qubit depolarizing channel.
pub fn depolarizing_terms(p: f64) -> Vec<(f64, CMatrix)> {
    vec![
        (1.0 - p, identity2()),
        (p / 3.0, pauli_x()),
        (p / 3.0, pauli_y()),
        (p / 3.0, pauli_z()),
    ]
}

/// `ρ → (1−p)ρ + p/3 (XρX + YρY + ZρZ)` on one qubit.
pub fn depolarize(state: &DensityMatrix, qubit: usize, p: f64) -> Result<DensityMatrix> {
    check_probability("depolarizing_p", p)?;
    apply_channel(state, &depolarizing_terms(p), &[qubit]).map(|(rho, _)| rho)
}

/// The post-selected beam splitter for partially distinguishable photons.
///
/// With overlap `I = 1/N_m`, the indistinguishable fraction sees the
/// beam-splitter map `T` and the rest sees an equal mixture of `T` and
/// `T·(σ_z⊗1)`, which removes the `hh`/`vv` coherence. For an ideal splitter
/// the two operators are `ε₀/2` and `ε₁/2`. The exit-port correction is
/// applied to both.
pub fn entangling_process(pbs: &PbsAmplitudes, overlap: f64) -> Result<TwoQubitProcess> {
    check_probability("indistinguishability", overlap)?;
    let t = exit_port_correction() * pbs_transfer(pbs);
    let dephased = &t * pauli_z().kronecker(&identity2());
    let q = (1.0 - overlap) / 2.0;
    TwoQubitProcess::new(
        vec![(overlap + q, t), (q, dephased)],
        false,
        format!("pbs(I={overlap})"),
    )
}

/// The distinguishability-limited post-selection for `N_m ≥ 1` modes.
/// `N_m = ∞` (fully distinguishable) is accepted.
pub fn distinguishability_process(num_modes: f64) -> Result<TwoQubitProcess> {
    check_modes(num_modes)?;
    entangling_process(&PbsAmplitudes::ideal(), 1.0 / num_modes)
}

/// Rotates every qubit from the h/v basis into the p/m basis.
pub fn to_pm_basis(state: &DensityMatrix) -> DensityMatrix {
    let n = state.num_qubits();
    let mut u = hadamard();
    for _ in 1..n {
        u = u.kronecker(&hadamard());
    }
    DensityMatrix::from_matrix(&u * state.entries() * &u).expect("basis change keeps invariants")
}

/// `ρ_id = |φ⁺⟩⟨φ⁺|` written in the p/m ordering `pp, pm, mp, mm`.
pub fn rho_indistinguishable_pm() -> DensityMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        m[(i, j)] = r(0.5);
    }
    DensityMatrix::from_matrix(m).unwrap()
}

/// The fully distinguishable post-selected state in the p/m ordering.
pub fn rho_distinguishable_pm() -> DensityMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (i, j) in [
        (0, 0),
        (0, 3),
        (3, 0),
        (3, 3),
        (1, 1),
        (1, 2),
        (2, 1),
        (2, 2),
    ] {
        m[(i, j)] = r(0.25);
    }
    DensityMatrix::from_matrix(m).unwrap()
}

/// Off-pattern magnitude allowed by [`decompose_indistinguishable`].
pub const X_SHAPE_TOL: f64 = 1e-9;

/// Weight `p_id = ρ₁₁ + ρ₄₄ − ρ₂₂ − ρ₃₃` of the indistinguishable component of
/// an X-shaped two-qubit state given in the p/m ordering.
pub fn decompose_indistinguishable(rho_pm: &DensityMatrix) -> Result<f64> {
    if rho_pm.num_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho_pm.dim(),
        });
    }
    let mut off = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if i != j && i + j != 3 {
                off = off.max(rho_pm.get(i, j).norm());
            }
        }
    }
    if off > X_SHAPE_TOL {
        return Err(Error::NotXShaped { magnitude: off });
    }
    let d = |i: usize| rho_pm.get(i, i).re;
    let p_id = d(0) + d(3) - d(1) - d(2);
    if !(-X_SHAPE_TOL..=1.0 + X_SHAPE_TOL).contains(&p_id) {
        return Err(Error::invalid(
            "rho",
            format!("indistinguishable weight {p_id} outside [0, 1]"),
        ));
    }
    Ok(p_id.clamp(0.0, 1.0))
}

/// A single-photon source described by one of its standard parameterizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceModel {
    /// Two-level emitter with lifetime `t1` and coherence time `t2 ≤ 2·t1`.
    TwoLevel { t1: f64, t2: f64 },
    /// Heralded down-conversion with intrinsic and extrinsic Gaussian widths.
    HeraldedSpdc { sigma_int: f64, sigma_ext: f64 },
    /// Directly specified `g²_{p,m}(0)` in `[0, 1)`.
    Direct { g2: f64 },
}

/// Mutually consistent indistinguishability, `g²(0)` and number of modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceQuality {
    pub indistinguishability: f64,
    pub g2: f64,
    pub num_modes: f64,
}

pub fn source_indistinguishability(src: &SourceModel) -> Result<SourceQuality> {
    let overlap = match *src {
        SourceModel::TwoLevel { t1, t2 } => {
            if t1.is_nan() || t1 <= 0.0 || t2 < 0.0 || t2 > 2.0 * t1 {
                return Err(Error::invalid(
                    "t2",
                    format!("need 0 ≤ T2 ≤ 2·T1, got T1={t1}, T2={t2}"),
                ));
            }
            t2 / (2.0 * t1)
        }
        SourceModel::HeraldedSpdc {
            sigma_int,
            sigma_ext,
        } => {
            if sigma_int < 0.0 || sigma_ext < 0.0 {
                return Err(Error::invalid(
                    "sigma",
                    "spectral widths must be non-negative",
                ));
            }
            let sigma = sigma_int.hypot(sigma_ext);
            if sigma == 0.0 {
                return Err(Error::InfiniteModes);
            }
            sigma_int / sigma
        }
        SourceModel::Direct { g2 } => {
            if !(0.0..1.0).contains(&g2) {
                return Err(Error::invalid("g2", format!("{g2} outside [0, 1)")));
            }
            1.0 - g2
        }
    };
    if overlap <= 0.0 {
        return Err(Error::InfiniteModes);
    }
    Ok(SourceQuality {
        indistinguishability: overlap,
        g2: 1.0 - overlap,
        num_modes: 1.0 / overlap,
    })
}

/// Lower bound on the probability that an `n`-photon chain is generated
/// without a two-photon emission spoiling it, for emission probability `p`.
pub fn success_probability_bound(p: f64, n: usize) -> Result<f64> {
    check_probability("two_photon_p", p)?;
    if n == 0 {
        return Err(Error::invalid("n", "chain length must be at least 1"));
    }
    let nf = n as f64;
    let clean = (1.0 - p).powi(n as i32);
    let spoiled = 1.0 - clean;
    Ok(clean + spoiled * (nf - 1.0) / nf / 3.0 + spoiled / nf * SINGLE_DETECTOR_SUCCESS)
}

/// The complete imperfection vector for one growth run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Number of modes `N_m ≥ 1`; may be infinite.
    pub num_modes: f64,
    /// Depolarizing probability applied to every fresh photon.
    pub depolarizing_p: f64,
    pub pbs: PbsAmplitudes,
    /// When set, the faulty CNOT replaces the beam-splitter post-selection.
    pub cnot_epsilon: Option<f64>,
    /// Two-photon emission probability; only enters the success bound.
    pub two_photon_p: f64,
    /// Birefringent phase (radians) picked up by the loop photon each round.
    pub loop_phase: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseConfig {
    pub fn ideal() -> Self {
        Self {
            num_modes: 1.0,
            depolarizing_p: 0.0,
            pbs: PbsAmplitudes::ideal(),
            cnot_epsilon: None,
            two_photon_p: 0.0,
            loop_phase: 0.0,
        }
    }

    pub fn with_modes(mut self, num_modes: f64) -> Self {
        self.num_modes = num_modes;
        self
    }

    pub fn with_depolarizing(mut self, p: f64) -> Self {
        self.depolarizing_p = p;
        self
    }

    pub fn with_pbs(mut self, pbs: PbsAmplitudes) -> Self {
        self.pbs = pbs;
        self
    }

    pub fn with_cnot_epsilon(mut self, epsilon: f64) -> Self {
        self.cnot_epsilon = Some(epsilon);
        self
    }

    pub fn with_two_photon(mut self, p: f64) -> Self {
        self.two_photon_p = p;
        self
    }

    pub fn with_loop_phase(mut self, phi: f64) -> Self {
        self.loop_phase = phi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_modes(self.num_modes)?;
        check_probability("depolarizing_p", self.depolarizing_p)?;
        check_probability("two_photon_p", self.two_photon_p)?;
        PbsAmplitudes::new(self.pbs.t_h, self.pbs.r_h, self.pbs.t_v, self.pbs.r_v)?;
        if let Some(eps) = self.cnot_epsilon {
            if !eps.is_finite() {
                return Err(Error::invalid("cnot_epsilon", "must be finite"));
            }
        }
        if !self.loop_phase.is_finite() {
            return Err(Error::invalid("loop_phase", "must be finite"));
        }
        Ok(())
    }

    /// True when the beam splitter is the only imperfection.
    pub fn is_unitary_pbs_only(&self) -> bool {
        !self.pbs.is_ideal()
            && self.num_modes == 1.0
            && self.depolarizing_p == 0.0
            && self.cnot_epsilon.is_none()
    }

    /// 1e-2 for the pure imperfect-splitter case, 0 otherwise.
    pub fn default_threshold(&self) -> f64 {
        if self.is_unitary_pbs_only() {
            UNITARY_ERROR_THRESHOLD
        } else {
            0.0
        }
    }

    /// Polarization each fresh photon is prepared in before depolarization:
    /// `|p⟩` for the beam-splitter gate and `|h⟩` for the CNOT.
    pub fn fresh_photon(&self) -> PureState {
        if self.cnot_epsilon.is_some() {
            PureState::h()
        } else {
            PureState::p()
        }
    }

    /// The two-qubit process acting on `(fresh, loop)` at each step.
    pub fn entangler(&self) -> Result<TwoQubitProcess> {
        self.validate()?;
        match self.cnot_epsilon {
            Some(eps) => Ok(faulty_entangling_gate(eps)),
            None => entangling_process(&self.pbs, 1.0 / self.num_modes),
        }
    }

    /// The fresh photon after the depolarizing channel.
    pub fn fresh_state(&self) -> Result<DensityMatrix> {
        depolarize(&self.fresh_photon().to_density(), 0, self.depolarizing_p)
    }
}

/// Bloch vector `(⟨X⟩, ⟨Y⟩, ⟨Z⟩)` of a single-qubit state.
pub fn bloch_vector(state: &DensityMatrix) -> Result<[f64; 3]> {
    if state.num_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: state.dim(),
        });
    }
    let e = |op: CMatrix| -> Result<f64> { state.expectation(&op).map(|z: C64| z.re) };
    Ok([e(pauli_x())?, e(pauli_y())?, e(pauli_z())?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{EXACT_TOL, ROUNDOFF_TOL};

    fn pp() -> DensityMatrix {
        PureState::from_label("pp").unwrap().to_density()
    }

    fn phi_plus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(vec![r(s), r(0.0), r(0.0), r(s)])
            .unwrap()
            .to_density()
    }

    #[test]
    fn depolarize_limits() {
        let rho = PureState::from_label("r").unwrap().to_density();
        assert!(depolarize(&rho, 0, 0.0).unwrap().max_deviation(&rho) < EXACT_TOL);
        let mixed = depolarize(&rho, 0, 0.75).unwrap();
        assert!(mixed.max_deviation(&DensityMatrix::maximally_mixed(1).unwrap()) < EXACT_TOL);
        assert!(depolarize(&rho, 0, 1.5).is_err());
    }

    #[test]
    fn depolarize_shrinks_bloch_vector() {
        // Each of the two other Paulis flips the x component: 1 − 4p/3.
        let out = depolarize(&PureState::p().to_density(), 0, 0.1).unwrap();
        let b = bloch_vector(&out).unwrap();
        assert!((b[0] - 13.0 / 15.0).abs() < EXACT_TOL);
        assert!(b[1].abs() < EXACT_TOL && b[2].abs() < EXACT_TOL);
    }

    #[test]
    fn ideal_distinguishability_gives_phi_plus() {
        let (out, prob) = distinguishability_process(1.0)
            .unwrap()
            .apply(&pp(), [0, 1])
            .unwrap();
        assert!(out.max_deviation(&phi_plus()) < EXACT_TOL);
        assert!((prob - 0.5).abs() < EXACT_TOL);
    }

    #[test]
    fn fully_distinguishable_limit() {
        let (out, _) = distinguishability_process(f64::INFINITY)
            .unwrap()
            .apply(&pp(), [0, 1])
            .unwrap();
        assert!(to_pm_basis(&out).max_deviation(&rho_distinguishable_pm()) < EXACT_TOL);
    }

    #[test]
    fn one_and_a_half_modes() {
        let (out, _) = distinguishability_process(1.5)
            .unwrap()
            .apply(&pp(), [0, 1])
            .unwrap();
        let pm = to_pm_basis(&out);
        let expected = DensityMatrix::mixture(&[
            (2.0 / 3.0, &rho_indistinguishable_pm()),
            (1.0 / 3.0, &rho_distinguishable_pm()),
        ])
        .unwrap();
        assert!(pm.max_deviation(&expected) < EXACT_TOL);
        assert!((decompose_indistinguishable(&pm).unwrap() - 2.0 / 3.0).abs() < EXACT_TOL);
    }

    #[test]
    fn reference_matrices_are_the_pm_images() {
        assert!(to_pm_basis(&phi_plus()).max_deviation(&rho_indistinguishable_pm()) < EXACT_TOL);
        let classical = DensityMatrix::mixture(&[
            (0.5, &PureState::from_label("hh").unwrap().to_density()),
            (0.5, &PureState::from_label("vv").unwrap().to_density()),
        ])
        .unwrap();
        assert!(to_pm_basis(&classical).max_deviation(&rho_distinguishable_pm()) < EXACT_TOL);
    }

    #[test]
    fn decomposition_values() {
        assert!(
            (decompose_indistinguishable(&rho_indistinguishable_pm()).unwrap() - 1.0).abs()
                < EXACT_TOL
        );
        assert!(
            decompose_indistinguishable(&rho_distinguishable_pm())
                .unwrap()
                .abs()
                < EXACT_TOL
        );
        let mix = DensityMatrix::mixture(&[
            (0.6, &rho_indistinguishable_pm()),
            (0.4, &rho_distinguishable_pm()),
        ])
        .unwrap();
        assert!((decompose_indistinguishable(&mix).unwrap() - 0.6).abs() < EXACT_TOL);
        let skewed = PureState::from_label("hp").unwrap().to_density();
        assert!(matches!(
            decompose_indistinguishable(&skewed),
            Err(Error::NotXShaped { .. })
        ));
    }

    #[test]
    fn distinguishability_is_not_trace_preserving() {
        let p = distinguishability_process(2.0).unwrap();
        assert!(!p.is_trace_preserving());
        let w: f64 = p.terms().iter().map(|(w, _)| w).sum();
        assert!((w - 1.0).abs() < EXACT_TOL);
        assert!(distinguishability_process(0.5).is_err());
    }

    #[test]
    fn source_conversions() {
        let direct = source_indistinguishability(&SourceModel::Direct { g2: 0.0 }).unwrap();
        assert_eq!((direct.indistinguishability, direct.num_modes), (1.0, 1.0));

        let tls = source_indistinguishability(&SourceModel::TwoLevel { t1: 1.0, t2: 2.0 }).unwrap();
        assert!((tls.indistinguishability - 1.0).abs() < EXACT_TOL);

        let spdc = source_indistinguishability(&SourceModel::HeraldedSpdc {
            sigma_int: 1.0,
            sigma_ext: 5f64.sqrt() / 2.0,
        })
        .unwrap();
        assert!((spdc.indistinguishability - 2.0 / 3.0).abs() < EXACT_TOL);
        assert!((spdc.num_modes - 1.5).abs() < EXACT_TOL);

        assert_eq!(
            source_indistinguishability(&SourceModel::HeraldedSpdc {
                sigma_int: 0.0,
                sigma_ext: 1.0
            }),
            Err(Error::InfiniteModes)
        );
        assert!(source_indistinguishability(&SourceModel::TwoLevel { t1: 1.0, t2: 3.0 }).is_err());
        assert!(source_indistinguishability(&SourceModel::Direct { g2: 1.0 }).is_err());
    }

    #[test]
    fn g2_relation_holds_for_every_model() {
        for src in [
            SourceModel::TwoLevel { t1: 2.0, t2: 1.3 },
            SourceModel::HeraldedSpdc {
                sigma_int: 0.4,
                sigma_ext: 0.9,
            },
            SourceModel::Direct { g2: 0.37 },
        ] {
            let q = source_indistinguishability(&src).unwrap();
            assert!((q.g2 - (q.num_modes - 1.0) / q.num_modes).abs() < EXACT_TOL);
            assert!((q.indistinguishability - 1.0 / q.num_modes).abs() < EXACT_TOL);
        }
    }

    #[test]
    fn success_bound_values() {
        for n in [1, 2, 10, 1000] {
            assert_eq!(success_probability_bound(0.0, n).unwrap(), 1.0);
        }
        assert!((success_probability_bound(0.01, 2).unwrap() - 0.99005).abs() < 1e-10);
        assert!(success_probability_bound(0.01, 0).is_err());
        assert!(success_probability_bound(-0.1, 3).is_err());
    }

    #[test]
    fn config_routes() {
        let cfg = NoiseConfig::ideal();
        assert_eq!(cfg.fresh_photon(), PureState::p());
        assert!(!cfg.entangler().unwrap().is_trace_preserving());
        let cnot = cfg.with_cnot_epsilon(0.1);
        assert_eq!(cnot.fresh_photon(), PureState::h());
        assert!(cnot.entangler().unwrap().is_trace_preserving());
        assert!(NoiseConfig::ideal().with_modes(0.9).validate().is_err());
        assert!(NoiseConfig::ideal()
            .with_depolarizing(2.0)
            .entangler()
            .is_err());
    }

    #[test]
    fn default_thresholds() {
        assert_eq!(NoiseConfig::ideal().default_threshold(), 0.0);
        let pbs = NoiseConfig::ideal().with_pbs(PbsAmplitudes::typical());
        assert_eq!(pbs.default_threshold(), UNITARY_ERROR_THRESHOLD);
        assert_eq!(pbs.with_modes(1.1).default_threshold(), 0.0);
    }

    #[test]
    fn fresh_state_is_valid() {
        let rho = NoiseConfig::ideal()
            .with_depolarizing(0.3)
            .fresh_state()
            .unwrap();
        rho.validate().unwrap();
        assert!((rho.purity() - (1.0 + (1.0 - 0.4f64).powi(2)) / 2.0).abs() < ROUNDOFF_TOL);
    }
}
