//! Polarization optics: waveplates, the CNOT family, and post-selected
//! beam-splitter processes.
//!
//! Two-qubit operators act on the ordered pair `(fresh, loop)`: qubit 0 is
//! the photon arriving from the source and qubit 1 is the photon returning
//! through the delay loop. After the gate, qubit 0 stays in the loop and
//! qubit 1 leaves towards the detectors.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use crate::error::{Error, Result};
use crate::qstate::{apply_channel, c, r, CMatrix, DensityMatrix, EXACT_TOL};

pub fn identity2() -> CMatrix {
    CMatrix::identity(2, 2)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[r(0.0), r(1.0), r(1.0), r(0.0)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(-1.0)])
}

pub fn hadamard() -> CMatrix {
    let s = FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[r(s), r(s), r(s), r(-s)])
}

/// Half-wave plate with its fast axis at `theta` radians from horizontal.
///
/// This is the real reflection by angle `2θ`, so `waveplate(π/8)` is the
/// Hadamard.
pub fn waveplate(theta: f64) -> CMatrix {
    let (s, co) = (2.0 * theta).sin_cos();
    CMatrix::from_row_slice(2, 2, &[r(co), r(s), r(s), r(-co)])
}

/// Birefringent phase `diag(1, e^{iφ})`.
pub fn phase(phi: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), c(phi.cos(), phi.sin())])
}

/// CNOT with the control on the first qubit.
pub fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = r(1.0);
    m[(1, 1)] = r(1.0);
    m[(2, 3)] = r(1.0);
    m[(3, 2)] = r(1.0);
    m
}

/// `(H⊗H)⁻¹ · CNOT · (H⊗H)`: the entangling gate of the loop.
///
/// On `(fresh, loop)` it maps `|h p⟩ → φ⁺`, `|h m⟩ → φ⁻`, `|v p⟩ → ψ⁺`,
/// `|v m⟩ → ψ⁻`.
pub fn entangling_gate() -> CMatrix {
    let hh = hadamard().kronecker(&hadamard());
    &hh * cnot() * &hh
}

/// The CNOT with a rotation error, control on the first qubit:
/// the lower block is `[[cos(π/2+ε), i sin(π/2+ε)], [i sin(π/2+ε), cos(π/2+ε)]]`.
pub fn cnot_with_error(epsilon: f64) -> CMatrix {
    let (s, co) = (FRAC_PI_2 + epsilon).sin_cos();
    let mut m = CMatrix::identity(4, 4);
    m[(2, 2)] = r(co);
    m[(2, 3)] = c(0.0, s);
    m[(3, 2)] = c(0.0, s);
    m[(3, 3)] = r(co);
    m
}

/// A weighted family of two-qubit operators `ρ → Σ wᵢ Mᵢ ρ Mᵢ†`.
///
/// Trace-preserving processes satisfy `Σ wᵢ Mᵢ†Mᵢ = I`. Post-selected
/// processes do not; applying them reports the branch probability.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitProcess {
    terms: Vec<(f64, CMatrix)>,
    trace_preserving: bool,
    label: String,
}

impl TwoQubitProcess {
    pub fn new(
        terms: Vec<(f64, CMatrix)>,
        trace_preserving: bool,
        label: impl Into<String>,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid(
                "terms",
                "a process needs at least one operator",
            ));
        }
        for (w, op) in &terms {
            if w.is_nan() || *w < 0.0 {
                return Err(Error::invalid("terms", format!("negative weight {w}")));
            }
            if op.nrows() != 4 || op.ncols() != 4 {
                return Err(Error::DimensionMismatch {
                    expected: 4,
                    found: op.nrows(),
                });
            }
        }
        let process = Self {
            terms,
            trace_preserving,
            label: label.into(),
        };
        if trace_preserving {
            let err = process.completeness_error();
            if err > 1e-10 {
                return Err(Error::invalid(
                    "terms",
                    format!("flagged trace-preserving but Σ w M†M deviates from I by {err:e}"),
                ));
            }
        }
        Ok(process)
    }

    pub fn unitary(op: CMatrix, label: impl Into<String>) -> Result<Self> {
        Self::new(vec![(1.0, op)], true, label)
    }

    pub fn terms(&self) -> &[(f64, CMatrix)] {
        &self.terms
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest element of `Σ wᵢ Mᵢ†Mᵢ − I`.
    pub fn completeness_error(&self) -> f64 {
        let sum = self.terms.iter().fold(CMatrix::zeros(4, 4), |acc, (w, m)| {
            acc + m.adjoint() * m * r(*w)
        });
        (sum - CMatrix::identity(4, 4))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Left-multiplies every operator by `op` (applied after the process).
    pub fn then(&self, op: &CMatrix, label: impl Into<String>) -> Self {
        Self {
            terms: self.terms.iter().map(|(w, m)| (*w, op * m)).collect(),
            trace_preserving: self.trace_preserving,
            label: label.into(),
        }
    }

    /// Applies the process on `targets` and renormalizes.
    pub fn apply(
        &self,
        state: &DensityMatrix,
        targets: [usize; 2],
    ) -> Result<(DensityMatrix, f64)> {
        apply_channel(state, &self.terms, &targets)
    }
}

/// Amplitudes of the two ports of a polarizing beam splitter.
///
/// `t_h`/`r_h` are the transmitted/reflected amplitudes for horizontal light
/// and `t_v`/`r_v` those for vertical light. Each port is lossless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbsAmplitudes {
    pub t_h: f64,
    pub r_h: f64,
    pub t_v: f64,
    pub r_v: f64,
}

impl PbsAmplitudes {
    pub fn new(t_h: f64, r_h: f64, t_v: f64, r_v: f64) -> Result<Self> {
        for (name, x) in [("t_h", t_h), ("r_h", r_h), ("t_v", t_v), ("r_v", r_v)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::invalid(
                    name,
                    format!("amplitude {x} outside [0, 1]"),
                ));
            }
        }
        if (t_h * t_h + r_h * r_h - 1.0).abs() > EXACT_TOL {
            return Err(Error::invalid("t_h", "t_h² + r_h² must equal 1"));
        }
        if (t_v * t_v + r_v * r_v - 1.0).abs() > EXACT_TOL {
            return Err(Error::invalid("t_v", "t_v² + r_v² must equal 1"));
        }
        Ok(Self { t_h, r_h, t_v, r_v })
    }

    /// From the horizontal transmission `t_h²` and vertical reflection `r_v²`.
    pub fn from_intensities(t_h2: f64, r_v2: f64) -> Result<Self> {
        for (name, x) in [("t_h^2", t_h2), ("r_v^2", r_v2)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::invalid(
                    name,
                    format!("intensity {x} outside [0, 1]"),
                ));
            }
        }
        Self::new(
            t_h2.sqrt(),
            (1.0 - t_h2).sqrt(),
            (1.0 - r_v2).sqrt(),
            r_v2.sqrt(),
        )
    }

    pub fn ideal() -> Self {
        Self {
            t_h: 1.0,
            r_h: 0.0,
            t_v: 0.0,
            r_v: 1.0,
        }
    }

    /// `t_h² = 0.95`, `r_v² = 0.99`.
    pub fn typical() -> Self {
        Self::from_intensities(0.95, 0.99).unwrap()
    }

    /// `t_h² = 0.98`, `r_v² = 0.995`.
    pub fn high_performance() -> Self {
        Self::from_intensities(0.98, 0.995).unwrap()
    }

    pub fn is_ideal(&self) -> bool {
        *self == Self::ideal()
    }
}

impl Default for PbsAmplitudes {
    fn default() -> Self {
        Self::ideal()
    }
}

/// The post-selected beam-splitter map exactly as derived from the port
/// transformations (one photon in each output port).
pub fn pbs_transfer(amps: &PbsAmplitudes) -> CMatrix {
    let PbsAmplitudes { t_h, r_h, t_v, r_v } = *amps;
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = r(t_h * t_h - r_h * r_h);
    m[(1, 1)] = r(t_h * t_v);
    m[(1, 2)] = r(-r_h * r_v);
    m[(2, 1)] = r(-r_h * r_v);
    m[(2, 2)] = r(t_h * t_v);
    m[(3, 3)] = r(t_v * t_v - r_v * r_v);
    m
}

/// Fixed `σ_z` on the exiting photon. It removes the relative `−1` the
/// ideal beam splitter puts on `|vv⟩`, so the ideal post-selection maps
/// `|p p⟩` to `φ⁺`.
pub fn exit_port_correction() -> CMatrix {
    identity2().kronecker(&pauli_z())
}

/// Post-selected imperfect beam splitter followed by the exit-port correction.
pub fn pbs_postselect(amps: &PbsAmplitudes) -> TwoQubitProcess {
    TwoQubitProcess {
        terms: vec![(1.0, exit_port_correction() * pbs_transfer(amps))],
        trace_preserving: false,
        label: "pbs".into(),
    }
}

/// Equal mixture of the ideal and the faulty CNOT in its textbook form (control on
/// the first qubit).
pub fn faulty_cnot(epsilon: f64) -> TwoQubitProcess {
    TwoQubitProcess {
        terms: vec![(0.5, cnot_with_error(0.0)), (0.5, cnot_with_error(epsilon))],
        trace_preserving: true,
        label: format!("faulty_cnot({epsilon})"),
    }
}

/// Phase that turns `cnot_with_error(0)` into the plain CNOT: `diag(1, 1, −i, −i)`.
pub fn cnot_phase_correction() -> CMatrix {
    let mut m = CMatrix::identity(4, 4);
    m[(2, 2)] = c(0.0, -1.0);
    m[(3, 3)] = c(0.0, -1.0);
    m
}

/// The faulty CNOT in the loop's gate frame: each term is
/// `(H⊗H) · diag(1,1,−i,−i) · U_CNOT(ε) · (H⊗H)`, so `ε = 0` reproduces
/// [`entangling_gate`] exactly and the error acts as `exp(iεσ_x)` on the
/// controlled branch.
pub fn faulty_entangling_gate(epsilon: f64) -> TwoQubitProcess {
    let hh = hadamard().kronecker(&hadamard());
    let frame = |eps: f64| &hh * cnot_phase_correction() * cnot_with_error(eps) * &hh;
    TwoQubitProcess {
        terms: vec![(0.5, frame(0.0)), (0.5, frame(epsilon))],
        trace_preserving: true,
        label: format!("faulty_gate({epsilon})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{PureState, C64};

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn is_unitary(m: &CMatrix) -> bool {
        let n = m.nrows();
        max_abs(&(m * m.adjoint() - CMatrix::identity(n, n))) < EXACT_TOL
    }

    fn apply_pure(op: &CMatrix, label: &str) -> PureState {
        PureState::from_label(label)
            .unwrap()
            .apply(op, &[0, 1])
            .unwrap()
    }

    fn bell(a: f64, first: &str, second: &str) -> PureState {
        let s = FRAC_1_SQRT_2;
        let mut amps = vec![C64::default(); 4];
        let idx =
            |l: &str| usize::from_str_radix(&l.replace('h', "0").replace('v', "1"), 2).unwrap();
        amps[idx(first)] = r(s);
        amps[idx(second)] = r(a * s);
        PureState::new(amps).unwrap()
    }

    #[test]
    fn single_qubit_gates() {
        let p = PureState::h().apply(&hadamard(), &[0]).unwrap();
        assert!(p.max_deviation(&PureState::p()) < EXACT_TOL);
        assert!(max_abs(&(phase(0.0) - identity2())) < EXACT_TOL);
        let turned = PureState::p().apply(&phase(FRAC_PI_2), &[0]).unwrap();
        assert!(turned.max_deviation(&PureState::y_up()) < EXACT_TOL);
        assert!(max_abs(&(waveplate(std::f64::consts::PI / 8.0) - hadamard())) < EXACT_TOL);
        for theta in [0.0, 0.3, 1.1, -2.0] {
            assert!(is_unitary(&waveplate(theta)));
            assert!(is_unitary(&phase(theta)));
        }
    }

    #[test]
    fn entangling_gate_truth_table() {
        let g = entangling_gate();
        assert!(is_unitary(&g));
        let cases = [
            ("hp", bell(1.0, "hh", "vv")),
            ("hm", bell(-1.0, "hh", "vv")),
            ("vp", bell(1.0, "vh", "hv")),
            ("vm", bell(-1.0, "vh", "hv")),
        ];
        for (input, expected) in cases {
            let out = apply_pure(&g, input);
            assert!(out.max_deviation(&expected) < EXACT_TOL, "{input}");
        }
    }

    #[test]
    fn entangling_gate_is_hadamard_conjugated_cnot() {
        let hh = hadamard().kronecker(&hadamard());
        assert!(max_abs(&(entangling_gate() - &hh * cnot() * &hh)) < EXACT_TOL);
    }

    #[test]
    fn faulty_cnot_limits() {
        let ideal = faulty_cnot(0.0);
        assert!(ideal.is_trace_preserving());
        assert!(ideal.completeness_error() < EXACT_TOL);
        for (_, m) in ideal.terms() {
            assert!(max_abs(&(cnot_phase_correction() * m - cnot())) < EXACT_TOL);
        }
        // ε = π/2: cos(π) = −1 on the controlled block, no flip.
        let flipped = cnot_with_error(FRAC_PI_2);
        let out = apply_pure(&flipped, "vh");
        let expected = PureState::new(vec![r(0.0), r(0.0), r(-1.0), r(0.0)]).unwrap();
        assert!(out.max_deviation(&expected) < EXACT_TOL);
    }

    #[test]
    fn faulty_gate_frame_reduces_to_entangling_gate() {
        let p = faulty_entangling_gate(0.0);
        for (_, m) in p.terms() {
            assert!(max_abs(&(m - entangling_gate())) < EXACT_TOL);
        }
        assert!(faulty_entangling_gate(0.37).completeness_error() < EXACT_TOL);
    }

    #[test]
    fn pbs_transfer_entries() {
        let ideal = pbs_transfer(&PbsAmplitudes::ideal());
        let out = ideal * PureState::from_label("hv").unwrap().amplitudes();
        assert!(out.norm() < EXACT_TOL);

        let typical = pbs_transfer(&PbsAmplitudes::typical());
        let expected = 0.95f64.sqrt() * 0.01f64.sqrt();
        assert!((typical[(1, 1)].re - expected).abs() < EXACT_TOL);
        assert!((typical[(1, 1)].re - 0.0975).abs() < 1e-4);

        let hp = pbs_transfer(&PbsAmplitudes::high_performance());
        assert!((hp[(0, 0)].re - 0.96).abs() < EXACT_TOL);
    }

    #[test]
    fn pbs_amplitude_validation() {
        assert!(PbsAmplitudes::new(0.9, 0.9, 0.0, 1.0).is_err());
        assert!(PbsAmplitudes::from_intensities(1.2, 0.9).is_err());
        assert!(PbsAmplitudes::from_intensities(1.0, 1.0)
            .unwrap()
            .is_ideal());
    }

    #[test]
    fn ideal_postselection_matches_gate_on_fresh_h() {
        // A fresh |h> rotated to |p> by a 22.5° plate, then the ideal
        // post-selection, equals the entangling gate on |h, x> up to 1/√2.
        let pbs = pbs_postselect(&PbsAmplitudes::ideal());
        let (_, t) = &pbs.terms()[0];
        let front = waveplate(std::f64::consts::PI / 8.0).kronecker(&identity2());
        for loop_label in ["h", "v", "p", "m", "r", "l"] {
            let input = PureState::from_label(&format!("h{loop_label}")).unwrap();
            let via_pbs = t * &front * input.amplitudes();
            let via_gate = entangling_gate() * input.amplitudes();
            let diff = via_pbs * r(2f64.sqrt()) - via_gate;
            assert!(diff.norm() < EXACT_TOL, "{loop_label}");
        }
    }

    #[test]
    fn process_validation() {
        assert!(TwoQubitProcess::new(vec![], true, "empty").is_err());
        assert!(TwoQubitProcess::new(vec![(0.5, CMatrix::identity(4, 4))], true, "half").is_err());
        assert!(TwoQubitProcess::new(vec![(-0.1, CMatrix::identity(4, 4))], false, "neg").is_err());
        assert!(TwoQubitProcess::unitary(entangling_gate(), "gate").is_ok());
    }
}
