//! Dense pure-state and density-matrix kernel.
//!
//! Qubit 0 is the most significant position of the amplitude index
//! (big-endian), and each qubit uses `h = 0`, `v = 1`. Every operation is a
//! pure function returning a new value.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Dense states above this many qubits are refused unless a larger cap is requested.
pub const DEFAULT_DENSE_CAP: usize = 10;
/// Hard upper bound for any configurable dense cap.
pub const MAX_DENSE_CAP: usize = 12;

/// Tolerance for exact-algebra identities.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for quantities accumulated over many operations.
pub const ROUNDOFF_TOL: f64 = 1e-10;
/// Branches with probability at or below this are treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-14;
/// Smallest eigenvalue accepted by [`DensityMatrix::validate`].
pub const PSD_FLOOR: f64 = -1e-9;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn qubits_for_dim(dim: usize) -> Option<usize> {
    if dim.is_power_of_two() {
        Some(dim.trailing_zeros() as usize)
    } else {
        None
    }
}

fn check_targets(targets: &[usize], num_qubits: usize) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= num_qubits {
            return Err(Error::QubitIndex {
                index: t,
                num_qubits,
            });
        }
        if targets[..i].contains(&t) {
            return Err(Error::DuplicateTarget);
        }
    }
    Ok(())
}

/// Index offsets of the `2^k` sub-basis states spanned by `targets`, in the
/// operator's own big-endian order.
fn target_offsets(targets: &[usize], num_qubits: usize) -> Vec<usize> {
    let k = targets.len();
    (0..1usize << k)
        .map(|j| {
            targets.iter().enumerate().fold(0, |acc, (pos, &t)| {
                if (j >> (k - 1 - pos)) & 1 == 1 {
                    acc | 1 << (num_qubits - 1 - t)
                } else {
                    acc
                }
            })
        })
        .collect()
}

/// Multiplies the rows of `m` by `op` acting on the addressed qubits.
fn left_apply(m: &CMatrix, op: &CMatrix, targets: &[usize], num_qubits: usize) -> CMatrix {
    let dim = 1usize << num_qubits;
    let offsets = target_offsets(targets, num_qubits);
    let mask = offsets.iter().fold(0, |acc, o| acc | o);
    let sub = offsets.len();
    let mut out = CMatrix::zeros(dim, m.ncols());
    let mut buf = vec![C64::default(); sub];
    for base in (0..dim).filter(|i| i & mask == 0) {
        for col in 0..m.ncols() {
            for (j, o) in offsets.iter().enumerate() {
                buf[j] = m[(base | o, col)];
            }
            for (row, o) in offsets.iter().enumerate() {
                let mut acc = C64::default();
                for (j, b) in buf.iter().enumerate() {
                    acc += op[(row, j)] * b;
                }
                out[(base | o, col)] = acc;
            }
        }
    }
    out
}

fn check_op(op: &CMatrix, targets: &[usize]) -> Result<()> {
    let expected = 1usize << targets.len();
    if op.nrows() != expected || op.ncols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: op.nrows().max(op.ncols()),
        });
    }
    Ok(())
}

/// A normalized pure state of `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Builds a state from raw amplitudes; the length must be a power of two
    /// and the squared norm must be 1 within [`EXACT_TOL`].
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let num_qubits = qubits_for_dim(amplitudes.len()).ok_or(Error::DimensionMismatch {
            expected: amplitudes.len().next_power_of_two(),
            found: amplitudes.len(),
        })?;
        if num_qubits == 0 || num_qubits > MAX_DENSE_CAP {
            return Err(Error::Capacity {
                requested: num_qubits,
                cap: MAX_DENSE_CAP,
            });
        }
        let amplitudes = DVector::from_vec(amplitudes);
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > EXACT_TOL {
            return Err(Error::invalid(
                "amplitudes",
                format!("squared norm {norm} != 1"),
            ));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm <= ZERO_PROBABILITY {
            return Err(Error::ZeroProbability {
                probability: norm * norm,
            });
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    /// Product state from a polarization label such as `"hhp"`.
    ///
    /// Letters: `h`, `v`, `p` = (h+v)/√2, `m` = (h−v)/√2, `r` = (h+iv)/√2
    /// (the +y eigenstate) and `l` = (h−iv)/√2.
    pub fn from_label(label: &str) -> Result<Self> {
        let mut iter = label.chars().map(single_qubit);
        let first = iter
            .next()
            .ok_or_else(|| Error::invalid("label", "empty label"))??;
        iter.try_fold(first, |acc, q| acc.tensor(&q?))
    }

    pub fn h() -> Self {
        single_qubit('h').unwrap()
    }

    pub fn v() -> Self {
        single_qubit('v').unwrap()
    }

    pub fn p() -> Self {
        single_qubit('p').unwrap()
    }

    pub fn m() -> Self {
        single_qubit('m').unwrap()
    }

    pub fn y_up() -> Self {
        single_qubit('r').unwrap()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Largest amplitude deviation after removing the relative global phase.
    pub fn distance_up_to_phase(&self, other: &PureState) -> f64 {
        let overlap = self.inner(other);
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest element-wise amplitude deviation, phase included.
    pub fn max_deviation(&self, other: &PureState) -> f64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_DENSE_CAP {
            return Err(Error::Capacity {
                requested: n,
                cap: MAX_DENSE_CAP,
            });
        }
        Ok(PureState {
            num_qubits: n,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }

    /// Applies a unitary on the addressed qubits.
    pub fn apply(&self, op: &CMatrix, targets: &[usize]) -> Result<PureState> {
        check_targets(targets, self.num_qubits)?;
        check_op(op, targets)?;
        let column =
            CMatrix::from_column_slice(self.amplitudes.len(), 1, self.amplitudes.as_slice());
        let out = left_apply(&column, op, targets, self.num_qubits);
        Ok(PureState {
            num_qubits: self.num_qubits,
            amplitudes: DVector::from_column_slice(out.as_slice()),
        })
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            num_qubits: self.num_qubits,
            entries: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// Labels each basis state with `h`/`v` letters, qubit 0 first.
    pub fn basis_label(index: usize, num_qubits: usize) -> String {
        (0..num_qubits)
            .map(|q| {
                if (index >> (num_qubits - 1 - q)) & 1 == 0 {
                    'h'
                } else {
                    'v'
                }
            })
            .collect()
    }
}

fn single_qubit(letter: char) -> Result<PureState> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match letter {
        'h' => [r(1.0), r(0.0)],
        'v' => [r(0.0), r(1.0)],
        'p' => [r(s), r(s)],
        'm' => [r(s), r(-s)],
        'r' => [r(s), c(0.0, s)],
        'l' => [r(s), c(0.0, -s)],
        other => {
            return Err(Error::invalid(
                "label",
                format!("unknown polarization letter `{other}`"),
            ))
        }
    };
    Ok(PureState {
        num_qubits: 1,
        amplitudes: DVector::from_vec(amps.to_vec()),
    })
}

/// A 2^n × 2^n Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    entries: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking shape, Hermiticity and unit trace.
    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let num_qubits = qubits_for_dim(entries.nrows()).ok_or(Error::DimensionMismatch {
            expected: entries.nrows().next_power_of_two(),
            found: entries.nrows(),
        })?;
        if num_qubits == 0 || num_qubits > MAX_DENSE_CAP {
            return Err(Error::Capacity {
                requested: num_qubits,
                cap: MAX_DENSE_CAP,
            });
        }
        let rho = DensityMatrix {
            num_qubits,
            entries,
        };
        let herm = rho.hermiticity_error();
        if herm > ROUNDOFF_TOL {
            return Err(Error::invalid(
                "density matrix",
                format!("not Hermitian ({herm:e})"),
            ));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > ROUNDOFF_TOL {
            return Err(Error::invalid("density matrix", format!("trace {tr} != 1")));
        }
        Ok(rho)
    }

    pub fn from_pure(state: &PureState) -> Self {
        state.to_density()
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_DENSE_CAP {
            return Err(Error::Capacity {
                requested: num_qubits,
                cap: MAX_DENSE_CAP,
            });
        }
        let dim = 1usize << num_qubits;
        Ok(DensityMatrix {
            num_qubits,
            entries: CMatrix::identity(dim, dim) * r(1.0 / dim as f64),
        })
    }

    /// Convex combination `Σ wᵢ ρᵢ`; weights must be non-negative and sum to 1.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::invalid("mixture", "no components"))?;
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > EXACT_TOL {
            return Err(Error::invalid(
                "mixture",
                "weights must be non-negative and sum to 1",
            ));
        }
        let mut entries = CMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in parts {
            if rho.num_qubits != first.num_qubits {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: rho.dim(),
                });
            }
            entries += &rho.entries * r(*w);
        }
        Ok(DensityMatrix {
            num_qubits: first.num_qubits,
            entries,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// Computational-basis (h/v) populations.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    /// `Tr(op · ρ)` for a full-dimension operator.
    pub fn expectation(&self, op: &CMatrix) -> Result<C64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.nrows(),
            });
        }
        Ok((op * &self.entries).trace())
    }

    pub fn max_deviation(&self, other: &DensityMatrix) -> f64 {
        if self.num_qubits != other.num_qubits {
            return f64::INFINITY;
        }
        (&self.entries - &other.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.entries - self.entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.entries + self.entries.adjoint()) * r(0.5);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    /// Full invariant check: Hermitian, unit trace and PSD.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > ROUNDOFF_TOL {
            return Err(Error::invalid(
                "density matrix",
                format!("not Hermitian ({herm:e})"),
            ));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > ROUNDOFF_TOL {
            return Err(Error::invalid("density matrix", format!("trace {tr} != 1")));
        }
        let min = self.min_eigenvalue();
        if min < PSD_FLOOR {
            return Err(Error::invalid(
                "density matrix",
                format!("negative eigenvalue {min:e}"),
            ));
        }
        Ok(())
    }

    /// Unnormalized `M ρ M†` on the addressed qubits.
    pub(crate) fn conjugate_raw(&self, op: &CMatrix, targets: &[usize]) -> CMatrix {
        let a = left_apply(&self.entries, op, targets, self.num_qubits);
        left_apply(&a.adjoint(), op, targets, self.num_qubits).adjoint()
    }

    /// Renormalizes a raw operator to unit trace, returning the pre-normalization trace.
    pub(crate) fn normalize_raw(num_qubits: usize, raw: CMatrix) -> Result<(Self, f64)> {
        let tr = raw.trace().re;
        if tr <= ZERO_PROBABILITY {
            return Err(Error::ZeroProbability {
                probability: tr.max(0.0),
            });
        }
        let entries = (&raw + raw.adjoint()) * r(0.5 / tr);
        Ok((
            DensityMatrix {
                num_qubits,
                entries,
            },
            tr,
        ))
    }
}

/// `a ⊗ b` with `a`'s qubits first, refusing results above [`DEFAULT_DENSE_CAP`].
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    tensor_with_cap(a, b, DEFAULT_DENSE_CAP)
}

pub fn tensor_with_cap(a: &DensityMatrix, b: &DensityMatrix, cap: usize) -> Result<DensityMatrix> {
    let n = a.num_qubits + b.num_qubits;
    let cap = cap.min(MAX_DENSE_CAP);
    if n > cap {
        return Err(Error::Capacity { requested: n, cap });
    }
    Ok(DensityMatrix {
        num_qubits: n,
        entries: a.entries.kronecker(&b.entries),
    })
}

/// `ρ → M ρ M† / Tr(M ρ M†)` on the addressed qubits.
///
/// Returns the renormalized state and the branch probability `Tr(M ρ M†)`,
/// which is 1 for unitaries. Fails when the branch probability is at or below
/// [`ZERO_PROBABILITY`].
pub fn apply_on(
    state: &DensityMatrix,
    op: &CMatrix,
    targets: &[usize],
) -> Result<(DensityMatrix, f64)> {
    check_targets(targets, state.num_qubits)?;
    check_op(op, targets)?;
    DensityMatrix::normalize_raw(state.num_qubits, state.conjugate_raw(op, targets))
}

/// Applies a unitary, discarding the (unit) branch probability.
pub fn apply_unitary(
    state: &DensityMatrix,
    op: &CMatrix,
    targets: &[usize],
) -> Result<DensityMatrix> {
    apply_on(state, op, targets).map(|(rho, _)| rho)
}

/// `ρ → Σ wᵢ Mᵢ ρ Mᵢ†`, renormalized; returns the branch probability.
pub fn apply_channel(
    state: &DensityMatrix,
    terms: &[(f64, CMatrix)],
    targets: &[usize],
) -> Result<(DensityMatrix, f64)> {
    check_targets(targets, state.num_qubits)?;
    let dim = state.dim();
    let mut acc = CMatrix::zeros(dim, dim);
    for (w, op) in terms {
        check_op(op, targets)?;
        if *w == 0.0 {
            continue;
        }
        acc += state.conjugate_raw(op, targets) * r(*w);
    }
    DensityMatrix::normalize_raw(state.num_qubits, acc)
}

/// Reduced state over `keep`, listed in ascending qubit order.
pub fn partial_trace(state: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = state.num_qubits;
    check_targets(keep, n)?;
    if keep.is_empty() {
        return Err(Error::invalid("keep", "at least one qubit must be kept"));
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let kept_offsets = target_offsets(&kept, n);
    let traced_offsets = if traced.is_empty() {
        vec![0]
    } else {
        target_offsets(&traced, n)
    };
    let dk = kept_offsets.len();
    let mut out = CMatrix::zeros(dk, dk);
    for (i, oi) in kept_offsets.iter().enumerate() {
        for (j, oj) in kept_offsets.iter().enumerate() {
            out[(i, j)] = traced_offsets
                .iter()
                .map(|t| state.entries[(oi | t, oj | t)])
                .sum();
        }
    }
    Ok(DensityMatrix {
        num_qubits: kept.len(),
        entries: out,
    })
}

/// A single-qubit rank-one projector.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    label: String,
    matrix: CMatrix,
}

impl Projector {
    /// `|ψ⟩⟨ψ|` for a normalized single-qubit state.
    pub fn onto(label: impl Into<String>, state: &PureState) -> Result<Self> {
        if state.num_qubits() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: state.amplitudes().len(),
            });
        }
        Ok(Self {
            label: label.into(),
            matrix: state.to_density().entries,
        })
    }

    pub fn h() -> Self {
        Self::onto("h", &PureState::h()).unwrap()
    }

    pub fn v() -> Self {
        Self::onto("v", &PureState::v()).unwrap()
    }

    pub fn p() -> Self {
        Self::onto("p", &PureState::p()).unwrap()
    }

    pub fn m() -> Self {
        Self::onto("m", &PureState::m()).unwrap()
    }

    pub fn up_y() -> Self {
        Self::onto("up_y", &PureState::y_up()).unwrap()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// `Π ρ Π / Tr(Π ρ)` on one qubit, which stays in the register.
pub fn project(
    state: &DensityMatrix,
    qubit: usize,
    proj: &Projector,
) -> Result<(DensityMatrix, f64)> {
    apply_on(state, &proj.matrix, &[qubit])
}
