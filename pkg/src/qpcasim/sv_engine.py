"""Quantum-side primitives, simulated exactly on dense statevectors.

Phase estimation is modeled as an exact projection onto the eigenbasis of
the (unnormalized-covariance) density operator: the engine changes basis,
XORs a per-eigenvector label into the eigenvalue register, and changes back.
Labels are either exact per-component tokens (ideal mode) or the fixed-width
rounding of half the eigenvalue (quantized mode; the half keeps the top of
the spectrum from wrapping). The XOR makes the walk an involution, so the
un-compute pass is the same unitary.

Everything downstream of state preparation is deterministic; sampling only
happens where a real device would measure, and always through a seeded
generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ContractViolationError,
    DegenerateSpectrumError,
    InvalidInputError,
    InvalidRotationError,
    OutOfRangeError,
    VanishingSuccessError,
)
from .statevector import StateVector

LABEL_MODE_IDEAL = "ideal"
LABEL_MODE_QUANTIZED = "quantized"

# Written phases encode eigenvalue/2 so that an eigenvalue of 1 does not
# wrap around the fixed-width register.
PHASE_SCALE = 0.5


@dataclass(frozen=True)
class RhoSpec:
    """Eigensystem of X^T X / Tr(X^T X): proportions of captured variance
    and the matching orthonormal directions (columns, sign-fixed)."""

    eigenvalues: np.ndarray      # (D,), descending, sums to 1
    eigenvectors: np.ndarray     # (D, D) columns

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=np.float64)
        vec = np.asarray(self.eigenvectors, dtype=np.float64)
        if lam.ndim != 1 or vec.shape != (lam.size, lam.size):
            raise InvalidInputError("eigenvalues must be (D,) and eigenvectors (D, D)")
        if np.any(lam < -1e-12) or abs(float(lam.sum()) - 1.0) > 1e-9:
            raise InvalidInputError("eigenvalues must be nonnegative and sum to 1")
        if np.any(np.diff(lam) > 1e-12):
            raise InvalidInputError("eigenvalues must be sorted in descending order")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", vec)

    @classmethod
    def from_model(cls, model) -> "RhoSpec":
        return cls(eigenvalues=model.variance_proportions, eigenvectors=model.right_vectors)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def density_matrix(self) -> np.ndarray:
        return self.eigenvectors @ np.diag(self.eigenvalues) @ self.eigenvectors.T


@dataclass(frozen=True)
class PhaseConfig:
    """How eigenvalue labels are written.

    bits: width of the quantized eigenvalue register.
    label_mode: 'ideal' writes the per-component token j+1 on a register
        wide enough for all tokens; 'quantized' writes
        round(PHASE_SCALE * eigenvalue * 2**bits) on a bits-wide register.
    """

    bits: int = 6
    label_mode: str = LABEL_MODE_QUANTIZED

    def __post_init__(self):
        if self.bits < 1:
            raise OutOfRangeError(f"label width must be >= 1 bit, got {self.bits}")
        if self.label_mode not in (LABEL_MODE_IDEAL, LABEL_MODE_QUANTIZED):
            raise InvalidInputError(f"unknown label mode {self.label_mode!r}")

    @property
    def eigenvalue_resolution(self) -> float:
        """Smallest eigenvalue gap the quantized labels can resolve."""
        return 2.0 ** (1 - self.bits)

    def register_width(self, n_components: int) -> int:
        if self.label_mode == LABEL_MODE_IDEAL:
            return max(int(math.ceil(math.log2(n_components + 1))), 1)
        return self.bits


def eigen_labels(rho: RhoSpec, cfg: PhaseConfig) -> np.ndarray:
    """Label written for each eigen-component, in spectral order."""
    if cfg.label_mode == LABEL_MODE_IDEAL:
        return np.arange(1, rho.dim + 1, dtype=np.int64)
    scale = float(1 << cfg.bits)
    return np.floor(PHASE_SCALE * rho.eigenvalues * scale + 0.5).astype(np.int64)


def decode_label(label: int, cfg: PhaseConfig) -> float:
    """Eigenvalue represented by a quantized label (doubling undoes the
    half-phase encoding)."""
    if cfg.label_mode != LABEL_MODE_QUANTIZED:
        raise InvalidInputError("only quantized labels decode to eigenvalues")
    return 2.0 * label / float(1 << cfg.bits)


def check_label_distinctness(rho: RhoSpec, cfg: PhaseConfig, top: int) -> np.ndarray:
    """Quantized labels for the leading ``top`` components must be pairwise
    distinct, otherwise the index write becomes ambiguous."""
    labels = eigen_labels(rho, cfg)
    if cfg.label_mode == LABEL_MODE_QUANTIZED:
        head = labels[:top]
        if np.unique(head).size != head.size:
            pairs = [
                (j, k)
                for j in range(top)
                for k in range(j + 1, top)
                if head[j] == head[k]
            ]
            raise DegenerateSpectrumError(
                f"eigenvalue labels collide at {cfg.bits} bits for component pairs {pairs}; "
                f"raise the label width or lower the variance threshold"
            )
    return labels


def _padded_eigenbasis(rho: RhoSpec, padded_dim: int) -> np.ndarray:
    if padded_dim < rho.dim:
        raise InvalidInputError("feature register smaller than the eigensystem")
    basis = np.eye(padded_dim)
    basis[: rho.dim, : rho.dim] = rho.eigenvectors
    return basis


def _label_walk(
    state: StateVector,
    rho: RhoSpec,
    cfg: PhaseConfig,
    feature_register: str,
    eigen_register: str,
) -> StateVector:
    basis = _padded_eigenbasis(rho, state.register(feature_register).dim)
    labels = eigen_labels(rho, cfg)
    width = state.register(eigen_register).dim
    if int(labels.max(initial=0)) >= width:
        raise InvalidInputError(
            f"label {int(labels.max())} does not fit the {eigen_register!r} register of dim {width}"
        )
    out = state.apply_register_unitary(feature_register, basis.T)
    out = out.apply_controlled_xor(
        feature_register, eigen_register, {j: int(labels[j]) for j in range(rho.dim) if labels[j]}
    )
    return out.apply_register_unitary(feature_register, basis)


def phase_estimate(
    rho: RhoSpec,
    cfg: PhaseConfig,
    state: StateVector,
    *,
    feature_register: str = "feature",
    eigen_register: str = "eigen",
    distinct_top: int | None = None,
) -> StateVector:
    """Write eigenvalue labels: each eigenbasis component of the feature
    register tags the eigenvalue register with its label.

    The eigenvalue register must be zeroed. ``distinct_top`` enables the
    collision check over the leading components being targeted downstream.
    """
    probs = state.probabilities(eigen_register)
    if 1.0 - float(probs[0]) > 1e-9:
        raise ContractViolationError(
            f"eigenvalue register {eigen_register!r} must be |0> before label writing"
        )
    if distinct_top is not None:
        check_label_distinctness(rho, cfg, distinct_top)
    return _label_walk(state, rho, cfg, feature_register, eigen_register)


def inverse_phase_estimate(
    rho: RhoSpec,
    cfg: PhaseConfig,
    state: StateVector,
    *,
    feature_register: str = "feature",
    eigen_register: str = "eigen",
) -> StateVector:
    """Un-compute the labels. The XOR walk is an involution, so this is the
    same unitary as the forward pass without the zero-register precondition."""
    return _label_walk(state, rho, cfg, feature_register, eigen_register)


def apply_cu_lambda(
    state: StateVector,
    labels: Sequence[tuple[int, int]],
    *,
    eigen_register: str = "eigen",
    index_register: str = "index",
    strict: bool = True,
) -> StateVector:
    """For each (label, component) pair, XOR ``component`` into the index
    register wherever the eigenvalue register holds ``label``.

    With the index register zeroed this writes |component> outright; the XOR
    semantics match the gate-level construction (X-conjugated multi-controlled
    NOTs) on every basis input, which the tests exercise exhaustively.
    """
    seen: dict[int, int] = {}
    e_dim = state.register(eigen_register).dim
    i_dim = state.register(index_register).dim
    for label, component in labels:
        if not 0 <= label < e_dim:
            raise InvalidInputError(f"label {label} out of range for register {eigen_register!r}")
        if not 1 <= component < i_dim:
            raise InvalidInputError(f"component token {component} out of range for register {index_register!r}")
        if label in seen:
            raise DegenerateSpectrumError(
                f"label {label} is claimed by components {seen[label]} and {component}"
            )
        seen[label] = component
    if strict:
        probs = state.probabilities(index_register)
        if 1.0 - float(probs[0]) > 1e-9:
            raise ContractViolationError("index register must be |0> before component writing")
    return state.apply_controlled_xor(eigen_register, index_register, seen)


def apply_cr_beta(
    state: StateVector,
    beta_hat: np.ndarray,
    rotation_constant: float,
    *,
    index_register: str = "index",
    ancilla_register: str = "ancilla",
    strict: bool = True,
) -> StateVector:
    """Controlled ancilla rotation: on index value j (1-based over the
    estimated coefficients), rotate the ancilla so |1> carries amplitude
    C / beta_hat[j-1]. Index 0 leaves the ancilla alone."""
    beta_hat = np.asarray(beta_hat, dtype=np.float64)
    c = float(rotation_constant)
    if beta_hat.ndim != 1 or beta_hat.size < 1:
        raise InvalidInputError("beta_hat must be a nonempty 1-D array")
    if np.any(beta_hat <= 0.0) or np.any(beta_hat > 1.0):
        raise InvalidInputError("estimated anchor coefficients must lie in (0, 1]")
    if not c > 0.0:
        raise InvalidInputError(f"rotation constant must be positive, got {c}")
    if c > float(beta_hat.min()) * (1.0 + 1e-12):
        raise InvalidRotationError(
            f"rotation constant {c} exceeds the smallest estimated coefficient {float(beta_hat.min())}"
        )
    i_dim = state.register(index_register).dim
    if beta_hat.size + 1 > i_dim:
        raise InvalidInputError("index register too small for the coefficient list")
    if state.register(ancilla_register).qubits != 1:
        raise InvalidInputError("ancilla register must be a single qubit")
    if strict:
        probs = state.probabilities(ancilla_register)
        if 1.0 - float(probs[0]) > 1e-9:
            raise ContractViolationError("ancilla must be |0> before the coefficient rotation")

    rotations = {}
    for j, bj in enumerate(beta_hat, start=1):
        s = min(c / float(bj), 1.0)
        q = math.sqrt(max(1.0 - s * s, 0.0))
        rotations[j] = np.array([[q, -s], [s, q]])
    return state.apply_controlled_unitary(index_register, ancilla_register, rotations)


@dataclass(frozen=True)
class PostselectResult:
    state: StateVector
    probability: float
    amplification_reps: int
    sampled_probability: float | None = None
    success_count: int | None = None
    shots: int | None = None


def amplification_repetitions(probability: float) -> int:
    """Amplitude-amplification rounds needed to make the flagged branch
    dominant: ceil(pi / (4 * asin(sqrt(p))))."""
    p = min(max(probability, 0.0), 1.0)
    if p <= 0.0:
        raise VanishingSuccessError("success probability is zero; cannot amplify")
    return int(math.ceil(math.pi / (4.0 * math.asin(math.sqrt(p)))))


def postselect(
    state: StateVector,
    anchor_inverse: np.ndarray,
    *,
    feature_register: str = "feature",
    ancilla_register: str = "ancilla",
    probability_floor: float = 1e-12,
    shots: int | None = None,
    rng_seed: int | None = None,
) -> PostselectResult:
    """Undo the anchor preparation on the feature register, keep the branch
    with feature |0> and ancilla |1>, and drop both registers.

    The returned probability is the exact squared norm of the kept branch.
    When ``shots`` is given, a seeded binomial draw simulates repeating the
    bare (unamplified) experiment that many times.
    """
    worked = state.apply_register_unitary(feature_register, anchor_inverse)
    kept, prob = worked.project_and_remove({feature_register: 0, ancilla_register: 1})
    if prob < probability_floor:
        raise VanishingSuccessError(
            f"post-selection probability {prob:.3e} below floor {probability_floor:.3e}"
        )
    sampled = None
    successes = None
    if shots is not None:
        if shots < 1:
            raise InvalidInputError("shots must be >= 1")
        rng = np.random.default_rng(rng_seed)
        successes = int(rng.binomial(shots, min(prob, 1.0)))
        sampled = successes / shots
    return PostselectResult(
        state=kept,
        probability=prob,
        amplification_reps=amplification_repetitions(prob),
        sampled_probability=sampled,
        success_count=successes,
        shots=shots,
    )


@dataclass(frozen=True)
class SwapTestResult:
    """Outcome of a seeded swap-test run.

    overlap_sq_raw = 2 * p0_hat - 1 is the unbiased estimator of the squared
    overlap; overlap_sq is the same value clamped to [0, 1] for downstream
    consumers that need a probability.
    """

    p0_hat: float
    p0_exact: float
    overlap_sq_raw: float
    overlap_sq: float
    shots: int

    @property
    def standard_error(self) -> float:
        return 2.0 * math.sqrt(max(self.p0_exact * (1.0 - self.p0_exact), 0.0) / self.shots)


def swap_test(a: StateVector, b: StateVector, shots: int, rng_seed: int | None = None) -> SwapTestResult:
    """Estimate |<a|b>|^2 from the ancilla-0 frequency of the swap test.

    P(0) = (1 + |<a|b>|^2) / 2; the shot count is drawn from the exact
    binomial law, which is distribution-identical to per-shot sampling.
    """
    if shots < 1:
        raise InvalidInputError("shots must be >= 1")
    overlap_sq = abs(a.inner(b)) ** 2
    p0 = 0.5 * (1.0 + min(overlap_sq, 1.0))
    rng = np.random.default_rng(rng_seed)
    zeros = int(rng.binomial(shots, p0))
    p0_hat = zeros / shots
    raw = 2.0 * p0_hat - 1.0
    return SwapTestResult(
        p0_hat=p0_hat,
        p0_exact=p0,
        overlap_sq_raw=raw,
        overlap_sq=min(max(raw, 0.0), 1.0),
        shots=shots,
    )


@dataclass(frozen=True)
class RegisterSample:
    counts: dict[int, int]
    marginal: np.ndarray
    shots: int

    def frequency(self, value: int) -> float:
        return self.counts.get(value, 0) / self.shots


def measure_register(
    state: StateVector, name: str, shots: int, rng_seed: int | None = None
) -> RegisterSample:
    """Sample basis outcomes of one register from its exact marginal."""
    if shots < 1:
        raise InvalidInputError("shots must be >= 1")
    marginal = state.probabilities(name)
    weights = np.clip(marginal, 0.0, None)
    weights = weights / weights.sum()
    rng = np.random.default_rng(rng_seed)
    draws = rng.multinomial(shots, weights)
    counts = {int(v): int(c) for v, c in enumerate(draws) if c > 0}
    return RegisterSample(counts=counts, marginal=marginal, shots=shots)
