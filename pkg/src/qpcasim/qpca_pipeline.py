"""End-to-end compression pipeline and its bookkeeping.

The stages mirror the algorithm: encode the data, reveal the leading
spectrum by sampling the labeled state, estimate the anchor coefficients by
swap tests, write component tokens, rotate them into an ancilla, and
post-select on recovering the anchor. Three run modes control where
randomness enters:

  ideal      exact per-component tokens, exact coefficients, exact
             post-selection probability (isolates coefficient-error studies)
  quantized  fixed-width eigenvalue labels, exact everything else
  sampled    fixed-width labels, sampled spectrum discovery, swap-test
             coefficient estimates, and a sampled success frequency

Every stochastic point draws from a seeded generator, so a (config, seed)
pair pins the whole run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import pca_oracle, qram_store, sv_engine
from .errors import (
    InvalidInputError,
    OutOfRangeError,
    UnderSampledError,
    WeakAnchorError,
)
from .pca_oracle import CompressedMatrix, DataMatrix, SpectralModel
from .qram_store import QramTree
from .statevector import StateVector
from .sv_engine import PhaseConfig, RhoSpec

MODE_IDEAL = "ideal"
MODE_QUANTIZED = "quantized"
MODE_SAMPLED = "sampled"
RUN_MODES = (MODE_IDEAL, MODE_QUANTIZED, MODE_SAMPLED)

SCOPE_FULL = "full"
SCOPE_SUBSET = "subset"
SCOPE_SINGLE = "single"

BETA_FLOOR = 1e-3
MAX_ANCHOR_ATTEMPTS = 8
ANCHOR_SHOTS_CONSTANT = 4.0


def label_mode_for(run_mode: str) -> str:
    if run_mode not in RUN_MODES:
        raise InvalidInputError(f"unknown run mode {run_mode!r}; expected one of {RUN_MODES}")
    return sv_engine.LABEL_MODE_IDEAL if run_mode == MODE_IDEAL else sv_engine.LABEL_MODE_QUANTIZED


@dataclass(frozen=True)
class SpectrumEntry:
    component: int          # 0-based spectral position
    label: int              # value written on the eigenvalue register
    eigenvalue: float       # exact variance proportion
    frequency: float        # observed (or exact) sampling frequency
    vector: np.ndarray      # exact eigenvector payload (unpadded)


@dataclass(frozen=True)
class SpectrumSample:
    """Leading spectrum as revealed by (or in lieu of) sampling."""

    entries: tuple[SpectrumEntry, ...]
    histogram: dict[int, int] | None
    budget: int | None
    label_mode: str

    def cu_labels(self) -> list[tuple[int, int]]:
        """(label, 1-based component token) pairs for the index write."""
        return [(e.label, e.component + 1) for e in self.entries]

    @property
    def dim(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class AnchorProfile:
    """Anchor overlap coefficients, true and estimated."""

    anchor_index: int
    beta: np.ndarray         # exact <v_j | anchor>, j over the kept components
    beta_hat: np.ndarray     # estimates actually used by the rotation stage
    rotation_constant: float  # C = min_j beta_hat_j
    residual: float           # 1 - sum beta_j^2 (anchor mass outside the kept span)
    eps_beta: float
    shots_per_coefficient: int | None = None
    estimator_constant: float | None = None


@dataclass(frozen=True)
class LedgerConstants:
    """Tunable prefactors for the symbolic cost model."""

    spectrum_copies: float = 1.0
    anchor_tests: float = 1.0
    label_write: float = 1.0
    index_write: float = 1.0
    label_uncompute: float = 1.0
    rotation: float = 1.0
    postselect: float = 1.0
    polylog_power: int = 1


def _polylog(x: float, power: int) -> float:
    return math.log2(max(x, 2.0)) ** power


@dataclass(frozen=True)
class ResourceLedger:
    """Symbolic per-stage costs for one compression run.

    The per-repetition stage costs exclude the amplitude-amplification
    factor; ``amplification_reps`` carries it separately and
    ``amplified_cost`` folds it back in for the post-preparation stages.
    """

    n_rows: int
    n_cols: int
    dim: int
    eps_lambda: float
    eps_beta: float
    success_probability: float
    spectrum_copies: float
    anchor_swap_tests: float
    label_write_cost: float
    index_write_gates: float
    label_uncompute_cost: float
    rotation_gates: float
    postselect_cost: float
    amplification_reps: int
    constants: LedgerConstants = field(default_factory=LedgerConstants)

    def amplified_cost(self) -> dict[str, float]:
        reps = float(self.amplification_reps)
        return {
            "label_write_cost": reps * self.label_write_cost,
            "index_write_gates": reps * self.index_write_gates,
            "label_uncompute_cost": reps * self.label_uncompute_cost,
            "rotation_gates": reps * self.rotation_gates,
            "postselect_cost": reps * self.postselect_cost,
        }


def ledger_predict(
    n_rows: int,
    n_cols: int,
    dim: int,
    eps_lambda: float,
    eps_beta: float,
    success_probability: float,
    constants: LedgerConstants | None = None,
) -> ResourceLedger:
    """Instantiate the asymptotic cost model at concrete parameters.

    Scaling knobs: the spectrum stage pays inverse-cubically in the
    eigenvalue resolution, coefficient estimation inverse-quadratically in
    the coefficient accuracy, the token/rotation circuits are linear in the
    kept dimension up to a log(dim+1) register factor, and the repetition
    count follows the amplitude-amplification formula at the given success
    probability.
    """
    if dim < 1 or n_rows < 1 or n_cols < 1:
        raise OutOfRangeError("dimensions must be >= 1")
    if not 0.0 < eps_lambda < 1.0 or not 0.0 < eps_beta < 1.0:
        raise OutOfRangeError("accuracy parameters must lie in (0, 1)")
    c = constants or LedgerConstants()
    poly_nd = _polylog(float(n_rows) * float(n_cols), c.polylog_power)
    poly_d = _polylog(float(n_cols), c.polylog_power)
    reg_factor = math.log2(dim + 1.0)
    return ResourceLedger(
        n_rows=n_rows,
        n_cols=n_cols,
        dim=dim,
        eps_lambda=eps_lambda,
        eps_beta=eps_beta,
        success_probability=success_probability,
        spectrum_copies=c.spectrum_copies * dim * poly_nd / (eps_beta**2 * eps_lambda**3),
        anchor_swap_tests=c.anchor_tests * dim * poly_d / eps_beta**2,
        label_write_cost=c.label_write * poly_nd / eps_lambda**3,
        index_write_gates=c.index_write * dim * math.log2(1.0 / eps_lambda) * reg_factor,
        label_uncompute_cost=c.label_uncompute * poly_nd / eps_lambda**3,
        rotation_gates=c.rotation * dim * reg_factor,
        postselect_cost=c.postselect * poly_d,
        amplification_reps=sv_engine.amplification_repetitions(success_probability),
        constants=c,
    )


# -- spectrum discovery ------------------------------------------------------


def exact_spectrum(rho: RhoSpec, cfg: PhaseConfig, dim: int) -> SpectrumSample:
    """Spectrum entries taken straight from the oracle eigensystem, with the
    exact eigenvalues standing in for observed frequencies."""
    if not 1 <= dim <= rho.dim:
        raise OutOfRangeError(f"kept dimension {dim} out of range [1, {rho.dim}]")
    labels = sv_engine.check_label_distinctness(rho, cfg, dim)
    entries = tuple(
        SpectrumEntry(
            component=j,
            label=int(labels[j]),
            eigenvalue=float(rho.eigenvalues[j]),
            frequency=float(rho.eigenvalues[j]),
            vector=rho.eigenvectors[:, j].copy(),
        )
        for j in range(dim)
    )
    return SpectrumSample(entries=entries, histogram=None, budget=None, label_mode=cfg.label_mode)


def extract_spectrum(
    tree: QramTree,
    rho: RhoSpec,
    cfg: PhaseConfig,
    sampling_budget: int,
    rng_seed: int | None,
    *,
    dim: int,
    threshold: float,
) -> SpectrumSample:
    """Discover the leading labels by repeatedly preparing the labeled state
    and measuring the eigenvalue register.

    Succeeds when every one of the leading ``dim`` labels was observed and
    their cumulative empirical frequency reaches the variance threshold;
    otherwise raises UnderSampledError carrying the partial sample. The
    eigenvector payloads are read from the oracle eigensystem, standing in
    for the post-measurement states a device would keep.
    """
    if sampling_budget < 1:
        raise InvalidInputError("sampling budget must be >= 1")
    labels = sv_engine.check_label_distinctness(rho, cfg, dim)

    state = qram_store.prepare_data_state(tree)
    state = state.append_register("eigen", cfg.register_width(rho.dim))
    state = sv_engine.phase_estimate(rho, cfg, state, distinct_top=dim)
    sample = sv_engine.measure_register(state, "eigen", sampling_budget, rng_seed)

    entries = []
    covered = 0.0
    missing = []
    for j in range(dim):
        label = int(labels[j])
        freq = sample.frequency(label)
        if sample.counts.get(label, 0) == 0:
            missing.append(label)
        covered += freq
        entries.append(
            SpectrumEntry(
                component=j,
                label=label,
                eigenvalue=float(rho.eigenvalues[j]),
                frequency=freq,
                vector=rho.eigenvectors[:, j].copy(),
            )
        )
    result = SpectrumSample(
        entries=tuple(entries),
        histogram=sample.counts,
        budget=sampling_budget,
        label_mode=cfg.label_mode,
    )
    if missing or covered < threshold:
        raise UnderSampledError(
            f"budget {sampling_budget} found {dim - len(missing)}/{dim} leading labels "
            f"with cumulative frequency {covered:.4f} < {threshold}",
            partial=result,
        )
    return result


def default_sampling_budget(dim: int) -> int:
    return max(200, 50 * dim)


# -- anchor estimation -------------------------------------------------------


def _true_beta(tree: QramTree, spectrum: SpectrumSample, anchor_index: int) -> np.ndarray:
    anchor = qram_store.prepare_row_state(tree, anchor_index)
    amps = anchor.amplitudes.real
    beta = np.empty(spectrum.dim)
    for k, entry in enumerate(spectrum.entries):
        padded = np.zeros(tree.padded_cols)
        padded[: entry.vector.size] = entry.vector
        beta[k] = float(padded @ amps)
    return beta


def _vector_state(vector: np.ndarray, padded_cols: int, feature_qubits: int) -> StateVector:
    padded = np.zeros(padded_cols, dtype=np.complex128)
    padded[: vector.size] = vector
    return StateVector.from_amplitudes([("feature", feature_qubits)], padded)


def exact_anchor_profile(
    tree: QramTree,
    spectrum: SpectrumSample,
    anchor_index: int,
    *,
    eps_beta: float = 0.01,
    beta_floor: float = BETA_FLOOR,
) -> AnchorProfile:
    """Shot-free profile: the estimates equal the exact coefficients."""
    beta = _true_beta(tree, spectrum, anchor_index)
    if float(beta.min(initial=1.0)) < beta_floor:
        j = int(np.argmin(beta))
        raise WeakAnchorError(
            f"anchor row {anchor_index} has coefficient {beta[j]:.3e} on component {j} "
            f"below the floor {beta_floor}; redraw the anchor",
            anchor_index=anchor_index,
        )
    return AnchorProfile(
        anchor_index=anchor_index,
        beta=beta,
        beta_hat=beta.copy(),
        rotation_constant=float(beta.min()),
        residual=max(1.0 - float(np.sum(beta**2)), 0.0),
        eps_beta=eps_beta,
    )


def estimate_anchor(
    tree: QramTree,
    spectrum: SpectrumSample,
    eps_beta: float,
    rng_seed: int | None,
    *,
    anchor_index: int,
    estimator_constant: float = ANCHOR_SHOTS_CONSTANT,
    beta_floor: float = BETA_FLOOR,
) -> AnchorProfile:
    """Estimate every anchor coefficient by a seeded swap test against the
    corresponding eigenvector state, ceil(c / eps_beta^2) shots each.

    Estimates are sqrt(max(0, 2 p0_hat - 1)). Any estimate below the floor
    raises WeakAnchorError so the caller can redraw the anchor row.
    """
    if not 0.0 < eps_beta < 1.0:
        raise OutOfRangeError(f"eps_beta must lie in (0, 1), got {eps_beta}")
    shots = int(math.ceil(estimator_constant / eps_beta**2))
    anchor_state = qram_store.prepare_row_state(tree, anchor_index)
    rng = np.random.default_rng(rng_seed)
    seeds = rng.integers(0, 2**63 - 1, size=spectrum.dim)

    beta = _true_beta(tree, spectrum, anchor_index)
    beta_hat = np.empty(spectrum.dim)
    for k, entry in enumerate(spectrum.entries):
        target = _vector_state(entry.vector, tree.padded_cols, tree.feature_qubits)
        result = sv_engine.swap_test(anchor_state, target, shots, int(seeds[k]))
        beta_hat[k] = math.sqrt(max(result.overlap_sq_raw, 0.0))
    if float(beta_hat.min(initial=1.0)) < beta_floor:
        j = int(np.argmin(beta_hat))
        raise WeakAnchorError(
            f"estimated coefficient {beta_hat[j]:.3e} on component {j} for anchor row "
            f"{anchor_index} is below the floor {beta_floor}; redraw the anchor",
            anchor_index=anchor_index,
        )
    return AnchorProfile(
        anchor_index=anchor_index,
        beta=beta,
        beta_hat=beta_hat,
        rotation_constant=float(beta_hat.min()),
        residual=max(1.0 - float(np.sum(beta**2)), 0.0),
        eps_beta=eps_beta,
        shots_per_coefficient=shots,
        estimator_constant=estimator_constant,
    )


# -- compression --------------------------------------------------------------


@dataclass(frozen=True)
class OverlapSummary:
    max_deviation: float
    mean_deviation: float
    fraction_within: float
    tolerance: float
    n_pairs: int
    flagged_rows: tuple[int, ...]

    @classmethod
    def from_report(cls, report: pca_oracle.OverlapReport) -> "OverlapSummary":
        return cls(
            max_deviation=report.max_deviation,
            mean_deviation=report.mean_deviation,
            fraction_within=report.fraction_within,
            tolerance=report.tolerance,
            n_pairs=int(report.deviations.size),
            flagged_rows=report.flagged_rows,
        )


@dataclass(frozen=True)
class CompressionReport:
    scope: str
    run_mode: str
    n_rows: int
    n_cols: int
    selected_dim: int
    threshold: float
    variance_captured: float
    fidelity: float
    success_probability: float
    success_probability_identity: float
    amplification_reps: int
    rotation_constant: float
    anchor_index: int
    eps_beta: float
    eps_lambda: float
    sampled_success_probability: float | None
    postselect_shots: int | None
    overlap: OverlapSummary | None
    ledger: ResourceLedger


@dataclass(frozen=True)
class CompressResult:
    state: StateVector
    report: CompressionReport
    compressed: CompressedMatrix


def _identity_success_probability(
    compressed: CompressedMatrix,
    profile: AnchorProfile,
    data: DataMatrix,
    rows: np.ndarray,
) -> float:
    """Closed-form success probability: C^2 sum (y_ij beta_j / beta_hat_j)^2
    over the in-scope rows, normalized by those rows' squared data norms."""
    ratio = profile.beta / profile.beta_hat
    y = compressed.values[rows] * ratio[None, :]
    denom = float(np.sum(data.values[rows] ** 2))
    return float(profile.rotation_constant**2 * np.sum(y**2) / denom)


def compress(
    data: DataMatrix,
    model: SpectralModel,
    tree: QramTree,
    rho: RhoSpec,
    spectrum: SpectrumSample,
    profile: AnchorProfile,
    cfg: PhaseConfig,
    *,
    run_mode: str = MODE_IDEAL,
    scope: str = SCOPE_FULL,
    subset: Sequence[int] | None = None,
    row_index: int | None = None,
    postselect_shots: int | None = None,
    rng_seed: int | None = None,
    overlap_tolerance: float = 1e-6,
) -> CompressResult:
    """Run the compression circuit end to end on exact amplitudes.

    Scope 'full' compresses the whole dataset state, 'subset' the renormalized
    restriction to selected rows, 'single' one row on a lone feature register.
    Either way the output state carries component tokens 1..dim with label 0
    unused, and the report compares it against the classical projection.
    """
    d = spectrum.dim
    if scope not in (SCOPE_FULL, SCOPE_SUBSET, SCOPE_SINGLE):
        raise InvalidInputError(f"unknown scope {scope!r}")
    if profile.beta_hat.size != d:
        raise InvalidInputError("anchor profile and spectrum disagree on the kept dimension")

    rows = np.arange(data.n_rows)
    if scope == SCOPE_SUBSET:
        if subset is None or len(subset) == 0:
            raise InvalidInputError("subset scope needs a nonempty row subset")
        rows = np.unique(np.asarray(subset, dtype=int))
        if rows[0] < 0 or rows[-1] >= data.n_rows:
            raise OutOfRangeError(f"subset rows must lie in [0, {data.n_rows})")
    if scope == SCOPE_SINGLE:
        if row_index is None or not 0 <= row_index < data.n_rows:
            raise OutOfRangeError("single scope needs a valid row index")
        rows = np.array([row_index])

    # State preparation for the requested scope.
    if scope == SCOPE_SINGLE:
        state = qram_store.prepare_row_state(tree, int(row_index))
    else:
        state = qram_store.prepare_data_state(tree)
        if scope == SCOPE_SUBSET:
            state, _ = state.restrict_register("row", [int(r) for r in rows])

    index_qubits = max(int(math.ceil(math.log2(d + 1))), 1)
    state = state.append_register("eigen", cfg.register_width(rho.dim))
    state = sv_engine.phase_estimate(rho, cfg, state, distinct_top=d)
    state = state.append_register("index", index_qubits)
    state = sv_engine.apply_cu_lambda(state, spectrum.cu_labels())
    state = sv_engine.inverse_phase_estimate(rho, cfg, state)
    state = state.remove_register("eigen")
    state = state.append_register("ancilla", 1)
    state = sv_engine.apply_cr_beta(state, profile.beta_hat, profile.rotation_constant)

    anchor_inverse = qram_store.row_prep_unitary(tree, profile.anchor_index).T
    post = sv_engine.postselect(
        state,
        anchor_inverse,
        shots=postselect_shots,
        rng_seed=rng_seed,
    )

    # Oracle comparison.
    compressed = pca_oracle.project(data, model, d)
    if scope == SCOPE_SINGLE:
        reference = pca_oracle.expected_row_state(compressed, int(row_index))
        overlap = None
    else:
        mask = np.zeros(data.n_rows, dtype=bool)
        mask[rows] = True
        reference = pca_oracle.expected_compressed_state(
            compressed, row_mask=None if scope == SCOPE_FULL else mask
        )
        rep = pca_oracle.pairwise_overlap_report(data, compressed, overlap_tolerance)
        overlap = OverlapSummary.from_report(rep)

    fidelity = post.state.fidelity(reference)
    identity_p = _identity_success_probability(compressed, profile, data, rows)

    ledger = ledger_predict(
        n_rows=data.n_rows,
        n_cols=data.n_cols,
        dim=d,
        eps_lambda=cfg.eigenvalue_resolution,
        eps_beta=profile.eps_beta,
        success_probability=post.probability,
    )
    report = CompressionReport(
        scope=scope,
        run_mode=run_mode,
        n_rows=data.n_rows,
        n_cols=data.n_cols,
        selected_dim=d,
        threshold=model.threshold,
        variance_captured=model.variance_captured,
        fidelity=fidelity,
        success_probability=post.probability,
        success_probability_identity=identity_p,
        amplification_reps=post.amplification_reps,
        rotation_constant=profile.rotation_constant,
        anchor_index=profile.anchor_index,
        eps_beta=profile.eps_beta,
        eps_lambda=cfg.eigenvalue_resolution,
        sampled_success_probability=post.sampled_probability,
        postselect_shots=post.shots,
        overlap=overlap,
        ledger=ledger,
    )
    return CompressResult(state=post.state, report=report, compressed=compressed)


# -- run orchestration ---------------------------------------------------------


@dataclass(frozen=True)
class RunResult:
    data: DataMatrix
    model: SpectralModel
    tree: QramTree
    rho: RhoSpec
    cfg: PhaseConfig
    spectrum: SpectrumSample
    profile: AnchorProfile
    result: CompressResult
    anchor_attempts: tuple[int, ...]
    seed: int | None


def run_compression(
    data: DataMatrix,
    *,
    threshold: float = 0.95,
    run_mode: str = MODE_IDEAL,
    bits: int = 6,
    eps_beta: float = 0.01,
    shots: int = 100_000,
    seed: int | None = 0,
    anchor_index: int | None = None,
    scope: str = SCOPE_FULL,
    subset: Sequence[int] | None = None,
    row_index: int | None = None,
    sampling_budget: int | None = None,
    max_anchor_attempts: int = MAX_ANCHOR_ATTEMPTS,
) -> RunResult:
    """Whole pipeline with seeded anchor selection and weak-anchor redraw.

    A fixed ``anchor_index`` disables the redraw: a weak anchor then raises.
    Otherwise anchors are drawn uniformly (seeded) until the coefficient
    floor is met, up to ``max_anchor_attempts`` draws.
    """
    if run_mode not in RUN_MODES:
        raise InvalidInputError(f"unknown run mode {run_mode!r}; expected one of {RUN_MODES}")
    rng = np.random.default_rng(seed)
    anchor_seed, spectrum_seed, beta_seed, post_seed = (
        int(s) for s in rng.integers(0, 2**63 - 1, size=4)
    )
    anchor_rng = np.random.default_rng(anchor_seed)

    tree = qram_store.build_tree(data)
    cfg = PhaseConfig(bits=bits, label_mode=label_mode_for(run_mode))

    attempts: list[int] = []
    last_error: WeakAnchorError | None = None
    n_attempts = 1 if anchor_index is not None else max_anchor_attempts
    for _ in range(n_attempts):
        anchor = anchor_index if anchor_index is not None else int(anchor_rng.integers(data.n_rows))
        attempts.append(anchor)
        model = pca_oracle.svd_decompose(data, threshold, anchor)
        rho = RhoSpec.from_model(model)
        d = model.selected_dim
        try:
            if run_mode == MODE_SAMPLED:
                budget = sampling_budget if sampling_budget is not None else default_sampling_budget(d)
                spectrum = extract_spectrum(
                    tree, rho, cfg, budget, spectrum_seed, dim=d, threshold=threshold
                )
                profile = estimate_anchor(tree, spectrum, eps_beta, beta_seed, anchor_index=anchor)
            else:
                spectrum = exact_spectrum(rho, cfg, d)
                profile = exact_anchor_profile(tree, spectrum, anchor, eps_beta=eps_beta)
        except WeakAnchorError as exc:
            if anchor_index is not None:
                raise
            last_error = exc
            continue
        result = compress(
            data,
            model,
            tree,
            rho,
            spectrum,
            profile,
            cfg,
            run_mode=run_mode,
            scope=scope,
            subset=subset,
            row_index=row_index,
            postselect_shots=shots if run_mode == MODE_SAMPLED else None,
            rng_seed=post_seed,
        )
        return RunResult(
            data=data,
            model=model,
            tree=tree,
            rho=rho,
            cfg=cfg,
            spectrum=spectrum,
            profile=profile,
            result=result,
            anchor_attempts=tuple(attempts),
            seed=seed,
        )
    raise WeakAnchorError(
        f"no usable anchor after {len(attempts)} draw(s) {attempts}: {last_error}",
        anchor_index=attempts[-1],
    )


# -- coefficient-error scaling -------------------------------------------------


PERTURB_ALTERNATING = "alternating"
PERTURB_UNIFORM_RELATIVE = "uniform-relative"


def perturb_beta(beta: np.ndarray, eps: float, kind: str) -> np.ndarray:
    """Controlled coefficient perturbations of magnitude ``eps``."""
    if kind == PERTURB_ALTERNATING:
        signs = np.where(np.arange(beta.size) % 2 == 0, 1.0, -1.0)
        out = beta + signs * eps
    elif kind == PERTURB_UNIFORM_RELATIVE:
        out = beta * (1.0 + eps)
    else:
        raise InvalidInputError(f"unknown perturbation kind {kind!r}")
    return np.clip(out, BETA_FLOOR, 1.0)


@dataclass(frozen=True)
class ScalingRow:
    eps_beta: float
    mean_infidelity: float
    mean_deviation: float


@dataclass(frozen=True)
class ScalingResult:
    """Final-state error versus the coefficient perturbation magnitude.

    ``mean_deviation`` rows track sqrt(1 - fidelity^2), the sine of the angle
    between the produced and ideal states; it grows linearly in small
    perturbations where the infidelity itself is quadratic.
    """

    rows: tuple[ScalingRow, ...]
    slope: float                 # least-squares slope of deviation vs eps, through the origin
    slope_scaled: float          # same fit against eps / sqrt(dim)
    dims: tuple[int, ...]
    perturbation: str
    n_seeds: int


def error_scaling_experiment(
    dataset_generator: Callable[[int], DataMatrix],
    eps_grid: Sequence[float],
    seeds: Sequence[int],
    *,
    threshold: float = 0.95,
    perturbation: str = PERTURB_ALTERNATING,
    bits: int = 6,
) -> ScalingResult:
    """Sweep coefficient perturbations across seeded datasets, ideal mode.

    For each seed the generator supplies a dataset; the anchor is drawn with
    the usual seeded redraw; the coefficients are perturbed by each grid
    magnitude and the resulting final-state deviation is averaged per grid
    point.
    """
    if not eps_grid:
        raise InvalidInputError("eps grid must be nonempty")
    if not seeds:
        raise InvalidInputError("seed list must be nonempty")
    grid = [float(e) for e in eps_grid]
    if any(e < 0.0 for e in grid):
        raise OutOfRangeError("perturbation magnitudes must be nonnegative")

    dims = set()
    infid = np.zeros(len(grid))
    dev = np.zeros(len(grid))
    for seed in seeds:
        data = dataset_generator(int(seed))
        tree = qram_store.build_tree(data)
        cfg = PhaseConfig(bits=bits, label_mode=sv_engine.LABEL_MODE_IDEAL)
        anchor_rng = np.random.default_rng(int(seed))

        model = profile0 = None
        for _ in range(MAX_ANCHOR_ATTEMPTS):
            anchor = int(anchor_rng.integers(data.n_rows))
            candidate = pca_oracle.svd_decompose(data, threshold, anchor)
            spectrum = exact_spectrum(RhoSpec.from_model(candidate), cfg, candidate.selected_dim)
            try:
                profile0 = exact_anchor_profile(tree, spectrum, anchor)
            except WeakAnchorError:
                continue
            model = candidate
            break
        if model is None:
            raise WeakAnchorError(f"no usable anchor for seed {seed}")
        rho = RhoSpec.from_model(model)
        spectrum = exact_spectrum(rho, cfg, model.selected_dim)
        dims.add(model.selected_dim)

        for k, eps in enumerate(grid):
            beta_hat = perturb_beta(profile0.beta, eps, perturbation)
            profile = replace(
                profile0,
                beta_hat=beta_hat,
                rotation_constant=float(beta_hat.min()),
                eps_beta=max(eps, 1e-12),
            )
            res = compress(data, model, tree, rho, spectrum, profile, cfg, run_mode=MODE_IDEAL)
            f = res.report.fidelity
            infid[k] += max(1.0 - f, 0.0)
            dev[k] += math.sqrt(max(1.0 - f * f, 0.0))

    infid /= len(seeds)
    dev /= len(seeds)
    rows = tuple(ScalingRow(grid[k], float(infid[k]), float(dev[k])) for k in range(len(grid)))

    e = np.array(grid)
    nz = e > 0.0
    if np.any(nz):
        slope = float(np.sum(e[nz] * dev[nz]) / np.sum(e[nz] ** 2))
    else:
        slope = 0.0
    mean_dim = float(np.mean(sorted(dims))) if dims else 1.0
    return ScalingResult(
        rows=rows,
        slope=slope,
        slope_scaled=slope * math.sqrt(mean_dim),
        dims=tuple(sorted(dims)),
        perturbation=perturbation,
        n_seeds=len(seeds),
    )
