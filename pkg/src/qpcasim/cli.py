"""Command-line interface: CSV ingestion, task orchestration, JSON reports.

One process runs one task (compress, qsvm, qlr, scaling, or ledger) on one
dataset and writes a single JSON report. Reports are byte-identical for
identical config and seed: keys are sorted, values are plain Python types,
and anything nondeterministic (wall-clock timings) goes to stderr instead.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import qml_apps
from .errors import InvalidInputError, OutOfRangeError, ParseError, QpcaError, WeakAnchorError
from .pca_oracle import DataMatrix, SpectralModel, project, svd_decompose
from .qpca_pipeline import (
    MODE_IDEAL,
    MODE_QUANTIZED,
    MODE_SAMPLED,
    MAX_ANCHOR_ATTEMPTS,
    PERTURB_ALTERNATING,
    CompressionReport,
    ResourceLedger,
    RunResult,
    error_scaling_experiment,
    exact_anchor_profile,
    exact_spectrum,
    ledger_predict,
    run_compression,
)
from .qram_store import build_tree
from .sv_engine import LABEL_MODE_IDEAL, PhaseConfig, RhoSpec

TASKS = ("compress", "qsvm", "qlr", "scaling", "ledger")
MODES = (MODE_IDEAL, MODE_QUANTIZED, MODE_SAMPLED)

SCALING_EPS_GRID = (0.0, 0.02, 0.04, 0.08)
SCALING_SEED_COUNT = 8


@dataclass
class RunConfig:
    """Everything one invocation needs; mirrors the CLI flags one-to-one."""

    input_path: str
    labels_path: str | None = None
    theta: float = 0.95
    bits: int = 6
    mode: str = MODE_IDEAL
    eps_beta: float = 0.01
    shots: int = 100_000
    seed: int = 0
    task: str = "compress"
    subset: tuple[int, ...] | None = None
    anchor_index: int | None = None
    gamma: float = 1.0
    output_path: str | None = None
    plot_dir: str | None = None

    def validate(self) -> None:
        if not 0.0 < self.theta <= 1.0:
            raise OutOfRangeError(f"theta must lie in (0, 1], got {self.theta}")
        if self.bits < 1:
            raise OutOfRangeError(f"bits must be >= 1, got {self.bits}")
        if self.shots < 1:
            raise OutOfRangeError(f"shots must be >= 1, got {self.shots}")
        if not 0.0 < self.eps_beta < 1.0:
            raise OutOfRangeError(f"eps-beta must lie in (0, 1), got {self.eps_beta}")
        if self.gamma <= 0.0:
            raise OutOfRangeError(f"gamma must be positive, got {self.gamma}")
        if self.task not in TASKS:
            raise InvalidInputError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.mode not in MODES:
            raise InvalidInputError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.subset is not None and len(self.subset) == 0:
            raise InvalidInputError("subset, when given, must name at least one row")

    def echo(self) -> dict:
        out = asdict(self)
        out["subset"] = list(self.subset) if self.subset is not None else None
        return out


# -- ingestion -------------------------------------------------------------------


def ingest_csv(path: str) -> DataMatrix:
    """Read a comma-separated numeric matrix.

    Lines starting with '#' and blank lines are skipped. Every remaining
    line must have the same number of fields, all finite numbers, and no
    row may be entirely zero. Parse failures carry 1-based line (and
    column) positions.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from None

    rows: list[list[float]] = []
    row_lines: list[int] = []
    width: int | None = None
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [f.strip() for f in stripped.split(",")]
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ParseError(
                f"line {lineno}: expected {width} fields, found {len(fields)}",
                line=lineno,
            )
        values = []
        for col, token in enumerate(fields, start=1):
            try:
                value = float(token)
            except ValueError:
                raise ParseError(
                    f"line {lineno}, column {col}: not a number: {token!r}",
                    line=lineno,
                    column=col,
                ) from None
            if not math.isfinite(value):
                raise ParseError(
                    f"line {lineno}, column {col}: non-finite value {token!r}",
                    line=lineno,
                    column=col,
                )
            values.append(value)
        rows.append(values)
        row_lines.append(lineno)

    if not rows:
        raise ParseError(f"{path}: no data rows")
    arr = np.array(rows, dtype=np.float64)
    zero = np.nonzero(np.linalg.norm(arr, axis=1) == 0.0)[0]
    if zero.size:
        raise ParseError(
            f"line {row_lines[int(zero[0])]}: row is entirely zero",
            line=row_lines[int(zero[0])],
        )
    return DataMatrix(arr)


def read_values(path: str, expected_rows: int) -> np.ndarray:
    """Read one number per line (labels or regression targets)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from None
    values = []
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            value = float(stripped)
        except ValueError:
            raise ParseError(
                f"line {lineno}: not a number: {stripped!r}", line=lineno, column=1
            ) from None
        if not math.isfinite(value):
            raise ParseError(f"line {lineno}: non-finite value", line=lineno, column=1)
        values.append(value)
    if len(values) != expected_rows:
        raise ParseError(
            f"{path}: expected {expected_rows} values, found {len(values)}"
        )
    return np.array(values, dtype=np.float64)


# -- report assembly ---------------------------------------------------------------


def _spectrum_summary(model: SpectralModel) -> dict:
    return {
        "n_rows": int(model.n_rows),
        "n_cols": int(model.n_cols),
        "singular_values": [float(s) for s in model.singular_values],
        "variance_proportions": [float(v) for v in model.variance_proportions],
        "cumulative_variance": [float(c) for c in model.cumulative_variance()],
        "rank": int(model.rank),
        "selected_dim": int(model.selected_dim),
        "threshold": float(model.threshold),
        "variance_captured": float(model.variance_captured),
        "anchor_index": int(model.anchor_index),
    }


def _anchor_summary(profile) -> dict:
    return {
        "anchor_index": int(profile.anchor_index),
        "beta": [float(b) for b in profile.beta],
        "beta_hat": [float(b) for b in profile.beta_hat],
        "rotation_constant": float(profile.rotation_constant),
        "residual": float(profile.residual),
        "eps_beta": float(profile.eps_beta),
        "shots_per_coefficient": (
            int(profile.shots_per_coefficient)
            if profile.shots_per_coefficient is not None
            else None
        ),
    }


def _ledger_summary(ledger: ResourceLedger) -> dict:
    return {
        "n_rows": int(ledger.n_rows),
        "n_cols": int(ledger.n_cols),
        "dim": int(ledger.dim),
        "eps_lambda": float(ledger.eps_lambda),
        "eps_beta": float(ledger.eps_beta),
        "success_probability": float(ledger.success_probability),
        "spectrum_copies": float(ledger.spectrum_copies),
        "anchor_swap_tests": float(ledger.anchor_swap_tests),
        "label_write_cost": float(ledger.label_write_cost),
        "index_write_gates": float(ledger.index_write_gates),
        "label_uncompute_cost": float(ledger.label_uncompute_cost),
        "rotation_gates": float(ledger.rotation_gates),
        "postselect_cost": float(ledger.postselect_cost),
        "amplification_reps": int(ledger.amplification_reps),
        "amplified_cost": {k: float(v) for k, v in ledger.amplified_cost().items()},
    }


def _compression_summary(report: CompressionReport) -> dict:
    overlap = None
    if report.overlap is not None:
        overlap = {
            "max_deviation": float(report.overlap.max_deviation),
            "mean_deviation": float(report.overlap.mean_deviation),
            "fraction_within": float(report.overlap.fraction_within),
            "tolerance": float(report.overlap.tolerance),
            "n_pairs": int(report.overlap.n_pairs),
            "flagged_rows": [int(r) for r in report.overlap.flagged_rows],
        }
    return {
        "scope": report.scope,
        "run_mode": report.run_mode,
        "n_rows": int(report.n_rows),
        "n_cols": int(report.n_cols),
        "selected_dim": int(report.selected_dim),
        "threshold": float(report.threshold),
        "variance_captured": float(report.variance_captured),
        "fidelity": float(report.fidelity),
        "success_probability": float(report.success_probability),
        "success_probability_identity": float(report.success_probability_identity),
        "amplification_reps": int(report.amplification_reps),
        "rotation_constant": float(report.rotation_constant),
        "anchor_index": int(report.anchor_index),
        "eps_beta": float(report.eps_beta),
        "eps_lambda": float(report.eps_lambda),
        "sampled_success_probability": (
            float(report.sampled_success_probability)
            if report.sampled_success_probability is not None
            else None
        ),
        "postselect_shots": (
            int(report.postselect_shots) if report.postselect_shots is not None else None
        ),
        "overlap": overlap,
    }


def _success_sweep(run: RunResult) -> list[dict]:
    """Closed-form success probability versus kept dimension, exact
    coefficients, for scree-style plots."""
    model = run.model
    anchor_row = run.data.values[run.profile.anchor_index]
    unit = anchor_row / np.linalg.norm(anchor_row)
    beta_all = model.right_vectors.T @ unit
    cum = model.cumulative_variance()
    sweep = []
    for dim in range(1, model.rank + 1):
        c = float(np.min(beta_all[:dim]))
        if c <= 1e-12:
            sweep.append({"dim": dim, "rotation_constant": 0.0, "success_probability": 0.0})
        else:
            sweep.append(
                {
                    "dim": dim,
                    "rotation_constant": c,
                    "success_probability": float(c * c * cum[dim - 1]),
                }
            )
    return sweep


# -- tasks -----------------------------------------------------------------------


def _task_compress(config: RunConfig, data: DataMatrix) -> dict:
    scope = "subset" if config.subset is not None else "full"
    run = run_compression(
        data,
        threshold=config.theta,
        run_mode=config.mode,
        bits=config.bits,
        eps_beta=config.eps_beta,
        shots=config.shots,
        seed=config.seed,
        anchor_index=config.anchor_index,
        scope=scope,
        subset=config.subset,
    )
    return {
        "spectrum": _spectrum_summary(run.model),
        "anchor": _anchor_summary(run.profile),
        "compression": _compression_summary(run.result.report),
        "ledger": _ledger_summary(run.result.report.ledger),
        "success_probability_sweep": _success_sweep(run),
        "anchor_attempts": [int(a) for a in run.anchor_attempts],
    }


def _task_qsvm(config: RunConfig, data: DataMatrix, labels: np.ndarray) -> dict:
    dataset = qml_apps.LabeledDataset(data, labels, gamma=config.gamma)
    model = svd_decompose(data, config.theta, config.anchor_index or 0)
    compressed = project(data, model)

    full = qml_apps.lssvm_train(dataset, data.values)
    comp = qml_apps.lssvm_train(dataset, compressed.values)

    def training_stats(svm, points):
        decisions = [qml_apps.lssvm_decision_value(svm, points, q) for q in points]
        signs = [1 if d >= 0.0 else -1 for d in decisions]
        accuracy = float(np.mean([s == l for s, l in zip(signs, labels)]))
        return decisions, accuracy

    full_dec, full_acc = training_stats(full, data.values)
    comp_dec, comp_acc = training_stats(comp, compressed.values)

    rng = np.random.default_rng(config.seed)
    demo_seeds = rng.integers(0, 2**63 - 1, size=data.n_rows)
    sign_agreements = 0
    inconclusive = 0
    sampled = config.mode == MODE_SAMPLED
    for i, query in enumerate(data.values):
        demo = qml_apps.qsvm_state_demo(
            full,
            data.values,
            query,
            shots=config.shots if sampled else None,
            rng_seed=int(demo_seeds[i]) if sampled else None,
        )
        if demo.agrees:
            sign_agreements += 1
        if demo.inconclusive:
            inconclusive += 1

    return {
        "spectrum": _spectrum_summary(model),
        "qsvm": {
            "gamma": float(config.gamma),
            "full": {
                "bias": float(full.bias),
                "residual": float(full.residual),
                "training_accuracy": full_acc,
                "decision_values": [float(v) for v in full_dec],
            },
            "compressed": {
                "dim": int(compressed.selected_dim),
                "bias": float(comp.bias),
                "residual": float(comp.residual),
                "training_accuracy": comp_acc,
                "decision_values": [float(v) for v in comp_dec],
            },
            "accuracy_match": bool(full_acc == comp_acc),
            "demo": {
                "queries": int(data.n_rows),
                "sign_agreements": int(sign_agreements),
                "inconclusive": int(inconclusive),
                "shots": config.shots if sampled else None,
            },
        },
    }


def _task_qlr(config: RunConfig, data: DataMatrix, targets: np.ndarray) -> dict:
    model = svd_decompose(data, config.theta, config.anchor_index or 0)
    compressed = project(data, model)

    preds_orig = [
        qml_apps.qlr_predict(data.values, targets, q).value for q in data.values
    ]
    preds_comp = [
        qml_apps.qlr_predict(compressed.values, targets, q).value for q in compressed.values
    ]
    err_orig = float(np.max(np.abs(np.array(preds_orig) - targets)))
    err_comp = float(np.max(np.abs(np.array(preds_comp) - targets)))
    gap = float(np.max(np.abs(np.array(preds_orig) - np.array(preds_comp))))

    sampled = config.mode == MODE_SAMPLED
    demo = qml_apps.qlr_state_demo(
        data.values,
        targets,
        data.values[0],
        shots=config.shots if sampled else None,
        rng_seed=config.seed if sampled else None,
    )

    return {
        "spectrum": _spectrum_summary(model),
        "qlr": {
            "predictions_original": [float(v) for v in preds_orig],
            "predictions_compressed": [float(v) for v in preds_comp],
            "targets": [float(v) for v in targets],
            "max_abs_error_original": err_orig,
            "max_abs_error_compressed": err_comp,
            "max_original_vs_compressed_gap": gap,
            "demo": {
                "query_row": 0,
                "prediction": float(demo.prediction),
                "classical_value": float(demo.classical_value),
                "rescale_factor": float(demo.rescale_factor),
                "inconclusive": bool(demo.inconclusive),
                "shots": demo.shots,
            },
        },
    }


def _task_scaling(config: RunConfig, data: DataMatrix) -> dict:
    model = svd_decompose(data, config.theta, config.anchor_index or 0)
    rng = np.random.default_rng(config.seed)
    seeds = [int(s) for s in rng.integers(0, 2**63 - 1, size=SCALING_SEED_COUNT)]
    result = error_scaling_experiment(
        lambda _seed: data,
        SCALING_EPS_GRID,
        seeds,
        threshold=config.theta,
        perturbation=PERTURB_ALTERNATING,
        bits=config.bits,
    )
    return {
        "spectrum": _spectrum_summary(model),
        "scaling": {
            "perturbation": result.perturbation,
            "n_seeds": int(result.n_seeds),
            "dims": [int(d) for d in result.dims],
            "slope": float(result.slope),
            "slope_scaled": float(result.slope_scaled),
            "rows": [
                {
                    "eps_beta": float(r.eps_beta),
                    "mean_infidelity": float(r.mean_infidelity),
                    "mean_deviation": float(r.mean_deviation),
                }
                for r in result.rows
            ],
        },
    }


def _task_ledger(config: RunConfig, data: DataMatrix) -> dict:
    tree = build_tree(data)
    cfg = PhaseConfig(bits=config.bits, label_mode=LABEL_MODE_IDEAL)
    rng = np.random.default_rng(config.seed)
    if config.anchor_index is not None:
        candidates = [config.anchor_index]
    else:
        candidates = [int(rng.integers(data.n_rows)) for _ in range(MAX_ANCHOR_ATTEMPTS)]

    last_error: WeakAnchorError | None = None
    model = profile = None
    for anchor in candidates:
        candidate_model = svd_decompose(data, config.theta, anchor)
        spectrum = exact_spectrum(
            RhoSpec.from_model(candidate_model), cfg, candidate_model.selected_dim
        )
        try:
            profile = exact_anchor_profile(tree, spectrum, anchor, eps_beta=config.eps_beta)
        except WeakAnchorError as exc:
            last_error = exc
            continue
        model = candidate_model
        break
    if model is None:
        raise last_error

    p = float(profile.rotation_constant**2 * model.variance_captured)
    ledger = ledger_predict(
        n_rows=data.n_rows,
        n_cols=data.n_cols,
        dim=model.selected_dim,
        eps_lambda=cfg.eigenvalue_resolution,
        eps_beta=config.eps_beta,
        success_probability=p,
    )
    return {
        "spectrum": _spectrum_summary(model),
        "anchor": _anchor_summary(profile),
        "ledger": _ledger_summary(ledger),
    }


# -- output ----------------------------------------------------------------------


def render_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report(report: dict, output_path: str | None) -> None:
    """Serialize the report; file writes go through a temp-and-rename so a
    failed run never leaves a partial report behind."""
    text = render_report(report)
    if output_path is None:
        sys.stdout.write(text)
        return
    tmp_path = output_path + ".tmp"
    try:
        with open(tmp_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp_path, output_path)
    except OSError as exc:
        raise InvalidInputError(f"cannot write report to {output_path}: {exc}") from None


def _write_table(path: str, header: str, rows: list[tuple]) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(" ".join("%.17g" % float(v) for v in row) + "\n")
    except OSError as exc:
        raise InvalidInputError(f"cannot write plot data to {path}: {exc}") from None


def emit_plot_data(report: dict, output_dir: str) -> list[str]:
    """Write whitespace-separated tables for whatever the report contains.

    Up to three files: scree.dat (component, variance proportion),
    infidelity_vs_eps_beta.dat, and success_probability.dat. Values are
    printed with %.17g so they re-parse to the report's floats exactly.
    """
    try:
        os.makedirs(output_dir, exist_ok=True)
    except OSError as exc:
        raise InvalidInputError(f"cannot create plot directory {output_dir}: {exc}") from None

    written = []
    spectrum = report.get("spectrum")
    if spectrum:
        path = os.path.join(output_dir, "scree.dat")
        rows = [(j + 1, lam) for j, lam in enumerate(spectrum["variance_proportions"])]
        _write_table(path, "# component variance_proportion", rows)
        written.append(path)

    scaling = report.get("scaling")
    if scaling:
        path = os.path.join(output_dir, "infidelity_vs_eps_beta.dat")
        rows = [
            (r["eps_beta"], r["mean_infidelity"], r["mean_deviation"])
            for r in scaling["rows"]
        ]
        _write_table(path, "# eps_beta mean_infidelity mean_deviation", rows)
        written.append(path)

    sweep = report.get("success_probability_sweep")
    if sweep:
        path = os.path.join(output_dir, "success_probability.dat")
        rows = [(r["dim"], r["success_probability"]) for r in sweep]
        _write_table(path, "# dim success_probability", rows)
        written.append(path)
    return written


# -- entry point -------------------------------------------------------------------


def run(config: RunConfig) -> dict:
    """Execute one task and return the report dictionary."""
    config.validate()
    data = ingest_csv(config.input_path)

    labels = None
    if config.labels_path is not None:
        labels = read_values(config.labels_path, data.n_rows)

    if config.task == "compress":
        body = _task_compress(config, data)
    elif config.task == "qsvm":
        if labels is None:
            raise InvalidInputError("task qsvm needs --labels with one +-1 label per row")
        body = _task_qsvm(config, data, labels)
    elif config.task == "qlr":
        if labels is None:
            raise InvalidInputError("task qlr needs --labels with one target value per row")
        body = _task_qlr(config, data, labels)
    elif config.task == "scaling":
        body = _task_scaling(config, data)
    else:
        body = _task_ledger(config, data)

    report = {"config": config.echo(), "seed": config.seed, "task": config.task}
    report.update(body)
    return report


def _parse_subset(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise InvalidInputError(f"subset must be comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpcasim",
        description="Simulated spectral compression of a data matrix, with "
        "classifier and regression demos on the compressed representation.",
    )
    parser.add_argument("--input", required=True, help="CSV data matrix, rows are points")
    parser.add_argument("--labels", help="one value per line: +-1 labels (qsvm) or targets (qlr)")
    parser.add_argument("--theta", type=float, default=0.95, help="variance threshold in (0, 1]")
    parser.add_argument("--bits", type=int, default=6, help="eigenvalue label register width")
    parser.add_argument("--mode", choices=MODES, default=MODE_IDEAL)
    parser.add_argument("--eps-beta", type=float, default=0.01, dest="eps_beta",
                        help="target accuracy for anchor coefficient estimates")
    parser.add_argument("--shots", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--task", choices=TASKS, default="compress")
    parser.add_argument("--subset", help="comma-separated row indices (compress task only)")
    parser.add_argument("--anchor", type=int, dest="anchor_index",
                        help="fixed anchor row (default: seeded draw with redraw on weak anchors)")
    parser.add_argument("--gamma", type=float, default=1.0, help="LS-SVM regularization weight")
    parser.add_argument("--out", dest="output_path", help="report file (default: stdout)")
    parser.add_argument("--plot-dir", dest="plot_dir", help="directory for tabular plot data")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(
            input_path=args.input,
            labels_path=args.labels,
            theta=args.theta,
            bits=args.bits,
            mode=args.mode,
            eps_beta=args.eps_beta,
            shots=args.shots,
            seed=args.seed,
            task=args.task,
            subset=_parse_subset(args.subset) if args.subset is not None else None,
            anchor_index=args.anchor_index,
            gamma=args.gamma,
            output_path=args.output_path,
            plot_dir=args.plot_dir,
        )
        started = time.perf_counter()
        report = run(config)
        elapsed = time.perf_counter() - started
        write_report(report, config.output_path)
        if config.plot_dir is not None:
            emit_plot_data(report, config.plot_dir)
        print(f"task {config.task} finished in {elapsed:.3f}s", file=sys.stderr)
        return 0
    except QpcaError as exc:
        sys.stdout.write(json.dumps({"error": exc.payload()}, sort_keys=True, indent=2) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
