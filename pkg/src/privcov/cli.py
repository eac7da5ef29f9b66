"""Command-line entry point.

Subcommands: ``perturb`` (publish a noisy covariance), ``pca`` (eigenvalues
and top-k subspace of a matrix file), ``audit`` (privacy checks), ``bench``
(utility sweeps to CSV), ``choose`` (mechanism selection).  All outputs are
deterministic functions of the flags: identical config and seed give
byte-identical files.

Exit codes: 0 success, 1 usage/input error, 2 audit failure, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .audit import (
    TailBoundParams,
    l1_sensitivity_bracket,
    nuclear_grid_search_2d,
    nuclear_sensitivity_check,
    privacy_ratio_audit,
    tail_bound_audit,
)
from .matrix import NumericalError, eig_sym, load_matrix, save_matrix, SymmetricMatrix
from .mechanisms import (
    DataMatrix,
    PrivacyBudget,
    choose_mechanism,
    gaussian_perturb,
    laplace_perturb,
    wishart_perturb,
)
from .sampling import RngStream
from .utility import (
    CloseApproxParams,
    close_approx_audit,
    axis_aligned_dataset,
    low_rank_error_audit,
    spiked_dataset,
    subspace_closeness_audit,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_AUDIT_FAILURE = 2
EXIT_NUMERICAL = 3

_MECHANISMS = {"laplace": laplace_perturb, "wishart": wishart_perturb, "gaussian": gaussian_perturb}


def ingest(path, normalize: bool = False) -> DataMatrix:
    """Load a CSV of one data point per row into a d x n DataMatrix.

    An optional header row is skipped; ragged or non-numeric rows are
    rejected.  Points whose l2 norm exceeds 1 are an error unless
    ``normalize`` is set, in which case every point is divided by the
    largest norm (a global rescale, which preserves the PCA directions).
    """
    raw = Path(path).read_text(encoding="utf-8")
    rows = [r for r in csv.reader(io.StringIO(raw)) if any(cell.strip() for cell in r)]
    if rows and not _all_numeric(rows[0]):
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    parsed = []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: row {i} has {len(row)} cells, expected {width}")
        try:
            parsed.append([float(cell) for cell in row])
        except ValueError as exc:
            raise ValueError(f"{path}: row {i} contains a non-numeric cell") from exc
    pts = np.array(parsed, dtype=np.float64).T  # rows are points -> columns are points
    norms = np.sqrt((pts**2).sum(axis=0))
    max_norm = float(norms.max())
    if max_norm > 1.0 + 1e-12:
        if normalize:
            pts = pts / max_norm
        else:
            offenders = np.nonzero(norms > 1.0 + 1e-12)[0].tolist()
            raise ValueError(
                f"{path}: rows {offenders} have l2 norm > 1 (max {max_norm:.6g}); "
                "pass --normalize to rescale globally"
            )
    return DataMatrix(pts)


def _all_numeric(row) -> bool:
    try:
        for cell in row:
            float(cell)
    except ValueError:
        return False
    return True


def render_json(payload: dict) -> str:
    """Stable-ordered JSON with full-precision floats."""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def emit_report(payload: dict, path) -> None:
    Path(path).write_text(render_json(payload), encoding="ascii")


def run_pca(cov_path, k: int, values_out, vectors_out, projector_out=None) -> dict:
    """Eigendecompose a matrix file and write the spectrum and V_k columns.

    The eigenvalues file holds one line with the k largest values in
    descending order; the vectors file starts with "d k" and then d rows of
    k entries.  The returned summary carries the full spectrum and flags
    indefinite inputs, where the signed top-k choice can differ from the
    magnitude ordering.
    """
    a = load_matrix(cov_path)
    if not 1 <= k <= a.dim:
        raise ValueError(f"k must satisfy 1 <= k <= {a.dim}, got {k}")
    decomp = eig_sym(a)
    values = decomp.eigenvalues
    vk = decomp.top_vectors(k)
    Path(values_out).write_text(
        " ".join(repr(float(x)) for x in values[:k]) + "\n", encoding="ascii"
    )
    lines = [f"{a.dim} {k}"]
    for row in vk:
        lines.append(" ".join(repr(float(x)) for x in row))
    Path(vectors_out).write_text("\n".join(lines) + "\n", encoding="ascii")
    if projector_out is not None:
        save_matrix(SymmetricMatrix(vk @ vk.T), projector_out)
    return {
        "d": a.dim,
        "k": k,
        "eigenvalues": [float(x) for x in values],
        "input_indefinite": bool(values[-1] < -1e-10),
        "values_file": str(values_out),
        "vectors_file": str(vectors_out),
    }


def load_vectors(path) -> np.ndarray:
    """Read the d x k vectors file written by run_pca."""
    lines = [ln for ln in Path(path).read_text(encoding="ascii").splitlines() if ln.strip()]
    d, k = (int(tok) for tok in lines[0].split())
    rows = [[float(tok) for tok in ln.split()] for ln in lines[1:]]
    arr = np.array(rows)
    if arr.shape != (d, k):
        raise ValueError(f"{path}: expected {d} x {k} vector block, got {arr.shape}")
    return arr


def _config_dict(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in cfg.items()}


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_perturb(args) -> int:
    X = ingest(args.input, normalize=args.normalize)
    budget = PrivacyBudget(args.epsilon, args.delta)
    rng = RngStream(args.seed, args.stream)
    report = _MECHANISMS[args.mechanism](X, budget, rng, args.scaling)
    save_matrix(report.output, args.output)
    payload = {"schema_version": SCHEMA_VERSION, "config": _config_dict(args)}
    payload.update(report.to_dict())
    emit_report(payload, args.report)
    print(
        f"{args.mechanism}: d={report.dim} n={report.count} "
        f"noise_spectral_norm={report.noise_spectral_norm!r} "
        f"min_output_eigenvalue={report.min_output_eigenvalue!r}"
    )
    return EXIT_OK


def cmd_pca(args) -> int:
    summary = run_pca(args.input, args.k, args.values_out, args.vectors_out, args.projector_out)
    summary["schema_version"] = SCHEMA_VERSION
    summary["config"] = _config_dict(args)
    sys.stdout.write(render_json(summary))
    return EXIT_OK


def cmd_choose(args) -> int:
    mechanism = choose_mechanism(args.max_l11, args.max_nuclear, args.d)
    ratio = args.max_l11 / args.max_nuclear
    threshold = math.sqrt(args.d) * math.log(args.d)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_dict(args),
        "mechanism": mechanism,
        "ratio": ratio,
        "threshold": threshold,
        # the natural-log choice only matters in a narrow band around the
        # threshold; flag it so callers can double-check such cases
        "near_threshold": bool(abs(ratio - threshold) <= 0.25 * max(threshold, 1e-300)),
    }
    sys.stdout.write(render_json(payload))
    return EXIT_OK


def cmd_audit(args) -> int:
    rng = RngStream(args.seed, args.stream)
    if args.check == "privacy":
        verdict = privacy_ratio_audit(args.trials, args.d, args.n, args.epsilon, rng).to_dict()
    elif args.check == "nuclear":
        worst = nuclear_sensitivity_check(args.trials, args.d, args.n, rng)
        verdict = {
            "check": "nuclear",
            "d": args.d,
            "n": args.n,
            "trials": args.trials,
            "max_observed": worst,
            "bound": 3.0,
            "passed": worst <= 3.0 + 1e-9,
        }
        if args.d == 2:
            grid = nuclear_grid_search_2d(args.grid_step or 0.01)
            verdict["grid_max"] = grid
            verdict["passed"] = bool(verdict["passed"] and grid >= 2.0)
    elif args.check == "l1":
        verdict = l1_sensitivity_bracket(args.d, args.n, args.grid_step).to_dict()
    elif args.check == "tail":
        params = TailBoundParams(
            dim=args.d,
            dof=args.dof if args.dof is not None else args.d + 1,
            scale_eigenvalue=args.scale,
            theta=args.theta,
        )
        verdict = tail_bound_audit(params, args.trials, rng).to_dict()
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown check {args.check!r}")
    verdict["schema_version"] = SCHEMA_VERSION
    verdict["config"] = _config_dict(args)
    text = render_json(verdict)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="ascii")
    return EXIT_OK if verdict["passed"] else EXIT_AUDIT_FAILURE


def _geometric_fractions(d: int, ratio: float = 0.6) -> np.ndarray:
    f = ratio ** np.arange(d)
    return f / f.sum()


def _write_csv(path, config: dict, header: list, rows: list) -> None:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    Path(path).write_text(buf.getvalue(), encoding="ascii")


def cmd_bench(args) -> int:
    ds = [int(tok) for tok in args.d_list.split(",") if tok]
    epsilons = [float(tok) for tok in args.epsilon_list.split(",") if tok]
    config = _config_dict(args)
    rows: list = []
    if args.suite == "noise-scaling":
        header = ["mechanism", "d", "n", "epsilon", "trial", "noise_spectral_norm", "min_output_eigenvalue"]
        for d in ds:
            X = spiked_dataset(d, args.n, 0.5)
            for eps in epsilons:
                budget = PrivacyBudget(eps)
                for mech in ("wishart", "laplace"):
                    fn = _MECHANISMS[mech]
                    for t in range(args.trials):
                        rng = RngStream(args.seed, args.stream + t)
                        rep = fn(X, budget, rng, args.scaling)
                        rows.append(
                            [mech, d, args.n, eps, t, rep.noise_spectral_norm, rep.min_output_eigenvalue]
                        )
    elif args.suite == "subspace":
        header = [
            "d", "k", "epsilon", "trial", "gap", "noise_norm",
            "projector_distance_F", "bound", "gap_condition_met", "bound_satisfied",
        ]
        for d in ds:
            X = axis_aligned_dataset(_geometric_fractions(d), args.n)
            for eps in epsilons:
                results = subspace_closeness_audit(
                    X, args.k, eps, args.trials, RngStream(args.seed, args.stream)
                )
                for t, res in enumerate(results):
                    ok = (not res.gap_condition_met) or (
                        res.projector_distance_F <= res.bound + 1e-8
                    )
                    rows.append(
                        [d, res.k, eps, t, res.gap, res.noise_norm,
                         res.projector_distance_F, res.bound,
                         int(res.gap_condition_met), int(ok)]
                    )
    elif args.suite == "lowrank":
        header = ["d", "k", "epsilon", "trial", "error", "lambda_k_plus_1", "noise_norm", "bound_ok"]
        for d in ds:
            X = axis_aligned_dataset(_geometric_fractions(d), args.n)
            for eps in epsilons:
                rep = low_rank_error_audit(X, args.k, eps, args.trials, RngStream(args.seed, args.stream))
                for t, (err, nz) in enumerate(zip(rep.errors, rep.noise_norms)):
                    ok = err <= rep.lambda_k_plus_1 + 2.0 * nz + 1e-8
                    rows.append([d, args.k, eps, t, err, rep.lambda_k_plus_1, nz, int(ok)])
    elif args.suite == "complexity":
        header = [
            "d", "epsilon", "rho", "eta", "gap", "n", "n_star",
            "trials", "successes", "rate", "required_rate", "meets_sample_bound",
        ]
        params = CloseApproxParams(args.rho, args.eta, args.gap)
        for d in ds:
            for eps in epsilons:
                rep = close_approx_audit(d, eps, params, args.trials, RngStream(args.seed, args.stream))
                rows.append(
                    [d, eps, args.rho, args.eta, args.gap, rep.n, rep.n_star,
                     rep.trials, rep.successes, rep.rate, rep.required_rate,
                     int(rep.meets_sample_bound)]
                )
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown suite {args.suite!r}")
    _write_csv(args.out, config, header, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="privcov", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("perturb", help="publish a differentially private covariance matrix")
    p.add_argument("--input", required=True, help="CSV of data points, one per row")
    p.add_argument("--mechanism", required=True, choices=sorted(_MECHANISMS))
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--scaling", choices=("mean", "gram"), default="mean")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--normalize", action="store_true", help="rescale all points by the max norm")
    p.add_argument("--output", required=True, help="matrix text file for the published covariance")
    p.add_argument("--report", required=True, help="JSON provenance report")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("pca", help="eigenvalues and top-k subspace of a matrix file")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--values-out", required=True)
    p.add_argument("--vectors-out", required=True)
    p.add_argument("--projector-out", default=None)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("audit", help="numerical privacy audits")
    p.add_argument("--check", required=True, choices=("privacy", "nuclear", "l1", "tail"))
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--theta", type=float, default=5.0, help="tail check only")
    p.add_argument("--dof", type=float, default=None, help="tail check only (default d+1)")
    p.add_argument("--scale", type=float, default=1.0, help="tail check only")
    p.add_argument("--grid-step", type=float, default=None, help="l1/nuclear grid resolution")
    p.add_argument("--out", default=None, help="also write the JSON verdict here")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("bench", help="utility sweeps, results to CSV")
    p.add_argument("--suite", required=True, choices=("subspace", "complexity", "lowrank", "noise-scaling"))
    p.add_argument("--d-list", required=True, help="comma-separated dimensions")
    p.add_argument("--epsilon-list", required=True, help="comma-separated epsilons")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--gap", type=float, default=0.5)
    p.add_argument("--rho", type=float, default=0.75)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--scaling", choices=("mean", "gram"), default="mean")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("choose", help="pick Laplace or Wishart from sensitivities")
    p.add_argument("--max-l11", type=float, required=True)
    p.add_argument("--max-nuclear", type=float, required=True)
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_choose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
