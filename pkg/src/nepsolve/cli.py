"""Pipeline driver and command-line interface.

``run`` executes the full solve: sample the region boundary, escalate the
rational type (k, k) until the fit error target is met, check the denominator
for in-region poles, linearize, and extract eigenpairs either by a dense QZ
solve or by filtered subspace iteration. ``emit`` serializes the resulting
report as JSON or CSV.
"""

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import dataclass

import numpy as np

from .eigensolve import extract_nep_eigenpairs, pole_free_check, solve_pencil_dense
from .filters import SIFConfig, sif
from .lawson import DegreeSpec, SampleSet, lawson
from .pencil import assemble, build_pencil, error_bound, gram_matrix, poly_roots
from .problems import Region, builtin_problem, load_manifest, sample_boundary

__all__ = ["RunConfig", "EigenReport", "run", "emit", "main"]

log = logging.getLogger(__name__)

DENSE_DIM_LIMIT = 5000

EXIT_OK = 0
EXIT_FIT_MISS = 2
EXIT_SOLVER_MISS = 3


@dataclass
class RunConfig:
    """Everything a pipeline run needs; mirrors the CLI flags."""

    problem: str = None
    manifest: str = None
    center: complex = None
    radius: float = None
    half_disk: bool = False
    nodes: int = 100
    tol: float = 1e-10
    max_degree: int = 30
    solver: str = "auto"
    filter_order: int = 16
    subspace: int = None
    shift: complex = None
    seed: int = 0
    out: str = None
    fmt: str = "json"

    def __post_init__(self):
        if (self.problem is None) == (self.manifest is None):
            raise ValueError("exactly one of problem or manifest must be given")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_degree < 1:
            raise ValueError("max_degree must be at least 1")
        if self.solver not in ("auto", "dense", "filter"):
            raise ValueError(f"unknown solver {self.solver!r}")

    def to_json(self):
        out = {}
        for key, val in self.__dict__.items():
            if isinstance(val, complex):
                val = None if val is None else [val.real, val.imag]
            out[key] = val
        return out


@dataclass
class EigenReport:
    """Full pipeline output: eigenpairs, fit summary, bound, pole data, timings."""

    problem: str
    config: RunConfig
    eigenpairs: list
    degree: int
    sqrt_e: float
    gap: float
    fit_iterations: int
    fit_converged: bool
    fit_met_target: bool
    bound: float
    pole_free: bool
    poles: np.ndarray
    zeros: dict
    solver: str
    solver_converged: bool
    timings: dict

    @property
    def in_region(self):
        return [p for p in self.eigenpairs if p.in_region]

    @property
    def exit_status(self):
        ok = self.fit_met_target and self.solver_converged
        return EXIT_OK if ok else (EXIT_FIT_MISS if not self.fit_met_target
                                   else EXIT_SOLVER_MISS)

    def to_json_dict(self):
        return {
            "problem": self.problem,
            "config": self.config.to_json(),
            "approx": {"degree": self.degree, "sqrt_e": self.sqrt_e,
                       "gap": self.gap, "iterations": self.fit_iterations,
                       "converged": self.fit_converged,
                       "met_target": self.fit_met_target},
            "bound": self.bound,
            "pole_free": self.pole_free,
            "poles": [[z.real, z.imag] for z in np.asarray(self.poles)],
            "zeros": {name: [[z.real, z.imag] for z in roots]
                      for name, roots in self.zeros.items()},
            "eigen": [{
                "re": p.lam.real, "im": p.lam.imag,
                "residual": p.residual,
                "normalized_residual": p.normalized_residual,
                "in_region": p.in_region,
                "consistency": p.consistency,
            } for p in self.eigenpairs],
            "solver": {"kind": self.solver, "converged": self.solver_converged},
            "timings": self.timings,
        }


def _resolve_problem(config):
    if config.manifest is not None:
        return load_manifest(config.manifest)
    return builtin_problem(config.problem)


def _resolve_region(config, nep):
    region = nep.region
    center = region.center if config.center is None else config.center
    radius = region.radius if config.radius is None else config.radius
    half = region.half_disk or config.half_disk
    return Region(center, radius, half)


def run(config):
    """Execute the full pipeline described by ``config``."""
    nep = _resolve_problem(config)
    region = _resolve_region(config, nep)
    nodes = sample_boundary(region, config.nodes)
    samples = SampleSet.from_nep(nep, nodes)
    pole_guard = 1e-6 * (1.0 + abs(region.center) + region.radius)

    t0 = time.perf_counter()
    xi = None
    fit_met = False
    for k in range(1, config.max_degree + 1):
        if samples.m < 2 * k + 2:
            break  # node budget exhausted before the degree cap
        xi = lawson(samples, DegreeSpec((k,) * nep.s, k))
        if np.sqrt(xi.e_max) < config.tol:
            fit_met = True
            break
    t_fit = time.perf_counter() - t0
    if xi is None:
        raise ValueError("not enough boundary nodes for even a degree-1 fit")

    pole_free, in_region_poles = pole_free_check(xi, region)
    try:
        all_poles = poly_roots(xi.denom_coeffs, xi.basis)
    except ValueError:
        all_poles = np.empty(0, dtype=complex)
    zeros = {}
    for i, a in enumerate(xi.numer_coeffs):
        try:
            zeros[f"t{i + 1}"] = poly_roots(a, xi.basis)
        except ValueError:
            zeros[f"t{i + 1}"] = np.empty(0, dtype=complex)

    t0 = time.perf_counter()
    poly = assemble(xi, nep)
    pencil = build_pencil(poly, materialize_threshold=DENSE_DIM_LIMIT)
    t_pencil = time.perf_counter() - t0

    solver = config.solver
    if solver == "auto":
        solver = "dense" if pencil.dim <= DENSE_DIM_LIMIT else "filter"

    t0 = time.perf_counter()
    if solver == "dense":
        pairs = solve_pencil_dense(pencil)
        eigenpairs = extract_nep_eigenpairs(pairs, xi.basis, nep, region)
        solver_converged = True
    else:
        subspace = config.subspace if config.subspace is not None else 60
        sif_config = SIFConfig(subspace=subspace, shift=config.shift,
                               quad_order=config.filter_order, seed=config.seed)
        result = sif(pencil, nep, region, sif_config)
        eigenpairs = result.eigenpairs
        solver_converged = result.converged
    t_solve = time.perf_counter() - t0

    if not pole_free:
        # where q* vanishes inside the region the polynomial and rational
        # spectra differ: pencil eigenvalues sitting on an in-region pole are
        # artifacts of the surrogate, not eigenvalues of the problem
        kept = []
        for p in eigenpairs:
            if p.in_region and np.min(np.abs(in_region_poles - p.lam)) < pole_guard:
                log.info("dropping eigenvalue %s: coincides with a pole of the fit",
                         p.lam)
                continue
            kept.append(p)
        eigenpairs = kept

    return EigenReport(
        problem=nep.name,
        config=config,
        eigenpairs=eigenpairs,
        degree=xi.degrees.denominator,
        sqrt_e=float(np.sqrt(xi.e_max)),
        gap=xi.gap,
        fit_iterations=xi.iterations,
        fit_converged=xi.converged,
        fit_met_target=fit_met,
        bound=error_bound(gram_matrix(nep), xi.e_max),
        pole_free=pole_free,
        poles=all_poles,
        zeros=zeros,
        solver=solver,
        solver_converged=solver_converged,
        timings={"fit": t_fit, "pencil": t_pencil, "solve": t_solve},
    )


def emit(report, fmt=None, path=None):
    """Write the report as JSON or CSV; returns the text when no path is given."""
    fmt = fmt or report.config.fmt
    if fmt == "json":
        text = json.dumps(report.to_json_dict(), indent=2)
    elif fmt == "csv":
        buf = io.StringIO()
        doc = report.to_json_dict()
        for key in ("sqrt_e", "gap"):
            buf.write(f"# {key}={doc['approx'][key]!r}\n")
        buf.write(f"# bound={report.bound!r}\n")
        buf.write(f"# pole_free={report.pole_free}\n")
        writer = csv.writer(buf)
        writer.writerow(["re", "im", "residual", "normalized_residual",
                         "in_region", "consistency"])
        for row in doc["eigen"]:
            writer.writerow([repr(row["re"]), repr(row["im"]),
                             repr(row["residual"]),
                             repr(row["normalized_residual"]),
                             row["in_region"], repr(row["consistency"])])
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
        return path
    return text


def _parse_complex(text):
    re, _, im = text.partition(",")
    return complex(float(re), float(im) if im else 0.0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nepsolve",
        description="Solve a nonlinear eigenvalue problem on a disk (or "
                    "half-disk) by rational minimax fitting and linearization.")
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", help="built-in problem name "
                                       "(example1, time_delay2, hadeler)")
    src.add_argument("--manifest", help="path to a problem manifest JSON")
    parser.add_argument("--center", type=_parse_complex, default=None,
                        metavar="RE,IM", help="region center override")
    parser.add_argument("--radius", type=float, default=None,
                        help="region radius override")
    parser.add_argument("--half-disk", action="store_true",
                        help="restrict the region to the upper half-disk")
    parser.add_argument("--nodes", type=int, default=100, metavar="M",
                        help="boundary sample count (default 100)")
    parser.add_argument("--tol", type=float, default=1e-10, metavar="EPS",
                        help="fit target for sqrt(e) (default 1e-10)")
    parser.add_argument("--max-degree", type=int, default=30, metavar="D",
                        help="degree escalation cap (default 30)")
    parser.add_argument("--solver", choices=("auto", "dense", "filter"),
                        default="auto")
    parser.add_argument("--filter-order", type=int, default=16, metavar="K",
                        help="quadrature order of the rational filter")
    parser.add_argument("--subspace", type=int, default=None, metavar="N",
                        help="subspace columns for the filter solver")
    parser.add_argument("--shift", type=_parse_complex, default=None,
                        metavar="RE,IM", help="shift for the filter solver")
    parser.add_argument("--seed", type=int, default=0, metavar="S")
    parser.add_argument("--out", default=None, metavar="PATH",
                        help="output file (default: print to stdout)")
    parser.add_argument("--format", dest="fmt", choices=("json", "csv"),
                        default="json")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = RunConfig(**vars(args))
    report = run(config)
    if config.out is None:
        print(emit(report))
    else:
        emit(report, path=config.out)
        n_in = len(report.in_region)
        print(f"{report.problem}: degree {report.degree}, "
              f"sqrt_e={report.sqrt_e:.3e}, {n_in} in-region eigenvalue(s), "
              f"report written to {config.out}", file=sys.stderr)
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())
