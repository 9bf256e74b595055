"""Shared fixtures: the built-in benchmark pipelines, computed once per session."""

import sys
import time
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nepsolve import (DegreeSpec, SampleSet, assemble, build_pencil,
                      example1, extract_nep_eigenpairs, hadeler, lawson,
                      sample_boundary, solve_pencil_dense, time_delay2)


def _pipeline(nep, m, spec):
    nodes = sample_boundary(nep.region, m)
    samples = SampleSet.from_nep(nep, nodes)
    t0 = time.perf_counter()
    xi = lawson(samples, spec)
    fit_seconds = time.perf_counter() - t0
    pencil = build_pencil(assemble(xi, nep))
    pairs = solve_pencil_dense(pencil)
    eigenpairs = extract_nep_eigenpairs(pairs, xi.basis, nep, nep.region)
    return SimpleNamespace(
        nep=nep, nodes=nodes, samples=samples, xi=xi, pencil=pencil,
        pairs=pairs, eigenpairs=eigenpairs,
        in_region=[p for p in eigenpairs if p.in_region],
        fit_seconds=fit_seconds)


@pytest.fixture(scope="session")
def example1_bundle():
    return _pipeline(example1(), 100, DegreeSpec((28, 28), 28))


@pytest.fixture(scope="session")
def time_delay_bundle():
    return _pipeline(time_delay2(), 50, DegreeSpec((10, 10, 10), 10))


@pytest.fixture(scope="session")
def hadeler_bundle():
    return _pipeline(hadeler(200), 50, DegreeSpec((6, 6, 6), 6))
