import time

import pytest

from slidim.bench import make_bench
from slidim.pipeline import run_dimension_pipeline


@pytest.fixture(scope="session")
def bench():
    return make_bench()


@pytest.fixture(scope="session")
def bench_pipeline(bench):
    """One full pipeline run shared by every bench-dependent test."""
    t0 = time.time()
    res = run_dimension_pipeline(bench.system, bench.p_seed, bench.q_seed)
    res.timings["wall_total"] = time.time() - t0
    return res
