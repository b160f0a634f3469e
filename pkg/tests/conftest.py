import numpy as np
import pytest

from sharesched import JobSet, _kernel


@pytest.fixture(scope="session", autouse=True)
def _jit_warmup():
    # compile the numba kernels once so per-test timings stay honest
    _kernel.warm_up()


def random_instance(seed: int, n_max: int, n_min: int = 1,
                    v_range=(0.1, 10.0), r_floor: float = 0.05) -> JobSet:
    """Log-uniform volumes, uniform requirements in (r_floor, 1]."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_min, n_max + 1))
    v = np.exp(rng.uniform(np.log(v_range[0]), np.log(v_range[1]), n))
    r = 1.0 - rng.uniform(0.0, 1.0 - r_floor, n)
    return JobSet.of(zip(v, r))


@pytest.fixture
def three_jobs() -> JobSet:
    # worked instance used across modules: volumes 1, 4, 6 with
    # requirements 3/4, 1/2, 2/3
    return JobSet.of([(1.0, 0.75), (4.0, 0.5), (6.0, 2.0 / 3.0)])
