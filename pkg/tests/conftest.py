import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def finite_floats(lo=-3.0, hi=3.0):
    return st.floats(lo, hi, allow_nan=False, allow_infinity=False)


def well_conditioned_bases(dim_min=1, dim_max=5, cond_max=1e4):
    """Square bases with moderate condition number."""

    @st.composite
    def build(draw):
        n = draw(st.integers(dim_min, dim_max))
        rows = draw(st.lists(st.lists(finite_floats(), min_size=n, max_size=n), min_size=n, max_size=n))
        B = np.array(rows) + 2.0 * np.eye(n)  # keep away from singular draws
        if np.linalg.cond(B) > cond_max:
            B = B + 4.0 * np.eye(n)
        return B

    return build()


@pytest.fixture
def tmp_lattice(tmp_path):
    from systolattice import save_lattice

    def write(L, name="lat.json"):
        path = tmp_path / name
        save_lattice(L, path)
        return str(path)

    return write


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"AC{key:<3} {'PASS' if ok else 'FAIL'}  {detail}")
