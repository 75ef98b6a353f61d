import numpy as np
import pytest

TINY_CONFIG = """\
# a small experiment
n = 12
replications = 3
p = 5
theta = 1, 0.5
collection = complete
dmax = 2
oracle_dmax = 2

[fpe]
kind = selector
penalty = minimal
K = 2

[K=1.1]
kind = selector
penalty = complete
K = 1.1
"""


def write_data(path, x, y):
    header = ",".join(["y"] + [f"x{j}" for j in range(1, x.shape[1] + 1)])
    rows = [",".join(repr(float(v)) for v in [y_i, *x_i]) for y_i, x_i in zip(y, x)]
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def exact_csv(tmp_path, rng):
    """30 observations of y = 1.5 x1 - 2 x2 over four covariates."""
    x = rng.standard_normal((30, 4))
    return write_data(tmp_path / "exact.csv", x, 1.5 * x[:, 0] - 2.0 * x[:, 1])


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CONFIG, encoding="utf-8")
    return path
