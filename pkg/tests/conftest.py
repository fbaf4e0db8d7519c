import numpy as np
import pytest


def triangular_example():
    """Upper-triangular ones with a large last diagonal entry."""
    A = np.triu(np.ones((7, 7)))
    A[6, 6] = 20.0
    return A


@pytest.fixture
def A7():
    return triangular_example()


def random_instance(rng, max_dim=200):
    """Random matrix of random shape and random numerical rank, with a mu on its scale."""
    m = int(rng.integers(1, max_dim + 1))
    n = int(rng.integers(1, max_dim + 1))
    r = int(rng.integers(1, min(m, n) + 1))
    A = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
    A *= 10.0 ** rng.uniform(-2, 2)
    norms = np.linalg.norm(A, axis=0)
    mu = float(rng.uniform(0, 1.2) * np.median(norms))
    return A, mu


def pair_distances(X):
    from scipy.spatial.distance import pdist

    return pdist(np.asarray(X).T)


ACCEPTANCE_LINES = []


def record(number, ok, detail):
    """Log one acceptance verdict; returned so the caller can assert on it."""
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
