import time

import numpy as np
import pytest
from scipy import stats


def chi2_pvalue(counts, probs):
    counts = np.asarray(counts, dtype=float)
    expected = np.asarray(probs, dtype=float) * counts.sum()
    return stats.chisquare(counts, expected).pvalue


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def finite_difference(loss_fn, net, h=1e-5):
    """Central differences of ``loss_fn()`` w.r.t. every parameter of ``net``."""
    flat = net.flat()
    out = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        net.set_flat(flat)
        up = loss_fn()
        flat[i] = orig - h
        net.set_flat(flat)
        down = loss_fn()
        flat[i] = orig
        out[i] = (up - down) / (2 * h)
    net.set_flat(flat)
    return out


def max_relative_error(analytic, numeric, floor=1e-6):
    """Elementwise ``|a - n| / max(|a|, |n|, floor)``; the floor keeps exact zeros from dividing by 0."""
    a, n = np.asarray(analytic), np.asarray(numeric)
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)))


def flatten(grads):
    return np.concatenate([g.ravel() for g in grads])


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert on it."""
    def record(number, ok, detail, started):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - started:.1f}s)"
        _VERDICTS.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
