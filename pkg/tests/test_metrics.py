# tests/test_metrics.py
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from splr_unmix.analysis.metrics import block_row_metrics, metric_report, nmse_trace, rmse, sre_db
from splr_unmix.domain.enums import Termination
from splr_unmix.domain.errors import ContractError, DimensionError
from splr_unmix.domain.types import AbundanceCube, SolveReport


def loop_rmse(est, truth):
    n, p = est.shape
    printed = squared = 0.0
    for i in range(p):
        d = math.sqrt(sum((est[j, i] - truth[j, i]) ** 2 for j in range(n)))
        printed += d
        squared += d * d
    return math.sqrt(printed / (n * p)), math.sqrt(squared / (n * p))


def loop_sre(est, truth):
    n, p = est.shape
    power = sum(est[j, i] ** 2 for i in range(p) for j in range(n)) / p
    error = sum((est[j, i] - truth[j, i]) ** 2 for i in range(p) for j in range(n)) / p
    return 10 * math.log10(power / error)


def report_with(iterates):
    return SolveReport(w_hat=iterates[-1], iterations=len(iterates), termination=Termination.TOLERANCE,
                       iterate_trace=list(iterates))


def test_exact_estimate_has_zero_error(rng):
    w = rng.uniform(size=(5, 7))
    assert rmse(w, w) == (0.0, 0.0)
    assert sre_db(w, w) == math.inf


def test_printed_rmse_by_substitution():
    truth = np.zeros((4, 1))
    est = truth.copy()
    est[0, 0] = 0.04
    printed, squared = rmse(est, truth)
    assert printed == pytest.approx(0.1)
    assert squared == pytest.approx(0.02)


def test_metrics_match_loop_oracles(rng):
    truth, est = rng.uniform(size=(2, 6, 11))
    assert_allclose(rmse(est, truth), loop_rmse(est, truth), atol=1e-12)
    assert sre_db(est, truth) == pytest.approx(loop_sre(est, truth), abs=1e-12)


def test_sre_uses_estimated_power():
    truth = np.array([[1.0], [0.0]])
    assert sre_db(2 * truth, truth) == pytest.approx(10 * math.log10(4.0))
    assert sre_db(np.zeros((2, 1)), truth) == -math.inf


def test_rmse_is_permutation_invariant_over_pixels(rng):
    truth, est = rng.uniform(size=(2, 4, 9))
    order = rng.permutation(9)
    assert_allclose(rmse(est[:, order], truth[:, order]), rmse(est, truth), rtol=1e-12)


def test_shape_mismatch(rng):
    with pytest.raises(DimensionError):
        rmse(np.zeros((3, 2)), np.zeros((2, 3)))


def test_report_accepts_cubes(rng):
    truth = AbundanceCube(rng.uniform(size=(3, 2, 4)))
    report = metric_report(truth, truth)
    assert report.n_pixels == 8
    assert report.to_dict()['rmse'] == 0.0


def test_nmse_trace_limits(rng):
    truth = rng.uniform(size=(3, 4))
    assert_allclose(nmse_trace([report_with([truth, truth])], [truth]), [0.0, 0.0])
    assert_allclose(nmse_trace([report_with([np.zeros((3, 4))] * 3)], [truth]), [1.0, 1.0, 1.0])


def test_nmse_trace_loop_oracle_with_padding(rng):
    t1, t2 = rng.uniform(size=(2, 3, 2))
    run1 = [rng.uniform(size=(3, 2)) for _ in range(3)]
    run2 = [rng.uniform(size=(3, 2)) for _ in range(2)]
    expected = []
    for t in range(3):
        a = np.sum((run1[t] - t1) ** 2) / np.sum(t1 ** 2)
        b = np.sum((run2[min(t, 1)] - t2) ** 2) / np.sum(t2 ** 2)
        expected.append((a + b) / 2)
    assert_allclose(nmse_trace([report_with(run1), report_with(run2)], [t1, t2]), expected, atol=1e-12)


def test_nmse_trace_needs_recorded_iterates(rng):
    w = rng.uniform(size=(2, 2))
    with pytest.raises(ContractError):
        nmse_trace([SolveReport(w_hat=w, iterations=1, termination=Termination.TOLERANCE)], [w])


def test_block_row_metrics(rng):
    truth = AbundanceCube(rng.uniform(size=(3, 20, 20)))
    est_data = truth.data.copy()
    est_data[:, 10:, :] += 0.1
    table = block_row_metrics(AbundanceCube(est_data), truth)
    assert list(table['block_row']) == [1, 2]
    assert table.loc[0, 'rmse'] == 0.0
    assert table.loc[1, 'rmse'] > 0.0
