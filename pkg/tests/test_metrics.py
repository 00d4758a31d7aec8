import numpy as np
import pytest

from posebridge.metrics import CSV_HEADER, csv_row, deviation


def loop_oracle(a, b):
    per = []
    for x, y in zip(a, b):
        per.append(abs(x - y) * 180.0 / np.pi)
    return max(per), sum(per) / len(per)


def test_identical_configs_give_zero():
    c = np.array([0.1, -0.4, 2.0])
    rep = deviation(c, c)
    assert rep.m_max == 0.0 and rep.m_avg == 0.0


def test_known_difference_values():
    rep = deviation(np.array([0.1, -0.2]), np.array([0.0, 0.0]))
    assert rep.m_max == pytest.approx(11.4592, abs=1e-4)
    assert rep.m_avg == pytest.approx(8.5944, abs=1e-4)
    assert rep.m_max == pytest.approx(0.2 * 180.0 / np.pi, rel=1e-12)
    assert rep.m_avg == pytest.approx(0.15 * 180.0 / np.pi, rel=1e-12)


def test_matches_scalar_loop_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(1, 30))
        a, b = rng.normal(size=n), rng.normal(size=n)
        rep = deviation(a, b)
        m_max, m_avg = loop_oracle(a, b)
        assert rep.m_max == pytest.approx(m_max, rel=1e-12)
        assert rep.m_avg == pytest.approx(m_avg, rel=1e-12)
        assert rep.m_max == max(rep.per_joint)
        assert rep.m_max >= rep.m_avg >= 0.0


def test_symmetry():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=8), rng.normal(size=8)
    x, y = deviation(a, b), deviation(b, a)
    assert x.m_max == y.m_max and x.m_avg == y.m_avg


def test_triangle_bound():
    rng = np.random.default_rng(2)
    for _ in range(30):
        a, b, c = rng.normal(size=(3, 6))
        assert deviation(a, c).m_max <= deviation(a, b).m_max + deviation(b, c).m_max + 1e-12


def test_scaling():
    rng = np.random.default_rng(3)
    a = rng.normal(size=5)
    base = deviation(a, np.zeros(5))
    for t in (0.0, 0.5, 2.75):
        rep = deviation(t * a, np.zeros(5))
        assert rep.m_max == pytest.approx(t * base.m_max, abs=1e-12)
        assert rep.m_avg == pytest.approx(t * base.m_avg, abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        deviation(np.zeros(3), np.zeros(4))


def test_csv_row_shape():
    rep = deviation(np.array([0.1]), np.array([0.0]))
    row = csv_row(7, rep)
    assert CSV_HEADER == "frame,m_max_deg,m_avg_deg"
    frame, m_max, m_avg = row.split(",")
    assert frame == "7"
    assert float(m_max) == pytest.approx(rep.m_max)
    assert float(m_avg) == pytest.approx(rep.m_avg)
