import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcrit.limits import METHODS, aitken, extrapolate, richardson

RADII = np.array([1, 3, 7, 15, 31, 63])


class TestAitken:
    def test_geometric_is_exact(self):
        assert float(aitken(3 + 0.5 ** np.arange(6))) == pytest.approx(3, abs=1e-14)

    def test_constant_falls_back(self):
        assert float(aitken([2.0, 2.0, 2.0])) == 2.0

    def test_short_sequence(self):
        assert float(aitken([1.0, 2.0])) == 2.0

    def test_vectorised(self):
        a = np.stack([1 + 0.3 ** np.arange(5), 2 - 0.7 ** np.arange(5)], axis=1)
        assert np.allclose(aitken(a), [1, 2], atol=1e-12)


class TestRichardson:
    @pytest.mark.parametrize("degree", (2, 3, 4))
    def test_polynomial_in_h_is_exact(self, degree):
        h = 1 / (RADII + 1.0)
        seq = 5 + sum(h ** k for k in range(1, degree + 1))
        assert float(richardson(seq, RADII, degree)) == pytest.approx(5, abs=1e-10)


class TestExtrapolate:
    def test_algebraic_decay(self):
        # evenly spaced radii make 1/(r+1) non-geometric, so only the polynomial model is exact
        r = np.array([2, 4, 6, 8, 10, 12])
        h = 1 / (r + 1.0)
        est, err, meth = extrapolate(1 + 2 * h + h ** 2, r)
        assert float(est) == pytest.approx(1, abs=1e-12)
        assert METHODS[int(meth)].startswith("richardson")

    def test_geometric_decay(self):
        est, _, meth = extrapolate(0.25 + 0.5 ** np.arange(6), RADII)
        assert float(est) == pytest.approx(0.25, abs=1e-12)

    def test_single_term(self):
        est, err, meth = extrapolate([3.0], [1])
        assert est == 3.0 and np.isinf(err) and meth == 0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            extrapolate([1.0, 2.0], [1])

    def test_elementwise(self):
        a = np.stack([1 + 1 / (RADII + 1.0), 2 + 0.5 ** np.arange(6)], axis=1)
        est, err, _ = extrapolate(a, RADII)
        assert np.allclose(est, [1, 2], atol=1e-10)
        assert est.shape == (2,) and err.shape == (2,)

    @given(st.floats(-1e3, 1e3), st.floats(0.05, 0.9), st.floats(-10, 10))
    def test_error_indicator_bounds_geometric_error(self, limit, ratio, amp):
        seq = limit + amp * ratio ** np.arange(6)
        est, err, _ = extrapolate(seq, RADII)
        assert abs(est - limit) <= 2 * err + 1e-9 * (1 + abs(limit) + abs(amp))

    def test_never_worse_than_last_step(self):
        rng = np.random.default_rng(0)
        seq = np.cumsum(rng.uniform(0, 1, 6))
        _, err, _ = extrapolate(seq, RADII)
        assert err <= abs(seq[-1] - seq[-2])
