import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from entspec.estimator import SpectrumTransformer, TraceEstimator
from entspec.spectroscopy import power_sums, reduced_eigenvalues, thetas_for_even_traces, trace_oracle


class TestTraceEstimator:
    def test_params_round_trip(self):
        est = TraceEstimator(algorithm="qe-ht-3k", n=3, shots=500, noise="paper-main", seed=4)
        assert est.get_params() == {"algorithm": "qe-ht-3k", "n": 3, "shots": 500,
                                    "noise": "paper-main", "seed": 4}
        assert clone(est).get_params() == est.get_params()
        assert est.set_params(n=2).n == 2

    def test_noiseless_slope_near_one(self):
        X = thetas_for_even_traces(2, 6).reshape(-1, 1)
        est = TraceEstimator("tct", n=2, shots=20_000, seed=1).fit(X)
        assert abs(est.slope_ - 1) < 3 * est.slope_stderr_ + 0.02
        truth = np.array([trace_oracle(t, 2) for t in X[:, 0]])
        assert est.score(X, truth) > 0.95

    def test_explicit_targets(self):
        X = np.array([0.1, 0.6, 1.2, 1.5])
        y = [trace_oracle(t, 2) for t in X]
        est = TraceEstimator("ht", n=2, shots=5000).fit(X, y)
        assert est.estimates_.shape == (4,)

    def test_predict_reproducible(self):
        est = TraceEstimator("qe-tct-4k", n=2, shots=2000, seed=3).fit([0.2, 0.9, 1.4])
        np.testing.assert_array_equal(est.predict([[0.5], [1.0]]), est.predict([[0.5], [1.0]]))

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            TraceEstimator().predict([0.3])

    @pytest.mark.parametrize("X", [[[0.1, 0.2]], [4.0], [[np.nan]]])
    def test_bad_input(self, X):
        with pytest.raises(ValueError):
            TraceEstimator(shots=10).fit(X * 3 if isinstance(X[0], float) else X)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            TraceEstimator(shots=10).fit([0.1, 0.2, 0.3], [0.5, 0.6])


class TestSpectrumTransformer:
    def test_rows(self):
        thetas = [0.2, 0.8, 1.3]
        X = np.array([power_sums(reduced_eigenvalues(t)) for t in thetas])
        out = SpectrumTransformer().fit_transform(X)
        np.testing.assert_allclose(out, [reduced_eigenvalues(t) for t in thetas], atol=1e-8)

    def test_width_checked(self):
        tr = SpectrumTransformer().fit([[1, 0.5]])
        with pytest.raises(ValueError):
            tr.transform([[1, 0.5, 0.25]])

    def test_in_pipeline(self):
        pipe = make_pipeline(SpectrumTransformer())
        np.testing.assert_allclose(pipe.fit_transform([[1, 0.68]]), [[0.8, 0.2]], atol=1e-9)
