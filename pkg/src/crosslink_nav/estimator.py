"""scikit-learn style wrapper around the crosslink navigation filter.

``fit`` consumes a time series of inter-satellite observables, ``predict``
returns the predicted observables at arbitrary epochs and ``transform`` maps
epochs to estimated joint states.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .dynamics import EARTH_MOON
from .filtering import ConsiderConfig, ProcessNoiseConfig, augment_bias, initial_state
from .flows import CrtbpFlow
from .navigation import run_filter
from .radiometrics import KINDS, RANGE, MeasurementSample, observe
from .validation import check_covariance, check_vector


class CrosslinkNavigator(BaseEstimator):
    """Sequential joint orbit determination from crosslink range or range-rate.

    All quantities are in non-dimensional CRTBP units unless a different
    ``flow`` is supplied.

    Parameters
    ----------
    x0 : array_like, shape (12,)
        A-priori joint state ``[r1 v1 r2 v2]`` at epoch 0.
    P0 : array_like, shape (12, 12)
        A-priori covariance.
    kind : {"range", "range_rate"}
    sigma : float
        Measurement 1-sigma.
    bias_mode : {"neglect", "estimate", "consider"}
    bias_prior : float
        Prior bias 1-sigma (estimate, consider) .
    bias_apriori : float
        Known a-priori bias value used by the consider filter.
    process_noise : tuple of float
        Per-spacecraft process-noise intensities.
    q_form : {"quartic", "snc"}
    flow : callable, optional
        Defaults to a fixed-step CRTBP flow with 10 s steps.
    """

    def __init__(
        self,
        x0=None,
        P0=None,
        kind=RANGE,
        sigma=1e-8,
        bias_mode="neglect",
        bias_prior=0.0,
        bias_apriori=0.0,
        process_noise=(2e-5, 2e-5),
        q_form="quartic",
        flow=None,
    ):
        self.x0 = x0
        self.P0 = P0
        self.kind = kind
        self.sigma = sigma
        self.bias_mode = bias_mode
        self.bias_prior = bias_prior
        self.bias_apriori = bias_apriori
        self.process_noise = process_noise
        self.q_form = q_form
        self.flow = flow

    def _initial(self):
        x0 = check_vector(self.x0, 12, "x0")
        P0 = check_covariance(self.P0, 12, "P0")
        consider = None
        if self.bias_mode == "consider":
            consider = ConsiderConfig(b0=[self.bias_apriori], B0=[[self.bias_prior**2]])
            f0 = initial_state(x0, P0, 0.0, "consider", consider)
        else:
            f0 = initial_state(x0, P0, 0.0, self.bias_mode)
            if self.bias_mode == "estimate":
                f0 = augment_bias(f0, self.bias_prior)
        return f0, consider

    def fit(self, X, y):
        """Filter the observables ``y`` taken at epochs ``X``.

        Parameters
        ----------
        X : array_like, shape (n,) or (n, 1)
            Strictly increasing measurement epochs (> 0).
        y : array_like, shape (n,)
            Observed range or range-rate values.
        """
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        t = np.asarray(X, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        if t.size != y.size or t.size == 0:
            raise ValueError("X and y must be non-empty and of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise ValueError("X and y must be finite")
        if np.any(np.diff(t) <= 0) or t[0] < 0:
            raise ValueError("epochs must be non-negative and strictly increasing")
        flow = self.flow or CrtbpFlow(EARTH_MOON)
        f0, consider = self._initial()
        meas = [MeasurementSample(float(a), self.kind, float(b), self.sigma) for a, b in zip(t, y)]
        pn = ProcessNoiseConfig(tuple(self.process_noise), self.q_form)
        self.run_ = run_filter(f0, meas, flow, pn, consider)
        self.flow_ = flow
        self.state_ = self.run_.final_state
        self.epochs_ = t
        self.residuals_ = self.run_.residuals
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        """Estimated joint states at epochs ``X`` (shape (n, 12)).

        Epochs inside the fitted span return the filtered estimate at the most
        recent measurement propagated forward; later epochs are predictions.
        """
        check_is_fitted(self, "run_")
        t = np.asarray(X, dtype=float).reshape(-1)
        out = np.empty((t.size, 12))
        for i, ti in enumerate(t):
            k = np.searchsorted(self.epochs_, ti, side="right") - 1
            if k < 0:
                raise ValueError("epochs before the first measurement are not supported")
            x = self.run_.x_hat[k, :12]
            t0 = self.epochs_[k]
            out[i] = x if ti == t0 else self.flow_(x, t0, ti)[0]
        return out

    def predict(self, X):
        """Predicted noise-free observables (plus estimated bias) at epochs ``X``."""
        states = self.transform(X)
        pred = np.array([observe(x, self.kind) for x in states])
        if self.state_.n_aug >= 1:
            pred += self.state_.x[12]
        return pred

    def score(self, X, y):
        """Negative RMS of the prediction residuals."""
        r = np.asarray(y, dtype=float).reshape(-1) - self.predict(X)
        return -float(np.sqrt(np.mean(r**2)))
