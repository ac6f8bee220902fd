"""scikit-learn style wrapper around the stationary chain.

There is nothing to learn from data, so ``fit`` only validates the
hyper-parameters and draws ``n_samples`` stationary states; ``transform``
maps an (m, 3) array of directions to the (n_samples, m) matrix of field
values.  The wrapper exists so the sampler composes with ``get_params`` /
``set_params`` / ``clone`` and pipelines.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .chain import ChainConfig, StationaryParams, run_ensemble, stationary_draws
from .geometry import UnitVec3
from .rng import RngStream
from .spectral import InnovationSpec

__all__ = ["StationaryFieldSampler"]


class StationaryFieldSampler(TransformerMixin, BaseEstimator):
    """Draws of the truncated stationary field, evaluated at query directions.

    Parameters
    ----------
    a : float
        Memory parameter in (0, 1).
    theta : float
        Rotation angle per step.
    axis : tuple of 3 floats
        Rotation axis.
    kappa : float
        vMF concentration of the innovation.
    intensity_mode : {"exact", "unit"}
    epsilon, delta : float
        Truncation accuracy of the stationary series.
    n_samples : int
        Number of independent stationary states drawn by ``fit``.
    random_state : int
        Master seed (a 64-bit unsigned integer).
    n_jobs : int
        Threads; results do not depend on it.

    Attributes
    ----------
    config_ : ChainConfig
    stationary_params_ : StationaryParams
    states_ : list of ChainState
    """

    def __init__(self, a=0.5, theta=0.0, axis=(0.0, 0.0, 1.0), kappa=1.0,
                 intensity_mode="exact", epsilon=1e-3, delta=1e-3, n_samples=1000,
                 random_state=0, n_jobs=1):
        self.a = a
        self.theta = theta
        self.axis = axis
        self.kappa = kappa
        self.intensity_mode = intensity_mode
        self.epsilon = epsilon
        self.delta = delta
        self.n_samples = n_samples
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        """Validate parameters and draw the stationary states (``X`` is ignored)."""
        if not isinstance(self.n_samples, (int, np.integer)) or self.n_samples < 1:
            raise ValueError(f"n_samples must be a positive integer, got {self.n_samples!r}")
        self.config_ = ChainConfig(a=self.a, theta=self.theta, axis=UnitVec3(*self.axis),
                                   kappa=self.kappa,
                                   innovation=InnovationSpec(intensity_mode=self.intensity_mode))
        self.stationary_params_ = StationaryParams.derive(self.config_, self.epsilon,
                                                          self.delta)
        self.states_ = stationary_draws(self.config_, self.stationary_params_,
                                        RngStream(self.random_state), int(self.n_samples),
                                        n_jobs=self.n_jobs)
        self.n_steps_ = 0
        return self

    def transform(self, X):
        """Field values of every state at the rows of ``X``; shape (n_samples, m)."""
        check_is_fitted(self, "states_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 3:
            raise ValueError(f"X must have 3 columns, got {X.shape[1]}")
        return np.vstack([s.evaluate(X) for s in self.states_])

    def advance(self, n_steps=1):
        """Run every state ``n_steps`` transitions forward (stationarity keeps
        the marginal law)."""
        check_is_fitted(self, "states_")
        self.states_, _ = run_ensemble(self.states_, n_steps, RngStream(self.random_state),
                                       tag="sampler-advance", first_step=self.n_steps_,
                                       n_jobs=self.n_jobs)
        self.n_steps_ += n_steps
        return self
