"""Estimator base class and input validation helpers."""

import inspect

import numpy as np


def as_sample(x):
    """Validate and return a time series as a 1-d float array.

    Requires length >= 2 and all entries finite.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"sample must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise ValueError(f"sample must contain at least 2 observations, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample contains non-finite values (NaN or inf)")
    return arr


def check_block_size(n, b):
    """Require 2 <= b <= n/2 so at least two disjoint blocks exist."""
    b = int(b)
    if not 2 <= b <= n // 2:
        raise ValueError(f"block size b={b} out of range for n={n}: need 2 <= b <= n/2")
    return b


def check_window(n, start, b):
    if start < 0 or start + b > n:
        raise ValueError(f"window [{start}, {start + b}) out of bounds for n={n}")


class FitMixin:
    """Minimal scikit-learn style parameter handling for estimator classes.

    Subclasses keep all constructor arguments as same-named attributes, so
    parameters can be introspected from the ``__init__`` signature.
    """

    def get_params(self, deep=True):
        names = [
            p.name
            for p in inspect.signature(type(self).__init__).parameters.values()
            if p.name != "self" and p.kind is not p.VAR_KEYWORD
        ]
        return {name: getattr(self, name) for name in names}

    def set_params(self, **params):
        valid = self.get_params()
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"unknown parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def _check_fitted(self, attr):
        if not hasattr(self, attr):
            raise AttributeError(
                f"{type(self).__name__} instance is not fitted yet; call fit() first"
            )
