"""Exception types shared across the package."""


class DegenerateEstimateError(RuntimeError):
    """An estimator produced no usable value (e.g. zero/negative denominator).

    Carries enough context to report the failure without re-running the
    estimator: ``detail`` is a short human-readable reason and ``value`` the
    offending quantity (denominator, cluster count, ...) when one exists.
    """

    def __init__(self, detail, value=None):
        super().__init__(detail if value is None else f"{detail} (value={value!r})")
        self.detail = detail
        self.value = value


class NumericFailureError(RuntimeError):
    """A numerical routine failed its accuracy contract.

    ``delta`` holds the observed refinement change that exceeded the
    tolerance.
    """

    def __init__(self, detail, delta=None):
        super().__init__(detail if delta is None else f"{detail} (delta={delta:.3e})")
        self.detail = detail
        self.delta = delta


class UnsupportedModelError(ValueError):
    """The requested computation needs model ingredients that are absent."""
