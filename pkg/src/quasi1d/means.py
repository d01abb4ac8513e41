"""Averaging operators used by the two-point entropy conservative fluxes."""

import numpy as np

__all__ = ["logmean", "prodmean"]

# Below this squared relative separation the direct quotient loses digits to
# cancellation; switch to the series form.
_SERIES_CUTOFF = 1e-4


def logmean(x, y):
    """Logarithmic mean (x - y) / (log x - log y) of positive arguments.

    Near equal arguments the quotient is evaluated through a series in
    f = (x/y - 1)/(x/y + 1), which removes the 0/0 cancellation and has the
    exact limit ``x`` as ``y -> x``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValueError("logmean requires strictly positive arguments")

    zeta = x / y
    f = (zeta - 1.0) / (zeta + 1.0)
    f2 = f * f
    series = (x + y) / (2.0 * (1.0 + f2 * (1.0 / 3.0 + f2 * (1.0 / 5.0 + f2 / 7.0))))

    close = f2 < _SERIES_CUTOFF
    denom = np.where(close, 1.0, np.log(x) - np.log(y))
    direct = (x - y) / denom
    return np.where(close, series, direct)[()]


def prodmean(x_left, x_right, y_left, y_right):
    """Product mean (x_L y_R + x_R y_L) / 2."""
    return 0.5 * (np.asarray(x_left) * np.asarray(y_right)
                  + np.asarray(x_right) * np.asarray(y_left))
