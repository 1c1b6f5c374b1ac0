"""Array kernels for the radio medium's Monte Carlo paths.

The hot loop of a range test evaluates tens of thousands of link trials:
piecewise-linear calibration lookups plus noise application.  The kernels
exist in two interchangeable builds — a numba ``@njit`` build (fused
single-pass loop) and a pure-numpy fallback — selected once at import
time by the ``FIREWATCH_NUMBA`` environment variable:

    FIREWATCH_NUMBA=1   force numba (ImportError if unavailable)
    FIREWATCH_NUMBA=0   force the numpy fallback
    unset / "auto"      numba when importable, numpy otherwise

Both builds evaluate the same per-element expression in the same order,
so results are bit-identical for the same inputs; random draws happen in
the callers.  ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np


def _interp_point(x, xp, fp):
    """One flat-clamped piecewise-linear lookup; shared by both builds.

    Calibration tables are tiny (3-4 rows), so a forward scan beats a
    binary search.  The slope expression matches np.interp bit for bit.
    """
    n = len(xp)
    if x <= xp[0]:
        return fp[0]
    if x >= xp[n - 1]:
        return fp[n - 1]
    lo = 0
    for k in range(1, n - 1):
        if xp[k] <= x:
            lo = k
        else:
            break
    return fp[lo] + (fp[lo + 1] - fp[lo]) / (xp[lo + 1] - xp[lo]) * (x - xp[lo])


def _interp_clamped_numpy(x, xp, fp):
    # np.interp clamps flat at both ends and evaluates the same slope
    # expression as _interp_point; the parity tests pin bit-equality.
    return np.interp(x, xp, fp)


def _trial_outcomes_numpy(
    distances, del_x, del_p, rssi_x, rssi_med, lat_x, lat_med,
    u_deliver, z_rssi, u_jitter, rssi_sigma,
):
    """Evaluate one link trial per element.

    ``u_deliver`` are uniforms on [0,1), ``z_rssi`` standard normals and
    ``u_jitter`` uniforms on the jitter band (e.g. [0.9, 1.1]).  Returns
    (delivered mask, rssi dBm, latency s); rssi/latency entries are only
    meaningful where delivered.
    """
    p = _interp_clamped_numpy(distances, del_x, del_p)
    delivered = u_deliver < p
    rssi = _interp_clamped_numpy(distances, rssi_x, rssi_med) + rssi_sigma * z_rssi
    latency = _interp_clamped_numpy(distances, lat_x, lat_med) * u_jitter
    return delivered, rssi, latency


def _numba_build():
    from numba import njit, prange

    interp_point = njit(cache=True, inline="always")(_interp_point)

    @njit(cache=True, parallel=True)
    def interp_clamped(x, xp, fp):
        out = np.empty(len(x), dtype=np.float64)
        for i in prange(len(x)):
            out[i] = interp_point(x[i], xp, fp)
        return out

    @njit(cache=True, parallel=True)
    def trial_outcomes(
        distances, del_x, del_p, rssi_x, rssi_med, lat_x, lat_med,
        u_deliver, z_rssi, u_jitter, rssi_sigma,
    ):
        n = len(distances)
        delivered = np.empty(n, dtype=np.bool_)
        rssi = np.empty(n, dtype=np.float64)
        latency = np.empty(n, dtype=np.float64)
        # Elements are independent and written by index, so the parallel
        # loop stays deterministic.
        for i in prange(n):
            d = distances[i]
            delivered[i] = u_deliver[i] < interp_point(d, del_x, del_p)
            rssi[i] = interp_point(d, rssi_x, rssi_med) + rssi_sigma * z_rssi[i]
            latency[i] = interp_point(d, lat_x, lat_med) * u_jitter[i]
        return delivered, rssi, latency

    return {
        "interp_scalar": interp_point,
        "interp_clamped": interp_clamped,
        "trial_outcomes": trial_outcomes,
    }


_NUMPY_BUILD = {
    "interp_scalar": _interp_point,
    "interp_clamped": _interp_clamped_numpy,
    "trial_outcomes": _trial_outcomes_numpy,
}


def _resolve_backend() -> str:
    flag = os.environ.get("FIREWATCH_NUMBA", "auto").strip().lower()
    if flag in ("0", "false", "off", "numpy"):
        return "numpy"
    if flag in ("1", "true", "on", "numba"):
        return "numba"
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


BACKEND = _resolve_backend()
_ACTIVE = _numba_build() if BACKEND == "numba" else _NUMPY_BUILD

interp_scalar = _ACTIVE["interp_scalar"]
interp_clamped = _ACTIVE["interp_clamped"]
trial_outcomes = _ACTIVE["trial_outcomes"]


def implementations() -> dict[str, dict]:
    """Both kernel builds, for parity tests and benchmarks.

    The "numba" entry is present only when numba imports.
    """
    impls = {"numpy": dict(_NUMPY_BUILD)}
    try:
        impls["numba"] = dict(_ACTIVE) if BACKEND == "numba" else _numba_build()
    except ImportError:
        pass
    return impls
