"""Shared test helpers: independent oracles and tolerance utilities.

The oracles here deliberately avoid the package's own algebra paths: the
branch enumeration builds its states with raw numpy kron/reshape calls and
applies the depolarizer as a direct convex mixture, so closure tests compare
two genuinely different computations.
"""

from __future__ import annotations

import math

import numpy as np
import pytest


def sigfigs_ok(value: float, reference: float, n: int) -> bool:
    """True when ``value`` matches ``reference`` to n significant figures.

    Implemented as half a unit in the n-th significant digit of the
    reference, which is how a table rounded to n figures constrains the
    underlying number.
    """
    if reference == 0:
        return abs(value) < 10.0 ** (-n)
    scale = math.floor(math.log10(abs(reference)))
    return abs(value - reference) <= 0.5 * 10.0 ** (scale - n + 1)


def _ket(angle_deg: float) -> np.ndarray:
    t = math.radians(angle_deg)
    return np.array([math.cos(t), math.sin(t)], dtype=complex)


def _trace_out_first(m: np.ndarray) -> np.ndarray:
    r = m.reshape(2, 2, 2, 2)
    return r[0, :, 0, :] + r[1, :, 1, :]


def enumerate_conditional_rates(
    eta1: float,
    eta2: float,
    q: float,
    model: str = "uniform_depolarizer",
    *,
    visibility: float = 1.0,
    eps_trigger: float = 1.0,
    eps_analyzer: float = 1.0,
    path_loss: float = 1.0,
    trigger_deg: float = 90.0,
    source: str = "mixed_hv",
) -> dict[str, float]:
    """Exact per-pair expected rates by brute-force branch enumeration.

    Returns expected analyzer singles and coincidence counts per emitted
    pair at analyzer angles 0 and 90 degrees, summing over the discrete
    outcome tree (trigger-photon projection x detection x rotation branch)
    with exact probabilities.
    """
    h, v = _ket(0.0), _ket(90.0)
    if source == "mixed_hv":
        hv, vh = np.kron(h, v), np.kron(v, h)
        ideal = (np.outer(hv, hv.conj()) + np.outer(vh, vh.conj())) / 2.0
    elif source == "psi_plus":
        ket = (np.kron(h, v) + np.kron(v, h)) / math.sqrt(2.0)
        ideal = np.outer(ket, ket.conj())
    else:
        raise ValueError(source)
    joint = visibility * ideal + (1.0 - visibility) * np.eye(4) / 4.0

    def conditioned(angle_deg: float) -> tuple[float, np.ndarray]:
        k = _ket(angle_deg)
        proj = np.kron(np.outer(k, k.conj()), np.eye(2))
        sub = proj @ joint @ proj
        p = sub.trace().real
        return p, _trace_out_first(sub) / p

    p_pass, rho_c = conditioned(trigger_deg)
    _, rho_perp = conditioned(trigger_deg + 90.0)

    rot = np.array([[0.0, -1.0], [1.0, 0.0]])  # 90-degree plane rotation

    def depolarize(rho: np.ndarray) -> np.ndarray:
        return q * rho + (1.0 - q) * np.eye(2) / 2.0

    p_fire = eps_trigger * eta1
    if model == "uniform_depolarizer":
        branches = [
            (p_pass * p_fire, depolarize(rot @ rho_c @ rot.T), True),
            (p_pass * (1.0 - p_fire), depolarize(rho_c), False),
            (1.0 - p_pass, depolarize(rho_perp), False),
        ]
    elif model == "bernoulli_identity":
        p_ok = (1.0 + q) / 2.0
        branches = [
            (p_pass * p_fire * p_ok, rot @ rho_c @ rot.T, True),
            (p_pass * p_fire * (1.0 - p_ok), rho_c, True),
            (p_pass * (1.0 - p_fire), rho_c, False),
            (1.0 - p_pass, rho_perp, False),
        ]
    else:
        raise ValueError(model)

    def rate(angle_deg: float, coincidence: bool) -> float:
        k = _ket(angle_deg)
        total = 0.0
        for prob, rho, fired in branches:
            if coincidence and not fired:
                continue
            malus = (k.conj() @ rho @ k).real
            total += prob * path_loss * eps_analyzer * malus * eta2
        return total

    return {
        "n_h": rate(0.0, False),
        "n_v": rate(90.0, False),
        "nc_h": rate(0.0, True),
        "nc_v": rate(90.0, True),
    }


def tac_reference(starts, stops, window_ns: float, stop_delay_ns: float) -> int:
    """O(n*m) reference coincidence counter for small streams."""
    half = window_ns / 2.0
    used = [False] * len(stops)
    busy_until = -math.inf
    count = 0
    for t in starts:
        if t < busy_until:
            continue
        lo, hi = t + stop_delay_ns - half, t + stop_delay_ns + half
        matched = None
        for j, s in enumerate(stops):
            if used[j] or s < lo:
                continue
            if s > hi:
                break
            matched = j
            break
        if matched is None:
            busy_until = hi
        else:
            used[matched] = True
            count += 1
            busy_until = max(t, stops[matched])
    return count


def poisson_visibility_sigma(n_max: float, n_min: float) -> float:
    """Standard deviation of (a-b)/(a+b) for independent Poisson counts."""
    s = n_max + n_min
    return 2.0 * math.sqrt(n_max * n_min * s) / s**2


@pytest.fixture(scope="session")
def reference_conditional_inputs():
    """The worked example count set used throughout the docs and tests."""
    from biphoton.uncertainty import UncertainInput

    return [
        UncertainInput("n_h", 76.6, 4.2),
        UncertainInput("n_v", 165.9, 5.7),
        UncertainInput("nc_h", 4.4, 1.6),
        UncertainInput("nc_v", 48.7, 2.6),
    ]


@pytest.fixture(scope="session")
def reference_klyshko_inputs():
    from biphoton.uncertainty import UncertainInput

    return [
        UncertainInput("n_idler", 1832.8, 9.0),
        UncertainInput("n_coincidence", 874.4, 5.2),
        UncertainInput("n_signal", 131777.0, 185.0),
        UncertainInput.rectangular("t_ns", 9.3, 0.5),
    ]
