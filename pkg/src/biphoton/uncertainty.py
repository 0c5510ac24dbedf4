"""First-order uncertainty propagation and budget tables for both estimators.

Combined standard uncertainty follows the usual quadrature rule

    u^2(eta) = sum_i c_i^2 u^2(x_i)

with closed-form sensitivity coefficients c_i, assembled into per-input
budget rows (value, standard deviation, distribution, sensitivity,
contribution).  Input correlations are taken as zero.  A seeded Monte Carlo
cross-check samples the inputs from their stated distributions and returns
the sample standard deviation of the estimator, which should agree with the
analytic combined uncertainty in the first-order regime.

Count standard deviations are always taken as given: measured scatter often
exceeds the bare Poisson value, so nothing here silently substitutes
sqrt(rate).  Use :func:`poisson_std` when a plain counting deviation is
wanted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .calibrate import CountSummary, KlyshkoCounts, eta_conditional, eta_klyshko

_NS_TO_S = 1.0e-9

DISTRIBUTIONS = ("gaussian", "rectangular")

MIN_MC_TRIALS = 10_000
_MC_BLOCK = 1 << 15
_DEFAULT_MC_SEED = 7041


@dataclass(frozen=True)
class UncertainInput:
    """One estimator input: value, standard deviation, and distribution."""

    name: str
    value: float
    std_dev: float
    distribution: str = "gaussian"

    def __post_init__(self):
        if self.std_dev < 0:
            raise ValueError(f"UncertainInput {self.name}: std_dev must be >= 0")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(
                f"UncertainInput {self.name}: distribution "
                f"{self.distribution!r} not in {DISTRIBUTIONS}"
            )

    @classmethod
    def rectangular(cls, name: str, value: float, half_width: float) -> "UncertainInput":
        """Rectangular input of given half-width; std_dev = half_width / sqrt(3)."""
        return cls(name, value, half_width / math.sqrt(3.0), "rectangular")


@dataclass(frozen=True)
class BudgetRow:
    """One line of the budget: contribution = |sensitivity| * std_dev."""

    quantity: str
    value: float
    std_dev: float
    distribution: str
    sensitivity: float
    contribution: float
    note: str = ""


@dataclass(frozen=True)
class Budget:
    """Estimate plus its per-input budget rows, combined in quadrature."""

    estimate: float
    rows: tuple[BudgetRow, ...]

    @property
    def combined_u(self) -> float:
        return math.sqrt(sum(r.contribution**2 for r in self.rows))

    def row(self, quantity: str) -> BudgetRow:
        for r in self.rows:
            if r.quantity == quantity:
                return r
        raise KeyError(quantity)


def poisson_std(rate_hz: float, integration_s: float) -> float:
    """Counting standard deviation of a rate: sqrt(rate / integration time)."""
    if rate_hz < 0 or integration_s <= 0:
        raise ValueError("poisson_std: rate >= 0 and integration time > 0 required")
    return math.sqrt(rate_hz / integration_s)


# ---------------------------------------------------------------------------
# sensitivity coefficients


def sensitivities_conditional(c: CountSummary) -> tuple[float, float, float, float]:
    """Closed-form partials of the conditional estimator.

    Returns (d/dN_H, d/dN_V, d/dNc_H, d/dNc_V) of

        eta1 = [(N_V - N_H)/(N_V + N_H)] * [(Nc_V + Nc_H)/(Nc_V - Nc_H)].
    """
    s = c.n_v + c.n_h
    d = c.nc_v - c.nc_h
    if s == 0 or d == 0:
        raise ValueError("sensitivities undefined: degenerate counts")
    vis = (c.n_v - c.n_h) / s
    con = (c.nc_v + c.nc_h) / d
    return (
        con * (-2.0 * c.n_v / s**2),
        con * (2.0 * c.n_h / s**2),
        vis * (2.0 * c.nc_v / d**2),
        vis * (-2.0 * c.nc_h / d**2),
    )


def sensitivities_klyshko(k: KlyshkoCounts) -> tuple[float, float, float, float]:
    """Closed-form partials of eta = N_c / (N_i * gamma * alpha).

    Returns (d/dN_i, d/dN_c, d/dN_s, d/dT) with the T derivative expressed
    per nanosecond, matching how the stop delay is quoted.
    """
    tau = k.tau_ns * _NS_TO_S
    t = k.t_ns * _NS_TO_S
    gamma = 1.0 - k.n_signal * tau
    alpha = 1.0 - k.n_signal * t
    eta = eta_klyshko(k).value
    return (
        -eta / k.n_idler,
        eta / k.n_coincidence,
        eta * (tau / gamma + t / alpha),
        eta * k.n_signal / alpha * _NS_TO_S,
    )


# ---------------------------------------------------------------------------
# budgets


def _rows(
    inputs: Sequence[UncertainInput],
    coefficients: Sequence[float],
    reference: Mapping[str, float] | None = None,
) -> tuple[BudgetRow, ...]:
    rows = []
    for inp, c in zip(inputs, coefficients):
        note = ""
        if reference and inp.name in reference:
            ref = reference[inp.name]
            if ref != 0 and abs(c / ref - 1.0) > 0.1:
                note = (
                    f"computed sensitivity {c:.4g} differs from supplied "
                    f"reference {ref:.4g} (ratio {c / ref:.3g})"
                )
        rows.append(
            BudgetRow(
                quantity=inp.name,
                value=inp.value,
                std_dev=inp.std_dev,
                distribution=inp.distribution,
                sensitivity=c,
                contribution=abs(c) * inp.std_dev,
                note=note,
            )
        )
    return tuple(rows)


def budget_conditional(inputs: Sequence[UncertainInput]) -> Budget:
    """Budget of the conditional estimator.

    ``inputs`` must be the four rates in the order N_H, N_V, Nc_H, Nc_V.
    """
    if len(inputs) != 4:
        raise ValueError("budget_conditional expects exactly 4 inputs")
    c = CountSummary(inputs[0].value, inputs[1].value, inputs[2].value, inputs[3].value)
    coeffs = sensitivities_conditional(c)
    return Budget(eta_conditional(c).value, _rows(inputs, coeffs))


def budget_klyshko(
    inputs: Sequence[UncertainInput],
    tau_ns: float,
    reference_sensitivities: Mapping[str, float] | None = None,
) -> Budget:
    """Budget of the direct-calibration estimator.

    ``inputs`` must be N_i, N_c, N_s, T (T in ns); the dead time ``tau_ns``
    is treated as exact.  When ``reference_sensitivities`` maps an input
    name to an externally quoted coefficient, rows whose computed
    coefficient deviates by more than 10% carry a note reporting both
    values; the computed one is always the one used.
    """
    if len(inputs) != 4:
        raise ValueError("budget_klyshko expects exactly 4 inputs (N_i, N_c, N_s, T)")
    k = KlyshkoCounts(
        n_signal=inputs[2].value,
        n_idler=inputs[0].value,
        n_coincidence=inputs[1].value,
        tau_ns=tau_ns,
        t_ns=inputs[3].value,
    )
    coeffs = sensitivities_klyshko(k)
    ordered = (coeffs[0], coeffs[1], coeffs[2], coeffs[3])
    return Budget(
        eta_klyshko(k).value, _rows(inputs, ordered, reference_sensitivities)
    )


# ---------------------------------------------------------------------------
# Monte Carlo cross-check


def conditional_estimator(n_h, n_v, nc_h, nc_v):
    """Vectorized conditional estimator (same formula as eta_conditional)."""
    return (n_v - n_h) / (n_v + n_h) * (nc_v + nc_h) / (nc_v - nc_h)


def klyshko_estimator(n_idler, n_coincidence, n_signal, t_ns, tau_ns):
    """Vectorized direct-calibration estimator (same formula as eta_klyshko)."""
    gamma = 1.0 - n_signal * tau_ns * _NS_TO_S
    alpha = 1.0 - n_signal * t_ns * _NS_TO_S
    return n_coincidence / (n_idler * gamma * alpha)


def _sample(inp: UncertainInput, rng: np.random.Generator, n: int) -> np.ndarray:
    if inp.distribution == "gaussian":
        return rng.normal(inp.value, inp.std_dev, n)
    hw = inp.std_dev * math.sqrt(3.0)
    return rng.uniform(inp.value - hw, inp.value + hw, n)


def monte_carlo_uncertainty(
    estimator: str | Callable,
    inputs: Sequence[UncertainInput],
    trials: int = 100_000,
    *,
    tau_ns: float | None = None,
    seed: int = _DEFAULT_MC_SEED,
) -> float:
    """Sample-based standard uncertainty of an estimator.

    ``estimator`` is either a vectorized callable taking one array per input
    (in the given order) or one of the ids ``"conditional"`` /
    ``"klyshko"``; the latter needs ``tau_ns``.  Trials run in fixed-size
    blocks with per-block subseeds, so blocks can be evaluated in any order
    (or in parallel) without changing the result.
    """
    if trials < MIN_MC_TRIALS:
        raise ValueError(f"trials must be >= {MIN_MC_TRIALS}")
    if callable(estimator):
        func = estimator
    elif estimator == "conditional":
        func = conditional_estimator
    elif estimator == "klyshko":
        if tau_ns is None:
            raise ValueError("klyshko estimator needs tau_ns")
        func = lambda ni, nc, ns, t: klyshko_estimator(ni, nc, ns, t, tau_ns)
    else:
        raise ValueError(f"unknown estimator id {estimator!r}")

    chunks = []
    for block, lo in enumerate(range(0, trials, _MC_BLOCK)):
        n = min(_MC_BLOCK, trials - lo)
        rng = np.random.default_rng(np.random.SeedSequence((seed, block)))
        cols = [_sample(inp, rng, n) for inp in inputs]
        chunks.append(np.asarray(func(*cols), dtype=float))
    values = np.concatenate(chunks)
    return float(np.std(values, ddof=1))


# ---------------------------------------------------------------------------
# rendering


_COLUMNS = ("Quantity", "Value", "Std Dev", "Distribution", "Sensitivity", "Contribution")


def format_budget(budget: Budget) -> str:
    """Fixed-column text table of the budget, one row per input."""
    table = [_COLUMNS]
    for r in budget.rows:
        table.append(
            (
                r.quantity,
                f"{r.value:g}",
                f"{r.std_dev:g}",
                r.distribution,
                f"{r.sensitivity:.6g}",
                f"{r.contribution:.5g}",
            )
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(_COLUMNS))]
    lines = [
        " | ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in table
    ]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    lines.append(f"estimate = {budget.estimate:.6g}  combined u = {budget.combined_u:.4g}")
    for r in budget.rows:
        if r.note:
            lines.append(f"note [{r.quantity}]: {r.note}")
    return "\n".join(lines)


def budget_csv(budget: Budget) -> str:
    """CSV rendering: header, one row per input, then a combined row."""
    out = ["quantity,value,std_dev,distribution,sensitivity,contribution,note"]
    for r in budget.rows:
        out.append(
            f"{r.quantity},{r.value!r},{r.std_dev!r},{r.distribution},"
            f"{r.sensitivity!r},{r.contribution!r},{r.note}"
        )
    out.append(f"combined,{budget.estimate!r},{budget.combined_u!r},,,,")
    return "\n".join(out) + "\n"
