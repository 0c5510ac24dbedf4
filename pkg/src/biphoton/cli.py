"""Command-line front end.

Subcommands
-----------
simulate   one seeded run, summary CSV out
scan       theta or delay scan, tidy CSV out (plot with whatever you like)
calibrate  estimate + uncertainty budget from a counts file
fit        modulation-curve least squares on (theta, counts) CSV data
selftest   reduced-scale closure checks of the engine against the analytics

Exit codes: 0 success, 1 statistical/self-test failure, 2 usage or config
error.  The RNG seed resolves as flag > ``BIPHOTON_SEED`` env var > 0.  All
CSV output has a header line, LF endings, and ``.`` decimals regardless of
locale.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace

from .bench import BenchConfig, ConfigError, predict_coincidence_visibility, predict_singles_visibility
from .calibrate import (
    CountSummary,
    KlyshkoCounts,
    apply_polarizer_correction,
    background_subtract,
    eta_conditional,
    eta_klyshko,
    fit_theta_curve,
    visibility,
)
from .polarization import Projector
from .scenario import load_config, parse_counts
from .simulate import (
    run_conditional_experiment,
    run_klyshko_experiment,
    scan_delay,
    scan_theta,
    subseed,
)
from .uncertainty import (
    Budget,
    UncertainInput,
    budget_conditional,
    budget_csv,
    budget_klyshko,
    format_budget,
    monte_carlo_uncertainty,
)

_CONDITIONAL_COUNT_KEYS = (
    "n_h",
    "n_v",
    "nc_h",
    "nc_v",
    "u_n_h",
    "u_n_v",
    "u_nc_h",
    "u_nc_v",
    "background_h",
    "background_v",
)
_KLYSHKO_COUNT_KEYS = (
    "n_signal",
    "n_idler",
    "n_coincidence",
    "tau_ns",
    "t_ns",
    "u_n_signal",
    "u_n_idler",
    "u_n_coincidence",
    "t_half_width_ns",
)


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("BIPHOTON_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"BIPHOTON_SEED={env!r} is not an integer") from None
    return 0


def _write_text(path: str, text: str) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _require(counts: dict, keys, where: str) -> None:
    missing = [k for k in keys if k not in counts]
    if missing:
        raise ConfigError(f"{where}: missing keys {', '.join(missing)}")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed = _resolve_seed(args.seed)
    run = run_klyshko_experiment if args.experiment == "klyshko" else run_conditional_experiment
    res = run(cfg, args.duration, seed)
    lines = [
        "singles_trigger,singles_analyzer,coincidences,duration_s,seed",
        f"{res.singles_trigger},{res.singles_analyzer},{res.coincidences},"
        f"{res.duration_s!r},{res.seed}",
    ]
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_scan(args) -> int:
    cfg = load_config(args.config)
    seed = _resolve_seed(args.seed)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values: {args.values!r} is not a comma-separated number list")
    if not values:
        raise ConfigError("--values: empty list")
    if args.scan == "theta":
        rows = scan_theta(cfg, values, args.duration, seed)
        lines = ["theta_deg,singles,coincidences"]
        lines += [f"{p.theta_deg!r},{p.singles},{p.coincidences}" for p in rows]
    else:
        rows = scan_delay(cfg, values, args.duration, seed)
        lines = ["delay_ns,singles_h,singles_v,coinc_h,coinc_v"]
        lines += [
            f"{p.delay_ns!r},{p.singles_h},{p.singles_v},{p.coinc_h},{p.coinc_v}"
            for p in rows
        ]
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _calibrate_conditional(args) -> tuple[str, Budget | None]:
    counts = parse_counts(_read_text(args.counts), _CONDITIONAL_COUNT_KEYS)
    _require(counts, ("n_h", "n_v", "nc_h", "nc_v"), args.counts)
    summary = CountSummary(
        n_h=counts["n_h"],
        n_v=counts["n_v"],
        nc_h=counts["nc_h"],
        nc_v=counts["nc_v"],
        background_h=counts.get("background_h", 0.0),
        background_v=counts.get("background_v", 0.0),
    )
    if args.background:
        bg = parse_counts(_read_text(args.background), ("background_h", "background_v"))
        _require(bg, ("background_h", "background_v"), args.background)
        summary = replace(
            summary, background_h=bg["background_h"], background_v=bg["background_v"]
        )
    if summary.background_h or summary.background_v:
        summary = background_subtract(summary)

    estimate = eta_conditional(summary)
    budget = None
    u_keys = ("u_n_h", "u_n_v", "u_nc_h", "u_nc_v")
    if all(k in counts for k in u_keys):
        budget = budget_conditional(
            [
                UncertainInput("n_h", summary.n_h, counts["u_n_h"]),
                UncertainInput("n_v", summary.n_v, counts["u_n_v"]),
                UncertainInput("nc_h", summary.nc_h, counts["u_nc_h"]),
                UncertainInput("nc_v", summary.nc_v, counts["u_nc_v"]),
            ]
        )
        estimate = replace(estimate, u=budget.combined_u)

    out = [
        f"singles visibility    = {visibility(summary.n_v, summary.n_h):.6g}",
        f"coincidence visibility = {visibility(summary.nc_v, summary.nc_h):.6g}",
        f"eta (conditional)     = {estimate.value:.6g}"
        + (f" +- {estimate.u:.3g}" if estimate.u else ""),
    ]
    if args.epsilon is not None:
        corrected = apply_polarizer_correction(estimate, args.epsilon)
        out.append(
            f"eta / epsilon({args.epsilon:g}) = {corrected.value:.6g}"
            + (f" +- {corrected.u:.3g}" if corrected.u else "")
        )
    if budget is not None:
        out.append("")
        out.append(format_budget(budget))
    return "\n".join(out) + "\n", budget


def _calibrate_klyshko(args) -> tuple[str, Budget | None]:
    counts = parse_counts(_read_text(args.counts), _KLYSHKO_COUNT_KEYS)
    _require(counts, ("n_signal", "n_idler", "n_coincidence", "tau_ns", "t_ns"), args.counts)
    k = KlyshkoCounts(
        n_signal=counts["n_signal"],
        n_idler=counts["n_idler"],
        n_coincidence=counts["n_coincidence"],
        tau_ns=counts["tau_ns"],
        t_ns=counts["t_ns"],
    )
    estimate = eta_klyshko(k)
    budget = None
    u_keys = ("u_n_idler", "u_n_coincidence", "u_n_signal", "t_half_width_ns")
    if all(key in counts for key in u_keys):
        budget = budget_klyshko(
            [
                UncertainInput("n_idler", k.n_idler, counts["u_n_idler"]),
                UncertainInput("n_coincidence", k.n_coincidence, counts["u_n_coincidence"]),
                UncertainInput("n_signal", k.n_signal, counts["u_n_signal"]),
                UncertainInput.rectangular("t_ns", k.t_ns, counts["t_half_width_ns"]),
            ],
            tau_ns=k.tau_ns,
        )
        estimate = replace(estimate, u=budget.combined_u)

    raw = k.n_coincidence / k.n_idler
    out = [
        f"eta uncorrected = {raw:.6g}",
        f"eta (klyshko)   = {estimate.value:.6g}"
        + (f" +- {estimate.u:.3g}" if estimate.u else ""),
    ]
    if budget is not None:
        out.append("")
        out.append(format_budget(budget))
    return "\n".join(out) + "\n", budget


def _cmd_calibrate(args) -> int:
    if args.scheme == "conditional":
        text, budget = _calibrate_conditional(args)
    else:
        text, budget = _calibrate_klyshko(args)
    sys.stdout.write(text)
    if args.out:
        if budget is None:
            raise ConfigError(
                "--out needs a full budget; add the u_* keys to the counts file"
            )
        _write_text(args.out, budget_csv(budget))
    return 0


def _cmd_fit(args) -> int:
    lines = _read_text(args.points).splitlines()
    if not lines or "," not in lines[0]:
        raise ConfigError(f"{args.points}: expected CSV with a header line")
    points = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) < 2:
            raise ConfigError(f"{args.points} line {lineno}: expected theta,counts")
        try:
            points.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ConfigError(
                f"{args.points} line {lineno}: {line!r} is not numeric"
            ) from None
    fit = fit_theta_curve(points)
    sys.stdout.write(
        f"amplitude    = {fit.amplitude:.6g}\n"
        f"modulation   = {fit.modulation:.6g}\n"
        f"phase_deg    = {fit.phase_deg:.6g}\n"
        f"u_modulation = {fit.u_modulation:.3g}\n"
    )
    return 0


def _cmd_selftest(args) -> int:
    seed = _resolve_seed(args.seed)
    checks: list[tuple[str, float, bool]] = []

    cfg = BenchConfig(
        pair_rate_hz=2.0e4,
        det1=replace(BenchConfig().det1, eta=0.45),
        det2=replace(BenchConfig().det2, eta=0.40),
        pockels=replace(BenchConfig().pockels, q=0.832),
    )
    duration = 6.0
    res_h = run_conditional_experiment(
        replace(cfg, analyzer=Projector(0.0)), duration, subseed(seed, 0)
    )
    res_v = run_conditional_experiment(
        replace(cfg, analyzer=Projector(90.0)), duration, subseed(seed, 1)
    )

    def vis_sigma(a: float, b: float) -> float:
        # Poisson counts through v = (a - b)/(a + b)
        return 2.0 * math.sqrt(a * b * (a + b)) / (a + b) ** 2

    vis_singles = visibility(res_v.singles_analyzer, res_h.singles_analyzer)
    sig = vis_sigma(res_v.singles_analyzer, res_h.singles_analyzer)
    margin = abs(vis_singles - predict_singles_visibility(cfg)) / sig
    checks.append(("singles visibility vs closed form", margin, margin < 4.0))

    vis_coinc = visibility(res_v.coincidences, res_h.coincidences)
    sig = vis_sigma(res_v.coincidences, res_h.coincidences)
    margin = abs(vis_coinc - predict_coincidence_visibility(cfg)) / sig
    checks.append(("coincidence visibility vs closed form", margin, margin < 4.0))

    summary = CountSummary(
        n_h=res_h.singles_analyzer,
        n_v=res_v.singles_analyzer,
        nc_h=res_h.coincidences,
        nc_v=res_v.coincidences,
    )
    budget = budget_conditional(
        [
            UncertainInput("n_h", summary.n_h, math.sqrt(summary.n_h)),
            UncertainInput("n_v", summary.n_v, math.sqrt(summary.n_v)),
            UncertainInput("nc_h", summary.nc_h, math.sqrt(summary.nc_h)),
            UncertainInput("nc_v", summary.nc_v, math.sqrt(summary.nc_v)),
        ]
    )
    margin = abs(eta_conditional(summary).value - cfg.det1.eta) / budget.combined_u
    checks.append(("conditional estimator recovers eta1", margin, margin < 4.0))

    kcfg = BenchConfig(
        pair_rate_hz=1.0e5,
        det1=replace(BenchConfig().det1, eta=0.48, dead_time_ns=40.0),
        det2=replace(BenchConfig().det2, eta=0.60, dead_time_ns=0.0),
    )
    kres = run_klyshko_experiment(kcfg, 4.0, subseed(seed, 2))
    k = KlyshkoCounts(
        n_signal=kres.singles_trigger / kres.duration_s,
        n_idler=kres.singles_analyzer / kres.duration_s,
        n_coincidence=kres.coincidences / kres.duration_s,
        tau_ns=kcfg.det1.dead_time_ns,
        t_ns=kcfg.tac.stop_delay_ns,
    )
    est = eta_klyshko(k)
    sigma = math.sqrt(est.value * (1 - est.value) / kres.singles_analyzer)
    margin = abs(est.value - kcfg.det1.eta) / sigma
    checks.append(("klyshko corrected estimator recovers eta", margin, margin < 4.0))

    mc = monte_carlo_uncertainty("conditional", _reference_inputs(), trials=20_000, seed=seed)
    analytic = budget_conditional(_reference_inputs()).combined_u
    rel = abs(mc / analytic - 1.0)
    checks.append(("budget vs Monte Carlo uncertainty", rel / 0.07, rel < 0.07))

    ok = True
    for name, margin, passed in checks:
        ok &= passed
        sys.stdout.write(
            f"{'PASS' if passed else 'FAIL'}  {name}  (margin {margin:.2f} of limit)\n"
        )
    return 0 if ok else 1


def _reference_inputs() -> list[UncertainInput]:
    # bundled example budget used by the self-test
    return [
        UncertainInput("n_h", 76.6, 4.2),
        UncertainInput("n_v", 165.9, 5.7),
        UncertainInput("nc_h", 4.4, 1.6),
        UncertainInput("nc_v", 48.7, 2.6),
    ]


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biphoton",
        description="Heralded polarization-rotation bench: simulation and calibration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one seeded experiment")
    p.add_argument("--config", required=True, help="scenario file (key=value)")
    p.add_argument("--duration", type=float, required=True, help="run length in seconds")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="summary CSV path (default: stdout)")
    p.add_argument(
        "--experiment",
        choices=("conditional", "klyshko"),
        default="conditional",
    )
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("scan", help="scan analyzer angle or electronic delay")
    p.add_argument("--config", required=True)
    p.add_argument("--scan", choices=("theta", "delay"), required=True)
    p.add_argument("--values", required=True, help="comma-separated scan values")
    p.add_argument("--duration", type=float, required=True, help="seconds per point")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("calibrate", help="estimate efficiency from a counts file")
    p.add_argument("--scheme", choices=("conditional", "klyshko"), required=True)
    p.add_argument("--counts", required=True, help="counts file (key=value)")
    p.add_argument("--epsilon", type=float, default=None, help="trigger polarizer transmittance")
    p.add_argument("--background", default=None, help="background counts file")
    p.add_argument("--out", default=None, help="budget CSV path")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("fit", help="fit the modulation curve to (theta, counts) CSV")
    p.add_argument("--points", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("selftest", help="reduced-scale closure checks")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
