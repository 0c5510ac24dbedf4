"""Deterministic seeded Monte Carlo engine for the photon-pair bench.

Produces timestamped detection streams and singles/coincidence counts for
both experiment types:

* :func:`run_conditional_experiment` - trigger detections drive a
  high-voltage rotation pulse on the delayed idler photon, which is then
  analyzed by a polarizer and a second detector.
* :func:`run_klyshko_experiment` - both photons of each pair are detected
  directly; coincidences against the heralding arm give the absolute
  detection efficiency.

A run is a pure function of ``(config, duration, seed)``: identical inputs
give bit-identical results.  One engine call is single-threaded; independent
runs (different seeds or scan values) may execute concurrently and their
counts merge by summation.

Per pair, outcome probabilities come from the exact conditional states of
:mod:`biphoton.polarization` (no small-angle shortcuts).  The idler samples
the amplitude of its *own* trigger's pulse; overlap of a photon with a pulse
fired by a different pair is outside this model, which keeps the engine
consistent with the closed forms of :mod:`biphoton.bench` and is a small
correction at the sub-10-kHz trigger rates the driver policy enforces.
Detector dead time is non-paralyzable, and dark/background events are
injected as ready-made detection rates on their channel, subject only to
dead time.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .bench import BenchConfig
from .polarization import (
    PolarizationDensity,
    Projector,
    apply_channel,
    conditional_state,
    depolarizer,
    make_state,
    rotator,
)

CHANNELS = ("trigger", "analyzer")
ORIGINS = ("pair", "dark", "background")

_NS_PER_S = 1.0e9


@dataclass(frozen=True)
class DetectionRecord:
    """One detector click: channel, time in ns, and what produced it."""

    channel: str
    time_ns: float
    origin: str


@dataclass(frozen=True, eq=False)
class SimResult:
    """Aggregated counts of one run, plus the inputs that produced them.

    For the Klyshko experiment the device under test maps onto the
    ``trigger`` channel and the heralding arm onto ``analyzer``.
    """

    duration_s: float
    singles_trigger: int
    singles_analyzer: int
    coincidences: int
    config: BenchConfig
    seed: int
    records: tuple[DetectionRecord, ...] | None = None

    def __post_init__(self):
        if min(self.singles_trigger, self.singles_analyzer, self.coincidences) < 0:
            raise ValueError("SimResult: counts must be >= 0")
        if self.coincidences > min(self.singles_trigger, self.singles_analyzer):
            raise ValueError("SimResult: coincidences exceed a singles count")


@dataclass(frozen=True)
class ThetaScanPoint:
    theta_deg: float
    singles: int
    coincidences: int


@dataclass(frozen=True)
class DelayScanPoint:
    delay_ns: float
    singles_h: int
    singles_v: int
    coinc_h: int
    coinc_v: int


def subseed(seed: int, *path: int) -> int:
    """Deterministic 64-bit child seed for scan point ``path``."""
    state = np.random.SeedSequence((seed, *path)).generate_state(2)
    return int(state[0]) << 32 | int(state[1])


class DriverGate:
    """Sliding-window rate protection for the high-voltage driver.

    Feed every trigger detection (photon or dark) through
    :meth:`on_detection`; it returns whether a pulse is scheduled.  When a
    detection pushes the trailing-one-second count above
    ``rate_threshold_hz * 1 s`` the gate disables for the configured
    duration, starting with that detection's own pulse.  Detections during
    the disabled stretch still count toward the rate.
    """

    def __init__(self, rate_threshold_hz: float, disable_duration_s: float):
        self._limit = rate_threshold_hz * 1.0
        self._disable_ns = disable_duration_s * _NS_PER_S
        self._window: deque[float] = deque()
        self._disabled_until = -math.inf

    def on_detection(self, t_ns: float) -> bool:
        w = self._window
        w.append(t_ns)
        cutoff = t_ns - _NS_PER_S
        while w and w[0] <= cutoff:
            w.popleft()
        if t_ns < self._disabled_until:
            return False
        if len(w) > self._limit:
            self._disabled_until = t_ns + self._disable_ns
            return False
        return True


def tac_coincidences(
    starts, stops, window_ns: float, stop_delay_ns: float
) -> int:
    """Count start-stop coincidences with TAC + single-channel-analyzer logic.

    A start at time t (if the converter is idle) accepts the first stop in
    ``[t + stop_delay - window/2, t + stop_delay + window/2]``.  Each start
    and each stop is used at most once, and the converter stays busy from
    the start until the matching stop arrives or the window closes; starts
    arriving while busy are discarded.  Stop times are arrival times at the
    stop input, i.e. any inserted stop-line delay is already included by the
    caller.
    """
    starts = np.asarray(starts, dtype=float)
    stops = np.asarray(stops, dtype=float)
    if starts.size and np.any(np.diff(starts) < 0):
        raise ValueError("tac_coincidences: start stream is not time-ordered")
    if stops.size and np.any(np.diff(stops) < 0):
        raise ValueError("tac_coincidences: stop stream is not time-ordered")
    if window_ns <= 0:
        raise ValueError("tac_coincidences: window_ns must be > 0")
    half = window_ns / 2.0
    stop_list = stops.tolist()
    m = len(stop_list)
    count = 0
    j = 0
    busy_until = -math.inf
    for t in starts.tolist():
        if t < busy_until:
            continue
        lo = t + stop_delay_ns - half
        hi = t + stop_delay_ns + half
        while j < m and stop_list[j] < lo:
            j += 1
        if j < m and stop_list[j] <= hi:
            count += 1
            busy_until = max(t, stop_list[j])
            j += 1
        else:
            busy_until = hi
    return count


# ---------------------------------------------------------------------------
# internal stream machinery


def _poisson_stream(rng: np.random.Generator, rate_hz: float, duration_s: float) -> np.ndarray:
    n = rng.poisson(rate_hz * duration_s) if rate_hz > 0 else 0
    return np.sort(rng.uniform(0.0, duration_s * _NS_PER_S, n))


def _merge_streams(*streams: tuple[np.ndarray, int]) -> tuple[np.ndarray, np.ndarray]:
    """Merge (times, tag) streams into one time-ordered (times, tags) pair."""
    times = np.concatenate([t for t, _ in streams]) if streams else np.empty(0)
    tags = np.concatenate(
        [np.full(len(t), tag, dtype=np.int64) for t, tag in streams]
    )
    order = np.argsort(times, kind="stable")
    return times[order], tags[order]


def _dead_time_filter(times: np.ndarray, dead_ns: float) -> np.ndarray:
    """Non-paralyzable dead time: keep an event iff the detector is live."""
    n = len(times)
    keep = np.ones(n, dtype=bool)
    if dead_ns <= 0 or n == 0:
        return keep
    next_live = -math.inf
    for i, t in enumerate(times.tolist()):
        if t < next_live:
            keep[i] = False
        else:
            next_live = t + dead_ns
    return keep


def _trigger_pass(
    times: np.ndarray,
    pair_idx: np.ndarray,
    dead_ns: float,
    gate: DriverGate | None,
    n_pairs: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Dead-time + driver pass over merged trigger candidates.

    ``pair_idx`` holds the emitting pair's index, or -1 for dark events.
    Returns the accepted-event mask and the per-pair pulse flags.
    """
    accepted = np.zeros(len(times), dtype=bool)
    pulsed = np.zeros(n_pairs, dtype=bool)
    next_live = -math.inf
    for i, (t, j) in enumerate(zip(times.tolist(), pair_idx.tolist())):
        if t < next_live:
            continue
        accepted[i] = True
        next_live = t + dead_ns
        fire = gate.on_detection(t) if gate is not None else True
        if fire and j >= 0:
            pulsed[j] = True
    return accepted, pulsed


def _records_for(channel: str, times: np.ndarray, tags: np.ndarray) -> list[DetectionRecord]:
    return [
        DetectionRecord(channel, t, ORIGINS[int(tag)])
        for t, tag in zip(times.tolist(), tags.tolist())
    ]


# ---------------------------------------------------------------------------
# experiments


def _idler_group_states(cfg: BenchConfig) -> tuple[list[PolarizationDensity], float]:
    """Pre-analyzer idler states for the groups (perp, copol, copol+pulse).

    Also returns the trigger-pass probability (transmittance excluded).
    The pulse amplitude sampled by the idler is constant within a run, so
    the rotation angle is amplitude * rotation_angle_deg for every pulsed
    pair; the bernoulli_identity success branch is folded in as an exact
    mixture.
    """
    joint = make_state(cfg.source_kind, cfg.state_visibility)
    axis = cfg.trigger_projector.angle_deg
    p_pass, rho_copol = conditional_state(joint, Projector(axis), arm=1)
    _, rho_perp = conditional_state(joint, Projector(axis + 90.0), arm=1)

    phi = cfg.pulse_amplitude_at_idler() * cfg.pockels.rotation_angle_deg

    def transformed(rho: PolarizationDensity, pulsed: bool) -> PolarizationDensity:
        if cfg.pockels.failure_model == "uniform_depolarizer":
            out = apply_channel(rho, rotator(phi)) if pulsed else rho
            return apply_channel(out, depolarizer(cfg.pockels.q))
        if not pulsed:
            return rho
        p_ok = cfg.pockels.success_probability
        rotated = apply_channel(rho, rotator(phi))
        return PolarizationDensity(
            p_ok * rotated.matrix + (1.0 - p_ok) * rho.matrix
        )

    groups = [
        transformed(rho_perp, False),
        transformed(rho_copol, False),
        transformed(rho_copol, True),
    ]
    return groups, p_pass


def run_conditional_experiment(
    cfg: BenchConfig, duration_s: float, seed: int, keep_records: bool = False
) -> SimResult:
    """Simulate the measurement-conditioned rotation experiment.

    Event chain per pair: the trigger photon is sorted by the trigger
    polarizer (projecting its partner), reaches the detector with the
    polarizer transmittance, and fires with probability eta1 if the
    detector is live; accepted clicks schedule a rotation pulse unless the
    driver gate is disabled.  The idler arrives at emission + fiber delay +
    electronic delay, samples its pulse's instantaneous amplitude v (so the
    applied rotation is v * 90 deg for the default rotation angle), passes
    the imperfection model and the analyzer, and is detected with eta2
    under dead time.  Coincidences are counted by the TAC with the known
    constant path offset compensated in the start line.
    """
    if duration_s < 0:
        raise ValueError("duration_s must be >= 0")
    rng = np.random.default_rng(seed)
    duration_ns = duration_s * _NS_PER_S

    n_pairs = rng.poisson(cfg.pair_rate_hz * duration_s) if duration_s > 0 else 0
    t_pairs = np.sort(rng.uniform(0.0, duration_ns, n_pairs))

    group_states, p_pass = _idler_group_states(cfg)
    ana = cfg.analyzer
    ana_proj = ana.matrix()
    p_detect2 = np.array(
        [
            cfg.idler_path_loss
            * ana.transmittance
            * (ana_proj @ s.matrix).trace().real
            * cfg.det2.eta
            for s in group_states
        ]
    )
    p_detect2 = np.clip(p_detect2, 0.0, 1.0)

    # trigger arm
    copol = rng.random(n_pairs) < p_pass
    cand1 = copol & (
        rng.random(n_pairs) < cfg.trigger_projector.transmittance * cfg.det1.eta
    )
    dark1 = _poisson_stream(rng, cfg.det1.dark_rate_hz, duration_s)
    pair_indices = np.nonzero(cand1)[0]
    t_cand1, idx1 = _merge_streams(
        (t_pairs[cand1], 0), (dark1, 1)
    )
    # retag: map merged tags to pair index (>= 0) or -1 for darks
    merged_idx = np.full(len(t_cand1), -1, dtype=np.int64)
    merged_idx[idx1 == 0] = pair_indices
    gate = DriverGate(cfg.driver.rate_threshold_hz, cfg.driver.disable_duration_s)
    accepted1, pulsed = _trigger_pass(
        t_cand1, merged_idx, cfg.det1.dead_time_ns, gate, n_pairs
    )
    t_det1 = t_cand1[accepted1]
    tags_det1 = idx1[accepted1]

    # idler arm
    group = np.zeros(n_pairs, dtype=np.int64)
    group[copol] = 1
    group[pulsed] = 2
    cand2 = rng.random(n_pairs) < p_detect2[group]
    idler_offset_ns = cfg.fiber_delay_ns + cfg.electronic_delay_ns
    t_idler = t_pairs[cand2] + idler_offset_ns
    dark2 = _poisson_stream(rng, cfg.det2.dark_rate_hz, duration_s)
    backgr = _poisson_stream(rng, cfg.background_rate_hz, duration_s)
    t_cand2, tags2 = _merge_streams((t_idler, 0), (dark2, 1), (backgr, 2))
    accepted2 = _dead_time_filter(t_cand2, cfg.det2.dead_time_ns)
    t_det2 = t_cand2[accepted2]
    tags_det2 = tags2[accepted2]

    coincidences = tac_coincidences(
        t_det1 + idler_offset_ns,  # start line delayed to match the idler path
        t_det2 + cfg.tac.stop_delay_ns,
        cfg.tac.window_ns,
        cfg.tac.stop_delay_ns,
    )

    records = None
    if keep_records:
        records = tuple(
            _records_for("trigger", t_det1, tags_det1)
            + _records_for("analyzer", t_det2, tags_det2)
        )
    return SimResult(
        duration_s=duration_s,
        singles_trigger=int(len(t_det1)),
        singles_analyzer=int(len(t_det2)),
        coincidences=int(coincidences),
        config=cfg,
        seed=seed,
        records=records,
    )


def run_klyshko_experiment(
    cfg: BenchConfig, duration_s: float, seed: int, keep_records: bool = False
) -> SimResult:
    """Simulate the direct two-detector calibration experiment.

    The rotation element is out of the path and no polarizers are scanned,
    so polarization plays no role: each pair's photon on the device under
    test (``det1``, mapped to the ``trigger`` channel) is detected with
    eta1, and the heralding photon (``det2`` behind the idler path loss,
    mapped to ``analyzer``) with alpha * eta2, both under dead time.
    Coincidences use the TAC with the configured stop-line delay.
    """
    if duration_s < 0:
        raise ValueError("duration_s must be >= 0")
    rng = np.random.default_rng(seed)
    duration_ns = duration_s * _NS_PER_S

    n_pairs = rng.poisson(cfg.pair_rate_hz * duration_s) if duration_s > 0 else 0
    t_pairs = np.sort(rng.uniform(0.0, duration_ns, n_pairs))

    cand1 = rng.random(n_pairs) < cfg.det1.eta
    cand2 = rng.random(n_pairs) < cfg.idler_path_loss * cfg.det2.eta
    dark1 = _poisson_stream(rng, cfg.det1.dark_rate_hz, duration_s)
    dark2 = _poisson_stream(rng, cfg.det2.dark_rate_hz, duration_s)
    backgr = _poisson_stream(rng, cfg.background_rate_hz, duration_s)

    t_cand1, tags1 = _merge_streams((t_pairs[cand1], 0), (dark1, 1))
    accepted1 = _dead_time_filter(t_cand1, cfg.det1.dead_time_ns)
    t_det1 = t_cand1[accepted1]
    tags_det1 = tags1[accepted1]

    t_cand2, tags2 = _merge_streams((t_pairs[cand2], 0), (dark2, 1), (backgr, 2))
    accepted2 = _dead_time_filter(t_cand2, cfg.det2.dead_time_ns)
    t_det2 = t_cand2[accepted2]
    tags_det2 = tags2[accepted2]

    coincidences = tac_coincidences(
        t_det1,
        t_det2 + cfg.tac.stop_delay_ns,
        cfg.tac.window_ns,
        cfg.tac.stop_delay_ns,
    )

    records = None
    if keep_records:
        records = tuple(
            _records_for("trigger", t_det1, tags_det1)
            + _records_for("analyzer", t_det2, tags_det2)
        )
    return SimResult(
        duration_s=duration_s,
        singles_trigger=int(len(t_det1)),
        singles_analyzer=int(len(t_det2)),
        coincidences=int(coincidences),
        config=cfg,
        seed=seed,
        records=records,
    )


# ---------------------------------------------------------------------------
# scans


def scan_theta(
    cfg: BenchConfig, angles_deg, duration_s: float, seed: int
) -> list[ThetaScanPoint]:
    """One conditional run per analyzer angle, with deterministic subseeds.

    Output row order matches the input angle order; rows feed
    :func:`biphoton.calibrate.fit_theta_curve` directly.
    """
    points = []
    for i, angle in enumerate(angles_deg):
        cfg_i = replace(
            cfg, analyzer=Projector(float(angle), cfg.analyzer.transmittance)
        )
        res = run_conditional_experiment(cfg_i, duration_s, subseed(seed, i))
        points.append(
            ThetaScanPoint(float(angle), res.singles_analyzer, res.coincidences)
        )
    return points


def scan_delay(
    cfg: BenchConfig, delays_ns, duration_s: float, seed: int
) -> list[DelayScanPoint]:
    """H- and V-analyzer singles and coincidences versus electronic delay.

    Each delay value runs the experiment twice (analyzer at 0 deg and at
    90 deg), matching a physical polarizer that sits at one angle per run.
    """
    points = []
    for i, delay in enumerate(delays_ns):
        cfg_d = replace(cfg, electronic_delay_ns=float(delay))
        res_h = run_conditional_experiment(
            replace(cfg_d, analyzer=Projector(0.0, cfg.analyzer.transmittance)),
            duration_s,
            subseed(seed, i, 0),
        )
        res_v = run_conditional_experiment(
            replace(cfg_d, analyzer=Projector(90.0, cfg.analyzer.transmittance)),
            duration_s,
            subseed(seed, i, 1),
        )
        points.append(
            DelayScanPoint(
                float(delay),
                res_h.singles_analyzer,
                res_v.singles_analyzer,
                res_h.coincidences,
                res_v.coincidences,
            )
        )
    return points


def write_event_csv(records, path) -> None:
    """Dump detection records as CSV: header ``channel,time_ns,origin``."""
    with open(path, "w", newline="\n") as fh:
        fh.write("channel,time_ns,origin\n")
        for r in records:
            fh.write(f"{r.channel},{r.time_ns!r},{r.origin}\n")
