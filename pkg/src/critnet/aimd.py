"""Idealized AIMD feedback driven by path losses.

Each cycle of length ``t0`` sends ``W`` packets, each lost independently with
the cycle's loss fraction.  A cycle with at least one loss halves the window
(floor, never below one packet); a clean cycle adds one packet up to
``w_max``.
"""
import csv
from dataclasses import dataclass, field
import io
import math

import numpy as np

from .analytics import Regime, classify
from .ensemble import multi_loss_prob
from .errors import ParameterError
from .rng import derive_stream


@dataclass(frozen=True)
class AimdConfig:
    t0: float = 0.25
    w_init: int = 1
    w_max: int = 100
    additive_step: int = 1
    md_factor: float = 0.5
    n_cycles: int = 1000

    def __post_init__(self):
        if not self.t0 > 0:
            raise ParameterError("t0", f"must be positive, got {self.t0}")
        if not 0 < self.md_factor < 1:
            raise ParameterError("md_factor", f"must lie in (0, 1), got {self.md_factor}")
        if self.w_max < 1:
            raise ParameterError("w_max", f"must be at least 1, got {self.w_max}")
        if not 1 <= self.w_init <= self.w_max:
            raise ParameterError("w_init", f"must lie in [1, w_max={self.w_max}], got {self.w_init}")
        if self.additive_step < 1:
            raise ParameterError("additive_step", f"must be at least 1, got {self.additive_step}")
        if self.n_cycles < 1:
            raise ParameterError("n_cycles", f"must be at least 1, got {self.n_cycles}")


@dataclass
class AimdTrace:
    """Per-cycle window (entering the cycle), packets lost and send rate ``W / t0``."""

    config: AimdConfig
    window: np.ndarray
    lost: np.ndarray
    rate: np.ndarray = field(init=False)

    def __post_init__(self):
        self.rate = self.window / self.config.t0

    @property
    def loss_cycles(self):
        return np.flatnonzero(self.lost > 0)

    @property
    def min_window(self):
        return int(self.window.min())

    def recovery_times(self):
        """Seconds from the end of each lossy burst until ``W`` is back at ``w_max``.

        Bursts not recovered within the trace are omitted.
        """
        w, cfg = self.window, self.config
        out = []
        lossy = self.lost > 0
        k = 0
        n = len(w)
        while k < n:
            if lossy[k]:
                j = k
                while j + 1 < n and lossy[j + 1]:
                    j += 1
                hit = np.flatnonzero(w[j + 1:] >= cfg.w_max)
                if hit.size:
                    out.append(float(hit[0]) * cfg.t0)
                k = j + 1
            else:
                k += 1
        return out

    def to_csv(self, path=None):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["cycle", "W", "losses", "rate"])
        for i, (w, l, r) in enumerate(zip(self.window, self.lost, self.rate)):
            wr.writerow([i, int(w), int(l), repr(float(r))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _loss_iter(loss_source, n):
    if callable(loss_source):
        for k in range(n):
            yield float(loss_source(k))
        return
    seq = list(loss_source)
    for k in range(n):
        yield float(seq[k]) if k < len(seq) else 0.0


def run_aimd(config, loss_source, seed=0):
    """Run ``config.n_cycles`` cycles.

    Parameters
    ----------
    config : AimdConfig
    loss_source : sequence of float or callable
        Loss fraction per cycle; sequences shorter than the run are padded
        with zeros, callables receive the cycle index.
    seed : int
        Root seed of the per-packet loss draws.
    """
    rng = derive_stream(seed, 0)
    n = config.n_cycles
    window = np.empty(n, dtype=np.int64)
    lost = np.empty(n, dtype=np.int64)
    w = int(config.w_init)
    for k, phi in enumerate(_loss_iter(loss_source, n)):
        if not 0 <= phi <= 1:
            raise ParameterError("loss_source", f"cycle {k} loss fraction {phi} outside [0, 1]")
        window[k] = w
        # Losses are drawn even for phi = 0 so the stream position is script-independent.
        lost[k] = rng.binomial(w, phi)
        if lost[k] > 0:
            w = max(1, int(math.floor(w * config.md_factor)))
        else:
            w = min(config.w_max, w + config.additive_step)
    return AimdTrace(config, window, lost)


@dataclass(frozen=True)
class ProtocolBand:
    """Range of criticality widths where the feedback can operate near onset."""

    gamma_min: float
    gamma_max: float
    phi0_sq_t0: float
    empty: bool
    mesoscopic: bool
    rule_of_thumb: bool

    @property
    def inverse_range(self):
        return (1.0 / self.gamma_max, 1.0 / self.gamma_min)


def protocol_band(c, a, w_max, t0, tau):
    """Operating band ``1/c < gamma < 1/(a w_max)`` and the cycle-scale ``phi0^2 = tau / t0``.

    ``mesoscopic`` reports whether some ``gamma`` in the band puts windows of
    length ``t0`` in the mesoscopic regime.  ``rule_of_thumb`` checks
    ``phi0^2(t0) >~ 1/c`` up to a factor of two: a buffer sized ``c = t0 r``
    gives ``phi0^2 c = tau r = 1 - eta``, which is close to one at onset.
    """
    for name, v in (("c", c), ("a", a), ("w_max", w_max), ("t0", t0), ("tau", tau)):
        if not v > 0:
            raise ParameterError(name, f"must be positive, got {v}")
    g_lo, g_hi = 1.0 / c, 1.0 / (a * w_max)
    empty = a * w_max >= c
    phi0_sq = tau / t0
    meso = False
    if not empty and t0 >= tau:
        for g in np.geomspace(g_lo, g_hi, 65)[1:-1]:
            if g < 1 and classify(t0, tau, g, a) is Regime.MESOSCOPIC:
                meso = True
                break
    return ProtocolBand(g_lo, g_hi, phi0_sq, empty, meso, phi0_sq * c >= 0.5)


@dataclass(frozen=True)
class Overreaction:
    n: int
    ratio: float
    ratio_ci: tuple
    regime: Regime
    predicted_top: float
    unstable: bool


def overreaction_index(samples, n, regime, c=None, delta=None, a=None, **kw):
    """``<Phi^n> / <Phi>^n`` of path losses, annotated with the regime.

    When ``c``, ``delta`` and ``a`` are given, ``predicted_top`` carries the
    asymptotic pair ratio ``c^(1 - delta) / a`` reached at the top of the
    operating band.
    """
    if n not in (2, 3):
        raise ParameterError("n", f"must be 2 or 3, got {n}")
    m = multi_loss_prob(samples, n, **kw)
    top = c ** (1 - delta) / a if None not in (c, delta, a) else math.nan
    return Overreaction(n, m.ratio, m.ratio_ci, Regime(regime), top, m.unstable)
