"""Link parameters and the quenched disorder of a network at congestion onset.

A link is a memory buffer of ``c`` packets fed at mean rate ``1/tau`` and
drained at rate ``r``.  Its imbalance ``eta = 1 - tau * r`` is positive when
demand exceeds capacity.  Across the network the relative load ``ell`` is
power-law distributed and the imbalances are spread symmetrically around
zero with width ``gamma``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ParameterError
from .rng import as_stream


@dataclass(frozen=True)
class LinkParams:
    """Quenched parameters of one link.

    Parameters
    ----------
    ell : float
        Relative load (betweenness over mean betweenness).
    eta : float
        Imbalance ``1 - tau * r``.
    tau : float
        Mean packet inter-arrival time.
    c : int
        Buffer size in packets.
    """

    ell: float
    eta: float
    tau: float
    c: int

    def __post_init__(self):
        if not self.tau > 0:
            raise ParameterError("tau", f"must be positive, got {self.tau}")
        if self.c < 2:
            raise ParameterError("c", f"buffer needs at least 2 packets, got {self.c}")
        if not self.ell > 0:
            raise ParameterError("ell", f"must be positive, got {self.ell}")
        if not abs(self.eta) < 1:
            raise ParameterError("eta", f"must satisfy |eta| < 1, got {self.eta}")

    @property
    def D(self):
        """Diffusion coefficient of the queue length."""
        return 1.0 / self.tau

    @property
    def V(self):
        """Drift of the queue length towards the full buffer."""
        return self.eta / self.tau

    @property
    def r(self):
        """Departure rate (capacity)."""
        return (1.0 - self.eta) / self.tau


@dataclass(frozen=True)
class LoadModel:
    """Truncated power law ``P(ell) ~ ell**(-2 - delta)`` on ``[ell_min, ell_max)``."""

    delta: float
    ell_min: float = 1.0
    ell_max: float | None = None

    def __post_init__(self):
        if not self.delta > -1:
            raise ParameterError("delta", f"must exceed -1, got {self.delta}")
        if not self.ell_min > 0:
            raise ParameterError("ell_min", f"must be positive, got {self.ell_min}")
        if self.ell_max is not None and not self.ell_max > self.ell_min:
            raise ParameterError("ell_max", f"must exceed ell_min={self.ell_min}, got {self.ell_max}")

    @property
    def alpha(self):
        """Exponent of the complementary CDF, ``1 + delta``."""
        return 1.0 + self.delta

    def mean(self):
        """Exact mean load, ``inf`` when it diverges."""
        a, lo, hi = self.alpha, self.ell_min, self.ell_max
        if hi is None:
            return a * lo / (a - 1) if a > 1 else math.inf
        q = (hi / lo) ** (-a)
        if a == 1:
            return lo * math.log(hi / lo) / (1 - q)
        return a * lo / (a - 1) * (1 - (hi / lo) ** (1 - a)) / (1 - q)


@dataclass(frozen=True)
class CriticalitySpread:
    """Symmetric distribution of link imbalances with width ``gamma``."""

    gamma: float
    shape: str = "uniform"

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ParameterError("gamma", f"must lie in [0, 1), got {self.gamma}")
        if self.shape not in ("uniform", "gaussian"):
            raise ParameterError("shape", f"unknown spread shape {self.shape!r}")

    def pdf(self, eta):
        eta = np.asarray(eta, dtype=float)
        g = self.gamma
        if self.shape == "uniform":
            return np.where(np.abs(eta) <= g, 0.5 / g, 0.0)
        return np.exp(-0.5 * (eta / g) ** 2) / (g * math.sqrt(2 * math.pi))

    def positive_mean(self):
        """``<eta * theta(eta)>``, the mean loss of a macroscopic link."""
        if self.shape == "uniform":
            return self.gamma / 4
        return self.gamma / math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class BaseDesign:
    """Buffer size and inter-arrival time of a link with unit relative load."""

    c: float
    tau: float = 1.0

    def __post_init__(self):
        if not self.c >= 2:
            raise ParameterError("c", f"base buffer must be at least 2, got {self.c}")
        if not self.tau > 0:
            raise ParameterError("tau", f"must be positive, got {self.tau}")


@dataclass(frozen=True)
class WindowSpec:
    """Observation window ``T`` measured against the base time ``tau``."""

    T: float
    tau: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ParameterError("tau", f"must be positive, got {self.tau}")
        if not self.T >= self.tau:
            raise ParameterError("T", f"window must be at least tau={self.tau}, got {self.T}")

    @classmethod
    def from_phi0(cls, phi0, tau=1.0):
        return cls(T=tau / phi0**2, tau=tau)

    @property
    def phi0(self):
        return math.sqrt(self.tau / self.T)


@dataclass(frozen=True)
class PathSpec:
    """An ``a``-link path observed through one window."""

    links: tuple
    window: WindowSpec

    def __post_init__(self):
        if len(self.links) < 1:
            raise ParameterError("a", "a path needs at least one link")

    @property
    def a(self):
        return len(self.links)

    @property
    def phi0(self):
        return self.window.phi0


def load_quantile(model, u):
    """Map survival variates ``u`` in (0, 1] to loads (inverse CDF)."""
    u = np.asarray(u, dtype=float)
    a = model.alpha
    if model.ell_max is None:
        return model.ell_min * u ** (-1.0 / a)
    q = (model.ell_max / model.ell_min) ** (-a)
    return model.ell_min * (q + u * (1.0 - q)) ** (-1.0 / a)


def sample_load(model, rng, size=None):
    """Draw relative loads from the truncated power law."""
    rng = as_stream(rng)
    u = 1.0 - rng.random(size)
    out = load_quantile(model, u)
    return float(out) if size is None else out


def sample_eta(spread, rng, size=None):
    """Draw link imbalances from the criticality spread."""
    rng = as_stream(rng)
    if spread.gamma == 0:
        return 0.0 if size is None else np.zeros(size)
    if spread.shape == "uniform":
        return rng.uniform(-spread.gamma, spread.gamma, size)
    # Imbalance must stay inside (-1, 1); clip the far Gaussian tail.
    eta = rng.normal(0.0, spread.gamma, size)
    return np.clip(eta, -0.999, 0.999) if size is not None else float(np.clip(eta, -0.999, 0.999))


def realize_link(base, ell, eta):
    """Scale the base design to relative load ``ell`` with imbalance ``eta``.

    Buffer size grows and inter-arrival time shrinks in proportion to the
    load, so every link of a perfectly designed network sits at the same
    imbalance.
    """
    c = int(round(base.c * ell))
    if c < 2:
        raise ParameterError("c", f"scaled buffer {base.c}*{ell} rounds to {c} < 2")
    return LinkParams(ell=float(ell), eta=float(eta), tau=base.tau / ell, c=c)


def sample_path(a, model, spread, base, rng, window=None):
    """Independent links of an ``a``-link path."""
    if a < 1:
        raise ParameterError("a", f"must be at least 1, got {a}")
    rng = as_stream(rng)
    ells = sample_load(model, rng, a)
    etas = sample_eta(spread, rng, a)
    links = tuple(realize_link(base, l, e) for l, e in zip(ells, etas))
    return PathSpec(links=links, window=window or WindowSpec(T=base.tau / 1e-4, tau=base.tau))


@dataclass
class Disorder:
    """Column-wise quenched disorder for ``n`` paths of ``a`` links each."""

    ell: np.ndarray
    eta: np.ndarray
    c: np.ndarray = field(repr=False)
    tau: np.ndarray = field(repr=False)


def sample_disorder(n, a, model, spread, base, rng):
    """Vectorized counterpart of :func:`sample_path` for ensembles.

    Returns arrays of shape ``(n, a)``.  Loads come first, then imbalances,
    matching the draw order of :func:`sample_path` row by row only in
    distribution (not stream position).
    """
    rng = as_stream(rng)
    ell = sample_load(model, rng, (n, a))
    eta = sample_eta(spread, rng, (n, a))
    c = np.rint(base.c * ell)
    if np.any(c < 2):
        raise ParameterError("c", "scaled buffer rounds below 2 packets")
    return Disorder(ell=ell, eta=eta, c=c, tau=base.tau / ell)
