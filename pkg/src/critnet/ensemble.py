"""Path losses over quenched disorder, and their statistics.

A path of ``a`` links loses ``Phi = sum_i ell_i Phi_i``.  Each Monte Carlo
sample draws fresh loads and imbalances for its links, then one window of
noise per link.  Besides the simulation backends of :mod:`critnet.queue`
an ``analytic`` backend samples each link's loss exactly from the
reflected-diffusion law: the overflow of a window is ``(M - Y)^+`` with
``M`` the running maximum of the free Brownian motion and ``Y`` the
stationary initial distance to the full buffer.  It neglects the empty-buffer
wall during the window, which is harmless whenever ``sqrt(T / tau_i)`` is
small against ``c_i``.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .errors import InsufficientDataError, ParameterError
from .model import PathSpec, WindowSpec, sample_disorder
from .queue import run_diffusion_window, run_event_window, truncated_exponential
from .rng import as_stream, derive_stream

PATH_BACKENDS = ("analytic", "diffusion", "event")


# -------------------------------------------------------------- link sampling


def sample_link_lam(eta, c, K, rng):
    """Exact cumulative losses ``Lam`` for links with imbalance ``eta``, buffer ``c`` and ``K = T / tau_i``.

    Arrays broadcast; one draw per element.
    """
    rng = as_stream(rng)
    eta, c, K = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (eta, c, K)))
    shape = eta.shape
    x = eta * K + np.sqrt(2.0 * K) * rng.standard_normal(shape)
    q = -4.0 * K * np.log1p(-rng.random(shape))  # -2 sigma^2 t log U for U in (0, 1]
    root = np.sqrt(x * x + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        # Bridge maximum, written without cancellation for x < 0.
        m = np.where(x >= 0, 0.5 * (x + root), 0.5 * q / (root - x))
    m = np.where(q == 0, np.maximum(x, 0.0), m)
    u = rng.random(shape)
    y_up = truncated_exponential(np.maximum(eta, 0.0), c, u)
    y_down = c - truncated_exponential(np.maximum(-eta, 0.0), c, u)
    y = np.where(eta >= 0, y_up, y_down)
    return np.minimum(np.maximum(m - y, 0.0), K)


def simulate_path_loss(path, backend="analytic", rng=None, link_loss=None, dt=None):
    """Loss ``sum_i ell_i Phi_i`` of one window along ``path``.

    ``link_loss(link, window, rng) -> Phi_i`` overrides the backend, which
    lets callers inject scripted link results.
    """
    if not isinstance(path, PathSpec):
        raise ParameterError("path", "expected PathSpec")
    rng = as_stream(rng)
    if link_loss is None:
        if backend not in PATH_BACKENDS:
            raise ParameterError("backend", f"unknown backend {backend!r}")
        link_loss = _BACKEND_FN[backend] if backend != "diffusion" else (
            lambda l, w, g: run_diffusion_window(l, w, g, dt=dt).phi)
    total = 0.0
    for link in path.links:
        total += link.ell * float(link_loss(link, path.window, rng))
    return total


def _analytic_link(link, window, rng):
    K = window.T / link.tau
    return float(sample_link_lam(link.eta, link.c, K, rng)) / K


_BACKEND_FN = {
    "analytic": _analytic_link,
    "event": lambda l, w, g: run_event_window(l, w, g).phi,
}


def _ensemble_chunk(args):
    lo, hi, a, model, spread, base, T, seed = args
    rng = derive_stream(seed, lo)
    d = sample_disorder(hi - lo, a, model, spread, base, rng)
    K = T / d.tau
    lam = sample_link_lam(d.eta, d.c, K, rng)
    # ell_i * Phi_i = ell_i * Lam_i * tau_i / T = Lam_i * tau / T
    return lam.sum(axis=1) * base.tau / T


def simulate_path_ensemble(n, a, model, spread, base, window, seed=0, workers=1, chunk=1 << 16):
    """Loss fractions of ``n`` paths, each with freshly drawn disorder (analytic backend).

    Chunk ``k`` uses the stream derived from ``(seed, k * chunk)``; the
    output depends on ``chunk`` but never on ``workers``.
    """
    if n < 1:
        raise ParameterError("n", f"need at least one path, got {n}")
    if a < 1:
        raise ParameterError("a", f"must be at least 1, got {a}")
    if not isinstance(window, WindowSpec):
        window = WindowSpec(T=float(window), tau=base.tau)
    tasks = [(lo, min(lo + chunk, n), a, model, spread, base, window.T, seed) for lo in range(0, n, chunk)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_ensemble_chunk, tasks))
    else:
        parts = [_ensemble_chunk(t) for t in tasks]
    return np.concatenate(parts)


def simulate_fixed_path(path, n, seed=0):
    """``n`` windows of one frozen path (noise only), analytic backend."""
    rng = derive_stream(seed, 0)
    eta = np.array([l.eta for l in path.links])
    c = np.array([l.c for l in path.links], dtype=float)
    K = path.window.T / np.array([l.tau for l in path.links])
    ell = np.array([l.ell for l in path.links])
    lam = sample_link_lam(np.broadcast_to(eta, (n, eta.size)), c, K, rng)
    return (lam / K * ell).sum(axis=1)


# --------------------------------------------------------------------- PDF


@dataclass
class PdfEstimate:
    """Atom at zero plus a log-binned density of the positive losses."""

    atom_zero: float
    edges: np.ndarray
    density: np.ndarray
    counts: np.ndarray
    n_samples: int
    phi_range: tuple

    @property
    def centers(self):
        return np.sqrt(self.edges[:-1] * self.edges[1:])

    def total_mass(self):
        return self.atom_zero + float(np.sum(self.density * np.diff(self.edges)))


def estimate_pdf(samples, per_decade=12, min_samples=1000):
    """Split ``samples`` into the zero atom and a log-binned density.

    Bin edges sit on the fixed grid ``10**(k / per_decade)`` so estimates
    from different runs share bins.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < min_samples:
        raise InsufficientDataError(f"need at least {min_samples} samples, got {x.size}")
    if np.any(x < 0):
        raise ParameterError("samples", "losses must be non-negative")
    pos = x[x > 0]
    atom = 1.0 - pos.size / x.size
    if pos.size == 0:
        return PdfEstimate(atom, np.empty(0), np.empty(0), np.empty(0, dtype=int), x.size, (0.0, 0.0))
    lo = math.floor(math.log10(pos.min()) * per_decade)
    hi = math.ceil(math.log10(pos.max()) * per_decade)
    if hi == lo:
        hi += 1
    edges = 10.0 ** (np.arange(lo, hi + 1) / per_decade)
    counts, _ = np.histogram(pos, edges)
    density = counts / (x.size * np.diff(edges))
    return PdfEstimate(atom, edges, density, counts, x.size, (float(pos.min()), float(pos.max())))


# ------------------------------------------------------------------ moments


@dataclass
class MomentReport:
    """Raw moments (zeros included) with batch standard errors."""

    mean: float
    second: float
    third: float
    ratio2: float
    ratios: dict = field(default_factory=dict)
    stderr: dict = field(default_factory=dict)

    def ratioN(self, n):
        return self.ratios[n]


def moments(samples, orders=(1, 2, 3), batches=20, min_samples=1000):
    """Moments ``<Phi^n>``, ratios ``<Phi^n> / <Phi>^n`` and ``ratio2 = sqrt(<Phi^2>) / <Phi>``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < min_samples:
        raise InsufficientDataError(f"need at least {min_samples} samples, got {x.size}")
    orders = sorted(set(orders) | {1, 2, 3})
    m = {n: float(np.mean(x**n)) for n in orders}
    se = {}
    b = np.array_split(x, batches)
    for n in orders:
        bm = np.array([np.mean(v**n) for v in b])
        se[n] = float(bm.std(ddof=1) / math.sqrt(batches))
    mean = m[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = {n: m[n] / mean**n if mean > 0 else math.nan for n in orders}
    ratio2 = math.sqrt(m[2]) / mean if mean > 0 else math.nan
    return MomentReport(mean, m[2], m[3], ratio2, ratios, se)


# --------------------------------------------------------------------- tails


@dataclass(frozen=True)
class TailFit:
    slope: float
    stderr: float
    n_bins: int


def fit_tail_exponent(pdf, window, min_bins=5, min_count=20):
    """Least-squares slope of ``log density`` against ``log Phi`` over ``window``.

    Only bins lying wholly inside the window with at least ``min_count``
    samples take part; each is weighted by its count (the inverse variance
    of its log-density).
    """
    lo, hi = window
    if pdf.edges.size == 0:
        raise InsufficientDataError("no positive samples to fit")
    inside = (pdf.edges[:-1] >= lo * (1 - 1e-12)) & (pdf.edges[1:] <= hi * (1 + 1e-12)) & (pdf.counts >= min_count)
    k = int(inside.sum())
    if k < min_bins:
        raise InsufficientDataError(f"{k} usable bins in [{lo:.3g}, {hi:.3g}], need {min_bins}")
    xs = np.log(pdf.centers[inside])
    ys = np.log(pdf.density[inside])
    w = pdf.counts[inside].astype(float)
    coef, cov = np.polyfit(xs, ys, 1, w=np.sqrt(w), cov="unscaled")
    # Poisson weights fix the scale; inflate by the reduced chi^2 when it exceeds one.
    resid = ys - np.polyval(coef, xs)
    chi2 = float(np.sum(w * resid**2) / max(k - 2, 1))
    return TailFit(float(coef[0]), float(math.sqrt(cov[0, 0] * max(chi2, 1.0))), k)


# ------------------------------------------------------------- multi-loss


@dataclass(frozen=True)
class MultiLoss:
    """``<Phi^n>`` and ``<Phi^n> / <Phi>^n`` with bootstrap confidence intervals."""

    n: int
    moment: float
    moment_ci: tuple
    ratio: float
    ratio_ci: tuple
    unstable: bool


def multi_loss_prob(samples, n, n_boot=200, seed=0, level=0.95, min_samples=10_000):
    """Probability weight of ``n``-tuples of lost packets, ``<Phi^n>``, against independent losses."""
    if n < 2:
        raise ParameterError("n", f"must be at least 2, got {n}")
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < min_samples:
        raise InsufficientDataError(f"need at least {min_samples} samples, got {x.size}")
    mom = float(np.mean(x**n))
    mean = float(np.mean(x))
    ratio = mom / mean**n if mean > 0 else math.nan
    rng = derive_stream(seed, n)
    bm = np.empty(n_boot)
    br = np.empty(n_boot)
    for b in range(n_boot):
        v = x[rng.integers(0, x.size, x.size)]
        m1 = v.mean()
        bm[b] = np.mean(v**n)
        br[b] = bm[b] / m1**n if m1 > 0 else np.nan
    q = [(1 - level) / 2, (1 + level) / 2]
    mci = tuple(float(v) for v in np.quantile(bm, q))
    rci = tuple(float(v) for v in np.nanquantile(br, q)) if np.any(np.isfinite(br)) else (math.nan, math.nan)
    unstable = bool(rci[0] > 0 and rci[1] / rci[0] > 10.0)
    if unstable:
        warnings.warn(f"bootstrap CI of <Phi^{n}>/<Phi>^{n} spans more than a decade; the tail dominates", RuntimeWarning)
    return MultiLoss(n, mom, mci, ratio, rci, unstable)
