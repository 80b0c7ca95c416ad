"""Single-link queue simulation over one observation window.

Two backends produce the loss fraction ``Phi`` of a window:

``diffusion``
    Euler-Maruyama integration of ``dx = V dt + sqrt(2 D) dW`` reflected at
    the empty and full buffer; ``Phi`` is the fraction of time spent in the
    boundary layer ``[c - 1, c]``.
``event``
    Packet-level queue with renewal arrivals and deterministic service;
    ``Phi`` is the fraction of arrivals that find the buffer in the boundary
    layer (and are dropped).

Both start from the stationary state, so windows are i.i.d.  Far from the
buffer walls both kernels take long exact-in-law leaps whose excursion
cannot reach a wall except with probability below ``1e-14``.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import math

import numba
import numpy as np

from .errors import ParameterError
from .model import LinkParams, WindowSpec
from .rng import derive_stream, kernel_seed

BACKENDS = ("diffusion", "event")
_MARGIN = 8.0  # leap excursions are kept within 1/_MARGIN of the gap in sd


@dataclass(frozen=True)
class LossSample:
    """Loss of one window.

    ``lam`` is the cumulative loss ``Phi * T / tau_i`` (in arrivals).
    """

    phi: float
    lam: float
    window: float

    @property
    def lossless(self):
        return self.phi == 0.0


# ----------------------------------------------------------------- stationary state


def truncated_exponential(rate, c, u):
    """Inverse CDF of the density ``~ exp(-rate * y)`` on ``[0, c]`` (``rate >= 0``)."""
    u = np.asarray(u, dtype=float)
    rate = np.asarray(rate, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = -np.log1p(u * np.expm1(-rate * c)) / rate
    return np.where(rate * c < 1e-12, u * c, y)


def stationary_level(eta, c, u):
    """Stationary queue length (density ``~ exp(eta x)`` on ``[0, c]``) from uniforms ``u``."""
    eta = np.asarray(eta, dtype=float)
    up = c - truncated_exponential(np.maximum(eta, 0.0), c, u)
    down = truncated_exponential(np.maximum(-eta, 0.0), c, u)
    return np.where(eta >= 0, up, down)


# ----------------------------------------------------------------------- kernels


@numba.njit(cache=True)
def _diffusion_kernel(c, eta, tau, T, dt, x, seed):
    np.random.seed(seed)
    top = c - 1.0
    sd1 = math.sqrt(2.0 * dt / tau)
    t = 0.0
    occ = 0.0
    while t < T:
        gap = top - x
        if gap > 4.0 * _MARGIN * sd1:
            # Leap: the step's spread and drift each stay below half the gap.
            h = 0.5 * tau * (gap / (2.0 * _MARGIN)) ** 2
            if eta != 0.0:
                h = min(h, 0.5 * tau * gap / abs(eta))
            h = min(h, T - t)
        else:
            h = min(dt, T - t)
        x += eta * h / tau + math.sqrt(2.0 * h / tau) * np.random.standard_normal()
        if x < 0.0:
            x = -x
        if x > c:
            x = 2.0 * c - x
        if x >= top:
            occ += h
        t += h
    return occ / T


@numba.njit(cache=True)
def _event_kernel(c, eta, tau, T, shape, w, seed):
    np.random.seed(seed)
    r = (1.0 - eta) / tau
    scale = tau / shape
    top = c - 1.0
    # Equilibrium residual time to the first arrival (length-biased interval).
    t = np.random.random() * np.random.gamma(shape + 1.0, scale)
    w = max(w - r * t, 0.0)
    drops = 0
    k = 0
    sd = math.sqrt(1.0 / shape) * (1.0 - eta)
    while t <= T:
        gap = min(top - w, w)
        n = 0
        if gap > 4.0 * _MARGIN * sd:
            n = int(0.5 * (gap / (2.0 * _MARGIN * sd)) ** 2)
            if eta != 0.0:
                n = min(n, int(0.5 * gap / abs(eta)))
            n = min(n, int(0.5 * (T - t) / tau))
        if n > 1:
            # n arrivals in one go; each adds a packet, service drains r per unit time.
            g = np.random.gamma(n * shape, scale)
            if t + g <= T:
                w += n - r * g
                k += n
                t += g
                continue
        if w >= top:
            drops += 1
        else:
            w += 1.0
        k += 1
        g = np.random.gamma(shape, scale)
        w = max(w - r * g, 0.0)
        t += g
    return drops, k


@numba.njit(cache=True)
def _diffusion_batch(c, eta, tau, T, dt, x0, seeds):
    out = np.empty(x0.size)
    for i in range(x0.size):
        out[i] = _diffusion_kernel(c, eta, tau, T, dt, x0[i], seeds[i])
    return out


@numba.njit(cache=True)
def _event_batch(c, eta, tau, T, shape, w0, seeds):
    out = np.empty(w0.size)
    for i in range(w0.size):
        d, k = _event_kernel(c, eta, tau, T, shape, w0[i], seeds[i])
        out[i] = d / k if k > 0 else 0.0
    return out


# ------------------------------------------------------------------ single windows


def _check(link, window):
    if not isinstance(link, LinkParams):
        raise ParameterError("link", "expected LinkParams")
    if window.T < 10 * link.tau:
        raise ParameterError("T", f"window {window.T} must be at least 10 tau_i = {10 * link.tau}")


def _window_inputs(link, rng):
    u = rng.random()
    x0 = float(stationary_level(link.eta, link.c, u))
    return x0, kernel_seed(rng)


def run_diffusion_window(link, window, rng, dt=None):
    """Simulate one window of the reflected drift-diffusion.

    Parameters
    ----------
    link : LinkParams
    window : WindowSpec
    rng : numpy.random.Generator
    dt : float, optional
        Time step, at most ``tau_i / 10`` (default ``tau_i / 20``).
    """
    _check(link, window)
    dt = link.tau / 20 if dt is None else float(dt)
    if not 0 < dt <= link.tau / 10 * (1 + 1e-12):
        raise ParameterError("dt", f"step {dt} must lie in (0, tau_i/10 = {link.tau / 10}]")
    x0, seed = _window_inputs(link, rng)
    phi = _diffusion_kernel(float(link.c), link.eta, link.tau, window.T, dt, x0, seed)
    return LossSample(phi=phi, lam=phi * window.T / link.tau, window=window.T)


def run_event_window(link, window, rng, arrivals="gamma"):
    """Simulate one window of the packet-level queue.

    ``arrivals="gamma"`` draws inter-arrival times from a Gamma law with
    shape 1/2, whose squared coefficient of variation 2 matches the
    diffusion coefficient ``1 / tau_i`` of the continuum model;
    ``"exponential"`` gives the Poisson queue (half the noise).
    """
    _check(link, window)
    shape = _arrival_shape(arrivals)
    w0, seed = _window_inputs(link, rng)
    drops, k = _event_kernel(float(link.c), link.eta, link.tau, window.T, shape, w0, seed)
    phi = drops / k if k else 0.0
    return LossSample(phi=phi, lam=phi * window.T / link.tau, window=window.T)


def _arrival_shape(arrivals):
    if arrivals == "gamma":
        return 0.5
    if arrivals == "exponential":
        return 1.0
    raise ParameterError("arrivals", f"unknown arrival law {arrivals!r}")


# ---------------------------------------------------------------------- ensembles


def _chunk(args):
    backend, link, T, lo, hi, seed, dt, shape = args
    x0 = np.empty(hi - lo)
    seeds = np.empty(hi - lo, dtype=np.uint64)
    for j, k in enumerate(range(lo, hi)):
        rng = derive_stream(seed, k)
        x0[j], seeds[j] = _window_inputs(link, rng)
    if backend == "diffusion":
        return _diffusion_batch(float(link.c), link.eta, link.tau, T, dt, x0, seeds)
    return _event_batch(float(link.c), link.eta, link.tau, T, shape, x0, seeds)


def simulate_phi(link, window, n, backend="diffusion", seed=0, workers=1, dt=None,
                 arrivals="gamma", chunk=4096):
    """Loss fractions of ``n`` independent windows as an array.

    Window ``k`` uses the stream derived from ``(seed, k)``, so the result
    does not depend on ``workers`` or ``chunk``.
    """
    if n < 1:
        raise ParameterError("n", f"need at least one window, got {n}")
    if backend not in BACKENDS:
        raise ParameterError("backend", f"unknown backend {backend!r}")
    _check(link, window)
    dt = link.tau / 20 if dt is None else float(dt)
    if backend == "diffusion" and not 0 < dt <= link.tau / 10 * (1 + 1e-12):
        raise ParameterError("dt", f"step {dt} must lie in (0, tau_i/10 = {link.tau / 10}]")
    shape = _arrival_shape(arrivals)
    tasks = [(backend, link, window.T, lo, min(lo + chunk, n), seed, dt, shape) for lo in range(0, n, chunk)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, tasks))
    else:
        parts = [_chunk(t) for t in tasks]
    return np.concatenate(parts)


def sample_ensemble(link, window, n, backend="diffusion", seed=0, workers=1, **kw):
    """``n`` independent windows as :class:`LossSample` records."""
    phi = simulate_phi(link, window, n, backend, seed, workers, **kw)
    k = window.T / link.tau
    return [LossSample(phi=float(f), lam=float(f * k), window=window.T) for f in phi]
