"""Loss statistics of a single link and the regime diagram.

In the critical regime the queue hovers near the full buffer.  The time it
spends in the top unit layer during a window ``T``, counted in arrivals
(``Lam = (T / tau_i) * Phi``), has the law ``A delta(Lam) + F_T(Lam)``.  Its
Laplace image in ``T`` is

    F_eps(Lam) = p * exp(-Lam / R_eps) / (tau * eps**2 * R_eps**2),

with ``p`` the stationary density at the full buffer and ``R_eps`` the
Laplace image of the return probability to the wall.

The same law follows from the Skorokhod representation of a diffusion
reflected at the full buffer: ``Lam = (M_T - Y)^+`` where ``M_T`` is the
running maximum of a Brownian motion (drift ``eta``, variance ``2`` per
``tau``) and ``Y`` is the initial distance to the wall with density
``p * exp(-eta * y)``.  That representation gives the closed forms used here
as independent oracles, and an exact sampler.
"""
from enum import Enum
import math

import numpy as np
from scipy import integrate, special

from .errors import ConvergenceError, ParameterError
from .laplace import talbot

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)


class Regime(str, Enum):
    MICROSCOPIC = "microscopic"
    MESOSCOPIC = "mesoscopic"
    CROSSOVER = "crossover"
    MACROSCOPIC = "macroscopic"


# ---------------------------------------------------------------- Laplace domain


def stationary_boundary_density(eta, c):
    """Stationary density of the queue at the full buffer, ``eta / (1 - exp(-eta c))``."""
    eta = np.asarray(eta, dtype=float)
    c = np.asarray(c, dtype=float)
    x = eta * c
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        p = np.where(x == 0, 1.0 / c, eta / -np.expm1(-x))
    return p[()] if p.ndim == 0 else p


def _kappa(eta, tau, eps):
    """``1 / R_eps`` in the cancellation-free branch for each sign of ``eta``."""
    s = np.sqrt(eta * eta + 4.0 * tau * eps)
    return np.where(eta >= 0, 2.0 * tau * eps / (s + eta), 0.5 * (s - eta))


def resolvent(eta, tau, eps):
    """Laplace image of the return probability, ``(sqrt(eta^2 + 4 tau eps) + eta) / (2 tau eps)``."""
    eps = np.asarray(eps)
    if np.any(np.real(eps) <= 0) and np.isrealobj(eps):
        raise ParameterError("eps", "Laplace variable must be positive")
    out = 1.0 / _kappa(eta, tau, eps)
    return out[()] if np.ndim(out) == 0 else out


def laplace_loss_density(lam, eta, tau, c, eps):
    """Laplace image ``F_eps(Lam)`` of the lossy density."""
    if np.isrealobj(eps) and np.any(np.asarray(eps) <= 0):
        raise ParameterError("eps", "Laplace variable must be positive")
    if np.any(np.asarray(lam) < 0):
        raise ParameterError("lambda", "cumulative loss must be non-negative")
    p = stationary_boundary_density(eta, c)
    k = _kappa(eta, tau, eps)
    return p * k * k * np.exp(-lam * k) / (tau * eps * eps)


def laplace_loss_mass(eta, tau, c, eps):
    """Laplace image of the lossy mass ``int F_T dLam``, i.e. ``p / (tau eps^2 R_eps)``."""
    p = stationary_boundary_density(eta, c)
    s = np.sqrt(eta * eta + 4.0 * tau * eps)
    return 2.0 * p / (eps * (s + eta))


# ------------------------------------------------------------ inversion in time


def _contour(lam, eta, tau, T, nodes):
    """Real-axis crossing and width of the Talbot contour for each ``lam``.

    The crossing follows the real saddle of ``eps*T - lam/R_eps`` while
    staying right of the singularities (origin, or the branch point
    ``-eta^2/(4 tau)`` when ``eta > 0``).  The width is the larger of the
    classical ``2M/(5T)`` and the saddle abscissa.
    """
    base = 2.0 * nodes / (5.0 * T)
    saddle = ((lam * tau / T) ** 2 - eta * eta) / (4.0 * tau)
    # Crossing left of the origin is only safe when the branch point is far
    # away on the contour's own scale (macroscopic windows, eta^2 T >> 1).
    # For eta < 0 the image has a double pole at the origin instead.
    far = eta > 0 and eta * eta / (8.0 * tau) > 4.0 * base
    floor = -eta * eta / (8.0 * tau) if far else base
    return np.maximum(base, saddle), np.maximum(saddle, floor)


def invert_laplace_pdf(lam, T, link, nodes=32, check=True):
    """Lossy density ``F_T(Lam)`` by fixed-Talbot inversion.

    Parameters
    ----------
    lam : float or array
        Cumulative loss ``Lam >= 0``.
    T : float
        Window length, at least ``10 * link.tau``.
    link : LinkParams
    nodes : int
        Contour nodes.  With ``check`` every point is recomputed with twice
        as many; points changing by more than ``1e-8`` relative are refined
        by further doubling, and ConvergenceError is raised if they still
        fail at ``8 * nodes``.
    """
    if T < 10 * link.tau:
        raise ParameterError("T", f"window must be at least 10 tau_i = {10 * link.tau}, got {T}")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr < 0):
        raise ParameterError("lambda", "cumulative loss must be non-negative")
    eta, tau, c = link.eta, link.tau, link.c
    p = stationary_boundary_density(eta, c)
    width, cross = _contour(lam_arr, eta, tau, T, nodes)

    def run(M, idx):
        theta = np.arange(1, M) * np.pi / M
        cot = 1.0 / np.tan(theta)
        sig = theta + (theta * cot - 1.0) * cot
        w, x, lm = width[idx], cross[idx], lam_arr[idx]
        s = (x - w)[None, :] + w[None, :] * (theta * (cot + 1j))[:, None]
        k = _kappa(eta, tau, s)
        # Exponents combined before exp() so tiny densities keep full relative precision.
        terms = k * k / (tau * s * s) * np.exp(T * s - lm[None, :] * k) * (1.0 + 1j * sig)[:, None]
        k0 = _kappa(eta, tau, x)
        f0 = k0 * k0 / (tau * x * x) * np.exp(T * x - lm * k0)
        return p * w / M * (0.5 * f0 + terms.real.sum(axis=0))

    idx = np.arange(lam_arr.size)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        out = run(nodes, idx)
        if check:
            # Points failing the doubling test are retried with more nodes
            # (deep tails need them); the cap bounds the cost.
            M = nodes
            while idx.size:
                ref = run(2 * M, idx)
                # Values near the underflow limit carry no usable relative digits.
                err = np.abs(out[idx] - ref) / np.maximum(np.abs(ref), 1e-250)
                bad = ~(np.isfinite(out[idx]) & np.isfinite(ref)) | (err > 1e-8)
                out[idx] = np.where(bad, out[idx], ref)
                if not bad.any():
                    break
                if M >= 8 * nodes:
                    worst = np.where(np.isfinite(err), err, np.inf).max()
                    raise ConvergenceError(
                        f"Laplace inversion not converged at {M} nodes: max relative change "
                        f"{worst:.3g} (eta={eta}, T={T}, tau={tau})"
                    )
                idx = idx[bad]
                M *= 2
                out[idx] = ref[bad]
    return out[0] if np.ndim(lam) == 0 else out


def invert_laplace_mass(T, link, nodes=32):
    """Lossy mass ``1 - A`` by inverting its own Laplace image (independent of quadrature)."""
    eta, tau, c = link.eta, link.tau, link.c
    return float(talbot(lambda s: laplace_loss_mass(eta, tau, c, s), T, nodes))


# ---------------------------------------------------------------- closed forms


def _bar(x):
    """Upper Gaussian tail."""
    return 0.5 * special.erfc(x / SQRT2)


def _phi(x):
    return np.exp(-0.5 * x * x) / SQRT2PI


def _split(lam, eta, K):
    sk = np.sqrt(2.0 * K)
    z = lam / sk
    h = eta * np.sqrt(0.5 * K)
    return sk, z, h


def _shifted_tail(z, h):
    """``exp(2 h z) * bar(z + h)`` without overflow."""
    b = z + h
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        pos = 0.5 * special.erfcx(b / SQRT2) * np.exp(-0.5 * (z - h) ** 2)
        neg = np.exp(2.0 * h * z) * _bar(b)
    return np.where(b >= 0, pos, neg)


def loss_density_exact(lam, T, link):
    """Closed form of ``F_T(Lam)`` (the inverse of the Laplace image, in dimensionless time ``K = T / tau_i``).

    ``F = p * exp(eta Lam) * [2 bar(b) - eta sqrt(2K) (phi(b) - b bar(b))]``,
    ``b = (Lam + eta K) / sqrt(2K)``; at ``eta = 0`` this is ``p erfc(Lam / (2 sqrt K))``.
    """
    K = T / link.tau
    lam = np.asarray(lam, dtype=float)
    p = stationary_boundary_density(link.eta, link.c)
    _, z, h = _split(lam, link.eta, K)
    t2 = _shifted_tail(z, h)
    out = p * (2.0 * t2 * (1.0 + h * (z + h)) - 2.0 * h * _phi(z - h))
    out = np.maximum(out, 0.0)
    return out[()] if out.ndim == 0 else out


def _j(z, h):
    """``(bar(z - h) - exp(2hz) bar(z + h)) / (2h)``, continuous through ``h = 0``."""
    z = np.asarray(z, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), z.shape) if np.ndim(h) else np.full(z.shape, float(h))
    small = np.abs(h) < 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        big = (_bar(z - h) - _shifted_tail(z, h)) / (2.0 * h)
    # Taylor expansion in h around the scaled-erfc difference.
    x = z / SQRT2
    d = h / SQRT2
    E = special.erfcx(x)
    E1 = 2 * x * E - 2 / math.sqrt(math.pi)
    E2 = 2 * E + 2 * x * E1
    E3 = 4 * E1 + 2 * x * E2
    diff = -(E1 + d * d * E3 / 6.0) / SQRT2
    taylor = 0.5 * np.exp(-0.5 * (z - h) ** 2) * diff
    return np.where(small, taylor, big)


def loss_survival_exact(lam, T, link, truncate=False):
    """Lossy mass above ``Lam``: ``int_Lam^inf F_T``.

    With ``truncate`` the initial distance to the wall is confined to the
    buffer ``[0, c]``, which turns the law into a proper probability
    distribution (relevant only when the window is long enough for the
    queue to feel the empty-buffer boundary).
    """
    K = T / link.tau
    lam = np.asarray(lam, dtype=float)
    out = _survival(lam, link.eta, K, link.c)
    if truncate:
        out = out - np.exp(-link.eta * link.c) * _survival(lam + link.c, link.eta, K, link.c)
    return out[()] if np.ndim(out) == 0 else out


def _survival(lam, eta, K, c):
    p = stationary_boundary_density(eta, c)
    sk, z, h = _split(lam, eta, K)
    return p * sk * (_j(z, h) + _phi(z - h) - (z + h) * _shifted_tail(z, h))


def loss_mass_exact(T, link, truncate=False):
    """``1 - A`` from the closed form."""
    return float(loss_survival_exact(0.0, T, link, truncate=truncate))


# --------------------------------------------------------------- derived laws


def no_loss_weight(T, link, nodes=32):
    """Probability ``A`` of a lossless window, ``1 - int_0^inf F_T dLam``.

    The integral runs over the Talbot-inverted density with adaptive
    quadrature; results outside ``[-1e-6, 1 + 1e-6]`` mean the window
    violates the small-loss premise and raise ConvergenceError.
    """
    if T < 10 * link.tau:
        raise ParameterError("T", f"window must be at least 10 tau_i = {10 * link.tau}, got {T}")
    K = T / link.tau
    scale = math.sqrt(2.0 * K) + abs(link.eta) * K
    f = lambda x: float(invert_laplace_pdf(x, T, link, nodes, check=False))
    centre = max(link.eta * K, 0.0)
    pieces = [0.0, centre, centre + 10 * scale, centre + 40 * scale]
    total = 0.0
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        if hi <= lo:
            continue
        val, _ = integrate.quad(f, lo, hi, epsabs=1e-12, epsrel=1e-10, limit=200)
        total += val
    A = 1.0 - total
    if not -1e-6 <= A <= 1 + 1e-6:
        raise ConvergenceError(
            f"no-loss weight {A:.6g} outside [0, 1]: window T={T} is outside the small-loss regime "
            f"for eta={link.eta}, c={link.c}"
        )
    return min(max(A, 0.0), 1.0)


def window_phi0(T, link):
    """``phi0 = sqrt(tau / T)`` for the base (unit-load) time ``tau = ell * tau_i``."""
    return math.sqrt(link.ell * link.tau / T)


def link_loss_pdf(phi, T, link, nodes=32):
    """Density of the loss fraction ``Phi`` of one link (lossy part).

    ``(ell / phi0^2) F_T(ell Phi / phi0^2)``, i.e. ``F_T`` evaluated at
    ``Lam = (T / tau_i) Phi`` and multiplied by the Jacobian ``T / tau_i``.
    """
    phi = np.asarray(phi, dtype=float)
    if np.any((phi < 0) | (phi > 1)):
        raise ParameterError("phi", "loss fraction must lie in [0, 1]")
    K = T / link.tau
    return K * invert_laplace_pdf(phi * K, T, link, nodes)


def eta_averaged_pdf(phi, T, link, spread, regime):
    """Lossy density of ``Phi`` averaged over the criticality spread.

    Mesoscopic windows replace the imbalance by ``gamma``; macroscopic
    windows reproduce the spread itself for ``Phi > 0`` (see
    :func:`eta_averaged_no_loss` for the atom).
    """
    regime = Regime(regime)
    phi = np.asarray(phi, dtype=float)
    if regime is Regime.MESOSCOPIC:
        from dataclasses import replace

        return link_loss_pdf(phi, T, replace(link, eta=spread.gamma))
    if regime is Regime.MACROSCOPIC:
        return np.where(phi > 0, spread.pdf(phi), 0.0)
    raise ParameterError("regime", f"no averaged form in the {regime.value} regime")


def eta_averaged_no_loss(T, link, spread, regime):
    regime = Regime(regime)
    if regime is Regime.MESOSCOPIC:
        from dataclasses import replace

        return no_loss_weight(T, replace(link, eta=spread.gamma))
    if regime is Regime.MACROSCOPIC:
        return 0.5
    raise ParameterError("regime", f"no averaged form in the {regime.value} regime")


def tail_pdf(phi, T, a, gamma, delta, tau=1.0):
    """Power-law tail ``(a gamma / phi0^2) (Phi / phi0)^(-2(1 + delta))`` of path losses.

    Valid for ``phi0 <= Phi <= phi0^2 / gamma``; the order-one prefactor is
    set to one.
    """
    phi0 = math.sqrt(tau / T)
    phi = np.asarray(phi, dtype=float)
    hi = phi0 * phi0 / gamma
    if np.any((phi < phi0 * (1 - 1e-12)) | (phi > hi * (1 + 1e-12))):
        raise ParameterError("phi", f"tail law holds only on [{phi0:.4g}, {hi:.4g}]")
    return a * gamma / phi0**2 * (phi / phi0) ** (-2.0 * (1.0 + delta))


def classify(T, tau, gamma, a):
    """Place a window on the (T / tau, 1 / gamma) regime diagram for ``a``-link paths.

    Points exactly on a boundary are reported as crossover.
    """
    if not T >= tau:
        raise ParameterError("T", f"window must be at least tau={tau}")
    if not 0 < gamma < 1:
        raise ParameterError("gamma", f"must lie in (0, 1), got {gamma}")
    if a < 1:
        raise ParameterError("a", f"must be at least 1, got {a}")
    k = T / tau
    g = 1.0 / gamma
    sk = math.sqrt(k)
    if k < g:
        return Regime.MICROSCOPIC
    if k == g:
        return Regime.CROSSOVER
    if g > a * sk:
        return Regime.MESOSCOPIC
    if g < sk:
        return Regime.MACROSCOPIC
    return Regime.CROSSOVER
