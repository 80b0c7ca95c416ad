"""Acceptance suite: twelve end-to-end checks of the model and its numerics.

Each check returns a :class:`Result` carrying the measured values next to
their targets.  ``scale`` shrinks every Monte Carlo sample count (pass/fail
verdicts are only meaningful at ``scale=1``); ``workers`` fans simulations
out without changing any number.
"""
from dataclasses import dataclass, field
import itertools
import math
import time

import numpy as np
from scipy import special, stats

from . import analytics as an
from .aimd import AimdConfig, run_aimd
from .ensemble import estimate_pdf, fit_tail_exponent, moments, simulate_path_ensemble
from .model import BaseDesign, CriticalitySpread, LinkParams, LoadModel, WindowSpec
from .queue import simulate_phi
from .rng import derive_stream, sub_seed
from .topology import (Graph, affected_paths_fraction, edge_betweenness, generate_sf_graph,
                       pair_distance_sum)


@dataclass
class Result:
    cid: int
    title: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] C{self.cid:<2d} {self.title}: {self.detail}"


def _n(base, scale, floor=1000):
    return max(int(round(base * scale)), floor)


# ------------------------------------------------------------------ criteria


def c1_oracle(seed, workers, scale):
    """Talbot inversion at zero imbalance against ``p erfc(Lam phi0 / 2)``."""
    worst = 0.0
    t = time.perf_counter()
    for c, K in itertools.product((100, 10_000), (1e3, 1e6)):
        link = LinkParams(1.0, 0.0, 1.0, c)
        phi0 = 1.0 / math.sqrt(K)
        lam = np.linspace(0.0, 20.0, 201) / phi0
        got = an.invert_laplace_pdf(lam, K, link)
        ref = an.stationary_boundary_density(0.0, c) * special.erfc(lam * phi0 / 2)
        worst = max(worst, float(np.max(np.abs(got / ref - 1))))
    dt = time.perf_counter() - t
    ok = worst <= 1e-6 and dt < 1.0
    # Wall time decides the verdict but stays out of the text so outputs are reproducible.
    return ok, f"max rel err {worst:.2e} (<= 1e-6), runtime {'under' if dt < 1.0 else 'over'} 1 s", {
        "max_rel_err": worst}


def _talbot_cdf(link, T, lam):
    """``A + int_0^Lam F_T`` with the inverted density, Gauss-Legendre per grid segment."""
    K = T / link.tau
    hi = max(float(lam.max()), 1.0) * (1 + 1e-9)
    edges = np.linspace(0.0, hi, 801)
    x, w = np.polynomial.legendre.leggauss(8)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    f = an.invert_laplace_pdf(nodes, T, link).reshape(-1, 8)
    seg = (f * w[None, :]).sum(axis=1) * half
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    A = an.no_loss_weight(T, link)
    return A + np.interp(lam, edges, cum), A, K


def _ks_atom(sample, cdf_fn):
    """KS distance between a sample and a CDF with an atom at zero."""
    s = np.sort(sample)
    x = np.unique(s)
    F = cdf_fn(x)
    n = s.size
    right = np.searchsorted(s, x, "right") / n
    left = np.searchsorted(s, x, "left") / n
    F_left = np.where(x > 0, F, 0.0)
    return float(max(np.max(np.abs(right - F)), np.max(np.abs(left - F_left))))


def c2_sim_theory(seed, workers, scale):
    """Both simulation backends against the inverted law, and against each other."""
    gamma, c, T = 1e-3, 1000, 1e4
    n = _n(1e5, scale)
    rows = {}
    ok = True
    for j, eta in enumerate((0.0, gamma, -gamma)):
        link = LinkParams(1.0, eta, 1.0, c)
        lam = {}
        for b in ("diffusion", "event"):
            lam[b] = simulate_phi(link, WindowSpec(T), n, b, sub_seed(seed, 2, j), workers) * T
        grid_max = max(lam["diffusion"].max(), lam["event"].max())
        grid = np.linspace(0.0, grid_max, 4001)
        cdf, _, _ = _talbot_cdf(link, T, grid)
        fn = lambda x: np.interp(x, grid, cdf)
        kd = _ks_atom(lam["diffusion"], fn)
        ke = _ks_atom(lam["event"], fn)
        k2 = float(stats.ks_2samp(lam["diffusion"], lam["event"]).statistic)
        rows[f"eta={eta:g}"] = {"ks_diffusion": kd, "ks_event": ke, "ks_backends": k2}
        ok &= max(kd, ke, k2) <= 0.02
    worst = max(max(r.values()) for r in rows.values())
    return ok, f"worst KS {worst:.4f} (<= 0.02) over eta in {{0, +-gamma}}, {n} windows per backend", rows


def c3_normalization(seed, workers, scale):
    """``A`` from the mass image plus the quadrature of the inverted density."""
    worst = 0.0
    grid = []
    for eta, c, T in itertools.product((-1e-3, -5e-4, 0.0, 5e-4, 1e-3), (1e3, 2e3, 5e3, 1e4, 2e4), (1e3, 1e4, 1e5)):
        link = LinkParams(1.0, eta, 1.0, int(c))
        A = 1.0 - an.invert_laplace_mass(T, link)
        integral = 1.0 - an.no_loss_weight(T, link)
        err = abs(A + integral - 1.0)
        worst = max(worst, err)
        grid.append((eta, c, T, A, err))
    ok = worst <= 1e-6
    return ok, f"max |A + int F - 1| = {worst:.2e} (<= 1e-6) on 5x5x3 grid", {"max_err": worst}


MESO = dict(a=10, gamma=1e-4, delta=0.25, c=1e4, phi0=3e-3)


def _meso_samples(seed, workers, n, phi0=MESO["phi0"], c=MESO["c"], a=MESO["a"], ell_max=None, gamma=MESO["gamma"]):
    ell_max = (MESO["phi0"] / MESO["gamma"]) ** 2 if ell_max is None else ell_max
    return simulate_path_ensemble(n, a, LoadModel(MESO["delta"], 1.0, ell_max), CriticalitySpread(gamma),
                                  BaseDesign(c), WindowSpec.from_phi0(phi0), seed=seed, workers=workers)


def c4_no_loss(seed, workers, scale):
    """Zero atom of path losses: ``(1 - gamma/phi0)^a`` (mesoscopic), ``2^-a`` (macroscopic)."""
    n = _n(1e6, scale)
    x = _meso_samples(sub_seed(seed, 4, 0), workers, n)
    A = float(np.mean(x == 0))
    pred = (1 - MESO["gamma"] / MESO["phi0"]) ** MESO["a"]
    ok = abs(A - pred) <= 0.02
    vals = {"meso_A": A, "meso_pred": pred}
    parts = [f"meso A={A:.4f} vs {pred:.4f} (+-0.02)"]
    for a in (5, 10):
        nm = _n(4e5, scale)
        y = _meso_samples(sub_seed(seed, 4, a), workers, nm, phi0=1e-7, c=1e9, a=a)
        k = int(np.sum(y == 0))
        ci = stats.binomtest(k, nm).proportion_ci(0.99)
        inside = ci.low <= 2.0**-a <= ci.high
        ok &= inside
        vals[f"macro_A_a{a}"] = k / nm
        parts.append(f"macro a={a} A={k / nm:.5f} vs {2.0**-a:.5f} 99% CI [{ci.low:.5f}, {ci.high:.5f}]")
    return ok, "; ".join(parts), vals


def c5_tail(seed, workers, scale):
    """Tail exponent ``-2(1 + delta)`` of the mesoscopic path PDF."""
    n = _n(2e6, scale)
    x = _meso_samples(sub_seed(seed, 5), workers, n)
    pdf = estimate_pdf(x)
    p0, g = MESO["phi0"], MESO["gamma"]
    fit = fit_tail_exponent(pdf, (2 * p0, 0.3 * p0**2 / g))
    target = -2 * (1 + MESO["delta"])
    ok = abs(fit.slope - target) <= 0.15
    return ok, f"slope {fit.slope:.3f} +- {fit.stderr:.3f} vs {target} (+-0.15), {fit.n_bins} bins, n={n}", {
        "slope": fit.slope, "stderr": fit.stderr}


C6 = dict(gamma=1e-6, c=1e8, phi0=np.geomspace(3e-5, 3e-4, 5))


def c6_moment_ratio(seed, workers, scale):
    """``sqrt<Phi^2>/<Phi>`` against ``phi0/(a gamma)``: slope ``1 - delta``."""
    n = _n(1e6, scale)
    a, g = MESO["a"], C6["gamma"]
    X, Y = [], []
    for j, p0 in enumerate(C6["phi0"]):
        x = _meso_samples(sub_seed(seed, 6, j), workers, n, phi0=p0, c=C6["c"], ell_max=(p0 / g) ** 2, gamma=g)
        X.append(math.log(p0 / (a * g)))
        Y.append(math.log(moments(x).ratio2))
    slope = float(np.polyfit(X, Y, 1)[0])
    target = 1 - MESO["delta"]
    ok = abs(slope - target) <= 0.1
    return ok, f"slope {slope:.3f} vs {target} (+-0.1) over {len(X)} points", {"slope": slope, "log_ratio2": Y}


def c7_mean_invariance(seed, workers, scale):
    """Mean path loss at a mesoscopic and a macroscopic window."""
    n = _n(2e6, scale)
    lm = LoadModel(MESO["delta"], 1.0, (MESO["phi0"] / MESO["gamma"]) ** 2)
    target = MESO["a"] * lm.mean() * MESO["gamma"] / 4
    res = []
    for j, p0 in enumerate((MESO["phi0"], 1e-7)):
        x = _meso_samples(sub_seed(seed, 7, j), workers, n, phi0=p0, c=1e9)
        m = moments(x)
        res.append((m.mean, m.stderr[1]))
    (m1, s1), (m2, s2) = res
    comb = math.hypot(s1, s2)
    ok = abs(m1 - m2) <= 3 * comb and abs(m1 - target) <= 3 * s1 and abs(m2 - target) <= 3 * s2
    return ok, (f"meso {m1:.5e} +- {s1:.1e}, macro {m2:.5e} +- {s2:.1e}, a<ell>gamma/4 = {target:.5e}; "
                f"difference {abs(m1 - m2) / comb:.2f} combined SE"), {"meso": m1, "macro": m2, "target": target}


def c8_gaussian(seed, workers, scale):
    """Normality and width of macroscopic path losses at ``a = 100``."""
    n = _n(1e5, scale)
    a = 100
    x = _meso_samples(sub_seed(seed, 8), workers, n, phi0=1e-7, c=1e9, a=a)
    z = (x - x.mean()) / x.std()
    ad = stats.anderson(z, "norm")
    crit = float(ad.critical_values[list(ad.significance_level).index(1.0)])
    width = float(x.std() / (x.mean() / math.sqrt(a)))
    normal = ad.statistic <= crit
    ok = normal and 0.8 <= width <= 1.2
    return ok, (f"Anderson-Darling {ad.statistic:.3g} vs 1% critical {crit:.3g} ({'normal' if normal else 'rejected'}), "
                f"skew {stats.skew(x):.2f}; width / (<Phi>/sqrt a) = {width:.2f} (target 1 +- 0.2)"), {
        "ad": float(ad.statistic), "width_ratio": width}


def c9_overreaction(seed, workers, scale):
    """Pair-loss ratio ``<Phi^2>/<Phi>^2``, mesoscopic against macroscopic windows."""
    n = _n(1e6, scale)
    r = []
    for j, p0 in enumerate((MESO["phi0"], 1e-5)):
        m = moments(_meso_samples(sub_seed(seed, 9, j), workers, n, phi0=p0))
        r.append((m.ratios[2], m.ratios[3]))
    (m2, m3), (M2, M3) = r
    factor = m2 / M2
    top = MESO["c"] ** (1 - MESO["delta"]) / MESO["a"]
    ok = factor >= 10 and m3 > M3
    return ok, (f"pairs: meso {m2:.3g} / macro {M2:.3g} = {factor:.2f}x (>= 10x); "
                f"triples: meso {m3:.3g} vs macro {M3:.3g}; top-of-band trend c^(1-delta)/a = {top:.3g}"), {
        "meso2": m2, "macro2": M2, "factor": factor, "meso3": m3, "macro3": M3}


def c10_aimd(seed, workers, scale):
    """Recovery after two consecutive lossy cycles from the full window."""
    cfg = AimdConfig(t0=0.25, w_init=100, w_max=100, n_cycles=200)
    script = [0.0] * 5 + [1.0, 1.0]
    tr = run_aimd(cfg, script, seed)
    rec = tr.recovery_times()
    ok = tr.window[5] == 100 and tr.window[6] == 50 and tr.window[7] == 25 and rec == [18.75]
    return ok, f"W: 100 -> 50 -> 25, recovery {rec[0] if rec else float('nan')} s (exact 18.75 s)", {"recovery": rec}


def brute_force_betweenness(g):
    """All shortest paths by exhaustive simple-path enumeration (small graphs only)."""
    adj = [set() for _ in range(g.n)]
    for u, v in g.edges:
        adj[u].add(int(v))
        adj[v].add(int(u))
    bc = {tuple(map(int, e)): 0.0 for e in g.edges}
    for s, t in itertools.combinations(range(g.n), 2):
        paths = []
        stack = [(s, [s])]
        while stack:
            v, p = stack.pop()
            if v == t:
                paths.append(p)
                continue
            for w in adj[v]:
                if w not in p:
                    stack.append((w, p + [w]))
        d = min(len(p) for p in paths)
        short = [p for p in paths if len(p) == d]
        for p in short:
            for a, b in zip(p, p[1:]):
                bc[(min(a, b), max(a, b))] += 1.0 / len(short)
    return np.array([bc[tuple(map(int, e))] for e in g.edges])


def small_graphs(seed, n_random=300):
    """All connected labelled graphs on 2..5 nodes plus random connected ones on 6..8 nodes."""
    out = []
    for n in range(2, 6):
        pairs = list(itertools.combinations(range(n), 2))
        for mask in range(1, 1 << len(pairs)):
            e = [p for k, p in enumerate(pairs) if mask >> k & 1]
            g = Graph.from_edges(n, e)
            if g.is_connected():
                out.append(g)
    rng = derive_stream(seed, 11)
    while n_random:
        n = int(rng.integers(6, 9))
        pairs = list(itertools.combinations(range(n), 2))
        keep = rng.random(len(pairs)) < rng.uniform(0.25, 0.8)
        g = Graph.from_edges(n, [p for p, k in zip(pairs, keep) if k])
        if g.is_connected():
            out.append(g)
            n_random -= 1
    return out


def c11_topology(seed, workers, scale):
    """Exact betweenness, the sum rule and the congested-edge reach on a scale-free graph."""
    graphs = small_graphs(sub_seed(seed, 11))
    exact = all(np.allclose(edge_betweenness(g), brute_force_betweenness(g), rtol=0, atol=1e-12) for g in graphs)
    rule = all(math.isclose(edge_betweenness(g).sum(), pair_distance_sum(g), rel_tol=1e-12) for g in graphs)
    n = max(int(1e4 * scale), 500)
    G = generate_sf_graph(n, 2, sub_seed(seed, 11, 1))
    B = edge_betweenness(G)
    rule &= math.isclose(B.sum(), pair_distance_sum(G), rel_tol=1e-12)
    top = affected_paths_fraction(G, int(np.argmax(B)))
    med = affected_paths_fraction(G, int(np.argsort(B, kind="stable")[len(B) // 2]))
    ratio = top / med
    ok = exact and rule and ratio >= 5
    return ok, (f"brute force match on {len(graphs)} graphs: {exact}; sum rule: {rule}; "
                f"n={n}: top/median affected fraction {top:.4f}/{med:.5f} = {ratio:.1f}x (>= 5x)"), {
        "graphs": len(graphs), "ratio": ratio}


CRITERIA = {
    1: ("analytic oracle at zero imbalance", c1_oracle),
    2: ("simulation-theory equivalence", c2_sim_theory),
    3: ("normalization", c3_normalization),
    4: ("no-loss weight", c4_no_loss),
    5: ("tail exponent", c5_tail),
    6: ("moment-ratio scaling", c6_moment_ratio),
    7: ("mean time-invariance", c7_mean_invariance),
    8: ("macroscopic Gaussianity", c8_gaussian),
    9: ("overreaction", c9_overreaction),
    10: ("AIMD recovery", c10_aimd),
    11: ("topology", c11_topology),
}


def run_criterion(cid, seed=0, workers=1, scale=1.0):
    title, fn = CRITERIA[cid]
    t = time.perf_counter()
    ok, detail, values = fn(seed, workers, scale)
    return Result(cid, title, bool(ok), detail, values, time.perf_counter() - t)


def run_suite(ids=None, seed=0, workers=1, scale=1.0, echo=None):
    out = []
    for cid in ids or sorted(CRITERIA):
        r = run_criterion(cid, seed, workers, scale)
        if echo:
            echo(r.line())
        out.append(r)
    return out
