"""Experiment configuration, dispatch and reproducible output.

A run directory holds ``data/*.csv`` (or ``.json``), ``summary.json`` and
``manifest.json``.  Data files and the summary depend only on the
configuration and seed; timing and environment details live in the
manifest alone.
"""
from dataclasses import dataclass, field
import datetime as _dt
import hashlib
import io
import csv
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from . import analytics as an
from .acceptance import CRITERIA, run_suite
from .aimd import AimdConfig, protocol_band, run_aimd
from .ensemble import estimate_pdf, fit_tail_exponent, moments, simulate_path_ensemble
from .errors import InsufficientDataError, ParameterError
from .model import BaseDesign, CriticalitySpread, LinkParams, LoadModel, WindowSpec
from .queue import simulate_phi
from .rng import sub_seed
from .topology import (affected_paths_fraction, edge_betweenness, fit_load_exponent, generate_sf_graph,
                       read_edge_list, relative_loads)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("link-sim", "analytic-pdf", "path-sim", "regime-map", "aimd", "topology", "sweep", "accept")
ENV_PREFIX = "CRITNET_"
SCHEMA_VERSION = 1

_ANY = object()

# name -> default; ``_ANY`` marks a required parameter.
DEFAULTS = {
    "link-sim": dict(eta=0.0, c=1000, tau=1.0, ell=1.0, T=1e4, n=10_000, backend="diffusion", dt=None,
                     arrivals="gamma"),
    "analytic-pdf": dict(eta=0.0, c=1000, tau=1.0, ell=1.0, T=1e4, points=201, lam_max=None, nodes=32),
    "path-sim": dict(a=10, gamma=1e-4, delta=0.25, c=1e4, tau=1.0, phi0=3e-3, T=None, ell_max="auto",
                     n=100_000, shape="uniform", per_decade=12, tail_window=None),
    "regime-map": dict(a=10, t_min=10.0, t_max=1e8, g_min=10.0, g_max=1e6, per_decade=4, tau=1.0),
    "aimd": dict(t0=0.25, w_init=1, w_max=100, additive_step=1, md_factor=0.5, n_cycles=1000, losses=None,
                 loss_file=None, c=1e6, a=10, tau=None),
    "topology": dict(n=2000, m=2, edge_list=None, affected=True),
    "sweep": dict(target="path-sim", axes=_ANY, base={}, budget=5e8),
    "accept": dict(ids=None, scale=1.0),
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    params: dict = field(default_factory=dict)
    workers: int = 1
    out: str = "runs/out"
    format: str = "csv"

    @classmethod
    def from_mapping(cls, d):
        d = dict(d)
        kind = d.pop("kind", d.pop("experiment", None))
        if kind not in KINDS:
            raise ParameterError("kind", f"must be one of {', '.join(KINDS)}, got {kind!r}")
        if d.get("seed") is None:
            raise ParameterError("seed", "a seed is mandatory")
        try:
            seed = int(d.pop("seed"))
        except (TypeError, ValueError):
            raise ParameterError("seed", "must be an integer") from None
        if not 0 <= seed < 2**64:
            raise ParameterError("seed", f"must be an unsigned 64-bit integer, got {seed}")
        workers = int(d.pop("workers", 1))
        if workers < 1:
            raise ParameterError("workers", f"must be at least 1, got {workers}")
        fmt = d.pop("format", "csv")
        if fmt not in ("csv", "json"):
            raise ParameterError("format", f"must be csv or json, got {fmt!r}")
        out = str(d.pop("out", "runs/out"))
        params = dict(d.pop("params", {}))
        params.update(d)
        cfg = cls(kind, seed, params, workers, out, fmt)
        cfg.params = validate_params(kind, params)
        return cfg

    def snapshot(self):
        return {"kind": self.kind, "seed": self.seed, "params": self.params, "format": self.format}


def validate_params(kind, params):
    spec = DEFAULTS[kind]
    lower = {k.lower(): k for k in spec}
    params = {(k if k in spec else lower.get(k.lower(), k)): v for k, v in params.items()}
    unknown = sorted(set(params) - set(spec))
    if unknown:
        raise ParameterError(unknown[0], f"unknown parameter for {kind}")
    out = {}
    for k, v in spec.items():
        if k in params:
            out[k] = params[k]
        elif v is _ANY:
            raise ParameterError(k, f"required for {kind}")
        else:
            out[k] = v
    _CHECKS[kind](out)
    return out


def _pos(p, *names):
    for n in names:
        v = p[n]
        if not isinstance(v, (int, float)) or not v > 0 or not math.isfinite(v):
            raise ParameterError(n, f"must be a positive number, got {v!r}")


def _int_at_least(p, name, lo):
    v = p[name]
    if not isinstance(v, (int, float)) or int(v) != v or v < lo:
        raise ParameterError(name, f"must be an integer >= {lo}, got {v!r}")
    p[name] = int(v)


def _check_link(p):
    _pos(p, "tau", "ell", "T")
    _int_at_least(p, "c", 2)
    if not abs(p["eta"]) < 1:
        raise ParameterError("eta", f"must satisfy |eta| < 1, got {p['eta']}")
    if p["T"] < 10 * p["tau"]:
        raise ParameterError("T", f"window must be at least 10 tau = {10 * p['tau']}")


def _check_link_sim(p):
    _check_link(p)
    _int_at_least(p, "n", 1)
    if p["backend"] not in ("diffusion", "event"):
        raise ParameterError("backend", f"must be diffusion or event, got {p['backend']!r}")
    if p["dt"] is not None:
        _pos(p, "dt")
    if p["arrivals"] not in ("gamma", "exponential"):
        raise ParameterError("arrivals", f"must be gamma or exponential, got {p['arrivals']!r}")


def _check_analytic(p):
    _check_link(p)
    _int_at_least(p, "points", 2)
    _int_at_least(p, "nodes", 4)
    if p["lam_max"] is not None:
        _pos(p, "lam_max")


def _check_path(p):
    _int_at_least(p, "a", 1)
    _pos(p, "gamma", "c", "tau")
    _int_at_least(p, "n", 1000)
    _int_at_least(p, "per_decade", 1)
    if not 0 < p["gamma"] < 1:
        raise ParameterError("gamma", f"must lie in (0, 1), got {p['gamma']}")
    if not p["delta"] > -1:
        raise ParameterError("delta", f"must exceed -1, got {p['delta']}")
    if p["c"] < 2:
        raise ParameterError("c", "base buffer must be at least 2")
    if p["T"] is None:
        _pos(p, "phi0")
        if not p["phi0"] <= 1:
            raise ParameterError("phi0", f"must be at most 1, got {p['phi0']}")
    else:
        _pos(p, "T")
        p["phi0"] = math.sqrt(p["tau"] / p["T"])
    if p["ell_max"] not in ("auto", None):
        _pos(p, "ell_max")
    if p["shape"] not in ("uniform", "gaussian"):
        raise ParameterError("shape", f"must be uniform or gaussian, got {p['shape']!r}")
    tw = p["tail_window"]
    if tw is not None and not (isinstance(tw, (list, tuple)) and len(tw) == 2 and 0 < tw[0] < tw[1]):
        raise ParameterError("tail_window", "must be [lo, hi] with 0 < lo < hi")


def _check_regime(p):
    _int_at_least(p, "a", 1)
    _int_at_least(p, "per_decade", 1)
    _pos(p, "t_min", "t_max", "g_min", "g_max", "tau")
    if not (p["t_min"] < p["t_max"] and p["g_min"] < p["g_max"]):
        raise ParameterError("t_max", "grid bounds must be increasing")
    if p["g_min"] <= 1:
        raise ParameterError("g_min", "inverse width must exceed 1")


def _check_aimd(p):
    AimdConfig(p["t0"], p["w_init"], p["w_max"], p["additive_step"], p["md_factor"], p["n_cycles"])
    if p["losses"] is not None and p["loss_file"] is not None:
        raise ParameterError("losses", "give either losses or loss_file, not both")
    if p["losses"] is not None:
        if not all(isinstance(v, (int, float)) and 0 <= v <= 1 for v in p["losses"]):
            raise ParameterError("losses", "loss fractions must lie in [0, 1]")
    _pos(p, "c", "a")


def _check_topology(p):
    if p["edge_list"] is None:
        _int_at_least(p, "m", 1)
        _int_at_least(p, "n", p["m"] + 1)


SWEEP_TARGETS = ("path-sim", "no-loss")


def _check_sweep(p):
    if p["target"] not in SWEEP_TARGETS:
        raise ParameterError("target", f"must be one of {SWEEP_TARGETS}, got {p['target']!r}")
    axes = p["axes"]
    if not isinstance(axes, dict) or not 1 <= len(axes) <= 2:
        raise ParameterError("axes", "give one or two swept parameters")
    for k, v in axes.items():
        if not isinstance(v, (list, tuple)) or len(v) == 0:
            raise ParameterError(k, "sweep grid is empty")
    base_kind = "path-sim" if p["target"] == "path-sim" else "analytic-pdf"
    for combo in _grid(axes):
        validate_params(base_kind, {**p["base"], **combo})
    _pos(p, "budget")
    if p["target"] == "path-sim":
        full = validate_params("path-sim", dict(p["base"]))
        points = len(list(_grid(axes)))
        est = points * max(full["n"] if "n" not in axes else max(axes["n"]), 1) * full["a"]
        if est > p["budget"]:
            raise ParameterError("budget", f"sweep needs ~{est:.3g} link samples, budget is {p['budget']:.3g}")


def _check_accept(p):
    ids = p["ids"]
    if ids is not None:
        if not isinstance(ids, (list, tuple)) or not ids or any(i not in CRITERIA for i in ids):
            raise ParameterError("ids", f"must list criteria among {sorted(CRITERIA)}")
    _pos(p, "scale")


_CHECKS = {
    "link-sim": _check_link_sim,
    "analytic-pdf": _check_analytic,
    "path-sim": _check_path,
    "regime-map": _check_regime,
    "aimd": _check_aimd,
    "topology": _check_topology,
    "sweep": _check_sweep,
    "accept": _check_accept,
}


def _grid(axes):
    names = list(axes)
    if len(names) == 1:
        for v in axes[names[0]]:
            yield {names[0]: v}
    else:
        for v in axes[names[0]]:
            for w in axes[names[1]]:
                yield {names[0]: v, names[1]: w}


# -------------------------------------------------------------- config files


def load_config(path):
    """Read a TOML or JSON config (by extension; TOML otherwise)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        if str(path).endswith(".json"):
            return json.loads(raw)
        return tomllib.loads(raw.decode())
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ParameterError("config", f"cannot parse {path}: {exc}") from None


def _parse_value(text):
    try:
        return json.loads(text)
    except ValueError:
        return text


def apply_overrides(cfg, pairs):
    """Set ``a__b=value`` style keys (``__`` descends into tables)."""
    cfg = json.loads(json.dumps(cfg))
    for key, text in pairs:
        parts = [p for p in key.split("__") if p]
        if not parts:
            continue
        node = cfg
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = _parse_value(text)
    return cfg


def env_overrides(environ=None, prefix=ENV_PREFIX):
    """``CRITNET_PARAMS__GAMMA=1e-4`` -> ``("params__gamma", "1e-4")``.

    Keys are lower-cased; parameter names are matched case-insensitively.
    """
    environ = os.environ if environ is None else environ
    out = []
    for k in sorted(environ):
        if k.startswith(prefix):
            key = k[len(prefix):]
            out.append((key.lower(), environ[k]))
    return out


# ------------------------------------------------------------------- output


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {str(k): _num(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_num(x) for x in v]
    return v


def dumps_json(obj):
    return json.dumps(_num(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def table_bytes(columns, rows, fmt):
    if fmt == "json":
        return dumps_json({"schema": SCHEMA_VERSION, "columns": list(columns), "rows": [list(r) for r in rows]}).encode()
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow([f"# schema={SCHEMA_VERSION}"])
    wr.writerow(columns)
    for r in rows:
        wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue().encode()


def atomic_write(path, data):
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunManifest:
    config: dict
    version: str
    timestamp: str
    checksums: dict
    seconds: float
    outputs: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def to_dict(self):
        return {"config": self.config, "version": self.version, "timestamp": self.timestamp,
                "checksums": self.checksums, "seconds": self.seconds}


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def verify_manifest(out_dir):
    """True when every checksum in ``manifest.json`` matches its file."""
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        man = json.load(fh)
    return all(sha256_file(os.path.join(out_dir, rel)) == digest for rel, digest in man["checksums"].items())


# ---------------------------------------------------------------- pipelines


def _link(p, eta=None):
    return LinkParams(ell=p["ell"], eta=p["eta"] if eta is None else eta, tau=p["tau"], c=p["c"])


def _link_sim(cfg):
    p = cfg.params
    link = _link(p)
    window = WindowSpec(p["T"], link.tau)
    phi = simulate_phi(link, window, p["n"], p["backend"], sub_seed(cfg.seed, 1), cfg.workers, dt=p["dt"],
                       arrivals=p["arrivals"])
    K = p["T"] / link.tau
    rows = [(k, p["T"], f, f * K) for k, f in enumerate(phi)]
    se = float(phi.std(ddof=1) / math.sqrt(phi.size)) if phi.size > 1 else None
    summary = {
        "mean_phi": float(phi.mean()), "stderr_phi": se, "atom_zero": float(np.mean(phi == 0)),
        "theory": {"boundary_density": float(an.stationary_boundary_density(link.eta, link.c)),
                   "atom_zero": 1.0 - an.loss_mass_exact(p["T"], link, truncate=True)},
    }
    return {"samples": (("window", "T", "phi", "lam"), rows)}, summary


def _analytic_pdf(cfg):
    p = cfg.params
    link = _link(p)
    K = p["T"] / link.tau
    lam_max = p["lam_max"] or (max(link.eta, 0.0) * K + 12.0 * math.sqrt(2.0 * K))
    lam = np.linspace(0.0, lam_max, p["points"])
    inv = an.invert_laplace_pdf(lam, p["T"], link, p["nodes"])
    exact = an.loss_density_exact(lam, p["T"], link)
    summary = {
        "atom_zero": an.no_loss_weight(p["T"], link, p["nodes"]),
        "atom_zero_closed_form": 1.0 - an.loss_mass_exact(p["T"], link),
        "boundary_density": float(an.stationary_boundary_density(link.eta, link.c)),
        "max_rel_diff": float(np.max(np.abs(inv - exact) / np.maximum(exact, 1e-300))),
    }
    rows = list(zip(lam, inv, exact))
    return {"pdf": (("lam", "F_inverted", "F_closed_form"), rows)}, summary


def _path_inputs(p):
    phi0 = p["phi0"]
    ell_max = (phi0 / p["gamma"]) ** 2 if p["ell_max"] == "auto" else p["ell_max"]
    if ell_max is not None and ell_max <= 1.0:
        ell_max = None
    return (LoadModel(p["delta"], 1.0, ell_max), CriticalitySpread(p["gamma"], p["shape"]),
            BaseDesign(p["c"], p["tau"]), WindowSpec(p["tau"] / phi0**2, p["tau"]))


def _path_metrics(p, x):
    a, g, phi0 = p["a"], p["gamma"], p["phi0"]
    pdf = estimate_pdf(x, p["per_decade"])
    m = moments(x)
    regime = an.classify(p["tau"] / phi0**2, p["tau"], g, a).value
    window = p["tail_window"] or (2 * phi0, 0.3 * phi0**2 / g)
    try:
        fit = fit_tail_exponent(pdf, tuple(window))
        tail = {"slope": fit.slope, "stderr": fit.stderr, "bins": fit.n_bins, "window": list(window)}
    except InsufficientDataError as exc:
        tail = {"error": str(exc), "window": list(window)}
    summary = {
        "regime": regime, "n": int(x.size), "atom_zero": pdf.atom_zero,
        "atom_zero_mesoscopic_estimate": (1 - g / phi0) ** a if g < phi0 else None,
        "mean": m.mean, "mean_stderr": m.stderr[1], "second": m.second, "third": m.third,
        "ratio2": m.ratio2, "pair_ratio": m.ratios[2], "triple_ratio": m.ratios[3], "tail": tail,
        "tail_exponent_prediction": -2 * (1 + p["delta"]),
    }
    return pdf, summary


def _path_sim(cfg):
    p = cfg.params
    model, spread, base, window = _path_inputs(p)
    x = simulate_path_ensemble(p["n"], p["a"], model, spread, base, window, sub_seed(cfg.seed, 3), cfg.workers)
    pdf, summary = _path_metrics(p, x)
    rows = [(lo, hi, ctr, d, int(k)) for lo, hi, ctr, d, k in
            zip(pdf.edges[:-1], pdf.edges[1:], pdf.centers, pdf.density, pdf.counts)]
    return {"pdf": (("bin_lo", "bin_hi", "center", "density", "count"), rows)}, summary


def _regime_map(cfg):
    p = cfg.params
    ts = _decades(p["t_min"], p["t_max"], p["per_decade"])
    gs = _decades(p["g_min"], p["g_max"], p["per_decade"])
    rows, counts = [], {}
    for t in ts:
        for g in gs:
            r = an.classify(t * p["tau"], p["tau"], 1.0 / g, p["a"]).value
            counts[r] = counts.get(r, 0) + 1
            rows.append((t, g, r))
    return {"regimes": (("T_over_tau", "inv_gamma", "regime"), rows)}, {"counts": counts, "a": p["a"]}


def _decades(lo, hi, per):
    k0 = math.floor(math.log10(lo) * per + 1e-9)
    k1 = math.ceil(math.log10(hi) * per - 1e-9)
    return [10.0 ** (k / per) for k in range(k0, k1 + 1)]


def _aimd(cfg):
    p = cfg.params
    acfg = AimdConfig(p["t0"], p["w_init"], p["w_max"], p["additive_step"], p["md_factor"], p["n_cycles"])
    if p["loss_file"] is not None:
        with open(p["loss_file"]) as fh:
            losses = [float(tok) for tok in fh.read().replace(",", " ").split()]
    else:
        losses = p["losses"] or []
    tr = run_aimd(acfg, losses, sub_seed(cfg.seed, 5))
    tau = p["tau"] if p["tau"] is not None else p["t0"] / p["c"]
    band = protocol_band(p["c"], p["a"], p["w_max"], p["t0"], tau)
    rows = [(k, int(w), int(l), r) for k, (w, l, r) in enumerate(zip(tr.window, tr.lost, tr.rate))]
    summary = {
        "loss_cycles": [int(k) for k in tr.loss_cycles], "min_window": tr.min_window,
        "recovery_seconds": tr.recovery_times(),
        "band": {"inv_gamma": list(band.inverse_range), "empty": band.empty, "phi0_sq_t0": band.phi0_sq_t0,
                 "mesoscopic": band.mesoscopic, "rule_of_thumb": band.rule_of_thumb},
    }
    return {"trace": (("cycle", "W", "losses", "rate"), rows)}, summary


def _topology(cfg):
    p = cfg.params
    if p["edge_list"] is not None:
        g = read_edge_list(p["edge_list"])
    else:
        g = generate_sf_graph(p["n"], p["m"], sub_seed(cfg.seed, 6))
    if not g.is_connected():
        g = g.largest_component()
    B = edge_betweenness(g)
    ell = relative_loads(g, B)
    summary = {"nodes": g.n, "edges": g.m, "max_load": float(ell.max())}
    try:
        fit = fit_load_exponent(ell)
        summary["load_exponent"] = {"value": fit.exponent, "stderr": fit.stderr, "xmin": fit.xmin, "n_tail": fit.n_tail}
    except InsufficientDataError as exc:
        summary["load_exponent"] = {"error": str(exc)}
    if p["affected"]:
        top = affected_paths_fraction(g, int(np.argmax(B)))
        med = affected_paths_fraction(g, int(np.argsort(B, kind="stable")[len(B) // 2]))
        summary["affected_fraction"] = {"top": top, "median": med}
    rows = [(int(u), int(v), b, l) for (u, v), b, l in zip(g.edges, B, ell)]
    return {"loads": (("u", "v", "B", "ell"), rows)}, summary


def _sweep(cfg):
    p = cfg.params
    rows = []
    names = list(p["axes"])
    for j, combo in enumerate(_grid(p["axes"])):
        key = [combo[n] for n in names] + [None] * (2 - len(names))
        if p["target"] == "path-sim":
            q = validate_params("path-sim", {**p["base"], **combo})
            model, spread, base, window = _path_inputs(q)
            x = simulate_path_ensemble(q["n"], q["a"], model, spread, base, window, sub_seed(cfg.seed, 7, j),
                                       cfg.workers)
            _, s = _path_metrics(q, x)
            metrics = {k: s[k] for k in ("atom_zero", "mean", "mean_stderr", "ratio2", "pair_ratio", "triple_ratio")}
            metrics["phi0"] = q["phi0"]
        else:
            q = validate_params("analytic-pdf", {**p["base"], **combo})
            link = _link(q)
            metrics = {"one_minus_A": 1.0 - an.no_loss_weight(q["T"], link, q["nodes"]),
                       "phi0": an.window_phi0(q["T"], link)}
        for m, v in metrics.items():
            rows.append((j, *key, m, v))
    cols = ("point", names[0], names[1] if len(names) > 1 else "axis2", "metric", "value")
    return {"sweep": (cols, rows)}, {"points": len(list(_grid(p["axes"]))), "axes": names, "target": p["target"]}


def _accept(cfg, echo=None):
    p = cfg.params
    results = run_suite(p["ids"], cfg.seed, cfg.workers, p["scale"], echo=echo)
    rows = [(r.cid, r.title, "PASS" if r.passed else "FAIL", r.detail) for r in results]
    summary = {"passed": [r.cid for r in results if r.passed], "failed": [r.cid for r in results if not r.passed],
               "values": {str(r.cid): r.values for r in results}, "scale": p["scale"]}
    return {"acceptance": (("criterion", "title", "status", "detail"), rows)}, summary


PIPELINES = {
    "link-sim": _link_sim,
    "analytic-pdf": _analytic_pdf,
    "path-sim": _path_sim,
    "regime-map": _regime_map,
    "aimd": _aimd,
    "topology": _topology,
    "sweep": _sweep,
}


def run_experiment(cfg, echo=None):
    """Run ``cfg`` and write its outputs; returns the manifest."""
    t = time.perf_counter()
    if cfg.kind == "accept":
        tables, summary = _accept(cfg, echo)
    else:
        tables, summary = PIPELINES[cfg.kind](cfg)
    ext = "json" if cfg.format == "json" else "csv"
    checksums, outputs = {}, {}
    for name, (cols, rows) in tables.items():
        rel = f"data/{name}.{ext}"
        path = os.path.join(cfg.out, rel)
        atomic_write(path, table_bytes(cols, rows, cfg.format))
        checksums[rel] = sha256_file(path)
        outputs[name] = path
    summary = {"kind": cfg.kind, "seed": cfg.seed, "schema": SCHEMA_VERSION, "result": summary}
    spath = os.path.join(cfg.out, "summary.json")
    atomic_write(spath, dumps_json(summary).encode())
    checksums["summary.json"] = sha256_file(spath)
    man = RunManifest(cfg.snapshot(), __version__, _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
                      checksums, round(time.perf_counter() - t, 3), outputs, summary)
    atomic_write(os.path.join(cfg.out, "manifest.json"), dumps_json(man.to_dict()).encode())
    return man
