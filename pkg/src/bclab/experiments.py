"""Config-driven experiment runner.

A config is INI-style text (``configparser``)::

    [experiment]
    kind = waiting-exponent
    trials = 200
    seed = 2026
    horizon = 10000000
    radii = dyadic from=6 to=16

    [system]
    kind = expanding
    k = 2

    [acceptance]
    median_in = 0.9, 1.1

Rows go to a JSON-lines (canonical) or CSV file, ordered by trial index;
the summary goes next to it as ``<output>.summary.json``.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Any

import numpy as np

from . import diophantine, iet
from .errors import ConfigError, NoDataError
from .estimators import dimension_from_measure, dimension_from_waiting, recurrence_liminf
from .hitstats import bc_proxy, hit_stats
from .seeding import trial_rng, trial_seed
from .systems import IntervalExchange, Point, System, from_config, parse_fragment, random_point
from .targets import RadiusSchedule, TargetSequence, parse_schedule
from .waiting import (
    Exceeded,
    exponent_scan,
    halving_radii,
    prop1_entries,
    tail_exponent,
    tail_liminf_limsup,
    waiting_time,
)

KINDS = (
    "waiting-exponent",
    "sbc-ratio",
    "bc-proxy",
    "stall-compare",
    "dimension",
    "recurrence",
    "diophantine-scan",
    "iet-gaps",
    "iet-bound",
)
TRIAL_KINDS = {"waiting-exponent", "sbc-ratio", "bc-proxy", "stall-compare", "dimension", "recurrence", "iet-bound"}
QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    systems: dict[str, System]
    trials: int = 1
    seed: int = 0
    horizon: int = 10**6
    radii: tuple[float, ...] = ()
    schedule: RadiusSchedule | None = None
    center: Point | None = None
    tail_fraction: float = 0.25
    epsilon: float | None = None
    beta: float | None = None
    method: str = "waiting"
    k0: int = 4
    alpha: Any = None
    q_max: tuple[int, ...] = ()
    n_max: int = 0
    three_distance_n: int = 0
    C: float | None = None
    output: str | None = None
    fmt: str = "jsonl"
    acceptance: dict[str, str] = field(default_factory=dict)

    @property
    def system(self) -> System:
        return self.systems["a"]


def system_id(system: System) -> str:
    cfg = system.config()
    return " ".join([cfg["kind"]] + [f"{k}={v}" for k, v in cfg.items() if k != "kind"])


def _floats(text: str) -> list[float]:
    return [float(Fraction(t.strip())) if "/" in t else float(t) for t in text.split(",") if t.strip()]


def parse_radii(text: str, system: System | None) -> tuple[float, ...]:
    """``dyadic from=A to=B`` (2^-A..2^-B), ``halving n=K`` (mu(B_n) = 2^-n) or ``values=a,b,...``."""
    head, _, rest = text.strip().partition(" ")
    kv = dict(tok.split("=", 1) for tok in rest.split())
    if head == "dyadic":
        a, b = int(kv["from"]), int(kv["to"])
        return tuple(2.0**-k for k in range(a, b + 1))
    if head == "halving":
        if system is None:
            raise ValueError("halving radii need a system")
        return tuple(halving_radii(system, int(kv["n"])))
    if head == "values" or head.startswith("values="):
        body = kv.get("values") or head.partition("=")[2]
        return tuple(_floats(body))
    raise ValueError(f"unknown radii form {head!r}")


def _section_system(section) -> System:
    fields = dict(section)
    if "system" in fields:
        return from_config(parse_fragment(fields["system"]))
    return from_config(fields)


def load_config(source: str | Path, text: str | None = None) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every offending field."""
    cfg, diags = _parse(source, text)
    if diags:
        raise ConfigError(diags)
    return cfg


def validate(source: str | Path, text: str | None = None) -> list[str]:
    """Diagnostics for a config (empty when it is well-formed); no dynamics are run."""
    return _parse(source, text)[1]


def _parse(source, text):
    diags: list[str] = []
    base_dir = None
    if text is None:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            return None, [f"config: cannot read {path}: {exc.strerror}"]
        base_dir = path.parent
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        return None, [f"config: {exc}"]
    if not cp.has_section("experiment"):
        return None, ["experiment: missing [experiment] section"]
    ex = cp["experiment"]
    kind = ex.get("kind", "").strip()
    if kind not in KINDS:
        diags.append(f"kind: must be one of {', '.join(KINDS)} (got {kind!r})")
    kw: dict[str, Any] = {"kind": kind}

    def get_int(key, default=None, minimum=None):
        if key not in ex:
            return default
        try:
            v = int(ex[key])
        except ValueError:
            diags.append(f"{key}: not an integer ({ex[key]!r})")
            return default
        if minimum is not None and v < minimum:
            diags.append(f"{key}: must be >= {minimum}")
        return v

    def get_float(key, default=None):
        if key not in ex:
            return default
        try:
            return float(Fraction(ex[key].strip()))
        except (ValueError, ZeroDivisionError):
            diags.append(f"{key}: not a number ({ex[key]!r})")
            return default

    kw["trials"] = get_int("trials", 1, minimum=1)
    kw["seed"] = get_int("seed", 0, minimum=0)
    if kw["seed"] is not None and kw["seed"] >= 2**64:
        diags.append("seed: must fit in 64 bits")
    kw["horizon"] = get_int("horizon", 10**6, minimum=1)
    kw["tail_fraction"] = get_float("tail_fraction", 0.25)
    kw["epsilon"] = get_float("epsilon")
    kw["beta"] = get_float("beta")
    kw["k0"] = get_int("k0", 4, minimum=0)
    kw["n_max"] = get_int("n_max", 0)
    kw["three_distance_n"] = get_int("three_distance_n", 0)
    kw["method"] = ex.get("method", "waiting").strip()
    kw["output"] = ex.get("output")
    kw["fmt"] = ex.get("format", "jsonl").strip().replace("json-lines", "jsonl")
    if kw["fmt"] not in ("jsonl", "csv"):
        diags.append(f"format: must be csv or jsonl (got {kw['fmt']!r})")
    if kw["tail_fraction"] is not None and not 0 < kw["tail_fraction"] < 1:
        diags.append("tail_fraction: must lie in (0, 1)")
    if kw["epsilon"] is not None and not kw["epsilon"] > 0:
        diags.append("epsilon: must be > 0")
    if kw["beta"] is not None and not kw["beta"] > 0:
        diags.append("beta: must be > 0")

    systems: dict[str, System] = {}
    for label, name in (("a", "system"), ("b", "system.b")):
        if cp.has_section(name):
            try:
                systems[label] = _section_system(cp[name])
            except KeyError as exc:
                diags.append(f"{name}: missing parameter {exc.args[0]}")
            except (ValueError, ArithmeticError) as exc:
                diags.append(f"{name}: {exc}")
    if kind != "diophantine-scan" and "a" not in systems and not any(d.startswith("system") for d in diags):
        diags.append("system: missing [system] section")
    if kind == "stall-compare":
        if "b" not in systems and not any(d.startswith("system.b") for d in diags):
            diags.append("system.b: stall-compare needs a second system")
        elif "a" in systems and "b" in systems:
            a, b = systems["a"], systems["b"]
            if a.dim != b.dim or a.metric != b.metric:
                diags.append("system.b: both systems must live on the same space")
    kw["systems"] = systems
    sys_a = systems.get("a")

    if "radii" in ex:
        try:
            kw["radii"] = parse_radii(ex["radii"], sys_a)
            r = kw["radii"]
            if not r or any(v <= 0 for v in r) or any(b >= a for a, b in zip(r, r[1:])):
                diags.append("radii: must be positive and strictly decreasing")
        except (ValueError, KeyError) as exc:
            diags.append(f"radii: {exc}")

    if cp.has_section("target"):
        tg = cp["target"]
        if "schedule" in tg:
            try:
                kw["schedule"] = parse_schedule(tg["schedule"], base_dir)
            except (ValueError, KeyError, OSError) as exc:
                diags.append(f"schedule: {exc}")
        if "center" in tg:
            try:
                center = Point(tuple(_floats(tg["center"])))
                kw["center"] = center
                if sys_a is not None and center.d != sys_a.dim:
                    diags.append(
                        f"target: dimension mismatch, center has d={center.d} but the system has d={sys_a.dim}"
                    )
            except ValueError as exc:
                diags.append(f"center: {exc}")

    if kind == "diophantine-scan":
        if "alpha" not in ex:
            diags.append("alpha: diophantine-scan needs a rotation vector")
        else:
            try:
                parts = [t for t in ex["alpha"].split(",") if t.strip()]
                vals = tuple(diophantine.parse_rotation_value(t) for t in parts)
                kw["alpha"] = vals[0] if len(vals) == 1 else vals
            except (ValueError, ArithmeticError) as exc:
                diags.append(f"alpha: {exc}")
        try:
            kw["q_max"] = tuple(int(t) for t in ex.get("q_max", "").split(",") if t.strip())
            if not kw["q_max"] or min(kw["q_max"]) < 1:
                diags.append("q_max: needs one or more positive integers")
        except ValueError:
            diags.append("q_max: not a list of integers")
    if "C" in ex and ex["C"].strip() != "auto":
        kw["C"] = get_float("C")

    needs = {
        "waiting-exponent": ["radii"],
        "dimension": ["radii"],
        "sbc-ratio": ["schedule"],
        "bc-proxy": ["schedule"],
        "stall-compare": ["schedule"],
        "recurrence": ["beta"],
        "iet-gaps": ["n_max"],
        "iet-bound": ["n_max"],
    }.get(kind, [])
    for key in needs:
        if not kw.get(key):
            if not any(d.startswith(key) for d in diags):
                diags.append(f"{key}: required for {kind}")
    if kind in ("iet-gaps", "iet-bound") and sys_a is not None and not isinstance(sys_a, IntervalExchange):
        diags.append(f"system: {kind} needs an iet system")
    if kind in ("iet-gaps", "iet-bound") and kw["n_max"] and kw["n_max"] < 10:
        diags.append("n_max: must be >= 10")
    if kind == "dimension" and kw["method"] not in ("waiting", "measure"):
        diags.append("method: must be waiting or measure")

    acceptance = dict(cp["acceptance"]) if cp.has_section("acceptance") else {}
    for key, value in acceptance.items():
        if key not in _ACCEPTANCE_KEYS:
            diags.append(f"acceptance: unknown key {key!r}")
            continue
        try:
            _ACCEPTANCE_KEYS[key](value)
        except ValueError as exc:
            diags.append(f"acceptance.{key}: {exc}")
    kw["acceptance"] = acceptance
    if diags:
        return None, diags
    return ExperimentConfig(**kw), []


def _band(text: str) -> tuple[float, float]:
    lo, hi = (float(t) for t in text.split(","))
    if lo > hi:
        raise ValueError("lower end exceeds upper end")
    return lo, hi


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t not in ("true", "false"):
        raise ValueError("expected true or false")
    return t == "true"


_ACCEPTANCE_KEYS = {
    "median_in": _band,
    "band": _band,
    "min_fraction": float,
    "max_violation_fraction": float,
    "min_median_ratio": float,
    "window_min_fraction": float,
    "min_c": float,
    "monotone": _bool,
    "zero_at": int,
    "min_tail_best": float,
    "three_distance": _bool,
    "min_within_fraction": float,
}


# --- per-trial work ----------------------------------------------------------


def _coords(p: Point) -> list[float]:
    return list(p.coords)


def _points(cfg: ExperimentConfig, system: System, rng) -> tuple[Point, Point]:
    x = random_point(system, rng)
    y = cfg.center if cfg.center is not None else random_point(system, rng)
    return x, y


def _trial_waiting(cfg: ExperimentConfig, i: int):
    sys_ = cfg.system
    seed = trial_seed(cfg.seed, i)
    x, y = _points(cfg, sys_, trial_rng(cfg.seed, i))
    scan = exponent_scan(sys_, x, y, cfg.radii, cfg.horizon)
    bounds = {}
    if cfg.epsilon is not None:
        bounds = {p.n: p for p in prop1_entries(scan, cfg.epsilon)}
    rows = []
    for n, e in enumerate(scan.entries, start=1):
        row = {
            "trial": i, "seed": seed, "system": system_id(sys_), "x": _coords(x), "y": _coords(y),
            "r": e.r, "tau": e.tau if e.resolved else str(e.tau), "mu_ball": e.mu_ball, "exponent": e.exponent,
        }
        if n in bounds:
            row["bound"] = bounds[n].bound
            row["violated"] = bounds[n].violated
        rows.append(row)
    try:
        headline = tail_exponent(scan, cfg.tail_fraction)
    except NoDataError:
        headline = None
    out = {"headline": headline, "censored": scan.censored}
    if cfg.epsilon is not None:
        out["entries"] = len(bounds)
        out["violations"] = sum(p.violated for p in bounds.values())
    try:
        out["liminf"], out["limsup"] = tail_liminf_limsup(scan, cfg.tail_fraction)
    except ValueError:
        pass
    return rows, out


def _hit_rows(cfg, sys_, i, seed, stats, label=None):
    rows = []
    for s in stats:
        row = {
            "trial": i, "seed": seed, "system": system_id(sys_), "N": s.N, "S_N": s.S_N,
            "sum_mu": s.sum_mu, "ratio": s.ratio, "last_hit": s.last_hit, "max_gap": s.max_gap,
        }
        if label is not None:
            row = {"label": label, **row}
        rows.append(row)
    return rows


def _trial_hits(cfg: ExperimentConfig, i: int):
    sys_ = cfg.system
    seed = trial_seed(cfg.seed, i)
    x, y = _points(cfg, sys_, trial_rng(cfg.seed, i))
    stats = hit_stats(sys_, x, TargetSequence(y, cfg.schedule), cfg.horizon)
    rows = _hit_rows(cfg, sys_, i, seed, stats)
    final = stats[-1]
    if cfg.kind == "sbc-ratio":
        return rows, {"headline": final.ratio, "censored": 0}
    verdict = bc_proxy(stats, cfg.k0)
    return rows, {
        "headline": 1.0 if verdict.hits_in_every_dyadic_window else 0.0,
        "max_gap_ratio": verdict.max_gap_ratio,
        "censored": 0,
    }


def _trial_stall(cfg: ExperimentConfig, i: int):
    seed = trial_seed(cfg.seed, i)
    rows, out = [], {"censored": 0}
    for label in ("a", "b"):
        sys_ = cfg.systems[label]
        x, y = _points(cfg, sys_, trial_rng(cfg.seed, i))
        stats = hit_stats(sys_, x, TargetSequence(y, cfg.schedule), cfg.horizon)
        verdict = bc_proxy(stats, cfg.k0)
        rows.extend(_hit_rows(cfg, sys_, i, seed, stats[-1:], label))
        rows[-1]["windows_ok"] = verdict.hits_in_every_dyadic_window
        out[f"gap_{label}"] = verdict.max_gap_ratio
        out[f"windows_{label}"] = verdict.hits_in_every_dyadic_window
    out["headline"] = out["gap_b"]
    return rows, out


def _trial_dimension(cfg: ExperimentConfig, i: int):
    sys_ = cfg.system
    seed = trial_seed(cfg.seed, i)
    x, y = _points(cfg, sys_, trial_rng(cfg.seed, i))
    try:
        if cfg.method == "measure":
            est = dimension_from_measure(sys_, y, cfg.radii)
        else:
            est = dimension_from_waiting(sys_, x, y, cfg.radii, cfg.horizon)
    except NoDataError:
        row = {"trial": i, "seed": seed, "method": cfg.method, "y": _coords(y), "r": None, "statistic": None,
               "censored": len(cfg.radii)}
        return [row], {"headline": None, "band_values": None, "censored": len(cfg.radii)}
    rows = [
        {"trial": i, "seed": seed, "method": est.method, "y": _coords(y), "r": r, "statistic": s,
         "censored": est.censored}
        for r, s in est.samples
    ]
    return rows, {
        "headline": 0.5 * (est.d_lower_proxy + est.d_upper_proxy),
        "band_values": [est.d_lower_proxy, est.d_upper_proxy],
        "censored": est.censored,
    }


def _trial_recurrence(cfg: ExperimentConfig, i: int):
    sys_ = cfg.system
    seed = trial_seed(cfg.seed, i)
    rng = trial_rng(cfg.seed, i)
    x = random_point(sys_, rng)
    y = cfg.center if cfg.center is not None else random_point(sys_, rng)
    q = recurrence_liminf(sys_, x, cfg.beta, cfg.horizon, y)
    rows = [
        {"trial": i, "seed": seed, "method": "recurrence", "y": _coords(y), "N": n, "statistic": v,
         "censored": 0}
        for n, v in q.running_min
    ]
    return rows, {"headline": q.final, "censored": 0}


@dataclass(frozen=True)
class _IETContext:
    C: float
    scales: tuple[float, ...]
    tail_best: float
    achievers: tuple[int, ...]


def _iet_context(cfg: ExperimentConfig) -> _IETContext:
    spec = cfg.system.spec
    profile = iet.gap_profile(spec, cfg.n_max)
    report = iet.p_tilde_scan(spec, cfg.n_max, profile)
    C = cfg.C if cfg.C is not None else report.tail_best
    scales = tuple(iet.matched_scales(profile, report.achievers))
    return _IETContext(C, scales, report.tail_best, report.achievers)


def _trial_iet_bound(cfg: ExperimentConfig, ctx: _IETContext, i: int):
    sys_ = cfg.system
    seed = trial_seed(cfg.seed, i)
    x, y = _points(cfg, sys_, trial_rng(cfg.seed, i))
    rows = []
    for rho in ctx.scales:
        tau = waiting_time(sys_, x, y, rho, cfg.horizon)
        bound = 4.0 / (ctx.C * rho)
        rows.append({
            "trial": i, "seed": seed, "system": system_id(sys_), "x": _coords(x), "y": _coords(y), "r": rho,
            "tau": str(tau) if isinstance(tau, Exceeded) else tau, "bound": bound,
            "within": (not isinstance(tau, Exceeded)) and tau <= bound,
        })
    within = sum(r["within"] for r in rows)
    return rows, {
        "headline": within / len(rows) if rows else None,
        "within": within,
        "checked": len(rows),
        "censored": sum(str(r["tau"]).startswith("exceeded") for r in rows),
    }


def _run_trial(cfg: ExperimentConfig, ctx, i: int):
    if cfg.kind == "waiting-exponent":
        return _trial_waiting(cfg, i)
    if cfg.kind in ("sbc-ratio", "bc-proxy"):
        return _trial_hits(cfg, i)
    if cfg.kind == "stall-compare":
        return _trial_stall(cfg, i)
    if cfg.kind == "dimension":
        return _trial_dimension(cfg, i)
    if cfg.kind == "recurrence":
        return _trial_recurrence(cfg, i)
    if cfg.kind == "iet-bound":
        return _trial_iet_bound(cfg, ctx, i)
    raise AssertionError(cfg.kind)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("LAB_WORKERS", "1")))
    except ValueError:
        return 1


def _map_trials(cfg: ExperimentConfig, ctx, workers: int):
    fn = partial(_run_trial, cfg, ctx)
    idx = range(cfg.trials)
    if workers <= 1 or cfg.trials <= 1:
        return [fn(i) for i in idx]
    chunk = max(1, cfg.trials // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves input order, so the merge is by trial index
        return list(pool.map(fn, idx, chunksize=chunk))


# --- whole-experiment kinds without trials -------------------------------------


def _run_diophantine(cfg: ExperimentConfig):
    rows = []
    for q in cfg.q_max:
        rep = diophantine.constant_type_scan(cfg.alpha, q)
        alpha = cfg.alpha if isinstance(cfg.alpha, tuple) else (cfg.alpha,)
        rows.append({
            "alpha": [diophantine.format_rotation_value(a) for a in alpha],
            "Q_max": q, "c_min": rep.c_min, "argmin_Q": rep.argmin_Q,
        })
    return rows


def _run_iet_gaps(cfg: ExperimentConfig):
    spec = cfg.system.spec
    profile = iet.gap_profile(spec, cfg.n_max)
    report = iet.p_tilde_scan(spec, cfg.n_max, profile)
    rows = [{"n": n, "delta_n": d, "n_delta_n": s} for n, d, s in profile.rows()]
    extra = {
        "best": report.best, "best_n": report.best_n, "tail_best": report.tail_best, "tail_n": report.tail_n,
        "achievers": list(report.achievers), "degenerate": report.degenerate,
    }
    if cfg.three_distance_n:
        ok, worst = iet.three_distance_check(spec, cfg.three_distance_n)
        extra["three_distance"] = ok
        extra["max_distinct_gaps"] = worst
    return rows, extra


# --- summary and acceptance -----------------------------------------------------


def quantile_table(values) -> dict[str, float]:
    arr = np.asarray([v for v in values if v is not None], dtype=np.float64)
    if arr.size == 0:
        return {}
    return {f"q{int(round(100 * q)):02d}": float(np.quantile(arr, q)) for q in QUANTILE_LEVELS}


def _check(name, value, threshold, ok):
    return {"name": name, "value": value, "threshold": threshold, "pass": bool(ok)}


def _evaluate(cfg: ExperimentConfig, trials: list[dict], extra: dict, rows: list[dict]) -> list[dict]:
    acc = {k: _ACCEPTANCE_KEYS[k](v) for k, v in cfg.acceptance.items()}
    checks = []
    heads = [t["headline"] for t in trials if t.get("headline") is not None]
    if "median_in" in acc:
        lo, hi = acc["median_in"]
        med = float(np.median(heads)) if heads else math.nan
        checks.append(_check("median_in", med, [lo, hi], lo <= med <= hi))
    if "band" in acc:
        lo, hi = acc["band"]
        need = acc.get("min_fraction", 1.0)

        def inside(t):
            vals = t.get("band_values", [t.get("headline")])
            return vals is not None and all(v is not None and lo <= v <= hi for v in vals)

        frac = sum(inside(t) for t in trials) / len(trials) if trials else 0.0
        checks.append(_check("band_fraction", frac, {"band": [lo, hi], "min_fraction": need}, frac >= need))
    if "max_violation_fraction" in acc:
        total = sum(t.get("entries", 0) for t in trials)
        bad = sum(t.get("violations", 0) for t in trials)
        frac = bad / total if total else math.nan
        checks.append(_check("violation_fraction", frac, acc["max_violation_fraction"],
                             total > 0 and frac <= acc["max_violation_fraction"]))
    if "min_median_ratio" in acc:
        ma = float(np.median([t["gap_a"] for t in trials]))
        mb = float(np.median([t["gap_b"] for t in trials]))
        ratio = mb / ma if ma > 0 else math.inf
        checks.append(_check("median_gap_ratio_b_over_a", ratio, acc["min_median_ratio"],
                             ratio >= acc["min_median_ratio"]))
    if "window_min_fraction" in acc:
        frac = sum(bool(t["windows_a"]) for t in trials) / len(trials)
        checks.append(_check("windows_fraction_a", frac, acc["window_min_fraction"],
                             frac >= acc["window_min_fraction"]))
    if "min_within_fraction" in acc:
        checked = sum(t.get("checked", 0) for t in trials)
        frac = sum(t.get("within", 0) for t in trials) / checked if checked else 0.0
        checks.append(_check("within_fraction", frac, acc["min_within_fraction"],
                             frac >= acc["min_within_fraction"]))
    if "min_c" in acc:
        cmin = min(r["c_min"] for r in rows)
        checks.append(_check("min_c", cmin, acc["min_c"], cmin >= acc["min_c"]))
    if acc.get("monotone"):
        cs = [r["c_min"] for r in rows]
        ok = all(b <= a for a, b in zip(cs, cs[1:]))
        checks.append(_check("monotone", ok, True, ok))
    if "zero_at" in acc:
        hit = [r for r in rows if r["c_min"] == 0.0]
        q = hit[0]["argmin_Q"] if hit else None
        checks.append(_check("zero_at", q, acc["zero_at"], q == acc["zero_at"]))
    if "min_tail_best" in acc:
        tb = extra["tail_best"]
        checks.append(_check("tail_best", tb, acc["min_tail_best"], tb >= acc["min_tail_best"]))
    if acc.get("three_distance"):
        ok = bool(extra.get("three_distance"))
        checks.append(_check("three_distance", extra.get("max_distinct_gaps"), 3, ok))
    return checks


@dataclass
class RunResult:
    rows: list[dict]
    summary: dict

    @property
    def exit_code(self) -> int:
        verdict = self.summary.get("pass")
        return EXIT_FAIL if verdict is False else EXIT_PASS


def run(cfg: ExperimentConfig, workers: int | None = None) -> RunResult:
    """Execute every trial, merge rows by trial index and build the summary."""
    workers = worker_count() if workers is None else workers
    t0 = time.perf_counter()
    extra: dict = {}
    trials: list[dict] = []
    if cfg.kind == "diophantine-scan":
        rows = _run_diophantine(cfg)
    elif cfg.kind == "iet-gaps":
        rows, extra = _run_iet_gaps(cfg)
    else:
        ctx = _iet_context(cfg) if cfg.kind == "iet-bound" else None
        if ctx is not None:
            extra = {"C": ctx.C, "scales": list(ctx.scales), "tail_best": ctx.tail_best,
                     "achievers": list(ctx.achievers)}
        results = _map_trials(cfg, ctx, workers)
        rows = [r for trial_rows, _ in results for r in trial_rows]
        trials = [t for _, t in results]
    checks = _evaluate(cfg, trials, extra, rows)
    summary: dict[str, Any] = {
        "kind": cfg.kind,
        "system": {k: system_id(s) for k, s in cfg.systems.items()},
        "trials": len(trials) if trials else None,
        "seed": cfg.seed,
        "headline": quantile_table(t.get("headline") for t in trials),
        "censored": sum(t.get("censored", 0) for t in trials),
        **extra,
        "checks": checks,
        "pass": all(c["pass"] for c in checks) if checks else None,
        "wall_time": round(time.perf_counter() - t0, 3),
    }
    if cfg.kind == "stall-compare":
        summary["quantiles_a"] = quantile_table(t["gap_a"] for t in trials)
        summary["quantiles_b"] = quantile_table(t["gap_b"] for t in trials)
    if cfg.kind == "waiting-exponent" and cfg.epsilon is not None:
        total = sum(t["entries"] for t in trials)
        summary["violation_fraction"] = sum(t["violations"] for t in trials) / total if total else None
    return RunResult(rows, summary)


# --- output --------------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def rows_to_jsonl(rows: list[dict]) -> str:
    return "".join(json.dumps({k: _jsonable(v) for k, v in r.items()}, separators=(",", ":")) + "\n" for r in rows)


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    keys: list[str] = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (" ".join(map(repr, v)) if isinstance(v, list) else v) for k, v in r.items()})
    return buf.getvalue()


def write_outputs(result: RunResult, output: str | Path, fmt: str = "jsonl") -> Path:
    """Write the row stream and ``<output>.summary.json``; returns the row path."""
    path = Path(output)
    text = rows_to_jsonl(result.rows) if fmt == "jsonl" else rows_to_csv(result.rows)
    path.write_text(text)
    summary_path = path.with_name(path.name + ".summary.json")
    summary_path.write_text(json.dumps(result.summary, indent=2, default=_jsonable) + "\n")
    return path
