"""Config-driven pipeline: IDS, ensemble of big-box solves, statistics, files on disk."""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .. import __version__
from ..eigensolve import SpectralData, full_spectrum, window
from ..hamiltonian import Boundary, LatticeCube, assemble, sample_potential, uniform_stream
from ..ids import IntegratedDensityOfStates, alpha_window, estimate_ids, ids_window
from ..localization import centers, decay_fit, spectrum_centers, write_centers_csv
from ..statistics import (
    StepFunction,
    counting,
    dcs,
    dcs_limit,
    dls,
    dls_macroscopic,
    independence_test,
    large_deviation_check,
    limit_g,
    minami_estimator,
    poisson_count_test,
    poisson_nn_survival,
    sup_distance,
    unfold,
    wegner_estimator,
)
from ..two_scale import Decomposition, bernoulli_stats, decompose, decompose_lengths, local_eigen, match
from .config import ConfigError, ExperimentConfig, WindowBlock

__all__ = ["OUTPUT_ENV", "ResultRecord", "run", "resolve_window", "output_root", "build_ids"]

OUTPUT_ENV = "ANDERSON_SPECTRA_OUTPUT"
NEEDS_IDS = {"dls", "dls_macroscopic", "dcs", "poisson", "independence", "ldp", "wegner_minami", "two_scale", "bernoulli"}


@dataclass
class ResultRecord:
    digest: str
    summaries: Dict[str, dict]
    manifest: List[str]
    wall_clock: float
    version: str = __version__
    directory: Optional[str] = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "digest": self.digest,
                "summaries": _clean(self.summaries),
                "manifest": self.manifest,
                "wall_clock": self.wall_clock,
                "version": self.version,
            },
            indent=2,
            sort_keys=True,
            default=_jsonable,
        )


def _clean(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "runs"))


@contextmanager
def _mapper(workers: int):
    if workers <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=workers) as ex:
        yield partial(ex.map, chunksize=1)


def build_ids(config: ExperimentConfig, mapper=map) -> IntegratedDensityOfStates:
    m = config.model
    return estimate_ids(
        m.d,
        config.ids.side,
        m.boundary,
        m.disorder(config.ensemble.master_seed),
        config.ids.realizations,
        config.ids.max_knots,
        first_index=config.ids.first_index,
        mapper=mapper,
    )


def resolve_window(block: WindowBlock, ids: Optional[IntegratedDensityOfStates], volume: int) -> Tuple[float, float]:
    if block.kind == "interval":
        return float(block.interval[0]), float(block.interval[1])
    if ids is None:
        raise ConfigError("an IDS-mass window needs an IDS model")
    if block.kind == "alpha":
        return alpha_window(ids, block.E0, volume, block.alpha)
    return ids_window(ids, block.E0, block.count / volume)


# ---------------------------------------------------------------- worker


@dataclass(frozen=True)
class _Plan:
    cube: LatticeCube
    disorder: object
    need_big: bool
    vector_hull: Optional[Tuple[float, float]]
    two_scale: Tuple[tuple, ...] = ()
    bernoulli: Optional[tuple] = None


@dataclass
class _Realization:
    index: int
    spectrum: Optional[SpectralData]
    centers: Optional[np.ndarray]
    center_indices: Optional[np.ndarray] = None
    two_scale: List[object] = field(default_factory=list)
    bernoulli: Optional[Tuple[np.ndarray, np.ndarray]] = None


def _realize(plan: _Plan, index: int) -> _Realization:
    fld = sample_potential(plan.cube, plan.disorder.realization(index))
    spec = pos = None
    if plan.need_big:
        spec = full_spectrum(assemble(plan.cube, fld), vector_window=plan.vector_hull)
        if plan.vector_hull is not None and spec.eigenvectors.shape[1]:
            pos = np.stack([centers(spec.eigenvectors[:, m], plan.cube).center for m in range(spec.eigenvectors.shape[1])])
        elif plan.vector_hull is not None:
            pos = np.empty((0, plan.cube.d), dtype=np.int64)
    reports = []
    for decomp, interval, boundary, tol, margin in plan.two_scale:
        w = window(spec, interval)
        sel = np.isin(spec.vector_indices, w.indices)
        cubes = local_eigen(fld, decomp, interval, boundary, margin)
        reports.append(match(w, pos[sel], cubes, decomp, interval, tol))
    bern = None
    if plan.bernoulli is not None:
        decomp, interval, boundary = plan.bernoulli
        cubes = local_eigen(fld, decomp, interval, boundary)
        bern = (np.array([c.X for c in cubes]), np.array([c.n_in_window for c in cubes]))
    vidx = None
    if spec is not None and spec.eigenvectors is not None:
        # drop bulky vectors before shipping the result back
        vidx = np.asarray(spec.vector_indices)
        spec = SpectralData(spec.eigenvalues, spec.cube, None, spec.indices)
    return _Realization(index, spec, pos, vidx, reports, bern)


# ---------------------------------------------------------------- writers


def _write_curve(path: Path, x, columns: Dict[str, np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x"] + list(columns))
        for i, xv in enumerate(x):
            w.writerow([repr(float(xv))] + [repr(float(c[i])) for c in columns.values()])


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _grid(opts: dict, default_max: float = 6.0) -> np.ndarray:
    return np.linspace(0.0, float(opts.get("x_max", default_max)), int(opts.get("x_points", 121)))


# ---------------------------------------------------------------- main entry


def _decomposition(config: ExperimentConfig, ell_prime: Optional[int] = None) -> Decomposition:
    ts = config.two_scale
    m = config.model
    if ts.ell is not None and ts.ell_prime is not None:
        return decompose_lengths(m.L, ts.ell, ell_prime or ts.ell_prime, m.d)
    dec = decompose(m.L, ts.beta, ts.beta_prime, m.d)
    return dec if ell_prime is None else decompose_lengths(m.L, dec.ell, ell_prime, m.d)


def run(
    config: ExperimentConfig,
    out_dir=None,
    ids: Optional[IntegratedDensityOfStates] = None,
    want_ids: bool = False,
) -> ResultRecord:
    """Execute every statistic of ``config`` and write CSV/JSON files.

    Parameters
    ----------
    out_dir : path, optional
        Defaults to ``config.output`` or ``$ANDERSON_SPECTRA_OUTPUT/<digest[:12]>``.
    ids : IntegratedDensityOfStates, optional
        Pre-fitted model; otherwise one is estimated from the ``ids`` block
        when a statistic needs it or ``want_ids`` is set.
    """
    t0 = time.perf_counter()
    digest = config.digest()
    out = Path(out_dir or config.output or output_root() / digest[:12])
    out.mkdir(parents=True, exist_ok=True)
    m = config.model
    ens = config.ensemble
    cube = LatticeCube(m.d, m.L, m.boundary)
    disorder = m.disorder(ens.master_seed)
    stats_cfg = config.statistics
    manifest: List[str] = []
    summaries: Dict[str, dict] = {}

    (out / "config.yaml").write_text(config.to_yaml())
    manifest.append("config.yaml")

    with _mapper(ens.workers) as mapper:
        if ids is None and (want_ids or NEEDS_IDS & set(stats_cfg)):
            ids = build_ids(config, mapper)
        if ids is not None:
            ids.to_csv(out / "ids.csv")
            (out / "ids.json").write_text(ids.metadata_json() + "\n")
            manifest += ["ids.csv", "ids.json"]

        def win(opts):
            return resolve_window(WindowBlock.from_any(opts.get("window", config.window)), ids, cube.volume)

        vector_windows = [win(stats_cfg[s]) for s in ("dcs", "centers", "two_scale") if s in stats_cfg]
        hull = (min(w[0] for w in vector_windows), max(w[1] for w in vector_windows)) if vector_windows else None

        ts_jobs = []
        if "two_scale" in stats_cfg:
            ts = config.two_scale
            interval = win(stats_cfg["two_scale"])
            margin = ts.tol if ts.margin is None else ts.margin
            decs = [_decomposition(config)]
            if stats_cfg["two_scale"].get("compare_ell_prime"):
                decs.append(_decomposition(config, int(stats_cfg["two_scale"]["compare_ell_prime"])))
            ts_jobs = [(d, interval, Boundary.coerce(ts.boundary), ts.tol, margin) for d in decs]
        bern_job = None
        if "bernoulli" in stats_cfg:
            opts = stats_cfg["bernoulli"]
            dec = _decomposition(config)
            E0 = config.window.E0
            bern_window = ids_window(ids, E0, float(opts.get("N_ell", 0.1)) / dec.ell**m.d)
            bern_job = (dec, bern_window, Boundary.coerce(config.two_scale.boundary))

        need_big = bool(set(stats_cfg) - {"bernoulli"})
        plan = _Plan(cube, disorder, need_big, hull, tuple(ts_jobs), bern_job)
        indices = range(ens.first_index, ens.first_index + ens.realizations)
        results: List[_Realization] = list(mapper(partial(_realize, plan), indices))

    def take(opts) -> List[_Realization]:
        n = int(opts.get("realizations", len(results)))
        if not 1 <= n <= len(results):
            raise ConfigError(f"statistic asks for {n} realizations, ensemble has {len(results)}")
        return results[:n]

    for name in sorted(stats_cfg):
        opts = stats_cfg[name]
        summary, files = _STATISTIC[name](config, opts, ids, cube, results, take, win, out, plan)
        summary = {"statistic": name, **summary}
        (out / f"{name}.json").write_text(json.dumps(_clean(summary), indent=2, sort_keys=True, default=_jsonable) + "\n")
        manifest += files + [f"{name}.json"]
        summaries[name] = summary

    record = ResultRecord(digest, summaries, manifest, time.perf_counter() - t0, directory=str(out))
    (out / "result.json").write_text(record.to_json() + "\n")
    record.manifest.append("result.json")
    return record


# ---------------------------------------------------------------- statistics


def _stat_spectrum(config, opts, ids, cube, results, take, win, out, plan):
    r = results[int(opts.get("realization", 0))]
    r.spectrum.to_csv(out / "spectrum.csv")
    ev = r.spectrum.eigenvalues
    return {"realization": r.index, "n": len(ev), "min": float(ev[0]), "max": float(ev[-1])}, ["spectrum.csv"]


def _stat_centers(config, opts, ids, cube, results, take, win, out, plan):
    # centers need the vectors, which workers drop; recompute the one realization
    r = results[int(opts.get("realization", 0))]
    interval = win(opts)
    fld = sample_potential(cube, plan.disorder.realization(r.index))
    spec = window(full_spectrum(assemble(cube, fld), vector_window=interval), interval)
    stretch = float(opts.get("stretch", 1.0))
    recs = []
    failed = 0
    for rec in spectrum_centers(spec):
        try:
            rec = replace(rec, decay=decay_fit(spec.vector(rec.index), rec.center, cube, stretch))
        except ValueError:
            failed += 1
        recs.append(rec)
    write_centers_csv(recs, out / "centers.csv")
    rates = [x.decay.rate for x in recs if x.decay is not None]
    return {
        "realization": r.index,
        "window": list(interval),
        "n": len(recs),
        "median_rate": float(np.median(rates)) if rates else float("nan"),
        "fit_failures": failed,
    }, ["centers.csv"]


def _stat_dls(config, opts, ids, cube, results, take, win, out, plan):
    interval = win(opts)
    step = StepFunction.pool(dls(r.spectrum, ids, interval, drop_edge=bool(opts.get("drop_edge", False))) for r in take(opts))
    x = _grid(opts)
    ref = np.exp(-x)
    _write_curve(out / "dls.csv", x, {"value": step(x), "reference": ref})
    d = sup_distance(step, lambda t: np.exp(-t), (0.0, float(x[-1])))
    return {"window": list(interval), "scale": cube.volume, "n": step.n, "sup_distance": d}, ["dls.csv"]


def _stat_dls_macroscopic(config, opts, ids, cube, results, take, win, out, plan):
    if "J" in opts:
        J = (float(opts["J"][0]), float(opts["J"][1]))
    else:
        J = ids_window(ids, config.window.E0, float(opts.get("J_mass", 0.3)))
    step = StepFunction.pool(dls_macroscopic(r.spectrum, ids, J, drop_edge=bool(opts.get("drop_edge", False))) for r in take(opts))
    x = _grid(opts)
    g = limit_g(ids, J, x)
    _write_curve(out / "dls_macroscopic.csv", x, {"value": step(x), "reference": g})
    d = sup_distance(step, lambda t: limit_g(ids, J, t), (0.0, float(x[-1])))
    d_exp = sup_distance(step, lambda t: np.exp(-t), (0.0, float(x[-1])))
    return {
        "window": list(J),
        "ids_mass": ids.mass(J),
        "scale": cube.volume,
        "n": step.n,
        "sup_distance": d,
        "sup_distance_exp": d_exp,
    }, ["dls_macroscopic.csv"]


def _stat_dcs(config, opts, ids, cube, results, take, win, out, plan):
    interval = win(opts)
    mass = ids.mass(interval)
    parts = []
    for r in take(opts):
        ev = r.spectrum.eigenvalues[r.center_indices]
        pos = r.centers[(ev >= interval[0]) & (ev <= interval[1])]
        if len(pos) >= 2:
            parts.append(dcs(pos, mass, cube))
    if not parts:
        raise ValueError("no realization has two centers in the window")
    step = StepFunction.pool(parts)
    x = _grid(opts, 3.0)
    ref = dcs_limit(x, cube.d)
    nn = poisson_nn_survival(x, cube.d)
    _write_curve(out / "dcs.csv", x, {"value": step(x), "reference": ref, "poisson_nn": nn})
    hi = float(x[-1])
    return {
        "window": list(interval),
        "ids_mass": mass,
        "scale": mass ** (1.0 / cube.d),
        "n": step.n,
        "sup_distance": sup_distance(step, lambda s: dcs_limit(s, cube.d), (0.0, hi)),
        "sup_distance_poisson_nn": sup_distance(step, lambda s: poisson_nn_survival(s, cube.d), (0.0, hi)),
    }, ["dcs.csv"]


def _unit_counts(points: np.ndarray, intervals) -> List[int]:
    return [int(np.count_nonzero((points >= a) & (points < b))) for a, b in intervals]


def _stat_poisson(config, opts, ids, cube, results, take, win, out, plan):
    intervals = [tuple(map(float, iv)) for iv in opts.get("intervals", [[-1.5, -0.5], [-0.5, 0.5], [0.5, 1.5]])]
    alpha = float(opts.get("alpha", 0.01))
    E0 = config.window.E0
    lo, hi = min(a for a, _ in intervals), max(b for _, b in intervals)
    rows, counts = [], []
    for r in take(opts):
        xi = unfold(r.spectrum, ids, E0, cube.volume).points
        c = _unit_counts(xi[(xi >= lo - 1) & (xi < hi + 1)], intervals)
        counts.append(c)
        rows.append([r.index] + c)
    counts = np.array(counts)
    lengths = [b - a for a, b in intervals]
    test = poisson_count_test(counts, lengths)
    _write_rows(out / "poisson_counts.csv", ["realization"] + [f"n{i}" for i in range(len(intervals))], rows)
    summary = {
        "intervals": [list(iv) for iv in intervals],
        "n": len(counts),
        "p_value": test.min_pvalue,
        "p_values": [t.pvalue for t in test.per_interval],
        "joint_p_value": None if test.joint is None else test.joint.pvalue,
        "passes": test.passes(alpha),
        "alpha": alpha,
    }
    if opts.get("control", True):
        # evenly spaced unfolded levels, randomly shifted per realization
        shift = uniform_stream(config.ensemble.master_seed, 7, len(counts))
        ctrl = np.array([_unit_counts(np.arange(lo - 2, hi + 2) + s, intervals) for s in shift])
        ct = poisson_count_test(ctrl, lengths)
        summary["control_p_value"] = ct.min_pvalue
        summary["control_p_values"] = [t.pvalue for t in ct.per_interval]
    return summary, ["poisson_counts.csv"]


def _stat_independence(config, opts, ids, cube, results, take, win, out, plan):
    sep = float(opts.get("separation", 50.0))
    length = float(opts.get("length", 1.0))
    E0 = config.window.E0
    N0 = float(ids.transform(E0))
    target = N0 + sep / cube.volume
    if target > 1:
        target = N0 - sep / cube.volume
    E1 = float(ids.inverse_transform(target))
    a, b = [], []
    for r in take(opts):
        for E, bucket in ((E0, a), (E1, b)):
            xi = unfold(r.spectrum, ids, E, cube.volume).points
            bucket.append(int(np.count_nonzero((xi >= -length / 2) & (xi < length / 2))))
    res = independence_test(a, b)
    _write_rows(out / "independence_counts.csv", ["realization", "n_E0", "n_E1"], zip([r.index for r in take(opts)], a, b))
    return {
        "E0": E0,
        "E1": E1,
        "separation": abs(float(ids.transform(E1)) - N0) * cube.volume,
        "n": len(a),
        "pearson_r": res.pearson_r,
        "p_value": res.pvalue,
    }, ["independence_counts.csv"]


def _stat_ldp(config, opts, ids, cube, results, take, win, out, plan):
    interval = win(opts)
    delta = float(opts.get("delta", 0.3))
    rs = take(opts)
    counts = [counting(r.spectrum, interval) for r in rs]
    mass = ids.mass(interval)
    frac = large_deviation_check(counts, mass, cube.volume, delta)
    _write_rows(out / "ldp_counts.csv", ["realization", "count"], zip([r.index for r in rs], counts))
    return {
        "window": list(interval),
        "expected": mass * cube.volume,
        "threshold": mass * cube.volume * np.log(cube.volume) ** (-delta),
        "delta": delta,
        "n": len(counts),
        "violation_fraction": frac,
    }, ["ldp_counts.csv"]


def _stat_wegner_minami(config, opts, ids, cube, results, take, win, out, plan):
    widths = [float(w) for w in opts.get("widths", [0.2, 0.1, 0.05])]
    rho = float(opts.get("rho", 1.0))
    E0 = config.window.E0
    rs = take(opts)
    rows = []
    for w in widths:
        J = (E0 - w / 2, E0 + w / 2)
        counts = [counting(r.spectrum, J) for r in rs]
        rows.append([w, wegner_estimator(counts, w, cube.volume), minami_estimator(counts, w, cube.volume, rho), ids.mass(J) / w])
    _write_rows(out / "wegner_minami.csv", ["width", "wegner", "minami", "ids_density"], rows)
    weg = np.array([r[1] for r in rows])
    mina = np.array([r[2] for r in rows])
    dens = np.array([r[3] for r in rows])
    return {
        "widths": widths,
        "rho": rho,
        "n": len(rs),
        "wegner": weg.tolist(),
        "minami": mina.tolist(),
        "ids_density": dens.tolist(),
        "wegner_spread": float(weg.max() / weg.min()) if weg.min() > 0 else float("inf"),
        "wegner_vs_ids": float(np.max(np.abs(weg / dens - 1))),
        "minami_spread": float(mina.max() / mina.min()) if mina.min() > 0 else float("inf"),
    }, ["wegner_minami.csv"]


def _pool_reports(reports) -> dict:
    matched = sum(r.n_matched for r in reports)
    eligible = sum(r.n_eligible for r in reports)
    big = sum(r.n_big for r in reports)
    dE = np.concatenate([r.dE for r in reports]) if reports else np.empty(0)
    dec = reports[0].decomposition
    return {
        "L": dec.L,
        "ell": dec.ell,
        "ell_prime": dec.ell_prime,
        "k": dec.k,
        "n_big": big,
        "n_eligible": eligible,
        "n_matched": matched,
        "matched_fraction": matched / eligible if eligible else float("nan"),
        "coverage": eligible / big if big else float("nan"),
        "overall_fraction": matched / big if big else float("nan"),
        "median_dE": float(np.median(dE)) if len(dE) else float("nan"),
        "max_dE": float(np.max(dE)) if len(dE) else float("nan"),
        "n_multi_cubes": sum(r.n_multi_cubes for r in reports),
        "n_unmatched": sum(len(r.unmatched) for r in reports),
        "n_borderline": sum(len(r.borderline) for r in reports),
        "asymptotic_bound": float(np.exp(-dec.ell_prime)),
    }


def _stat_two_scale(config, opts, ids, cube, results, take, win, out, plan):
    rs = take(opts)
    interval = win(opts)
    base = [r.two_scale[0] for r in rs]
    summary = {"window": list(interval), "tol": config.two_scale.tol, "n": len(rs), **_pool_reports(base)}
    rows = []
    for r in rs:
        for p in r.two_scale[0].pairs:
            rows.append([r.index, p.big_index, p.energy, p.cube, p.local_energy, p.dE])
    _write_rows(out / "two_scale_pairs.csv", ["realization", "big_index", "E", "cube", "E_local", "dE"], rows)
    if len(plan.two_scale) > 1:
        cmp = _pool_reports([r.two_scale[1] for r in rs])
        summary["compare"] = cmp
        summary["median_dE_decreases"] = bool(cmp["median_dE"] < summary["median_dE"])
    return summary, ["two_scale_pairs.csv"]


def _stat_bernoulli(config, opts, ids, cube, results, take, win, out, plan):
    rs = take(opts)
    dec, interval, _ = plan.bernoulli
    X = np.concatenate([r.bernoulli[0] for r in rs])
    multi = np.concatenate([r.bernoulli[1] for r in rs]) >= 2
    mass = ids.mass(interval)
    b = bernoulli_stats(X, mass, dec.ell, dec.d, multi)
    allowance = float(opts.get("allowance", 0.2))
    rows = [[r.index, j, int(x), int(n)] for r in rs for j, (x, n) in enumerate(zip(*r.bernoulli))]
    _write_rows(out / "bernoulli.csv", ["realization", "cube", "X", "n_in_window"], rows)
    return {
        "window": list(interval),
        "ell": dec.ell,
        "ell_prime": dec.ell_prime,
        "n": b.n,
        "p_hat": b.p_hat,
        "ci": [b.ci_low, b.ci_high],
        "expected": b.expected,
        "p_multi": b.p_multi,
        "allowance": allowance,
        "within": b.within(allowance),
    }, ["bernoulli.csv"]


_STATISTIC = {
    "spectrum": _stat_spectrum,
    "centers": _stat_centers,
    "dls": _stat_dls,
    "dls_macroscopic": _stat_dls_macroscopic,
    "dcs": _stat_dcs,
    "poisson": _stat_poisson,
    "independence": _stat_independence,
    "ldp": _stat_ldp,
    "wegner_minami": _stat_wegner_minami,
    "two_scale": _stat_two_scale,
    "bernoulli": _stat_bernoulli,
}
