"""Experiment runner: JSON config in, CSV + manifest out.

Every run writes one CSV (fixed column order per subcommand, floats with 17
significant digits) and a JSON manifest echoing the fully resolved config,
seed, package version and wall time. Identical config and seed produce
byte-identical CSVs regardless of worker count; parallelism only maps
realizations or grid points over a process pool with an ordered reduce.

Exit codes: 0 success, 1 config validation failure, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import __version__
from .backend import get_backend
from .util import rng_for, write_csv


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SubsystemModel(_Strict):
    kind: Literal["all", "random", "contiguous"] = "all"
    k: Optional[int] = Field(default=None, ge=1)


class CouplingModel(_Strict):
    kind: Literal["size", "hpr_projector"] = "size"
    g: float = math.pi
    subsystem: SubsystemModel = SubsystemModel()


class GridModel(_Strict):
    start: float
    stop: float
    num: int = Field(ge=1)

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


class RucSizeParams(_Strict):
    dimension: Literal[0, 1, 2]
    extent: Union[int, tuple[int, int]]
    depth: int = Field(ge=0)
    boundary: Literal["open", "periodic"] = "open"
    p: int = Field(default=1, ge=1)
    seed_site: Optional[int] = None
    subsystem: SubsystemModel = SubsystemModel()
    realizations: int = Field(default=20, ge=1)
    record_every: int = Field(default=1, ge=1)


class RucFidelityParams(_Strict):
    dimension: Literal[0, 1, 2]
    extent: Union[int, tuple[int, int]]
    depth: int = Field(ge=0)
    boundary: Literal["open", "periodic"] = "open"
    n: int = Field(default=1, ge=1)
    p: int = Field(default=1, ge=1)
    first_site: Optional[int] = None
    coupling: CouplingModel = CouplingModel()
    t: Union[int, list[int]]
    realizations: int = Field(default=20, ge=1)
    sampling: Union[Literal["exhaustive"], int] = "exhaustive"
    marginal: bool = False
    qu_draws: int = Field(default=100, ge=1)
    measured_qubit: int = Field(default=0, ge=0)


class CapacityParams(_Strict):
    k_list: list[int]
    n_sites: int = 10**6
    p: int = Field(default=101, ge=1)
    epsilon_th: float = Field(default=0.07, gt=0.0, lt=1.0)
    n_fracs: Optional[list[float]] = None
    n_grid: Optional[dict[int, list[int]]] = None
    t_below: int = Field(default=5, ge=0)
    t_above: int = Field(default=2, ge=0)
    realizations: int = Field(default=12, ge=2)
    qu_draws: int = Field(default=64, ge=1)


class SykCorrelatorParams(_Strict):
    n_fermions: int = Field(ge=1)
    q: int = Field(default=4, ge=4)
    p: int = Field(default=1, ge=1)
    j: float = Field(default=1.0, gt=0)
    beta: float = Field(default=0.0, ge=0)
    g: float = 0.0
    t: GridModel
    form: Literal["auto", "infinite", "leading", "full"] = "auto"


class SykWindingParams(_Strict):
    n_fermions: int = Field(ge=1)
    q: int = Field(default=4, ge=4)
    p: int = Field(default=1, ge=1)
    j: float = Field(default=1.0, gt=0)
    beta: float = Field(default=0.0, ge=0)
    g: float = 0.0
    t: float
    n_max: int = Field(ge=0)


class StringyParamsModel(_Strict):
    delta: float = Field(gt=0)
    epsilon_str: float = Field(ge=0.0, le=1.0)
    g_n: float
    a_eps: float = 1.0
    g: float
    t: GridModel


class BoundParams(_Strict):
    delta: float = Field(gt=0)
    x: float = Field(ge=0.0, lt=1.0)
    n_max: int = Field(ge=1)
    eta: GridModel
    beta_j: Optional[float] = Field(default=None, ge=0.0)


class OverlapOracleParams(_Strict):
    n: int = Field(ge=1)
    kind: Literal["overlap", "ksize"] = "overlap"
    r1: Optional[int] = None
    r2: Optional[int] = None
    s: Optional[int] = None
    k: Optional[int] = None
    samples: int = Field(default=100_000, ge=1)

    @model_validator(mode="after")
    def _check_kind_fields(self):
        if self.kind == "overlap" and (self.r1 is None or self.r2 is None):
            raise ValueError("overlap oracle requires r1 and r2")
        if self.kind == "ksize" and (self.s is None or self.k is None):
            raise ValueError("ksize oracle requires s and k")
        return self


_PARAM_MODELS = {
    "ruc-size": RucSizeParams,
    "ruc-fidelity": RucFidelityParams,
    "capacity": CapacityParams,
    "syk-correlator": SykCorrelatorParams,
    "syk-winding": SykWindingParams,
    "stringy": StringyParamsModel,
    "bound": BoundParams,
    "overlap-oracle": OverlapOracleParams,
}


class ExperimentConfig(_Strict):
    subcommand: Literal[
        "ruc-size",
        "ruc-fidelity",
        "capacity",
        "syk-correlator",
        "syk-winding",
        "stringy",
        "bound",
        "overlap-oracle",
    ]
    parameters: dict
    seed: int = Field(default=0, ge=0)
    workers: Union[int, Literal["auto"]] = 1
    output_path: Optional[str] = None


def _resolve_workers(cfg_workers, cli_workers) -> int:
    if cli_workers is not None:
        return cli_workers
    env = os.environ.get("PAULITEL_WORKERS")
    if env:
        return int(env)
    if cfg_workers == "auto":
        return os.cpu_count() or 1
    return int(cfg_workers)


def _spec_extent(params):
    return tuple(params.extent) if isinstance(params.extent, (list, tuple)) else params.extent


def _default_seed_site(params) -> int:
    if params.dimension == 1:
        return params.extent // 2
    if params.dimension == 2:
        lx, ly = _spec_extent(params)
        return (ly // 2) * lx + lx // 2
    return 0


def _subsystem(model: SubsystemModel):
    from .circuits import SubsystemSpec

    return SubsystemSpec(kind=model.kind, k=model.k)


def _run_ruc_size(params: RucSizeParams, seed, workers, out):
    from .circuits import CircuitSpec, OperatorSeed, size_trace

    spec = CircuitSpec(params.dimension, _spec_extent(params), params.depth, params.boundary, seed)
    site0 = params.seed_site if params.seed_site is not None else _default_seed_site(params)
    seedop = OperatorSeed(tuple(range(site0, site0 + params.p)))
    record = list(range(0, params.depth + 1, params.record_every))
    trace = size_trace(
        seedop, spec, _subsystem(params.subsystem), params.realizations, record, workers
    )
    trace.to_csv(out)
    return {"t_final_mean_size": float(trace.mean_size[-1])}


def _run_ruc_fidelity(params: RucFidelityParams, seed, workers, out):
    from .circuits import CircuitSpec
    from .fidelity import (
        CouplingSpec,
        default_blocks,
        epr_fidelity_encoded,
        marginal_fidelity,
        results_to_csv,
    )

    ts = params.t if isinstance(params.t, list) else [params.t]
    depth = max(ts)
    spec = CircuitSpec(params.dimension, _spec_extent(params), depth, params.boundary, seed)
    first = params.first_site if params.first_site is not None else _default_seed_site(params)
    blocks = default_blocks(params.n, params.p, start=first)
    coupling = CouplingSpec(
        params.coupling.kind, params.coupling.g, _subsystem(params.coupling.subsystem)
    )
    results = []
    for t in ts:
        if params.marginal:
            results.append(
                marginal_fidelity(
                    blocks,
                    spec,
                    coupling,
                    t,
                    params.measured_qubit,
                    params.realizations,
                    params.qu_draws,
                    workers,
                )
            )
        else:
            results.append(
                epr_fidelity_encoded(
                    blocks, spec, coupling, t, params.realizations, params.sampling, workers
                )
            )
    results_to_csv(out, results)
    return {"values": [r.value for r in results]}


def _run_capacity(params: CapacityParams, seed, workers, out):
    from .capacity import CapacitySweepSpec, capacity_sweep

    kwargs = dict(
        k_list=tuple(params.k_list),
        n_sites=params.n_sites,
        p=params.p,
        epsilon_th=params.epsilon_th,
        t_below=params.t_below,
        t_above=params.t_above,
        realizations=params.realizations,
        qu_draws=params.qu_draws,
        seed=seed,
    )
    if params.n_fracs is not None:
        kwargs["n_fracs"] = tuple(params.n_fracs)
    if params.n_grid is not None:
        kwargs["n_grid"] = params.n_grid
    sweep = CapacitySweepSpec(**kwargs)
    result = capacity_sweep(sweep, workers=workers)
    result.to_csv(out)
    summary = {
        "per_k": [
            {
                "K": r.k,
                "n_max": r.n_max,
                "slope": r.slope,
                "intercept": r.intercept,
                "t_opt": r.t_opt,
                "g_opt": r.g_opt,
                "unbounded_in_grid": r.unbounded_in_grid,
                "points": [
                    {
                        "n": p.n,
                        "t_opt": p.t_opt,
                        "g_opt": p.g_opt,
                        "f_opt": p.f_opt,
                        "f_err": p.f_err,
                    }
                    for p in r.points
                ],
            }
            for r in result.per_k
        ]
    }
    if sum(1 for r in result.per_k if not r.unbounded_in_grid) >= 2:
        slope, r2 = result.nmax_linearity()
        summary["nmax_vs_k_slope"] = slope
        summary["nmax_vs_k_r2"] = r2
    summary_path = os.path.splitext(out)[0] + "_summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2)
    return {"summary_path": summary_path}


def _syk_params(params, seed=None):
    from .syk import SykParams

    return SykParams(params.n_fermions, params.q, params.p, params.j, params.beta, params.g)


def _run_syk_correlator(params: SykCorrelatorParams, seed, workers, out):
    from .syk import correlator_scan_rows

    form = params.form
    if form == "auto":
        form = "infinite" if params.beta == 0.0 else "leading"
    rows = list(correlator_scan_rows(_syk_params(params), params.t.values(), form))
    write_csv(out, ("t", "re_c", "im_c", "abs_c", "arg_c"), rows)
    return {"form": form}


def _run_syk_winding(params: SykWindingParams, seed, workers, out):
    from .syk import winding_distribution

    dist = winding_distribution(_syk_params(params), params.t, params.n_max)
    dist.to_csv(out)
    info = {
        "gamma": dist.gamma,
        "two_alpha": dist.two_alpha,
        "tail_mass": dist.tail_mass,
        "truncation_ok": dist.truncation_ok,
    }
    if not dist.truncation_ok:
        info["warning"] = "truncated tail mass exceeds tolerance; increase n_max"
    return info


def _run_stringy(params: StringyParamsModel, seed, workers, out):
    from .syk import StringyParams, stringy_correlator

    rows = []
    for t in params.t.values():
        sp = StringyParams(params.delta, params.epsilon_str, params.g_n, params.g, t, params.a_eps)
        c = stringy_correlator(sp)
        rows.append((t, c.real, c.imag, abs(c), math.atan2(c.imag, c.real)))
    write_csv(out, ("t", "re_c", "im_c", "abs_c", "arg_c"), rows)
    return {}


def _run_bound(params: BoundParams, seed, workers, out):
    from .analytics import peak_bound, peak_bound_vs_gbeta, syk_size_pmf

    dist = syk_size_pmf(params.delta, params.x, params.n_max)
    res = peak_bound(dist, math.pi, dist.mean(), params.eta.values())
    res.curve_to_csv(out)
    info = {
        "min_b": res.b,
        "eta_star": res.eta_star,
        "w_epsilon": res.w_epsilon,
        "epsilon": res.epsilon,
    }
    if params.beta_j is not None:
        cmp = peak_bound_vs_gbeta(
            params.delta, params.x, params.beta_j, params.n_max, params.eta.values()
        )
        info.update(
            g_beta=cmp["g_beta"],
            log_g_beta=cmp["log_g_beta"],
            bound_inconclusive=cmp["bound_inconclusive"],
        )
    return info


def _run_overlap_oracle(params: OverlapOracleParams, seed, workers, out):
    from . import analytics
    from .pauli import k_size, overlap, random_pauli_of_size, SiteSet
    from .util import subset_sites

    rng = rng_for(seed, 0xFACE)
    if params.kind == "overlap":
        if params.r1 is None or params.r2 is None:
            raise ValueError("overlap oracle requires r1 and r2")
        dist = analytics.overlap_pmf(params.n, params.r1, params.r2)
        values = dist.p_values
        pmf = dist.pmf
        counts = np.zeros(len(values), dtype=np.int64)
        lo = int(values[0])
        for _ in range(params.samples):
            p1 = random_pauli_of_size(params.r1, params.n, rng)
            p2 = random_pauli_of_size(params.r2, params.n, rng)
            counts[overlap(p1, p2) - lo] += 1
    else:
        if params.s is None or params.k is None:
            raise ValueError("ksize oracle requires s and k")
        dist = analytics.ksize_pmf(params.n, params.s, params.k)
        values = dist.values.astype(np.int64)
        pmf = dist.pmf
        counts = np.zeros(len(values), dtype=np.int64)
        lo = int(values[0])
        for _ in range(params.samples):
            p1 = random_pauli_of_size(params.s, params.n, rng)
            c = SiteSet(frozenset(int(x) for x in subset_sites(params.n, params.k, rng)))
            counts[k_size(p1, c) - lo] += 1
    empirical = counts / params.samples
    write_csv(out, ("value", "pmf", "empirical"), zip(values, pmf, empirical))
    tv = 0.5 * float(np.abs(pmf - empirical).sum())
    return {"total_variation": tv, "samples": params.samples}


_RUNNERS = {
    "ruc-size": _run_ruc_size,
    "ruc-fidelity": _run_ruc_fidelity,
    "capacity": _run_capacity,
    "syk-correlator": _run_syk_correlator,
    "syk-winding": _run_syk_winding,
    "stringy": _run_stringy,
    "bound": _run_bound,
    "overlap-oracle": _run_overlap_oracle,
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="paulitel", description=__doc__)
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--seed", type=int, default=None, help="override config seed")
    ap.add_argument("--workers", type=int, default=None, help="override worker count")
    ap.add_argument("--out", default=None, help="override output CSV path")
    args = ap.parse_args(argv)

    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        cfg = ExperimentConfig.model_validate(raw)
        params = _PARAM_MODELS[cfg.subcommand].model_validate(cfg.parameters)
    except ValidationError as exc:
        for err in exc.errors():
            loc = ".".join(str(x) for x in err["loc"])
            print(f"config error at {loc or '<root>'}: {err['msg']}", file=sys.stderr)
        return 1

    seed = args.seed if args.seed is not None else cfg.seed
    workers = _resolve_workers(cfg.workers, args.workers)
    out = args.out or cfg.output_path or f"{cfg.subcommand}.csv"

    t0 = time.perf_counter()
    from .syk import NumericalFailure

    try:
        extra = _RUNNERS[cfg.subcommand](params, seed, workers, out)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    wall = time.perf_counter() - t0

    manifest = {
        "config": {
            "subcommand": cfg.subcommand,
            "parameters": params.model_dump(),
            "seed": seed,
            "workers": workers,
            "output_path": out,
        },
        "version": __version__,
        "backend": get_backend(),
        "wall_time_s": wall,
        "outputs": [out],
        "info": extra,
    }
    with open(out + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=float)
    return 0


if __name__ == "__main__":
    sys.exit(main())
