"""Scenario runner and command-line interface.

Each scenario sweeps a grid, draws `samples` random instances per grid point
with a per-point derived seed (seed XOR point index), and emits one
ResultRecord per point.  Records serialize to JSON
({scenario, inputs, measurements, assertions, seconds}) or to CSV with one
row per record.  Exit code 0 iff every hard assertion passes; assertions
whose name starts with "finding:" are informational and never fail the run.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .matcore import dagger, haar_unitary, op_norm, random_contraction
from .groups import (
    FiniteGroup,
    GroupAlgElement,
    GroupFunction,
    GroupRep,
    bg_norm,
    bg_norm_fourier_abelian,
    cstar_norm,
    herz_schur_norm,
    make_group,
    regular_rep,
    ub_rep_twist,
    word_diameter,
)
from .similarity import dixmier_unitarize, hom_cb_norm, random_similarity, sim_min
from .factorization import (
    amenable_certificate,
    aconv_gauge,
    bp_gauge,
    ell1_group_algebra,
    verify_certificate,
    weyl_twirl_certificate,
)
from .opspace import _span_ratio_ascent, cb_norm_subspace, row_inequality_check

SCENARIOS = (
    "dixmier-sweep",
    "bozejko-equality",
    "twirl-certificate",
    "amenable-certificate",
    "tensor-power",
    "triangular-AE",
    "nuclear-upper",
    "bp-gauge",
    "aconv-gauge",
    "row-inequality",
)

DEFAULT_GRIDS = {
    "dixmier-sweep": [1.0, 2.0, 4.0],
    "bozejko-equality": [0.0],
    "twirl-certificate": [2.0, 3.0],
    "amenable-certificate": [0.0],
    "tensor-power": [1.0, 2.0],
    "triangular-AE": [2.0, 3.0],
    "nuclear-upper": [2.0, 3.0],
    "bp-gauge": [1.0, 2.0],
    "aconv-gauge": [1.0, 2.0],
    "row-inequality": [2.0, 3.0],
}


@dataclass
class ExperimentConfig:
    scenario: str
    group: str = "cyclic:2"
    grid: list[float] = field(default_factory=list)
    samples: int = 5
    seed: int = 0
    out: str | None = None
    format: str = "json"
    jobs: int = 1

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if not self.grid:
            self.grid = list(DEFAULT_GRIDS[self.scenario])
        if not self.grid:
            raise ValueError("grid must be nonempty")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass
class ResultRecord:
    scenario: str
    point: float
    inputs: dict
    measurements: dict
    assertions: list[dict]
    seconds: float

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "inputs": {"point": self.point, **self.inputs},
            "measurements": self.measurements,
            "assertions": self.assertions,
            "seconds": self.seconds,
        }

    @property
    def hard_pass(self) -> bool:
        return all(
            a["pass"] for a in self.assertions if not a["name"].startswith("finding:")
        )


def _assert_le(name: str, lhs: float, rhs: float) -> dict:
    lhs, rhs = float(lhs), float(rhs)
    return {"name": name, "lhs": lhs, "rhs": rhs, "pass": lhs <= rhs, "margin": rhs - lhs}


def _assert_eq_flag(name: str, lhs: bool, rhs: bool) -> dict:
    return {
        "name": name,
        "lhs": float(lhs),
        "rhs": float(rhs),
        "pass": lhs == rhs,
        "margin": 0.0,
    }


# ---------------------------------------------------------------------------
# scenario bodies: (group, point, samples, rng) -> (measurements, assertions)


def _scn_dixmier_sweep(group, point, samples, rng):
    cond0 = max(float(point), 1.0)
    rho = regular_rep(group)
    max_sim = max_pi = max_cond = 1.0
    max_unit_err = 0.0
    for _ in range(samples):
        s0 = random_similarity(group.order, cond0, rng)
        u = haar_unitary(group.order, rng)
        base = GroupRep(group, [dagger(u) @ m @ u for m in rho.images])
        pi = ub_rep_twist(base, s0)
        s, cond = dixmier_unitarize(pi)
        sinv = s.power(-1.0)
        for m in pi.images:
            c = sinv @ m @ s.matrix
            max_unit_err = max(max_unit_err, op_norm(c @ dagger(c) - np.eye(group.order)))
        sim = sim_min(pi, 1e-4)
        max_sim, max_pi, max_cond = max(max_sim, sim), max(max_pi, pi.pi_sup), max(max_cond, cond)
    meas = {
        "max_sim": max_sim,
        "max_pi": max_pi,
        "max_dixmier_cond": max_cond,
        "max_unitarity_error": max_unit_err,
    }
    checks = [
        _assert_le("unitarizer-unitary", max_unit_err, 1e-8),
        _assert_le("dixmier-cond-le-pi-squared", max_cond, max_pi**2 * (1 + 1e-6)),
        _assert_le("sim-le-pi-squared", max_sim, max_pi**2 * (1 + 1e-8)),
    ]
    return meas, checks


def _scn_bozejko(group, point, samples, rng):
    abelian = group.is_abelian()
    max_gap = 0.0
    max_fourier_gap = 0.0
    for _ in range(samples):
        f = GroupFunction(
            group,
            rng.standard_normal(group.order) + 1j * rng.standard_normal(group.order),
        )
        b = bg_norm(f)
        m0 = herz_schur_norm(f)
        max_gap = max(max_gap, abs(m0 - b) / b)
        if abelian:
            fo = bg_norm_fourier_abelian(f)
            max_fourier_gap = max(max_fourier_gap, abs(b - fo) / fo, abs(m0 - fo) / fo)
    meas = {"max_relative_gap": max_gap, "max_fourier_gap": max_fourier_gap}
    checks = [_assert_le("herz-schur-equals-bg", max_gap, 1e-5)]
    if abelian:
        checks.append(_assert_le("fourier-oracle-agreement", max_fourier_gap, 1e-5))
    return meas, checks


def _scn_twirl(group, point, samples, rng):
    n = max(int(point), 1)
    max_res = 0.0
    max_excess = -math.inf
    for _ in range(samples):
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        cert = weyl_twirl_certificate(x)
        res, bound = verify_certificate(cert, x)
        max_res = max(max_res, res)
        max_excess = max(max_excess, bound - op_norm(x) * (1 + 1e-10))
    meas = {"max_residual": max_res, "max_bound_excess": max_excess}
    checks = [
        _assert_le("twirl-residual", max_res, 1e-10),
        _assert_le("twirl-bound-le-norm", max_excess, 0.0),
    ]
    return meas, checks


def _scn_amenable(group, point, samples, rng):
    max_res = 0.0
    max_bound = 0.0
    max_a2_gap = 0.0
    for _ in range(samples):
        coeffs = {
            t: rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            for t in range(group.order)
        }
        x = GroupAlgElement(group, 2, coeffs)
        x = x.scale(0.9 / cstar_norm(x))
        cert = amenable_certificate(group, x)
        res, bound = verify_certificate(cert, x)
        max_res = max(max_res, res)
        max_bound = max(max_bound, bound)
        max_a2_gap = max(max_a2_gap, abs(cert.a2_norm - cert.y_cstar))
    meas = {"max_residual": max_res, "max_bound": max_bound, "max_a2_gap": max_a2_gap}
    checks = [
        _assert_le("amenable-residual", max_res, 1e-10),
        _assert_le("amenable-bound-lt-1", max_bound, 1.0 - 1e-12),
        _assert_le("a2-equals-cstar-y", max_a2_gap, 1e-10),
    ]
    return meas, checks


def _tensor_rep(base: GroupRep, nfac: int) -> tuple[FiniteGroup, GroupRep]:
    spec = ("prod", [("cyclic", base.group.order)] * nfac) if nfac > 1 else None
    if nfac == 1:
        return base.group, base
    prod = make_group(spec)
    dims = [base.group.order] * nfac
    images = []
    for idx in range(prod.order):
        rem, tup = idx, []
        for d in reversed(dims):
            tup.append(rem % d)
            rem //= d
        tup.reverse()
        m = base.images[tup[0]]
        for t in tup[1:]:
            m = np.kron(m, base.images[t])
        images.append(m)
    return prod, GroupRep(prod, images)


def _scn_tensor_power(group, point, samples, rng):
    nfac = max(int(point), 1)
    if not group.is_abelian() or not group.name.startswith("cyclic:"):
        raise ValueError("tensor-power expects a cyclic base group")
    rho = regular_rep(group)
    max_rel = 0.0
    max_edge_excess = -math.inf
    for _ in range(samples):
        s0 = random_similarity(group.order, 2.0, rng)
        u = ub_rep_twist(rho, s0)
        prod_group, pi = _tensor_rep(u, nfac)
        ucb = sim_min(u, 1e-5)
        picb = sim_min(pi, 1e-5)
        max_rel = max(max_rel, abs(picb - ucb**nfac) / ucb**nfac)
        # restriction to the span of the unit and the embedded generators
        lam = regular_rep(prod_group)
        elems = [prod_group.identity] + list(prod_group.generators)
        basis = [lam.images[g] for g in elems]
        images = [pi.images[g] for g in elems]
        ratio = _span_ratio_ascent(basis, images, restarts=4, seed=rng.integers(2**32))
        c = max(op_norm(u.images[g]) for g in group.generators)
        max_edge_excess = max(max_edge_excess, ratio - (1 + 2 * nfac * c) * (1 + 1e-6))
    meas = {"max_cb_multiplicativity_gap": max_rel, "max_restriction_excess": max_edge_excess}
    checks = [
        _assert_le("cb-tensor-multiplicativity", max_rel, 1e-3),
        _assert_le("restriction-le-1-plus-2Nc", max_edge_excess, 0.0),
    ]
    return meas, checks


def _scn_triangular(group, point, samples, rng):
    r = max(int(point), 2)
    v = np.zeros((2, 2), dtype=complex)
    v[0, 1] = 1.0
    max_ratio = 0.0
    max_norm_excess = -math.inf
    for _ in range(samples):
        x = rng.standard_normal(r) + 1j * rng.standard_normal(r)
        y = rng.standard_normal(r) + 1j * rng.standard_normal(r)
        y -= (np.vdot(x, y) / np.vdot(x, x)) * x  # y* x = 0 so W^2 = 0
        w = np.outer(x, np.conj(y))
        w *= rng.uniform(0.3, 2.0) / op_norm(w)
        cb = cb_norm_subspace([(np.eye(2), np.eye(r)), (v, w)], 2, r)
        plain = _span_ratio_ascent(
            [np.eye(2), v], [np.eye(r), w], restarts=6, seed=rng.integers(2**32)
        )
        max_ratio = max(max_ratio, cb / plain)
        max_norm_excess = max(max_norm_excess, plain - cb * (1 + 1e-6))
    meas = {"max_cb_to_norm_ratio": max_ratio, "max_norm_excess": max_norm_excess}
    checks = [
        _assert_le("norm-le-cb", max_norm_excess, 0.0),
        _assert_le("finding:cb-to-norm-ratio-bounded", max_ratio, 2.0),
    ]
    return meas, checks


def _scn_nuclear_upper(group, point, samples, rng):
    d = max(int(point), 2)
    best_constant = 0.0
    max_norm_excess = -math.inf
    for _ in range(samples):
        t = random_similarity(d, float(rng.uniform(1.5, 4.0)), rng)
        tinv = np.linalg.inv(t)
        qs = [tinv @ np.diag(np.eye(d)[i]) @ t for i in range(d)]
        cb = hom_cb_norm(qs, cross_check=False)["value"]
        plain = 0.0
        for _ in range(60):
            f = np.exp(2j * np.pi * rng.uniform(size=d))
            plain = max(plain, op_norm(sum(fi * q for fi, q in zip(f, qs))))
        best_constant = max(best_constant, cb / plain**2)
        max_norm_excess = max(max_norm_excess, plain - cb * (1 + 1e-6))
    meas = {"best_cb_over_norm_sq": best_constant, "max_norm_excess": max_norm_excess}
    checks = [
        _assert_le("norm-le-cb", max_norm_excess, 0.0),
        _assert_le("finding:cb-le-norm-squared", best_constant, 1.0 + 1e-6),
    ]
    return meas, checks


def _scn_bp_gauge(group, point, samples, rng):
    d = max(int(point), 1)
    max_monotone_excess = -math.inf
    max_res = 0.0
    for _ in range(samples):
        letters = [0.8 * random_contraction((2, 2), rng) for _ in range(2)]
        x = (
            0.4 * letters[0] @ letters[1]
            + rng.standard_normal() * 0.3 * letters[0]
            + 0.2 * np.eye(2)
        ) if d >= 2 else (rng.standard_normal() * letters[0] + 0.2 * np.eye(2))
        g_d, cert = bp_gauge(x, letters, d)
        g_next, _ = bp_gauge(x, letters, d + 1)
        max_monotone_excess = max(max_monotone_excess, g_next - g_d - 1e-9)
        if cert is not None:
            res, _ = verify_certificate(cert, x)
            max_res = max(max_res, res)
    meas = {"max_monotone_excess": max_monotone_excess, "max_certificate_residual": max_res}
    checks = [
        _assert_le("gauge-monotone-in-length", max_monotone_excess, 0.0),
        _assert_le("certificate-residual", max_res, 1e-8),
    ]
    return meas, checks


def _scn_aconv_gauge(group, point, samples, rng):
    d = max(int(point), 1)
    algebra = ell1_group_algebra(group)
    gen = group.generators[0] if group.generators else 0
    beta = []
    for idx in (0, gen):
        e = np.zeros(group.order, dtype=complex)
        e[idx] = 1.0
        beta.append(e)
    diam = word_diameter(group, [0, gen])
    val = aconv_gauge(algebra, beta, d, directions=8, seed=int(rng.integers(2**32)),
                      refine_steps=5)
    meas = {"gauge": val if math.isfinite(val) else -1.0, "diameter": float(diam)}
    checks = [
        _assert_eq_flag("finite-iff-diameter", math.isfinite(val), d >= diam),
    ]
    if math.isfinite(val):
        if group.name.startswith("cyclic:"):
            checks.append(_assert_le("cyclic-gauge-is-1", abs(val - 1.0), 1e-6))
        else:
            checks.append(_assert_le("gauge-ge-1", 1.0 - 1e-6, val))
    return meas, checks


def _scn_row_inequality(group, point, samples, rng):
    n = max(int(point), 2)
    units = []
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1.0
            units.append(e)
    max_excess = -math.inf
    for _ in range(samples):
        t = random_similarity(n, float(rng.uniform(1.2, 3.0)), rng)
        tinv = np.linalg.inv(t)
        images = [tinv @ e @ t for e in units]
        xs = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for _ in range(3)]
        lhs, rhs = row_inequality_check(units, images, xs, seed=int(rng.integers(2**32)))
        max_excess = max(max_excess, lhs - rhs * (1 + 1e-8))
    meas = {"max_excess": max_excess}
    checks = [_assert_le("row-inequality", max_excess, 0.0)]
    return meas, checks


_SCENARIO_FNS = {
    "dixmier-sweep": _scn_dixmier_sweep,
    "bozejko-equality": _scn_bozejko,
    "twirl-certificate": _scn_twirl,
    "amenable-certificate": _scn_amenable,
    "tensor-power": _scn_tensor_power,
    "triangular-AE": _scn_triangular,
    "nuclear-upper": _scn_nuclear_upper,
    "bp-gauge": _scn_bp_gauge,
    "aconv-gauge": _scn_aconv_gauge,
    "row-inequality": _scn_row_inequality,
}


def _run_point(config: ExperimentConfig, index: int, point: float) -> ResultRecord:
    start = time.perf_counter()
    inputs = {
        "group": config.group,
        "samples": config.samples,
        "seed": config.seed,
        "point_seed": config.seed ^ index,
    }
    try:
        group = make_group(config.group)
        rng = np.random.default_rng(config.seed ^ index)
        meas, checks = _SCENARIO_FNS[config.scenario](group, point, config.samples, rng)
    except Exception as exc:  # error recorded per-record, run continues
        meas = {}
        checks = [
            {
                "name": f"module-error:{type(exc).__name__}",
                "lhs": 1.0,
                "rhs": 0.0,
                "pass": False,
                "margin": -1.0,
                "detail": str(exc),
            }
        ]
    return ResultRecord(
        scenario=config.scenario,
        point=float(point),
        inputs=inputs,
        measurements=meas,
        assertions=checks,
        seconds=time.perf_counter() - start,
    )


def run_scenario(config: ExperimentConfig) -> list[ResultRecord]:
    """Runs all grid points (in parallel when jobs > 1) and returns records
    in stable (scenario, point index) order."""
    points = list(enumerate(config.grid))
    if config.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=config.jobs) as pool:
            futures = {pool.submit(_run_point, config, i, p): i for i, p in points}
            done = {futures[f]: f.result() for f in concurrent.futures.as_completed(futures)}
        return [done[i] for i, _ in points]
    return [_run_point(config, i, p) for i, p in points]


CSV_COLUMNS = ["scenario", "point", "inputs", "measurements", "assertions", "all_pass", "seconds"]


def report(records: list[ResultRecord], fmt: str, path: str) -> None:
    """CSV: one row per record, stable column order, nested fields JSON-encoded.
    JSON: a list of record dicts in the documented schema."""
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump([r.to_dict() for r in records], fh, indent=2)
            fh.write("\n")
        return
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in records:
                writer.writerow(
                    [
                        r.scenario,
                        r.point,
                        json.dumps(r.inputs, sort_keys=True),
                        json.dumps(r.measurements, sort_keys=True),
                        json.dumps(r.assertions, sort_keys=True),
                        int(r.hard_pass),
                        f"{r.seconds:.6f}",
                    ]
                )
        return
    raise ValueError(f"unknown format {fmt!r}")


def _load_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip().strip('"')
    return out


def build_config(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        raw.update(_load_config_file(args.config))
    if args.group is not None:
        raw["group"] = args.group
    if args.grid is not None:
        raw["grid"] = args.grid
    if args.samples is not None:
        raw["samples"] = args.samples
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["out"] = args.out
    if args.format is not None:
        raw["format"] = args.format
    if args.jobs is not None:
        raw["jobs"] = args.jobs
    grid = raw.get("grid")
    if isinstance(grid, str):
        grid = [float(x) for x in grid.split(",") if x.strip()]
    return ExperimentConfig(
        scenario=args.scenario,
        group=str(raw.get("group", "cyclic:2")),
        grid=grid or [],
        samples=int(raw.get("samples", 5)),
        seed=int(raw.get("seed", 0)),
        out=raw.get("out"),
        format=str(raw.get("format", "json")),
        jobs=int(raw.get("jobs", 1)),
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="simdeg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario sweep")
    run.add_argument("scenario", choices=SCENARIOS)
    run.add_argument("--group", default=None, help="group spec, e.g. cyclic:8, dihedral:4, sym:3, prod:cyclic:2,cyclic:2")
    run.add_argument("--grid", default=None, help="comma-separated grid values")
    run.add_argument("--samples", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None)
    run.add_argument("--format", choices=("csv", "json"), default=None)
    run.add_argument("--jobs", type=int, default=None)
    run.add_argument("--config", default=None, help="key=value config file; flags override")
    args = parser.parse_args(argv)

    config = build_config(args)
    records = run_scenario(config)
    if config.out:
        report(records, config.format, config.out)
    all_pass = True
    for r in records:
        status = "PASS" if r.hard_pass else "FAIL"
        all_pass &= r.hard_pass
        print(f"[{status}] {r.scenario} point={r.point:g} "
              f"assertions={sum(a['pass'] for a in r.assertions)}/{len(r.assertions)} "
              f"({r.seconds:.2f}s)")
        for a in r.assertions:
            if not a["pass"] and not a["name"].startswith("finding:"):
                print(f"    failed: {a['name']} lhs={a['lhs']:.6g} rhs={a['rhs']:.6g}")
    return 0 if all_pass else 1


if __name__ == "__main__":
    sys.exit(main())
