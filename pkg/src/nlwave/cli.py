"""Batch entry point: ``nlw <config> [--output DIR] [--workers N] [--seed-override S]``."""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .attractor import Ensemble, absorbing_experiment, integrate_members, pairwise_decay, sample_ball
from .config import RunConfig, parse_config
from .diagnostics import bootstrap_check, fit_bootstrap_constants, split_vw, strichartz_series
from .errors import BlowUpError, ConfigError, NLWError
from .inequalities import estimate_constant, interpolation_batch, small_data_lemma
from .integrator import IntegratorConfig, integrate
from .io import sha256_file, write_json, write_series_csv, write_snapshot
from .model import ModelSpec
from .spectral import Grid, SpectralField, State

__all__ = ["RunManifest", "build_model", "initial_states", "run", "main"]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

MONOTONE_DIMS = (1, 8, 64)
MONOTONE_EXPONENTS = (2.0, 2.5, 3.0, 4.0)
INTERPOLATION_FIELDS = 1000


@dataclass
class RunManifest:
    config: dict
    version: str
    started: str
    finished: str | None = None
    seeds: dict = field(default_factory=dict)
    files: list[dict] = field(default_factory=list)
    status: str = "running"
    error: dict | None = None

    def checksums(self) -> dict[str, str]:
        return {f["path"]: f["sha256"] for f in self.files}

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def build_model(cfg: RunConfig) -> tuple[ModelSpec, IntegratorConfig]:
    grid = Grid(cfg.dim, cfg.n_modes, cfg.n_quad)
    g = cfg.g
    if g.kind == "zero":
        gf = SpectralField.zeros(grid)
    elif g.kind == "single_mode":
        gf = SpectralField.single_mode(grid, g.args["index"], g.args["amplitude"])
    else:
        c = np.random.default_rng(g.args["seed"]).standard_normal(grid.shape)
        gf = SpectralField(grid, c * (g.args["norm"] / np.linalg.norm(c)))
    spec = ModelSpec.create(grid, a=cfg.a, b=cfg.b, q=cfg.q, k=cfg.k, p=cfg.p, g=gf)
    return spec, IntegratorConfig(cfg.dt, cfg.scheme, cfg.record_every)


def initial_states(cfg: RunConfig, grid: Grid) -> list[State]:
    init = cfg.init
    if init.kind == "zero":
        return [State.zeros(grid)]
    if init.kind == "single_mode":
        idx = init.args["index"]
        return [
            State(
                SpectralField.single_mode(grid, idx, init.args["a"]),
                SpectralField.single_mode(grid, idx, init.args["adot"]),
            )
        ]
    a = init.args
    return sample_ball(grid, a["R"], a["count"], a["seed"], a["mode_cutoff"])


class _Writer:
    """Serializes output files and records each in the manifest."""

    def __init__(self, root: Path, manifest: RunManifest):
        self.root = root
        self.manifest = manifest

    def _add(self, name: str) -> None:
        path = self.root / name
        self.manifest.files.append(
            {"path": name, "sha256": sha256_file(path), "bytes": path.stat().st_size}
        )

    def series(self, name, rec):
        write_series_csv(self.root / name, rec)
        self._add(name)

    def snapshot(self, name, xi, t):
        write_snapshot(self.root / name, xi, t)
        self._add(name)

    def json(self, name, obj):
        write_json(self.root / name, obj)
        self._add(name)

    def table(self, name, header, columns):
        data = np.column_stack(columns)
        with open(self.root / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            np.savetxt(fh, data, fmt="%.17g", delimiter=",")
        self._add(name)


def _write_members(out: _Writer, recs, mode: str) -> None:
    for i, rec in enumerate(recs):
        out.series(f"series_{i:03d}.csv", rec)
        if mode == "final" and rec.has_snapshots:
            out.snapshot(f"snap_{i:03d}_final.nlws", rec.state(-1), rec.times[-1])
        elif mode == "all" and rec.has_snapshots:
            for j, t in enumerate(rec.times):
                out.snapshot(f"snap_{i:03d}_{j:06d}.nlws", rec.state(j), t)


def _simulate(cfg, spec, icfg, out, workers):
    states = initial_states(cfg, spec.grid)
    ens = Ensemble(spec, icfg, states, 0, 0.0)
    recs = integrate_members(ens, cfg.t_end, snapshots=cfg.snapshots != "none", workers=workers)
    _write_members(out, recs, cfg.snapshots)
    out.json(
        "report.json",
        {
            "members": [
                {
                    "E_initial": rec.E_total[0],
                    "E_final": rec.E_total[-1],
                    "max_abs_residual": float(np.max(np.abs(rec.residual))),
                }
                for rec in recs
            ]
        },
    )


def _ensemble(cfg, spec, icfg, out, workers):
    a = cfg.init.args
    ens = Ensemble.sample(spec, icfg, a["R"], a["count"], a["seed"], a["mode_cutoff"])
    recs = integrate_members(ens, cfg.t_end, workers=workers)
    report = absorbing_experiment(ens, cfg.rho, cfg.t_end, records=recs)
    _write_members(out, recs, "none")
    out.table("sup_norm.csv", ("t", "sup_norm"), (report.times, report.sup_norm_series))
    out.json("report.json", {"R": a["R"], **report.as_dict()})


def _decay_fit(cfg, spec, icfg, out, workers):
    a = cfg.init.args
    ens = Ensemble.sample(spec, icfg, a["R"], a["count"], a["seed"], a["mode_cutoff"])
    fe = cfg.t_end if cfg.fit_end is None else cfg.fit_end
    fs = fe / 10 if cfg.fit_start is None else cfg.fit_start
    report = pairwise_decay(ens, cfg.t_end, (fs, fe), workers=workers)
    pairs = sorted(report.pairwise)
    out.table(
        "pairwise.csv",
        ["t"] + [f"E_z_{i}_{j}" for i, j in pairs],
        [report.times] + [report.pairwise[p] for p in pairs],
    )
    out.json("report.json", report.as_dict())


def _check_inequalities(cfg, spec, icfg, out, workers):
    mono = [
        estimate_constant(d, e, cfg.check_samples, cfg.check_seed).as_dict()
        for d in MONOTONE_DIMS
        for e in MONOTONE_EXPONENTS
    ]
    slacks = interpolation_batch(spec.grid, INTERPOLATION_FIELDS, cfg.check_seed)
    s = np.linspace(0.0, 1.0, 101)
    lemma_cases = {
        "zero": small_data_lemma(s, np.zeros_like(s), 4.0, 1.0, 0.2),
        "identity_C0_0.1_eps_0.3": small_data_lemma(s, s, 2.0, 0.1, 0.3),
        "constant_half_eps": small_data_lemma(s, np.where(s > 0, 0.1, 0.0), 4.0, 1.0, 0.2),
    }
    out.json(
        "report.json",
        {
            "monotonicity": mono,
            "interpolation": {
                "n_fields": INTERPOLATION_FIELDS,
                "min_slack": float(slacks.min()),
                "n_below_tolerance": int(np.count_nonzero(slacks < -1e-8)),
            },
            "small_data": {
                name: {"verdict": v.verdict.value, "at": v.at} for name, v in lemma_cases.items()
            },
        },
    )


def _strichartz(cfg, spec, icfg, out, workers):
    xi0 = initial_states(cfg, spec.grid)[0]
    rec = integrate(xi0, spec, icfg, cfg.t_end, snapshots=True)
    v_rec, w_rec = split_vw(rec)
    Yu, Yv, Yw = (strichartz_series(r) for r in (rec, v_rec, w_rec))
    eps, c0 = fit_bootstrap_constants(Yw)
    verdict = bootstrap_check(Yw, eps, c0)
    out.series("series_000.csv", rec)
    out.table("strichartz.csv", ("t", "Y_u", "Y_v", "Y_w"), (Yu.times, Yu.Y, Yv.Y, Yw.Y))
    out.json(
        "report.json",
        {
            "Y_u": Yu.Y[-1],
            "Y_v": Yv.Y[-1],
            "Y_w": Yw.Y[-1],
            "Y_w_monotone": Yw.is_monotone(),
            "bootstrap": {"eps": eps, "C0": c0, "verdict": verdict.verdict.value, "at": verdict.at},
        },
    )


_DISPATCH = {
    "simulate": _simulate,
    "ensemble": _ensemble,
    "decay_fit": _decay_fit,
    "check_inequalities": _check_inequalities,
    "strichartz": _strichartz,
}


def _clear_previous(root: Path) -> None:
    """Remove files listed by a previous manifest in ``root``."""
    old = root / "manifest.json"
    if not old.exists():
        return
    try:
        entries = json.loads(old.read_text(encoding="utf-8")).get("files", [])
    except (ValueError, AttributeError):
        entries = []
    for entry in entries:
        target = (root / entry.get("path", "")).resolve()
        if target.parent == root.resolve() and target.is_file():
            target.unlink()
    old.unlink()


def run(cfg: RunConfig, workers: int = 1) -> RunManifest:
    """Execute one configured experiment and write its manifest.

    Any computation error is recorded in the manifest and re-raised.
    """
    root = Path(cfg.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    _clear_previous(root)
    manifest = RunManifest(cfg.echo(), __version__, _now(), seeds=cfg.seeds())
    out = _Writer(root, manifest)
    try:
        spec, icfg = build_model(cfg)
        _DISPATCH[cfg.experiment](cfg, spec, icfg, out, workers)
        manifest.status = "ok"
    except Exception as exc:
        manifest.status = "error"
        manifest.error = {"class": type(exc).__name__, "message": str(exc)}
        raise
    finally:
        manifest.finished = _now()
        write_json(root / "manifest.json", manifest.as_dict())
    return manifest


def _workers(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("NLW_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer NLW_WORKERS=%r", env)
    return 1


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="nlw", description="Damped nonlinear wave experiments.")
    ap.add_argument("config", help="flat key = value configuration file")
    ap.add_argument("--output", help="output directory (overrides output.dir)")
    ap.add_argument("--workers", type=int, help="worker processes (default $NLW_WORKERS or 1)")
    ap.add_argument("--seed-override", type=int, help="replace every seed in the config")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"nlw: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"nlw: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.output:
        cfg = dataclasses.replace(cfg, output_dir=args.output)
    if args.seed_override is not None:
        cfg = cfg.with_seed(args.seed_override)

    try:
        manifest = run(cfg, _workers(args.workers))
    except (BlowUpError, NLWError, FloatingPointError) as exc:
        print(f"nlw: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"nlw: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"nlw: wrote {len(manifest.files)} files to {cfg.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
