"""Command-line surface: simulate | video | ablate | verify-bounds | metrics.

Every command takes --config PATH (JSON, schema in config.py) and is
deterministic given the config plus seeds. MVG_LOG={error,info,debug} controls
log verbosity. Sweep cells and seeds run in a worker pool under --jobs N.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, io, metrics as metrics_mod, toydata
from .config import RunConfig
from .denoiser import Condition, GmmDenoiser, GmmModel, Mixture
from .pie import (PieConfig, Trajectory, check_bound_suite, diff_heatmap,
                  pie_run, run_bound_suite)
from .scheduler import build_schedule
from .transition import concat_clips, generate_transition, make_clip_skeleton

log = logging.getLogger("mvg")

GAMMA_SWEEP = (0.1, 0.2, 0.4, 0.6, 0.8)
STEPS_SWEEP = (1, 5, 10, 50, 100)
BETA1_SWEEP = (0.01, 0.1, 0.2)
BETA2_SWEEP = (1.0, 0.75, 0.5)


def _setup_logging():
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=level.get(os.environ.get("MVG_LOG", "error"), logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _load_reference_states(cfg: RunConfig):
    paths = cfg.raw.get("reference_states")
    if not paths:
        return None
    return [io.read_tensor(cfg.base_dir / p) for p in paths]


def _metric_rows(run_id, traj: Trajectory, model, y_target, embedder, reference):
    """Per-stage rows (run_id, stage, conf, clip_i, kid, mae); kid is a set
    metric and stays nan at stage level, mae needs reference states."""
    cos = metrics_mod.stage_cosines(traj, embedder) if traj.N >= 1 else np.array([])
    rows = []
    for n in range(traj.N + 1):
        conf = metrics_mod.confidence(traj.states[n], y_target, model)
        ci = 1.0 if n == 0 else float(cos[n - 1])
        ref_err = math.nan
        if reference is not None and n < len(reference):
            ref_err = metrics_mod.mae(traj.states[n], reference[n])
        rows.append((run_id, n, conf, ci, math.nan, ref_err))
    return rows


def _write_run_dir(run_dir: Path, traj: Trajectory, cfg: RunConfig, seed: int):
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "status": "incomplete",
        "seed": seed,
        "config_hash": cfg.config_hash(),
        "library_version": __version__,
        "schedule": cfg.schedule().to_dict(),
        "pie": cfg.pie_config(seed).to_dict(),
        "domain": cfg.domain().to_dict(),
        "model": cfg.model().to_dict(),
        "n_states": traj.N + 1,
        "states": [f"state_{n:03d}.mvgt" for n in range(traj.N + 1)],
    }
    io.write_json(run_dir / "manifest.json", manifest)

    for n, state in enumerate(traj.states):
        io.write_tensor(run_dir / f"state_{n:03d}.mvgt", state)
        if state.ndim == 2:
            io.write_pgm(run_dir / f"state_{n:03d}.pgm", state)
    for n in range(1, traj.N + 1):
        hm = diff_heatmap(traj.states[n], traj.states[n - 1])
        io.write_tensor(run_dir / f"heatmap_{n:03d}.mvgt", hm)
        if hm.ndim == 2:
            io.write_pgm(run_dir / f"heatmap_{n:03d}.pgm", hm)
    io.write_csv(run_dir / "deltas.csv", ["stage", "delta"],
                 [(n + 1, repr(float(d))) for n, d in enumerate(traj.step_deltas)])

    model = cfg.model()
    _, y_target = cfg.conditions()
    rows = _metric_rows(f"seed{seed}", traj, model, y_target, cfg.embedder(),
                        _load_reference_states(cfg))
    io.write_csv(run_dir / "metrics.csv",
                 ["run_id", "stage", "conf", "clip_i", "kid", "mae"], rows)

    manifest["status"] = "complete"
    io.write_json(run_dir / "manifest.json", manifest)
    return rows


def _simulate_one(raw: dict, base_dir: str, seed: int, out_dir: str):
    cfg = RunConfig.from_dict(raw, base_dir=base_dir)
    traj = pie_run(cfg.start_image(), cfg.conditions()[1], cfg.pie_config(seed),
                   cfg.denoiser(), cfg.mask(), cfg.schedule())
    rows = _write_run_dir(Path(out_dir) / f"seed_{seed:04d}", traj, cfg, seed)
    log.info("simulate seed=%d done (%d stages)", seed, traj.N)
    return rows


def cmd_simulate(cfg: RunConfig, out_dir: Path, seeds: list[int], jobs: int = 1) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    args = [(cfg.raw, str(cfg.base_dir), seed, str(out_dir)) for seed in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            all_rows = list(pool.map(_simulate_one, *zip(*args)))
    else:
        all_rows = [_simulate_one(*a) for a in args]

    # seed-averaged per-stage summary plus a terminal-state set distance
    by_stage: dict[int, list] = {}
    for rows in all_rows:
        for (_rid, n, conf, ci, _kid, ref_err) in rows:
            by_stage.setdefault(n, []).append((conf, ci, ref_err))
    terminal_kid = math.nan
    if len(seeds) >= 2:
        terminal = [io.read_tensor(out_dir / f"seed_{s:04d}" / f"state_{max(by_stage):03d}.mvgt")
                    for s in seeds]
        ref_cfg = cfg.raw["kid_reference"]
        reference = toydata.sample(cfg.model(), cfg.conditions()[1],
                                   ref_cfg["count"], seed=ref_cfg["seed"])
        terminal_kid = metrics_mod.kid(terminal, reference, cfg.embedder())
    summary = []
    for n in sorted(by_stage):
        vals = np.array(by_stage[n], dtype=np.float64)
        summary.append((n, vals[:, 0].mean(), vals[:, 1].mean(),
                        terminal_kid if n == max(by_stage) else math.nan,
                        np.nanmean(vals[:, 2]) if np.any(~np.isnan(vals[:, 2])) else math.nan))
    io.write_csv(out_dir / "summary.csv", ["stage", "conf", "clip_i", "kid", "mae"], summary)
    print(f"simulate: {len(seeds)} run(s) -> {out_dir}")
    return 0


def _read_states(run_dir: Path) -> list[np.ndarray]:
    manifest = io.read_json(run_dir / "manifest.json")
    if manifest.get("status") != "complete":
        raise InvalidStateDir(f"{run_dir} is marked {manifest.get('status')!r}")
    return [io.read_tensor(run_dir / f) for f in manifest["states"]]


class InvalidStateDir(RuntimeError):
    pass


def cmd_video(cfg: RunConfig, out_dir: Path, seeds: list[int]) -> int:
    video = cfg.raw["video"]
    K, gamma, vseed = video["K"], video["gamma"], video["seed"]
    sched, den, mask = cfg.schedule(), cfg.denoiser(), cfg.mask()
    _, y_target = cfg.conditions()
    for seed in seeds:
        run_dir = out_dir / f"seed_{seed:04d}"
        if not (run_dir / "manifest.json").exists():
            raise FileNotFoundError(f"missing trajectory: {run_dir}")
        states = _read_states(run_dir)
        clips = []
        for n in range(1, len(states)):
            clip_seed = vseed * 100003 + n  # distinct middle-frame streams per clip
            skel = make_clip_skeleton(states[n - 1], states[n], K, seed=clip_seed)
            clip = generate_transition(skel, mask, den, sched, y_target, y_target, gamma)
            clip_dir = run_dir / f"clip_{n:03d}"
            clip_dir.mkdir(exist_ok=True)
            for j in range(clip.K):
                io.write_tensor(clip_dir / f"frame_{j:03d}.mvgt", clip.frames[j])
                if clip.frames[j].ndim == 2:
                    io.write_pgm(clip_dir / f"frame_{j:03d}.pgm", clip.frames[j])
            io.write_json(clip_dir / "manifest.json",
                          {"K": clip.K, "seed": clip_seed, "start_state": n - 1, "end_state": n})
            clips.append(clip)
        video_clip = concat_clips(clips)
        video_dir = run_dir / "video"
        video_dir.mkdir(exist_ok=True)
        for j in range(video_clip.K):
            io.write_tensor(video_dir / f"frame_{j:03d}.mvgt", video_clip.frames[j])
            if video_clip.frames[j].ndim == 2:
                io.write_pgm(video_dir / f"frame_{j:03d}.pgm", video_clip.frames[j])
        io.write_json(video_dir / "manifest.json", {
            "frames": video_clip.K,
            "clips": len(clips),
            "per_clip_K": K,
            "expected_frames": K * len(clips) - (len(clips) - 1),
        })
        print(f"video: seed {seed}: {video_clip.K} frames -> {video_dir}")
    return 0


def _ablate_cell(raw: dict, base_dir: str, overrides: dict, seeds: list[int]):
    """One sweep cell: seeds-averaged terminal confidence, trajectory clip_i,
    and terminal-set kid against a reference sample of the target condition."""
    cfg = RunConfig.from_dict(raw, base_dir=base_dir)
    model, sched, mask = cfg.model(), cfg.schedule(), cfg.mask()
    den = GmmDenoiser(model, sched)
    _, y_target = cfg.conditions()
    emb = cfg.embedder()
    x0 = cfg.start_image()
    p = cfg.raw["pie"]
    confs, clip_is, terminal = [], [], []
    for seed in seeds:
        pc = PieConfig(
            N=overrides.get("N", p["N"]),
            gamma=overrides.get("gamma", p["gamma"]),
            beta1=overrides.get("beta1", p["beta1"]),
            beta2=overrides.get("beta2", p["beta2"]),
            seed=seed,
            composite_origin=p.get("composite_origin", True),
        )
        traj = pie_run(x0, y_target, pc, den, mask, sched)
        confs.append(metrics_mod.confidence(traj.states[-1], y_target, model))
        clip_is.append(metrics_mod.clip_i(traj, emb))
        terminal.append(traj.states[-1])
    ref_cfg = cfg.raw["kid_reference"]
    reference = toydata.sample(model, y_target, ref_cfg["count"], seed=ref_cfg["seed"])
    cell_kid = metrics_mod.kid(terminal, reference, emb) if len(terminal) >= 2 else math.nan
    return float(np.mean(confs)), float(np.mean(clip_is)), cell_kid


def cmd_ablate(cfg: RunConfig, out_dir: Path, seeds: list[int], jobs: int = 1) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = (
        [("gamma", {"gamma": g}) for g in GAMMA_SWEEP]
        + [("steps", {"N": n, "gamma": 0.5}) for n in STEPS_SWEEP]
        + [("beta", {"beta1": b1, "beta2": b2}) for b1 in BETA1_SWEEP for b2 in BETA2_SWEEP]
    )
    args = [(cfg.raw, str(cfg.base_dir), overrides, seeds) for _table, overrides in cells]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_ablate_cell, *zip(*args)))
    else:
        results = [_ablate_cell(*a) for a in args]

    tables = {"gamma": [], "steps": [], "beta": []}
    for (table, overrides), (conf, ci, cell_kid) in zip(cells, results):
        if table == "gamma":
            tables["gamma"].append((overrides["gamma"], conf, ci, cell_kid))
        elif table == "steps":
            tables["steps"].append((overrides["N"], conf, ci, cell_kid))
        else:
            tables["beta"].append((overrides["beta1"], overrides["beta2"], conf, ci, cell_kid))
    io.write_csv(out_dir / "ablate_gamma.csv", ["gamma", "conf", "clip_i", "kid"], tables["gamma"])
    io.write_csv(out_dir / "ablate_steps.csv", ["steps", "conf", "clip_i", "kid"], tables["steps"])
    io.write_csv(out_dir / "ablate_beta.csv", ["beta1", "beta2", "conf", "clip_i", "kid"], tables["beta"])
    print(f"ablate: wrote 3 tables -> {out_dir}")
    return 0


def verify_model(shape) -> GmmModel:
    """Unit-variance, zero-mean single-Gaussian prior used by the decay suite."""
    return GmmModel.single_class(Mixture(
        weights=np.array([1.0]),
        means=np.zeros((1,) + tuple(shape)),
        variances=np.array([1.0]),
    ))


def cmd_verify_bounds(cfg: RunConfig, out_dir: Path) -> int:
    v = cfg.raw["verify"]
    sc = v["schedule"]
    sched = build_schedule(sc.get("T", 2), sc.get("beta_start"), sc.get("beta_end"))
    shape = cfg.domain().shape
    model = verify_model(shape)
    den = GmmDenoiser(model, sched)
    x0 = float(v["x0_scale"]) * np.ones(shape)
    suite = run_bound_suite(x0, den, Condition(0, 0.0), sched,
                            n_stages=v["stages"], seeds=range(v["seeds"]),
                            delta=v["delta"], burn_in=v["burn_in"])
    outcomes = check_bound_suite(suite)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = {
        "schedule": sched.to_dict(),
        "alpha0": float(sched.alpha_bars[1]),
        "alpha1": float(sched.alpha_bars[2]),
        "target_slope": suite.target_slope,
        "mean_slope": suite.mean_slope(),
        "delta": suite.delta,
        "n_min": [b.n_min for b in suite.bounds],
        "kappa": [b.kappa for b in suite.bounds],
        "checks": [{"name": o.name, "passed": o.passed, "detail": o.detail} for o in outcomes],
    }
    io.write_json(out_dir / "verify_report.json", report)
    ok = True
    for o in outcomes:
        print(f"[{'PASS' if o.passed else 'FAIL'}] {o.name}: {o.detail}")
        ok &= o.passed
    return 0 if ok else 1


def cmd_metrics(cfg: RunConfig, out_dir: Path, seeds: list[int]) -> int:
    model = cfg.model()
    _, y_target = cfg.conditions()
    emb = cfg.embedder()
    reference = _load_reference_states(cfg)
    for seed in seeds:
        run_dir = out_dir / f"seed_{seed:04d}"
        states = _read_states(run_dir)
        deltas = np.array([np.linalg.norm((b - a).ravel()) for a, b in zip(states, states[1:])])
        traj = Trajectory(states=states, step_deltas=deltas)
        rows = _metric_rows(f"seed{seed}", traj, model, y_target, emb, reference)
        io.write_csv(run_dir / "metrics.csv",
                     ["run_id", "stage", "conf", "clip_i", "kid", "mae"], rows)
        print(f"metrics: recomputed {run_dir / 'metrics.csv'}")
    return 0


def _parse_seeds(text: str | None, cfg: RunConfig) -> list[int]:
    if text:
        return [int(s) for s in text.split(",") if s.strip()]
    return cfg.seeds()


def main(argv=None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(prog="mvg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "video", "ablate", "verify-bounds", "metrics"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run config JSON")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seeds", default=None, help="comma-separated seed list")
        p.add_argument("--jobs", type=int, default=1, help="worker pool size")
    args = parser.parse_args(argv)

    try:
        cfg = RunConfig.load(args.config)
        out_dir = Path(args.out) if args.out else cfg.out_dir()
        seeds = _parse_seeds(args.seeds, cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir, seeds, jobs=args.jobs)
        if args.command == "video":
            return cmd_video(cfg, out_dir, seeds)
        if args.command == "ablate":
            return cmd_ablate(cfg, out_dir, seeds, jobs=args.jobs)
        if args.command == "verify-bounds":
            return cmd_verify_bounds(cfg, out_dir)
        if args.command == "metrics":
            return cmd_metrics(cfg, out_dir, seeds)
        raise AssertionError(args.command)
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"error: {err}", file=sys.stderr)
        if os.environ.get("MVG_LOG") == "debug":
            raise
        return 1


if __name__ == "__main__":
    sys.exit(main())
