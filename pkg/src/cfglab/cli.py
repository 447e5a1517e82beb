"""Command-line experiment runner.

    cfglab list-presets
    cfglab run --preset fig9_interrupted_hist --out results/ --seed 12345
    cfglab run --config manifest.json --out rerun/
    cfglab validate --config experiment.json

A config file is one JSON object holding exactly one of ``preset`` (a name)
or ``experiment`` (a ``{"runs": [...], "analyses": [...]}`` document), plus
optional ``seed``, ``workers``, ``out``, ``n_traj``, ``smoke`` and
``ensemble_traj_limit``.  Command-line flags override the file, which
overrides preset defaults.  Every run writes a ``manifest.json`` that is
itself a valid config and reproduces the data files byte for byte.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (ensemble_stats, final_histogram, knn_jsd, onset_time, score_diff_curve)
from .errors import NumericalError, ValidationError
from .guidance import GuidanceKind, guidance_violations
from .mixture import MixtureKind, MixtureSpec, Schedule, mixture_violations, schedule_violations
from .presets import ALIASES, PRESETS, get_preset
from .sampler import Mode, NoiseMode, SimPlan, plan_violations, simulate
from .theory import effective_potential, interrupted_mean_prediction, mean_closed_form

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
OUT_ENV = "CFGLAB_OUT"
DEFAULT_SEED = 12345
SMOKE_N_TRAJ = 100
ENSEMBLE_TRAJ_LIMIT = 1000

CONFIG_KEYS = {"preset", "experiment", "seed", "workers", "out", "n_traj", "smoke", "ensemble_traj_limit"}
MANIFEST_KEYS = {"version", "source", "wall_time_s", "files", "run_seeds", "notes"}

ENSEMBLE_HEADER = ["t", "traj_id", "q", "score_diff_norm"]
STATS_HEADER = ["t", "mean", "variance", "sem", "n"]
HIST_HEADER = ["bin_left", "bin_right", "count"]


class ConfigError(Exception):
    pass


def fmt(x) -> str:
    """Float text with 17 significant digits, which round-trips exactly."""
    return format(float(x), ".17g")


def derive_seed(global_seed: int, name: str) -> int:
    """Per-run 64-bit seed from the global seed and the run name."""
    tag = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "little")
    ss = np.random.SeedSequence([global_seed & 0xFFFFFFFFFFFFFFFF, tag])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------- config


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise OSError(f"cannot read config {path}: {err}") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - CONFIG_KEYS - MANIFEST_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def resolve(file_cfg: dict | None, args) -> dict:
    """Merge preset defaults, config file and flags into one resolved config."""
    file_cfg = dict(file_cfg or {})
    preset_name = args.preset if args.preset is not None else file_cfg.get("preset")
    has_experiment = "experiment" in file_cfg
    if args.preset is not None and has_experiment:
        raise ConfigError("--preset conflicts with the config file's experiment block")
    if preset_name is not None and has_experiment:
        raise ConfigError("config must hold exactly one of 'preset' or 'experiment'")
    if preset_name is None and not has_experiment:
        raise ConfigError("no experiment given: pass --preset or a config with 'preset' or 'experiment'")
    if preset_name is not None:
        if preset_name not in PRESETS and preset_name not in ALIASES:
            raise ConfigError(f"unknown preset {preset_name!r}; see 'cfglab list-presets'")
        experiment = get_preset(preset_name).build()
        source = get_preset(preset_name).name
    else:
        experiment = copy.deepcopy(file_cfg["experiment"])
        source = file_cfg.get("source", "config")
    if not isinstance(experiment, dict) or not isinstance(experiment.get("runs", []), list):
        raise ConfigError("experiment must be an object with a 'runs' list")
    experiment.setdefault("runs", [])
    experiment.setdefault("analyses", [])

    def pick(flag, key, default):
        if flag is not None:
            return flag
        return file_cfg.get(key, default)

    seed = pick(args.seed, "seed", DEFAULT_SEED)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    workers = pick(args.workers, "workers", 1)
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise ConfigError(f"workers must be an integer >= 1, got {workers!r}")
    n_traj = pick(args.n_traj, "n_traj", None)
    smoke = bool(args.smoke or file_cfg.get("smoke", False))
    if n_traj is None and smoke:
        n_traj = SMOKE_N_TRAJ
    if n_traj is not None:
        for run in experiment["runs"]:
            # deterministic single-path runs keep their size
            if run.get("noise", "stochastic") != "frozen":
                run["n_traj"] = n_traj
    out = pick(args.out, "out", None) or os.environ.get(OUT_ENV) or str(Path("cfglab_out") / source)
    limit = file_cfg.get("ensemble_traj_limit", ENSEMBLE_TRAJ_LIMIT)
    return {"experiment": experiment, "seed": seed, "workers": workers, "out": out,
            "source": source, "ensemble_traj_limit": limit}


def _run_names(experiment):
    names = [r.get("name") for r in experiment["runs"]]
    bad = [n for n in names if not isinstance(n, str) or not n or "/" in n]
    if bad:
        raise ConfigError(f"every run needs a plain non-empty name, got {bad}")
    if len(set(names)) != len(names):
        raise ConfigError("run names must be unique")
    return names


def build_plan(run: dict, seed: int) -> SimPlan:
    data = {k: v for k, v in run.items() if k not in ("name", "histogram", "score_diff")}
    data["seed"] = seed
    return SimPlan.from_dict(data)


def collect_violations(experiment: dict) -> list[tuple[str, ValidationError]]:
    """Every invariant violation in every run, without simulating."""
    found = []
    for run in experiment.get("runs", []):
        name = run.get("name", "?")
        mix = run.get("mixture", {})
        kind = mix.get("kind", "symmetric_pair")
        dim = mix.get("dim")
        vecs = mix.get("mean_vectors")
        if vecs is None and kind == "symmetric_pair":
            vecs = [[1.0] * dim] if isinstance(dim, int) and dim >= 1 else [[]]
        errs = mixture_violations(kind, dim, mix.get("sigma2", 1.0), vecs or [], mix.get("weights"))
        spec = None
        if not errs:
            spec = MixtureSpec.from_dict(mix)
        sch = run.get("schedule", {})
        if "dt" in sch and "steps" not in sch:
            try:
                schedule = Schedule.from_dict(sch)
            except ValidationError as err:
                errs.append(err)
                schedule = None
        else:
            s_errs = schedule_violations(sch.get("t_f", 8.0), sch.get("steps", 800), sch.get("record_stride", 10))
            errs += s_errs
            schedule = None if s_errs else Schedule.from_dict(sch)
        g = run.get("guidance", {"kind": "none"})
        interval = g.get("interval")
        table = g.get("weight_table")
        errs += guidance_violations(
            g.get("kind", "standard"), g.get("omega", 0.0), g.get("alpha", 0.0), g.get("gamma_exp", 1.0),
            tuple(interval) if interval is not None else None,
            tuple(tuple(r) for r in table) if table else None,
            g.get("switch_time", 0.0), t_f=schedule.t_f if schedule else None)
        errs += [e for e in plan_violations(spec, None, None, run.get("target_class", 1), run.get("n_traj", 1000),
                                            0, run.get("mode", "full_state"), run.get("noise", "stochastic"))]
        found += [(name, e) for e in errs]
    return found


def _checked_violations(experiment):
    try:
        return collect_violations(experiment)
    except (TypeError, KeyError, AttributeError, ValueError) as err:
        if isinstance(err, ValidationError):
            raise
        raise ConfigError(f"malformed run block: {err!r}") from err


# ---------------------------------------------------------------- writers


class Writer:
    def __init__(self, out_dir: Path):
        self.out = out_dir
        self.files: dict[str, str] = {}

    def csv(self, name: str, header, rows):
        path = self.out / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        self.files[name] = hashlib.sha256(path.read_bytes()).hexdigest()


def stats_rows(st):
    return ([fmt(t), fmt(m), fmt(v), fmt(s), st.n]
            for t, m, v, s in zip(st.times, st.mean, st.variance, st.sem))


def ensemble_rows(e, limit):
    n = min(e.n_traj, limit) if limit is not None else e.n_traj
    for i in range(n):
        norms = e.score_diff_norms[i] if e.score_diff_norms is not None else None
        for j, t in enumerate(e.times):
            yield [fmt(t), i, fmt(e.q_values[i, j]), fmt(norms[j]) if norms is not None else "nan"]


# ---------------------------------------------------------------- analyses


def _summary(results, cfg, params, writer):
    rows = []
    header = ["run", "mean", "std", "sem", "n"]
    jsd = params.get("jsd_to_target", False)
    if jsd:
        header.append("jsd_to_target")
    for name, (plan, e) in results.items():
        q = e.final_q
        std = float(q.std(ddof=1)) if q.size > 1 else 0.0
        row = [name, fmt(q.mean()), fmt(std), fmt(std / math.sqrt(q.size)), q.size]
        if jsd:
            rng = np.random.default_rng(derive_seed(cfg["seed"], name + "/target"))
            target = math.sqrt(plan.spec.dim) + math.sqrt(plan.spec.sigma2) * rng.standard_normal(q.size)
            row.append(fmt(knn_jsd(q, target)) if q.size > 1 else "nan")
        rows.append(row)
    writer.csv("summary.csv", header, rows)


def _onsets(results, cfg, params, writer):
    rows = []
    for name, (plan, e) in results.items():
        if e.score_diff_norms is None:
            continue
        curve = score_diff_curve(e)
        rows.append([name, plan.spec.dim, fmt(onset_time(curve, params.get("fraction", 0.1))),
                     fmt(curve.mean.max()), fmt(curve.mean[-1])])
    writer.csv("onsets.csv", ["run", "dim", "onset_time", "peak", "final"], rows)


def _interrupted_prediction(results, cfg, params, writer):
    for name, (plan, e) in results.items():
        g = plan.guidance
        if g.kind is not GuidanceKind.INTERRUPTED:
            continue
        d, s2, t1 = plan.spec.dim, plan.spec.sigma2, g.switch_time
        st = ensemble_stats(e)
        k1 = e.time_index(t1)
        dq = st.mean[k1] - math.sqrt(d) * math.exp(-t1)
        sel = st.times <= t1 + 1e-12
        times = st.times[sel]
        pred = interrupted_mean_prediction(times, t1, dq, d, s2)
        # the prediction inherits the error of the measured overshoot
        growth = (pred - math.sqrt(d) * np.exp(-times)) / dq if dq != 0 else np.ones_like(times)
        se = np.sqrt(st.sem[sel] ** 2 + (growth * st.sem[k1]) ** 2)
        z = (st.mean[sel] - pred) / np.where(se > 0, se, np.inf)
        rows = [[fmt(t), fmt(m), fmt(s), fmt(p), fmt(zz)]
                for t, m, s, p, zz in zip(times, st.mean[sel], se, pred, z)]
        writer.csv(f"{name}_prediction.csv", ["t", "simulated_mean", "combined_se", "predicted_mean", "z"], rows)


def _potentials(results, cfg, params, writer):
    qs = np.linspace(params.get("q_min", -6.0), params.get("q_max", 6.0), params.get("q_points", 241))
    rows = []
    for t in params.get("times", [0.0, 1.0, 2.0, 4.0, 8.0]):
        pot = effective_potential(qs, t, params.get("dim", math.e), params.get("omega", 2.0), params.get("c", 1))
        rows += [[fmt(t), fmt(q), fmt(a), fmt(b), fmt(c)]
                 for q, a, b, c in zip(qs, pot.v_class, pot.v_extra, pot.v_total)]
    writer.csv("potentials.csv", ["t", "q", "v_class", "v_extra", "v_total"], rows)


def oracle_checks(results) -> list[list]:
    """Rows ``[run, check, statistic, tolerance, pass]`` comparing runs to closed forms."""
    rows = []
    for name, (plan, e) in results.items():
        spec, sched = plan.spec, plan.schedule
        unguided = plan.guidance.kind is GuidanceKind.NONE or plan.guidance.omega == 0
        if plan.mode is Mode.TRANSVERSE:
            p = e.final_q
            sem = p.std(ddof=1) / math.sqrt(p.size)
            rows.append([name, "transverse_mean_sem", abs(p.mean()) / sem, 3.0, abs(p.mean()) < 3 * sem])
            rel = abs(p.var(ddof=1) / spec.sigma2 - 1.0)
            rows.append([name, "transverse_var_rel", rel, 0.05, rel < 0.05])
        elif unguided and plan.noise is NoiseMode.FROZEN:
            q0 = plan.initial_q if plan.initial_q is not None else 0.0
            pred = mean_closed_form(q0, sched.t_f, sched.t_f - e.times, spec.dim, spec.sigma2)
            err = float(np.max(np.abs(e.q_values[0] - pred)))
            rows.append([name, "frozen_max_abs_err", err, 5 * sched.dt, err <= 5 * sched.dt])
        elif unguided and spec.kind is MixtureKind.SYMMETRIC_PAIR and plan.initial_q is None:
            st = ensemble_stats(e)
            pred = mean_closed_form(0.0, sched.t_f, sched.t_f - st.times, spec.dim, spec.sigma2)
            z = float(np.max(np.abs(st.mean - pred) / st.sem))
            rows.append([name, "mean_max_abs_z", z, 3.0, z <= 3.0])
    return rows


def _oracle_report(results, cfg, params, writer):
    rows = oracle_checks(results)
    writer.csv("oracle_report.csv", ["run", "check", "statistic", "tolerance", "pass"],
               [[r[0], r[1], fmt(r[2]), fmt(r[3]), "pass" if r[4] else "fail"] for r in rows])
    for r in rows:
        print(f"{'PASS' if r[4] else 'FAIL'}  {r[0]:<16} {r[1]:<22} {r[2]:.4g} (tol {r[3]:.4g})")


ANALYSES = {
    "summary": _summary,
    "onsets": _onsets,
    "interrupted_prediction": _interrupted_prediction,
    "potentials": _potentials,
    "oracle_report": _oracle_report,
}


# ---------------------------------------------------------------- commands


def execute(cfg: dict) -> Path:
    """Run a resolved config and write all outputs; returns the output directory."""
    experiment = cfg["experiment"]
    names = _run_names(experiment)
    for a in experiment["analyses"]:
        if a.get("type") not in ANALYSES:
            raise ConfigError(f"unknown analysis {a.get('type')!r}")
    seeds = {n: derive_seed(cfg["seed"], n) for n in names}
    plans = {r["name"]: build_plan(r, seeds[r["name"]]) for r in experiment["runs"]}

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    writer = Writer(out)
    started = time.perf_counter()
    results = {}
    limit = cfg.get("ensemble_traj_limit", ENSEMBLE_TRAJ_LIMIT)
    for run in experiment["runs"]:
        name = run["name"]
        e = simulate(plans[name], workers=cfg["workers"])
        results[name] = (plans[name], e)
        writer.csv(f"{name}_ensemble.csv", ENSEMBLE_HEADER, ensemble_rows(e, limit))
        writer.csv(f"{name}_stats.csv", STATS_HEADER, stats_rows(ensemble_stats(e)))
        if run.get("score_diff") and e.score_diff_norms is not None:
            writer.csv(f"{name}_scorediff.csv", STATS_HEADER, stats_rows(score_diff_curve(e)))
        if run.get("histogram"):
            h = final_histogram(e, bins=run["histogram"].get("bins", 60))
            writer.csv(f"{name}_hist.csv", HIST_HEADER,
                       ([fmt(a), fmt(b), int(c)] for a, b, c in zip(h.edges[:-1], h.edges[1:], h.counts)))
        print(f"{name}: n={e.n_traj} mean q(0)={e.final_q.mean():.4f}")
    for a in experiment["analyses"]:
        ANALYSES[a["type"]](results, cfg, a, writer)

    manifest = {
        "experiment": experiment,
        "seed": cfg["seed"],
        "workers": cfg["workers"],
        "ensemble_traj_limit": limit,
        "source": cfg["source"],
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - started, 3),
        "run_seeds": seeds,
        "files": dict(sorted(writer.files.items())),
        "notes": "ensemble CSVs keep the first ensemble_traj_limit trajectories; "
                 "JSD estimates are clipped to [0, ln 2]",
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return out


def cmd_run(args) -> int:
    file_cfg = load_config_file(args.config) if args.config else None
    cfg = resolve(file_cfg, args)
    problems = _checked_violations(cfg["experiment"])
    if problems:
        name, err = problems[0]
        raise ConfigError(f"run {name}: {err}")
    out = execute(cfg)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_list_presets(args) -> int:
    for p in PRESETS.values():
        print(f"{p.name:<24} {p.figure:<20} {p.description}")
    for alias, target in ALIASES.items():
        print(f"{alias:<24} {'alias':<20} same as {target}")
    return EXIT_OK


def cmd_validate(args) -> int:
    file_cfg = load_config_file(args.config) if args.config else None
    cfg = resolve(file_cfg, args)
    problems = _checked_violations(cfg["experiment"])
    if not problems:
        print(f"ok: {len(cfg['experiment']['runs'])} run(s), no violations")
    for name, err in problems:
        print(f"run {name}: [{err.invariant}] {err.message}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfglab", description="Guided diffusion on Gaussian mixtures")
    parser.add_argument("--version", action="version", version=f"cfglab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment config or a previous manifest.json")
        p.add_argument("--preset", help="named experiment (see list-presets)")
        p.add_argument("--seed", type=int, help="global seed, unsigned 64-bit")
        p.add_argument("--workers", type=int, help="worker threads for trajectory blocks")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./cfglab_out/<preset>)")
        p.add_argument("--n-traj", dest="n_traj", type=int, help="override trajectories per run")
        p.add_argument("--smoke", action="store_true", help=f"{SMOKE_N_TRAJ} trajectories per run")

    common(sub.add_parser("run", help="simulate and write CSVs plus a manifest"))
    common(sub.add_parser("validate", help="check every invariant without simulating"))
    sub.add_parser("list-presets", help="list named experiments")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "validate": cmd_validate, "list-presets": cmd_list_presets}[args.command]
    try:
        return handler(args)
    except (ConfigError, ValidationError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
