"""Named experiments reproducing the simulation figures.

Each preset expands to a plain JSON-compatible experiment document, so a
preset run and the manifest it writes describe the same thing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

__all__ = ["Preset", "PRESETS", "ALIASES", "get_preset"]


def _run(name, dim, sigma2, guidance, t_f=8.0, steps=800, n_traj=10_000, mode="projected_q",
         histogram=False, score_diff=False, noise="stochastic", initial_q=None, record_stride=10):
    return {
        "name": name,
        "mixture": {"kind": "symmetric_pair", "dim": dim, "sigma2": sigma2},
        "guidance": guidance,
        "schedule": {"t_f": t_f, "steps": steps, "record_stride": record_stride},
        "target_class": 1,
        "n_traj": n_traj,
        "mode": mode,
        "noise": noise,
        "initial_q": initial_q,
        "histogram": {"bins": 60} if histogram else None,
        "score_diff": score_diff,
    }


def _std(omega):
    return {"kind": "standard", "omega": omega} if omega else {"kind": "none"}


def _fig2_hist():
    runs = [_run(f"d{d}_w{w:g}", d, 1.0, _std(w), histogram=True)
            for d in (2, 200) for w in (0.0, 0.2, 15.0)]
    return {"runs": runs, "analyses": [{"type": "summary"}]}


def _fig2_traj():
    runs = [_run(f"d{d}_w{w:g}", d, 1.0, _std(w)) for d in (2, 200) for w in (0.0, 15.0)]
    return {"runs": runs, "analyses": [{"type": "summary"}]}


def _fig3_scorediff():
    runs = [_run(f"d{d}", d, 1.0, _std(5.0), score_diff=True) for d in (1, 5, 20, 50, 200)]
    return {"runs": runs, "analyses": [{"type": "onsets", "fraction": 0.1}]}


def _fig3_nonlin():
    runs = [_run(f"alpha{a:g}", 200, 1.0, {"kind": "power_law", "omega": 5.0, "alpha": a}, score_diff=True)
            for a in (-0.5, 0.0, 0.5, 0.9)]
    return {"runs": runs, "analyses": [{"type": "onsets", "fraction": 0.1}]}


def _fig4():
    # t_s = 1/2 fixes the dimension at e
    return {"runs": [], "analyses": [{
        "type": "potentials", "dim": math.e, "omega": 2.0, "c": 1,
        "q_min": -6.0, "q_max": 6.0, "q_points": 241, "times": [0.0, 0.5, 1.0, 2.0, 4.0, 8.0]}]}


def _interrupted_runs(n_traj, histogram):
    runs = [_run("always_on", 16, 4.0, _std(8.0), t_f=5.0, steps=500, n_traj=n_traj, histogram=histogram)]
    for t1 in (0.69, 1.38, 3.19):
        runs.append(_run(f"t1_{t1:g}", 16, 4.0, {"kind": "interrupted", "omega": 8.0, "switch_time": t1},
                         t_f=5.0, steps=500, n_traj=n_traj, histogram=histogram))
    return runs


def _fig8():
    runs = _interrupted_runs(200_000, False)
    runs.append(_run("unguided", 16, 4.0, _std(0.0), t_f=5.0, steps=500, n_traj=200_000))
    return {"runs": runs, "analyses": [{"type": "interrupted_prediction"}, {"type": "summary"}]}


def _fig9():
    return {"runs": _interrupted_runs(200_000, True), "analyses": [{"type": "summary"}]}


def _fig11():
    runs = [_run(f"standard_w{w:g}", 16, 4.0, _std(w), t_f=5.0, steps=500, n_traj=100_000)
            for w in (0.0, 8.0, 16.0)]
    runs += [_run(f"power_law_w{w:g}", 16, 4.0, {"kind": "power_law", "omega": w, "alpha": -0.75},
                  t_f=5.0, steps=500, n_traj=100_000) for w in (0.5, 1.5)]
    runs += [_run(f"rescaled_w{w:g}", 16, 4.0, {"kind": "rescaled_power_law", "omega": w, "gamma_exp": 4.0},
                  t_f=5.0, steps=500, n_traj=100_000) for w in (8.0, 16.0)]
    return {"runs": runs, "analyses": [{"type": "summary", "jsd_to_target": True}]}


def _oracle_report():
    runs = []
    for d, s2, t_f in ((16, 4.0, 5.0), (200, 1.0, 8.0), (2, 1.0, 8.0)):
        steps = int(round(t_f * 100))
        runs.append(_run(f"mean_d{d}", d, s2, _std(0.0), t_f=t_f, steps=steps, n_traj=2000))
        runs.append(_run(f"frozen_d{d}", d, s2, _std(0.0), t_f=t_f, steps=steps, n_traj=1,
                         noise="frozen", initial_q=0.0))
    for s2 in (1.0, 4.0):
        runs.append(_run(f"transverse_s{s2:g}", 4, s2, _std(15.0), n_traj=10_000, mode="transverse"))
    return {"runs": runs, "analyses": [{"type": "oracle_report"}]}


@dataclass(frozen=True)
class Preset:
    name: str
    figure: str
    description: str
    build: Callable[[], dict]


PRESETS = {p.name: p for p in [
    Preset("fig2_hist", "Fig. 2 left", "q(0) histograms for d in {2, 200}, omega in {0, 0.2, 15}", _fig2_hist),
    Preset("fig2_traj", "Fig. 2 right", "mean q(t) paths, guided vs unguided, d in {2, 200}", _fig2_traj),
    Preset("fig3_scorediff", "Fig. 3 left", "score-difference curves for d in {1, 5, 20, 50, 200}", _fig3_scorediff),
    Preset("fig3_nonlin_scorediff", "Fig. 3 middle", "power-law score-difference curves at d = 200", _fig3_nonlin),
    Preset("fig4_potentials", "Fig. 4", "class, extra and total effective potentials on a (t, q) grid", _fig4),
    Preset("fig8_interrupted_mean", "Fig. 8", "mean q(t) with guidance switched off, vs prediction", _fig8),
    Preset("fig9_interrupted_hist", "Fig. 9", "q(0) histograms with guidance switched off at t1", _fig9),
    Preset("fig11_rpl_bias", "Figs. 11-12", "standard, power-law and rescaled power-law final bias", _fig11),
    Preset("oracle_report", "closed-form oracles", "simulated vs closed-form predictions with pass/fail", _oracle_report),
]}

ALIASES = {"fig9_interrupted": "fig9_interrupted_hist"}


def get_preset(name: str) -> Preset:
    return PRESETS[ALIASES.get(name, name)]
