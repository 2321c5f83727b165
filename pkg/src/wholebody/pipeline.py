"""Per-frame integration strategies and the per-part evaluation table."""

import time

import numpy as np

from .fit import Evidence, FitConfig, fit_whole_body
from .integrate import copy_paste
from .metrics import pa_v2v, v2v
from .model import pose_model
from .parts import HANDS
from .wristnet import apply_wristnet

STRATEGIES = ("copy-paste", "wrist-net", "optimize")

# table rows and the template vertex masks they use (None = whole mesh)
TABLE_ROWS = (("All", None), ("Body", "body"), ("L-Hand", "left_hand"), ("R-Hand", "right_hand"), ("Face", "face"))


def integrate_frame(template, frame, strategy="copy-paste", net=None, fit_config=None):
    """Whole-body result for one frame of part estimates.

    Returns ``(result, report)`` where ``report`` is a plain dict (empty for
    the non-iterative strategies) and ``result.provenance`` records where
    every joint came from.
    """
    est = frame.estimates
    hands = {p: est[p] for p in HANDS if p in est}
    result = copy_paste(est.get("body"), est.get("left_hand"), est.get("right_hand"), est.get("face"), template)
    if strategy == "copy-paste":
        return result, {}
    if strategy == "wrist-net":
        if net is None:
            raise ValueError("the wrist-net strategy needs a trained network")
        return apply_wristnet(net, result, hands, template), {}
    if strategy == "optimize":
        fitted, report = fit_whole_body(result, Evidence(frame.keypoints2d, hands), template, fit_config or FitConfig())
        fitted.provenance = dict(result.provenance)
        out = report.to_dict()
        out.pop("wall_time", None)  # keeps result files reproducible
        return fitted, out
    raise ValueError(f"unknown strategy {strategy!r}; choose from {', '.join(STRATEGIES)}")


def time_strategies(template, frames, net, fit_config=None, repeats=1):
    """Mean wall time per frame (s) of each integration strategy."""
    out = {}
    for strategy in STRATEGIES:
        start = time.perf_counter()
        for _ in range(repeats):
            for f in frames:
                integrate_frame(template, f, strategy, net, fit_config)
        out[strategy] = (time.perf_counter() - start) / (repeats * len(frames))
    return out


def evaluate(template, predictions, truths, unit_scale=1000.0):
    """Mean V2V and PA-V2V per table row over paired frames.

    Each part row uses its own vertex mask and, for PA-V2V, its own
    Procrustes alignment.  Distances are multiplied by ``unit_scale``
    (model units are metres, so the default reports millimetres).
    """
    if len(predictions) != len(truths):
        raise ValueError(f"{len(predictions)} predicted frames but {len(truths)} ground-truth frames")
    sums = {name: [0.0, 0.0] for name, _ in TABLE_ROWS}
    for pred, gt in zip(predictions, truths):
        pv = pose_model(template, pred).vertices
        gv = pose_model(template, gt).vertices
        for name, part in TABLE_ROWS:
            ids = np.arange(template.num_vertices) if part is None else template.part_vertices[part]
            sums[name][0] += v2v(pv[ids], gv[ids])
            sums[name][1] += pa_v2v(pv[ids], gv[ids])
    n = max(len(predictions), 1)
    return [
        {"part": name, "v2v": unit_scale * s[0] / n, "pa_v2v": unit_scale * s[1] / n}
        for name, s in ((name, sums[name]) for name, _ in TABLE_ROWS)
    ]
