"""Region (J) and boundary (F) segmentation metrics.

J is intersection-over-union of one object id's binary masks; both-empty
pairs score 1.0. F is the contour F-measure: precision/recall of boundary
pixels matched within a pixel tolerance, combined as 2PR/(P+R). The default
tolerance is ceil(0.008 * image diagonal), the standard benchmark convention.
A foreground pixel is boundary iff any 4-neighbor is background or lies off
the frame edge.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import distance_transform_edt

from .errors import ShapeError


def default_boundary_tol(shape):
    h, w = shape[:2]
    return int(math.ceil(0.008 * math.hypot(h, w)))


def boundary_map(mask_plane):
    """Boundary pixels of a binary plane (4-neighborhood, frame edge counts
    as background)."""
    m = np.asarray(mask_plane, dtype=bool)
    pad = np.pad(m, 1, constant_values=False)
    nb_bg = (~pad[:-2, 1:-1] | ~pad[2:, 1:-1]
             | ~pad[1:-1, :-2] | ~pad[1:-1, 2:])
    return m & nb_bg


def _check_dims(op, pred, gt):
    pred, gt = np.asarray(pred), np.asarray(gt)
    if pred.shape != gt.shape:
        raise ShapeError(op, f"pred {pred.shape} vs gt {gt.shape}")
    return pred, gt


def metric_j(pred, gt, obj_id):
    """Region similarity: |pred AND gt| / |pred OR gt| for one object id."""
    pred, gt = _check_dims("metric_j", pred, gt)
    p = pred == obj_id
    g = gt == obj_id
    union = np.logical_or(p, g).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(p, g).sum() / union)


def metric_f(pred, gt, obj_id, tol=None):
    """Boundary F-measure within ``tol`` pixels (Euclidean)."""
    pred, gt = _check_dims("metric_f", pred, gt)
    if tol is None:
        tol = default_boundary_tol(pred.shape)
    pb = boundary_map(pred == obj_id)
    gb = boundary_map(gt == obj_id)
    n_p, n_g = int(pb.sum()), int(gb.sum())
    if n_p == 0 and n_g == 0:
        return 1.0
    if n_p == 0 or n_g == 0:
        return 0.0
    dist_to_g = distance_transform_edt(~gb)
    dist_to_p = distance_transform_edt(~pb)
    precision = float((dist_to_g[pb] <= tol).mean())
    recall = float((dist_to_p[gb] <= tol).mean())
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def metric_jf(j, f):
    return 0.5 * (j + f)


def evaluate_sequence(pred_masks, gt_masks, num_objects, tol=None,
                      skip_first=True):
    """Per-object J/F averaged over frames, then averaged over objects.

    Frame 1 is excluded by default (it is given, not predicted). Returns
    (J, F, J&F) for the sequence."""
    start = 1 if skip_first else 0
    js, fs = [], []
    for obj in range(1, num_objects + 1):
        j_vals, f_vals = [], []
        for t in range(start, len(gt_masks)):
            j_vals.append(metric_j(pred_masks[t], gt_masks[t], obj))
            f_vals.append(metric_f(pred_masks[t], gt_masks[t], obj, tol))
        js.append(float(np.mean(j_vals)))
        fs.append(float(np.mean(f_vals)))
    j = float(np.mean(js))
    f = float(np.mean(fs))
    return j, f, metric_jf(j, f)
