from __future__ import annotations

import math


def metric_rmse(est: dict, truth: dict) -> float:
    """RMSE over the flows present in ``truth``; missing estimates count as 0."""
    if not truth:
        return 0.0
    se = sum((est.get(x, 0.0) - f) ** 2 for x, f in truth.items())
    return math.sqrt(se / len(truth))


def metric_f1(est: set, truth: set) -> tuple[float, float, float]:
    """(precision, recall, f1). Two empty sets score a perfect 1."""
    est, truth = set(est), set(truth)
    if not est and not truth:
        return 1.0, 1.0, 1.0
    tp = len(est & truth)
    precision = tp / len(est) if est else 0.0
    recall = tp / len(truth) if truth else 0.0
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def metric_wmrd(est_hist: dict, truth_hist: dict) -> float:
    sizes = set(est_hist) | set(truth_hist)
    err = sum(abs(truth_hist.get(i, 0) - est_hist.get(i, 0)) for i in sizes)
    avg = sum((truth_hist.get(i, 0) + est_hist.get(i, 0)) / 2 for i in sizes)
    if avg == 0:
        return 0.0 if err == 0 else 2.0
    return err / avg
