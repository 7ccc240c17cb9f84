"""Observability Gramian metrics and observation effectiveness."""

from dataclasses import dataclass

import numpy as np

STATE_LABELS = tuple(f"{c}{i}" for i in (1, 2) for c in ("x", "y", "z", "vx", "vy", "vz"))


@dataclass(frozen=True)
class ObservabilityReport:
    gramian: np.ndarray
    singular_values: np.ndarray
    condition_number: float
    unobservability_index: float
    state_ranking: tuple

    def to_dict(self):
        def _num(v):
            return None if not np.isfinite(v) else float(v)

        return {
            "singular_values": [float(s) for s in self.singular_values],
            "condition_number": _num(self.condition_number),
            "unobservability_index": _num(self.unobservability_index),
            "state_ranking": list(self.state_ranking),
        }


def svd_metrics(gramian):
    """Condition number, unobservability index and the SVD triple of a Gramian.

    A zero smallest singular value yields ``inf`` for both metrics.
    """
    g = np.asarray(gramian, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("gramian must be square")
    U, s, Vt = np.linalg.svd(0.5 * (g + g.T))
    s_min = s[-1]
    if s_min <= 0.0:
        return np.inf, np.inf, (U, s, Vt)
    return s[0] / s_min, 1.0 / s_min, (U, s, Vt)


def rank_states(U, s=None, labels=STATE_LABELS, rule="dominant"):
    """Order states from most to least observable.

    ``rule="dominant"`` walks the singular directions from strongest to
    weakest and assigns each the not-yet-ranked state with the largest
    component. ``rule="energy"`` sorts by ``sum_k s_k * U[i, k]**2``.
    """
    n = U.shape[0]
    if rule == "dominant":
        order = []
        for k in range(n):
            for i in np.argsort(-np.abs(U[:, k]), kind="stable"):
                if i not in order:
                    order.append(int(i))
                    break
    elif rule == "energy":
        order = [int(i) for i in np.argsort(-(U**2 @ s), kind="stable")]
    else:
        raise ValueError("rule must be 'dominant' or 'energy'")
    return tuple(labels[i] for i in order)


def accumulate_gramian(stms, rows, labels=STATE_LABELS, rule="dominant"):
    """Sum ``Phi_k^T H_k^T H_k Phi_k`` over epochs and summarize it.

    ``stms`` map deviations from the reference epoch to each measurement
    epoch; ``rows`` are the matching measurement partials (1-D rows or
    m x n blocks).
    """
    gram = None
    for phi, h in zip(stms, rows):
        hp = np.atleast_2d(h) @ phi
        term = hp.T @ hp
        gram = term if gram is None else gram + term
    if gram is None:
        raise ValueError("need at least one epoch")
    gram = 0.5 * (gram + gram.T)
    cond, unobs, (U, s, _) = svd_metrics(gram)
    return ObservabilityReport(gram, s, cond, unobs, rank_states(U, s, labels[: gram.shape[0]], rule))


def observation_effectiveness(pos_trace_pre, pos_trace_post):
    """Cumulative relative reduction of each spacecraft's position-covariance trace.

    Inputs have shape ``(n_updates, n_spacecraft)``; the result has the same
    shape and is non-decreasing down each column.
    """
    pre = np.asarray(pos_trace_pre, dtype=float)
    post = np.asarray(pos_trace_post, dtype=float)
    gain = np.where(pre > 0, (pre - post) / np.where(pre > 0, pre, 1.0), 0.0)
    return np.cumsum(np.clip(gain, 0.0, None), axis=0)
