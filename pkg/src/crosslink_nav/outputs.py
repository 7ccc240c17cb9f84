"""CSV and JSON writers for scenario artifacts.

Floats are written with ``repr`` so identical runs give byte-identical files.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .observability import STATE_LABELS
from .scenario import DAY_S

_AXES = ("x", "y", "z", "vx", "vy", "vz")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


class ArtifactWriter:
    """Writes tables as CSV or JSON into ``out_dir`` and keeps a manifest."""

    def __init__(self, out_dir, fmt="csv"):
        if fmt not in ("csv", "json"):
            raise ValueError("format must be 'csv' or 'json'")
        self.out = Path(out_dir)
        self.fmt = fmt
        self.manifest = []
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"{self.out}: cannot create output directory ({exc.strerror})") from exc

    def _path(self, name):
        return self.out / name

    def table(self, stem, header, rows):
        if self.fmt == "csv":
            path = self._path(stem + ".csv")
            try:
                with open(path, "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(header)
                    for row in rows:
                        w.writerow([_fmt(v) for v in row])
            except OSError as exc:
                raise OSError(f"{path}: {exc.strerror}") from exc
        else:
            path = self._path(stem + ".json")
            records = [dict(zip(header, row)) for row in rows]
            self._dump(path, {"columns": list(header), "rows": records})
        self.manifest.append(path.name)
        return path

    def document(self, stem, data):
        path = self._path(stem + ".json")
        self._dump(path, data)
        self.manifest.append(path.name)
        return path

    def _dump(self, path, data):
        try:
            with open(path, "w") as fh:
                json.dump(_clean(data), fh, indent=2, sort_keys=False)
                fh.write("\n")
        except OSError as exc:
            raise OSError(f"{path}: {exc.strerror}") from exc


def state_columns(prefix=""):
    """``x1_km ... vz2_kms`` with an optional prefix such as ``"err_"``."""
    return [f"{prefix}{a}{i}_{'kms' if a.startswith('v') else 'km'}" for i in (1, 2) for a in _AXES]


def dimensional(states, params):
    """Scale non-dimensional 12-states to km and km/s."""
    scale = np.array(([params.l_star] * 3 + [params.velocity_unit_kms] * 3) * 2)
    return np.asarray(states) * scale


def write_truth(w, epochs_s, states, params):
    header = ["epoch_s"] + state_columns()
    dim = dimensional(states, params)
    return w.table("truth", header, [[t, *row] for t, row in zip(epochs_s, dim)])


def write_measurements(w, measurements, scn):
    unit = "kms" if scn.kind == "range_rate" else "km"
    scale = scn.meas_unit_km
    tu = scn.params.time_unit_s
    header = ["epoch_s", "kind", f"value_{unit}", f"sigma_{unit}", f"bias_truth_{unit}"]
    rows = [[m.epoch * tu, m.kind, m.value * scale, m.sigma * scale, m.bias_truth * scale] for m in measurements]
    return w.table("measurements", header, rows)


def write_estimates(w, run, scn):
    """epoch_days, 12 state errors, 12 sigmas, residual, then augmented states."""
    p = scn.params
    err = dimensional(run.errors, p)
    sig = dimensional(run.sigma[:, :12], p)
    unit = scn.meas_unit_km
    header = (
        ["epoch_days"]
        + state_columns("err_")
        + state_columns("sigma_")
        + ["residual"]
    )
    n_aug = run.x_hat.shape[1] - 12
    aug_names = ["bias", "drift"][:n_aug]
    for name in aug_names:
        header += [f"{name}_hat", f"{name}_sigma"]
    rows = []
    days = p.nd_to_seconds(run.epochs) / DAY_S
    for k in range(run.n):
        row = [days[k], *err[k], *sig[k], run.residuals[k] * unit]
        for j in range(n_aug):
            s = unit if j == 0 else unit / p.time_unit_s
            row += [run.x_hat[k, 12 + j] * s, run.sigma[k, 12 + j] * s]
        rows.append(row)
    return w.table("estimates", header, rows)


def write_effectiveness(w, epochs_s, eff):
    header = ["epoch_days", "lumio", "lpf"]
    return w.table("effectiveness", header, [[t / DAY_S, a, b] for t, (a, b) in zip(epochs_s, eff)])


def write_montecarlo(w, mc):
    cols = ["pos_lumio_km", "vel_lumio_kms", "pos_lpf_km", "vel_lpf_kms"]
    header = ["epoch_days"] + [f"rmse_{c}" for c in cols] + [f"rms_sigma_{c}" for c in cols]
    rows = [[d, *a, *b] for d, a, b in zip(mc.epochs_days, mc.rmse, mc.rms_sigma)]
    path = w.table("rmse", header, rows)
    runs = [
        {
            "index": r.index,
            "diverged": r.diverged,
            "post6_pos_rmse_m": list(r.post6_pos_rmse_m),
            "post6_vel_rmse_mms": list(r.post6_vel_rmse_mms),
            "max3sigma_pos_km": list(r.max3sigma_pos_km),
            "max3sigma_vel_kms": list(r.max3sigma_vel_kms),
            "final_bias_m": r.final_bias_m,
        }
        for r in mc.runs
    ]
    w.document("summary", {**mc.summary, "per_run": runs})
    return path


def write_simulation(w, sim):
    scn = sim.scenario
    run = sim.result.run
    tu = scn.params.time_unit_s
    write_truth(w, scn.epochs_s, scn.ensure_truth(), scn.params)
    write_measurements(w, sim.result.measurements, scn)
    write_estimates(w, run, scn)
    write_effectiveness(w, run.epochs * tu, sim.effectiveness)
    write_observability(w, sim.report, run.epochs * tu, sim.effectiveness)
    w.document("summary", sim.summary)
    return w.manifest


def write_observability(w, report, epochs_s=None, eff=None):
    data = report.to_dict()
    data["state_labels"] = list(STATE_LABELS)
    data["gramian"] = report.gramian.tolist()
    if eff is not None:
        data["effectiveness"] = {
            "epoch_days": (np.asarray(epochs_s) / DAY_S).tolist(),
            "lumio": eff[:, 0].tolist(),
            "lpf": eff[:, 1].tolist(),
        }
    return w.document("observability", data)
