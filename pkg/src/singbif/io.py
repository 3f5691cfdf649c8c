"""Configuration and deterministic writers: CSV, JSON and the SVG diagram."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import DomainError

__all__ = [
    "RunConfig",
    "ConfigError",
    "parse_config",
    "fmt",
    "csv_text",
    "write_csv",
    "read_csv",
    "json_text",
    "write_json",
    "read_json",
    "branch_rows",
    "write_branch_csv",
    "read_branch_csv",
    "diagram_svg",
    "emit_diagram",
    "BRANCH_HEADER",
]


class ConfigError(DomainError):
    """Malformed configuration file or flag; the message names the key."""


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    radius: float = 1.0
    tol_ode: float = 1e-10
    tol_quad: float = 1e-10
    tol_shoot: float = 1e-11
    tol_verify: float = 1e-7
    kmax: int = 3
    h_max: float = 50.0
    h_min: float = 1e-4
    step_ratio: float = 1.25
    grid: list = field(default_factory=lambda: [200, 200])
    format: str = "csv"
    out: str | None = None

    def validate(self) -> RunConfig:
        if not self.radius > 0:
            raise ConfigError("radius: must be positive")
        for name in ("tol_ode", "tol_quad", "tol_shoot", "tol_verify"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name}: tolerance must be positive")
        if self.kmax < 1:
            raise ConfigError("kmax: must be at least 1")
        if not 0 < self.h_min < self.h_max:
            raise ConfigError("h_min/h_max: need 0 < h_min < h_max")
        if not self.step_ratio > 1:
            raise ConfigError("step_ratio: must exceed 1")
        if len(self.grid) != 2 or min(self.grid) < 2:
            raise ConfigError("grid: need two sizes >= 2")
        if self.format not in ("csv", "json"):
            raise ConfigError("format: csv or json")
        if self.out is not None:
            parent = Path(self.out).resolve().parent
            if not parent.is_dir() or not os.access(parent, os.W_OK):
                raise ConfigError(f"out: directory {parent} is not writable")
        return self


_CONFIG_KEYS = {f.name: f for f in fields(RunConfig)}


def _coerce(key, value):
    target = _CONFIG_KEYS[key].type
    try:
        if target == "float":
            return float(value)
        if target == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if target == "list":
            return [int(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {value!r}") from None
    return value


def parse_config(overrides: dict | None = None, path: str | Path | None = None) -> RunConfig:
    """Defaults, then the JSON file at ``path``, then non-None ``overrides``."""
    values: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be an object")
        for key, value in data.items():
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{key}: unknown configuration key")
            values[key] = _coerce(key, value)
    for key, value in (overrides or {}).items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{key}: unknown configuration key")
        if value is not None:
            values[key] = _coerce(key, value)
    return RunConfig(**values).validate()


# ---------------------------------------------------------------- CSV / JSON


def fmt(x) -> str:
    """15 significant digits, fixed spelling for non-finite values."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.15g}"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    Path(path).write_bytes(csv_text(header, rows).encode("utf-8"))


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) if math.isfinite(x) else None
    return obj


def json_text(obj) -> str:
    """Sorted keys, two-space indent, 15 significant digits, non-finite as null."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_bytes(json_text(obj).encode("utf-8"))


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- branches


BRANCH_HEADER = ["idx", "h", "lambda", "k", "sup_w", "inf_w", "barrier_gap", "nodes"]


def branch_rows(branch) -> list[list]:
    return [
        [i, p.h, p.lam, p.k, p.sup_w, p.inf_w, p.barrier_gap, ";".join(fmt(r) for r in p.nodes)]
        for i, p in enumerate(branch.points)
    ]


def write_branch_csv(path, branch) -> None:
    write_csv(path, BRANCH_HEADER, branch_rows(branch))


def read_branch_csv(path) -> list[dict]:
    header, rows = read_csv(path)
    if header != BRANCH_HEADER:
        raise DomainError(f"unexpected branch header {header}")
    out = []
    for row in rows:
        rec = dict(zip(header, row))
        out.append(
            {
                "idx": int(rec["idx"]),
                "h": float(rec["h"]),
                "lambda": float(rec["lambda"]),
                "k": int(rec["k"]),
                "sup_w": float(rec["sup_w"]),
                "inf_w": float(rec["inf_w"]),
                "barrier_gap": float(rec["barrier_gap"]),
                "nodes": [float(x) for x in rec["nodes"].split(";")] if rec["nodes"] else [],
            }
        )
    return out


# ---------------------------------------------------------------- SVG


_WIDTH, _HEIGHT = 800, 600
_LEFT, _RIGHT, _TOP, _BOTTOM = 80, 170, 40, 70
_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Ticks at multiples of 1, 2 or 5 times a power of ten inside [lo, hi]."""
    if not hi > lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9)
    stop = math.floor(hi / step + 1e-9)
    return [round(i * step, 12) for i in range(start, stop + 1)]


def _num(x: float) -> str:
    return f"{x:.2f}"


def _label(x: float) -> str:
    return f"{x:.6g}"


def branch_label(branch) -> str:
    return f"S{branch.k}{'+' if branch.sign > 0 else '-'}"


def diagram_svg(branches, eigen) -> str:
    """Bifurcation diagram: lambda against sup |w|, one polyline per branch.

    Dashed guides mark the bifurcation values mu_k / 2 and the asymptotic
    values of each branch family.
    """
    branches = [b for b in branches if b.points]
    if not branches:
        raise DomainError("diagram needs at least one nonempty branch")
    ks = sorted({b.k for b in branches})
    origins = {k: eigen.origin_lambda(k) for k in ks}
    asymptotes = {k: eigen.asymptote_lambda(k) for k in ks}
    xs = [p.lam for b in branches for p in b.points] + list(origins.values()) + list(asymptotes.values())
    ys = [max(abs(p.sup_w), abs(p.inf_w)) for b in branches for p in b.points]
    xt = nice_ticks(min(xs), max(xs))
    yt = nice_ticks(0.0, max(ys))
    x0, x1 = min(xt[0], min(xs)), max(xt[-1], max(xs))
    y0, y1 = 0.0, max(yt[-1], max(ys))
    pw, ph = _WIDTH - _LEFT - _RIGHT, _HEIGHT - _TOP - _BOTTOM

    def X(x):
        return _LEFT + (x - x0) / (x1 - x0) * pw

    def Y(y):
        return _TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in xt:
        if x0 <= t <= x1:
            out.append(f'<line x1="{_num(X(t))}" y1="{_num(Y(y0))}" x2="{_num(X(t))}" y2="{_num(Y(y0) + 5)}" stroke="black"/>')
            out.append(f'<text x="{_num(X(t))}" y="{_num(Y(y0) + 20)}" text-anchor="middle">{_label(t)}</text>')
    for t in yt:
        if y0 <= t <= y1:
            out.append(f'<line x1="{_num(X(x0) - 5)}" y1="{_num(Y(t))}" x2="{_num(X(x0))}" y2="{_num(Y(t))}" stroke="black"/>')
            out.append(f'<text x="{_num(X(x0) - 8)}" y="{_num(Y(t) + 4)}" text-anchor="end">{_label(t)}</text>')
    out.append(f'<text x="{_num(_LEFT + pw / 2)}" y="{_HEIGHT - 20}" text-anchor="middle">lambda</text>')
    out.append(
        f'<text x="20" y="{_num(_TOP + ph / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 20 {_num(_TOP + ph / 2)})">sup |w|</text>'
    )
    for k in ks:
        for value, colour in ((origins[k], "#555555"), (asymptotes[k], "#aaaaaa")):
            out.append(
                f'<line x1="{_num(X(value))}" y1="{_TOP}" x2="{_num(X(value))}" y2="{_TOP + ph}" '
                f'stroke="{colour}" stroke-dasharray="6,4"/>'
            )
    for i, b in enumerate(branches):
        colour = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{_num(X(p.lam))},{_num(Y(max(abs(p.sup_w), abs(p.inf_w))))}" for p in b.points)
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = _TOP + 15 + 18 * i
        lx = _WIDTH - _RIGHT + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{colour}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}">{branch_label(b)}</text>')
    ly = _TOP + 15 + 18 * len(branches)
    lx = _WIDTH - _RIGHT + 15
    out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="#555555" stroke-dasharray="6,4"/>')
    out.append(f'<text x="{lx + 32}" y="{ly + 4}">mu_k/2</text>')
    out.append(f'<line x1="{lx}" y1="{ly + 18}" x2="{lx + 25}" y2="{ly + 18}" stroke="#aaaaaa" stroke-dasharray="6,4"/>')
    out.append(f'<text x="{lx + 32}" y="{ly + 22}">asymptote</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def diagram_rows(branches) -> list[list]:
    return [
        [branch_label(b), b.k, b.sign, i, p.lam, max(abs(p.sup_w), abs(p.inf_w))]
        for b in branches
        for i, p in enumerate(b.points)
    ]


DIAGRAM_HEADER = ["branch", "k", "sign", "idx", "lambda", "sup_abs_w"]


def emit_diagram(branches, eigen, path) -> Path:
    """Write the SVG and a CSV sidecar next to it; returns the sidecar path."""
    path = Path(path)
    path.write_bytes(diagram_svg(branches, eigen).encode("utf-8"))
    sidecar = path.with_suffix(".csv")
    write_csv(sidecar, DIAGRAM_HEADER, diagram_rows(branches))
    return sidecar


def config_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)
