"""Deterministic file formats: CSV series/matrices, JSON configs and
reports, SVG heatmaps and line charts.

Floats are written with Python's shortest round-trip repr, so
serialize -> parse -> serialize is byte-identical.  The linear ``value``
column is left empty whenever the represented value falls outside the
linear double range (it is always recoverable from ``log10_value``).
"""

from __future__ import annotations

import json
import math
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .discovery import ColorBucket, ConfidenceRegion, DiagonalSeries, DiscoveryMatrix, colorize
from .errors import DomainError
from .logvalue import LogValue
from .martingales import _frozen
from .merging import MergeSpec
from .polynomials import MultiaffinePoly, subset_to_mask
from .simulate import ExperimentConfig, RunResult

BUCKET_HEX: Mapping[ColorBucket, str] = {
    ColorBucket.GREEN: "#2ca02c",
    ColorBucket.YELLOW: "#ffdf00",
    ColorBucket.ORANGE: "#ff7f0e",
    ColorBucket.RED: "#d62728",
    ColorBucket.DARKRED: "#8b0000",
    ColorBucket.BLACK: "#000000",
}

SERIES_HEADER = "step,row,kind,log10_value,value"
MATRIX_HEADER = "r,j,log10_value,bucket"
VALUES_HEADER = "k,log10_value"


def fmt_float(x: float) -> str:
    return repr(float(x))


def parse_float(s: str) -> float:
    try:
        return float(s)
    except ValueError as exc:
        raise DomainError(f"not a number: {s!r}") from exc


def linear_cell(log10_value: float) -> str:
    """Linear value text, or empty when outside the double range."""
    v = LogValue.from_log10(log10_value)
    x = v.value
    if math.isinf(x):
        return ""
    if x == 0.0 and not v.is_zero:
        return ""  # positive but underflows
    return fmt_float(x)


# ---------------------------------------------------------------------------
# series


@dataclass(frozen=True)
class SeriesRecord:
    step: int
    row: int
    kind: str
    log10_value: float
    value: float | None


def series_records(run: RunResult) -> list[SeriesRecord]:
    records: list[SeriesRecord] = []
    rows = sorted(set(run.diagonal_series) | set(run.subdiagonal_series))
    n_steps = 0
    for series in list(run.diagonal_series.values()) + list(run.subdiagonal_series.values()):
        n_steps = max(n_steps, len(series))
    for step in range(1, n_steps + 1):
        for row in rows:
            for kind, table in (("diagonal", run.diagonal_series),
                                ("subdiagonal", run.subdiagonal_series)):
                series = table.get(row)
                if series is None or len(series) < step:
                    continue
                l10 = float(series.log10_values[step - 1])
                cell = linear_cell(l10)
                records.append(SeriesRecord(
                    step=step, row=row, kind=kind, log10_value=l10,
                    value=parse_float(cell) if cell else None,
                ))
    return records


def series_csv(records: Sequence[SeriesRecord]) -> str:
    lines = [SERIES_HEADER]
    for rec in records:
        value = "" if rec.value is None else fmt_float(rec.value)
        lines.append(f"{rec.step},{rec.row},{rec.kind},{fmt_float(rec.log10_value)},{value}")
    return "\n".join(lines) + "\n"


def parse_series_csv(text: str) -> list[SeriesRecord]:
    lines = text.splitlines()
    if not lines or lines[0] != SERIES_HEADER:
        raise DomainError(f"series CSV must start with {SERIES_HEADER!r}")
    records = []
    for line in lines[1:]:
        if not line:
            continue
        step, row, kind, l10, value = line.split(",")
        records.append(SeriesRecord(
            step=int(step), row=int(row), kind=kind,
            log10_value=parse_float(l10),
            value=parse_float(value) if value else None,
        ))
    return records


# ---------------------------------------------------------------------------
# matrices and value lists


def matrix_csv(m: DiscoveryMatrix) -> str:
    lines = [MATRIX_HEADER]
    for r in range(1, m.k + 1):
        for j in range(r + 1):
            l10 = m.log10_entry(r, j)
            bucket = colorize(m.entry(r, j)).value
            lines.append(f"{r},{j},{fmt_float(l10)},{bucket}")
    return "\n".join(lines) + "\n"


def parse_matrix_csv(text: str) -> DiscoveryMatrix:
    lines = text.splitlines()
    if not lines or lines[0] != MATRIX_HEADER:
        raise DomainError(f"matrix CSV must start with {MATRIX_HEADER!r}")
    cells: dict[tuple[int, int], float] = {}
    k = 0
    for line in lines[1:]:
        if not line:
            continue
        r_s, j_s, l10, _bucket = line.split(",")
        r, j = int(r_s), int(j_s)
        cells[(r, j)] = parse_float(l10)
        k = max(k, r)
    rows = []
    for r in range(1, k + 1):
        row = np.empty(r + 1)
        for j in range(r + 1):
            if (r, j) not in cells:
                raise DomainError(f"matrix CSV is missing cell ({r},{j})")
            row[j] = cells[(r, j)]
        rows.append(_frozen(row))
    return DiscoveryMatrix(rows=tuple(rows), regularized=False)


def values_csv(values: Sequence[LogValue]) -> str:
    lines = [VALUES_HEADER]
    for i, v in enumerate(values, start=1):
        lines.append(f"{i},{fmt_float(v.log10)}")
    return "\n".join(lines) + "\n"


def parse_values_csv(text: str) -> list[LogValue]:
    lines = text.splitlines()
    if not lines or lines[0] != VALUES_HEADER:
        raise DomainError(f"values CSV must start with {VALUES_HEADER!r}")
    by_index: dict[int, LogValue] = {}
    for line in lines[1:]:
        if not line:
            continue
        k_s, l10 = line.split(",")
        by_index[int(k_s)] = LogValue.from_log10(parse_float(l10))
    if sorted(by_index) != list(range(1, len(by_index) + 1)):
        raise DomainError("values CSV must number hypotheses 1..K")
    return [by_index[i] for i in range(1, len(by_index) + 1)]


# ---------------------------------------------------------------------------
# SVG


def heatmap_svg(m: DiscoveryMatrix, cell: int = 4) -> str:
    """One rect per matrix cell, row 1 at the top, colored by bucket."""
    width = (m.k + 1) * cell
    height = m.k * cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for r in range(1, m.k + 1):
        y = (r - 1) * cell
        for j in range(r + 1):
            hexcode = BUCKET_HEX[colorize(m.entry(r, j))]
            parts.append(
                f'<rect x="{j * cell}" y="{y}" width="{cell}" height="{cell}" fill="{hexcode}"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


_LINE_COLORS = ("#2ca02c", "#ff7f0e", "#1f77b4", "#d62728", "#9467bd", "#8c564b")


def series_svg(series: Sequence[DiagonalSeries], width: int = 640, height: int = 400) -> str:
    """Log-scale line chart of tracked bounds over steps."""
    finite: list[float] = []
    for s in series:
        vals = s.log10_values[np.isfinite(s.log10_values)]
        finite.extend(float(v) for v in vals)
    lo = min(finite, default=-1.0) - 0.5
    hi = max(finite, default=1.0) + 0.5
    span = hi - lo if hi > lo else 1.0
    n = max((len(s) for s in series), default=1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if lo < 0.0 < hi:
        y0 = height - (0.0 - lo) / span * height
        parts.append(
            f'<line x1="0" y1="{y0:.2f}" x2="{width}" y2="{y0:.2f}" '
            f'stroke="#cccccc" stroke-width="1"/>'
        )
    for idx, s in enumerate(sorted(series, key=lambda s: (s.kind, s.row))):
        color = _LINE_COLORS[idx % len(_LINE_COLORS)]
        points = []
        for i in range(len(s)):
            v = float(s.log10_values[i])
            if not math.isfinite(v):
                v = lo if v < 0 else hi
            x = (i + 1) / n * width
            y = height - (v - lo) / span * height
            points.append(f"{x:.2f},{y:.2f}")
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{" ".join(points)}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# JSON: merge specs, configs, polynomials, regions, manifest


def merge_spec_to_obj(spec: MergeSpec) -> dict:
    if spec.kind == "nesp":
        return {"kind": "nesp", "n": spec.n}
    return {"kind": "mixture", "weights": list(spec.weights)}  # type: ignore[arg-type]


def merge_spec_from_obj(obj) -> MergeSpec:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise DomainError(f"merge spec must be an object with a kind, got {obj!r}")
    if obj["kind"] == "nesp":
        return MergeSpec.nesp(int(obj["n"]))
    if obj["kind"] == "mixture":
        return MergeSpec.mixture(obj["weights"])
    raise DomainError(f"unknown merge kind {obj['kind']!r}")


def parse_merge_flag(text: str) -> MergeSpec:
    """CLI merge notation: u1, u2, ... or mix:w0,w1,..."""
    if text.startswith("u") and text[1:].isdigit():
        return MergeSpec.nesp(int(text[1:]))
    if text.startswith("mix:"):
        try:
            weights = [float(w) for w in text[4:].split(",")]
        except ValueError as exc:
            raise DomainError(f"bad mixture weights in {text!r}") from exc
        return MergeSpec.mixture(weights)
    raise DomainError(f"bad merge spec {text!r} (expected uN or mix:w0,w1,...)")


def config_to_obj(cfg: ExperimentConfig) -> dict:
    def dist(d):
        return {"mean": float(d[0]), "sd": float(d[1])}

    return {
        "k": cfg.k,
        "n_false": cfg.n_false,
        "null_dist": dist(cfg.null_dist),
        "true_dist_false_nulls": dist(cfg.true_dist_false_nulls),
        "bet_dist": dist(cfg.bet_dist),
        "steps": cfg.steps,
        "seed": cfg.seed,
        "scheduler": cfg.scheduler,
        "tracked_rows": list(cfg.tracked_rows),
        "merge_diagonal": merge_spec_to_obj(cfg.merge_diagonal),
        "merge_subdiagonal": merge_spec_to_obj(cfg.merge_subdiagonal),
        "merge_matrix": merge_spec_to_obj(cfg.merge_matrix),
        "checkpoints": list(cfg.checkpoints),
    }


def config_to_json(cfg: ExperimentConfig) -> str:
    return json.dumps(config_to_obj(cfg), indent=2, sort_keys=True) + "\n"


def _dist_from_obj(obj, name: str) -> tuple[float, float]:
    if not isinstance(obj, dict) or set(obj) != {"mean", "sd"}:
        raise DomainError(f"{name} must be an object with mean and sd, got {obj!r}")
    return (float(obj["mean"]), float(obj["sd"]))


def config_from_obj(obj) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise DomainError("config must be a JSON object")
    try:
        return ExperimentConfig(
            k=int(obj["k"]),
            n_false=int(obj["n_false"]),
            null_dist=_dist_from_obj(obj["null_dist"], "null_dist"),
            true_dist_false_nulls=_dist_from_obj(
                obj["true_dist_false_nulls"], "true_dist_false_nulls"
            ),
            bet_dist=_dist_from_obj(obj["bet_dist"], "bet_dist"),
            steps=int(obj["steps"]),
            seed=int(obj.get("seed", 0)),
            scheduler=obj.get("scheduler", "uniform"),
            tracked_rows=tuple(int(r) for r in obj.get("tracked_rows", [])),
            merge_diagonal=merge_spec_from_obj(obj.get("merge_diagonal", {"kind": "nesp", "n": 1})),
            merge_subdiagonal=merge_spec_from_obj(
                obj.get("merge_subdiagonal", {"kind": "nesp", "n": 2})
            ),
            merge_matrix=merge_spec_from_obj(obj.get("merge_matrix", {"kind": "nesp", "n": 1})),
            checkpoints=tuple(int(c) for c in obj.get("checkpoints", [])),
        )
    except KeyError as exc:
        raise DomainError(f"config is missing field {exc.args[0]!r}") from exc


def config_from_json(text: str) -> ExperimentConfig:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"config is not valid JSON: {exc}") from exc
    return config_from_obj(obj)


def poly_from_json(text: str) -> MultiaffinePoly:
    """Polynomial JSON: {"k": 2, "coeffs": {"": 0.2, "1": 0.3, "1,2": 0.5}}."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"polynomial is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "k" not in obj or "coeffs" not in obj:
        raise DomainError("polynomial JSON needs fields k and coeffs")
    k = int(obj["k"])
    coeffs: dict[int, float] = {}
    for key, val in obj["coeffs"].items():
        subset = tuple(int(s) for s in key.split(",")) if key.strip() else ()
        coeffs[subset_to_mask(subset, k)] = float(val)
    return MultiaffinePoly(k=k, coeffs=coeffs)


def region_to_obj(region: ConfidenceRegion) -> dict:
    return {
        "r": region.r,
        "alpha": region.alpha,
        "members": sorted(region.members),
        "lower_bound": region.lower_bound,
    }


def manifest_json(cfg: ExperimentConfig, files: Sequence[str]) -> str:
    obj = {
        "config": config_to_obj(cfg),
        "seed": cfg.seed,
        "versions": {
            "evalanche": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "files": sorted(files),
    }
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# output bundle


REGION_ALPHAS = (10.0, 100.0)


@dataclass(frozen=True)
class OutputBundle:
    manifest: Path
    series_csv: Path | None
    series_svg: Path | None
    matrix_csvs: tuple[Path, ...]
    heatmap_svgs: tuple[Path, ...]
    region_reports: tuple[Path, ...]


def write_bundle(cfg: ExperimentConfig, run: RunResult, out_dir: str | Path) -> OutputBundle:
    """Write every artifact of a run; the manifest pins (config, seed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []

    series_path = svg_path = None
    if cfg.tracked_rows:
        series_path = out / "series.csv"
        series_path.write_text(series_csv(series_records(run)))
        files.append(series_path.name)
        all_series = list(run.diagonal_series.values()) + list(run.subdiagonal_series.values())
        svg_path = out / "series.svg"
        svg_path.write_text(series_svg(all_series))
        files.append(svg_path.name)

    matrix_paths: list[Path] = []
    heatmap_paths: list[Path] = []
    region_paths: list[Path] = []
    from .discovery import confidence_region  # local import avoids a cycle at module load

    for step in sorted(run.matrices):
        raw, reg = run.matrices[step]
        raw_path = out / f"matrix_{step}.csv"
        raw_path.write_text(matrix_csv(raw))
        reg_path = out / f"matrix_{step}_regularized.csv"
        reg_path.write_text(matrix_csv(reg))
        hm_path = out / f"heatmap_{step}.svg"
        hm_path.write_text(heatmap_svg(raw))
        matrix_paths += [raw_path, reg_path]
        heatmap_paths.append(hm_path)
        files += [raw_path.name, reg_path.name, hm_path.name]
        if cfg.tracked_rows:
            report = {
                "step": step,
                "regions": [
                    region_to_obj(confidence_region(reg, r, alpha))
                    for r in sorted(set(cfg.tracked_rows))
                    for alpha in REGION_ALPHAS
                ],
            }
            rp = out / f"regions_{step}.json"
            rp.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
            region_paths.append(rp)
            files.append(rp.name)

    manifest_path = out / "manifest.json"
    manifest_path.write_text(manifest_json(cfg, files + [manifest_path.name]))
    return OutputBundle(
        manifest=manifest_path,
        series_csv=series_path,
        series_svg=svg_path,
        matrix_csvs=tuple(matrix_paths),
        heatmap_svgs=tuple(heatmap_paths),
        region_reports=tuple(region_paths),
    )
