"""One renderer per figure id plus a dispatcher.

Input is the CSV written by `beamrate figure <id>` (plus its optional JSON
sidecar, used only for the title). Rendering is read-only and
deterministic: a fixed style file ships with the package and the PNG
metadata carries no timestamps, so identical CSVs produce identical
bytes.
"""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

SUPPORTED_SCHEMA_VERSION = 1

_COLUMNS = {
    "fig1": ("x", "cdf_empirical", "cdf_exact", "cdf_bound", "cdf_approx"),
    "fig2": ("K", "M", "rho_dB", "exact_rate", "approx_rate"),
    "fig4": ("K", "L", "exact_rate", "approx_rate"),
    "fig5": ("rho_dB", "L", "exact_rate", "approx_rate"),
    "fig6": ("x", "L", "cdf_w", "cdf_tail_equivalent"),
}

FIGURE_IDS = tuple(_COLUMNS)

_RATE_LABEL = "individual sum rate (bits/s/Hz)"


class SchemaError(ValueError):
    """The CSV does not match the renderer's expected schema."""


def _load_rows(csv_path: Path, figure_id: str) -> list[dict]:
    try:
        with open(csv_path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames
            rows = list(reader)
    except OSError as exc:
        raise SchemaError(f"cannot read {csv_path}: {exc}")
    expected = _COLUMNS[figure_id]
    if header is None or set(header) != set(expected):
        raise SchemaError(
            f"{figure_id} expects columns {sorted(expected)}, "
            f"found {sorted(header or [])}")
    if not rows:
        raise SchemaError(f"{csv_path} has a header but no data rows")
    out = []
    for row in rows:
        try:
            out.append({k: float(v) for k, v in row.items()})
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"non-numeric cell in {csv_path}: {exc}")
    return out


def _sidecar_title(csv_path: Path, figure_id: str) -> str:
    sidecar = csv_path.with_suffix(".json")
    if sidecar.exists():
        try:
            meta = json.loads(sidecar.read_text())
        except (OSError, json.JSONDecodeError):
            return figure_id
        version = meta.get("schema_version")
        if version is not None and version != SUPPORTED_SCHEMA_VERSION:
            raise SchemaError(
                f"sidecar schema version {version} unsupported "
                f"(renderer supports {SUPPORTED_SCHEMA_VERSION})")
        return meta.get("description", figure_id)
    return figure_id


def _series(rows, key):
    return sorted({row[key] for row in rows})


def _render_fig1(ax, rows):
    x = [r["x"] for r in rows]
    for col, label, style in (
            ("cdf_empirical", "simulated", "k."),
            ("cdf_exact", "exact", "-"),
            ("cdf_bound", "per-beam bound", "--"),
            ("cdf_approx", "independence approx.", ":")):
        ax.plot(x, [r[col] for r in rows], style, label=label)
    ax.set_xlabel("SINR (linear)")
    ax.set_ylabel("CDF")


def _render_rate_curves(ax, rows, x_key, x_label, group_keys):
    groups = sorted({tuple(r[k] for k in group_keys) for r in rows})
    for g in groups:
        sub = sorted((r for r in rows
                      if tuple(r[k] for k in group_keys) == g),
                     key=lambda r: r[x_key])
        tag = ", ".join(f"{k}={v:g}" for k, v in zip(group_keys, g))
        xs = [r[x_key] for r in sub]
        ax.plot(xs, [r["exact_rate"] for r in sub], "-",
                label=f"exact ({tag})")
        ax.plot(xs, [r["approx_rate"] for r in sub], "--",
                label=f"approx ({tag})")
    ax.set_xlabel(x_label)
    ax.set_ylabel(_RATE_LABEL)


def _render_fig2(ax, rows):
    _render_rate_curves(ax, rows, "K", "number of users K", ("M", "rho_dB"))


def _render_fig4(ax, rows):
    _render_rate_curves(ax, rows, "K", "number of users K", ("L",))


def _render_fig5(ax, rows):
    _render_rate_curves(ax, rows, "rho_dB", "SNR (dB)", ("L",))


def _render_fig6(ax, rows):
    for L in _series(rows, "L"):
        sub = sorted((r for r in rows if r["L"] == L),
                     key=lambda r: r["x"])
        xs = [r["x"] for r in sub]
        ax.plot(xs, [r["cdf_w"] for r in sub], "-", label=f"selected (L={L:g})")
        ax.plot(xs, [r["cdf_tail_equivalent"] for r in sub], "--",
                label=f"tail equivalent (L={L:g})")
    ax.set_xlabel("SINR (linear)")
    ax.set_ylabel("CDF")


_RENDERERS = {
    "fig1": _render_fig1,
    "fig2": _render_fig2,
    "fig4": _render_fig4,
    "fig5": _render_fig5,
    "fig6": _render_fig6,
}


def render(figure_id: str, csv_path: str | Path, out_path: str | Path) -> Path:
    """Render one figure CSV to a raster image at out_path."""
    if figure_id not in _RENDERERS:
        raise SchemaError(f"unknown figure id {figure_id!r}; "
                          f"supported: {', '.join(FIGURE_IDS)}")
    csv_path = Path(csv_path)
    out_path = Path(out_path)
    rows = _load_rows(csv_path, figure_id)
    title = _sidecar_title(csv_path, figure_id)

    style = resources.files("plotview") / "style.mplstyle"
    with plt.style.context(["default", str(style)]):
        fig, ax = plt.subplots()
        try:
            _RENDERERS[figure_id](ax, rows)
            ax.set_title(title, fontsize=9, wrap=True)
            ax.legend(loc="best", ncol=2)
            fig.tight_layout()
            out_path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(out_path, metadata={"Software": "plotview"})
        finally:
            plt.close(fig)
    return out_path
