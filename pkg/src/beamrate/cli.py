"""Command-line harness: a thin HTTP client over the service app.

By default requests are served in-process through an ASGI transport, so no
server needs to run; --server points the same client at a remote instance.
Results are written as CSV plus a JSON metadata sidecar, atomically
(tmp-then-rename), so partially written outputs never appear.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import csv
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional

import click
import httpx
import yaml

from . import __version__
from .distributions import CACHE_DIR_ENV

EXIT_OK = 0
EXIT_VALIDATION_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _client(server: Optional[str]) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=3600.0)
    import warnings

    from .service import app  # deferred: fastapi import cost
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient
        return TestClient(app)


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise click.ClickException(f"cannot read config: {exc}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise click.ClickException("config must be a mapping")
    return data


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_results(out_dir: str, stem: str, columns: list[str],
                   rows: list[dict], meta: dict) -> Path:
    out = Path(out_dir)
    buf = []
    writer_target = []

    class _Sink:
        def write(self, s):
            writer_target.append(s)
            return len(s)

    w = csv.DictWriter(_Sink(), fieldnames=columns, extrasaction="ignore",
                       lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    csv_path = out / f"{stem}.csv"
    _atomic_write(csv_path, "".join(writer_target))
    meta = {"version": __version__, **meta}
    _atomic_write(out / f"{stem}.json", json.dumps(meta, indent=2) + "\n")
    return csv_path


def _post(client: httpx.Client, endpoint: str, payload: dict) -> dict:
    resp = client.post(endpoint, json=payload)
    if resp.status_code == 422:
        raise click.ClickException(f"invalid configuration: {resp.text}")
    resp.raise_for_status()
    return resp.json()


def _merge(config: dict, section: str, overrides: dict) -> dict:
    merged = dict(config.get(section, config) or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return merged


class _Cli(click.Group):
    # map config / argument errors to exit code 2 instead of click's 1
    def main(self, *args, **kwargs):
        try:
            return super().main(*args, standalone_mode=False, **kwargs)
        except click.UsageError as exc:
            exc.show()
            sys.exit(EXIT_CONFIG_ERROR)
        except click.ClickException as exc:
            exc.show()
            sys.exit(EXIT_CONFIG_ERROR)
        except click.Abort:
            sys.exit(EXIT_CONFIG_ERROR)


@click.group(cls=_Cli)
@click.version_option(__version__)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="YAML config file; flags override its values.")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              default=".", help="Output directory for CSV/JSON results.")
@click.option("--drops", type=click.IntRange(1), default=None)
@click.option("--tol", type=float, default=None,
              help="Relative tolerance for validation comparisons.")
@click.option("--server", default=None,
              help="Base URL of a running service (default: in-process).")
@click.option("--cache-dir", default=None,
              help=f"Coefficient cache directory (overrides ${CACHE_DIR_ENV}).")
@click.pass_context
def main(ctx, config_path, seed, out_dir, drops, tol, server, cache_dir):
    """Analytic rates, Monte Carlo simulation, and scaling diagnostics for
    random-beamforming downlinks with CDF-based scheduling."""
    if cache_dir:
        os.environ[CACHE_DIR_ENV] = cache_dir
    ctx.obj = {
        "config": _load_config(config_path),
        "seed": seed, "out": out_dir or ".", "drops": drops, "tol": tol,
        "server": server,
    }


@main.command("rate-table")
@click.option("--scheme", type=click.Choice(["full", "spatial", "best_l"]),
              default=None)
@click.option("--users", "-K", "k_grid", default=None,
              help="User counts, e.g. '1..50' or '5,10,20'.")
@click.option("--beams", "-M", "m", type=int, default=None)
@click.option("--blocks", "-N", "n", type=int, default=None)
@click.option("--feedback-depth", "-L", "l", type=int, default=None)
@click.option("--snr-db", type=float, default=None)
@click.pass_obj
def rate_table(obj, scheme, k_grid, m, n, l, snr_db):
    """Exact and approximate individual sum rates over a user-count grid."""
    payload = _merge(obj["config"], "rate_table", {
        "scheme": scheme, "K_grid": _parse_grid(k_grid), "M": m, "N": n,
        "L": l, "rho_dB": snr_db})
    payload.setdefault("M", 4)
    payload.setdefault("K_grid", list(range(1, 21)))
    with _client(obj["server"]) as c:
        data = _post(c, "/rate-table", payload)
    cols = ["scheme", "method", "K", "M", "N", "L", "rho_dB", "value",
            "error_estimate", "precision_loss"]
    path = _write_results(obj["out"], "rate_table", cols, data["rows"],
                          {"request": payload})
    click.echo(f"wrote {path}")


@main.command()
@click.option("--scheme", type=click.Choice(["full", "spatial", "best_l"]),
              default=None)
@click.option("--scheduler",
              type=click.Choice(["cdf_based", "greedy", "round_robin"]),
              default=None)
@click.option("--users", "-K", "k", type=int, default=None)
@click.option("--beams", "-M", "m", type=int, default=None)
@click.option("--blocks", "-N", "n", type=int, default=None)
@click.option("--feedback-depth", "-L", "l", type=int, default=None)
@click.option("--snr-db", multiple=True, type=float,
              help="Shared value, or one per user (repeatable).")
@click.pass_obj
def simulate(obj, scheme, scheduler, k, m, n, l, snr_db):
    """Monte Carlo estimate of rates, fairness, and outage."""
    payload = _merge(obj["config"], "simulate", {
        "scheme": scheme, "scheduler": scheduler, "K": k, "M": m, "N": n,
        "L": l, "rho_dB": list(snr_db) or None, "drops": obj["drops"],
        "seed": obj["seed"]})
    payload.setdefault("M", 4)
    payload.setdefault("K", 10)
    payload.setdefault("rho_dB", [10.0])
    with _client(obj["server"]) as c:
        data = _post(c, "/simulate", payload)
    rows = [{"user": k_, "mean_rate": mr, "mean_rate_stderr": se,
             "individual_sum_rate": isr, "individual_sum_rate_stderr": ise,
             "selection_frequency": sf}
            for k_, (mr, se, isr, ise, sf) in enumerate(zip(
                data["mean_rate"], data["mean_rate_stderr"],
                data["individual_sum_rate"],
                data["individual_sum_rate_stderr"],
                data["selection_frequency"]))]
    cols = list(rows[0].keys())
    meta = {k_: v for k_, v in data.items()
            if not isinstance(v, list)} | {"request": payload}
    path = _write_results(obj["out"], "simulate", cols, rows, meta)
    click.echo(f"wrote {path}")
    click.echo(f"sum rate {data['sum_rate']:.4f} "
               f"+- {data['sum_rate_stderr']:.4f} bits/s/Hz")


@main.command()
@click.option("--scheme", type=click.Choice(["full", "spatial", "best_l"]),
              default=None)
@click.option("--users", "-K", "k_grid", default=None,
              help="Ascending user counts, e.g. '100,1000,10000'.")
@click.option("--beams", "-M", "m", type=int, default=None)
@click.option("--blocks", "-N", "n", type=int, default=None)
@click.option("--feedback-depth", "-L", "l", type=int, default=None)
@click.option("--snr-db", type=float, default=None)
@click.option("--constants", type=click.Choice(["calibrated", "as_printed"]),
              default=None, help="Normalizing-constant convention.")
@click.option("--natural-log", is_flag=True, default=False,
              help="Natural-log variant of the as-printed constants.")
@click.pass_obj
def scaling(obj, scheme, k_grid, m, n, l, snr_db, constants, natural_log):
    """Rate-growth ratios and Gumbel convergence diagnostics over K."""
    payload = _merge(obj["config"], "scaling", {
        "scheme": scheme, "K_grid": _parse_grid(k_grid), "M": m, "N": n,
        "L": l, "rho_dB": snr_db, "drops": obj["drops"],
        "seed": obj["seed"], "constants": constants,
        "natural_log": natural_log or None})
    payload.setdefault("M", 2)
    payload.setdefault("K_grid", [100, 1000, 10000])
    with _client(obj["server"]) as c:
        data = _post(c, "/scaling", payload)
    cols = ["K", "effective_K", "rate", "method", "ratio", "location",
            "scale", "ks_distance"]
    path = _write_results(obj["out"], "scaling", cols, data["rows"],
                          {"scheme": data["scheme"], "request": payload})
    click.echo(f"wrote {path}")


@main.command()
@click.argument("figure_id")
@click.pass_obj
def figure(obj, figure_id):
    """Reproduce one of the standard figures' data (fig1/2/4/5/6)."""
    seed = obj["seed"] if obj["seed"] is not None else 0
    with _client(obj["server"]) as c:
        resp = c.get(f"/figure/{figure_id}", params={"seed": seed})
        if resp.status_code == 404:
            raise click.ClickException(f"unknown figure id {figure_id!r}")
        resp.raise_for_status()
        data = resp.json()
    path = _write_results(
        obj["out"], figure_id, data["columns"], data["rows"],
        {"figure_id": figure_id, "description": data["description"],
         "params": data["params"], "seed": seed,
         "schema_version": data["schema_version"]})
    click.echo(f"wrote {path}")


@main.command()
@click.pass_obj
def validate(obj):
    """Run the oracle self-check suite; exit 1 on any failure."""
    with _client(obj["server"]) as c:
        data = _post(c, "/validate", {})
    for check in data["checks"]:
        mark = "PASS" if check["passed"] else "FAIL"
        click.echo(f"[{mark}] {check['name']}: {check['detail']}")
    if not data["passed"]:
        sys.exit(EXIT_VALIDATION_FAILURE)
    click.echo("all checks passed")


def _parse_grid(text: Optional[str]) -> Optional[list[int]]:
    if text is None:
        return None
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok.strip()]


if __name__ == "__main__":
    main()
