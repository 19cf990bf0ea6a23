"""`ceph` command line: batch decode, benchmarking, accuracy eval, serve."""

from __future__ import annotations

import glob
import json
import math
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import reporting
from .cephalometrics import (default_measurements, load_catalog,
                             load_measurements, pixel_distance,
                             validate_definitions)
from .errors import CephaloError
from .inference import SessionPool
from .pipeline import decode_file

SDR_THRESHOLDS_MM = (2.0, 2.5, 3.0, 4.0)

BENCH_STAGES = ("load", "normalize", "infer", "decode", "measure", "report")


@click.group()
@click.option("--model", "model_json", type=click.Path(exists=True, dir_okay=False),
              help="Backend descriptor (model.json).")
@click.option("--landmarks", "landmarks_json",
              type=click.Path(exists=True, dir_okay=False),
              help="Landmark catalog (landmarks.json).")
@click.option("--measurements", "measurements_json",
              type=click.Path(exists=True, dir_okay=False),
              help="Measurement battery (measurements.json).")
@click.option("--quiet", is_flag=True, help="Suppress progress output.")
@click.pass_context
def main(ctx, model_json, landmarks_json, measurements_json, quiet):
    """Cephalometric decoding toolkit."""
    ctx.ensure_object(dict)
    ctx.obj.update(model=model_json, landmarks=landmarks_json,
                   measurements=measurements_json, quiet=quiet)


def _load_config(ctx):
    definitions = (load_measurements(ctx.obj["measurements"])
                   if ctx.obj["measurements"] else default_measurements())
    if ctx.obj["landmarks"]:
        validate_definitions(definitions, load_catalog(ctx.obj["landmarks"]))
    return definitions


def _require_model(ctx) -> Path:
    if not ctx.obj["model"]:
        raise click.UsageError("--model is required for this command")
    return Path(ctx.obj["model"])


def _expand_inputs(inputs: tuple[str, ...]) -> list[Path]:
    paths: list[Path] = []
    for pattern in inputs:
        p = Path(pattern)
        if p.exists():
            paths.append(p)
        else:
            paths.extend(Path(m) for m in sorted(glob.glob(pattern)))
    return paths


@main.command()
@click.argument("inputs", nargs=-1)
@click.option("--out-dir", type=click.Path(file_okay=False), default=".",
              help="Directory for generated artifacts.")
@click.option("--csv/--no-csv", "want_csv", default=True)
@click.option("--json", "want_json", is_flag=True)
@click.option("--overlay", "want_overlay", is_flag=True)
@click.option("--chart", "want_chart", is_flag=True)
@click.option("--jobs", default=1, show_default=True,
              help="Parallel workers (bounded by the session pool).")
@click.pass_context
def decode(ctx, inputs, out_dir, want_csv, want_json, want_overlay,
           want_chart, jobs):
    """Decode radiographs and write per-image report artifacts."""
    model = _require_model(ctx)
    definitions = _load_config(ctx)
    paths = _expand_inputs(inputs)
    if not paths:
        raise click.UsageError("no inputs")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pool = SessionPool(model, size=max(1, jobs))
    quiet = ctx.obj["quiet"]

    def _one(path: Path) -> tuple[Path, float, str | None]:
        t0 = time.perf_counter()
        try:
            with pool.acquire() as backend:
                outcome, report = decode_file(path, backend, definitions)
            if want_csv:
                reporting.write_csv(report, out / (path.stem + ".report.csv"))
            if want_json:
                (out / (path.stem + ".report.json")).write_text(json.dumps({
                    "case_id": report.case_id,
                    "landmarks": [
                        {"id": lm.landmark_id, "x": lm.x, "y": lm.y,
                         "confidence": lm.confidence,
                         "provenance": lm.provenance}
                        for lm in report.landmarks.points.values()],
                    "missing": list(report.landmarks.missing),
                    "measurements": [
                        {"id": m.definition_id, "value": m.value,
                         "units": m.units, "status": m.status}
                        for m in report.measurements],
                    "timings_ms": report.timings_ms,
                }, indent=1))
            if want_overlay:
                (out / (path.stem + ".overlay.png")).write_bytes(
                    reporting.render_overlay(outcome.image, report.landmarks,
                                             definitions))
            if want_chart:
                (out / (path.stem + ".confidence.png")).write_bytes(
                    reporting.plot_confidences(report))
            return path, (time.perf_counter() - t0) * 1e3, None
        except (CephaloError, OSError) as exc:
            return path, (time.perf_counter() - t0) * 1e3, str(exc)

    wall0 = time.perf_counter()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_one, paths))
    else:
        results = [_one(p) for p in paths]
    wall_ms = (time.perf_counter() - wall0) * 1e3

    failed = 0
    for path, ms, error in results:
        if error:
            failed += 1
            click.echo(f"FAIL {path}: {error}", err=True)
        elif not quiet:
            click.echo(f"ok   {path} ({ms:.0f} ms)")
    if not quiet:
        click.echo(f"{len(results)} total, {len(results) - failed} succeeded, "
                   f"{failed} failed in {wall_ms:.0f} ms")
    sys.exit(1 if failed else 0)


@main.command()
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--repeat", "-n", default=5, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def bench(ctx, input, repeat, as_json):
    """Time the pipeline stage by stage over repeated runs.

    The model load happens once before timing starts (warm session).
    """
    if repeat < 1:
        raise click.UsageError("--repeat must be >= 1")
    model = _require_model(ctx)
    definitions = _load_config(ctx)
    pool = SessionPool(model, size=1)  # warm-up load, excluded from stats

    samples: dict[str, list[float]] = {s: [] for s in BENCH_STAGES}
    samples["end_to_end"] = []
    for _ in range(repeat):
        with pool.acquire() as backend:
            _, report = decode_file(input, backend, definitions)
        t0 = time.perf_counter()
        reporting.format_csv(report)
        report_ms = (time.perf_counter() - t0) * 1e3
        timings = dict(report.timings_ms)
        timings["report"] = report_ms
        total = 0.0
        for stage in BENCH_STAGES:
            ms = timings.get(stage, 0.0)
            samples[stage].append(ms)
            total += ms
        samples["end_to_end"].append(total)

    rows = [{"stage": stage,
             "min_ms": min(vals),
             "median_ms": statistics.median(vals),
             "max_ms": max(vals)}
            for stage, vals in samples.items()]
    if as_json:
        click.echo(json.dumps(rows, indent=1))
    else:
        click.echo(f"{'stage':<12}{'min':>10}{'median':>10}{'max':>10}  (ms, "
                   f"n={repeat})")
        for r in rows:
            click.echo(f"{r['stage']:<12}{r['min_ms']:>10.2f}"
                       f"{r['median_ms']:>10.2f}{r['max_ms']:>10.2f}")


def _landmark_tables(paths: list[Path]) -> dict[str, dict[str, tuple]]:
    cases: dict[str, dict[str, tuple]] = {}
    for path in paths:
        parsed = reporting.parse_csv(path.read_text())
        cases[parsed.case_id] = {
            "points": {lid: (lm.x, lm.y)
                       for lid, lm in parsed.landmarks.points.items()},
            "spacing": parsed.pixel_spacing,
        }
    return cases


@main.command()
@click.argument("predictions", nargs=-1, required=True)
@click.option("--truth", "ground_truth", multiple=True, required=True,
              help="Ground-truth landmark CSV(s); repeatable.")
@click.option("--pixel-spacing", type=float, default=None,
              help="mm/px override when the CSVs carry none.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def eval(ctx, predictions, ground_truth, pixel_spacing, as_json):
    """Mean radial error and success-detection rates against ground truth."""
    pred = _landmark_tables(_expand_inputs(predictions))
    truth = _landmark_tables(_expand_inputs(tuple(ground_truth)))
    if not pred or set(pred) != set(truth):
        raise click.UsageError(
            f"case id mismatch: predictions={sorted(pred)} "
            f"truth={sorted(truth)}")

    errors_mm: dict[str, list[float]] = {}
    for case_id, p in pred.items():
        t = truth[case_id]
        spacing = pixel_spacing or p["spacing"] or t["spacing"]
        if not spacing:
            raise click.UsageError(
                f"no pixel spacing for case {case_id}; pass --pixel-spacing")
        for lid, txy in t["points"].items():
            pxy = p["points"].get(lid)
            if pxy is None:
                continue
            errors_mm.setdefault(lid, []).append(
                pixel_distance(pxy, txy) * spacing)

    def _stats(errs: list[float]) -> dict:
        row = {"mre_mm": sum(errs) / len(errs), "n": len(errs)}
        for t in SDR_THRESHOLDS_MM:
            row[f"sdr_{t}mm"] = sum(e <= t for e in errs) / len(errs)
        return row

    table = {lid: _stats(errs) for lid, errs in sorted(errors_mm.items())}
    all_errors = [e for errs in errors_mm.values() for e in errs]
    table["OVERALL"] = _stats(all_errors)

    if as_json:
        click.echo(json.dumps(table, indent=1))
    else:
        header = (f"{'landmark':<10}{'MRE mm':>9}" +
                  "".join(f"{'SDR@' + str(t):>10}" for t in SDR_THRESHOLDS_MM))
        click.echo(header)
        for lid, row in table.items():
            click.echo(f"{lid:<10}{row['mre_mm']:>9.3f}" + "".join(
                f"{row[f'sdr_{t}mm'] * 100:>9.1f}%"
                for t in SDR_THRESHOLDS_MM))


@main.command()
@click.option("--data-dir", default=None, help="Case storage directory.")
@click.option("--bind", default=None, help="host:port to listen on.")
@click.option("--pool", "pool_size", type=int, default=None,
              help="Inference session pool size.")
@click.pass_context
def serve(ctx, data_dir, bind, pool_size):
    """Run the case service (review UI backend)."""
    import os

    import uvicorn

    from .service import create_app

    model = ctx.obj["model"] or os.environ.get("CEPH_MODEL_JSON")
    if not model:
        raise click.UsageError("--model or CEPH_MODEL_JSON is required")
    bind = bind or os.environ.get("CEPH_BIND_ADDR", "127.0.0.1:8000")
    host, _, port = bind.rpartition(":")
    app = create_app(data_dir=data_dir, model_json=model,
                     pool_size=pool_size)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port),
                log_level="warning" if ctx.obj["quiet"] else "info")


if __name__ == "__main__":
    main()
