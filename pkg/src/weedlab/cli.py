"""weedlab command line: label, split, stats, validate, eval, serve.

Exit codes: 0 success, 1 findings (validation/evaluation problems in the
data), 2 usage errors, 3 I/O failures. Every flag can also be set through
a WEEDLAB_<COMMAND>_<FLAG> environment variable. All file outputs are
written atomically and contain no timestamps, so identical inputs, flags
and seed give byte-identical results.
"""

from __future__ import annotations

import json
import os
import socket
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import datasets as ds
from . import evaluation as ev
from .fsio import atomic_write_bytes, atomic_write_text
from .pipeline import MaskConfig, NoRegionsFound, auto_annotate
from .taxonomy import Taxonomy, TaxonomyError, build_default_taxonomy, load_taxonomy
from .voc import IMAGE_EXTENSIONS, read_voc_xml, write_voc_xml

EXIT_FINDINGS = 1
EXIT_IO = 3


def _fail_io(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_IO)


def _load_taxonomy(path: str | None) -> Taxonomy:
    if path is None:
        return build_default_taxonomy()
    try:
        return load_taxonomy(path)
    except OSError as exc:
        _fail_io(f"cannot read taxonomy file: {exc}")
    except TaxonomyError as exc:
        raise click.UsageError(f"bad taxonomy file: {exc}")


@click.group(context_settings={"auto_envvar_prefix": "WEEDLAB"})
@click.version_option(package_name="weedlab")
def main() -> None:
    """Plant auto-annotation, dataset tooling, detection metrics, review service."""


# --- label -------------------------------------------------------------------

def _label_one(image_path: Path, out_dir: Path, label, config: MaskConfig, copy_images: bool):
    """Returns (stem, status) with status annotated | no-regions | error:<msg>."""
    from PIL import Image

    stem = image_path.stem
    try:
        with Image.open(image_path) as img:
            rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except Exception as exc:  # undecodable input is logged, not fatal
        return stem, f"error: {exc}"
    try:
        ann = auto_annotate(rgb, label, config, image_id=stem)
    except NoRegionsFound:
        return stem, "no-regions"
    atomic_write_bytes(out_dir / f"{stem}.xml", write_voc_xml(ann))
    if copy_images:
        atomic_write_bytes(out_dir / image_path.name, image_path.read_bytes())
    return stem, "annotated"


@main.command("label")
@click.option("--input", "input_dir", required=True, type=click.Path(path_type=Path))
@click.option("--output", "output_dir", required=True, type=click.Path(path_type=Path))
@click.option("--species", required=True, help="5-letter species code, e.g. AMBEL.")
@click.option("--week", required=True, type=int, help="Growth week 1..11.")
@click.option("--hue-min", default=25 / 360, show_default=True, type=float)
@click.option("--hue-max", default=160 / 360, show_default=True, type=float)
@click.option("--sat-min", default=0.20, show_default=True, type=float)
@click.option("--kernel", default=3, show_default=True, type=int, help="Morphology kernel side.")
@click.option("--connectivity", default=8, show_default=True, type=click.Choice(["4", "8"]))
@click.option("--min-area-frac", default=0.0005, show_default=True, type=float)
@click.option("--workers", default=None, type=int, help="Defaults to the CPU count.")
@click.option("--copy-images", is_flag=True, help="Copy images next to the XMLs.")
@click.option("--taxonomy", "taxonomy_path", default=None, type=click.Path(path_type=Path))
def cmd_label(
    input_dir: Path,
    output_dir: Path,
    species: str,
    week: int,
    hue_min: float,
    hue_max: float,
    sat_min: float,
    kernel: int,
    connectivity: str,
    min_area_frac: float,
    workers: int | None,
    copy_images: bool,
    taxonomy_path: Path | None,
) -> None:
    """Auto-annotate every image in a directory with one species/week class."""
    taxonomy = _load_taxonomy(str(taxonomy_path) if taxonomy_path else None)
    try:
        label = taxonomy.label(species, week)
    except TaxonomyError as exc:
        raise click.UsageError(str(exc))
    try:
        config = MaskConfig(
            hue_min=hue_min,
            hue_max=hue_max,
            sat_min=sat_min,
            morph_kernel=kernel,
            connectivity=int(connectivity),
            min_area_fraction=min_area_frac,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))

    if not input_dir.is_dir():
        _fail_io(f"input directory not found: {input_dir}")
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _fail_io(f"cannot create output directory: {exc}")

    images = sorted(
        p for p in input_dir.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS and p.is_file()
    )
    n_workers = workers if workers and workers > 0 else (os.cpu_count() or 1)

    results: dict[str, str] = {}
    if images:
        if n_workers == 1:
            pairs = [_label_one(p, output_dir, label, config, copy_images) for p in images]
        else:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                pairs = list(
                    pool.map(lambda p: _label_one(p, output_dir, label, config, copy_images), images)
                )
        results = dict(pairs)

    manifest = {
        "label": label.canonical,
        "config": {
            "hue_min": config.hue_min,
            "hue_max": config.hue_max,
            "sat_min": config.sat_min,
            "morph_kernel": config.morph_kernel,
            "connectivity": config.connectivity,
            "min_area_fraction": config.min_area_fraction,
        },
        "images": {
            stem: {"source": str(input_dir / f), "status": results[stem]}
            for stem, f in sorted((p.stem, p.name) for p in images)
        },
    }
    atomic_write_text(output_dir / "labeling-manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    annotated = sum(1 for s in results.values() if s == "annotated")
    skipped = sum(1 for s in results.values() if s == "no-regions")
    failed = len(results) - annotated - skipped
    for stem, status in sorted(results.items()):
        if status.startswith("error"):
            click.echo(f"{stem}: {status}", err=True)
    click.echo(
        f"{len(images)} images: {annotated} annotated, {skipped} skipped (no regions), {failed} failed"
    )


# --- split --------------------------------------------------------------------

@main.command("split")
@click.option("--index", "index_path", required=True, type=click.Path(path_type=Path))
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def cmd_split(index_path: Path, ratios: str, seed: int, out_dir: Path) -> None:
    """Cut an image-id index into train/val/test lists, reproducibly."""
    try:
        parts = tuple(float(r) for r in ratios.split(","))
    except ValueError:
        raise click.UsageError(f"ratios must be three comma-separated numbers, got {ratios!r}")
    if len(parts) != 3:
        raise click.UsageError("need exactly three ratios (train,val,test)")
    if abs(sum(parts) - 1.0) > 1e-9 or any(r <= 0 for r in parts):
        raise click.UsageError(f"ratios must be positive and sum to 1, got {ratios}")

    try:
        index = ds.DatasetIndex.from_file(index_path)
    except OSError as exc:
        _fail_io(f"cannot read index: {exc}")
    except ds.MalformedRecord as exc:
        raise click.UsageError(str(exc))
    try:
        result = ds.split_dataset(index, parts, seed)
    except ds.EmptyIndex:
        raise click.UsageError("index is empty; nothing to split")

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _fail_io(f"cannot create output directory: {exc}")
    for name, ids in (("train", result.train), ("val", result.val), ("test", result.test)):
        atomic_write_text(out_dir / f"{name}.txt", "".join(f"{i}\n" for i in ids))
    manifest = {
        "seed": result.seed,
        "ratios": list(result.ratios),
        "sizes": {"train": len(result.train), "val": len(result.val), "test": len(result.test)},
        "total": len(result.train) + len(result.val) + len(result.test),
        "shuffle": "splitmix64 fisher-yates",
    }
    atomic_write_text(out_dir / "split-manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    click.echo(f"train {len(result.train)}  val {len(result.val)}  test {len(result.test)}")


# --- stats ----------------------------------------------------------------------

@main.command("stats")
@click.option("--dir", "voc_dir", default=None, type=click.Path(path_type=Path))
@click.option("--index", "index_path", default=None, type=click.Path(path_type=Path))
@click.option("--taxonomy", "taxonomy_path", default=None, type=click.Path(path_type=Path))
def cmd_stats(voc_dir: Path | None, index_path: Path | None, taxonomy_path: Path | None) -> None:
    """Per-species, per-week frame counts of a dataset."""
    if (voc_dir is None) == (index_path is None):
        raise click.UsageError("pass exactly one of --dir or --index")
    taxonomy = _load_taxonomy(str(taxonomy_path) if taxonomy_path else None)
    try:
        if voc_dir is not None:
            if not voc_dir.is_dir():
                _fail_io(f"directory not found: {voc_dir}")
            index = ds.DatasetIndex.from_voc_dir(voc_dir, taxonomy)
        else:
            index = ds.DatasetIndex.from_file(index_path, taxonomy)
    except OSError as exc:
        _fail_io(str(exc))
    except (ds.MalformedRecord, TaxonomyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FINDINGS)

    stats = ds.dataset_stats(index, taxonomy)
    weeks = range(1, 12)
    header = f"{'species':<8}" + "".join(f"{f'W_{w}':>8}" for w in weeks) + f"{'total':>9}"
    click.echo(header)
    click.echo("-" * len(header))
    for species in taxonomy.species_list:
        cells = []
        for w in weeks:
            if w in species.active_weeks:
                cells.append(stats.per_class[taxonomy.label(species.code, w)])
            else:
                cells.append(0)
        row = f"{species.code:<8}" + "".join(f"{c:>8}" for c in cells)
        click.echo(row + f"{stats.species_totals[species.code]:>9}")
    click.echo("-" * len(header))
    click.echo(f"{'total':<8}" + " " * (8 * len(list(weeks))) + f"{stats.grand_total:>9}")


# --- validate --------------------------------------------------------------------

@main.command("validate")
@click.option("--dir", "voc_dir", required=True, type=click.Path(path_type=Path))
@click.option("--taxonomy", "taxonomy_path", default=None, type=click.Path(path_type=Path))
def cmd_validate(voc_dir: Path, taxonomy_path: Path | None) -> None:
    """Check image/annotation pairing, labels, and box bounds."""
    if not voc_dir.is_dir():
        _fail_io(f"directory not found: {voc_dir}")
    taxonomy = _load_taxonomy(str(taxonomy_path) if taxonomy_path else None)
    try:
        report = ds.validate_dataset(voc_dir, taxonomy)
    except OSError as exc:
        _fail_io(str(exc))
    for finding in report.findings:
        click.echo(f"{finding.path}: {finding.code}: {finding.message}")
    click.echo(
        f"checked {report.checked_annotations} annotations, {report.checked_images} images: "
        f"{len(report.findings)} finding(s)"
    )
    sys.exit(0 if report.ok else EXIT_FINDINGS)


# --- eval ------------------------------------------------------------------------

@main.command("eval")
@click.option("--gt", "gt_dir", required=True, type=click.Path(path_type=Path))
@click.option("--pred", "pred_path", required=True, type=click.Path(path_type=Path))
@click.option("--report", "report_path", default=None, type=click.Path(path_type=Path))
@click.option("--report-text", "report_text_path", default=None, type=click.Path(path_type=Path))
@click.option("--iou-thresholds", "ladder", default="0.5:0.95:0.05", show_default=True)
@click.option("--max-dets", default=100, show_default=True, type=int)
@click.option("--ap-mode", default="interpolated-101", show_default=True, type=click.Choice(ev.AP_MODES))
@click.option("--rollup", default=None, type=click.Choice(["species"]))
@click.option("--taxonomy", "taxonomy_path", default=None, type=click.Path(path_type=Path))
def cmd_eval(
    gt_dir: Path,
    pred_path: Path,
    report_path: Path | None,
    report_text_path: Path | None,
    ladder: str,
    max_dets: int,
    ap_mode: str,
    rollup: str | None,
    taxonomy_path: Path | None,
) -> None:
    """Score a prediction file against a VOC ground-truth directory."""
    try:
        thresholds = ev.parse_threshold_ladder(ladder)
        config = ev.EvalConfig(iou_thresholds=thresholds, max_detections=max_dets, ap_mode=ap_mode)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    taxonomy = _load_taxonomy(str(taxonomy_path) if taxonomy_path else None)

    if not gt_dir.is_dir():
        _fail_io(f"ground-truth directory not found: {gt_dir}")
    annotations = []
    for xml_path in sorted(gt_dir.glob("*.xml")):
        try:
            annotations.append(read_voc_xml(xml_path.read_bytes(), taxonomy))
        except OSError as exc:
            _fail_io(str(exc))
        except ValueError as exc:
            click.echo(f"error: {xml_path.name}: {exc}", err=True)
            sys.exit(EXIT_FINDINGS)
    try:
        with open(pred_path, "r", encoding="utf-8") as stream:
            detections = ds.read_predictions(stream, taxonomy)
    except OSError as exc:
        _fail_io(f"cannot read predictions: {exc}")
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FINDINGS)

    try:
        report = ev.evaluate(annotations, detections, taxonomy, config)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FINDINGS)
    rollups = ev.species_rollup(report, taxonomy) if rollup == "species" else None

    if report_path is not None:
        payload = ev.report_to_dict(report, rollups)
        atomic_write_text(report_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if report_text_path is not None:
        atomic_write_text(report_text_path, ev.format_report_text(report, rollups))

    def fmt(v):
        return "-" if v is None else f"{v:.3f}"

    click.echo(
        f"mAP {fmt(report.mean_ap)}  mAP50 {fmt(report.mean_ap50)}  "
        f"mAP75 {fmt(report.mean_ap75)}  mAR {fmt(report.mean_ar)}"
    )
    if rollups:
        for code, r in rollups.items():
            click.echo(f"{code}: mAP {fmt(r.ap)}  mAP50 {fmt(r.ap50)}  mAP75 {fmt(r.ap75)}  AR {fmt(r.ar)}")


# --- serve -----------------------------------------------------------------------

@main.command("serve")
@click.option("--dir", "data_dir", required=True, type=click.Path(path_type=Path))
@click.option("--port", default=8765, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--taxonomy", "taxonomy_path", default=None, type=click.Path(path_type=Path))
@click.option("--ui-dir", "ui_dir", default=None, type=click.Path(path_type=Path))
@click.option("--cors-origin", "cors_origins", multiple=True, help="Allowed UI origins (repeatable).")
def cmd_serve(
    data_dir: Path,
    port: int,
    host: str,
    taxonomy_path: Path | None,
    ui_dir: Path | None,
    cors_origins: tuple[str, ...],
) -> None:
    """Serve the annotation review API (and optionally the review UI)."""
    import uvicorn

    from .service import create_app

    if not data_dir.is_dir():
        _fail_io(f"dataset directory not found: {data_dir}")
    taxonomy = _load_taxonomy(str(taxonomy_path) if taxonomy_path else None)
    app = create_app(data_dir, taxonomy, ui_dir=ui_dir, cors_origins=list(cors_origins) or None)

    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, port))
        sock.listen(128)
    except OSError as exc:
        _fail_io(f"cannot bind {host}:{port}: {exc}")
    click.echo(f"review service on http://{host}:{port}/ over {data_dir}")
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])


if __name__ == "__main__":
    main()
