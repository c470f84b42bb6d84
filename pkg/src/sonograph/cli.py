"""Command line entry points for dataset tooling, evaluation, and the service."""

import json
import sys
from pathlib import Path

import click

from . import __version__
from .core import EntityClass, LateralSide
from .dataset import augment_flip, load_dataset, save_dataset
from .errors import SonographError
from .gateway import Transcript
from .grounding import TaskKind, infer_lateral_side, render_grounding, render_task_instruction
from .metrics import (
    read_labels,
    read_pairs,
    render_csv,
    render_figures,
    render_table,
    score_report,
    score_text_pairs,
)
from .service import (
    Settings,
    SessionRegistry,
    drive_guidance_loop,
    evaluate_guidance,
    read_guidance_records,
    settings_from_config,
)
from .sim import (
    NoiseConfig,
    ProbePose,
    SimulatorPredictor,
    default_model,
    load_model,
    quantize,
    save_model,
)


def _fail(e: SonographError) -> None:
    click.echo(f"error {e.code}: {e.message}" + (f" (at {e.path})" if e.path else ""), err=True)
    sys.exit(1)


class _Group(click.Group):
    """Click group that renders domain errors as one stderr line, exit 1."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except SonographError as e:
            _fail(e)


@click.group(cls=_Group)
@click.version_option(__version__, prog_name="sonograph")
def main():
    """Scene-graph tooling for carotid ultrasound frames."""


def _noise_options(f):
    f = click.option("--seed", type=int, default=0, show_default=True, help="Noise RNG seed.")(f)
    f = click.option("--box-jitter", type=float, default=0.0, show_default=True, help="Box corner jitter stddev in pixels.")(f)
    f = click.option("--drop-prob", type=float, default=0.0, show_default=True, help="Per-detection drop probability.")(f)
    f = click.option("--score-noise", type=float, default=0.0, show_default=True, help="Score perturbation stddev.")(f)
    f = click.option("--spurious-prob", type=float, default=0.0, show_default=True, help="Per-pair spurious triplet probability.")(f)
    return f


def _noise(seed, box_jitter, drop_prob, score_noise, spurious_prob) -> NoiseConfig:
    cfg = NoiseConfig(
        seed=seed,
        box_jitter_px=box_jitter,
        drop_prob=drop_prob,
        score_noise=score_noise,
        spurious_prob=spurious_prob,
    )
    cfg.validate()
    return cfg


def _pose_options(f):
    f = click.option("--z", type=float, default=0.5, show_default=True, help="Craniocaudal position in [0, 1].")(f)
    f = click.option("--u", type=float, default=0.0, show_default=True, help="Lateral offset in [-1, 1].")(f)
    f = click.option("--side", type=click.Choice(["left", "right"]), default="left", show_default=True)(f)
    return f


def _model_option(f):
    return click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Cross-section model file (defaults to the built-in neck).")(f)


def _load_model_opt(model_path):
    return load_model(model_path) if model_path else default_model()


# ---------------------------------------------------------------------------
# dataset

@main.group()
def dataset():
    """Validate and transform annotation files."""


@dataset.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--lenient", is_flag=True, help="Allow unknown fields.")
def dataset_validate(path, lenient):
    """Parse PATH and report its contents."""
    d = load_dataset(path, strict=not lenient)
    boxes = sum(len(rec.sg.detections) for rec in d.images)
    rels = sum(len(rec.sg.triplets) for rec in d.images)
    click.echo(f"ok: {len(d.images)} images, {boxes} boxes, {rels} relations")


@dataset.command("flip")
@click.argument("src", type=click.Path(exists=True, dir_okay=False))
@click.argument("dst", type=click.Path(dir_okay=False))
def dataset_flip(src, dst):
    """Append horizontally mirrored copies of every image in SRC."""
    d = load_dataset(src)
    out = augment_flip(d)
    save_dataset(out, dst)
    click.echo(f"wrote {dst}: {len(d.images)} images -> {len(out.images)}")


# ---------------------------------------------------------------------------
# eval

@main.group("eval")
def eval_group():
    """Score predictions against references."""


@eval_group.command("detect")
@click.option("--pred", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gt", required=True, type=click.Path(exists=True, dir_okay=False))
def eval_detect(pred, gt):
    """Detection average precision (JSON on stdout)."""
    report = score_report(pred=load_dataset(pred), gt=load_dataset(gt))
    d = report.detection
    out = {
        "ap50": d.ap50,
        "ap_range": d.ap_range,
        "map_per_threshold": {f"{t:.2f}": v for t, v in d.map_per_threshold.items()},
    }
    click.echo(json.dumps(out, indent=2, sort_keys=True))


@eval_group.command("relations")
@click.option("--pred", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gt", required=True, type=click.Path(exists=True, dir_okay=False))
def eval_relations(pred, gt):
    """Relation recall and mean recall (JSON on stdout)."""
    report = score_report(pred=load_dataset(pred), gt=load_dataset(gt))
    r = report.relations
    out = {
        "recall_at_k": {str(k): v for k, v in r.recall_at_k.items()},
        "mean_recall_at_k": {str(k): v for k, v in r.mean_recall_at_k.items()},
    }
    click.echo(json.dumps(out, indent=2, sort_keys=True))


@eval_group.command("text")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True, dir_okay=False))
def eval_text(pairs_path):
    """Sentence metrics over a candidate/reference pairs file."""
    pairs = read_pairs(Path(pairs_path).read_text(encoding="utf-8"))
    samples, meteor_mean, rouge_mean = score_text_pairs(pairs)
    for s in samples:
        click.echo(f"{s.pair_id}: meteor={s.meteor:.4f} rouge_l={s.rouge_f:.4f}")
    click.echo(f"mean: meteor={meteor_mean:.4f} rouge_l={rouge_mean:.4f}")


@eval_group.command("report")
@click.option("--pred", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--gt", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--pairs", "pairs_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--guidance-records", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def eval_report(pred, gt, pairs_path, labels_path, guidance_records, out_dir):
    """Full report: JSON, CSV, table, and figures under OUT."""
    if (pred is None) != (gt is None):
        raise SonographError("BAD_CONFIG", "--pred and --gt must be given together")
    if pred is None and pairs_path is None and guidance_records is None:
        raise SonographError("BAD_CONFIG", "nothing to score; give --pred/--gt, --pairs, or --guidance-records")
    pairs = read_pairs(Path(pairs_path).read_text(encoding="utf-8")) if pairs_path else ()
    labels_text = Path(labels_path).read_text(encoding="utf-8") if labels_path else None
    report = score_report(
        pred=load_dataset(pred) if pred else None,
        gt=load_dataset(gt) if gt else None,
        text_pairs=pairs,
        labels_text=labels_text,
    )
    if guidance_records:
        records = read_guidance_records(Path(guidance_records).read_text(encoding="utf-8"))
        result = evaluate_guidance(records)
        report.directional_accuracy = result.accuracy
        if report.meteor_mean is None and result.meteor_mean is not None:
            report.meteor_mean = result.meteor_mean
            report.rouge_l_mean = result.rouge_l_mean

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "report.csv").write_text(render_csv(report), encoding="utf-8")
    table = render_table(report)
    (out / "table.txt").write_text(table, encoding="utf-8")
    figures = render_figures(report, out)
    click.echo(table, nl=False)
    for p in ["report.json", "report.csv", "table.txt"] + [Path(f).name for f in figures]:
        click.echo(f"wrote {out / p}")


# ---------------------------------------------------------------------------
# run

@main.group()
def run():
    """One-shot prompting flows against the built-in mock answerer."""


@run.command("summarize")
@_pose_options
@_model_option
@_noise_options
@click.option("--query", default="describe the scene", show_default=True)
def run_summarize(z, u, side, model_path, seed, box_jitter, drop_prob, score_noise, spurious_prob, query):
    """Render a scene description prompt for one pose and answer it."""
    from .gateway import BackendConfig, ChatRequest, MockBackend, send

    model = _load_model_opt(model_path)
    noise = _noise(seed, box_jitter, drop_prob, score_noise, spurious_prob)
    pose = ProbePose(quantize(z), quantize(u), LateralSide(side))
    sg = SimulatorPredictor(model, noise).predict(pose)
    inferred = infer_lateral_side(sg)
    grounding = render_grounding(sg, inferred, task=TaskKind.SUMMARIZATION)
    instruction = render_task_instruction(TaskKind.SUMMARIZATION, query)
    request = ChatRequest(
        system=instruction.text,
        user=f"{grounding.text}\n\nQuery: {query}",
        request_id="summarize",
    )
    response = send(request, BackendConfig(kind="mock"), mock=MockBackend(oracle_mode=True))
    click.echo("--- prompt ---")
    click.echo(request.user)
    click.echo("--- response ---")
    click.echo(response.text)


@run.command("guide")
@click.option("--target", required=True, type=click.Choice([e.value for e in EntityClass]))
@_pose_options
@_model_option
@_noise_options
@click.option("--max-queries", type=int, default=8, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Write records.jsonl and transcript.jsonl here.")
def run_guide(target, z, u, side, model_path, seed, box_jitter, drop_prob, score_noise, spurious_prob, max_queries, out_dir):
    """Follow guidance answers until TARGET enters the image."""
    model = _load_model_opt(model_path)
    noise = _noise(seed, box_jitter, drop_prob, score_noise, spurious_prob)
    transcript = None
    out = None
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        transcript = Transcript(out / "transcript.jsonl")
    settings = Settings(model=model, noise=noise, transcript=transcript)
    registry = SessionRegistry(settings)
    pose = ProbePose(quantize(z), quantize(u), LateralSide(side))
    records = drive_guidance_loop(
        registry, pose, EntityClass(target), max_queries=max_queries
    )
    result = evaluate_guidance(records)
    for rec, scored in zip(records, result.records):
        mark = "ok" if scored.match else "MISS"
        click.echo(f"[{mark}] oracle={rec['oracle']}: {rec['response']}")
    click.echo(f"directional accuracy: {result.accuracy:.3f} over {len(records)} queries")
    if out:
        lines = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
        (out / "records.jsonl").write_text(lines, encoding="utf-8")
        click.echo(f"wrote {out / 'records.jsonl'}")


# ---------------------------------------------------------------------------
# sim

@main.group()
def sim():
    """Cross-section simulator utilities."""


@sim.command("sample")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@_model_option
@_noise_options
@click.option("--z-step", type=float, default=0.1, show_default=True)
@click.option("--u-step", type=float, default=0.25, show_default=True)
@click.option("--sides", type=click.Choice(["left", "right", "both"]), default="left", show_default=True)
def sim_sample(out_path, model_path, seed, box_jitter, drop_prob, score_noise, spurious_prob, z_step, u_step, sides):
    """Dump frames over a pose grid as a dataset file."""
    from .dataset import DatasetFile, ImageRecord

    model = _load_model_opt(model_path)
    noise = _noise(seed, box_jitter, drop_prob, score_noise, spurious_prob)
    predictor = SimulatorPredictor(model, noise)
    if z_step <= 0 or u_step <= 0:
        raise SonographError("BAD_CONFIG", "grid steps must be positive")
    side_list = [LateralSide.LEFT, LateralSide.RIGHT] if sides == "both" else [LateralSide(sides)]
    records = []
    z = 0.0
    while z <= 1.0 + 1e-9:
        u = -1.0
        while u <= 1.0 + 1e-9:
            for s in side_list:
                pose = ProbePose(quantize(min(z, 1.0)), quantize(min(u, 1.0)), s)
                records.append(ImageRecord(sg=predictor.predict(pose), side=s))
            u += u_step
        z += z_step
    save_dataset(DatasetFile(images=tuple(records)), out_path)
    click.echo(f"wrote {out_path}: {len(records)} images")


@sim.command("export-model")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def sim_export_model(out_path):
    """Write the built-in cross-section model to a file."""
    save_model(default_model(), out_path)
    click.echo(f"wrote {out_path}")


@sim.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8756, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Service config JSON.")
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False), default=None, help="Serve this directory (the browser console) at /.")
def sim_serve(host, port, config_path, ui_dir):
    """Serve the scanning session API."""
    import uvicorn

    from .service import create_app

    settings = Settings()
    if config_path:
        settings = settings_from_config(Path(config_path).read_text(encoding="utf-8"))
    uvicorn.run(create_app(settings, ui_dir=ui_dir), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
