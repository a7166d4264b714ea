"""Command-line front end.

Subcommands::

    ginidebias metrics  --input FILE           per-class accuracy / Gini report
    ginidebias optimize --input FILE           fit a correction selection, report on test data
    ginidebias apply    --input FILE --artifact correction.json
    ginidebias synth    --classes N ...        write a synthetic prediction file
    ginidebias report   --before A.json --after B.json

Exit codes: 0 success, 2 configuration error, 3 data/format error,
4 infeasible optimization (unsupported class, impossible split, search
budget), 5 metric undefined under ``--strict``.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .correction import (
    CorrectionMap,
    SelectionVector,
    corrected_class_accuracy,
    corrected_predictions,
    default_map,
    weights_only_map,
)
from .dataset import (
    FORMATS,
    SplitSpec,
    SynthSpec,
    load_accuracy_file,
    load_predictions,
    per_class_accuracy,
    save_predictions,
    synthesize,
)
from .errors import ConfigError, DataFormatError, InfeasibleError
from .metrics import (
    SCHEMA_VERSION,
    ClassAccuracyVector,
    MetricsReport,
    gini,
    max_gini_bound,
    mean_accuracy,
    metrics_report,
    top_class_dominance,
)
from .optimizer import AnnealConfig, Objective, debias
from .report import compare, render_comparison

log = logging.getLogger("ginidebias")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4
EXIT_UNDEFINED = 5


class UndefinedMetric(Exception):
    """Raised after output is written when --strict meets an n/a metric."""


# ---------------------------------------------------------------------------
# helpers


def _write_json(path: Path, doc: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    return path


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the clock for reproducible outputs
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (
        _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc)
        if epoch
        else _dt.datetime.now(_dt.timezone.utc)
    )
    return when.replace(microsecond=0).isoformat()


def _manifest(command: str, config: dict, inputs: dict, seed) -> dict:
    return {
        "command": command,
        "config": config,
        "inputs": {k: {"path": str(p), "sha256": _sha256(p)} for k, p in inputs.items()},
        "seed": seed,
        "tool_version": __version__,
        "timestamps": {"created": _timestamp()},
    }


def _fmt_of(path, flag: Optional[str]) -> str:
    fmt_ = (flag or Path(path).suffix.lstrip(".")).lower()
    if fmt_ not in FORMATS:
        raise ConfigError(f"cannot infer format of {path}; pass --format csv|jsonl")
    return fmt_


# ---------------------------------------------------------------------------
# metrics


def _single_class_report(acc: ClassAccuracyVector) -> MetricsReport:
    return MetricsReport(
        mean_accuracy=mean_accuracy(acc),
        gini=gini(acc),
        cobias=None,
        top_class_dominance=top_class_dominance(acc),
        max_gini_bound=max_gini_bound(acc.n),
        per_class=acc,
    )


def cmd_metrics(args) -> int:
    path = Path(args.input)
    if path.suffix.lower() == ".json":
        acc = load_accuracy_file(path)
    else:
        acc = per_class_accuracy(load_predictions(path, _fmt_of(path, args.format)))
    report = metrics_report(acc) if acc.n >= 2 else _single_class_report(acc)
    print(report.render())
    out_dir = Path(args.out) if args.out else path.parent
    out = _write_json(out_dir / f"{path.stem}.metrics.json", report.to_dict())
    print(f"\nwrote {out}")
    undefined = [k for k in ("gini", "cobias", "top_class_dominance") if getattr(report, k) is None]
    if undefined and args.strict:
        raise UndefinedMetric(f"undefined metrics: {', '.join(undefined)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# optimize


DEFAULT_RUN = {
    "objective": "gini",
    "search": "anneal",
    "map": "default",
    "anneal": AnnealConfig().to_dict(),
    "seed": 0,
    "split": 0.5,
    "stratified": True,
}
_RUN_KEYS = set(DEFAULT_RUN)


def _resolve_map(spec) -> CorrectionMap:
    if spec == "default":
        return default_map()
    if spec == "weights":
        return weights_only_map()
    if isinstance(spec, (dict, list)):
        return CorrectionMap.from_dict(spec)
    raise ConfigError(f'map must be "default", "weights" or {{"functions": [...]}}, got {spec!r}')


def resolve_run_config(args) -> dict:
    """Defaults, then the --config file, then command-line flags."""
    cfg = json.loads(json.dumps(DEFAULT_RUN))
    if args.config:
        doc = _read_json(args.config)
        if not isinstance(doc, dict):
            raise ConfigError("run config must be a JSON object")
        unknown = set(doc) - _RUN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        anneal = doc.pop("anneal", {})
        if not isinstance(anneal, dict):
            raise ConfigError('"anneal" must be an object')
        cfg["anneal"].update(anneal)
        if "seed" not in doc and "seed" in anneal:
            doc["seed"] = anneal["seed"]
        cfg.update(doc)
    for flag, key in (("objective", "objective"), ("seed", "seed"), ("split", "split"),
                      ("stratified", "stratified"), ("search", "search")):
        value = getattr(args, flag, None)
        if value is not None:
            cfg[key] = value
    cfg["anneal"]["seed"] = cfg["seed"]
    # validate and normalize to plain JSON
    try:
        cfg["objective"] = Objective(cfg["objective"]).value
    except ValueError:
        raise ConfigError("objective must be gini or cobias") from None
    cfg["anneal"] = AnnealConfig.from_dict(cfg["anneal"]).to_dict()
    cfg["map"] = _resolve_map(cfg["map"]).to_dict()
    SplitSpec(float(cfg["split"]), int(cfg["seed"]), bool(cfg["stratified"]))
    if cfg["search"] not in ("anneal", "exhaustive"):
        raise ConfigError("search must be anneal or exhaustive")
    return cfg


def cmd_optimize(args) -> int:
    cfg = resolve_run_config(args)
    cmap = CorrectionMap.from_dict(cfg["map"])
    if len(cmap) == 1:
        log.warning("correction map holds only the identity; nothing can change")
    train_path = Path(args.input)
    fmt_ = _fmt_of(train_path, args.format)
    data = load_predictions(train_path, fmt_)
    inputs = {"input": train_path}
    test = None
    if args.test:
        test = load_predictions(args.test, _fmt_of(args.test, args.format))
        inputs["test"] = Path(args.test)
    if args.config:
        inputs["config"] = Path(args.config)

    outcome = debias(
        data,
        cmap,
        cfg["objective"],
        AnnealConfig.from_dict(cfg["anneal"]),
        SplitSpec(float(cfg["split"]), int(cfg["seed"]), bool(cfg["stratified"])),
        test=test,
        search=cfg["search"],
    )
    manifest = _manifest("optimize", cfg, inputs, cfg["seed"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if test is None:
        save_predictions(outcome.test_set, out / f"test_split.{fmt_}")
        save_predictions(outcome.optimization_set, out / f"optimization_split.{fmt_}")

    n = data.n_classes
    opt_original = corrected_class_accuracy(
        outcome.optimization_set, SelectionVector.identity(n), cmap
    )
    opt_best = corrected_class_accuracy(outcome.optimization_set, outcome.result.best_xi, cmap)
    artifact = {
        "schema_version": SCHEMA_VERSION,
        "kind": "correction_artifact",
        "n_classes": n,
        "functions": cmap.to_dict()["functions"],
        "xi": list(outcome.result.best_xi.xi),
        "objective": cfg["objective"],
        "manifest": manifest,
    }
    _write_json(out / "correction.json", artifact)
    _write_json(out / "original_report.json", outcome.original.to_dict())
    _write_json(out / "debiased_report.json", outcome.debiased.to_dict())
    _write_json(
        out / "optimization.json",
        {
            "schema_version": SCHEMA_VERSION,
            "kind": "optimization_run",
            "result": outcome.result.to_dict(),
            "optimization_set": {
                "original": opt_original.to_dict(),
                "debiased": opt_best.to_dict(),
            },
            "test_set": {
                "original": outcome.original.to_dict(),
                "debiased": outcome.debiased.to_dict(),
                "comparison": compare(outcome.original, outcome.debiased),
            },
            "manifest": manifest,
        },
    )
    title = "Debiased" if cfg["objective"] == "gini" else "Debiased (COBias)"
    print(f"objective {cfg['objective']}: selection {list(outcome.result.best_xi.xi)}")
    print(
        f"optimization set {cfg['objective']}: {outcome.result.initial_objective:.4f}"
        f" -> {outcome.result.best_objective:.4f}\n"
    )
    print(render_comparison(outcome.original, outcome.debiased, after_title=title))
    print(f"\nwrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# apply


def load_artifact(path):
    doc = _read_json(path)
    try:
        cmap = CorrectionMap.from_dict(doc["functions"])
        xi = SelectionVector(tuple(doc["xi"]))
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"{path}: not a correction artifact ({exc})") from None
    xi.validate(cmap)
    return cmap, xi


def cmd_apply(args) -> int:
    cmap, xi = load_artifact(args.artifact)
    path = Path(args.input)
    data = load_predictions(path, _fmt_of(path, args.format))
    if len(xi) != data.n_classes:
        raise DataFormatError(
            f"artifact covers {len(xi)} classes but {path} has {data.n_classes}"
        )
    original = data.probs.argmax(axis=1)
    corrected = corrected_predictions(data.probs, xi, cmap)
    report = metrics_report(corrected_class_accuracy(data, xi, cmap, strict=True))
    manifest = _manifest(
        "apply", {"xi": list(xi.xi), **cmap.to_dict()},
        {"input": path, "artifact": Path(args.artifact)}, None,
    )
    out = Path(args.out)
    _write_json(
        out / "corrected_predictions.json",
        {
            "schema_version": SCHEMA_VERSION,
            "kind": "corrected_predictions",
            "predictions": [
                {"id": i, "label": int(y), "original": int(o), "corrected": int(c)}
                for i, y, o, c in zip(data.row_ids(), data.labels, original, corrected)
            ],
            "manifest": manifest,
        },
    )
    _write_json(out / "apply_report.json", report.to_dict())
    changed = int((original != corrected).sum())
    print(report.render())
    print(f"\n{changed} of {len(data)} predictions changed; wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def cmd_synth(args) -> int:
    counts = _int_list(args.counts)
    if len(counts) == 1:
        counts = counts * args.classes
    spec = SynthSpec(
        n_classes=args.classes,
        instances_per_class=tuple(counts),
        head_bias=args.head_bias,
        head_classes=frozenset(_int_list(args.head_classes)),
        noise_scale=args.noise,
        seed=args.seed if args.seed is not None else 0,
    )
    data = synthesize(spec)
    fmt_ = args.format or "csv"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = save_predictions(data, out / f"synthetic.{fmt_}", fmt_)
    print(metrics_report(per_class_accuracy(data)).render())
    print(f"\nwrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    before = MetricsReport.from_dict(_read_json(args.before))
    after = MetricsReport.from_dict(_read_json(args.after))
    print(render_comparison(before, after))
    if args.out:
        doc = {"schema_version": SCHEMA_VERSION, "kind": "comparison", **compare(before, after)}
        print(f"\nwrote {_write_json(Path(args.out) / 'comparison.json', doc)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ginidebias", description="Gini index of class accuracies and Gini-based debiasing."
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        p.add_argument("--input", required=needs_input, help="prediction file (csv/jsonl) or accuracy JSON")
        p.add_argument("--format", choices=FORMATS)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--strict", action="store_true", help="fail on undefined metrics")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("metrics", help="inequality report for one prediction or accuracy file")
    common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("optimize", help="learn per-class corrections minimizing Gini")
    common(p)
    p.add_argument("--test", help="separate test file; otherwise --input is split")
    p.add_argument("--config", help="run configuration JSON")
    p.add_argument("--objective", choices=[o.value for o in Objective])
    p.add_argument("--search", choices=["anneal", "exhaustive"])
    p.add_argument("--split", type=float, help="optimization fraction when splitting")
    p.add_argument("--stratified", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_optimize, out=".")

    p = sub.add_parser("apply", help="apply a learned correction artifact")
    common(p)
    p.add_argument("--artifact", required=True)
    p.set_defaults(func=cmd_apply, out=".")

    p = sub.add_parser("synth", help="write a synthetic head-biased prediction file")
    common(p, needs_input=False)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--counts", default="200", help="instances per class, one value or a list")
    p.add_argument("--head-bias", type=float, default=0.0)
    p.add_argument("--head-classes", default="")
    p.add_argument("--noise", type=float, default=1.0)
    p.set_defaults(func=cmd_synth, out=".")

    p = sub.add_parser("report", help="render an original vs debiased comparison")
    p.add_argument("--before", required=True)
    p.add_argument("--after", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UndefinedMetric as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DataFormatError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
