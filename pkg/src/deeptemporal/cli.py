"""``deeptemporal`` command line: one subcommand per pipeline stage, files in between.

Exit status: 0 on success, 2 when an input file is missing (or the command
line is malformed), 3 when an input or the configuration fails validation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import plotting
from .errors import ConfigurationError, DeepTemporalError
from .fusion import FusionConfig, fuse_files, prediction_accuracy, read_predictions, write_predictions
from .latent_features import FLATTEN_TIME, extract_dataset, read_feature_dump, to_classifier_vector, write_feature_dump
from .linear_svm import (
    ClassScores, SvmModel, decision_function, read_score_file, select_C, train_ovr, write_score_file,
)
from .lstm_core import TrainConfig, load_checkpoint, save_checkpoint, train
from .normalization import PER_FRAME, normalize_dataset
from .region_streams import load_stream, pool_stream, read_pooled, region_matrix, select_best_region, write_pooled, write_stream
from .skeleton_data import DEFAULT_ROLES, JointRoleMap, cross_subject_split, read_skeleton_file, write_skeleton_file
from .synth_bench import (
    BENCHMARK_SUITE, FUSION_GRID, REGION_SPEC, LOSS_MODE_GRID, REGION_GRID, BenchConfig, BenchSettings, SynthSpec,
    format_table, generate, run_benchmark, synth_roles, write_report,
)

log = logging.getLogger("deeptemporal")

EXIT_MISSING = 2
EXIT_INVALID = 3

GRIDS = {"loss-modes": LOSS_MODE_GRID, "regions": REGION_GRID, "fusion": FUSION_GRID}


@dataclass
class PipelineConfig:
    skeletons: str | None = None
    descriptors: dict[str, str] = field(default_factory=dict)  # stream name -> descriptor file
    out: str = "out"
    roles: JointRoleMap | None = None
    normalization_mode: str = PER_FRAME
    target_T: int | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    layout: str = FLATTEN_TIME
    svm_C: float = 1.0
    svm_grid: tuple[float, ...] = ()
    svm_epochs: int = 100
    cv_folds: int = 5
    fusion: FusionConfig = field(default_factory=FusionConfig)
    seed: int = 0
    test_subjects: tuple[int, ...] = ()
    synth: SynthSpec = field(default_factory=lambda: REGION_SPEC)
    bench_specs: dict[str, SynthSpec] = field(default_factory=dict)  # empty: the built-in suite
    bench_grid: list[BenchConfig] | None = None  # None: each suite spec's own grid
    bench_seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    bench_train: TrainConfig | None = None


def _roles(value) -> JointRoleMap | None:
    if value is None:
        return None
    if isinstance(value, str):
        if value == "synthetic":
            return None  # resolved from the data's joint count
        if value not in DEFAULT_ROLES:
            raise ConfigurationError(f"unknown joint layout {value!r}; choose from {sorted(DEFAULT_ROLES)} or give indices")
        return DEFAULT_ROLES[value]
    return JointRoleMap.from_dict(value)


def _grid(value) -> list[BenchConfig]:
    if isinstance(value, str):
        value = [value]
    grid = []
    for item in value:
        if isinstance(item, str):
            if item not in GRIDS:
                raise ConfigurationError(f"unknown benchmark grid {item!r}; choose from {sorted(GRIDS)}")
            grid.extend(GRIDS[item])
        else:
            grid.append(BenchConfig(**item))
    return grid


def _spec(overrides, base: SynthSpec) -> SynthSpec:
    """``base`` with the given fields replaced."""
    merged = base.to_dict()
    for key in overrides or {}:
        if key not in merged:
            raise ConfigurationError(f"unknown synthetic spec key {key!r}")
    merged.update(overrides or {})
    return SynthSpec.from_dict(merged)


def load_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    with open(path, encoding="utf-8") as fh:
        try:
            doc = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{path}: not valid YAML/JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    known = {"paths", "roles", "normalization", "train", "layout", "svm", "fusion", "seed", "test_subjects",
             "synth", "benchmark"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"{path}: unknown config sections {sorted(unknown)}")
    cfg = PipelineConfig()
    paths = doc.get("paths", {})
    cfg.skeletons = paths.get("skeletons")
    cfg.descriptors = dict(paths.get("descriptors", {}))
    cfg.out = paths.get("out", cfg.out)
    cfg.roles = _roles(doc.get("roles"))
    norm = doc.get("normalization", {})
    cfg.normalization_mode = norm.get("mode", PER_FRAME)
    cfg.target_T = norm.get("target_T")
    if "train" in doc:
        cfg.train = TrainConfig.from_dict(doc["train"])
    cfg.layout = doc.get("layout", FLATTEN_TIME)
    svm = doc.get("svm", {})
    cfg.svm_C = float(svm.get("C", 1.0))
    cfg.svm_grid = tuple(float(c) for c in svm.get("grid", ()))
    cfg.svm_epochs = int(svm.get("epochs", 100))
    cfg.cv_folds = int(svm.get("folds", 5))
    if "fusion" in doc:
        cfg.fusion = FusionConfig(**doc["fusion"])
    cfg.seed = int(doc.get("seed", 0))
    cfg.test_subjects = tuple(int(s) for s in doc.get("test_subjects", ()))
    if "synth" in doc:
        cfg.synth = _spec(doc["synth"], REGION_SPEC)
    bench = doc.get("benchmark", {})
    cfg.bench_specs = {name: _spec(d, BENCHMARK_SUITE[name][0] if name in BENCHMARK_SUITE else SynthSpec())
                       for name, d in bench.get("specs", {}).items()}
    if "grid" in bench:
        cfg.bench_grid = _grid(bench["grid"])
    cfg.bench_seeds = tuple(int(s) for s in bench.get("seeds", cfg.bench_seeds))
    if "train" in bench:
        cfg.bench_train = TrainConfig.from_dict(bench["train"])
    return cfg


# --------------------------------------------------------------------------
# helpers


def _require(path, what: str) -> Path:
    if path is None:
        raise ConfigurationError(f"no {what} given (set it in the config or on the command line)")
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def _load_skeletons(cfg: PipelineConfig, override):
    path = _require(override or cfg.skeletons, "skeleton file")
    sequences = read_skeleton_file(path)
    if not sequences:
        raise ConfigurationError(f"{path} holds no sequences")
    return sequences


def _roles_for(cfg: PipelineConfig, sequences) -> JointRoleMap:
    if cfg.roles is not None:
        return cfg.roles
    return synth_roles(sequences[0].n_joints)


def _split(cfg: PipelineConfig, sequences):
    test_subjects = cfg.test_subjects or (max(s.subject for s in sequences),)
    return cross_subject_split(sequences, test_subjects)


def _normalized(cfg: PipelineConfig, sequences):
    return normalize_dataset(sequences, _roles_for(cfg, sequences), cfg.normalization_mode, cfg.target_T)


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# commands


def cmd_gen_synth(args, cfg: PipelineConfig) -> str:
    spec = cfg.synth.with_seed(cfg.seed)
    data = generate(spec)
    out = Path(cfg.out)
    write_skeleton_file(out / "skeletons.jsonl", data.sequences)
    msg = f"wrote {len(data.sequences)} sequences to {out / 'skeletons.jsonl'}"
    if data.descriptors:
        write_stream(out / "rgb.desc", data.descriptors)
        msg += f" and {len(data.descriptors)} frame descriptors to {out / 'rgb.desc'}"
    return msg


def cmd_normalize(args, cfg: PipelineConfig) -> str:
    sequences = _load_skeletons(cfg, args.skeletons)
    normalized = _normalized(cfg, sequences)
    path = Path(cfg.out) / "normalized.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for n in normalized:
            fh.write(json.dumps({"id": n.id, "subject": n.subject, "label": n.label,
                                 "mask": n.mask.astype(int).tolist(), "vectors": n.vectors.tolist()},
                                separators=(",", ":")) + "\n")
    return f"normalized {len(normalized)} sequences to T={normalized[0].n_frames} -> {path}"


def cmd_train_lstm(args, cfg: PipelineConfig) -> str:
    sequences = _load_skeletons(cfg, args.skeletons)
    split = _split(cfg, sequences)
    normalized = {n.id: n for n in _normalized(cfg, sequences)}
    train_cfg = dataclasses.replace(cfg.train, seed=cfg.seed)
    n_classes = max(s.label for s in sequences) + 1
    result = train([normalized[i] for i in split.train], train_cfg, n_classes=n_classes)
    out = Path(cfg.out)
    ckpt = Path(args.checkpoint) if args.checkpoint else out / "lstm.ckpt.json"
    save_checkpoint(ckpt, result.params, train_cfg)
    with open(out / "train_log.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for rec in result.history:
            fh.write(json.dumps(dataclasses.asdict(rec)) + "\n")
    last = result.history[-1] if result.history else None
    tail = f", final loss {last.loss:.4f}, train accuracy {last.accuracy:.3f}" if last else ""
    return f"trained {train_cfg.loss_mode} LSTM on {len(split.train)} sequences{tail} -> {ckpt}"


def cmd_extract(args, cfg: PipelineConfig) -> str:
    sequences = _load_skeletons(cfg, args.skeletons)
    ckpt = _require(args.checkpoint or Path(cfg.out) / "lstm.ckpt.json", "checkpoint")
    params, _ = load_checkpoint(ckpt)
    latents = extract_dataset(_normalized(cfg, sequences), params)
    layout = args.layout or cfg.layout
    path = Path(cfg.out) / "features.txt"
    write_feature_dump(path, ((m.id, m.label, layout, to_classifier_vector(m, layout)) for m in latents))
    return f"extracted {layout} features for {len(latents)} sequences -> {path}"


def _features_for_svm(args, cfg, sequences):
    if args.pooled:
        pooled = read_pooled(_require(args.pooled, "pooled descriptor file"))
        region = args.region
        if region is None:
            selection = Path(cfg.out) / "selection.json"
            if not selection.exists():
                raise ConfigurationError("give --region or run select-region first")
            region = json.loads(selection.read_text())["region"]
        if region not in pooled:
            raise ConfigurationError(f"region {region} not in pooled file")
        ids = sorted(pooled[region])
        return ids, region_matrix(pooled[region], ids), args.producer or f"appearance-r{region}"
    rows = read_feature_dump(_require(args.input or Path(cfg.out) / "features.txt", "feature dump"))
    return [r[0] for r in rows], np.stack([r[3] for r in rows]), args.producer or "lstm-svm"


def cmd_train_svm(args, cfg: PipelineConfig) -> str:
    sequences = _load_skeletons(cfg, args.skeletons)
    labels = {s.id: s.label for s in sequences}
    subjects = {s.id: s.subject for s in sequences}
    split = _split(cfg, sequences)
    ids, X, producer = _features_for_svm(args, cfg, sequences)
    row = {sid: k for k, sid in enumerate(ids)}
    missing = [sid for sid in split.train + split.test if sid not in row]
    if missing:
        raise ConfigurationError(f"{len(missing)} sequences have no features, e.g. {missing[0]!r}")
    X_train = X[[row[i] for i in split.train]]
    y_train = np.array([labels[i] for i in split.train])
    C = cfg.svm_C
    if cfg.svm_grid:
        groups = np.array([subjects[i] for i in split.train])
        C, _ = select_C(X_train, y_train, cfg.svm_grid, groups, min(cfg.cv_folds, len(set(groups))), cfg.seed,
                        cfg.svm_epochs)
    n_classes = max(labels.values()) + 1
    model = train_ovr(X_train, y_train, C, cfg.svm_epochs, cfg.seed, n_classes=n_classes)
    out = Path(cfg.out)
    model.save(out / f"svm-{producer}.json")
    scores = decision_function(model, X[[row[i] for i in split.test]])
    score_path = Path(args.scores_out) if args.scores_out else out / f"scores-{producer}.txt"
    write_score_file(score_path, ((sid, ClassScores(s, producer)) for sid, s in zip(split.test, scores)))
    acc = float(np.mean(scores.argmax(axis=1) == np.array([labels[i] for i in split.test])))
    return f"trained SVM (C={C}) on {len(split.train)} samples; test accuracy {acc:.4f} -> {score_path}"


def cmd_pool(args, cfg: PipelineConfig) -> str:
    streams = {args.stream: args.descriptors} if args.descriptors else cfg.descriptors
    if not streams:
        raise ConfigurationError("no descriptor files given")
    written = []
    for name, path in sorted(streams.items()):
        stream = load_stream(_require(path, f"descriptor file for stream {name!r}"))
        pooled = pool_stream(stream)
        target = Path(cfg.out) / f"pooled-{name}.txt"
        write_pooled(target, pooled)
        written.append(f"{name}: {len(stream.sample_ids)} samples x {len(pooled)} regions -> {target}")
    return "; ".join(written)


def cmd_select_region(args, cfg: PipelineConfig) -> str:
    sequences = _load_skeletons(cfg, args.skeletons)
    labels = {s.id: s.label for s in sequences}
    subjects = {s.id: s.subject for s in sequences}
    split = _split(cfg, sequences)
    pooled_path = _require(args.pooled or Path(cfg.out) / "pooled-rgb.txt", "pooled descriptor file")
    pooled = read_pooled(pooled_path, labels)
    k = min(cfg.cv_folds, len({subjects[i] for i in split.train}))
    sel = select_best_region(pooled, labels, split.train, groups=subjects, k=k, C_reg=cfg.svm_C, seed=cfg.seed,
                             epochs=cfg.svm_epochs)
    target = Path(cfg.out) / "selection.json"
    _write_json(target, {"region": sel.region, "accuracies": {str(r): a for r, a in sel.accuracies.items()},
                         "pooled": str(pooled_path)})
    accs = ", ".join(f"{r}:{a:.3f}" for r, a in sel.accuracies.items())
    return f"selected region {sel.region} (cv accuracy per region {accs}) -> {target}"


def cmd_fuse(args, cfg: PipelineConfig) -> str:
    if not args.scores:
        raise ConfigurationError("fuse needs at least one --scores file")
    maps = [read_score_file(_require(p, "score file")) for p in args.scores]
    ids = sorted(set.intersection(*(set(m) for m in maps))) if args.intersect else None
    predictions = fuse_files(maps, cfg.fusion, ids)
    labels = {}
    skel = args.skeletons or cfg.skeletons
    if skel:
        labels = {s.id: s.label for s in _load_skeletons(cfg, skel)}
    target = Path(args.predictions_out) if args.predictions_out else Path(cfg.out) / "predictions.txt"
    acc = write_predictions(target, predictions, labels)
    summary = f"fused {len(maps)} streams for {len(predictions)} samples -> {target}"
    return summary + (f"; accuracy {acc:.4f}" if acc is not None else "")


def cmd_evaluate(args, cfg: PipelineConfig) -> str:
    path = _require(args.predictions or Path(cfg.out) / "predictions.txt", "prediction file")
    records = read_predictions(path)
    acc = prediction_accuracy(records)
    if acc is None:
        raise ConfigurationError(f"{path} carries no true labels")
    n = sum(r.label is not None for r in records)
    correct = sum(r.label is not None and r.predicted == r.label for r in records)
    return f"accuracy {acc:.4f} ({correct}/{n}) from {path}"


def cmd_benchmark(args, cfg: PipelineConfig) -> str:
    specs = cfg.bench_specs or {name: spec for name, (spec, _) in BENCHMARK_SUITE.items()}
    settings = BenchSettings(svm_C=cfg.svm_C, svm_grid=cfg.svm_grid, svm_epochs=cfg.svm_epochs,
                             cv_folds=min(cfg.cv_folds, 3), fusion=cfg.fusion,
                             test_subjects=cfg.test_subjects or None)
    if cfg.bench_train is not None:
        settings.train = cfg.bench_train
    out = Path(cfg.out)
    seeds = [cfg.seed] if args.seed is not None else list(cfg.bench_seeds)
    reports = []
    for name, spec in specs.items():
        if cfg.bench_grid is not None:
            grid = cfg.bench_grid
        elif name in BENCHMARK_SUITE:
            grid = BENCHMARK_SUITE[name][1]
        else:
            grid = LOSS_MODE_GRID + REGION_GRID + FUSION_GRID
        if not spec.n_regions:
            grid = [g for g in grid if g.selection is None]
        reports.append(run_benchmark(spec, grid, seeds, settings, out, name, threads=args.threads))
    paths = write_report(out, reports)
    plotting.accuracy_bars(reports, out / "figures" / "accuracy.png")
    for rep in reports:
        if rep.histories:
            plotting.loss_curves(rep, out / "figures" / f"loss-{rep.spec_name}.png")
    sys.stdout.write(format_table(reports))
    return f"benchmark over {len(reports)} spec(s) and seeds {seeds} -> {paths['table']}"


COMMANDS = {
    "gen-synth": (cmd_gen_synth, "generate a synthetic skeleton dataset (and descriptor file)"),
    "normalize": (cmd_normalize, "view-normalize and pad skeleton sequences"),
    "train-lstm": (cmd_train_lstm, "train the stacked LSTM and write a checkpoint"),
    "extract": (cmd_extract, "dump top-layer LSTM latent features"),
    "train-svm": (cmd_train_svm, "train a one-vs-rest linear SVM and write test-split scores"),
    "pool": (cmd_pool, "max-min pool region descriptor files"),
    "select-region": (cmd_select_region, "pick the most discriminative region by cross-validation"),
    "fuse": (cmd_fuse, "late-fuse score files into predictions"),
    "evaluate": (cmd_evaluate, "recount accuracy from a prediction file"),
    "benchmark": (cmd_benchmark, "run the synthetic ablation benchmark"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deeptemporal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="YAML or JSON pipeline config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (default from config, else ./out)")
        p.add_argument("--threads", type=int, default=0, help="worker threads; 0 = sequential deterministic mode")
        if name in ("normalize", "train-lstm", "extract", "train-svm", "select-region", "fuse"):
            p.add_argument("--skeletons", help="skeleton file (overrides config paths.skeletons)")
        if name in ("train-lstm", "extract"):
            p.add_argument("--checkpoint", help="checkpoint path")
        if name == "extract":
            p.add_argument("--layout", choices=["flatten-time", "mean-over-time", "last-step"])
        if name == "train-svm":
            p.add_argument("--input", help="feature dump (default OUT/features.txt)")
            p.add_argument("--pooled", help="train on a pooled descriptor file instead of a feature dump")
            p.add_argument("--region", type=int, help="region of the pooled file (default: OUT/selection.json)")
            p.add_argument("--producer", help="producer tag written into the score file")
            p.add_argument("--scores-out", help="score file to write")
        if name == "pool":
            p.add_argument("--descriptors", help="descriptor file (overrides config paths.descriptors)")
            p.add_argument("--stream", default="rgb", help="stream name for --descriptors")
        if name == "select-region":
            p.add_argument("--pooled", help="pooled descriptor file (default OUT/pooled-rgb.txt)")
        if name == "fuse":
            p.add_argument("--scores", nargs="+", help="score files to fuse")
            p.add_argument("--intersect", action="store_true", help="fuse only samples present in every stream")
            p.add_argument("--predictions-out", help="prediction file to write")
        if name == "evaluate":
            p.add_argument("--predictions", help="prediction file (default OUT/predictions.txt)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config is not None and not Path(args.config).exists():
            raise FileNotFoundError(f"config file not found: {args.config}")
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = args.out
        if args.threads < 0:
            raise ConfigurationError("--threads must be >= 0")
        handler = COMMANDS[args.command][0]
        summary = handler(args, cfg)
    except FileNotFoundError as exc:
        print(f"deeptemporal {args.command}: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (DeepTemporalError, ValueError, KeyError, TypeError) as exc:
        print(f"deeptemporal {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
