"""Command-line entry point tying the pipeline stages together.

One binary with a subcommand per stage: corpus generation, sentence
segmentation, featurization, model training, the multitask-versus-single
evaluation, conditional-distance matrices, and the walltime benchmarks.
Every run writes a manifest recording input hashes, the effective config
and its digest, the seed, and the package version, so any artifact can be
regenerated byte-for-byte from its manifest.

Config file: a YAML mapping with one section per subcommand plus optional
top-level ``seed`` and ``out_dir``; command-line flags override config
values, which override built-in defaults.

Exit codes: 0 success; 2 argument or config parse error; 3 missing input
file; 4 invalid data or failed validation; 1 unexpected internal error.
Failures print a single-line JSON error record to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np
import yaml

from spinemtl import __version__, evaluation, features, mtl, similarity, synth
from spinemtl import segmenter as seg
from spinemtl import core
from spinemtl._kernels import BACKEND

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_MISSING_INPUT = 3
EXIT_INVALID_DATA = 4

_EPILOG = """exit codes:
  0  success
  2  argument or config parse error
  3  missing input file
  4  invalid data or failed validation
  1  unexpected internal error
"""


def _fail(category: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": category, "message": message, "exit_code": code}) + "\n")
    return code


def _hash_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _config_digest(config: Mapping[str, Any]) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _write_manifest(
    out_dir: Path,
    command: str,
    config: Mapping[str, Any],
    inputs: Mapping[str, Path],
    outputs: Mapping[str, Path],
) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "backend": BACKEND,
        "config": dict(config),
        "config_sha256": _config_digest(config),
        "inputs": {name: {"path": str(p), "sha256": _hash_file(p)} for name, p in inputs.items()},
        "outputs": {name: str(p) for name, p in outputs.items()},
    }
    path = out_dir / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8")
    return path


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    data = yaml.safe_load(p.read_text(encoding="utf-8"))
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError("config file must contain a mapping")
    return data


def _effective(args: argparse.Namespace, section: str, keys: Sequence[str]) -> dict:
    """Merge config-file section values under explicit CLI flags."""
    file_cfg = _load_config_file(args.config)
    merged = dict(file_cfg.get(section, {}) or {})
    if "seed" in file_cfg and "seed" in keys:
        merged.setdefault("seed", file_cfg["seed"])
    if "out_dir" in file_cfg and getattr(args, "out", None) is None:
        args.out = str(file_cfg["out_dir"])
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _out_dir(args: argparse.Namespace, default: str) -> Path:
    out = Path(getattr(args, "out", None) or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return p


def _emit(args: argparse.Namespace, human: str, payload: Mapping[str, Any]) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, default=str))
    else:
        print(human)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    cfg_kv = _effective(args, "generate", ["n_reports", "practices", "ocr_fraction", "seed"])
    gen = synth.GeneratorConfig(**{
        "n_reports": int(cfg_kv.get("n_reports", 1578)),
        "practices": int(cfg_kv.get("practices", 10)),
        "ocr_fraction": float(cfg_kv.get("ocr_fraction", 0.2)),
        "seed": int(cfg_kv.get("seed", 0)),
    })
    out = _out_dir(args, "corpus")
    corpus = synth.generate_corpus(gen)
    paths = synth.write_corpus(corpus, out)
    manifest = _write_manifest(
        out, "generate",
        {"n_reports": gen.n_reports, "practices": gen.practices,
         "ocr_fraction": gen.ocr_fraction, "seed": gen.seed},
        {}, paths,
    )
    _emit(args,
          f"wrote {len(corpus.reports)} reports, {len(corpus.bundles)} bundles to {out}",
          {"reports": len(corpus.reports), "bundles": len(corpus.bundles),
           "out_dir": str(out), "manifest": str(manifest)})
    return EXIT_OK


def cmd_segment(args: argparse.Namespace) -> int:
    cfg_kv = _effective(args, "segment", ["reports", "labels", "carry_forward"])
    reports_path = _require(str(cfg_kv["reports"]), "reports file")
    reports = core.read_reports(reports_path)
    rule = seg.GroupingRuleConfig(carry_forward=bool(cfg_kv.get("carry_forward", True)))

    inputs = {"reports": reports_path}
    label_maps: dict[str, dict] = {}
    labels_path = cfg_kv.get("labels")
    if labels_path:
        lp = _require(str(labels_path), "labels file")
        inputs["labels"] = lp
        for b in core.read_bundles(lp):
            label_maps.setdefault(b.report_id, {})[b.segment] = {
                lab.task: lab.class_index for lab in b.labels
            }

    out = _out_dir(args, "segmented")
    assignment_rows = []
    bundle_rows = []
    unlabeled_skipped = 0
    for report in reports:
        sentences = seg.split_sentences(report)
        assignments = seg.assign_sentences(sentences, rule)
        for idx, rec in enumerate(assignments):
            assignment_rows.append({
                "report_id": report.report_id,
                "sentence_index": idx,
                "text": rec.sentence.text,
                "segments": [s.value for s in rec.segments],
                "rule": rec.rule,
            })
        if labels_path:
            groups: dict = {}
            for rec in assignments:
                for s in rec.segments:
                    groups.setdefault(s, []).append(rec.sentence)
            rep_labels = label_maps.get(report.report_id, {})
            # Noisy text can surface a segment the gold file never labeled;
            # drop those groups rather than fail the whole run.
            for s in [g for g in groups if g.in_scope]:
                seg_labels = rep_labels.get(s)
                if seg_labels is None or any(t not in seg_labels for t in core.TASKS):
                    del groups[s]
                    unlabeled_skipped += 1
            bundles = seg.build_bundles(report, groups, rep_labels)
            bundle_rows.extend(core.bundle_to_dict(b) for b in bundles)

    outputs = {"assignments": out / "assignments.jsonl"}
    core.write_jsonl(outputs["assignments"], assignment_rows)
    if labels_path:
        outputs["bundles"] = out / "bundles.jsonl"
        core.write_jsonl(outputs["bundles"], bundle_rows)
    manifest = _write_manifest(
        out, "segment",
        {"carry_forward": rule.carry_forward, "with_labels": bool(labels_path),
         "unlabeled_segments_skipped": unlabeled_skipped},
        inputs, outputs,
    )
    _emit(args,
          f"segmented {len(reports)} reports: {len(assignment_rows)} sentences"
          + (f", {len(bundle_rows)} bundles ({unlabeled_skipped} unlabeled skipped)"
             if labels_path else "")
          + f" -> {out}",
          {"reports": len(reports), "sentences": len(assignment_rows),
           "bundles": len(bundle_rows) if labels_path else None,
           "unlabeled_segments_skipped": unlabeled_skipped if labels_path else None,
           "out_dir": str(out), "manifest": str(manifest)})
    return EXIT_OK


def cmd_featurize(args: argparse.Namespace) -> int:
    cfg_kv = _effective(args, "featurize", ["bundles", "dim", "seed", "format"])
    bundles_path = _require(str(cfg_kv["bundles"]), "bundles file")
    bundles = [b for b in core.read_bundles(bundles_path) if b.is_classifier_instance]
    if not bundles:
        raise ValueError("no classifier-eligible bundles in input")
    fcfg = features.HashedFeaturizerConfig(
        dim=int(cfg_kv.get("dim", 1024)), seed=int(cfg_kv.get("seed", 0)))
    X = features.featurize_bundles(bundles, fcfg)
    records = [
        features.EmbeddingRecord(b.report_id, b.segment, X[i])
        for i, b in enumerate(bundles)
    ]
    out = _out_dir(args, "embeddings")
    fmt = str(cfg_kv.get("format", "semb"))
    if fmt == "semb":
        target = out / "embeddings.semb"
        features.write_embeddings(records, target)
    elif fmt == "jsonl":
        target = out / "embeddings.jsonl"
        features.write_embeddings_jsonl(records, target)
    else:
        raise ValueError(f"unknown format {fmt!r} (choose semb or jsonl)")
    manifest = _write_manifest(
        out, "featurize",
        {"dim": fcfg.dim, "seed": fcfg.seed, "format": fmt},
        {"bundles": bundles_path}, {"embeddings": target},
    )
    _emit(args,
          f"featurized {len(records)} bundles at dim {fcfg.dim} -> {target}",
          {"records": len(records), "dim": fcfg.dim, "path": str(target),
           "manifest": str(manifest)})
    return EXIT_OK


def _load_dataset(cfg_kv: Mapping[str, Any], inputs: dict) -> tuple[np.ndarray, np.ndarray]:
    bundles_path = _require(str(cfg_kv["bundles"]), "bundles file")
    inputs["bundles"] = bundles_path
    bundles = core.read_bundles(bundles_path)
    emb_path = cfg_kv.get("embeddings")
    if emb_path:
        ep = _require(str(emb_path), "embeddings file")
        inputs["embeddings"] = ep
        if ep.suffix == ".jsonl":
            records = features.read_embeddings_jsonl(ep)
        else:
            records = features.read_embeddings(ep)
        index = features.EmbeddingIndex(records)
        return mtl.dataset_from_bundles(bundles, index=index)
    fcfg = features.HashedFeaturizerConfig(dim=int(cfg_kv.get("dim", 1024)))
    return mtl.dataset_from_bundles(bundles, featurizer_config=fcfg)


def cmd_train(args: argparse.Namespace) -> int:
    keys = ["bundles", "embeddings", "dim", "mode", "task", "seed",
            "epochs", "lr", "batch_size"]
    cfg_kv = _effective(args, "train", keys)
    inputs: dict = {}
    X, Y = _load_dataset(cfg_kv, inputs)

    mode = str(cfg_kv.get("mode", "multitask"))
    task = None
    if cfg_kv.get("task"):
        task = core.PathologyTask(str(cfg_kv["task"]))
    overrides: dict[str, Any] = {"seed": int(cfg_kv.get("seed", 0)), "input_dim": X.shape[1]}
    for field, cast in (("epochs", int), ("lr", float), ("batch_size", int)):
        if cfg_kv.get(field) is not None:
            overrides[field] = cast(cfg_kv[field])
    config = mtl.TrainConfig.for_mode(mode, task=task, **overrides)

    t0 = time.time()
    params, log = mtl.train((X, Y), config)
    wall = time.time() - t0

    out = _out_dir(args, "model")
    ckpt = out / "checkpoint.npz"
    log_path = out / "training_log.jsonl"
    mtl.save_checkpoint(ckpt, params, config)
    mtl.write_training_log(log, log_path)
    manifest = _write_manifest(
        out, "train",
        {"mode": mode, "task": task.value if task else None,
         "seed": config.seed, "epochs": config.epochs, "lr": config.lr,
         "batch_size": config.batch_size, "input_dim": config.input_dim,
         "digest": mtl.config_digest(config)},
        inputs, {"checkpoint": ckpt, "training_log": log_path},
    )
    val = [r for r in log if r.split == "val"]
    final = val[-1] if val else log[-1]
    _emit(args,
          f"trained {mode} on {X.shape[0]} instances in {wall:.1f}s"
          f" (final {final.split} loss {final.loss:.4f}) -> {ckpt}",
          {"mode": mode, "instances": int(X.shape[0]), "wall_seconds": wall,
           "final_val_loss": final.loss, "checkpoint": str(ckpt),
           "manifest": str(manifest)})
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    keys = ["bundles", "embeddings", "dim", "seeds", "lr", "epochs",
            "test_fraction", "split_seed"]
    cfg_kv = _effective(args, "eval", keys)
    inputs: dict = {}
    X, Y = _load_dataset(cfg_kv, inputs)

    n_seeds = int(cfg_kv.get("seeds", 5))
    overrides: dict[str, Any] = {"input_dim": X.shape[1]}
    for field, cast in (("lr", float), ("epochs", int)):
        if cfg_kv.get(field) is not None:
            overrides[field] = cast(cfg_kv[field])
    multi, single, baseline = evaluation.mtl_parity_trials(
        X, Y,
        seeds=range(n_seeds),
        test_fraction=float(cfg_kv.get("test_fraction", 0.2)),
        split_seed=int(cfg_kv.get("split_seed", 999)),
        **overrides,
    )
    out = _out_dir(args, "eval")
    payload = {
        "n_seeds": n_seeds,
        "baseline": {t.value: baseline[t] for t in core.TASKS},
        "multitask": {t.value: {"mean": multi.per_task_mean[t], "std": multi.per_task_std[t]}
                      for t in core.TASKS},
        "single_task": {t.value: {"mean": single.per_task_mean[t], "std": single.per_task_std[t]}
                        for t in core.TASKS},
    }
    results = out / "eval_results.json"
    results.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    manifest = _write_manifest(
        out, "eval",
        {k: cfg_kv.get(k) for k in keys if cfg_kv.get(k) is not None},
        inputs, {"results": results},
    )
    table = evaluation.format_trial_table([multi, single])
    base_line = "majority baseline:  " + "  ".join(
        f"{t.value}={baseline[t]:.2f}" for t in core.TASKS)
    _emit(args, table + "\n" + base_line + f"\nresults -> {results}",
          {**payload, "manifest": str(manifest)})
    return EXIT_OK


def cmd_distance(args: argparse.Namespace) -> int:
    keys = ["bundles", "embeddings", "dim", "projections", "proj_dims",
            "seed", "include_class0"]
    cfg_kv = _effective(args, "distance", keys)
    inputs: dict = {}
    bundles_path = _require(str(cfg_kv["bundles"]), "bundles file")
    inputs["bundles"] = bundles_path
    bundles = core.read_bundles(bundles_path)

    emb_path = cfg_kv.get("embeddings")
    if emb_path:
        ep = _require(str(emb_path), "embeddings file")
        inputs["embeddings"] = ep
        records = (features.read_embeddings_jsonl(ep) if ep.suffix == ".jsonl"
                   else features.read_embeddings(ep))
    else:
        usable = [b for b in bundles if b.is_classifier_instance]
        fcfg = features.HashedFeaturizerConfig(dim=int(cfg_kv.get("dim", 1024)))
        X = features.featurize_bundles(usable, fcfg)
        records = [features.EmbeddingRecord(b.report_id, b.segment, X[i])
                   for i, b in enumerate(usable)]
    index = features.EmbeddingIndex(records)

    proj_dims = cfg_kv.get("proj_dims") or [1]
    if isinstance(proj_dims, str):
        proj_dims = [int(v) for v in proj_dims.split(",")]
    swcfg = similarity.SwConfig(
        n_projections=int(cfg_kv.get("projections", 60)),
        projection_dims=tuple(int(v) for v in proj_dims),
        seed=int(cfg_kv.get("seed", 0)),
    )
    clouds = similarity.slice_conditionals(
        bundles, index, include_class0=bool(cfg_kv.get("include_class0", False)))
    matrix = similarity.distance_matrix(clouds, swcfg)
    diameter = similarity.estimate_diameter(clouds)
    bound = similarity.upper_bound(diameter, 1.0)

    out = _out_dir(args, "distance")
    csv_path = out / "distance_matrix.csv"
    json_path = out / "distance_matrix.json"
    similarity.write_matrix_csv(matrix, csv_path)
    similarity.write_matrix_json(matrix, json_path)
    summary = out / "distance_summary.json"
    finite = matrix.values[np.isfinite(matrix.values)]
    summary.write_text(json.dumps({
        "clouds": matrix.names,
        "sizes": list(matrix.sizes),
        "diameter": diameter,
        "upper_bound_tv1": bound,
        "max_cell": float(finite.max()) if finite.size else None,
    }, indent=2) + "\n", encoding="utf-8")
    manifest = _write_manifest(
        out, "distance",
        {"projections": swcfg.n_projections, "projection_dims": list(swcfg.projection_dims),
         "seed": swcfg.seed, "include_class0": bool(cfg_kv.get("include_class0", False))},
        inputs, {"csv": csv_path, "json": json_path, "summary": summary},
    )
    _emit(args,
          f"{len(clouds)} clouds; diameter {diameter:.4f}; bound {bound:.4f};"
          f" max cell {float(finite.max()) if finite.size else float('nan'):.4f}"
          f" -> {csv_path}",
          {"clouds": matrix.names, "diameter": diameter, "upper_bound_tv1": bound,
           "csv": str(csv_path), "json": str(json_path), "manifest": str(manifest)})
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    keys = ["kernels", "inputs", "repeats", "dim", "seed", "adapter"]
    cfg_kv = _effective(args, "bench", keys)
    out = _out_dir(args, "bench")

    if cfg_kv.get("kernels"):
        results = evaluation.bench_kernels(seed=int(cfg_kv.get("seed", 0)))
        payload = {
            "kind": "kernels",
            "results": [asdict(r) for r in results],
        }
        target = out / "bench_kernels.json"
        target.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        manifest = _write_manifest(out, "bench", {"kernels": True}, {}, {"results": target})
        _emit(args, evaluation.format_bench_table(results) + f"\nresults -> {target}",
              {**payload, "manifest": str(manifest)})
        return EXIT_OK

    n_inputs = int(cfg_kv.get("inputs", 1000))
    dim = int(cfg_kv.get("dim", 1024))
    seed = int(cfg_kv.get("seed", 0))
    adapter = bool(cfg_kv.get("adapter", False))
    mode_multi = "adapter_multitask" if adapter else "multitask"
    mode_single = "adapter_single" if adapter else "single"

    rng = np.random.default_rng(seed)
    multi_params = mtl.init_params(
        mtl.TrainConfig.for_mode(mode_multi, input_dim=dim, seed=seed), rng)
    single_params = [
        mtl.init_params(
            mtl.TrainConfig.for_mode(mode_single, task=t, input_dim=dim, seed=seed), rng)
        for t in core.TASKS
    ]
    inputs_X = rng.standard_normal((n_inputs, dim))
    results = evaluation.bench_inference(
        multi_params, single_params, inputs_X, repeats=int(cfg_kv.get("repeats", 5)))
    ratio = evaluation.speedup_ratio(results)
    payload = {
        "kind": "inference",
        "adapter": adapter,
        "results": [asdict(r) for r in results],
        "ratio": ratio,
    }
    target = out / "bench_inference.json"
    target.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    manifest = _write_manifest(
        out, "bench",
        {"inputs": n_inputs, "dim": dim, "seed": seed, "adapter": adapter},
        {}, {"results": target},
    )
    _emit(args,
          evaluation.format_bench_table(results) + f"\nspeedup ratio: {ratio:.2f}"
          f"\nresults -> {target}",
          {**payload, "manifest": str(manifest)})
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinemtl",
        description=__doc__.split("\n\n")[0],
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"spinemtl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="YAML config file with per-command sections")
        p.add_argument("--out", help="output directory")
        p.add_argument("--json", action="store_true", help="machine-readable stdout")

    p = sub.add_parser("generate", help="write a synthetic labeled corpus")
    common(p)
    p.add_argument("--n", dest="n_reports", type=int, help="number of reports (default 1578)")
    p.add_argument("--practices", type=int, help="number of practice styles")
    p.add_argument("--ocr-fraction", dest="ocr_fraction", type=float,
                   help="fraction of reports passed through the noise model")
    p.add_argument("--seed", type=int, help="generator seed")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("segment", help="split reports into per-segment groups")
    common(p)
    p.add_argument("--reports", required=True, help="reports JSONL")
    p.add_argument("--labels", help="gold bundles JSONL supplying labels")
    p.add_argument("--no-carry-forward", dest="carry_forward", action="store_false",
                   default=None, help="disable continuation-sentence carry forward")
    p.set_defaults(fn=cmd_segment)

    p = sub.add_parser("featurize", help="hash bundle texts into embeddings")
    common(p)
    p.add_argument("--bundles", required=True, help="bundles JSONL")
    p.add_argument("--dim", type=int, help="feature dimension (default 1024)")
    p.add_argument("--seed", type=int, help="hash seed")
    p.add_argument("--format", choices=("semb", "jsonl"), help="output format")
    p.set_defaults(fn=cmd_featurize)

    p = sub.add_parser("train", help="train one model")
    common(p)
    p.add_argument("--bundles", required=True, help="bundles JSONL")
    p.add_argument("--embeddings", help="embedding file (default: built-in featurizer)")
    p.add_argument("--dim", type=int, help="featurizer dimension when no embeddings given")
    p.add_argument("--mode", choices=mtl.MODES, help="training mode (default multitask)")
    p.add_argument("--task", choices=[t.value for t in core.TASKS],
                   help="task for the single-task modes")
    p.add_argument("--seed", type=int, help="training seed")
    p.add_argument("--epochs", type=int, help="override mode default")
    p.add_argument("--lr", type=float, help="override mode default")
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="multitask vs single-task trial comparison")
    common(p)
    p.add_argument("--bundles", required=True, help="bundles JSONL")
    p.add_argument("--embeddings", help="embedding file (default: built-in featurizer)")
    p.add_argument("--dim", type=int, help="featurizer dimension when no embeddings given")
    p.add_argument("--seeds", type=int, help="number of trial seeds (default 5)")
    p.add_argument("--lr", type=float, help="override mode default for all models")
    p.add_argument("--epochs", type=int, help="override mode default for all models")
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument("--split-seed", dest="split_seed", type=int)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("distance", help="pairwise distances between class clouds")
    common(p)
    p.add_argument("--bundles", required=True, help="bundles JSONL")
    p.add_argument("--embeddings", help="embedding file (default: built-in featurizer)")
    p.add_argument("--dim", type=int, help="featurizer dimension when no embeddings given")
    p.add_argument("--projections", type=int, help="projections per cell (default 60)")
    p.add_argument("--proj-dims", dest="proj_dims",
                   help="comma-separated slice widths (default 1)")
    p.add_argument("--seed", type=int, help="master seed for per-cell draws")
    p.add_argument("--include-class0", dest="include_class0", action="store_true",
                   default=None, help="also build clouds for class 0")
    p.set_defaults(fn=cmd_distance)

    p = sub.add_parser("bench", help="walltime benchmarks")
    common(p)
    p.add_argument("--kernels", action="store_true", default=None,
                   help="benchmark numeric kernels against the pure backend")
    p.add_argument("--inputs", type=int, help="inference inputs (default 1000)")
    p.add_argument("--repeats", type=int, help="timing repeats (default 5)")
    p.add_argument("--dim", type=int, help="input dimension (default 1024)")
    p.add_argument("--seed", type=int)
    p.add_argument("--adapter", action="store_true", default=None,
                   help="benchmark the adapter modes")
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        return _fail("missing-input", str(exc), EXIT_MISSING_INPUT)
    except KeyError as exc:
        return _fail("invalid-data", f"missing field {exc}", EXIT_INVALID_DATA)
    except ValueError as exc:
        return _fail("invalid-data", str(exc), EXIT_INVALID_DATA)
    except yaml.YAMLError as exc:
        return _fail("config-parse", str(exc), EXIT_USAGE)
    except Exception as exc:  # pragma: no cover - defensive
        return _fail("internal", f"{type(exc).__name__}: {exc}", EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
