"""Staged experiment pipeline with content-addressed caching.

Stages: simulate -> label -> (per noise variant) prep -> persist -> featurize
-> evaluate -> report.  Each stage writes into ``out/cache/<stage>-<digest>``
where the digest covers the stage parameters and the digests of its inputs, so
rerunning an unchanged config touches nothing and editing e.g. the noise list
invalidates exactly the dependent stages.  A stage directory is valid once its
``meta.json`` exists (written last).
"""

from __future__ import annotations

import csv
import hashlib
import json
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import classify as clf
from . import features as feat
from .config import (ExperimentConfig, NOISELESS, SEED_NOISE, SEED_SPLIT,
                     TWO_CLASS, derive_seed, load_config, variant_name)
from .milling import GridPoint, TimeSeries, simulate
from .persistence import distance_matrix, rips_persistence, write_diagrams_csv
from .signal_prep import (EmbeddingParams, add_noise, select_delay,
                          select_dimension, subsample_cloud, takens_embed)
from .stability import CLASS3_VALUES, label_grid

STAGES = ("simulate", "label", "prep", "persist", "featurize", "evaluate")
DIMS_BASE = ("H1", "H2", "H1H2")


class StageError(RuntimeError):
    """Pipeline failure tagged with the stage (and item) that caused it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def _canonical(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _digest(payload) -> str:
    return hashlib.sha256(_canonical(payload).encode()).hexdigest()[:12]


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


@dataclass
class RunSummary:
    out_dir: Path
    results_path: Optional[Path]
    stage_hashes: dict
    cache_hits: list
    cache_misses: list
    results: Optional[dict] = None


class Pipeline:
    """One experiment run rooted at ``out_dir``; stages reuse cached work."""

    def __init__(self, config: ExperimentConfig, out_dir, jobs: int = 1):
        self.config = config
        self.out_dir = Path(out_dir)
        self.cache_root = self.out_dir / "cache"
        self.cache_root.mkdir(parents=True, exist_ok=True)
        self.jobs = max(1, int(jobs))
        self.stage_hashes: dict = {}
        self.cache_hits: list = []
        self.cache_misses: list = []

    # ----- cache plumbing -----

    def _enter(self, stage: str, key: str, payload: dict):
        digest = _digest(payload)
        self.stage_hashes[key] = digest
        directory = self.cache_root / f"{stage}-{digest}"
        if (directory / "meta.json").exists():
            self.cache_hits.append(key)
            return directory, True
        if directory.exists():
            shutil.rmtree(directory)  # stale partial output
        directory.mkdir(parents=True)
        self.cache_misses.append(key)
        return directory, False

    def _finish(self, directory: Path, stage: str, payload: dict) -> None:
        _write_json(directory / "meta.json", {"stage": stage, "inputs": payload})

    def _map(self, fn, items):
        if self.jobs == 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            return list(pool.map(fn, items))

    # ----- grid bookkeeping -----

    def _grid_points(self):
        speeds = self.config.grid.speeds()
        depths = self.config.grid.depths()
        points = []
        for i, s in enumerate(speeds):
            for j, b in enumerate(depths):
                gi = i * depths.size + j
                points.append((gi, i, j, float(s), float(b)))
        return points

    @staticmethod
    def _series_id(grid_index: int) -> str:
        return f"p{grid_index:04d}"

    # ----- stages -----

    def stage_simulate(self) -> Path:
        cfg = self.config
        payload = {"stage": "simulate", "process": asdict(cfg.process),
                   "grid": asdict(cfg.grid), "sim": asdict(cfg.sim)}
        directory, hit = self._enter("simulate", "simulate", payload)
        if hit:
            return directory
        try:
            series_dir = directory / "series"
            series_dir.mkdir()
            points = self._grid_points()

            def one(point):
                gi, i, j, speed, depth = point
                ts = simulate(cfg.process, GridPoint(speed, depth), cfg.sim)
                sid = self._series_id(gi)
                np.save(series_dir / f"{sid}.npy", ts.samples)
                return (sid, gi, i, j, speed, depth, ts.sample_interval,
                        int(ts.saturated), f"series/{sid}.npy")

            rows = self._map(one, points)
            with open(directory / "manifest.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["series_id", "grid_index", "speed_index",
                                 "depth_index", "speed_rpm", "depth_m",
                                 "sample_interval", "saturated", "file"])
                writer.writerows(rows)
            self._finish(directory, "simulate", payload)
        except Exception as exc:
            shutil.rmtree(directory, ignore_errors=True)
            if isinstance(exc, StageError):
                raise
            raise StageError("simulate", str(exc)) from exc
        return directory

    def stage_label(self) -> Path:
        cfg = self.config
        payload = {"stage": "label", "process": asdict(cfg.process),
                   "grid": asdict(cfg.grid), "stability": asdict(cfg.stability)}
        directory, hit = self._enter("label", "label", payload)
        if hit:
            return directory
        try:
            grid = label_grid(cfg.process, cfg.grid,
                              order=cfg.stability.discretization_order,
                              tol=cfg.stability.hopf_tolerance)
            grid.to_csv(directory / "labels.csv")
            self._finish(directory, "label", payload)
        except Exception as exc:
            shutil.rmtree(directory, ignore_errors=True)
            raise StageError("label", str(exc)) from exc
        return directory

    def load_labels(self, label_dir: Path) -> list:
        with open(label_dir / "labels.csv", newline="") as fh:
            return list(csv.DictReader(fh))

    def stage_prep(self, sim_dir: Path, snr_db) -> Path:
        cfg = self.config
        variant = variant_name(snr_db)
        payload = {"stage": "prep", "simulate": self.stage_hashes["simulate"],
                   "snr_db": snr_db, "embedding": asdict(cfg.embedding),
                   "max_points": cfg.persistence.max_points,
                   "master_seed": cfg.master_seed}
        key = f"prep[{variant}]"
        directory, hit = self._enter("prep", key, payload)
        if hit:
            return directory
        try:
            clouds_dir = directory / "clouds"
            clouds_dir.mkdir()
            manifest = list(csv.DictReader(open(sim_dir / "manifest.csv", newline="")))

            def load_series(row):
                samples = np.load(sim_dir / row["file"])
                ts = TimeSeries(samples=samples,
                                sample_interval=float(row["sample_interval"]),
                                grid_point=GridPoint(float(row["speed_rpm"]),
                                                     float(row["depth_m"])),
                                saturated=bool(int(row["saturated"])),
                                series_id=row["series_id"])
                if snr_db is not None:
                    seed = derive_seed(cfg.master_seed, SEED_NOISE,
                                       int(round(snr_db * 100)),
                                       int(row["grid_index"]))
                    ts = add_noise(ts, snr_db, seed)
                return ts

            def pick_params(ts):
                if cfg.embedding.policy == "fixed":
                    return cfg.embedding.delay, cfg.embedding.dimension
                delay = select_delay(ts, cfg.embedding.max_delay,
                                     order=cfg.embedding.entropy_order,
                                     prominence=cfg.embedding.prominence)
                dimension = select_dimension(ts, delay)
                return delay, dimension

            series = self._map(load_series, manifest)
            params = self._map(pick_params, series)
            if cfg.embedding.policy == "median":
                med_delay = int(round(float(np.median([p[0] for p in params]))))
                med_dim = int(round(float(np.median([p[1] for p in params]))))
                params = [(med_delay, med_dim)] * len(series)

            def embed(item):
                ts, (delay, dimension) = item
                cloud = takens_embed(ts, EmbeddingParams(delay, dimension))
                cloud = subsample_cloud(cloud, cfg.persistence.max_points)
                np.savetxt(clouds_dir / f"{ts.series_id}.csv", cloud.points,
                           fmt="%.17e", delimiter=",")
                return (ts.series_id, delay, dimension, cloud.points.shape[0],
                        "" if snr_db is None else snr_db)

            rows = self._map(embed, list(zip(series, params)))
            with open(directory / "embeddings.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["series_id", "delay", "dimension",
                                 "n_points", "snr_db"])
                writer.writerows(rows)
            self._finish(directory, "prep", payload)
        except Exception as exc:
            shutil.rmtree(directory, ignore_errors=True)
            raise StageError("prep", f"variant {variant}: {exc}") from exc
        return directory

    def stage_persist(self, prep_dir: Path, snr_db) -> Path:
        cfg = self.config
        variant = variant_name(snr_db)
        key = f"persist[{variant}]"
        payload = {"stage": "persist", "prep": self.stage_hashes[f"prep[{variant}]"],
                   "persistence": asdict(cfg.persistence)}
        directory, hit = self._enter("persist", key, payload)
        if hit:
            return directory
        try:
            embeddings = list(csv.DictReader(open(prep_dir / "embeddings.csv",
                                                  newline="")))

            def one(row):
                sid = row["series_id"]
                points = np.loadtxt(prep_dir / "clouds" / f"{sid}.csv",
                                    delimiter=",", ndmin=2)
                dgms = rips_persistence(distance_matrix(points),
                                        max_dim=cfg.persistence.max_dim,
                                        threshold=cfg.persistence.threshold,
                                        max_points=cfg.persistence.max_points)
                return sid, dgms

            entries = self._map(one, embeddings)
            write_diagrams_csv(directory / "diagrams.csv", entries)
            self._finish(directory, "persist", payload)
        except Exception as exc:
            shutil.rmtree(directory, ignore_errors=True)
            raise StageError("persist", f"variant {variant}: {exc}") from exc
        return directory

    def _dims_list(self) -> list:
        dims = list(DIMS_BASE)
        if self.config.featurization.include_h0:
            dims.append("H0")
        return dims

    def stage_featurize(self, persist_dir: Path, label_dir: Path, snr_db) -> Path:
        from .persistence import read_diagrams_csv

        cfg = self.config
        variant = variant_name(snr_db)
        key = f"featurize[{variant}]"
        payload = {"stage": "featurize",
                   "persist": self.stage_hashes[f"persist[{variant}]"],
                   "label": self.stage_hashes["label"],
                   "featurization": asdict(cfg.featurization)}
        directory, hit = self._enter("featurize", key, payload)
        if hit:
            return directory
        try:
            label_rows = self.load_labels(label_dir)
            diagrams = read_diagrams_csv(persist_dir / "diagrams.csv")
            retained = [row for row in label_rows if row["class3"] in CLASS3_VALUES]
            excluded = len(label_rows) - len(retained)

            def finite(sid, dim):
                pairs = diagrams.get(sid, {}).get(dim)
                if pairs is None:
                    return np.empty((0, 2))
                return pairs[np.isfinite(pairs[:, 1])]

            block_dims = {"H0": 0, "H1": 1, "H2": 2}
            used_blocks = ["H1", "H2"] + (["H0"] if cfg.featurization.include_h0 else [])

            series_ids = []
            for row in retained:
                gi = int(row["speed_index"]) * self.config.grid.depth_count \
                    + int(row["depth_index"])
                series_ids.append((self._series_id(gi), gi, row))

            meta = {"variant": variant, "excluded_grid_points": excluded,
                    "n_rows": len(retained), "meshes": {}}

            blocks = {}
            for name in used_blocks:
                dim = block_dims[name]
                pair_sets = [finite(sid, dim) for sid, _, _ in series_ids]
                if "carlsson" in cfg.featurization.methods:
                    cc = np.stack([
                        feat.carlsson_coordinates(p).as_array() for p in pair_sets
                    ]) if pair_sets else np.empty((0, 5))
                    blocks[("carlsson", name)] = cc
                if "template" in cfg.featurization.methods:
                    bl_sets = [feat.to_birth_lifetime(p) for p in pair_sets]
                    mesh = feat.build_template_mesh(
                        bl_sets,
                        size_a=cfg.featurization.template_mesh_size[0],
                        size_b=cfg.featurization.template_mesh_size[1],
                        padding_fraction=cfg.featurization.template_padding)
                    tf = np.stack([
                        feat.template_features(p, mesh).values for p in pair_sets
                    ]) if pair_sets else np.empty((0, mesh.size()))
                    blocks[("template", name)] = tf
                    meta["meshes"][name] = {
                        "mesh_a": mesh.mesh_a.tolist(),
                        "mesh_b": mesh.mesh_b.tolist(),
                        "padding_fraction": mesh.padding_fraction,
                    }

            def block_columns(method, name):
                if method == "carlsson":
                    return [f"CC_f{k}_{name}" for k in range(1, 6)]
                size_a, size_b = cfg.featurization.template_mesh_size
                return [f"TF_A{i}_B{j}_{name}"
                        for i in range(size_a) for j in range(size_b)]

            for method in cfg.featurization.methods:
                for dims in self._dims_list():
                    parts = ["H1", "H2"] if dims == "H1H2" else [dims]
                    matrix = np.hstack([blocks[(method, p)] for p in parts])
                    columns = sum((block_columns(method, p) for p in parts), [])
                    path = directory / f"features_{method}_{dims}.csv"
                    with open(path, "w", newline="") as fh:
                        writer = csv.writer(fh)
                        writer.writerow(["series_id", "grid_index"] + columns
                                        + ["class3", "class2"])
                        for (sid, gi, row), values in zip(series_ids, matrix):
                            writer.writerow([sid, gi]
                                            + [repr(float(v)) for v in values]
                                            + [row["class3"], row["class2"]])
            _write_json(directory / "featurize_meta.json", meta)
            self._finish(directory, "featurize", payload)
        except Exception as exc:
            shutil.rmtree(directory, ignore_errors=True)
            raise StageError("featurize", f"variant {variant}: {exc}") from exc
        return directory

    # ----- evaluation -----

    def _load_features(self, feat_dir: Path, method: str, dims: str):
        path = feat_dir / f"features_{method}_{dims}.csv"
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        columns = [c for c in rows[0].keys()
                   if c not in ("series_id", "grid_index", "class3", "class2")]
        X = np.array([[float(r[c]) for c in columns] for r in rows])
        grid_index = np.array([int(r["grid_index"]) for r in rows])
        y3 = np.array([r["class3"] for r in rows])
        y2 = np.array([r["class2"] for r in rows])
        return X, y2, y3, grid_index, columns

    @staticmethod
    def _mask_columns(mask: int, n_blocks: int) -> list:
        keep = [k for k in range(5) if mask >> k & 1]
        return [b * 5 + k for b in range(n_blocks) for k in keep]

    def _sweep_carlsson(self, X, y, grid_index, algo, seeds, n_blocks):
        masks = (feat.enumerate_subsets()
                 if self.config.featurization.carlsson_sweep else [feat.FULL_MASK])
        best = None
        sweep = []
        for mask in masks:
            ds = clf.Dataset(X=X[:, self._mask_columns(mask, n_blocks)], y=y,
                             grid_index=grid_index)
            result = clf.evaluate(ds, algo,
                                  repeats=self.config.classify.repeats,
                                  seeds=seeds,
                                  train_fraction=self.config.classify.train_fraction)
            sweep.append({"mask": mask, "mean": result.mean_accuracy,
                          "std": result.std_accuracy})
            # Strict improvement keeps the earliest (smallest) mask on ties.
            if best is None or result.mean_accuracy > best[1].mean_accuracy:
                best = (mask, result)
        return best[0], best[1], sweep

    def stage_evaluate(self, featurize_dirs: dict, label_dir: Path) -> Path:
        cfg = self.config
        payload = {"stage": "evaluate",
                   "featurize": {variant_name(v): self.stage_hashes[f"featurize[{variant_name(v)}]"]
                                 for v in cfg.variants()},
                   "label": self.stage_hashes["label"],
                   "classify": asdict(cfg.classify),
                   "sweep": cfg.featurization.carlsson_sweep,
                   "master_seed": cfg.master_seed}
        directory, hit = self._enter("evaluate", "evaluate", payload)
        if hit:
            return directory
        try:
            maps_dir = directory / "maps"
            maps_dir.mkdir()
            label_rows = self.load_labels(label_dir)
            grid_lookup = {}
            for row in label_rows:
                gi = int(row["speed_index"]) * cfg.grid.depth_count \
                    + int(row["depth_index"])
                grid_lookup[gi] = row

            results = {"problems": {}, "dataset_sizes": {}, "excluded_grid_points": None}
            for p_idx, problem in enumerate(cfg.classify.problems):
                problem_block = {}
                for v_idx, snr in enumerate(cfg.variants()):
                    variant = variant_name(snr)
                    feat_dir = featurize_dirs[variant]
                    meta = json.loads((feat_dir / "featurize_meta.json").read_text())
                    results["excluded_grid_points"] = meta["excluded_grid_points"]
                    results["dataset_sizes"][variant] = meta["n_rows"]
                    seeds = [derive_seed(cfg.master_seed, SEED_SPLIT, p_idx, v_idx, r)
                             for r in range(cfg.classify.repeats)]
                    variant_block = {}
                    for method in cfg.featurization.methods:
                        method_block = {}
                        for dims in self._dims_list():
                            X, y2, y3, grid_index, _ = self._load_features(
                                feat_dir, method, dims)
                            y = y2 if problem == TWO_CLASS else y3
                            dims_block = {}
                            for algo in cfg.classify.algorithms:
                                if method == "carlsson":
                                    n_blocks = 2 if dims == "H1H2" else 1
                                    mask, result, sweep = self._sweep_carlsson(
                                        X, y, grid_index, algo, seeds, n_blocks)
                                    cell = {"mean": result.mean_accuracy,
                                            "std": result.std_accuracy,
                                            "per_split": result.per_split_accuracies.tolist(),
                                            "best_mask": mask,
                                            "sweep": sweep}
                                else:
                                    ds = clf.Dataset(X=X, y=y, grid_index=grid_index)
                                    result = clf.evaluate(
                                        ds, algo, repeats=cfg.classify.repeats,
                                        seeds=seeds,
                                        train_fraction=cfg.classify.train_fraction)
                                    cell = {"mean": result.mean_accuracy,
                                            "std": result.std_accuracy,
                                            "per_split": result.per_split_accuracies.tolist()}
                                dims_block[algo] = cell
                                self._write_map(
                                    maps_dir / f"{problem}_{variant}_{method}_{dims}_{algo}.csv",
                                    result, grid_lookup)
                            method_block[dims] = dims_block
                        variant_block[method] = method_block
                    problem_block[variant] = variant_block
                results["problems"][problem] = problem_block

            results["config"] = cfg.to_dict()
            results["stage_hashes"] = dict(self.stage_hashes)
            _write_json(directory / "results.json", results)
            self._finish(directory, "evaluate", payload)
        except Exception as exc:
            shutil.rmtree(directory, ignore_errors=True)
            if isinstance(exc, StageError):
                raise
            raise StageError("evaluate", str(exc)) from exc
        return directory

    @staticmethod
    def _write_map(path: Path, result: clf.EvalResult, grid_lookup: dict) -> None:
        """Misclassification tallies joined with the stability grid rows."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["speed_index", "depth_index", "speed_rpm", "depth_m",
                             "true_class3", "true_class2", "test_count",
                             "misclassification_count", "misclassified_fraction"])
            tested = result.per_point_test_counts
            wrong = result.per_point_misclassification_counts
            for gi in range(tested.size):
                row = grid_lookup.get(gi)
                if row is None or row["class3"] not in CLASS3_VALUES:
                    continue
                t, w = int(tested[gi]), int(wrong[gi])
                fraction = w / t if t else 0.0
                writer.writerow([row["speed_index"], row["depth_index"],
                                 row["speed_rpm"], row["depth_m"],
                                 row["class3"], row["class2"],
                                 t, w, repr(fraction)])

    # ----- orchestration -----

    def run(self, through: str = "evaluate") -> RunSummary:
        if through not in STAGES:
            raise StageError("run", f"unknown stage {through!r}")
        stop = STAGES.index(through)
        sim_dir = self.stage_simulate()
        results_path = None
        results = None
        if stop >= STAGES.index("label"):
            label_dir = self.stage_label()
        if stop >= STAGES.index("prep"):
            featurize_dirs = {}
            for snr in self.config.variants():
                prep_dir = self.stage_prep(sim_dir, snr)
                if stop >= STAGES.index("persist"):
                    persist_dir = self.stage_persist(prep_dir, snr)
                if stop >= STAGES.index("featurize"):
                    featurize_dirs[variant_name(snr)] = self.stage_featurize(
                        persist_dir, label_dir, snr)
        if stop >= STAGES.index("evaluate"):
            eval_dir = self.stage_evaluate(featurize_dirs, label_dir)
            results_path = self.out_dir / "results.json"
            shutil.copyfile(eval_dir / "results.json", results_path)
            out_maps = self.out_dir / "maps"
            if out_maps.exists():
                shutil.rmtree(out_maps)
            shutil.copytree(eval_dir / "maps", out_maps)
            shutil.copyfile(label_dir / "labels.csv", self.out_dir / "labels.csv")
            results = json.loads(results_path.read_text())
        return RunSummary(out_dir=self.out_dir, results_path=results_path,
                          stage_hashes=dict(self.stage_hashes),
                          cache_hits=list(self.cache_hits),
                          cache_misses=list(self.cache_misses),
                          results=results)


def run(config, out_dir, jobs: int = 1, through: str = "evaluate") -> RunSummary:
    """Execute the pipeline for a config (path or ExperimentConfig)."""
    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    return Pipeline(config, out_dir, jobs=jobs).run(through=through)


# ----- reporting -----

def results_table(results: dict) -> dict:
    """Flat table: (problem, variant, method, dims, classifier) -> cell, plus
    per-column best markers (column = variant x method x dims)."""
    table = {}
    best = {}
    for problem, problem_block in results["problems"].items():
        for variant, variant_block in problem_block.items():
            for method, method_block in variant_block.items():
                for dims, dims_block in method_block.items():
                    column = (problem, variant, method, dims)
                    col_best = None
                    for algo, cell in dims_block.items():
                        table[(problem, variant, method, dims, algo)] = cell
                        if col_best is None or cell["mean"] > col_best[1]:
                            col_best = (algo, cell["mean"])
                    if col_best is not None:
                        best[column] = col_best[0]
    return {"cells": table, "column_best": best}


def _expected_combos(results: dict):
    config = results["config"]
    dims = list(DIMS_BASE) + (["H0"] if config["featurization"]["include_h0"] else [])
    variants = [NOISELESS] + [variant_name(s) for s in config["noise_levels"]]
    for problem in config["classify"]["problems"]:
        for variant in variants:
            for method in config["featurization"]["methods"]:
                for d in dims:
                    for algo in config["classify"]["algorithms"]:
                        yield problem, variant, method, d, algo


def report(results_path, fmt: str = "markdown", out_path=None) -> Path:
    """Render the results table; raises on missing factor combinations."""
    results_path = Path(results_path)
    if results_path.is_dir():
        results_path = results_path / "results.json"
    if fmt not in ("markdown", "csv"):
        raise StageError("report", f"unknown format {fmt!r}")
    results = json.loads(results_path.read_text())
    table = results_table(results)
    missing = [combo for combo in _expected_combos(results)
               if combo not in table["cells"]]
    if missing:
        raise StageError("report", f"missing factor combinations: {missing[:5]}"
                                   f" ({len(missing)} total)")

    if out_path is None:
        suffix = "md" if fmt == "markdown" else "csv"
        out_path = results_path.parent / f"table.{suffix}"
    out_path = Path(out_path)

    config = results["config"]
    dims = list(DIMS_BASE) + (["H0"] if config["featurization"]["include_h0"] else [])
    variants = [NOISELESS] + [variant_name(s) for s in config["noise_levels"]]
    methods = list(config["featurization"]["methods"])
    algorithms = list(config["classify"]["algorithms"])
    mode = config["process"]["milling_mode"]

    if fmt == "csv":
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["problem", "mode", "variant", "method", "dims",
                             "classifier", "mean_accuracy", "std_accuracy", "best"])
            for problem in config["classify"]["problems"]:
                for variant in variants:
                    for method in methods:
                        for d in dims:
                            for algo in algorithms:
                                cell = table["cells"][(problem, variant, method, d, algo)]
                                is_best = table["column_best"][(problem, variant, method, d)] == algo
                                writer.writerow([problem, mode, variant, method, d,
                                                 algo, repr(cell["mean"]),
                                                 repr(cell["std"]),
                                                 int(is_best)])
    else:
        lines = []
        for problem in config["classify"]["problems"]:
            for variant in variants:
                lines.append(f"### {mode}milling, {problem}, dataset: {variant}")
                lines.append("")
                header = ["classifier"] + [f"{m} {d}" for m in methods for d in dims]
                lines.append("| " + " | ".join(header) + " |")
                lines.append("|" + "---|" * len(header))
                for algo in algorithms:
                    row = [algo]
                    for m in methods:
                        for d in dims:
                            cell = table["cells"][(problem, variant, m, d, algo)]
                            text = f"{cell['mean'] * 100:.1f}% ± {cell['std'] * 100:.1f}"
                            if table["column_best"][(problem, variant, m, d)] == algo:
                                text = f"**{text}**"
                            row.append(text)
                    lines.append("| " + " | ".join(row) + " |")
                lines.append("")
        out_path.write_text("\n".join(lines))
    return out_path
