"""End-to-end orchestration and command-line entry points.

Subcommands:
  run       --config FILE   full pipeline: ingest, split, standardize, evolve,
                            optional MLP baseline, write report/history/archive
  inspect   --genome BITS --config FILE   decode and print one individual
  baseline  --config FILE   classical PCA(64)+MLP comparison only

The config file is flat `key = value` text, one key per line, '#' comments
allowed (schema in the README). Outputs land in the configured output
directory as report.json, history.csv and archive.json. The only environment
override is QKEVOLVE_THREADS, the offspring evaluation thread count.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import baseline as baseline_mod
from . import svm as svm_mod
from .circuit import build_feature_map, complexity, diagram, evaluate_states
from .evolve import EvalData, GaConfig, run as run_ga
from .genome import (
    EncodingMode,
    bits_to_line,
    decode_genome,
    genome_length,
    line_to_bits,
)
from .reduce import (
    FeatureMatrix,
    load_external_features,
    pca_fit,
    pca_transform,
    standardize_apply,
    standardize_fit,
    stratified_split,
)
from .svm import SvmConfig

log = logging.getLogger(__name__)

EXTERNAL_FEATURE_DIM = 64
THREADS_ENV_VAR = "QKEVOLVE_THREADS"


class ConfigError(ValueError):
    """Invalid configuration or input; reported as a one-line machine-parseable
    error and a nonzero exit."""

    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass
class RunConfig:
    mode: str  # "pca" or "external"
    dataset: Path
    output_dir: Path
    image_size: int = 250
    qubits: int = 6
    layers: int = 11
    mu: int = 50
    lambda_: int = 20
    p_cross: float = 0.6
    p_ind: float = 0.4
    p_gen: float = 0.3
    generations: int = 2000
    patience: int = 200
    seed: int = 0
    test_fraction: float = 0.25
    svm_c: float = 1.0
    svm_tol: float = 1e-6
    svm_max_passes: int = 100_000
    baseline: bool = True
    baseline_lr: float = 0.01
    baseline_epochs: int = 100

    @property
    def encoding_mode(self) -> EncodingMode:
        return EncodingMode.PCA_HEADER if self.mode == "pca" else EncodingMode.FIXED_FEATURES

    def ga_config(self) -> GaConfig:
        return GaConfig(
            m_qubits=self.qubits,
            n_layers=self.layers,
            mode=self.encoding_mode,
            mu=self.mu,
            lambda_=self.lambda_,
            p_cross=self.p_cross,
            p_ind=self.p_ind,
            p_gen=self.p_gen,
            max_generations=self.generations,
            patience=self.patience,
            seed=self.seed,
        )

    def svm_config(self) -> SvmConfig:
        return SvmConfig(c_reg=self.svm_c, tol=self.svm_tol, max_passes=self.svm_max_passes)

    def echo(self) -> dict:
        d = asdict(self)
        d["dataset"] = str(self.dataset)
        d["output_dir"] = str(self.output_dir)
        d["lambda"] = d.pop("lambda_")
        return d


_BOOLS = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}

_CONFIG_TYPES = {
    "mode": str,
    "dataset": str,
    "output_dir": str,
    "image_size": int,
    "qubits": int,
    "layers": int,
    "mu": int,
    "lambda": int,
    "p_cross": float,
    "p_ind": float,
    "p_gen": float,
    "generations": int,
    "patience": int,
    "seed": int,
    "test_fraction": float,
    "svm_c": float,
    "svm_tol": float,
    "svm_max_passes": int,
    "baseline": bool,
    "baseline_lr": float,
    "baseline_epochs": int,
}


def parse_config_file(path, require_dataset: bool = True) -> RunConfig:
    """Parse and validate a flat key=value config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config-missing", f"config file not found: {path}")
    values: dict = {}
    for line_no, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config-syntax", f"line {line_no}: expected 'key = value'")
        key, _, text = line.partition("=")
        key, text = key.strip(), text.strip()
        if key not in _CONFIG_TYPES:
            raise ConfigError("config-key", f"line {line_no}: unknown key {key!r}")
        typ = _CONFIG_TYPES[key]
        try:
            if typ is bool:
                values[key] = _BOOLS[text.lower()]
            elif typ is int:
                values[key] = int(text)
            elif typ is float:
                values[key] = float(text)
            else:
                values[key] = text
        except (KeyError, ValueError):
            raise ConfigError(
                "config-value", f"line {line_no}: cannot parse {text!r} as {typ.__name__}"
            ) from None

    for required in ("mode", "dataset", "output_dir"):
        if required not in values:
            raise ConfigError("config-key", f"missing required key {required!r}")
    if values["mode"] not in ("pca", "external"):
        raise ConfigError("config-value", "mode must be 'pca' or 'external'")
    if "lambda" in values:
        values["lambda_"] = values.pop("lambda")
    config = RunConfig(
        **{**values, "dataset": Path(values["dataset"]), "output_dir": Path(values["output_dir"])}
    )
    if config.qubits * config.layers < 1 or config.qubits < 1 or config.layers < 1:
        raise ConfigError("config-value", "qubits and layers must be positive")
    if not 0.0 < config.test_fraction < 1.0:
        raise ConfigError("config-value", "test_fraction must lie strictly between 0 and 1")
    for name in ("p_cross", "p_ind", "p_gen"):
        if not 0.0 <= getattr(config, name) <= 1.0:
            raise ConfigError("config-value", f"{name} must lie in [0, 1]")
    if require_dataset and not config.dataset.exists():
        raise ConfigError("dataset-missing", f"dataset path does not exist: {config.dataset}")
    return config


# ---------------------------------------------------------------------------
# image ingestion


def _read_pgm(path: Path) -> np.ndarray:
    """Decode a P2 (ascii) or P5 (binary) PGM into floats in [0, 1]."""
    data = path.read_bytes()
    if data[:2] not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a P2/P5 PGM file")
    binary = data[:2] == b"P5"

    tokens = []
    pos = 2
    while len(tokens) < 3:
        if pos >= len(data):
            raise ValueError(f"{path}: truncated PGM header")
        ch = data[pos:pos + 1]
        if ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    width, height, maxval = (int(t) for t in tokens)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ValueError(f"{path}: invalid PGM dimensions")

    if binary:
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        count = width * height
        if len(data) - pos < count * dtype.itemsize:
            raise ValueError(f"{path}: truncated PGM pixel data")
        pixels = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    else:
        pixels = np.array(data[pos:].split(), dtype=float)
        if pixels.size != width * height:
            raise ValueError(f"{path}: wrong ascii pixel count")
    return pixels.reshape(height, width).astype(float) / maxval


def _load_image(path: Path) -> np.ndarray:
    """Grayscale image in [0, 1]; PGM natively, other formats via Pillow when
    it is installed."""
    if path.suffix.lower() == ".pgm":
        return _read_pgm(path)
    try:
        from PIL import Image
    except ImportError:
        raise ValueError(f"{path}: only PGM is supported without Pillow installed") from None
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=float) / 255.0


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-center bilinear resampling with edge clamping, so output
    corners reproduce input corners exactly."""
    img = np.asarray(img, dtype=float)
    h, w = img.shape
    ys = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = img[np.ix_(y0, x0)] * (1 - wx) + img[np.ix_(y0, x1)] * wx
    bottom = img[np.ix_(y1, x0)] * (1 - wx) + img[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bottom * wy


def load_image_dataset(root, image_size: int = 250) -> FeatureMatrix:
    """Load a two-class grayscale image tree: one subdirectory per class,
    labels 0/1 assigned by lexicographic directory order. Every image is
    resized to image_size x image_size and flattened row-major; unreadable
    files are skipped with a warning."""
    root = Path(root)
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if len(class_dirs) != 2:
        raise ValueError(f"{root}: expected exactly 2 class subdirectories, found {len(class_dirs)}")
    rows, labels = [], []
    skipped = 0
    for label, class_dir in enumerate(class_dirs):
        loaded = 0
        for file in sorted(p for p in class_dir.iterdir() if p.is_file()):
            try:
                img = _load_image(file)
            except (ValueError, OSError) as exc:
                skipped += 1
                log.warning("skipping unreadable image %s: %s", file, exc)
                continue
            rows.append(bilinear_resize(img, image_size, image_size).ravel())
            labels.append(label)
            loaded += 1
        if loaded == 0:
            raise ValueError(f"{class_dir}: class has no readable images")
    if skipped:
        log.warning("skipped %d unreadable images under %s", skipped, root)
    return FeatureMatrix(rows=np.asarray(rows), labels=np.asarray(labels, dtype=int))


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class PreparedData:
    eval_data: EvalData
    labels01_train: np.ndarray
    labels01_test: np.ndarray
    train_indices: np.ndarray
    test_indices: np.ndarray
    class_counts: dict


def prepare_data(config: RunConfig) -> PreparedData:
    if config.mode == "pca":
        dataset = load_image_dataset(config.dataset, config.image_size)
    else:
        try:
            dataset = load_external_features(config.dataset)
        except ValueError as exc:
            raise ConfigError("dataset-format", str(exc)) from None
        if dataset.rows.shape[1] != EXTERNAL_FEATURE_DIM:
            raise ConfigError(
                "dataset-width",
                f"external feature files must have exactly {EXTERNAL_FEATURE_DIM} feature "
                f"columns, found {dataset.rows.shape[1]}",
            )
    train_idx, test_idx = stratified_split(
        dataset.rows, dataset.labels, config.test_fraction, config.seed
    )
    params = standardize_fit(dataset.rows[train_idx])
    x_train = standardize_apply(params, dataset.rows[train_idx])
    x_test = standardize_apply(params, dataset.rows[test_idx])
    y01_train = dataset.labels[train_idx]
    y01_test = dataset.labels[test_idx]
    classes, counts = np.unique(dataset.labels, return_counts=True)
    return PreparedData(
        eval_data=EvalData(
            x_train=x_train,
            y_train=y01_train * 2 - 1,
            x_test=x_test,
            y_test=y01_test * 2 - 1,
            svm_config=config.svm_config(),
        ),
        labels01_train=y01_train,
        labels01_test=y01_test,
        train_indices=train_idx,
        test_indices=test_idx,
        class_counts={int(c): int(n) for c, n in zip(classes, counts)},
    )


def _threads_from_env() -> int:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        threads = int(raw)
        if threads < 1:
            raise ValueError
    except ValueError:
        raise ConfigError("threads", f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}")
    return threads


def _effective_dim(config: RunConfig, prepared: PreparedData, components: int | None) -> int:
    if config.mode != "pca":
        return prepared.eval_data.x_train.shape[1]
    return prepared.eval_data.pca_model(components).components.shape[0]


def _individual_record(ind, config: RunConfig, prepared: PreparedData) -> dict:
    genome = decode_genome(ind.bits, config.qubits, config.layers, config.encoding_mode)
    dim = _effective_dim(config, prepared, genome.pca_components)
    circ = build_feature_map(genome, dim)
    return {
        "bitstring": bits_to_line(ind.bits),
        "accuracy": ind.fitness.accuracy,
        "complexity": ind.fitness.complexity,
        "objective_balance": ind.fitness.objective_balance,
        "pca_components": genome.pca_components,
        "circuit": diagram(circ),
    }


def _refit_best_qsvm(best, config: RunConfig, prepared: PreparedData) -> dict:
    """Retrain the winning classifier on the same split so its dual solution
    lands in the report."""
    data = prepared.eval_data
    genome = decode_genome(best.bits, config.qubits, config.layers, config.encoding_mode)
    if config.mode == "pca":
        model = data.pca_model(genome.pca_components)
        x_train = pca_transform(model, data.x_train)
    else:
        x_train = data.x_train
    circ = build_feature_map(genome, x_train.shape[1])
    states = evaluate_states(circ, x_train)
    k_train = (states.conj() @ states.T).real
    return svm_mod.fit(k_train, data.y_train, config.svm_config()).summary()


def run_baseline(config: RunConfig, prepared: PreparedData) -> dict:
    """PCA(64) + MLP comparison on the same split and standardization; the
    component count is clamped when the training set is too small for 64."""
    data = prepared.eval_data
    pca = pca_fit(data.x_train, EXTERNAL_FEATURE_DIM)
    x_train = pca_transform(pca, data.x_train)
    x_test = pca_transform(pca, data.x_test)
    model = baseline_mod.train(
        x_train,
        prepared.labels01_train,
        lr=config.baseline_lr,
        epochs=config.baseline_epochs,
        seed=config.seed,
    )
    return {
        "accuracy": baseline_mod.evaluate(model, x_test, prepared.labels01_test),
        "train_accuracy": baseline_mod.evaluate(model, x_train, prepared.labels01_train),
        "pca_components": int(pca.components.shape[0]),
        "hidden_dim": model.hidden_dim,
        "learning_rate": config.baseline_lr,
        "epochs": config.baseline_epochs,
        "final_loss": float(model.loss_history[-1]),
    }


@dataclass
class RunReport:
    config: dict
    dataset: dict
    best: dict
    archive: list
    baseline: dict | None
    history_file: str
    total_evaluations: int
    generations_run: int
    generation0: dict
    provenance: dict
    wall_clock_seconds: float

    def to_dict(self) -> dict:
        return asdict(self)


def run_pipeline(config: RunConfig) -> RunReport:
    """Execute the configured run and write report.json, history.csv and
    archive.json into the output directory."""
    t0 = time.perf_counter()
    threads = _threads_from_env()
    prepared = prepare_data(config)
    result = run_ga(config.ga_config(), prepared.eval_data, threads=threads)

    baseline_report = run_baseline(config, prepared) if config.baseline else None

    gen0_complexities = sorted(i.fitness.complexity for i in result.initial_population)
    best_record = _individual_record(result.best, config, prepared)
    best_record["qsvm"] = _refit_best_qsvm(result.best, config, prepared)
    report = RunReport(
        config=config.echo(),
        dataset={
            "n_samples": int(prepared.labels01_train.size + prepared.labels01_test.size),
            "class_counts": prepared.class_counts,
            "n_train": int(prepared.train_indices.size),
            "n_test": int(prepared.test_indices.size),
            "train_indices": prepared.train_indices.tolist(),
            "test_indices": prepared.test_indices.tolist(),
        },
        best=best_record,
        archive=[_individual_record(ind, config, prepared) for ind in result.archive],
        baseline=baseline_report,
        history_file="history.csv",
        total_evaluations=result.evaluations,
        generations_run=result.generations_run,
        generation0={
            "median_complexity": float(np.median(gen0_complexities)),
            "best_accuracy": max(i.fitness.accuracy for i in result.initial_population),
        },
        provenance={
            "image_resize": "bilinear, half-pixel centers",
            "intensity_scale": "[0, 1] at decode, then per-feature [-1, 1] on the training split",
        },
        wall_clock_seconds=time.perf_counter() - t0,
    )

    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "history.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "generation",
                "best_accuracy",
                "best_objective_balance",
                "archive_size",
                "evaluations",
                "wallclock_seconds",
            ]
        )
        for row in result.history:
            writer.writerow(
                [
                    row.generation,
                    repr(row.best_accuracy),
                    repr(row.best_objective_balance),
                    row.archive_size,
                    row.evaluations,
                    f"{row.wallclock_seconds:.3f}",
                ]
            )
    with open(out / "archive.json", "w") as fh:
        json.dump(report.archive, fh, indent=2, sort_keys=True, ensure_ascii=False)
    with open(out / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True, ensure_ascii=False)
    return report


# ---------------------------------------------------------------------------
# entry points


def _cmd_run(args) -> int:
    config = parse_config_file(args.config)
    report = run_pipeline(config)
    best = report.best
    print(
        f"run complete: best accuracy {best['accuracy']:.4f}, "
        f"complexity {best['complexity']:.3f}, O_B {best['objective_balance']:.4f}, "
        f"archive size {len(report.archive)}, report in {config.output_dir}"
    )
    return 0


def _cmd_inspect(args) -> int:
    config = parse_config_file(args.config, require_dataset=False)
    bits = line_to_bits(args.genome)
    expected = genome_length(config.qubits, config.layers, config.encoding_mode)
    if bits.size != expected:
        raise ConfigError(
            "genome-length",
            f"expected {expected} bits for this configuration, got {bits.size}",
        )
    genome = decode_genome(bits, config.qubits, config.layers, config.encoding_mode)
    dim = genome.pca_components if config.mode == "pca" else EXTERNAL_FEATURE_DIM
    circ = build_feature_map(genome, dim)
    if genome.pca_components is not None:
        print(f"pca_components: {genome.pca_components}")
    print(f"complexity: {complexity(circ)}")
    census = circ.census
    print(f"gates: {census.n_local} local, {census.n_cnot} cnot, {census.n_identity} identity")
    print(diagram(circ))
    return 0


def _cmd_baseline(args) -> int:
    config = parse_config_file(args.config)
    prepared = prepare_data(config)
    result = run_baseline(config, prepared)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    with open(config.output_dir / "baseline.json", "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
    print(json.dumps(result, sort_keys=True))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkevolve",
        description="Evolve quantum-inspired kernel classifiers for grayscale images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute the full pipeline")
    p_run.add_argument("--config", required=True)
    p_run.set_defaults(func=_cmd_run)
    p_inspect = sub.add_parser("inspect", help="decode and print one genome")
    p_inspect.add_argument("--genome", required=True)
    p_inspect.add_argument("--config", required=True)
    p_inspect.set_defaults(func=_cmd_inspect)
    p_base = sub.add_parser("baseline", help="run only the classical baseline")
    p_base.add_argument("--config", required=True)
    p_base.set_defaults(func=_cmd_baseline)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": exc.code, "detail": exc.detail}), file=sys.stderr)
        return 2
    except ValueError as exc:
        print(json.dumps({"error": "input", "detail": str(exc)}), file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - unexpected failures
        print(json.dumps({"error": "internal", "detail": f"{type(exc).__name__}: {exc}"}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
