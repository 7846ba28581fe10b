"""Command-line driver: ``analyze``, ``fit`` and ``bench`` subcommands.

Experiments are described by INI-style config files (one section per
coordinate axis plus an ``[experiment]``/``[analyze]``/``[bench]``
section); a handful of flags override file values.  Outputs are CSV,
JSON and PNG/raw-tensor artifacts.

Exit codes: 0 success, 1 numerical failure (rank deficiency, divergence,
out-of-domain queries), 2 usage or configuration errors.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedders import Embedder, embed_batch, embedder_from_config, embedder_to_config, make_embedder
from .encoding import (
    build_blending,
    encode_grid,
    grid_points,
    kron_predict,
    simple_features,
)
from .exceptions import (
    ConfigError,
    DivergenceError,
    KronfitError,
    OutOfDomainError,
    ParameterError,
    RankDeficiencyError,
)
from .signals import GridSignal, grid_split, load_grid_tensor, load_image, load_image_stack, psnr, random_split, save_image
from .solvers import WeightTensor, closed_form_fit, gd_fit_linear, mlp_train, predict_grid
from .spectral import (
    empirical_distance,
    spectral_report,
    theoretical_distance,
    theoretical_stable_rank,
)
from . import tensorfile

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2

MODES = ("simple", "complex")
SOLVERS = ("closed", "gd", "mlp")
SPLITS = ("grid", "random", "none")

# naive Kronecker benchmarking is skipped beyond this product of feature lengths
BENCH_NAIVE_FEATURE_CAP = 2**20
BENCH_NAIVE_ENTRY_CAP = 2**24


@dataclass
class ExperimentConfig:
    """Parsed ``fit`` experiment: per-axis encoders plus solver settings."""

    embedders: list[Embedder]
    mode: str = "complex"
    solver: str = "closed"
    split: str = "grid"
    stride: int = 2
    fraction: float = 0.25
    ridge: float = 1e-8
    lr: float | None = None
    epochs: int = 2000
    depth: int = 4
    width: int = 256
    optimizer: str = "gd"
    seed: int = 0
    pinv: bool = False
    out: Path = field(default_factory=lambda: Path("."))

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.split not in SPLITS:
            raise ConfigError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.solver == "closed" and self.mode != "complex":
            raise ConfigError("solver 'closed' requires mode 'complex'")
        if self.solver == "mlp" and self.mode != "simple":
            raise ConfigError("solver 'mlp' requires mode 'simple'")
        if self.solver == "closed" and self.split == "random":
            raise ConfigError("solver 'closed' requires separable training coordinates (split grid or none)")
        if self.mode == "complex" and self.solver == "mlp":
            raise ConfigError("solver 'mlp' requires mode 'simple'")

    def echo(self) -> dict:
        return {
            "mode": self.mode,
            "solver": self.solver,
            "split": self.split,
            "stride": self.stride,
            "fraction": self.fraction,
            "ridge": self.ridge,
            "lr": self.lr,
            "epochs": self.epochs,
            "depth": self.depth,
            "width": self.width,
            "optimizer": self.optimizer,
            "seed": self.seed,
            "pinv": self.pinv,
            "axes": [embedder_to_config(e) for e in self.embedders],
        }


def _read_config(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    loaded = parser.read(path)
    if not loaded:
        raise ConfigError(f"cannot read config file {path}")
    return parser


def _axis_sections(parser: configparser.ConfigParser) -> list[str]:
    names = [s for s in parser.sections() if s.startswith("axis")]
    try:
        names.sort(key=lambda s: int(s[4:]))
    except ValueError as exc:
        raise ConfigError(f"axis sections must be named axis0, axis1, ...: {exc}") from exc
    return names


def load_experiment_config(path, ndim: int, overrides: argparse.Namespace) -> ExperimentConfig:
    parser = _read_config(path)
    axis_names = _axis_sections(parser)
    if not axis_names:
        raise ConfigError("config needs at least one [axis0] section")
    axis_cfgs = [dict(parser[name]) for name in axis_names]
    if len(axis_cfgs) > ndim:
        raise ConfigError(f"config declares {len(axis_cfgs)} axes but the signal has {ndim}")
    while len(axis_cfgs) < ndim:  # reuse the last axis spec for the remaining dims
        axis_cfgs.append(dict(axis_cfgs[-1]))
    embedders = [embedder_from_config(c) for c in axis_cfgs]

    exp = parser["experiment"] if parser.has_section("experiment") else {}

    def get(key, cast, default):
        raw = str(exp.get(key, "") or "").strip()
        if raw == "":
            return default
        try:
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for experiment.{key}: {raw!r}") from exc

    cfg = ExperimentConfig(
        embedders=embedders,
        mode=get("mode", str, "complex").lower(),
        solver=get("solver", str, "closed").lower(),
        split=get("split", str, "grid").lower(),
        stride=get("stride", int, 2),
        fraction=get("fraction", float, 0.25),
        ridge=get("ridge", float, 1e-8),
        lr=get("lr", float, None),
        epochs=get("epochs", int, 2000),
        depth=get("depth", int, 4),
        width=get("width", int, 256),
        optimizer=get("optimizer", str, "gd").lower(),
        seed=get("seed", int, 0),
        out=Path(get("out", str, ".")),
    )
    if getattr(overrides, "seed", None) is not None:
        cfg.seed = overrides.seed
    if getattr(overrides, "ridge", None) is not None:
        cfg.ridge = overrides.ridge
    if getattr(overrides, "pinv", False):
        cfg.pinv = True
    if getattr(overrides, "out", None) is not None:
        cfg.out = Path(overrides.out)
    cfg.validate()
    return cfg


# --- analyze ---------------------------------------------------------------------


def _parse_list(raw: str, cast):
    return [cast(tok.strip()) for tok in raw.split(",") if tok.strip()]


def _analysis_embedder(kind: str, sigma: float, num_features: int, boundary: str, seed: int) -> Embedder:
    if kind in ("linf", "logf", "rff"):
        return make_embedder(kind, freq_sigma=sigma, num_features=num_features // 2,
                             boundary=boundary, seed=seed)
    return make_embedder(kind, width_sigma=sigma, num_features=num_features,
                         boundary=boundary, seed=seed)


def cmd_analyze(args) -> int:
    parser = _read_config(args.config)
    if not parser.has_section("analyze"):
        raise ConfigError("analyze config needs an [analyze] section")
    sec = parser["analyze"]
    kinds = _parse_list(sec.get("kinds", "gauss"), str)
    sigmas = _parse_list(sec.get("sigmas", "0.05"), float)
    n_values = _parse_list(sec.get("n_values", "256"), int)
    num_features = sec.getint("num_features", fallback=max(n_values))
    boundary = sec.get("boundary", "wrap").strip()
    seed = args.seed if args.seed is not None else sec.getint("seed", fallback=0)
    out = Path(args.out) if args.out is not None else Path(sec.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)

    rank_rows = []
    for kind in kinds:
        for sigma in sigmas:
            for n in n_values:
                e = _analysis_embedder(kind, sigma, num_features, boundary, seed)
                xs = (np.arange(n) + 0.5) / n
                report = spectral_report(embed_batch(e, xs), scale=e.sampling_interval)
                try:
                    theory = f"{theoretical_stable_rank(e, n):.10g}"
                except ParameterError:
                    theory = ""
                rank_rows.append(
                    f"{kind},{sigma:.10g},{n},{e.output_length},"
                    f"{report.stable_rank:.10g},{theory},{report.numerical_rank}"
                )
    rank_path = out / "stable_rank.csv"
    rank_path.write_text(
        "kind,sigma,N,d,stable_rank,theoretical_stable_rank,numerical_rank\n"
        + "".join(row + "\n" for row in rank_rows)
    )

    dist_kind = sec.get("distance_kind", "gauss").strip()
    dist_sigma = sec.getfloat("distance_sigma", fallback=sigmas[0])
    dist_features = sec.getint("distance_features", fallback=num_features)
    delta_max = sec.getfloat("delta_max", fallback=0.3)
    delta_steps = sec.getint("delta_steps", fallback=31)
    e = _analysis_embedder(dist_kind, dist_sigma, dist_features, boundary, seed)
    dist_rows = []
    for delta in np.linspace(0.0, delta_max, delta_steps):
        emp = empirical_distance(e, float(delta))
        try:
            theory = f"{theoretical_distance(e, float(delta)):.10g}"
        except ParameterError:
            theory = ""
        dist_rows.append(f"{delta:.10g},{emp:.10g},{theory}")
    dist_path = out / "distance.csv"
    dist_path.write_text(
        "delta,empirical_D,theoretical_D\n" + "".join(row + "\n" for row in dist_rows)
    )
    print(f"wrote {rank_path} and {dist_path}")
    return EXIT_OK


# --- fit -------------------------------------------------------------------------


def _load_signal(path: Path) -> GridSignal:
    path = Path(path)
    if path.is_dir():
        return load_image_stack(path)
    if path.suffix.lower() == ".png":
        return load_image(path)
    return load_grid_tensor(path)


def _train_mask(shape: tuple[int, ...], stride: int) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    mask[tuple(slice(0, None, stride) for _ in shape)] = True
    return mask


def _flat_indices(sig: GridSignal, coords: np.ndarray) -> np.ndarray:
    idx = []
    for d in range(sig.ndim):
        scaled = coords[:, d] * (sig.grid_shape[d] - 1)
        idx.append(np.rint(scaled).astype(np.int64))
    return np.ravel_multi_index(tuple(idx), sig.grid_shape)


def _memory_estimate(cfg: ExperimentConfig, sig: GridSignal, n_train: int,
                     model, blend_nnz: int) -> int:
    """Rough footprint in bytes: model weights plus encodings of the training set.

    Complex separable: channels * prod(K) weights plus the per-axis
    encoding matrices; simple: the dense feature matrix plus MLP
    parameters; the blending path adds its nonzero triplets.
    """
    feat = [e.output_length for e in cfg.embedders]
    if cfg.mode == "complex":
        weights = sig.channels * int(np.prod(feat))
        encodings = int(sum(k * n for k, n in zip(feat, sig.grid_shape)))
        blend = 2 * blend_nnz  # value + column index per entry
        return 8 * (weights + encodings + blend)
    params = model.parameter_count if model is not None else 0
    return 8 * (n_train * int(sum(feat)) + params)


def cmd_fit(args) -> int:
    sig = _load_signal(args.input)
    cfg = load_experiment_config(args.config, sig.ndim, args)
    cfg.out.mkdir(parents=True, exist_ok=True)

    timer = {}
    t0 = time.perf_counter()

    # split
    if cfg.split == "grid":
        train_sig, _test_set = grid_split(sig, cfg.stride)
        train_mask = _train_mask(sig.grid_shape, cfg.stride)
    elif cfg.split == "random":
        train_set, _test_set = random_split(sig, cfg.fraction, cfg.seed)
        train_mask = np.zeros(sig.grid_shape, dtype=bool)
        train_mask.ravel()[_flat_indices(sig, train_set.coords)] = True
    else:
        train_sig = sig
        train_mask = np.ones(sig.grid_shape, dtype=bool)

    # encode
    model = None
    losses = None
    blend_nnz = 0
    if cfg.mode == "complex":
        if cfg.split == "random":
            enc_fit = encode_grid(cfg.embedders, sig.axes)
            blend = build_blending(enc_fit, train_set.coords)
            blend_nnz = blend.matrix.nnz
            n_train = len(train_set)
        else:
            enc_fit = encode_grid(cfg.embedders, train_sig.axes)
            n_train = int(np.prod(train_sig.grid_shape))
        enc_full = encode_grid(cfg.embedders, sig.axes)
        timer["encode"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        if cfg.solver == "closed":
            model = closed_form_fit(enc_fit, train_sig.values, ridge=cfg.ridge, pinv=cfg.pinv)
        elif cfg.split == "random":
            model, losses = gd_fit_linear(enc_fit, train_set.values, lr=cfg.lr,
                                          epochs=cfg.epochs, seed=cfg.seed, blend=blend)
        else:
            model, losses = gd_fit_linear(enc_fit, train_sig.values, lr=cfg.lr,
                                          epochs=cfg.epochs, seed=cfg.seed)
        timer["solve"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        pred = predict_grid(model, enc_full)
        timer["evaluate"] = time.perf_counter() - t0
    else:
        if cfg.split == "random":
            train_points, train_values = train_set.coords, train_set.values
        else:
            train_points = grid_points(train_sig.axes)
            train_values = train_sig.values.reshape(-1, sig.channels, order="F")
        feats_train = simple_features(cfg.embedders, train_points)
        n_train = feats_train.shape[0]
        timer["encode"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        depth = cfg.depth if cfg.solver == "mlp" else 0
        lr = cfg.lr if cfg.lr is not None else 2e-3
        model = mlp_train(feats_train, train_values, depth=depth, width=cfg.width,
                          lr=lr, epochs=cfg.epochs, seed=cfg.seed, optimizer=cfg.optimizer)
        losses = model.loss_curve
        timer["solve"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        feats_all = simple_features(cfg.embedders, grid_points(sig.axes))
        pred = model.predict(feats_all).reshape(sig.grid_shape + (sig.channels,), order="F")
        timer["evaluate"] = time.perf_counter() - t0

    # score
    full_psnr = psnr(pred, sig.values)
    train_psnr = psnr(pred[train_mask], sig.values[train_mask])
    if np.all(train_mask):
        test_psnr = train_psnr
    else:
        test_psnr = psnr(pred[~train_mask], sig.values[~train_mask])

    report = {
        "psnr": {"train": train_psnr, "test": test_psnr, "full": full_psnr},
        "parameter_count": model.parameter_count,
        "memory_bytes": _memory_estimate(cfg, sig, n_train, model, blend_nnz),
        "phase_seconds": timer,
        "config": cfg.echo(),
    }
    (cfg.out / "report.json").write_text(json.dumps(report, indent=2) + "\n")

    if sig.ndim == 2 and sig.channels in (1, 3):
        save_image(np.clip(pred, 0.0, 1.0), cfg.out / "recon.png")
    else:
        tensorfile.write_tensor(cfg.out / "recon.kft", np.clip(pred, 0.0, 1.0))
    if isinstance(model, WeightTensor):
        model.save(cfg.out / "weights.kft")
    if losses is not None:
        loss_rows = "".join(f"{i},{v:.17g}\n" for i, v in enumerate(np.asarray(losses)))
        (cfg.out / "loss.csv").write_text("epoch,mse\n" + loss_rows)

    print(json.dumps(report["psnr"]))
    return EXIT_OK


# --- bench -----------------------------------------------------------------------


def fit_growth_exponent(sizes, seconds) -> float:
    """Slope of log(seconds) against log(size); needs two or more points."""
    sizes = np.asarray(sizes, dtype=np.float64)
    seconds = np.asarray(seconds, dtype=np.float64)
    if sizes.size < 2:
        raise ParameterError("need at least two sizes to fit an exponent")
    coeffs = np.polyfit(np.log(sizes), np.log(seconds), 1)
    return float(coeffs[0])


def _time_call(fn, repeats: int = 3) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cmd_bench(args) -> int:
    parser = _read_config(args.config)
    sec = parser["bench"] if parser.has_section("bench") else {}
    ndim = int(str(sec.get("dims", "2")))
    sizes = _parse_list(str(sec.get("sizes", "")), int)
    seed = args.seed if args.seed is not None else int(str(sec.get("seed", "0")))
    out = Path(args.out) if args.out is not None else Path(str(sec.get("out", ".")))
    out.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    rows = []
    mode_times, naive_times, naive_sizes = [], [], []
    for n in sizes:
        e = make_embedder("gauss", width_sigma=0.05, num_features=n)
        grid = np.arange(n) / n
        enc = encode_grid([e] * ndim, [grid] * ndim)
        weights = rng.standard_normal([n] * ndim)
        t_mode = _time_call(lambda: kron_predict(weights, enc))
        mode_times.append(t_mode)

        feature_product = n**ndim
        entries = feature_product * feature_product
        t_naive = math.nan
        gap = math.nan
        if feature_product <= BENCH_NAIVE_FEATURE_CAP and entries <= BENCH_NAIVE_ENTRY_CAP:
            big = np.ones((1, 1))
            for mat in enc.per_axis:
                big = np.kron(mat.T, big)
            vec_w = weights.ravel(order="F")
            t_naive = _time_call(lambda: big @ vec_w)
            gap = float(
                np.max(np.abs(big @ vec_w - kron_predict(weights, enc).ravel(order="F")))
            )
            naive_times.append(t_naive)
            naive_sizes.append(n)
        rows.append(f"{ndim},{n},{n},{t_mode:.9g},{t_naive:.9g},{gap:.9g}")

    bench_path = out / "bench.csv"
    bench_path.write_text(
        "D,N,K,mode_product_seconds,naive_seconds,max_abs_gap\n"
        + "".join(row + "\n" for row in rows)
    )
    exp_rows = []
    if len(sizes) >= 2:
        exp_rows.append(f"mode_product,{fit_growth_exponent(sizes, mode_times):.6g}")
    if len(naive_sizes) >= 2:
        exp_rows.append(f"naive,{fit_growth_exponent(naive_sizes, naive_times):.6g}")
    (out / "bench_exponents.csv").write_text(
        "path,exponent\n" + "".join(row + "\n" for row in exp_rows)
    )
    print(f"wrote {bench_path}")
    return EXIT_OK


# --- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kronfit",
                                     description="positional-encoding analysis and signal fitting")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", type=str, default=None, help="output directory")

    p_analyze = sub.add_parser("analyze", parents=[common],
                               help="stable-rank and distance sweeps to CSV")
    p_analyze.add_argument("config", type=str)
    p_analyze.set_defaults(func=cmd_analyze)

    p_fit = sub.add_parser("fit", parents=[common], help="fit a signal and report PSNR")
    p_fit.add_argument("config", type=str)
    p_fit.add_argument("input", type=str)
    p_fit.add_argument("--ridge", type=float, default=None, help="override the config ridge")
    p_fit.add_argument("--pinv", action="store_true",
                       help="use the pseudo-inverse (cutoff 1e-10 s1) instead of failing on rank deficiency")
    p_fit.set_defaults(func=cmd_fit)

    p_bench = sub.add_parser("bench", parents=[common],
                             help="time mode-product vs naive Kronecker evaluation")
    p_bench.add_argument("config", type=str)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RankDeficiencyError, DivergenceError, OutOfDomainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KronfitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
