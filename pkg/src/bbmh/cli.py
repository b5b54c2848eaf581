"""Command-line pipeline.

Subcommands: hash, expand, sketch, train, predict, experiment, oracle,
analyze, plus synth for generating the synthetic corpus. Every
subcommand accepts --seed and --config; a config file is a flat
key-value text document (``key = value``, ``#`` comments) supplying
defaults that explicit flags override. A run is reproducible from
(config, input files) alone: artifacts embed no timestamps and all
randomness flows from the seeds.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import comparison, datasets, expansion, plots, sketches
from .errors import BbmhError
from .estimators import PairStats, bbit_constants
from .experiment import ExperimentConfig, best_over_c, run_experiment, write_report_csv
from .hashing import (
    SparseSet,
    build_family,
    iter_signature_file,
    minhash,
    read_signature_header,
    signature_byte_size,
    truncate_bits,
    write_signature_file,
)
from .learning import TrainConfig, load_model, predict_labels, save_model, train
from .oracle import exact_pb_sweep

_SUPPRESS = argparse.SUPPRESS


def _load_config(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" in body:
                key, _, val = body.partition("=")
            else:
                key, _, val = body.partition(" ")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if not key or not val:
                raise BbmhError(f"{path}:{lineno}: expected 'key = value'")
            out[key] = val
    return out


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise BbmhError(f"expected a boolean, got {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(",", " ").split())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(tok for tok in text.replace(",", " ").split())


def _merge(ns: argparse.Namespace, defaults: dict, converters: dict) -> dict:
    """Resolution order: flag > config entry > built-in default."""
    merged = dict(defaults)
    provided = {k: v for k, v in vars(ns).items() if k not in ("func", "config")}
    config_path = getattr(ns, "config", None)
    if config_path is not None:
        for key, raw in _load_config(config_path).items():
            if key not in defaults:
                raise BbmhError(f"unknown config key {key!r} for this command")
            conv = converters.get(key, type(defaults[key]) if defaults[key] is not None else str)
            merged[key] = conv(raw)
    merged.update(provided)
    return merged


def _figure_path(out: str) -> str:
    return str(Path(out).with_suffix(".png"))


# ----------------------------------------------------------------------
# subcommands


_SYNTH_DEFAULTS = dict(
    out="corpus.txt", records=3500, universe=1 << 20, tokens=4000, within=0.45,
    cross=0.15, mixed_fraction=0.25, label_noise=0.02, seed=0,
)


def cmd_synth(ns) -> int:
    opt = _merge(ns, _SYNTH_DEFAULTS, {})
    cfg = datasets.SyntheticConfig(
        n_records=opt["records"],
        universe_size=opt["universe"],
        tokens_per_record=opt["tokens"],
        within_resemblance=opt["within"],
        cross_resemblance=opt["cross"],
        mixed_fraction=opt["mixed_fraction"],
        label_noise=opt["label_noise"],
        seed=opt["seed"],
    )
    count = datasets.generate_corpus_file(opt["out"], cfg)
    print(
        f"wrote {count} records to {opt['out']} "
        f"(universe {cfg.universe_size}, ~{cfg.tokens_per_record} tokens each, "
        f"class core {cfg.core_size}, shared core {cfg.shared_size})"
    )
    return 0


_HASH_DEFAULTS = dict(
    data=None, out="signatures.bbmh", k=200, b=8, universe=1 << 20, mode="hashed", seed=0
)


def cmd_hash(ns) -> int:
    opt = _merge(ns, _HASH_DEFAULTS, {})
    if not opt["data"]:
        raise BbmhError("hash requires --data")
    family = build_family(opt["seed"], opt["k"], opt["universe"], opt["mode"])

    def signatures():
        for i, (_, idx, _vals) in enumerate(
            datasets.read_sparse_records(opt["data"], binary=True), start=1
        ):
            if idx.size == 0:
                raise BbmhError(f"record {i}: empty feature set")
            yield truncate_bits(minhash(family, SparseSet(opt["universe"], idx)), opt["b"])

    count = write_signature_file(opt["out"], signatures(), opt["k"], opt["b"])
    payload = count * signature_byte_size(opt["k"], opt["b"])
    print(
        f"hashed {count} records to {opt['out']} "
        f"(k={opt['k']}, b={opt['b']}, payload {payload} bytes = {count}*{opt['k']}*{opt['b']} bits padded per record)"
    )
    return 0


_EXPAND_DEFAULTS = dict(signatures=None, out="expanded.txt", labels=None, emit_text=True, seed=0)


def cmd_expand(ns) -> int:
    opt = _merge(ns, _EXPAND_DEFAULTS, {"emit_text": _bool})
    if not opt["signatures"]:
        raise BbmhError("expand requires --signatures")
    if not opt["emit_text"]:
        raise BbmhError("expand currently emits sparse text only (--emit-text)")
    labels: list[int | None] = []
    if opt["labels"]:
        labels = [lab for lab, _, _ in datasets.read_sparse_records(opt["labels"])]
    with open(opt["signatures"], "rb") as fh:
        k, b, count = read_signature_header(fh)
    if labels and len(labels) != count:
        raise BbmhError(f"{len(labels)} labels for {count} signature records")
    dim = k << b
    written = 0
    with open(opt["out"], "w", encoding="ascii") as fh:
        for i, sig in enumerate(iter_signature_file(opt["signatures"])):
            ev = expansion.expand(sig)
            label = labels[i] if labels else None
            ones = np.ones(ev.ones.size)
            fh.write(datasets.format_sparse_record(label, ev.ones, ones) + "\n")
            written += 1
    print(f"expanded {written} signatures to {opt['out']} (dimension {dim}, {k} ones per record)")
    return 0


_SKETCH_DEFAULTS = dict(
    data=None, out="sketches.skch", kind="vw", k=100, s=1.0, family="sparse",
    universe=1 << 20, seed=0,
)


def cmd_sketch(ns) -> int:
    opt = _merge(ns, _SKETCH_DEFAULTS, {})
    if not opt["data"]:
        raise BbmhError("sketch requires --data")
    if opt["kind"] not in sketches.SKETCH_KINDS:
        raise BbmhError(f"kind must be one of {sketches.SKETCH_KINDS}, got {opt['kind']!r}")
    sign = sketches.SignDistribution(opt["s"], opt["family"])

    def rows():
        for _, idx, vals in datasets.read_sparse_records(opt["data"]):
            v = sketches.SparseVector(opt["universe"], idx, vals)
            if opt["kind"] == "cm":
                yield sketches.cm_sketch(v, opt["k"], opt["seed"])
            elif opt["kind"] == "vw":
                yield sketches.vw_sketch(v, opt["k"], opt["seed"], sign)
            else:
                yield sketches.rp_sketch(v, opt["k"], opt["seed"], sign)

    count = sketches.write_sketch_file(opt["out"], rows())
    print(f"sketched {count} records to {opt['out']} (kind={opt['kind']}, k={opt['k']}, s={opt['s']})")
    return 0


_TRAIN_DEFAULTS = dict(
    data=None, out="model.txt", loss="hinge", c=1.0, dim=0, epochs=40, batch_size=64,
    tol=1e-4, seed=0,
)


def cmd_train(ns) -> int:
    opt = _merge(ns, _TRAIN_DEFAULTS, {})
    if not opt["data"]:
        raise BbmhError("train requires --data")
    ds = datasets.load_dataset(opt["data"], dim=opt["dim"] or None)
    cfg = TrainConfig(
        epochs=opt["epochs"], batch_size=opt["batch_size"], tol=opt["tol"], seed=opt["seed"]
    )
    model = train(ds, opt["loss"], opt["c"], cfg)
    save_model(opt["out"], model)
    from .learning import accuracy, objective

    print(
        f"trained {opt['loss']} model on {ds.n} records (dim {ds.dim}) to {opt['out']}; "
        f"objective {objective(model.weights, ds, model.loss, model.c):.6g}, "
        f"training accuracy {accuracy(model, ds):.4f}"
    )
    return 0


_PREDICT_DEFAULTS = dict(model=None, data=None, out="predictions.txt", seed=0)


def cmd_predict(ns) -> int:
    opt = _merge(ns, _PREDICT_DEFAULTS, {})
    if not opt["model"] or not opt["data"]:
        raise BbmhError("predict requires --model and --data")
    model = load_model(opt["model"])
    labels: list[int | None] = []
    rows = []
    import scipy.sparse as sp

    indptr = [0]
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for label, idx, v in datasets.read_sparse_records(opt["data"]):
        if idx.size and int(idx[-1]) >= model.dim:
            raise BbmhError(
                f"feature index {int(idx[-1])} outside model dimension {model.dim}"
            )
        labels.append(label)
        cols.append(idx)
        vals.append(v)
        indptr.append(indptr[-1] + idx.size)
    n = len(labels)
    feats = sp.csr_matrix(
        (
            np.concatenate(vals) if vals else np.empty(0),
            np.concatenate(cols) if cols else np.empty(0, dtype=np.int64),
            np.asarray(indptr),
        ),
        shape=(n, model.dim),
    )
    preds = predict_labels(model, feats)
    with open(opt["out"], "w", encoding="ascii") as fh:
        for p in preds:
            fh.write(f"{'+1' if p > 0 else '-1'}\n")
    msg = f"predicted {n} records to {opt['out']}"
    if n and all(lab is not None for lab in labels):
        acc = float(np.mean(preds == np.asarray(labels, dtype=np.int8)))
        msg += f"; accuracy {acc:.4f}"
    print(msg)
    return 0


_EXPERIMENT_DEFAULTS = dict(
    data=None, out="report.csv", universe=1 << 20, k_list=(30, 100, 200),
    b_list=(1, 2, 4, 8), losses=("hinge", "logistic"),
    c_list=(0.01, 0.1, 1.0, 10.0, 100.0), reps=20,
    test_fraction=0.2, split_seed=2, epochs=40, batch_size=64, tol=1e-4,
    seed=1, plot=True,
)
_EXPERIMENT_CONVERTERS = dict(
    k_list=_int_list, b_list=_int_list, losses=_str_list, c_list=_float_list,
    plot=_bool,
)


def cmd_experiment(ns) -> int:
    opt = _merge(ns, _EXPERIMENT_DEFAULTS, _EXPERIMENT_CONVERTERS)
    if not opt["data"]:
        raise BbmhError("experiment requires --data")
    ds = datasets.load_dataset(opt["data"], dim=opt["universe"], binary=True)
    cfg = ExperimentConfig(
        k_values=tuple(opt["k_list"]),
        b_values=tuple(opt["b_list"]),
        losses=tuple(opt["losses"]),
        c_values=tuple(opt["c_list"]),
        repetitions=opt["reps"],
        test_fraction=opt["test_fraction"],
        hash_seed=opt["seed"],
        split_seed=opt["split_seed"],
        trainer=TrainConfig(epochs=opt["epochs"], batch_size=opt["batch_size"], tol=opt["tol"]),
    )
    rows = run_experiment(ds, opt["universe"], cfg)
    write_report_csv(opt["out"], rows)
    print(f"wrote {len(rows)} report rows to {opt['out']}")
    for loss in cfg.losses:
        try:
            row = best_over_c(rows, "original", loss)
        except KeyError:
            continue
        print(f"  original {loss}: accuracy {float(row['acc_mean']):.4f}"
              f" (C={float(row['c']):g})")
    if opt["plot"]:
        fig = _figure_path(opt["out"])
        plots.save_experiment_figure(fig, rows)
        print(f"figure: {fig}")
    return 0


_ORACLE_DEFAULTS = dict(
    universe=20, f1=(), b_list=(1, 2, 4), out="oracle.csv", max_universe=500,
    seed=0, plot=True,
)
_ORACLE_CONVERTERS = dict(f1=_int_list, b_list=_int_list, plot=_bool)


def _default_f1_triple(universe: int) -> tuple[int, ...]:
    # Dense first sets: the closed form's documented error bounds only
    # hold on grids where f1/D is large (sparse f1 inflates the error
    # several-fold at small D).
    return tuple(sorted({max(2, round(universe * frac)) for frac in (0.90, 0.95, 1.0)}))


def cmd_oracle(ns) -> int:
    opt = _merge(ns, _ORACLE_DEFAULTS, _ORACLE_CONVERTERS)
    d = opt["universe"]
    f1_values = tuple(opt["f1"]) or _default_f1_triple(d)
    b_values = tuple(opt["b_list"])
    rows: list[dict] = []
    worst = 0.0
    for f1 in f1_values:
        for f2 in range(2, f1 + 1):
            a_values, exact = exact_pb_sweep(d, f1, f2, b_values, max_universe=opt["max_universe"])
            for ai, a in enumerate(a_values):
                stats = PairStats(d, f1, f2, int(a))
                for bi, b in enumerate(b_values):
                    formula = float(bbit_constants(stats, b).collision_probability)
                    err = float(abs(formula - exact[bi, ai]))
                    worst = max(worst, err)
                    rows.append(
                        {
                            "D": d, "f1": f1, "f2": f2, "a": int(a), "b": b,
                            "Pb_formula": repr(formula), "Pb_exact": repr(float(exact[bi, ai])),
                            "abs_error": repr(err),
                        }
                    )
    import csv

    with open(opt["out"], "w", newline="", encoding="ascii") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=("D", "f1", "f2", "a", "b", "Pb_formula", "Pb_exact", "abs_error")
        )
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {opt['out']}; max |formula - exact| = {worst:.3e}")
    if opt["plot"]:
        fig = _figure_path(opt["out"])
        plots.save_oracle_figure(fig, rows)
        print(f"figure: {fig}")
    return 0


_ANALYZE_DEFAULTS = dict(
    b=8, bits=32, universe=1_000_000, r1_list=(0.0001, 0.1, 0.5, 0.9),
    n_f2=10, n_a=11, out="comparison.csv", seed=0, plot=True,
)
_ANALYZE_CONVERTERS = dict(r1_list=_float_list, plot=_bool)


def cmd_analyze(ns) -> int:
    opt = _merge(ns, _ANALYZE_DEFAULTS, _ANALYZE_CONVERTERS)
    rows = comparison.comparison_grid(
        opt["universe"], tuple(opt["r1_list"]), opt["b"], opt["bits"],
        n_f2=opt["n_f2"], n_a=opt["n_a"],
    )
    comparison.write_comparison_csv(opt["out"], rows)
    if rows:
        values = [row["g_vw"] for row in rows]
        print(
            f"wrote {len(rows)} rows to {opt['out']}; "
            f"G in [{min(values):.3g}, {max(values):.3g}]"
        )
    else:
        print(f"wrote header-only CSV to {opt['out']}")
    if opt["plot"] and rows:
        fig = _figure_path(opt["out"])
        plots.save_comparison_figure(fig, rows)
        print(f"figure: {fig}")
    return 0


# ----------------------------------------------------------------------
# parser


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=_SUPPRESS, help="master seed (default 0)")
    sub.add_argument("--config", default=None, help="flat key-value config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbmh",
        description="b-bit minwise hashing, sketches, and linear learning on hashed features",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="generate the synthetic two-class corpus")
    p.add_argument("--out", default=_SUPPRESS)
    p.add_argument("--records", type=int, default=_SUPPRESS)
    p.add_argument("--universe", type=int, default=_SUPPRESS)
    p.add_argument("--tokens", type=int, default=_SUPPRESS)
    p.add_argument("--within", type=float, default=_SUPPRESS)
    p.add_argument("--cross", type=float, default=_SUPPRESS)
    p.add_argument("--mixed-fraction", type=float, default=_SUPPRESS)
    p.add_argument("--label-noise", type=float, default=_SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("hash", help="minwise-hash a binary dataset into b-bit signatures")
    p.add_argument("--data", default=_SUPPRESS)
    p.add_argument("--out", default=_SUPPRESS)
    p.add_argument("--k", type=int, default=_SUPPRESS)
    p.add_argument("--b", type=int, default=_SUPPRESS)
    p.add_argument("--universe", type=int, default=_SUPPRESS)
    p.add_argument("--mode", choices=("hashed", "exact"), default=_SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_hash)

    p = subs.add_parser("expand", help="expand signatures into sparse text features")
    p.add_argument("--signatures", default=_SUPPRESS)
    p.add_argument("--out", default=_SUPPRESS)
    p.add_argument("--labels", default=_SUPPRESS, help="carry labels from this dataset file")
    p.add_argument("--emit-text", action="store_true", default=_SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_expand)

    p = subs.add_parser("sketch", help="sketch a sparse dataset (cm, vw, or rp)")
    p.add_argument("--data", default=_SUPPRESS)
    p.add_argument("--out", default=_SUPPRESS)
    p.add_argument("--kind", choices=sketches.SKETCH_KINDS, default=_SUPPRESS)
    p.add_argument("--k", type=int, default=_SUPPRESS)
    p.add_argument("--s", type=float, default=_SUPPRESS)
    p.add_argument("--family", choices=("sparse", "normal"), default=_SUPPRESS)
    p.add_argument("--universe", type=int, default=_SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_sketch)

    p = subs.add_parser("train", help="train a linear model on a labeled sparse dataset")
    p.add_argument("--data", default=_SUPPRESS)
    p.add_argument("--out", default=_SUPPRESS)
    p.add_argument("--loss", choices=("hinge", "logistic"), default=_SUPPRESS)
    p.add_argument("--c", type=float, default=_SUPPRESS)
    p.add_argument("--dim", type=int, default=_SUPPRESS)
    p.add_argument("--epochs", type=int, default=_SUPPRESS)
    p.add_argument("--batch-size", type=int, default=_SUPPRESS)
    p.add_argument("--tol", type=float, default=_SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("predict", help="apply a model to a sparse dataset")
    p.add_argument("--model", default=_SUPPRESS)
    p.add_argument("--data", default=_SUPPRESS)
    p.add_argument("--out", default=_SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("experiment", help="hash/expand/train over a (C, b, k) grid with repetitions")
    p.add_argument("--data", default=_SUPPRESS)
    p.add_argument("--out", default=_SUPPRESS)
    p.add_argument("--universe", type=int, default=_SUPPRESS)
    p.add_argument("--k-list", type=_int_list, default=_SUPPRESS)
    p.add_argument("--b-list", type=_int_list, default=_SUPPRESS)
    p.add_argument("--losses", type=_str_list, default=_SUPPRESS)
    p.add_argument("--c-list", type=_float_list, default=_SUPPRESS)
    p.add_argument("--reps", type=int, default=_SUPPRESS)
    p.add_argument("--test-fraction", type=float, default=_SUPPRESS)
    p.add_argument("--split-seed", type=int, default=_SUPPRESS)
    p.add_argument("--epochs", type=int, default=_SUPPRESS)
    p.add_argument("--batch-size", type=int, default=_SUPPRESS)
    p.add_argument("--tol", type=float, default=_SUPPRESS)
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=_SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_experiment)

    p = subs.add_parser("oracle", help="exact vs closed-form collision probabilities over a grid")
    p.add_argument("--universe", "--D", dest="universe", type=int, default=_SUPPRESS)
    p.add_argument("--f1", type=_int_list, default=_SUPPRESS, help="comma list; default three values")
    p.add_argument("--b-list", "--b", dest="b_list", type=_int_list, default=_SUPPRESS)
    p.add_argument("--out", default=_SUPPRESS)
    p.add_argument("--max-universe", type=int, default=_SUPPRESS)
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=_SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    p = subs.add_parser("analyze", help="storage-normalized comparison grid (G ratio)")
    p.add_argument("--b", type=int, default=_SUPPRESS)
    p.add_argument("--bits", type=int, default=_SUPPRESS)
    p.add_argument("--universe", "--D", dest="universe", type=int, default=_SUPPRESS)
    p.add_argument("--r1-list", type=_float_list, default=_SUPPRESS)
    p.add_argument("--n-f2", type=int, default=_SUPPRESS)
    p.add_argument("--n-a", type=int, default=_SUPPRESS)
    p.add_argument("--out", default=_SUPPRESS)
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=_SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except BbmhError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
