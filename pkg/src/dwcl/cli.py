"""Command line: ``dwcl {synth,train,ablate,bench,eval}``.

Configuration files are JSON. Values resolve as flag > file > preset > default.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import net
from .bench import run_bench, write_bench
from .cluster import kmeans
from .data import MultiViewDataset, SyntheticSpec, generate_synthetic, load_dataset, normalize, save_dataset
from .eval import aggregate, accuracy, nmi, write_summary
from .linalg import RandomSource
from .trainer import TrainConfig, TrainingError, _int_seed, concat_features, run
from .weights import MECHANISMS, WEIGHT_MODES

log = logging.getLogger("dwcl")


class ConfigError(ValueError):
    pass


def _preset_dir():
    return resources.files("dwcl") / "presets"


def list_presets() -> list[str]:
    return sorted(p.name[:-5] for p in _preset_dir().iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    f = _preset_dir() / f"{name}.json"
    if not f.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return json.loads(f.read_text())


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class RunConfig:
    data: dict
    train: TrainConfig
    out: str = "runs/dwcl"
    repeats: int = 5
    mode: str = "dwcl"
    mechanisms: list = field(default_factory=lambda: list(MECHANISMS))
    weight_modes: list = field(default_factory=lambda: list(WEIGHT_MODES))

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw)
        preset = raw.pop("preset", None)
        base = load_preset(preset) if preset else {}
        data = dict(raw.pop("data", {}) or {})
        if not data and "synthetic" in base:
            data = {"synthetic": base["synthetic"]}
        if ("path" in data) == ("synthetic" in data):
            raise ConfigError("config needs exactly one data source: data.path or data.synthetic")
        train = _merge(base.get("train", {}), raw.pop("train", {}) or {})
        mode = raw.pop("mode", train.pop("mode", "dwcl"))
        train["mode"] = mode
        try:
            tc = TrainConfig.from_dict(train)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid training options: {exc}") from exc
        known = {"out", "repeats", "mechanisms", "weight_modes"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(data=data, train=tc, mode=mode, **raw)
        if cfg.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        return cfg

    def load_data(self) -> MultiViewDataset:
        if "path" in self.data:
            return load_dataset(self.data["path"])
        return generate_synthetic(SyntheticSpec.from_dict(self.data["synthetic"]))


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _apply_flags(raw: dict, args) -> dict:
    raw = copy.deepcopy(raw)
    train = raw.setdefault("train", {})
    if getattr(args, "seed", None) is not None:
        train["seed"] = args.seed
    if getattr(args, "mechanism", None):
        train["mechanism"] = args.mechanism
    if getattr(args, "weights", None):
        train["weight_mode"] = args.weights
    if getattr(args, "mode", None):
        raw["mode"] = args.mode
    if getattr(args, "preset", None):
        raw["preset"] = args.preset
    if getattr(args, "out", None):
        raw["out"] = args.out
    if getattr(args, "repeats", None) is not None:
        raw["repeats"] = args.repeats
    return raw


# -- commands ---------------------------------------------------------------

def cmd_synth(args) -> int:
    raw = _read_json(args.config)
    raw = raw.get("synthetic", raw)
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        spec = SyntheticSpec.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid synthetic spec: {exc}") from exc
    out = save_dataset(generate_synthetic(spec), args.out)
    print(f"wrote {spec.n} x {len(spec.views)} views to {out}")
    return 0


def _train_repeats(cfg: RunConfig, data: MultiViewDataset, out: Path) -> dict:
    accs, nmis = [], []
    for r in range(cfg.repeats):
        seed = cfg.train.seed + r
        tc = TrainConfig.from_dict({**cfg.train.to_dict(), "seed": seed})
        res = run(data, tc, out / f"seed_{seed}")
        accs.append(res.report.acc)
        nmis.append(res.report.nmi)
        log.info("seed %d: acc=%s nmi=%s", seed, res.report.acc, res.report.nmi)
    am, asd = aggregate(accs)
    nm, nsd = aggregate(nmis)
    return {"runs": cfg.repeats, "acc": accs, "nmi": nmis,
            "acc_mean": am, "acc_std": asd, "nmi_mean": nm, "nmi_std": nsd}


def cmd_train(args) -> int:
    cfg = RunConfig.from_dict(_apply_flags(_read_json(args.config), args))
    out = Path(cfg.out)
    data = cfg.load_data()
    summary = {"mode": cfg.mode, "mechanism": cfg.train.mechanism,
               "weight_mode": cfg.train.weight_mode, **_train_repeats(cfg, data, out)}
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"{cfg.mode} acc {summary['acc_mean']:.4f}±{summary['acc_std']:.4f} "
          f"nmi {summary['nmi_mean']:.4f}±{summary['nmi_std']:.4f} -> {out}")
    return 0


def _run_arm(payload):
    cfg_dict, mech, wm, out = payload
    arm = f"{mech}-{wm}"
    row = {"arm": arm, "mechanism": mech, "weight_mode": wm}
    try:
        cfg = RunConfig.from_dict(_merge(cfg_dict, {"train": {"mechanism": mech, "weight_mode": wm}}))
        res = _train_repeats(cfg, cfg.load_data(), Path(out) / arm)
        row.update(status="ok", **{k: res[k] for k in ("runs", "acc_mean", "acc_std", "nmi_mean", "nmi_std")})
    except Exception as exc:  # arms are isolated: record and continue
        log.error("arm %s failed: %s", arm, exc)
        row.update(status="failed", runs=0, error=str(exc))
    return row


def cmd_ablate(args) -> int:
    raw = _apply_flags(_read_json(args.config), args)
    cfg = RunConfig.from_dict(raw)
    out = Path(cfg.out)
    cfg_dict = {k: v for k, v in raw.items() if k not in ("mechanisms", "weight_modes")}
    arms = [(cfg_dict, m, w, str(out)) for m in cfg.mechanisms for w in cfg.weight_modes]
    for _, m, w, _ in arms:
        if m not in MECHANISMS or w not in WEIGHT_MODES:
            raise ConfigError(f"unknown arm {m}/{w}")
    if args.jobs and args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_run_arm, arms))
    else:
        rows = [_run_arm(a) for a in arms]
    path = write_summary(rows, out / "summary.csv")
    for r in rows:
        if r["status"] == "ok":
            print(f"{r['arm']:<22} acc {r['acc_mean']:.4f}±{r['acc_std']:.4f}  nmi {r['nmi_mean']:.4f}±{r['nmi_std']:.4f}")
        else:
            print(f"{r['arm']:<22} FAILED: {r.get('error')}")
    print(f"summary -> {path}")
    return 0 if all(r["status"] == "ok" for r in rows) else 3


def cmd_bench(args) -> int:
    rows, exps = run_bench(args.views, batch=args.batch, dim=args.dims, n_batches=args.batches,
                           repeats=args.repeats or 3, seed=args.seed or 0)
    for r in rows:
        print(f"V={r['views']:<3} {r['mechanism']:<10} pairs={r['pairs']:<4} {r['seconds']:.4f}s")
    for m, e in exps.items():
        print(f"{m} growth exponent {e:.3f}")
    if args.out:
        write_bench(rows, exps, args.out)
    return 0


def cmd_eval(args) -> int:
    models, cfg_dict = net.load_checkpoint(args.checkpoint)
    cfg = TrainConfig.from_dict(cfg_dict) if cfg_dict else TrainConfig()
    data = normalize(load_dataset(args.data), cfg.normalize)
    if len(models) != data.n_views:
        raise ConfigError(f"checkpoint has {len(models)} views, dataset has {data.n_views}")
    k = args.k or cfg.n_clusters or data.k
    if not k:
        raise ConfigError("cluster count unknown: pass --k or use a labelled dataset")
    feats = [net.encode(m, X)[1] for m, X in zip(models, data.views)]
    Z = concat_features(feats, cfg.final_features)
    # same seed derivation as the training run, so the final checkpoint reproduces its labels
    rng = RandomSource(cfg.seed if args.seed is None else args.seed)
    labels = kmeans(Z, cfg.kmeans_config(k, _int_seed(rng, 9000))).labels
    result = {"checkpoint": str(args.checkpoint), "k": int(k), "predicted_labels": labels.tolist()}
    if data.labels is not None:
        result["acc"] = accuracy(labels, data.labels, k)
        result["nmi"] = nmi(labels, data.labels)
        result["per_view_acc"] = [
            accuracy(kmeans(F, cfg.kmeans_config(k, _int_seed(rng, 9100, v))).labels, data.labels, k)
            for v, F in enumerate(feats)]
        print(f"acc {result['acc']:.4f} nmi {result['nmi']:.4f}")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "eval.json").write_text(json.dumps(result, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dwcl", description="Dual-weighted contrastive multi-view clustering")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic multi-view dataset directory")
    s.add_argument("--config", required=True, help="JSON synthetic spec")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth)

    def run_flags(q):
        q.add_argument("--config", required=True)
        q.add_argument("--seed", type=int)
        q.add_argument("--out")
        q.add_argument("--preset", help=f"one of: {', '.join(list_presets())}")
        q.add_argument("--mechanism", choices=MECHANISMS)
        q.add_argument("--weights", choices=WEIGHT_MODES)
        q.add_argument("--repeats", type=int)
        q.add_argument("--mode", choices=("dwcl", "bsv"))

    t = sub.add_parser("train", help="pretrain, fine-tune and cluster")
    run_flags(t)
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("ablate", help="mechanism x weight-mode grid")
    run_flags(a)
    a.add_argument("--jobs", type=int, default=1)
    a.set_defaults(func=cmd_ablate)

    b = sub.add_parser("bench", help="contrastive cost scaling in the number of views")
    b.add_argument("--views", type=int, nargs="+", default=[4, 8, 16, 32])
    b.add_argument("--batch", type=int, default=128)
    b.add_argument("--dims", type=int, default=64)
    b.add_argument("--batches", type=int, default=4, help="batches per timed epoch")
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("eval", help="recompute metrics from a checkpoint and a dataset")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--k", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
