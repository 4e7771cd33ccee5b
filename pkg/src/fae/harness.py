"""Repeated random-split experiments over all methods, with CSV/text/JSON reports."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from fae import baselines, pipeline
from fae.dataset import EncodedDataset, SplitSpec, load_table, resolve_schema, split
from fae.errors import DataError, UndefinedMetricError
from fae.metrics import GroupConfusion, balanced_accuracy, confusion, eqop

log = logging.getLogger(__name__)

METHODS = ("adaboost", "easyensemble", "sdb", "smt", "ob", "fae")
COLUMNS = (
    "dataset", "method", "split", "b_acc", "eqop", "k", "u", "active", "theta_s", "theta_ns",
    "clusters", "error",
)


@dataclass
class ExperimentConfig:
    datasets: dict  # name -> {"files": [...], "schema": path-or-builtin-name}
    methods: tuple[str, ...] = METHODS
    splits: tuple[int, ...] = tuple(range(10))
    seed: int = 0
    train_fraction: float = 2 / 3
    epsilon: float = 0.0
    rounds: int = 25
    include_sa: bool = True
    easy_bags: int = baselines.EASY_BAGS
    c_min: int = 2
    c_max: int = 25
    jobs: int = 1

    def __post_init__(self):
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods: {unknown}")
        if not self.datasets:
            raise ValueError("no datasets configured")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "clusters" in d:
            d["c_min"], d["c_max"] = (int(v) for v in d.pop("clusters"))
        if isinstance(d.get("splits"), int):
            d["splits"] = tuple(range(d["splits"]))
        for key in ("methods", "splits"):
            if key in d:
                d[key] = tuple(d[key])
        datasets = {}
        for name, spec in (d.pop("datasets", None) or {}).items():
            files = spec.get("files") or spec.get("file")
            if isinstance(files, str):
                files = [files]
            if not files or "schema" not in spec:
                raise DataError(f"dataset {name!r} needs 'files' and 'schema'")
            datasets[name] = {"files": [str(f) for f in files], "schema": str(spec["schema"])}
        try:
            return cls(datasets=datasets, **d)
        except TypeError as exc:
            raise ValueError(f"bad experiment config: {exc}") from None

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                doc = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise DataError(f"cannot read config {path}: {exc}") from None
        cfg = cls.from_dict(doc)
        # relative dataset paths resolve against the config file's directory
        base = Path(path).resolve().parent
        for spec in cfg.datasets.values():
            spec["files"] = [str(base / f) if not Path(f).is_absolute() and (base / f).exists() else f
                             for f in spec["files"]]
            s = Path(spec["schema"])
            if not s.is_absolute() and (base / s).exists():
                spec["schema"] = str(base / s)
        return cfg

    def fae_config(self) -> pipeline.FaeConfig:
        return pipeline.FaeConfig(
            epsilon=self.epsilon, rounds=self.rounds, c_min=self.c_min, c_max=self.c_max,
            seed=self.seed, include_sa=self.include_sa,
        )


def evaluate(model: pipeline.EnsembleModel, test: EncodedDataset) -> tuple[float, float, GroupConfusion]:
    """Balanced accuracy, EQOP and group confusion of ``model`` on ``test``."""
    pred = model.predict(test.X, test.protected)
    c = confusion(test.y, pred, test.protected)
    return balanced_accuracy(c), eqop(c), c


def train_methods(train: EncodedDataset, methods, cfg: ExperimentConfig) -> dict[str, pipeline.EnsembleModel]:
    """Train the requested methods on one training split, sharing common stages."""
    fcfg = cfg.fae_config()
    out = {}
    base = bags = None
    for m in methods:
        if m in ("adaboost", "smt", "sdb") and base is None:
            base = baselines.plain_adaboost(train, cfg.rounds)
        if m in ("ob", "fae") and bags is None:
            bags = pipeline.fit_bag_ensemble(train, fcfg)
        if m == "adaboost":
            out[m] = base
        elif m == "smt":
            out[m] = baselines.smt(train, cfg.rounds, cfg.epsilon, base=base)
        elif m == "sdb":
            out[m] = baselines.sdb(train, cfg.rounds, cfg.epsilon, base=base)
        elif m == "easyensemble":
            out[m] = baselines.easy_ensemble(train, cfg.easy_bags, cfg.rounds, cfg.seed)
        elif m == "ob":
            out[m] = baselines.ob(train, fcfg, bags=bags)
        elif m == "fae":
            out[m] = pipeline.fae_from_bags(bags, train, fcfg)
    return out


def _row(dataset, method, split_id, model=None, result=None, error=""):
    row = dict.fromkeys(COLUMNS, "")
    row.update(dataset=dataset, method=method, split=split_id, error=error)
    if model is not None:
        p = model.pair
        row.update(
            k=model.k if model.k is not None else "",
            u=model.u,
            active=p.active or "none",
            theta_s=p.theta_s,
            theta_ns=p.theta_ns,
            clusters=";".join(f"{g}={c}" for g, c in model.diagnostics.get("clusters", {}).items()),
        )
    if result is not None:
        row["b_acc"] = 100.0 * result[0]
        row["eqop"] = 100.0 * result[1]
    return row


def run_split(name: str, ds: EncodedDataset, split_id: int, cfg: ExperimentConfig):
    """Train and evaluate all methods on one split; returns (rows, diagnostics)."""
    train, test = split(ds, SplitSpec(cfg.train_fraction, cfg.seed, split_id))
    log.info("%s split %d: %d train / %d test rows", name, split_id, train.n, test.n)
    rows, diags = [], {}
    try:
        models = train_methods(train, cfg.methods, cfg)
    except (DataError, UndefinedMetricError, ValueError) as exc:
        return [_row(name, m, split_id, error=str(exc)) for m in cfg.methods], diags
    for m in cfg.methods:
        model = models[m]
        diags[m] = {**model.diagnostics, "u": model.u, "thresholds": model.pair.to_dict()}
        try:
            res = evaluate(model, test)
            rows.append(_row(name, m, split_id, model, res))
            diags[m]["confusion"] = res[2].as_dict()
        except UndefinedMetricError as exc:
            rows.append(_row(name, m, split_id, model, error=str(exc)))
    return rows, diags


def _run_split_job(args):
    name, ds, split_id, cfg = args
    return run_split(name, ds, split_id, cfg)


@dataclass
class Report:
    rows: list[dict] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def means(self) -> list[dict]:
        out = []
        keys = []
        for r in self.rows:
            if r["split"] != "mean" and (r["dataset"], r["method"]) not in keys:
                keys.append((r["dataset"], r["method"]))
        for d, m in keys:
            ok = [r for r in self.rows if r["dataset"] == d and r["method"] == m and r["error"] == ""]
            row = dict.fromkeys(COLUMNS, "")
            row.update(dataset=d, method=m, split="mean")
            if ok:
                row["b_acc"] = float(np.mean([r["b_acc"] for r in ok]))
                row["eqop"] = float(np.mean([r["eqop"] for r in ok]))
                row["u"] = float(np.mean([r["u"] for r in ok]))
            n_all = sum(1 for r in self.rows if r["dataset"] == d and r["method"] == m)
            if len(ok) < n_all:
                row["error"] = f"{n_all - len(ok)} of {n_all} splits failed"
            out.append(row)
        return out

    def mean(self, dataset: str, method: str) -> dict:
        for r in self.means():
            if r["dataset"] == dataset and r["method"] == method:
                return r
        raise KeyError((dataset, method))

    def all_rows(self) -> list[dict]:
        return self.rows + self.means()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.all_rows():
            w.writerow({k: _fmt_csv(v) for k, v in r.items()})
        return buf.getvalue()

    def to_text(self) -> str:
        head = f"{'dataset':<10} {'method':<13} {'split':>5} {'B.ACC %':>8} {'EQOP pp':>8} {'k':>3} {'u':>5} {'active':>6} {'theta':>7}  note"
        lines = [head, "-" * len(head)]
        for r in self.all_rows():
            theta = ""
            if r["active"] == "s":
                theta = f"{r['theta_s']:.4f}"
            elif r["active"] == "ns":
                theta = f"{r['theta_ns']:.4f}"
            lines.append(
                f"{r['dataset']:<10} {r['method']:<13} {str(r['split']):>5} {_fmt(r['b_acc'], 2):>8} "
                f"{_fmt(r['eqop'], 2):>8} {str(r['k']):>3} {_fmt(r['u'], 1):>5} {str(r['active']):>6} {theta:>7}  "
                f"{r['error'] or r['clusters']}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({"rows": self.all_rows(), "diagnostics": self.diagnostics}, indent=1) + "\n"

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "report.csv", out / "report.txt", out / "report.json"]
        for p, text in zip(paths, (self.to_csv(), self.to_text(), self.to_json())):
            p.write_text(text)
        return paths


def _fmt(v, digits):
    return f"{v:.{digits}f}" if isinstance(v, float) else str(v)


def _fmt_csv(v):
    return repr(v) if isinstance(v, float) else v


def run_experiment(cfg: ExperimentConfig) -> Report:
    """Run every configured dataset x split x method and collect the report."""
    report = Report()
    for name, spec in cfg.datasets.items():
        schema = resolve_schema(spec["schema"])
        ds = load_table(spec["files"], schema, include_sa=cfg.include_sa)
        jobs = [(name, ds, s, cfg) for s in cfg.splits]
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
                results = list(ex.map(_run_split_job, jobs))
        else:
            results = [_run_split_job(j) for j in jobs]
        for s, (rows, diags) in zip(cfg.splits, results):
            report.rows.extend(rows)
            report.diagnostics.setdefault(name, {})[str(s)] = diags
    return report
