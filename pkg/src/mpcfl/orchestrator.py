"""Experiment runner: local / centralized / federated training plus cost accounting."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import cost_model
from .errors import ConfigError, MPCFLError
from .field import DEFAULT_PARAMS, FieldParams
from .learner import (
    MODEL_SPECS,
    Dataset,
    Metrics,
    compute_metrics,
    gen_synthetic,
    init_model,
    load_csv,
    local_train,
    write_csv,
    DEFAULT_LR,
)
from .protocols import ElectionConfig, Session, Topology, elect_committee, federated_round
from .sharing import SchemeKind
from .simnet import NetworkStats, Phase

log = logging.getLogger(__name__)

MODES = ("local", "centralized", "federated")
SWEEP_COLUMNS = [
    "n",
    "topology",
    "scheme",
    "msg_num",
    "msg_num_paper",
    "msg_num_trace",
    "msg_size",
    "msg_size_paper",
    "msg_size_trace",
    "balanced_accuracy",
    "error",
]


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 4
    t: int = 3
    e: int = 15
    m: int = 3
    b: int = 10
    scheme: str = "additive"
    topology: str = "two-phase"
    model: str = "simple"
    mode: str = "all"
    seed: int = 0
    data: str = "synthetic"
    shift: float = 1.0
    rows_per_party: int = 200
    lr: float = DEFAULT_LR
    max_rounds: int = 16
    out: str | None = None
    log_path: str | None = None

    def validate(self) -> "ExperimentConfig":
        for name in ("n", "t", "e", "m", "b", "rows_per_party", "max_rounds"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.m > self.n:
            raise ConfigError(f"committee size {self.m} exceeds the number of parties {self.n}")
        if self.scheme not in {k.value for k in SchemeKind}:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.topology not in {tp.value for tp in Topology}:
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.model not in MODEL_SPECS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.mode not in (*MODES, "all"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.topology == "two-phase" and self.n >= 2 and self.m < 2:
            raise ConfigError("two-phase aggregation needs a committee of at least 2")
        return self

    @property
    def modes(self) -> tuple[str, ...]:
        return MODES if self.mode == "all" else (self.mode,)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Party:
    pid: int
    data: Dataset
    model: object


@dataclass
class Report:
    config: dict
    metrics: dict
    evaluations: dict
    network: dict
    committee: list | None
    election_rounds: int
    predicted: dict | None
    match: dict | None
    delta_paper_vs_trace: dict | None
    heldout: dict | None = None
    wall_time_s: float = 0.0

    def to_dict(self, include_wall_time: bool = True) -> dict:
        d = asdict(self)
        if not include_wall_time:
            d.pop("wall_time_s")
        return _clean(d)

    def to_json(self, include_wall_time: bool = True) -> str:
        return json.dumps(self.to_dict(include_wall_time), indent=2, sort_keys=True)


def _clean(obj):
    if isinstance(obj, float):
        return None if math.isnan(obj) else obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------


def load_datasets(cfg: ExperimentConfig) -> tuple[list[Dataset], Dataset | None]:
    if cfg.data == "synthetic":
        return gen_synthetic(cfg.n, cfg.rows_per_party, cfg.shift, cfg.seed)
    root = Path(cfg.data)
    if not root.is_dir():
        raise ConfigError(f"--data must be 'synthetic' or a directory, got {cfg.data!r}")
    files = sorted(root.glob("party_*.csv"), key=lambda p: int(p.stem.split("_")[1]))
    if len(files) != cfg.n:
        raise ConfigError(f"{root} holds {len(files)} party files, expected {cfg.n}")
    held = root / "heldout.csv"
    return [load_csv(f) for f in files], (load_csv(held) if held.exists() else None)


def write_datasets(sets: list[Dataset], held: Dataset | None, root) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for k, d in enumerate(sets, start=1):
        write_csv(d, root / f"party_{k}.csv")
    if held is not None:
        write_csv(held, root / "heldout.csv")
    return root


# ---------------------------------------------------------------------------
# training modes
# ---------------------------------------------------------------------------


def train_federated(datasets: list[Dataset], init, cfg: ExperimentConfig, sess: Session):
    """``e`` epochs of ``t`` local steps followed by aggregation; returns the final global model."""
    parties = [Party(i, d, init.copy()) for i, d in enumerate(datasets, start=1)]
    n = len(parties)
    committee = None
    if cfg.topology == "two-phase" and n >= 2:
        ecfg = ElectionConfig(min(cfg.m, n), cfg.b, cfg.max_rounds)
        committee = elect_committee(n, ecfg, cfg.scheme, sess)
    g = parties[0].model
    for epoch in range(1, cfg.e + 1):
        for pt in parties:
            pt.model = local_train(pt.model, pt.data, cfg.t, cfg.lr)
        g = federated_round(parties, epoch, cfg.topology, cfg.scheme, sess, committee)
    return g, committee


def _summary(ms: list[Metrics]) -> dict:
    out = {}
    for name in ("recall", "precision", "balanced"):
        vals = np.array([getattr(m, name) for m in ms], dtype=float)
        ok = vals[~np.isnan(vals)]
        if ok.size:
            out[name] = {"mean": float(ok.mean()), "highest": float(ok.max()), "lowest": float(ok.min())}
        else:
            out[name] = {"mean": math.nan, "highest": math.nan, "lowest": math.nan}
    return out


def _new_session(n: int, cfg: ExperimentConfig, seed, params: FieldParams, log: bool = False) -> Session:
    return Session.create(n, params, seed=seed, keep_log=log)


def evaluate_modes(cfg: ExperimentConfig, sets: list[Dataset], held: Dataset | None, params: FieldParams):
    """Round-robin: each party's data is the test set once, the rest train."""
    spec = MODEL_SPECS[cfg.model]
    init = init_model(spec, cfg.seed)
    steps = cfg.t * cfg.e
    evals = {mode: [] for mode in cfg.modes}
    n = len(sets)
    if n == 1:
        if held is None:
            raise ConfigError("a single party needs a held-out set for evaluation")
        folds = [(held, sets)]
    else:
        folds = [(sets[k], sets[:k] + sets[k + 1 :]) for k in range(n)]
    for k, (test, train) in enumerate(folds):
        if "local" in evals:
            for d in train:
                evals["local"].append(compute_metrics(local_train(init, d, steps, cfg.lr), test))
        if "centralized" in evals:
            pooled = Dataset.concat(train)
            evals["centralized"].append(compute_metrics(local_train(init, pooled, steps, cfg.lr), test))
        if "federated" in evals:
            sess = _new_session(len(train), cfg, (cfg.seed, k + 1), params)
            fcfg = cfg if cfg.m <= len(train) else replace(cfg, m=len(train))
            model, _ = train_federated(train, init, fcfg, sess)
            evals["federated"].append(compute_metrics(model, test))
    return evals


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def predicted_costs(cfg: ExperimentConfig, s: int, election_rounds: int) -> dict | None:
    if cfg.n < 2:
        return None
    c = cost_model.CostInputs(
        n=cfg.n, e=cfg.e, t=cfg.t, m=cfg.m, b=cfg.b, s=s, election_rounds=max(1, election_rounds)
    )
    return {v: cost_model.predict(cfg.topology, c, v).to_dict() for v in cost_model.VARIANTS}


def compare(stats: NetworkStats, predicted: dict | None) -> tuple[dict | None, dict | None]:
    if predicted is None:
        return None, None
    trace, paper = predicted["trace"], predicted["paper"]
    measured_phases = {ph.name: (stats.msg_num[ph], stats.msg_size[ph]) for ph in Phase if stats.msg_num[ph]}
    match = {
        "msg_num": stats.total_num == trace["msg_num"],
        "msg_size": stats.total_size == trace["msg_size"],
        "per_phase": measured_phases == {k: tuple(v) for k, v in trace["phases"].items() if v[0]},
        "paper_msg_num": stats.total_num == paper["msg_num"],
        "paper_msg_size": stats.total_size == paper["msg_size"],
    }
    delta = {
        "msg_num": trace["msg_num"] - paper["msg_num"],
        "msg_size": trace["msg_size"] - paper["msg_size"],
    }
    return match, delta


def run_experiment(cfg: ExperimentConfig, params: FieldParams = DEFAULT_PARAMS, train: bool = True) -> Report:
    """Train and evaluate every requested mode, then run one accounted federation over all parties.

    With ``train=False`` the datasets are skipped and the accounting run
    aggregates freshly initialised models; only the cost fields are filled.
    """
    cfg.validate()
    started = time.perf_counter()
    spec = MODEL_SPECS[cfg.model]
    if train:
        sets, held = load_datasets(cfg)
        evals = evaluate_modes(cfg, sets, held, params)
    else:
        sets, held, evals = None, None, {}

    sess = _new_session(cfg.n, cfg, cfg.seed, params, log=cfg.log_path is not None)
    committee = None
    heldout = None
    try:
        if cfg.n >= 2:
            if train:
                model, committee = train_federated(sets, init_model(spec, cfg.seed), cfg, sess)
                if held is not None:
                    heldout = compute_metrics(model, held).to_dict()
            else:
                committee = simulate_aggregation(cfg, sess)
    except MPCFLError:
        if cfg.log_path:
            partial = sess.net.export_log(str(cfg.log_path) + ".partial")
            log.error("protocol failure, partial trace written to %s", partial)
        raise
    if cfg.log_path:
        sess.net.export_log(cfg.log_path)

    stats = sess.net.stats_snapshot()
    predicted = predicted_costs(cfg, spec.size, sess.election_rounds)
    match, delta = compare(stats, predicted)
    report = Report(
        config=cfg.to_dict(),
        metrics={mode: _summary(ms) for mode, ms in evals.items()},
        evaluations={mode: [m.to_dict() for m in ms] for mode, ms in evals.items()},
        network=stats.to_dict(),
        committee=list(committee.members) if committee else None,
        election_rounds=sess.election_rounds,
        predicted=predicted,
        match=match,
        delta_paper_vs_trace=delta,
        heldout=heldout,
        wall_time_s=time.perf_counter() - started,
    )
    if cfg.out:
        Path(cfg.out).write_text(report.to_json() + "\n")
    return report


def simulate_aggregation(cfg: ExperimentConfig, sess: Session):
    """Protocol traffic only: ``e`` aggregations of untrained, party-specific models."""
    spec = MODEL_SPECS[cfg.model]
    parties = [Party(i, None, init_model(spec, (cfg.seed, i))) for i in range(1, cfg.n + 1)]
    committee = None
    if cfg.topology == "two-phase":
        committee = elect_committee(cfg.n, ElectionConfig(cfg.m, cfg.b, cfg.max_rounds), cfg.scheme, sess)
    for epoch in range(1, cfg.e + 1):
        federated_round(parties, epoch, cfg.topology, cfg.scheme, sess, committee)
    return committee


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def _sweep_row(args) -> dict:
    cfg, train = args
    row = {"n": cfg.n, "topology": cfg.topology, "scheme": cfg.scheme}
    try:
        rep = run_experiment(cfg, train=train)
    except Exception as exc:  # recorded per row, the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    row["msg_num"] = rep.network["total_num"]
    row["msg_size"] = rep.network["total_size"]
    for v in cost_model.VARIANTS:
        row[f"msg_num_{v}"] = rep.predicted[v]["msg_num"] if rep.predicted else ""
        row[f"msg_size_{v}"] = rep.predicted[v]["msg_size"] if rep.predicted else ""
    if rep.heldout is not None and rep.heldout["balanced"] is not None:
        row["balanced_accuracy"] = rep.heldout["balanced"]
    return row


def run_matrix(cfgs, train: bool = True, jobs: int = 1) -> list[dict]:
    """One row per config; failures land in the ``error`` column."""
    work = [(cfg, train) for cfg in cfgs]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, work))
    else:
        rows = [_sweep_row(w) for w in work]
    return [{col: row.get(col, "") for col in SWEEP_COLUMNS} for row in rows]


def sweep_configs(base: ExperimentConfig, n_values, topologies) -> list[ExperimentConfig]:
    return [replace(base, n=n, topology=topo, m=min(base.m, n), out=None, log_path=None) for n in n_values for topo in topologies]


def rows_to_csv(rows: list[dict], columns=SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()
