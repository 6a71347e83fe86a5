"""Flat ``key = value`` experiment configs.

Example::

    graph.file = clique6.txt
    action.kind = exactly_m
    action.k = 8
    action.m = 1
    loss.kind = iid_bernoulli
    loss.means = 0.3, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5
    activation.q = 0.5
    horizon = 20000
    estimator.mode = independent

``config_to_dict`` produces the same flat keys, so a run's metadata echo
can be fed back to ``config_from_dict``.
"""
from __future__ import annotations

import os

import numpy as np

from .actions import DecisionFamily, EXPLICIT, KINDS, read_actions_file
from .graph import (DEFAULT_EXACT_CAP, Graph, complete_graph, cycle_graph, empty_graph,
                    load_graph, path_graph, petersen_graph, read_graph_file)
from .network import (FROM_FILE, IID_BERNOULLI, PIECEWISE, ActivationModel, LossModel,
                      SimConfig)

KNOWN_KEYS = {
    "graph.file", "graph.n", "graph.kind", "graph.edges", "graph.exact_cap",
    "action.kind", "action.k", "action.m", "action.file", "action.actions",
    "loss.kind", "loss.means", "loss.segments", "loss.file", "loss.matrix", "loss.seed",
    "activation.q", "agent.q", "agent.eta", "agent.beta", "estimator.beta",
    "estimator.mode", "alpha1", "cooperate", "horizon", "seeds",
}

_GRAPH_KINDS = {"complete": complete_graph, "clique": complete_graph, "empty": empty_graph,
                "edgeless": empty_graph, "path": path_graph, "cycle": cycle_graph}


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def load_config(path) -> SimConfig:
    with open(path) as fh:
        raw = parse_config_text(fh.read())
    return config_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def _floats(value) -> list:
    if isinstance(value, (list, tuple, np.ndarray)):
        return [float(x) for x in value]
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(x) for x in str(value).replace(",", " ").split()]


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    s = str(value).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _resolve(path, base_dir):
    if base_dir and not os.path.isabs(path):
        return os.path.join(base_dir, path)
    return path


def _graph(d, base_dir) -> tuple:
    n = int(d["graph.n"]) if "graph.n" in d else None
    if "graph.edges" in d:
        edges = d["graph.edges"]
        if isinstance(edges, str):
            edges = edges.replace(";", "\n")
        else:
            edges = "\n".join(f"{u} {v}" for u, v in edges)
        if n is None and not edges.strip():
            raise ConfigError("graph.edges is empty; set graph.n")
        return load_graph(edges, n), d.get("graph.file")
    if "graph.file" in d:
        return read_graph_file(_resolve(d["graph.file"], base_dir), n), d["graph.file"]
    if "graph.kind" in d:
        kind = d["graph.kind"]
        if kind == "petersen":
            return petersen_graph(), None
        if kind not in _GRAPH_KINDS or n is None:
            raise ConfigError(f"graph.kind {kind!r} needs graph.n and one of "
                              f"{sorted(_GRAPH_KINDS)} or 'petersen'")
        return _GRAPH_KINDS[kind](n), None
    if n is not None:
        return empty_graph(n), None
    return Graph(1), None


def _family(d, base_dir) -> DecisionFamily:
    kind = d.get("action.kind", "exactly_m")
    if kind not in KINDS:
        raise ConfigError(f"action.kind must be one of {KINDS}")
    if kind == EXPLICIT:
        if "action.actions" in d:
            rows = d["action.actions"]
            if isinstance(rows, str):
                rows = rows.replace(",", " ").split()
            acts = np.array([[int(c) for c in s] for s in rows], dtype=np.int8)
        elif "action.file" in d:
            acts = read_actions_file(_resolve(d["action.file"], base_dir))
        else:
            raise ConfigError("explicit action family needs action.file")
        m = int(d["action.m"]) if "action.m" in d else None
        return DecisionFamily.explicit(acts, m)
    try:
        return DecisionFamily(kind, int(d["action.k"]), int(d["action.m"]))
    except KeyError as exc:
        raise ConfigError(f"missing {exc.args[0]}") from None


def _loss(d, base_dir) -> LossModel:
    kind = d.get("loss.kind", IID_BERNOULLI)
    if kind == IID_BERNOULLI:
        if "loss.means" not in d:
            raise ConfigError("loss.means is required for iid_bernoulli losses")
        return LossModel(kind, means=tuple(_floats(d["loss.means"])))
    if kind == PIECEWISE:
        segs = d.get("loss.segments")
        if segs is None:
            raise ConfigError("loss.segments is required for piecewise losses")
        if isinstance(segs, str):
            segs = [_floats(s) for s in segs.split("|")]
        return LossModel(kind, segments=tuple(tuple(_floats(s)) for s in segs))
    if kind == FROM_FILE:
        if "loss.matrix" in d:
            return LossModel(kind, matrix=np.array(d["loss.matrix"], dtype=float))
        if "loss.file" not in d:
            raise ConfigError("loss.file is required for file losses")
        path = _resolve(d["loss.file"], base_dir)
        return LossModel(kind, matrix=np.loadtxt(path, ndmin=2), source=d["loss.file"])
    raise ConfigError(f"unknown loss.kind {kind!r}")


def _activation(d, n, base_dir) -> ActivationModel:
    value = d.get("activation.q", d.get("agent.q", 1.0))
    if isinstance(value, str) and not _looks_numeric(value):
        value = np.loadtxt(_resolve(value, base_dir), ndmin=1)
    q = _floats(value)
    if len(q) == 1:
        q = q * n
    if len(q) != n:
        raise ConfigError(f"got {len(q)} activation probabilities for {n} agents")
    return ActivationModel(np.array(q))


def _looks_numeric(s: str) -> bool:
    try:
        _floats(s)
        return True
    except ValueError:
        return False


def config_from_dict(d: dict, base_dir: str | None = None) -> SimConfig:
    unknown = set(d) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        graph, source = _graph(d, base_dir)
        family = _family(d, base_dir)
        beta = d.get("agent.beta", d.get("estimator.beta", 0))
        alpha1 = d.get("alpha1")
        loss_seed = d.get("loss.seed")
        return SimConfig(
            graph=graph,
            family=family,
            loss=_loss(d, base_dir),
            activation=_activation(d, graph.n_agents, base_dir),
            horizon=int(d.get("horizon", 1000)),
            eta=float(d.get("agent.eta", 0.0)),
            beta=int(beta),
            mode=str(d.get("estimator.mode", "independent")),
            alpha1=None if alpha1 in (None, "", "auto") else int(alpha1),
            cooperate=_bool(d.get("cooperate", True)),
            loss_seed=None if loss_seed in (None, "") else int(loss_seed),
            seeds=int(d.get("seeds", 1)),
            graph_source=source,
            exact_cap=int(d.get("graph.exact_cap", DEFAULT_EXACT_CAP)),
        )
    except ConfigError:
        raise
    except (ValueError, KeyError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(cfg: SimConfig) -> dict:
    """Flat, JSON-serializable echo that ``config_from_dict`` accepts."""
    fam = cfg.family
    out = {
        "graph.n": cfg.graph.n_agents,
        "graph.edges": [list(e) for e in sorted(cfg.graph.edges)],
        "action.kind": fam.kind,
        "action.k": fam.k,
        "action.m": fam.m,
        "activation.q": [float(x) for x in cfg.activation.q],
        "horizon": cfg.horizon,
        "agent.eta": float(cfg.eta),
        "agent.beta": int(cfg.beta),
        "estimator.mode": cfg.mode,
        "cooperate": cfg.cooperate,
        "seeds": cfg.seeds,
    }
    if cfg.graph_source is not None:
        out["graph.file"] = cfg.graph_source
    if cfg.exact_cap != DEFAULT_EXACT_CAP:
        out["graph.exact_cap"] = cfg.exact_cap
    if fam.kind == EXPLICIT:
        out["action.actions"] = ["".join(map(str, row)) for row in fam.explicit_actions]
    for key, value in cfg.loss.to_dict().items():
        out[f"loss.{key}"] = value
    if cfg.alpha1 is not None:
        out["alpha1"] = cfg.alpha1
    if cfg.loss_seed is not None:
        out["loss.seed"] = cfg.loss_seed
    return out
