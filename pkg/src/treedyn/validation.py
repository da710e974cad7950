"""Argument checking shared by the estimators and the command line."""
from __future__ import annotations

import numbers

import numpy as np

from .automorphism import Automorphism
from .errors import ConfigError
from .groups import GeneratedGroup
from .measures import LevelDistribution, ProductMeasure, bernoulli, measure_from_json
from .tree import TreeShape, level_size


def check_depth(n, name="depth", lo=0, hi=None) -> int:
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        raise ConfigError(name, f"expected an integer, got {n!r}")
    n = int(n)
    if n < lo or (hi is not None and n > hi):
        raise ConfigError(name, f"{n} outside [{lo}, {hi if hi is not None else 'inf'}]")
    return n


def check_seed(seed, name="seed") -> int:
    if seed is None:
        raise ConfigError(name, "a seed is required for sampling operations")
    return check_depth(seed, name)


def check_positive(x, name) -> float:
    try:
        v = float(x)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {x!r}")
    if not v > 0:
        raise ConfigError(name, f"expected a positive number, got {x!r}")
    return v


def as_distribution(p, name="p") -> LevelDistribution:
    if isinstance(p, LevelDistribution):
        return p
    try:
        return LevelDistribution.of(*p)
    except TypeError:
        raise ConfigError(name, f"expected a probability vector, got {p!r}")


def as_measure(mu, shape: TreeShape | None = None, name="measure") -> ProductMeasure:
    """A ProductMeasure, a measure JSON object, or a bare probability vector
    (read as a Bernoulli measure)."""
    if isinstance(mu, ProductMeasure):
        return mu
    if isinstance(mu, dict):
        return measure_from_json(mu, shape or TreeShape.binary(), name)
    if isinstance(mu, (list, tuple)):
        d = as_distribution(mu, name)
        return bernoulli(*d.probs, shape=shape)
    raise ConfigError(name, f"cannot read a measure from {type(mu).__name__}")


def as_group(G, name="group") -> GeneratedGroup:
    if isinstance(G, GeneratedGroup):
        return G
    if isinstance(G, str):
        from .registry import corpus_group
        return corpus_group(G, name)
    raise ConfigError(name, f"expected a group or a corpus group name, got {G!r}")


def as_element(g, G: GeneratedGroup | None = None, name="element") -> Automorphism:
    if isinstance(g, Automorphism):
        return g
    if isinstance(g, str) and G is not None:
        try:
            return G.evaluate(g)
        except (KeyError, ValueError) as exc:
            raise ConfigError(name, f"cannot evaluate word {g!r}: {exc}")
    raise ConfigError(name, f"expected an automorphism or a word, got {g!r}")


def check_level_values(values, shape: TreeShape, depth: int, name="values") -> np.ndarray:
    """A real vector indexed by the depth-``depth`` prefixes."""
    v = np.asarray(values, dtype=float)
    size = level_size(shape, depth)
    if v.ndim != 1 or v.shape[0] != size:
        raise ConfigError(name, f"expected {size} values for depth {depth}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ConfigError(name, "values must be finite")
    return v


def check_value_matrix(X, shape: TreeShape, depth: int, name="X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    size = level_size(shape, depth)
    if X.ndim != 2 or X.shape[1] != size:
        raise ConfigError(name, f"expected rows of {size} values, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ConfigError(name, "values must be finite")
    return X
