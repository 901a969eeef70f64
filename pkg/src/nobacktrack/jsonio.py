"""Chain JSON files: ``{"states": [...], "T": [[...]], "pi": [...], "f": [...]}``.

``pi`` and ``f`` are optional.  Lifted chains use pair labels ``"(x|y)"`` and
carry a provenance map from each pair label to its two base-state labels.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .chain import FiniteChain, validate_chain
from .errors import ParseError
from .no_backtrack import ExpandedChain


def chain_to_dict(chain: FiniteChain, pi=None, f=None) -> dict:
    d = {"states": list(chain.states), "T": chain.T.tolist()}
    if pi is not None:
        d["pi"] = np.asarray(pi, dtype=float).tolist()
    if f is not None:
        d["f"] = np.asarray(f, dtype=float).tolist()
    return d


def chain_from_dict(d: dict, tol: float = 1e-9):
    """Return ``(chain, pi, f)``; ``pi`` and ``f`` may be None."""
    try:
        T = d["T"]
    except (KeyError, TypeError) as exc:
        raise ParseError("chain JSON needs a 'T' matrix") from exc
    try:
        T = np.array(T, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"'T' is not a numeric matrix: {exc}") from exc
    states = d.get("states")
    chain = validate_chain(T, tol=tol, states=states)
    pi = np.array(d["pi"], dtype=float) if d.get("pi") is not None else None
    f = np.array(d["f"], dtype=float) if d.get("f") is not None else None
    for name, v in (("pi", pi), ("f", f)):
        if v is not None and v.shape != (chain.n,):
            raise ParseError(f"'{name}' has length {len(v)}, expected {chain.n}")
    return chain, pi, f


def expanded_to_dict(ex: ExpandedChain, f=None) -> dict:
    d = chain_to_dict(ex.chain, ex.lifted_dist, f)
    d["provenance"] = {
        label: [ex.base.states[x], ex.base.states[y]] for label, (x, y) in zip(ex.chain.states, ex.pairs)
    }
    d["kernel"] = ex.kernel_name
    return d


def load_chain(path, tol: float = 1e-9):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return chain_from_dict(d, tol)


def dump_json(obj, path=None) -> str:
    """Serialize ``obj``; when ``path`` is given, write it atomically."""
    text = json.dumps(obj, indent=2, sort_keys=False, default=_default) + "\n"
    if path is not None:
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    return text


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (np.floating, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")
