"""
Text formats for Potts parameters and sample sets.

Parameters are a YAML document: `sites`, `states`, `edges` (pairs i < j with a
stored block), `fields` (n x q) and `couplings` (one q x q block per edge, in
edge order). Samples are an integer CSV with one column per site.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import networkx as nx
import numpy as np
import pandas as pd
import yaml

from ..exceptions import InvalidInputError
from ..potts.mcmc import PottsSampleSet
from ..potts.model import PottsParams
from .base import header_line

logger = logging.getLogger(__name__)


def potts_params_to_dict(params: PottsParams):
    edges = params.edges()
    return {
        'sites': params.n,
        'states': params.q,
        'edges': [[i, j] for i, j in edges],
        'fields': params.h.tolist(),
        'couplings': [params.J[i, j].tolist() for i, j in edges],
    }


def potts_params_from_dict(data) -> PottsParams:
    try:
        n, q = int(data['sites']), int(data['states'])
        edges = [tuple(int(v) for v in e) for e in data.get('edges') or []]
        blocks = data.get('couplings') or []
        h = np.asarray(data['fields'], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidInputError(f"Malformed Potts parameter document: {e}")
    if len(edges) != len(blocks):
        raise InvalidInputError(f"{len(edges)} edges but {len(blocks)} coupling blocks")
    J = np.zeros((n, n, q, q))
    for (i, j), block in zip(edges, blocks):
        if not 0 <= i < j < n:
            raise InvalidInputError(f"Edge ({i}, {j}) must satisfy 0 <= i < j < {n}")
        block = np.asarray(block, dtype=float)
        J[i, j] = block
        J[j, i] = block.T
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from(edges)
    return PottsParams(h=h.reshape(n, q), J=J, graph=graph)


def write_potts_params(path: Union[str, Path], params: PottsParams,
                       config_hash: str = "", kind: str = "potts_params") -> Path:
    path = Path(path)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(header_line(config_hash, kind) + "\n")
        yaml.safe_dump(potts_params_to_dict(params), f, default_flow_style=None, sort_keys=False)
    logger.debug(f"Wrote Potts parameters ({params.n} sites, {len(params.edges())} edges) to {path}")
    return path


def read_potts_params(path: Union[str, Path]) -> PottsParams:
    with open(path, 'r', encoding='utf-8') as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise InvalidInputError(f"{path} does not contain a Potts parameter document")
    return potts_params_from_dict(data)


def write_potts_samples(path: Union[str, Path], samples: PottsSampleSet,
                        config_hash: str = "", kind: str = "potts_samples") -> Path:
    path = Path(path)
    frame = pd.DataFrame(samples.data, columns=[f"x{i}" for i in range(samples.n)])
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(header_line(config_hash, kind) + "\n")
        frame.to_csv(f, index=False)
    return path


def read_potts_samples(path: Union[str, Path], q: Optional[int] = None) -> PottsSampleSet:
    """Read an integer sample CSV; q defaults to one more than the largest state seen."""
    data = pd.read_csv(path, comment="#").to_numpy(dtype=np.intp)
    if q is None:
        q = int(data.max()) + 1 if data.size else 1
    return PottsSampleSet(data=data, q=q)
