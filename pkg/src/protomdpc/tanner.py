"""Expansion of polynomial matrices into Tanner graphs.

Each entry (i, j) of an M0 x N0 polynomial matrix contributes one circulant
block: check node i*Q + r is adjacent to variable node j*Q + s exactly when
(s - r) mod Q lies in the entry's support.  Variable nodes belonging to
state columns are flagged punctured; they carry no channel observation.

Adjacency is kept as flat edge arrays (edge -> VN index, edge -> CN index)
so decoder inner loops reduce to gather / scatter-add passes; the graph is
immutable once built and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from protomdpc.protograph import PolyMatrix


@dataclass(frozen=True)
class TannerGraph:
    Q: int
    vn_types: int
    cn_types: int
    punctured: np.ndarray  # bool, per VN
    edge_vn: np.ndarray  # int64, per edge
    edge_cn: np.ndarray  # int64, per edge

    def __post_init__(self):
        self.punctured.setflags(write=False)
        self.edge_vn.setflags(write=False)
        self.edge_cn.setflags(write=False)

    @property
    def vn_count(self) -> int:
        return self.vn_types * self.Q

    @property
    def cn_count(self) -> int:
        return self.cn_types * self.Q

    @property
    def edge_count(self) -> int:
        return len(self.edge_vn)

    @property
    def observed_count(self) -> int:
        """Number of VNs carrying a codeword bit."""
        return int((~self.punctured).sum())

    def vn_type_of(self, vn: int) -> int:
        return vn // self.Q

    def vn_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_vn, minlength=self.vn_count)

    def cn_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_cn, minlength=self.cn_count)


def expand(pm: PolyMatrix, state_columns=frozenset()) -> TannerGraph:
    """Lift a polynomial matrix into its Tanner graph by the circulant rule."""
    Q = pm.Q
    state_columns = frozenset(state_columns)
    if any(c < 0 or c >= pm.cols for c in state_columns):
        raise ValueError("state column index out of range")
    ev, ec = [], []
    r = np.arange(Q, dtype=np.int64)
    for i in range(pm.rows):
        for j in range(pm.cols):
            for e in pm[i, j].support:
                ec.append(i * Q + r)
                ev.append(j * Q + (r + e) % Q)
    edge_vn = np.concatenate(ev) if ev else np.empty(0, dtype=np.int64)
    edge_cn = np.concatenate(ec) if ec else np.empty(0, dtype=np.int64)
    punctured = np.zeros(pm.cols * Q, dtype=bool)
    for c in state_columns:
        punctured[c * Q : (c + 1) * Q] = True
    return TannerGraph(Q, pm.cols, pm.rows, punctured, edge_vn, edge_cn)


def degree_profile(g: TannerGraph) -> tuple[dict[int, int], dict[int, int]]:
    """Histograms {degree: node count} for VNs and CNs."""
    vn_hist = np.bincount(g.vn_degrees())
    cn_hist = np.bincount(g.cn_degrees())
    vn = {int(d): int(c) for d, c in enumerate(vn_hist) if c}
    cn = {int(d): int(c) for d, c in enumerate(cn_hist) if c}
    return vn, cn
