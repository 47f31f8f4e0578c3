"""Leaf-wise regression tree growth over binned features.

Histograms hold per-bin gradient sums and counts (the squared-error hessian is
1 per row, so counts double as hessian sums).  A child histogram is built
directly for the smaller child and by subtraction for its sibling.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

# gains at or below this fraction of the node's sum of squared gradients are
# indistinguishable from rounding noise
GAIN_RTOL = 1e-12


@dataclass(frozen=True)
class Tree:
    """Preorder node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray      # bin index; rows with bin <= threshold go left
    missing_left: np.ndarray
    gain: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray          # leaf output, -G / (H + lambda)
    sum_grad: np.ndarray
    count: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    @property
    def n_leaves(self) -> int:
        return int(self.is_leaf.sum())

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, Xb: np.ndarray, missing_bins: np.ndarray) -> np.ndarray:
        """Leaf node index reached by each binned row."""
        node = np.zeros(Xb.shape[0], dtype=np.int64)
        rows = np.arange(Xb.shape[0])
        active = ~self.is_leaf[node]
        while active.any():
            r = rows[active]
            nd = node[r]
            f = self.feature[nd]
            b = Xb[r, f].astype(np.int64)
            go_left = np.where(b == missing_bins[f], self.missing_left[nd], b <= self.threshold[nd])
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active[r] = ~self.is_leaf[node[r]]
        return node

    def predict_binned(self, Xb: np.ndarray, missing_bins: np.ndarray) -> np.ndarray:
        return self.value[self.apply(Xb, missing_bins)]


def split_gain(gl, hl, gr, hr, lam):
    return gl * gl / (hl + lam) + gr * gr / (hr + lam) - (gl + gr) ** 2 / (hl + hr + lam)


@dataclass
class _Split:
    gain: float
    feature: int       # index into the full feature list
    threshold: int
    missing_left: bool
    gl: float
    cl: float


class _Layout:
    """Flat histogram layout for the features eligible in one tree."""

    def __init__(self, n_bins: np.ndarray, eligible: np.ndarray):
        self.eligible = eligible
        nb = n_bins[eligible]
        self.nb = nb
        self.start = np.concatenate([[0], np.cumsum(nb)[:-1]])
        self.total = int(nb.sum())
        self.seg = np.repeat(np.arange(len(nb)), nb)
        self.pos = np.arange(self.total) - self.start[self.seg]
        self.is_missing = self.pos == (nb - 1)[self.seg]


class TreeGrower:
    def __init__(self, Xb: np.ndarray, n_bins: np.ndarray, *, num_leaves: int,
                 max_depth: int, min_data_in_leaf: int, lambda_l2: float):
        self.Xb = Xb
        self.n_bins = np.asarray(n_bins, dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.n_bins)[:-1]])
        self.num_leaves = num_leaves
        self.max_depth = max_depth
        self.min_data = max(1, min_data_in_leaf)
        self.lam = lambda_l2

    def _histogram(self, idx, g, layout):
        cols = self.Xb[np.ix_(idx, layout.eligible)].astype(np.int64) + layout.start
        flat = cols.ravel()
        G = np.bincount(flat, weights=np.repeat(g[idx], len(layout.eligible)),
                        minlength=layout.total)
        C = np.bincount(flat, minlength=layout.total).astype(np.float64)
        return G, C

    def _best_split(self, G, C, g_tot, c_tot, sq_tot, layout) -> _Split | None:
        lam = self.lam
        miss = layout.is_missing
        Gv = np.where(miss, 0.0, G)
        Cv = np.where(miss, 0.0, C)
        csG, csC = np.cumsum(Gv), np.cumsum(Cv)
        baseG = np.concatenate([[0.0], csG])[layout.start][layout.seg]
        baseC = np.concatenate([[0.0], csC])[layout.start][layout.seg]
        GL, CL = csG - baseG, csC - baseC
        last = layout.start + layout.nb - 1
        Gm, Cm = G[last][layout.seg], C[last][layout.seg]

        # column 0: missing rows go left, column 1: missing rows go right
        gl = np.column_stack([GL + Gm, GL])
        cl = np.column_stack([CL + Cm, CL])
        gr, cr = g_tot - gl, c_tot - cl
        ok = (cl >= self.min_data) & (cr >= self.min_data) & ~miss[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = gl * gl / (cl + lam) + gr * gr / (cr + lam) - g_tot * g_tot / (c_tot + lam)
        gain = np.where(ok, gain, -np.inf)
        flat = int(np.argmax(gain))
        pos, direction = divmod(flat, 2)
        best = gain[pos, direction]
        if not best > GAIN_RTOL * sq_tot:
            return None
        seg = layout.seg[pos]
        return _Split(float(best), int(layout.eligible[seg]), int(layout.pos[pos]),
                      direction == 0, float(gl[pos, direction]), float(cl[pos, direction]))

    def grow(self, g: np.ndarray, eligible, rows=None) -> tuple[Tree, list[np.ndarray]]:
        """Grow one tree on gradients ``g``; returns the tree and, per node, the
        training rows it holds (non-empty only for leaves)."""
        layout = _Layout(self.n_bins, np.asarray(sorted(eligible), dtype=np.int64))
        idx = np.arange(len(g)) if rows is None else np.asarray(rows)
        nodes = []  # dicts in creation order
        members = []

        def add(idx, g_sum, count, depth, hist):
            nid = len(nodes)
            nodes.append(dict(feature=-1, threshold=0, missing_left=False, gain=0.0,
                              left=-1, right=-1, sum_grad=g_sum, count=count, depth=depth))
            members.append(idx)
            split = None
            if (self.max_depth <= 0 or depth < self.max_depth) and count >= 2 * self.min_data:
                sq = float(g[idx] @ g[idx])
                split = self._best_split(hist[0], hist[1], g_sum, float(count), sq, layout)
            return nid, split

        heap = []
        root_hist = self._histogram(idx, g, layout)
        root, split = add(idx, float(g[idx].sum()), len(idx), 0, root_hist)
        hists = {root: root_hist}
        if split:
            heapq.heappush(heap, (-split.gain, root, split))
        n_leaves = 1
        while heap and n_leaves < self.num_leaves:
            _, nid, s = heapq.heappop(heap)
            node = nodes[nid]
            idx = members[nid]
            b = self.Xb[idx, s.feature].astype(np.int64)
            go_left = np.where(b == self.n_bins[s.feature] - 1, s.missing_left, b <= s.threshold)
            li, ri = idx[go_left], idx[~go_left]
            pG, pC = hists.pop(nid)
            if len(li) <= len(ri):
                lh = self._histogram(li, g, layout)
                rh = (pG - lh[0], pC - lh[1])
            else:
                rh = self._histogram(ri, g, layout)
                lh = (pG - rh[0], pC - rh[1])
            node.update(feature=s.feature, threshold=s.threshold, missing_left=s.missing_left,
                        gain=s.gain)
            members[nid] = idx[:0]
            gr = node["sum_grad"] - s.gl
            for side, (cidx, cg, hist) in (("left", (li, s.gl, lh)), ("right", (ri, gr, rh))):
                cid, csplit = add(cidx, cg, len(cidx), node["depth"] + 1, hist)
                node[side] = cid
                if csplit:
                    hists[cid] = hist
                    heapq.heappush(heap, (-csplit.gain, cid, csplit))
            n_leaves += 1
        return self._finish(nodes, members)

    def _finish(self, nodes, members):
        # renumber to preorder
        order, stack = [], [0]
        while stack:
            i = stack.pop()
            order.append(i)
            if nodes[i]["feature"] >= 0:
                stack += [nodes[i]["right"], nodes[i]["left"]]
        new_id = {old: new for new, old in enumerate(order)}
        nd = [nodes[i] for i in order]

        def arr(key, dtype):
            return np.array([n[key] for n in nd], dtype=dtype)

        left = np.array([new_id.get(n["left"], -1) for n in nd], dtype=np.int64)
        right = np.array([new_id.get(n["right"], -1) for n in nd], dtype=np.int64)
        sum_grad = arr("sum_grad", np.float64)
        count = arr("count", np.int64)
        feature = arr("feature", np.int64)
        value = np.where(feature < 0, -sum_grad / (count + self.lam), 0.0)
        tree = Tree(feature, arr("threshold", np.int64), arr("missing_left", bool),
                    arr("gain", np.float64), left, right, value, sum_grad, count)
        return tree, [members[i] for i in order]
