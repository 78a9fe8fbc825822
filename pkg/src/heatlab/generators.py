"""Generators for the test-graph catalog: lattice boxes and Vicsek-family trees.

Every generator returns a validated :class:`~heatlab.graph.WeightedGraph`
whose metadata records the construction family and parameters, a coordinate
list (index-aligned with vertex ids), the set of truncation-added vertices,
and the safe radius.  The safe radius is the largest R for which the ball
B(root, 3R+1) avoids truncation-added vertices, so triple-ball machinery run
at the root with radii up to safe_radius sees exactly the infinite graph.

Vicsek construction
-------------------
The level-0 cell is the 4-edge star: a center joined to four corners placed
on the diagonals.  Level i glues five copies of level i-1 (four corner copies
plus one central copy) inside a square three times as wide, identifying the
outer corners of the central copy with the nearest corner of each corner
copy.  The result is a tree with diameter 2 * 3^i.  The root z0 sits at the
extreme corner (0,0); the cut vertices z_k at coordinates (2*3^k, 2*3^k)
separate block k from the rest, and in the infinite tree the construction
continues through the last cut vertex only, so that single vertex is the
entire truncation boundary.

Blocks: G_k is the sub-tree on the square [0, 2*3^k]^2 and block k consists
of the edges of G_k not in G_{k-1}.  The weighted variant assigns one weight
per block; the stretched variant replaces every block-k edge by a path of
k+1 edges.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import BadWeightSequence, SizeTooSmall
from .graph import WeightedGraph, build_graph

VICSEK_OFFSETS = ((0, 0), (1, 1), (2, 0), (0, 2), (2, 2))  # in units of the half-width


def lattice_box(d, L):
    """d-dimensional grid {-(L-1)/2 .. (L-1)/2}^d with unit weights.

    L must be odd (>= 3) so a center vertex exists; the root sits at the
    origin.  The reference graph where the mean exit time grows like R^2.
    """
    if d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    if L < 3 or L % 2 == 0:
        raise SizeTooSmall(f"side must be odd and >= 3, got {L}")
    H = (L - 1) // 2
    shape = (L,) * d

    def vid(coord):
        return int(np.ravel_multi_index([c + H for c in coord], shape))

    edges = []
    for coord in itertools.product(range(-H, H + 1), repeat=d):
        i = vid(coord)
        for axis in range(d):
            if coord[axis] < H:
                nb = list(coord)
                nb[axis] += 1
                edges.append((i, vid(tuple(nb)), 1))

    coords = [None] * (L ** d)
    truncated = []
    for coord in itertools.product(range(-H, H + 1), repeat=d):
        i = vid(coord)
        coords[i] = list(coord)
        if max(abs(c) for c in coord) == H:
            truncated.append(i)

    meta = {
        "family": "lattice_box",
        "params": {"d": d, "L": L},
        "safe_radius": (H - 1) // 3,
        "coords": coords,
        "truncated": truncated,
    }
    return build_graph(edges, root=vid((0,) * d), meta=meta)


def _vicsek_edges(level):
    """Edge set of the level-`level` Vicsek tree as coordinate pairs."""
    cell = [((1, 1), (0, 0)), ((1, 1), (2, 0)), ((1, 1), (0, 2)), ((1, 1), (2, 2))]
    edges = cell
    for i in range(1, level + 1):
        s = 2 * 3 ** (i - 1)
        shifted = []
        for (ax, ay), (bx, by) in edges:
            for ox, oy in VICSEK_OFFSETS:
                shifted.append(((ax + ox * s, ay + oy * s), (bx + ox * s, by + oy * s)))
        edges = sorted(set(shifted))
    return edges


def _edge_block(coord_edge, level):
    """Index of the block a Vicsek edge belongs to (smallest enclosing square)."""
    (ax, ay), (bx, by) = coord_edge
    extent = max(ax, ay, bx, by)
    for k in range(level + 1):
        if extent <= 2 * 3 ** k:
            return k
    raise ValueError("edge outside the construction square")


def _assemble_vicsek(level, coord_edges, weights_for):
    """Map coordinate edges to dense ids; attach the Vicsek metadata."""
    coords = sorted({c for e in coord_edges for c in e})
    index = {c: i for i, c in enumerate(coords)}
    edges = [(index[a], index[b], weights_for(e)) for e in coord_edges for a, b in [e]]
    cut = [index[(2 * 3 ** k, 2 * 3 ** k)] for k in range(level + 1)]
    meta = {
        "family": "vicsek",
        "params": {"level": level},
        "coords": [list(c) for c in coords],
        "cut_vertices": cut,
        "truncated": [cut[-1]],
        "safe_radius": (2 * 3 ** level - 1) // 3,
    }
    return build_graph(edges, root=index[(0, 0)], meta=meta)


def vicsek_tree(level):
    """Vicsek tree of the given level, unit weights, rooted at corner (0,0)."""
    if level < 0:
        raise ValueError("level must be >= 0")
    return _assemble_vicsek(level, _vicsek_edges(level), lambda e: 1)


def weighted_vicsek(level, block_weights=None):
    """Vicsek tree whose block-k edges all carry weight block_weights[k].

    The sequence must have level+1 entries and be nondecreasing; the default
    is the geometric sequence 2^k.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    if block_weights is None:
        block_weights = [2 ** k for k in range(level + 1)]
    block_weights = list(block_weights)
    if len(block_weights) != level + 1:
        raise BadWeightSequence(
            f"need {level + 1} block weights, got {len(block_weights)}")
    if any(w <= 0 for w in block_weights):
        raise BadWeightSequence("block weights must be positive")
    if any(a > b for a, b in zip(block_weights, block_weights[1:])):
        raise BadWeightSequence("block weights must be nondecreasing")

    coord_edges = _vicsek_edges(level)
    g = _assemble_vicsek(level, coord_edges,
                         lambda e: block_weights[_edge_block(e, level)])
    g.meta["family"] = "weighted_vicsek"
    g.meta["params"]["block_weights"] = list(block_weights)
    return g


def stretched_vicsek(level):
    """Vicsek tree with every block-k edge subdivided into a path of k+1 edges.

    Unit weights.  Coordinates are scaled by lcm(1..level+1) so subdivision
    points have exact integer coordinates; the scale is recorded in the
    metadata.  The cut vertices z_0..z_level are kept, now at distances
    sum_{j<=k} (j+1) * w_j from the root, where w_0 = 2 and w_j = 4 * 3^(j-1)
    are the unstretched block widths.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    scale = math.lcm(*range(1, level + 2))
    coord_edges = _vicsek_edges(level)
    coords = set()
    edges_sc = []
    for e in coord_edges:
        (ax, ay), (bx, by) = e
        k = _edge_block(e, level)
        pieces = k + 1
        step = scale // pieces
        prev = (ax * scale, ay * scale)
        coords.add(prev)
        for t in range(1, pieces + 1):
            nxt = (ax * scale + (bx - ax) * step * t, ay * scale + (by - ay) * step * t)
            coords.add(nxt)
            edges_sc.append((prev, nxt))
            prev = nxt

    coords = sorted(coords)
    index = {c: i for i, c in enumerate(coords)}
    edges = [(index[a], index[b], 1) for a, b in edges_sc]
    cut = [index[(2 * 3 ** k * scale, 2 * 3 ** k * scale)] for k in range(level + 1)]

    g = build_graph(edges, root=index[(0 * scale, 0 * scale)], meta={})
    z_last = cut[-1]
    d_root_zlast = int(g.distances(index[(0, 0)])[z_last])
    g.meta.update({
        "family": "stretched_vicsek",
        "params": {"level": level},
        "coord_scale": scale,
        "coords": [list(c) for c in coords],
        "cut_vertices": cut,
        "truncated": [z_last],
        "safe_radius": (d_root_zlast - 1) // 3,
    })
    return g


def vicsek_vertex_count(level):
    """Number of vertices of the plain Vicsek tree: v(0)=5, v(i)=5v(i-1)-4."""
    v = 5
    for _ in range(level):
        v = 5 * v - 4
    return v


def vicsek_block_edge_count(level, k):
    """Edges in block k of a level >= k Vicsek tree."""
    if k == 0:
        return 4
    return (vicsek_vertex_count(k) - 1) - (vicsek_vertex_count(k - 1) - 1)
