"""Hot inner loops: pruned cylinder-tree walks.

Every kernel exists twice with identical arithmetic:

* a numba depth-first walk with an explicit O(depth) stack, used when
  ``_accel.USE_NUMBA`` is true;
* a level-synchronous numpy walk that expands the surviving frontier in
  chunks, used otherwise (``SLICELAB_NUMBA=0``).

Both count the same integer quantities, so results never depend on the path
or on how the tree is split across threads.

Affine maps are packed as float64 rows ``(a11, a12, a21, a22, t1, t2)``;
composing a parent row P with generator i gives x -> P(A_i x + b_i).
A target is the band ``|n . p - c| <= r`` for a unit normal n (r = 0 is a line).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _accel
from ._accel import jit

CHUNK = 1 << 16
IDENTITY = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])


def pack_maps(linear, translation):
    """(N, 4) linear parts and (N, 2) translations as contiguous float64 arrays."""
    lin = np.ascontiguousarray(np.asarray(linear, dtype=np.float64).reshape(-1, 4))
    trans = np.ascontiguousarray(np.asarray(translation, dtype=np.float64).reshape(-1, 2))
    return lin, trans


# ------------------------------------------------------------ numba path ---

@jit
def _census_dfs(lin, trans, verts, wits, root, level0, depth, nx, ny, c, r, eps,
                definite, possible, inside):
    N = lin.shape[0]
    nv = verts.shape[0]
    nw = wits.shape[0]
    maps = np.empty((depth + 1, 6))
    for k in range(6):
        maps[level0, k] = root[k]
    powN = np.empty(depth + 1, np.int64)
    powN[0] = 1
    for k in range(1, depth + 1):
        powN[k] = powN[k - 1] * N
    digit = np.zeros(depth + 2, np.int64)
    visited = 0
    level = level0 + 1
    digit[level] = 0
    outer = r + eps
    inner = r - eps
    while level > level0:
        i = digit[level]
        if i >= N:
            level -= 1
            if level > level0:
                digit[level] += 1
            continue
        p0 = maps[level - 1, 0]
        p1 = maps[level - 1, 1]
        p2 = maps[level - 1, 2]
        p3 = maps[level - 1, 3]
        a = p0 * lin[i, 0] + p1 * lin[i, 2]
        b = p0 * lin[i, 1] + p1 * lin[i, 3]
        cc = p2 * lin[i, 0] + p3 * lin[i, 2]
        d = p2 * lin[i, 1] + p3 * lin[i, 3]
        tx = p0 * trans[i, 0] + p1 * trans[i, 1] + maps[level - 1, 4]
        ty = p2 * trans[i, 0] + p3 * trans[i, 1] + maps[level - 1, 5]
        visited += 1
        gmin = np.inf
        gmax = -np.inf
        for v in range(nv):
            x = a * verts[v, 0] + b * verts[v, 1] + tx
            y = cc * verts[v, 0] + d * verts[v, 1] + ty
            g = nx * x + ny * y - c
            if g < gmin:
                gmin = g
            if g > gmax:
                gmax = g
        descend = False
        if gmin > outer or gmax < -outer:
            pass
        elif gmin > -inner and gmax < inner:
            for k in range(level, depth + 1):
                m = powN[k - level]
                definite[k] += m
                possible[k] += m
                inside[k] += m
        else:
            possible[level] += 1
            wmin = np.inf
            wmax = -np.inf
            wabs = np.inf
            for v in range(nw):
                x = a * wits[v, 0] + b * wits[v, 1] + tx
                y = cc * wits[v, 0] + d * wits[v, 1] + ty
                g = nx * x + ny * y - c
                if g < wmin:
                    wmin = g
                if g > wmax:
                    wmax = g
                if abs(g) < wabs:
                    wabs = abs(g)
            if nw > 0 and ((wmin < -eps and wmax > eps) or wabs < inner):
                definite[level] += 1
            if level < depth:
                descend = True
        if descend:
            maps[level, 0] = a
            maps[level, 1] = b
            maps[level, 2] = cc
            maps[level, 3] = d
            maps[level, 4] = tx
            maps[level, 5] = ty
            level += 1
            digit[level] = 0
        else:
            digit[level] += 1
    return visited


@jit
def _bad_dfs(lin, trans, verts, root, root_first, level0, depth, nx, ny, c, radius, eps,
             bad, line_possible, strip_leaves):
    N = lin.shape[0]
    nv = verts.shape[0]
    maps = np.empty((depth + 1, 6))
    for k in range(6):
        maps[level0, k] = root[k]
    first = np.zeros(depth + 1, np.int64)
    first[level0] = root_first
    powN = np.empty(depth + 1, np.int64)
    powN[0] = 1
    for k in range(1, depth + 1):
        powN[k] = powN[k - 1] * N
    digit = np.zeros(depth + 2, np.int64)
    visited = 0
    level = level0 + 1
    digit[level] = 0
    outer = radius + eps
    inner = radius - eps
    while level > level0:
        i = digit[level]
        if i >= N:
            level -= 1
            if level > level0:
                digit[level] += 1
            continue
        p0 = maps[level - 1, 0]
        p1 = maps[level - 1, 1]
        p2 = maps[level - 1, 2]
        p3 = maps[level - 1, 3]
        a = p0 * lin[i, 0] + p1 * lin[i, 2]
        b = p0 * lin[i, 1] + p1 * lin[i, 3]
        cc = p2 * lin[i, 0] + p3 * lin[i, 2]
        d = p2 * lin[i, 1] + p3 * lin[i, 3]
        tx = p0 * trans[i, 0] + p1 * trans[i, 1] + maps[level - 1, 4]
        ty = p2 * trans[i, 0] + p3 * trans[i, 1] + maps[level - 1, 5]
        visited += 1
        gmin = np.inf
        gmax = -np.inf
        for v in range(nv):
            x = a * verts[v, 0] + b * verts[v, 1] + tx
            y = cc * verts[v, 0] + d * verts[v, 1] + ty
            g = nx * x + ny * y - c
            if g < gmin:
                gmin = g
            if g > gmax:
                gmax = g
        descend = False
        if gmin > outer or gmax < -outer:
            pass
        else:
            fk = first[level - 1]
            if fk == 0 and (gmin > eps or gmax < -eps):
                fk = level
            if fk == 0:
                line_possible[level] += 1
            if fk > 0 and gmin > -inner and gmax < inner:
                m = powN[depth - level]
                bad[fk] += m
                strip_leaves[0] += m
            elif level == depth:
                strip_leaves[0] += 1
                if fk > 0:
                    bad[fk] += 1
            else:
                first[level] = fk
                descend = True
        if descend:
            maps[level, 0] = a
            maps[level, 1] = b
            maps[level, 2] = cc
            maps[level, 3] = d
            maps[level, 4] = tx
            maps[level, 5] = ty
            level += 1
            digit[level] = 0
        else:
            digit[level] += 1
    return visited


@jit
def _ratio_dfs(lin, depth, out):
    N = lin.shape[0]
    mats = np.empty((depth + 1, 4))
    mats[0, 0] = 1.0
    mats[0, 1] = 0.0
    mats[0, 2] = 0.0
    mats[0, 3] = 1.0
    digit = np.zeros(depth + 2, np.int64)
    level = 1
    while level > 0:
        i = digit[level]
        if i >= N:
            level -= 1
            if level > 0:
                digit[level] += 1
            continue
        p0 = mats[level - 1, 0]
        p1 = mats[level - 1, 1]
        p2 = mats[level - 1, 2]
        p3 = mats[level - 1, 3]
        a = p0 * lin[i, 0] + p1 * lin[i, 2]
        b = p0 * lin[i, 1] + p1 * lin[i, 3]
        cc = p2 * lin[i, 0] + p3 * lin[i, 2]
        d = p2 * lin[i, 1] + p3 * lin[i, 3]
        p = a * a + cc * cc
        q = a * b + cc * d
        s = b * b + d * d
        a1sq = 0.5 * (p + s) + np.hypot(0.5 * (p - s), q)
        ratio = abs(a * d - b * cc) / a1sq
        if ratio > out[level]:
            out[level] = ratio
        if level < depth:
            mats[level, 0] = a
            mats[level, 1] = b
            mats[level, 2] = cc
            mats[level, 3] = d
            level += 1
            digit[level] = 0
        else:
            digit[level] += 1


# ------------------------------------------------------------ numpy path ---

def _expand(maps, lin, trans):
    """Children of every row of ``maps``, generator-major: shape (N*m, 6)."""
    p0, p1, p2, p3, p4, p5 = (maps[:, k] for k in range(6))
    out = []
    for i in range(lin.shape[0]):
        a = p0 * lin[i, 0] + p1 * lin[i, 2]
        b = p0 * lin[i, 1] + p1 * lin[i, 3]
        cc = p2 * lin[i, 0] + p3 * lin[i, 2]
        d = p2 * lin[i, 1] + p3 * lin[i, 3]
        tx = p0 * trans[i, 0] + p1 * trans[i, 1] + p4
        ty = p2 * trans[i, 0] + p3 * trans[i, 1] + p5
        out.append(np.stack([a, b, cc, d, tx, ty], axis=1))
    return np.concatenate(out, axis=0)


def _signed(maps, pts, nx, ny, c):
    """g = n . phi(p) - c for each map (rows) and point (columns)."""
    a, b, cc, d, tx, ty = (maps[:, k:k + 1] for k in range(6))
    x = a * pts[:, 0] + b * pts[:, 1] + tx
    y = cc * pts[:, 0] + d * pts[:, 1] + ty
    return nx * x + ny * y - c


def _census_bfs(lin, trans, verts, wits, root, level0, depth, nx, ny, c, r, eps,
                definite, possible, inside, stop=None, collector=None):
    N = lin.shape[0]
    outer, inner = r + eps, r - eps
    visited = 0

    def walk(frontier, level):
        nonlocal visited
        for start in range(0, frontier.shape[0], CHUNK):
            kids = _expand(frontier[start:start + CHUNK], lin, trans)
            visited += kids.shape[0]
            g = _signed(kids, verts, nx, ny, c)
            gmin, gmax = g.min(axis=1), g.max(axis=1)
            empty = (gmin > outer) | (gmax < -outer)
            full = ~empty & (gmin > -inner) & (gmax < inner)
            rest = ~empty & ~full
            n_full = int(full.sum())
            for k in range(level, depth + 1):
                m = n_full * N ** (k - level)
                definite[k] += m
                possible[k] += m
                inside[k] += m
            possible[level] += int(rest.sum())
            if wits.shape[0] and rest.any():
                w = _signed(kids[rest], wits, nx, ny, c)
                hit = ((w.min(axis=1) < -eps) & (w.max(axis=1) > eps)) | (np.abs(w).min(axis=1) < inner)
                definite[level] += int(hit.sum())
            if level < depth and rest.any():
                if level == stop:
                    collector.extend(np.ascontiguousarray(row) for row in kids[rest])
                else:
                    walk(kids[rest], level + 1)

    walk(root[None, :].copy(), level0 + 1)
    return visited


def _bad_bfs(lin, trans, verts, root, root_first, level0, depth, nx, ny, c, radius, eps,
             bad, line_possible, strip_leaves):
    N = lin.shape[0]
    outer, inner = radius + eps, radius - eps
    visited = 0

    def walk(frontier, firsts, level):
        nonlocal visited
        for start in range(0, frontier.shape[0], CHUNK):
            kids = _expand(frontier[start:start + CHUNK], lin, trans)
            fk = np.tile(firsts[start:start + CHUNK], N)
            visited += kids.shape[0]
            g = _signed(kids, verts, nx, ny, c)
            gmin, gmax = g.min(axis=1), g.max(axis=1)
            live = ~((gmin > outer) | (gmax < -outer))
            kids, fk, gmin, gmax = kids[live], fk[live], gmin[live], gmax[live]
            fk = np.where((fk == 0) & ((gmin > eps) | (gmax < -eps)), level, fk)
            line_possible[level] += int((fk == 0).sum())
            full = (fk > 0) & (gmin > -inner) & (gmax < inner)
            if full.any():
                np.add.at(bad, fk[full], N ** (depth - level))
                strip_leaves[0] += int(full.sum()) * N ** (depth - level)
            rest = ~full
            if level == depth:
                strip_leaves[0] += int(rest.sum())
                tagged = fk[rest]
                tagged = tagged[tagged > 0]
                np.add.at(bad, tagged, 1)
            elif rest.any():
                walk(kids[rest], fk[rest], level + 1)

    walk(root[None, :].copy(), np.array([root_first], dtype=np.int64), level0 + 1)
    return visited


def _ratio_bfs(lin, depth, out):
    maps = IDENTITY[None, :].copy()
    zeros = np.zeros((lin.shape[0], 2))

    def walk(frontier, level):
        for start in range(0, frontier.shape[0], CHUNK):
            kids = _expand(frontier[start:start + CHUNK], lin, zeros)
            a, b, cc, d = kids[:, 0], kids[:, 1], kids[:, 2], kids[:, 3]
            p = a * a + cc * cc
            q = a * b + cc * d
            s = b * b + d * d
            a1sq = 0.5 * (p + s) + np.hypot(0.5 * (p - s), q)
            ratio = np.abs(a * d - b * cc) / a1sq
            out[level] = max(out[level], float(ratio.max()))
            if level < depth:
                walk(kids, level + 1)

    walk(maps, 1)


# --------------------------------------------------------------- drivers ---

def _pick(numba_fn, numpy_fn, use_numba):
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    return numba_fn if use_numba and _accel.USE_NUMBA else numpy_fn


def census(lin, trans, verts, wits, normal, c, r, eps, depth, threads=1, use_numba=None):
    """Per-level certified counts of cylinders against a line (r=0) or band.

    Returns ``(definite, possible, inside, visited)`` where the first three
    are int64 arrays indexed by level 0..depth (level 0 unused, zero).
    """
    kernel = _pick(_census_dfs, _census_bfs, use_numba)
    verts = np.ascontiguousarray(verts, dtype=np.float64)
    wits = np.ascontiguousarray(wits, dtype=np.float64).reshape(-1, 2)
    nx, ny = float(normal[0]), float(normal[1])
    args = (nx, ny, float(c), float(r), float(eps))
    definite = np.zeros(depth + 1, np.int64)
    possible = np.zeros(depth + 1, np.int64)
    inside = np.zeros(depth + 1, np.int64)
    if depth == 0:
        return definite, possible, inside, 0
    if threads <= 1 or depth < 4:
        visited = kernel(lin, trans, verts, wits, IDENTITY.copy(), 0, depth, *args,
                         definite, possible, inside)
        return definite, possible, inside, int(visited)

    # Split at a shallow level: the numpy walk counts levels <= split
    # (including bulk Inside subtrees) and hands back the live prefixes,
    # each of which is an independent job for the kernel.
    N = lin.shape[0]
    split = 1
    while N ** split < 4 * threads and split < depth - 1:
        split += 1
    roots = []
    visited = _census_bfs(lin, trans, verts, wits, IDENTITY.copy(), 0, depth, *args,
                          definite, possible, inside, stop=split, collector=roots)

    def job(root):
        d = np.zeros(depth + 1, np.int64)
        p = np.zeros(depth + 1, np.int64)
        s = np.zeros(depth + 1, np.int64)
        v = kernel(lin, trans, verts, wits, root, split, depth, *args, d, p, s)
        return d, p, s, v

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(job, roots))
    for d, p, s, v in results:
        definite += d
        possible += p
        inside += s
        visited += int(v)
    return definite, possible, inside, int(visited)


def bad_words(lin, trans, verts, normal, c, radius, eps, depth, threads=1, use_numba=None):
    """Bad-word histogram for the band of ``radius`` around the line ``n . p = c``.

    Returns ``(bad, line_possible, strip_leaves, visited)``; ``bad[k]`` counts
    depth-``depth`` words in the band census whose first prefix to leave the
    line census has length k.
    """
    kernel = _pick(_bad_dfs, _bad_bfs, use_numba)
    verts = np.ascontiguousarray(verts, dtype=np.float64)
    args = (float(normal[0]), float(normal[1]), float(c), float(radius), float(eps))
    bad = np.zeros(depth + 1, np.int64)
    line_possible = np.zeros(depth + 1, np.int64)
    leaves = np.zeros(1, np.int64)
    if depth == 0:
        return bad, line_possible, 0, 0
    visited = kernel(lin, trans, verts, IDENTITY.copy(), 0, 0, depth, *args, bad, line_possible, leaves)
    return bad, line_possible, int(leaves[0]), int(visited)


def level_ratio_max(lin, depth, use_numba=None):
    """max over words of length k of alpha2/alpha1, for k = 1..depth (index 0 unused)."""
    kernel = _pick(_ratio_dfs, _ratio_bfs, use_numba)
    out = np.zeros(depth + 1)
    if depth > 0:
        kernel(np.ascontiguousarray(lin, dtype=np.float64), depth, out)
    out[0] = 1.0
    return out
