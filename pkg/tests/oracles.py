"""Independent brute-force reference implementations used only by tests.

These deliberately avoid sharing code with the package: naive loops, full DP
matrices, explicit vectors. They define what the optimized implementations
must reproduce.
"""

import math

import numpy as np


# ---------------------------------------------------------------------------
# Geometry


def raycast_depths(mesh, intrinsics, pose, near=0.05, far=100.0):
    """Per-pixel depth by casting a ray through every pixel center and
    intersecting every triangle (Moller-Trumbore). Returns (H, W) with +inf
    where nothing is hit."""
    h, w = intrinsics.height, intrinsics.width
    tri = mesh.vertices[mesh.faces]  # (M, 3, 3) world
    v0, v1, v2 = tri[:, 0], tri[:, 1], tri[:, 2]
    e1 = v1 - v0
    e2 = v2 - v0
    origin = pose.position

    us = (np.arange(w) + 0.5 - intrinsics.cx) / intrinsics.fx
    vs = (np.arange(h) + 0.5 - intrinsics.cy) / intrinsics.fy
    out = np.full((h, w), np.inf)
    for py in range(h):
        dirs_cam = np.stack(
            [us, np.full(w, vs[py]), np.ones(w)], axis=1)  # (W, 3), z=1
        dirs = dirs_cam @ pose.rotation.T  # world
        # broadcast rays (W) x triangles (M)
        pvec = np.cross(dirs[:, None, :], e2[None, :, :])
        det = np.einsum("mk,wmk->wm", e1, pvec)
        ok = np.abs(det) > 1e-12
        inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = origin[None, None, :] - v0[None, :, :]
        u = np.einsum("wmk,wmk->wm", tvec, pvec) * inv_det
        qvec = np.cross(tvec, e1[None, :, :])
        v = np.einsum("wmk,wmk->wm", dirs[:, None, :], qvec) * inv_det
        t = np.einsum("mk,wmk->wm", e2, qvec) * inv_det
        hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > near) & (t < far)
        t = np.where(hit, t, np.inf)
        out[py] = t.min(axis=1)
    return out


def raycast_single(mesh, origin, direction, near=0.0, far=np.inf):
    """Depth (t such that hit = origin + t*direction) of the nearest triangle
    along one ray; +inf if none. Direction need not be normalized."""
    tri = mesh.vertices[mesh.faces]
    v0, v1, v2 = tri[:, 0], tri[:, 1], tri[:, 2]
    e1, e2 = v1 - v0, v2 - v0
    pvec = np.cross(direction, e2)
    det = np.einsum("mk,mk->m", e1, pvec)
    ok = np.abs(det) > 1e-12
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origin - v0
    u = np.einsum("mk,mk->m", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1)
    v = np.einsum("k,mk->m", direction, qvec) * inv_det
    t = np.einsum("mk,mk->m", e2, qvec) * inv_det
    hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > near) & (t < far)
    return float(np.where(hit, t, np.inf).min()) if len(t) else float("inf")


def point_triangle_distance(p, a, b, c):
    """Exact distance from point to triangle, by region classification."""
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return float(np.linalg.norm(ap))
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return float(np.linalg.norm(bp))
    vc = d1 * d4 - d3 * d2
    if vc <= 0 <= d1 and d3 <= 0:
        t = d1 / (d1 - d3)
        return float(np.linalg.norm(p - (a + t * ab)))
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return float(np.linalg.norm(cp))
    vb = d5 * d2 - d1 * d6
    if vb <= 0 <= d2 and d6 <= 0:
        t = d2 / (d2 - d6)
        return float(np.linalg.norm(p - (a + t * ac)))
    va = d3 * d6 - d5 * d4
    if va <= 0 and d4 - d3 >= 0 and d5 - d6 >= 0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return float(np.linalg.norm(p - (b + t * (c - b))))
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return float(np.linalg.norm(p - (a + ab * v + ac * w)))


def distance_to_mesh(points, mesh):
    """Brute-force min point-triangle distance for each point."""
    tri = mesh.vertices[mesh.faces]
    out = np.empty(len(points))
    for i, p in enumerate(points):
        best = np.inf
        for a, b, c in tri:
            best = min(best, point_triangle_distance(p, a, b, c))
        out[i] = best
    return out


# ---------------------------------------------------------------------------
# Text metrics (naive reimplementations)


def naive_stem(word):
    for suffix in ("ing", "es", "ed", "ly", "s"):
        if word.endswith(suffix) and len(word) - len(suffix) >= 3:
            return word[: len(word) - len(suffix)]
    return word


def naive_ngram_counts(tokens, n):
    counts = {}
    for i in range(len(tokens) - n + 1):
        g = tuple(tokens[i:i + n])
        counts[g] = counts.get(g, 0) + 1
    return counts


def naive_bleu(cand_tokens, ref_token_lists, max_n):
    if not cand_tokens:
        return 0.0
    prod = 1.0
    for n in range(1, max_n + 1):
        c = naive_ngram_counts(cand_tokens, n)
        total = sum(c.values())
        if total == 0:
            return 0.0
        clipped = 0
        for g, cnt in c.items():
            m = 0
            for ref in ref_token_lists:
                m = max(m, naive_ngram_counts(ref, n).get(g, 0))
            clipped += min(cnt, m)
        if clipped == 0:
            return 0.0
        prod *= clipped / total
    geo = prod ** (1.0 / max_n)
    c_len = len(cand_tokens)
    best = None
    for ref in ref_token_lists:
        key = (abs(len(ref) - c_len), len(ref))
        if best is None or key < best[0]:
            best = (key, len(ref))
    r_len = best[1]
    bp = 1.0 if c_len >= r_len else math.exp(1 - r_len / c_len)
    return bp * geo


def naive_lcs(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def naive_rouge_l(cand_tokens, ref_token_lists, beta=1.2):
    best = 0.0
    for ref in ref_token_lists:
        lcs = naive_lcs(cand_tokens, ref)
        if lcs == 0 or not cand_tokens or not ref:
            continue
        p = lcs / len(cand_tokens)
        r = lcs / len(ref)
        f = (1 + beta * beta) * p * r / (r + beta * beta * p)
        best = max(best, f)
    return best


def naive_meteor(cand_tokens, ref_token_lists):
    best = 0.0
    for ref in ref_token_lists:
        if not cand_tokens or not ref:
            continue
        pairs = []
        used_c = set()
        used_r = set()
        for stage in ("exact", "stem"):
            for i, cw in enumerate(cand_tokens):
                if i in used_c:
                    continue
                ckey = cw if stage == "exact" else naive_stem(cw)
                for j, rw in enumerate(ref):
                    if j in used_r:
                        continue
                    rkey = rw if stage == "exact" else naive_stem(rw)
                    if ckey == rkey:
                        pairs.append((i, j))
                        used_c.add(i)
                        used_r.add(j)
                        break
        m = len(pairs)
        if m == 0:
            continue
        pairs.sort()
        chunks = 0
        prev = None
        for i, j in pairs:
            if prev is None or (i - prev[0], j - prev[1]) != (1, 1):
                chunks += 1
            prev = (i, j)
        p = m / len(cand_tokens)
        r = m / len(ref)
        f = 10 * p * r / (r + 9 * p)
        penalty = 0.5 * (chunks / m) ** 3
        best = max(best, f * (1 - penalty))
    return best


def naive_cider_d(cand_token_lists, ref_token_lists_per_item, sigma=6.0):
    """Explicit TF-IDF vector CIDEr-D; tokens must already be stemmed."""
    n_items = len(cand_token_lists)
    scores = []
    idf = {}
    for n in range(1, 5):
        df = {}
        for refs in ref_token_lists_per_item:
            grams = set()
            for ref in refs:
                grams.update(naive_ngram_counts(ref, n).keys())
            for g in grams:
                df[g] = df.get(g, 0) + 1
        for g, d in df.items():
            idf[g] = math.log(n_items / max(1, d))

    for cand, refs in zip(cand_token_lists, ref_token_lists_per_item):
        per_n = []
        for n in range(1, 5):
            cvec = {g: c * idf.get(g, 0.0)
                    for g, c in naive_ngram_counts(cand, n).items()}
            cnorm = math.sqrt(sum(v * v for v in cvec.values()))
            total = 0.0
            for ref in refs:
                rvec = {g: c * idf.get(g, 0.0)
                        for g, c in naive_ngram_counts(ref, n).items()}
                rnorm = math.sqrt(sum(v * v for v in rvec.values()))
                if cnorm == 0 or rnorm == 0:
                    continue
                num = 0.0
                for g, cv in cvec.items():
                    if g in rvec:
                        num += min(cv, rvec[g]) * rvec[g]
                delta = len(cand) - len(ref)
                total += num / (cnorm * rnorm) * math.exp(-(delta * delta) / (2 * sigma * sigma))
            per_n.append(total / len(refs))
        scores.append(10.0 * sum(per_n) / 4.0)
    return scores, sum(scores) / len(scores)
