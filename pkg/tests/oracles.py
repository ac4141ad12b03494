"""Independent brute-force oracles used to cross-check the library.

Everything here is deliberately naive (flood fill, permutation search,
pixel-set overlap, max() envelopes) and works on plain tuples and dicts so
the oracle path shares no code with the implementations under test.
"""

from __future__ import annotations

import math
from collections import deque
from functools import lru_cache
from itertools import permutations


# ---------------------------------------------------------------------------
# Connected components by explicit flood fill.

def flood_fill_components(foreground: set[tuple[int, int]], connectivity: int):
    """Partition a set of (row, col) pixels into connected components.

    Components are returned in raster-scan order of their first pixel,
    each as a sorted list of (row, col) pixels.
    """
    if connectivity == 4:
        offsets = [(-1, 0), (0, -1), (0, 1), (1, 0)]
    elif connectivity == 8:
        offsets = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    else:
        raise ValueError(connectivity)
    seen: set[tuple[int, int]] = set()
    components = []
    for pixel in sorted(foreground):  # (row, col) sort = raster order
        if pixel in seen:
            continue
        queue = deque([pixel])
        seen.add(pixel)
        members = []
        while queue:
            r, c = queue.popleft()
            members.append((r, c))
            for dr, dc in offsets:
                nb = (r + dr, c + dc)
                if nb in foreground and nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        components.append(sorted(members))
    return components


# ---------------------------------------------------------------------------
# Assignment by exhaustive permutation search.

def brute_force_assignment(costs):
    """Minimum total cost over all one-to-one assignments of size min(r, c).

    Returns (best_cost, best_pairs) where ties prefer the lexicographically
    smallest pair list. Only feasible for tiny matrices.
    """
    n_rows, n_cols = len(costs), len(costs[0])
    best_cost = None
    best_pairs = None
    if n_rows <= n_cols:
        for cols in permutations(range(n_cols), n_rows):
            pairs = tuple((i, j) for i, j in enumerate(cols))
            total = math.fsum(costs[i][j] for i, j in pairs)
            if best_cost is None or total < best_cost or (total == best_cost and pairs < best_pairs):
                best_cost, best_pairs = total, pairs
    else:
        for rows in permutations(range(n_rows), n_cols):
            pairs = tuple(sorted((i, j) for j, i in enumerate(rows)))
            total = math.fsum(costs[i][j] for i, j in pairs)
            if best_cost is None or total < best_cost or (total == best_cost and pairs < best_pairs):
                best_cost, best_pairs = total, pairs
    return best_cost, best_pairs


# ---------------------------------------------------------------------------
# Detection evaluation from first principles.
#
# Boxes are integer pixel boxes (xmin, ymin, xmax, ymax), inclusive edges.
# Ground truths: {image_id: {class_id: [box, ...]}}.
# Detections: list of (image_id, class_id, box, score) in ingestion order.

@lru_cache(maxsize=65536)
def pixel_set(box):
    xmin, ymin, xmax, ymax = box
    return frozenset((x, y) for x in range(xmin, xmax + 1) for y in range(ymin, ymax + 1))


def pixel_iou(a, b) -> float:
    sa, sb = pixel_set(a), pixel_set(b)
    union = len(sa | sb)
    if union == 0:
        return 0.0
    return len(sa & sb) / union


def _match_one_image(dets, gts, threshold):
    """Greedy score-ordered matching for one image and class.

    dets: list of (score, ingest_index, box), already sorted and capped.
    Returns (flags, matched_gt_count) where flags[i] is True for a TP.
    """
    matched = [False] * len(gts)
    flags = []
    for _score, _idx, box in dets:
        best_iou = -1.0
        best_gt = -1
        for g, gt_box in enumerate(gts):
            if matched[g]:
                continue
            overlap = pixel_iou(box, gt_box)
            if overlap >= threshold and overlap > best_iou:
                best_iou = overlap
                best_gt = g
        if best_gt >= 0:
            matched[best_gt] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags, sum(matched)


def ap_from_flags(flags, n_gt, mode):
    """AP of a ranked TP/FP flag list against n_gt ground truths."""
    if n_gt == 0:
        return None
    recalls, precisions = [], []
    tp = 0
    for k, flag in enumerate(flags, start=1):
        if flag:
            tp += 1
        recalls.append(tp / n_gt)
        precisions.append(tp / k)
    if not recalls:
        return 0.0
    envelope = [max(precisions[i:]) for i in range(len(precisions))]
    if mode == "exact-integral":
        terms = []
        prev_r = 0.0
        for r, p in zip(recalls, envelope):
            terms.append((r - prev_r) * p)
            prev_r = r
        return math.fsum(terms)
    if mode == "interpolated-101":
        samples = []
        for s in range(101):
            want = s / 100
            value = 0.0
            for r, p in zip(recalls, envelope):
                if r >= want:
                    value = p
                    break
            samples.append(value)
        return math.fsum(samples) / 101
    raise ValueError(mode)


def brute_force_evaluate(gts, dets, class_ids, thresholds, max_dets, mode):
    """Full per-class AP/AR evaluation, the slow way.

    Returns {class_id: {"ap": .., "ap_by_thr": {t: ..}, "ar": .., "n_gt": n}}
    plus aggregate keys "map" and "mar" (means over classes with ground
    truths; None when no class has any).
    """
    per_class = {}
    for cid in class_ids:
        n_gt = sum(len(per_img.get(cid, [])) for per_img in gts.values())
        image_ids = sorted(gts.keys())
        # per-image capped, score-ordered detection lists for this class
        dets_by_image = {}
        for img in image_ids:
            img_dets = [
                (score, idx, box)
                for idx, (det_img, det_cid, box, score) in enumerate(dets)
                if det_img == img and det_cid == cid
            ]
            img_dets.sort(key=lambda t: (-t[0], t[1]))
            dets_by_image[img] = img_dets[:max_dets]

        ap_by_thr = {}
        recall_by_thr = {}
        for t in thresholds:
            pooled = []  # (score, ingest_index, tp_flag)
            matched_total = 0
            for img in image_ids:
                flags, matched = _match_one_image(dets_by_image[img], gts[img].get(cid, []), t)
                matched_total += matched
                for (score, idx, _box), flag in zip(dets_by_image[img], flags):
                    pooled.append((score, idx, flag))
            pooled.sort(key=lambda rec: (-rec[0], rec[1]))
            flags = [flag for _s, _i, flag in pooled]
            ap_by_thr[t] = ap_from_flags(flags, n_gt, mode)
            recall_by_thr[t] = (matched_total / n_gt) if n_gt else None
        if n_gt:
            ap = math.fsum(ap_by_thr[t] for t in thresholds) / len(thresholds)
            ar = math.fsum(recall_by_thr[t] for t in thresholds) / len(thresholds)
        else:
            ap = ar = None
        per_class[cid] = {"ap": ap, "ap_by_thr": ap_by_thr, "ar": ar, "n_gt": n_gt}

    live = [cid for cid in class_ids if per_class[cid]["n_gt"] > 0]
    result = dict(per_class)
    result["map"] = math.fsum(per_class[c]["ap"] for c in live) / len(live) if live else None
    result["mar"] = math.fsum(per_class[c]["ar"] for c in live) / len(live) if live else None
    return result
