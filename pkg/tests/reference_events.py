"""Literal per-frame event extraction used as an independent oracle.

Every condition is checked by slicing plain Python lists; nothing here is
shared with the production extractor except the seeded subsampling helper.
"""
from __future__ import annotations

from vapkit.events import EventParams, subsample


def _f(seconds, fps):
    return int(round(seconds * fps))


def reference_events(tl, p: EventParams | None = None, horizon: int = 200, seed=0) -> dict:
    p = p or EventParams()
    fps = tl.rate.frames_per_second
    x = {"A": [int(v) for v in tl.frames_a], "B": [int(v) for v in tl.frames_b]}
    other = {"A": "B", "B": "A"}
    n = len(x["A"])
    pre, post = _f(p.pre_offset_s, fps), _f(p.post_onset_s, fps)
    delay, dur = _f(p.sh_eval_delay_s, fps), _f(p.sh_eval_dur_s, fps)
    region, gap = _f(p.pred_region_s, fps), _f(p.neg_min_gap_s, fps)
    bc_max, bc_pre, bc_post = _f(p.bc_max_dur_s, fps), _f(p.bc_pre_silence_s, fps), _f(p.bc_post_silence_s, fps)
    sl, ctx = _f(p.sl_onset_dur_s, fps), _f(p.min_context_s, fps)

    def usable(s, e):
        return s >= ctx and e <= n - horizon + 1

    def sole(lo, hi):
        who = [s for s in "AB" if any(x[s][lo:hi])]
        return who[0] if len(who) == 1 else None

    # mutual silences by frame scan
    silences = []
    f = 0
    while f < n:
        if x["A"][f] == 0 and x["B"][f] == 0:
            g = f
            while g < n and x["A"][g] == 0 and x["B"][g] == 0:
                g += 1
            silences.append((f, g))
            f = g
        else:
            f += 1

    qualified = []
    for s0, s1 in silences:
        if s0 - pre < 0 or s1 + post > n:
            continue
        a, b = sole(s0 - pre, s0), sole(s1, s1 + post)
        if a is None or b is None or s0 + delay + dur > s1:
            continue
        qualified.append((s0, s1, a, b))

    out = {"SH": [], "SPred": [], "BCPred": [], "SL": []}
    for s0, s1, a, b in qualified:
        if usable(s0 + delay, s0 + delay + dur):
            out["SH"].append(("SHIFT" if a != b else "HOLD", s0 + delay, s0 + delay + dur, a))

    pos = []
    for s0, s1, a, b in qualified:
        if a == b:
            continue
        k = s0
        while k > 0 and x[a][k - 1] == 1:
            k -= 1
        if s0 - k >= region and usable(s0 - region, s0):
            pos.append(("positive", s0 - region, s0, a))
    cands = []
    start = 0
    while start + region + gap <= n:
        end = start + region
        for s in "AB":
            if all(x[s][start:end]) and not any(x[other[s]][start : end + gap]):
                if usable(start, end) and not any(start < pe and ps < end for _, ps, pe, _ in pos):
                    cands.append(("negative", start, end, s))
                break
        start += region
    out["SPred"] = pos + subsample(cands, len(pos), [seed, 1])

    bcs = []
    for f in range(n):
        for s in "AB":
            if x[s][f] == 1 and (f == 0 or x[s][f - 1] == 0):
                g = f
                while g < n and x[s][g] == 1:
                    g += 1
                if g - f > bc_max or f - bc_pre < 0 or g + bc_post > n:
                    continue
                if any(x[s][f - bc_pre : f]) or any(x[s][g : g + bc_post]):
                    continue
                if not any(x[other[s]][f - bc_pre : f]):
                    continue
                bcs.append((s, f, g))

    bpos = [("positive", f - region, f, other[s]) for s, f, g in bcs if usable(f - region, f)]
    cands = []
    start = 0
    while start + region + gap <= n:
        end = start + region
        k = end - 1
        while k >= 0 and x["A"][k] == 0 and x["B"][k] == 0:
            k -= 1
        if k >= 0 and not (x["A"][k] and x["B"][k]):
            c = "A" if x["A"][k] else "B"
            if not any(x[other[c]][start : end + gap]):
                if usable(start, end) and not any(start < pe and ps < end for _, ps, pe, _ in bpos):
                    cands.append(("negative", start, end, c))
        start += region
    out["BCPred"] = bpos + subsample(cands, len(bpos), [seed, 2])

    for s, f, g in bcs:
        if usable(f, f + sl):
            out["SL"].append(("SHORT", f, f + sl, other[s]))
    for s0, s1, a, b in qualified:
        if a != b and usable(s1, s1 + sl):
            out["SL"].append(("LONG", s1, s1 + sl, a))
    return {k: sorted(v) for k, v in out.items()}


def production_as_reference(es) -> dict:
    out = {"SH": [], "SPred": [], "BCPred": [], "SL": []}
    for e in es.instances:
        out[e.task.value].append((e.label, e.eval_start, e.eval_end, e.context_speaker.value))
    return {k: sorted(v) for k, v in out.items()}
