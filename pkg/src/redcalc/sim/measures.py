"""Exact trajectory measurements: curve compliance, reordering, FIFO checks."""

from fractions import Fraction
from typing import Optional

from ..minplus import ConcaveCurve, parse_rational


def check_compliance(events, curve: ConcaveCurve) -> Optional[dict]:
    """Earliest window where a timed size sequence exceeds its arrival curve.

    ``events`` is an iterable of (time, size) pairs.  A window [s, t] is
    compliant when the total size of units with s <= time <= t is at most
    curve.envelope(t - s).  Returns None if every window complies, otherwise
    a dict naming the first offending window end.
    """
    pts = sorted((parse_rational(t), parse_rational(sz)) for t, sz in events)
    if not pts:
        return None
    prefix = [Fraction(0)]
    for _, sz in pts:
        prefix.append(prefix[-1] + sz)
    for seg in curve.segments:
        # need (C_j - r*t_j) - min_{i<=j} (C_{i-1} - r*t_i) <= b for all j
        best = None
        best_idx = 0
        for j, (t_j, _sz) in enumerate(pts):
            v = prefix[j] - seg.rate * t_j
            if best is None or v < best:
                best, best_idx = v, j
            excess = (prefix[j + 1] - seg.rate * t_j) - best
            if excess > seg.burst:
                s_t = pts[best_idx][0]
                return {
                    "window_start": s_t,
                    "window_end": t_j,
                    "observed": prefix[j + 1] - prefix[best_idx],
                    "allowed": curve.envelope(t_j - s_t),
                }
    return None


class _Fenwick:
    def __init__(self, n: int):
        self.tree = [Fraction(0)] * (n + 1)

    def add(self, i: int, value: Fraction):
        i += 1
        while i < len(self.tree):
            self.tree[i] += value
            i += i & (-i)

    def prefix(self, i: int) -> Fraction:
        # sum of positions [0, i)
        total = Fraction(0)
        while i > 0:
            total += self.tree[i]
            i -= i & (-i)
        return total


def measure_reordering(units) -> tuple:
    """(time offset, byte offset) of a received sequence.

    ``units`` is an iterable of (rank, time, size) for the units that actually
    arrived, where rank is the source emission order.  The time offset is the
    longest wait between a unit's arrival and the arrival of a later-ranked
    unit that overtook it; the byte offset is the largest volume of
    later-ranked data already present when a unit arrives.
    """
    items = sorted(
        ((int(r), parse_rational(t), parse_rational(sz)) for r, t, sz in units),
        key=lambda it: it[0],
    )
    if len(items) < 2:
        return Fraction(0), Fraction(0)

    times = [t for _r, t, _sz in items]
    rto = Fraction(0)
    suffix_min = times[-1]
    for k in range(len(items) - 2, -1, -1):
        rto = max(rto, times[k] - suffix_min)
        suffix_min = min(suffix_min, times[k])

    order = {t: i for i, t in enumerate(sorted(set(times)))}
    tree = _Fenwick(len(order))
    rbo = Fraction(0)
    for rank in range(len(items) - 1, -1, -1):
        _r, t, sz = items[rank]
        rbo = max(rbo, tree.prefix(order[t]))  # strictly earlier arrivals only
        tree.add(order[t], sz)
    return rto, rbo


def is_fifo_per_flow(trace, kind: str) -> bool:
    """True when, within each flow, units cross ``kind`` in source order."""
    order = {}
    for i, u in enumerate(sorted(trace.scenario.sources, key=lambda s: s.time)):
        order[u.key] = i
    stamped = {}
    for e in trace.of_kind(kind):
        stamped.setdefault(e.flow, []).append((order[(e.flow, e.unit)], e.time))
    for seq in stamped.values():
        seq.sort()
        last = None
        for _rank, t in seq:
            if last is not None and t < last:
                return False
            last = t
    return True
