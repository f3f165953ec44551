"""Trajectory containers and on-disk formats shared by both dynamics."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import (SEG_REGULAR, SEG_SLIDING, STATUS_BUDGET,
                       STATUS_CONVERGED, STATUS_DEGENERATE, STATUS_HORIZON,
                       STATUS_UNDERFLOW)
from .errors import SimplexError

STATUS_NAMES = {
    STATUS_CONVERGED: "converged",
    STATUS_HORIZON: "horizon",
    STATUS_UNDERFLOW: "underflow",
    STATUS_DEGENERATE: "degenerate",
    STATUS_BUDGET: "budget",
}


@dataclass(frozen=True)
class BrdEvent:
    """A best-response change at time ``t``, state ``x``.

    ``kind`` is one of "crossing", "sliding-start", "sliding-end",
    "arrival". ``pair`` names the strategies whose payoffs tie (empty
    for arrival events).
    """

    t: float
    x: np.ndarray
    kind: str
    pair: tuple[int, ...] = ()


@dataclass(frozen=True)
class BrdSegment:
    """One exact arc x(t) = target + exp(-(t - t0)) * (x0 - target)."""

    t0: float
    t1: float
    x0: np.ndarray
    target: np.ndarray
    kind: str  # "regular" or "sliding"
    pair: tuple[int, ...]

    def at(self, t: float) -> np.ndarray:
        f = np.exp(-(t - self.t0))
        return self.target + f * (self.x0 - self.target)


@dataclass
class Trajectory:
    """A computed orbit of either dynamic.

    ``times``/``states`` sample the orbit (dense accepted steps for the
    smooth dynamic, segment breakpoints for the piecewise one). ``status``
    is a short string, ``terminal_index`` the row of the matched rest
    point in the equilibrium list used for the run, or -1.
    """

    dynamic: str
    times: np.ndarray
    states: np.ndarray
    status: str
    terminal_index: int = -1
    terminal_label: str = ""
    events: list[BrdEvent] = field(default_factory=list)
    segments: list[BrdSegment] = field(default_factory=list)

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def at(self, t: float) -> np.ndarray:
        """State at time ``t``.

        Exact for the piecewise dynamic (evaluates the enclosing
        segment), linear interpolation between stored samples otherwise.
        """
        t = float(t)
        if t < self.times[0] or t > self.times[-1]:
            raise SimplexError(f"t={t} outside computed range "
                               f"[{self.times[0]}, {self.times[-1]}]")
        if self.segments:
            for seg in self.segments:
                if seg.t0 <= t <= seg.t1:
                    return seg.at(t)
            return self.states[-1].copy()
        i = int(np.searchsorted(self.times, t))
        if i < len(self.times) and self.times[i] == t:
            return self.states[i].copy()
        t0, t1 = self.times[i - 1], self.times[i]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.states[i - 1] + w * self.states[i]

    def to_csv(self, path: str | Path) -> Path:
        """Write times and states as CSV plus a JSON sidecar.

        The CSV has columns t, x1..xn; the sidecar (same stem, .json)
        records dynamic, status, terminal state and label, and event
        times for the piecewise dynamic.
        """
        path = Path(path)
        n = self.states.shape[1]
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x{i + 1}" for i in range(n)])
            for t, row in zip(self.times, self.states):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        sidecar = {
            "dynamic": self.dynamic,
            "status": self.status,
            "t_end": self.t_end,
            "terminal": [float(v) for v in self.terminal],
            "terminal_index": self.terminal_index,
            "terminal_label": self.terminal_label,
            "events": [
                {"t": ev.t, "kind": ev.kind, "pair": list(ev.pair),
                 "x": [float(v) for v in ev.x]}
                for ev in self.events
            ],
        }
        side_path = path.with_suffix(".json")
        side_path.write_text(json.dumps(sidecar, indent=2) + "\n")
        return path


def segments_from_arrays(seg_t, seg_x, seg_tgt, seg_pair, seg_kind, nseg,
                         t_end) -> list[BrdSegment]:
    """Build segment objects from the raw kernel recording arrays."""
    out: list[BrdSegment] = []
    for r in range(nseg):
        t1 = seg_t[r + 1] if r + 1 <= nseg else t_end
        kind = "sliding" if seg_kind[r] == SEG_SLIDING else "regular"
        if seg_kind[r] == SEG_REGULAR:
            pair = (int(seg_pair[r, 0]),)
        else:
            pair = (int(seg_pair[r, 0]), int(seg_pair[r, 1]))
        out.append(BrdSegment(t0=float(seg_t[r]), t1=float(t1),
                              x0=seg_x[r].copy(), target=seg_tgt[r].copy(),
                              kind=kind, pair=pair))
    return out


def events_from_segments(segments: list[BrdSegment], status: str,
                         terminal: np.ndarray, t_end: float) -> list[BrdEvent]:
    """Derive the event list (regime changes, slide boundaries, arrival)."""
    events: list[BrdEvent] = []
    for prev, cur in zip(segments, segments[1:]):
        if cur.kind == "sliding" and prev.kind != "sliding":
            kind = "sliding-start"
            pair = cur.pair
        elif cur.kind != "sliding" and prev.kind == "sliding":
            kind = "sliding-end"
            pair = prev.pair
        else:
            kind = "crossing"
            pair = tuple(sorted(set(prev.pair) | set(cur.pair)))
        events.append(BrdEvent(t=cur.t0, x=cur.x0.copy(), kind=kind, pair=pair))
    if segments and segments[0].kind == "sliding":
        events.insert(0, BrdEvent(t=segments[0].t0, x=segments[0].x0.copy(),
                                  kind="sliding-start", pair=segments[0].pair))
    if status == "converged":
        events.append(BrdEvent(t=t_end, x=terminal.copy(), kind="arrival"))
    return events
