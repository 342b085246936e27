"""Seeded nearest-neighbour random walks on DL(q_1, ..., q_d).

Each trial draws its steps from its own PCG64 stream derived from
``(seed, trial)``, so changing the number of trials never reshuffles
earlier trials. A step law is a distribution over typed moves
``(down, up, label)``; the simple random walk is the uniform one.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dl_graph import DLParams, DLVertex
from .tree_core import (OMEGA, BoundaryApproxPoint, TreeError, TreeVertex, distance,
                        ray_point)


class WalkError(ValueError):
    """Invalid walk configuration or step law."""


@dataclass(frozen=True)
class Move:
    down: int
    up: int
    label: int


@dataclass
class StepLaw:
    moves: list[Move]
    probs: np.ndarray

    @classmethod
    def srw(cls, params: DLParams) -> "StepLaw":
        moves = [Move(j, i, a) for i in range(params.d) for j in range(params.d) if i != j
                 for a in range(params.qs[j])]
        return cls(moves, np.full(len(moves), 1.0 / len(moves)))

    @classmethod
    def from_dict(cls, data: dict) -> "StepLaw":
        moves, probs = [], []
        for entry in data["moves"]:
            moves.append(Move(int(entry["down"]), int(entry["up"]), int(entry["label"])))
            probs.append(float(entry["p"]))
        return cls(moves, np.array(probs))

    def to_dict(self) -> dict:
        return {"moves": [{"down": m.down, "up": m.up, "label": m.label, "p": float(p)}
                          for m, p in zip(self.moves, self.probs)]}

    def validate(self, params: DLParams) -> None:
        if not self.moves:
            raise WalkError("a step law needs at least one move")
        for m in self.moves:
            if m.down == m.up or not (0 <= m.down < params.d and 0 <= m.up < params.d):
                raise WalkError(f"invalid move {m}")
            if not 0 <= m.label < params.qs[m.down]:
                raise WalkError(f"label {m.label} outside 0..{params.qs[m.down] - 1}")
        if len(set(self.moves)) != len(self.moves):
            raise WalkError("duplicate moves in the step law")
        if np.any(self.probs < 0) or abs(float(self.probs.sum()) - 1.0) > 1e-12:
            raise WalkError(f"step law masses must be >= 0 and sum to 1, got {self.probs.sum()!r}")

    def increments(self, d: int) -> np.ndarray:
        """Change of the Busemann vector for each move (rows)."""
        inc = np.zeros((len(self.moves), d), dtype=np.int64)
        for r, m in enumerate(self.moves):
            inc[r, m.down] += 1
            inc[r, m.up] -= 1
        return inc

    def drift(self, d: int) -> list[Fraction]:
        """Exact expected one-step change of each Busemann coordinate."""
        alpha = [Fraction(0)] * d
        for m, p in zip(self.moves, self.probs):
            w = Fraction(float(p))
            alpha[m.down] += w
            alpha[m.up] -= w
        return alpha


def srw_drift(qs: Sequence[int]) -> list[Fraction]:
    """Closed form ``d (q_j - mean q) / D`` for the simple random walk."""
    d, total = len(qs), sum(qs)
    D = (d - 1) * total
    return [Fraction(d * q - total, D) for q in qs]


@dataclass
class WalkConfig:
    params: DLParams
    steps: int
    trials: int = 1
    seed: int = 0
    law: StepLaw | None = None

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise WalkError("steps must be >= 0")
        if self.trials < 1:
            raise WalkError("trials must be >= 1")
        if self.law is None:
            self.law = StepLaw.srw(self.params)
        self.law.validate(self.params)

    @property
    def is_srw(self) -> bool:
        srw = StepLaw.srw(self.params)
        return self.law.moves == srw.moves and np.allclose(self.law.probs, srw.probs, rtol=0, atol=1e-15)

    def alpha(self) -> list[Fraction]:
        return srw_drift(self.params.qs) if self.is_srw else self.law.drift(self.params.d)

    def describe(self) -> dict:
        return {"q": list(self.params.qs), "steps": self.steps, "trials": self.trials,
                "seed": self.seed, "law": "srw" if self.is_srw else self.law.to_dict()}


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def draw_moves(config: WalkConfig, trial: int) -> np.ndarray:
    """Indices into ``config.law.moves`` for one trial."""
    rng = trial_rng(config.seed, trial)
    return rng.choice(len(config.law.moves), size=config.steps, p=config.law.probs)


# ---------------------------------------------------------------- full simulation

class _TreeWalker:
    """Mutable tree coordinate: level plus a label stack above an all-zero tail."""

    __slots__ = ("h", "stack")

    def __init__(self) -> None:
        self.h = 0
        self.stack: list[int] = []

    def down(self, label: int) -> None:
        self.stack.append(label)
        self.h += 1

    def up(self) -> None:
        if self.stack:
            self.stack.pop()
        self.h -= 1

    def vertex(self) -> TreeVertex:
        return TreeVertex(self.h, tuple(self.stack))


@dataclass
class TrialResult:
    trial: int
    final: DLVertex
    min_h: list[int]
    min_h_last_half: list[int]
    track: np.ndarray | None = None
    vertices: list[DLVertex] | None = None

    @property
    def hor(self) -> tuple[int, ...]:
        return self.final.hor


def simulate_trial(config: WalkConfig, trial: int, record: bool = False,
                   record_vertices: bool = False) -> TrialResult:
    d, n = config.params.d, config.steps
    walkers = [_TreeWalker() for _ in range(d)]
    min_h = [0] * d
    half = n // 2
    min_late = [0 if half == 0 else math.inf for _ in range(d)]
    track = np.zeros((n + 1, d), dtype=np.int64) if record else None
    vertices = [config.params.origin()] if record_vertices else None
    moves = config.law.moves
    for step, idx in enumerate(draw_moves(config, trial), start=1):
        m = moves[idx]
        walkers[m.down].down(m.label)
        walkers[m.up].up()
        for j in (m.down, m.up):
            h = walkers[j].h
            if h < min_h[j]:
                min_h[j] = h
        if step >= half:
            for j, w in enumerate(walkers):
                if w.h < min_late[j]:
                    min_late[j] = w.h
        if track is not None:
            track[step] = [w.h for w in walkers]
        if vertices is not None:
            vertices.append(DLVertex(tuple(w.vertex() for w in walkers)))
    final = DLVertex(tuple(w.vertex() for w in walkers))
    return TrialResult(trial, final, min_h, [int(x) for x in min_late], track, vertices)


def simulate(config: WalkConfig, record: bool = False) -> list[TrialResult]:
    return [simulate_trial(config, t, record) for t in range(config.trials)]


def tree_distance_proxy(x: DLVertex, y: DLVertex) -> int:
    """Sum of the coordinate tree distances; within constant factors of the DL metric."""
    return sum(distance(a, b) for a, b in zip(x.coords, y.coords))


def trials_csv(config: WalkConfig, results: Sequence[TrialResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    d = config.params.d
    writer.writerow(["trial"] + [f"h{j}" for j in range(d)] + [f"min_h{j}" for j in range(d)]
                    + ["distance_proxy", "final"])
    origin = config.params.origin()
    for r in results:
        writer.writerow([r.trial, *r.hor, *r.min_h, tree_distance_proxy(r.final, origin), r.final.text()])
    return buf.getvalue()


# ---------------------------------------------------------------- drift

@dataclass
class DriftReport:
    config: dict
    alpha: list[Fraction]
    mean: list[float]
    stderr: list[float]

    @property
    def alpha_sum(self) -> Fraction:
        return sum(self.alpha, Fraction(0))

    def z_scores(self) -> list[float]:
        return [(m - float(a)) / s if s > 0 else (0.0 if m == float(a) else math.inf)
                for m, a, s in zip(self.mean, self.alpha, self.stderr)]

    def within(self, k: float = 3.0) -> bool:
        return all(abs(z) <= k for z in self.z_scores())

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "alpha": [float(a) for a in self.alpha],
            "alpha_exact": [str(a) for a in self.alpha],
            "alpha_sum": str(self.alpha_sum),
            "mean": self.mean,
            "stderr": self.stderr,
            "z": self.z_scores(),
        }


def final_hor(config: WalkConfig) -> np.ndarray:
    """Busemann vectors after ``steps`` steps, one row per trial (same draws as ``simulate``)."""
    inc = config.law.increments(config.params.d)
    out = np.zeros((config.trials, config.params.d), dtype=np.int64)
    for t in range(config.trials):
        out[t] = inc[draw_moves(config, t)].sum(axis=0)
    return out


def drift(config: WalkConfig) -> DriftReport:
    if config.steps < 1:
        raise WalkError("drift needs at least one step")
    rates = final_hor(config) / config.steps
    mean = rates.mean(axis=0)
    if config.trials > 1:
        stderr = rates.std(axis=0, ddof=1) / math.sqrt(config.trials)
    else:
        stderr = np.full(config.params.d, math.nan)
    return DriftReport(config.describe(), config.alpha(), mean.tolist(), stderr.tolist())


# ---------------------------------------------------------------- boundary convergence

@dataclass
class CoordinateBoundary:
    alpha: float
    classification: str
    stabilized_fraction: float
    mean_final_rate: float
    mean_min_h: float


@dataclass
class BoundaryReport:
    config: dict
    level: int
    coordinates: list[CoordinateBoundary] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"config": self.config, "level": self.level,
                "coordinates": [c.__dict__ for c in self.coordinates]}


def is_stabilized(result: TrialResult, j: int, level: int) -> bool:
    """The ancestor on horocycle ``level`` stayed fixed over the last half.

    Changing that ancestor needs a visit to horocycle ``level - 1``, so this is
    the same as the coordinate staying on horocycles ``>= level``.
    """
    return result.min_h_last_half[j] >= level


def boundary_convergence(config: WalkConfig, level: int = 1) -> BoundaryReport:
    results = simulate(config)
    alpha = config.alpha()
    report = BoundaryReport(config.describe(), level)
    n = max(config.steps, 1)
    for j, a in enumerate(alpha):
        stabilized = [is_stabilized(r, j, level) for r in results]
        report.coordinates.append(CoordinateBoundary(
            alpha=float(a),
            classification="lower" if a > 0 else "omega",
            stabilized_fraction=float(np.mean(stabilized)),
            mean_final_rate=float(np.mean([r.hor[j] / n for r in results])),
            mean_min_h=float(np.mean([r.min_h[j] for r in results])),
        ))
    return report


# ---------------------------------------------------------------- ray approximation

def ray_levels(alpha: Sequence[float | Fraction], n: int, closing: int | None = None) -> list[int]:
    """``k_j = ceil(alpha_j n)`` except on the closing coordinate, which balances the sum."""
    d = len(alpha)
    closing = d - 1 if closing is None else closing
    k = [math.ceil(Fraction(a) * n) if isinstance(a, Fraction) else math.ceil(a * n) for a in alpha]
    k[closing] = 0
    k[closing] = -sum(k)
    return k


def ray_projection(boundary: Sequence[BoundaryApproxPoint], n: int, alpha: Sequence[float | Fraction],
                   closing: int | None = None) -> DLVertex:
    """The vertex with coordinates ``xi_j[k_j]``."""
    if len(boundary) != len(alpha):
        raise WalkError("one boundary point per coordinate is needed")
    k = ray_levels(alpha, n, closing)
    return DLVertex(tuple(ray_point(xi, kj) for xi, kj in zip(boundary, k)))


def ray_tracking(config: WalkConfig, checkpoints: Sequence[int], trial: int = 0) -> list[tuple[int, float]]:
    """``(n, proxy distance(Z_n, Pi_n(xi)) / n)`` with ``xi`` read off the final position.

    Coordinates with positive drift use the final vertex as the lower-boundary
    witness; the closing coordinate is one with non-positive drift.
    """
    alpha = config.alpha()
    closing = max(j for j, a in enumerate(alpha) if a <= 0)
    result = simulate_trial(config, trial, record_vertices=True)
    xi = [BoundaryApproxPoint("lower", result.final.coords[j]) if a > 0 and result.final.coords[j].h > 0
          else OMEGA for j, a in enumerate(alpha)]
    out = []
    for n in checkpoints:
        if not 0 < n <= config.steps:
            raise WalkError(f"checkpoint {n} outside 1..{config.steps}")
        try:
            target = ray_projection(xi, n, alpha, closing)
        except TreeError as exc:
            raise WalkError(f"boundary witness too shallow at n={n}: {exc}") from exc
        out.append((n, tree_distance_proxy(result.vertices[n], target) / n))
    return out


def report_json(report) -> str:
    return json.dumps(report.to_dict(), indent=2)
