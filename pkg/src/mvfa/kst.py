"""Desk-scale superposition decomposition.

A bivariate continuous function on the unit square is approximated as

    f(x1, x2)  ~=  sum over q = 0..2n of  Phi_q( sum over p of psi_{q,p}(x_p) )

with a fixed, function-independent family of strictly monotone inner maps
psi_{q,p} and numerically fitted outer functions Phi_q stored on uniform
knot grids with linear interpolation.  Exact continuous outer functions are
not computable from finite data; this module realizes the decomposition
operator numerically and its guarantees are the tested properties, not
proof-grade accuracy.

Inner family (the package's own documented choice): a truncated series

    psi(t) = sum for k = 1..K of 2**-k * t**(k/(k+1))

which is strictly increasing and continuous for t >= 0, evaluated at
t = x + q*eps with shift eps = 1/(2n+2), and scaled per coordinate by
rationally independent weights (1, sqrt(2), sqrt(3), ...).  The parameters
are recorded in every representation and never depend on the target
function.

Fitting is iterative residual correction: per iteration the current
residual is binned by inner-sum value for each q and a damped per-bin mean
correction is added to Phi_q.  The correction is shared equally across the
2n+1 outer functions (factor 2*damping/(2n+1), which is 1/(2n+1) at the
default damping of 0.5), so a constant function is absorbed exactly in one
iteration.  Corrections are fitted on a coarse bin grid and resampled onto
the storage knots to keep held-out reconstruction smooth.  A step that
would raise the max-norm training residual is halved until it does not
(kept unchanged in the worst case), so the recorded residual history is
non-increasing by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .expr_core import (
    BoxDomain,
    EvalDomainError,
    Expr,
    MvfaError,
    StructureError,
    evaluate,
)
from .structure_ops import compose_at, lift, normalize
from .expr_core import Const, Prim, Primitive

KST_FORMAT_VERSION = 1

DEFAULT_DEPTH = 10       # series truncation K
DEFAULT_KNOTS = 2 ** 12  # storage grid per outer function
DEFAULT_BINS = 64        # correction-fit nodes per iteration
DEFAULT_DAMPING = 0.5

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)


class FormatError(MvfaError):
    """Unreadable or version-mismatched representation document."""


def _psi_base(t: float, depth: int = DEFAULT_DEPTH) -> float:
    return sum(2.0 ** -k * t ** (k / (k + 1)) for k in range(1, depth + 1))


def inner_weight(p: int) -> float:
    if p == 1:
        return 1.0
    return math.sqrt(_PRIMES[p - 2])


def inner_shift(n: int) -> float:
    return 1.0 / (2 * n + 2)


def inner_params(n: int, depth: int = DEFAULT_DEPTH) -> dict:
    """The inner-family parameters; identical for every decomposed function."""
    return {
        "family": "dyadic-rational-series",
        "depth": depth,
        "shift": inner_shift(n),
        "weights": [inner_weight(p) for p in range(1, n + 1)],
        "dimension": n,
    }


def inner_psi(q: int, p: int, x: float, n: int = 2, depth: int = DEFAULT_DEPTH) -> float:
    """Value of the inner map psi_{q,p} at x in [0, 1].

    Strictly increasing in x, continuous, and independent of any target
    function.  Arguments outside the unit interval are a domain error:
    rescale the target first.
    """
    if not 0 <= q <= 2 * n:
        raise StructureError(f"q must lie in 0..{2 * n}, got {q}")
    if not 1 <= p <= n:
        raise StructureError(f"p must lie in 1..{n}, got {p}")
    if not 0.0 <= x <= 1.0:
        raise EvalDomainError(f"inner maps take arguments in [0, 1], got {x}; rescale first")
    return inner_weight(p) * _psi_base(x + q * inner_shift(n), depth)


@dataclass
class OuterFunction:
    """A sampled unary function on a uniform knot grid, linearly interpolated."""

    lo: float
    hi: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or len(self.values) < 2:
            raise StructureError("outer function needs at least two knots")
        self.knots = np.linspace(self.lo, self.hi, len(self.values))

    def __call__(self, s: float) -> float:
        return float(np.interp(s, self.knots, self.values))


class ClampCounter:
    """Counts inner sums that fell outside an outer function's knot range."""

    def __init__(self):
        self.count = 0

    def add(self):
        self.count += 1


@dataclass
class KstRep:
    """A fitted superposition representation.

    Exactly 2n+1 outer functions; `history[k]` is the max-norm training
    residual after k iterations (history[0] is the pre-fit residual).
    Treat instances as immutable once `decompose` has returned them.
    """

    dimension: int
    inner: dict
    outer: list[OuterFunction]
    iterations: int
    history: list[float]
    grid: int

    @property
    def residual(self) -> float:
        return self.history[-1]

    def to_dict(self) -> dict:
        return {
            "version": KST_FORMAT_VERSION,
            "dimension": self.dimension,
            "inner_params": self.inner,
            "outer": [
                {"lo": fn.lo, "hi": fn.hi, "values": fn.values.tolist()}
                for fn in self.outer
            ],
            "iterations": self.iterations,
            "history": list(self.history),
            "grid": self.grid,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KstRep":
        if not isinstance(doc, dict) or "version" not in doc:
            raise FormatError("not a superposition representation document")
        if doc["version"] != KST_FORMAT_VERSION:
            raise FormatError(
                f"unsupported representation version {doc['version']!r}, "
                f"expected {KST_FORMAT_VERSION}")
        try:
            outer = [OuterFunction(o["lo"], o["hi"], np.asarray(o["values"], dtype=float))
                     for o in doc["outer"]]
            rep = cls(
                dimension=int(doc["dimension"]),
                inner=dict(doc["inner_params"]),
                outer=outer,
                iterations=int(doc["iterations"]),
                history=[float(h) for h in doc["history"]],
                grid=int(doc.get("grid", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed representation document: {exc}") from exc
        if len(rep.outer) != 2 * rep.dimension + 1:
            raise FormatError("document does not carry 2n+1 outer functions")
        expected = inner_params(rep.dimension, int(rep.inner.get("depth", DEFAULT_DEPTH)))
        if rep.inner != expected:
            raise FormatError("inner parameters do not match the fixed family")
        return rep

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "KstRep":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot read representation file: {exc}") from exc
        return cls.from_dict(doc)


def _inner_sum(q: int, point, n: int, depth: int) -> float:
    return sum(inner_psi(q, p, point[p - 1], n, depth) for p in range(1, n + 1))


def decompose(f: Expr, grid: int = 33, iters: int = 50, *,
              knots: int = DEFAULT_KNOTS, bins: int = DEFAULT_BINS,
              damping: float = DEFAULT_DAMPING,
              depth: int = DEFAULT_DEPTH) -> KstRep:
    """Fit outer functions for `f` on the unit square.

    `f` must be a bivariate expression evaluable on [0, 1]^2.  Training uses
    a uniform grid x grid sample; each iteration bins the current residual
    by inner-sum value for every q and adds the damped per-bin mean
    correction (equally shared across the 2n+1 outer functions) to Phi_q.
    With iters = 0 the outer functions are identically zero and the recorded
    residual equals max|f| on the grid.
    """
    n = f.arity
    if n != 2:
        raise StructureError(f"decomposition is implemented for arity 2, got {n}")
    if grid < 2:
        raise StructureError("training grid needs at least 2 points per axis")
    if iters < 0:
        raise StructureError("iteration count must be nonnegative")
    if bins < 2 or knots < 2:
        raise StructureError("bin and knot counts must be at least 2")

    q_count = 2 * n + 1
    axis = np.linspace(0.0, 1.0, grid)
    points = [(float(x1), float(x2)) for x1 in axis for x2 in axis]
    F = np.array([evaluate(f, pt) for pt in points])

    S = np.empty((q_count, len(points)))
    for q in range(q_count):
        S[q] = [_inner_sum(q, pt, n, depth) for pt in points]

    # Exact inner-sum range over the unit box: the maps are increasing, so
    # the extremes sit at the all-zero and all-one corners.
    los = np.array([_inner_sum(q, (0.0,) * n, n, depth) for q in range(q_count)])
    his = np.array([_inner_sum(q, (1.0,) * n, n, depth) for q in range(q_count)])

    knot_xs = [np.linspace(los[q], his[q], knots) for q in range(q_count)]
    node_xs = [np.linspace(los[q], his[q], bins) for q in range(q_count)]
    phi = [np.zeros(knots) for _ in range(q_count)]
    share = 2.0 * damping / q_count

    def recon() -> np.ndarray:
        total = np.zeros(len(points))
        for q in range(q_count):
            total += np.interp(S[q], knot_xs[q], phi[q])
        return total

    history = [float(np.max(np.abs(F)))]
    for _ in range(iters):
        R = F - recon()
        current = float(np.max(np.abs(R)))
        deltas = []
        for q in range(q_count):
            width = his[q] - los[q]
            t = (S[q] - los[q]) / width * (bins - 1)
            k = np.clip(np.floor(t).astype(int), 0, bins - 2)
            w = t - k
            num = (np.bincount(k, weights=R * (1.0 - w), minlength=bins)
                   + np.bincount(k + 1, weights=R * w, minlength=bins))
            den = (np.bincount(k, weights=1.0 - w, minlength=bins)
                   + np.bincount(k + 1, weights=w, minlength=bins))
            hit = den > 1e-12
            corr = np.zeros(bins)
            corr[hit] = num[hit] / den[hit]
            if not hit.all():
                corr = np.interp(node_xs[q], node_xs[q][hit], corr[hit])
            deltas.append(share * np.interp(knot_xs[q], node_xs[q], corr))
        # accept the largest halving of the step that does not raise the
        # max-norm residual; keep Phi unchanged if none does
        scale = 1.0
        accepted = current
        while scale > 2.0 ** -24:
            trial = np.zeros(len(points))
            for q in range(q_count):
                trial += np.interp(S[q], knot_xs[q], phi[q] + scale * deltas[q])
            trial_max = float(np.max(np.abs(F - trial)))
            if trial_max <= current:
                for q in range(q_count):
                    phi[q] += scale * deltas[q]
                accepted = trial_max
                break
            scale *= 0.5
        history.append(accepted)

    outer = [OuterFunction(float(los[q]), float(his[q]), phi[q]) for q in range(q_count)]
    return KstRep(dimension=n, inner=inner_params(n, depth), outer=outer,
                  iterations=iters, history=history, grid=grid)


def reconstruct(rep: KstRep, point, warnings: ClampCounter | None = None) -> float:
    """Evaluate the superposition at a point of the unit box.

    Inner sums falling outside an outer function's knot range are clamped to
    the nearest knot; each clamp is counted on `warnings` when supplied.
    """
    n = rep.dimension
    if len(point) != n:
        raise StructureError(f"point has {len(point)} coordinates, expected {n}")
    pt = [float(v) for v in point]
    for v in pt:
        if not 0.0 <= v <= 1.0:
            raise EvalDomainError(f"reconstruction point must lie in the unit box, got {pt}")
    depth = int(rep.inner["depth"])
    total = 0.0
    for q in range(2 * n + 1):
        s = _inner_sum(q, pt, n, depth)
        fn = rep.outer[q]
        if s < fn.lo or s > fn.hi:
            s = min(max(s, fn.lo), fn.hi)
            if warnings is not None:
                warnings.add()
        total += fn(s)
    return total


def _affine_slot(n: int, k: int, scale: float, offset: float) -> Expr:
    """An n-ary expression using only slot k: offset + scale * x_k."""
    if n >= 2:
        spare = 1 if k != 1 else 2
        scaled = compose_at(lift(Prim(Primitive.MUL), n, (spare, k)), spare, Const(scale))
        return compose_at(
            compose_at(lift(Prim(Primitive.ADD), n, (spare, k)), spare, Const(offset)),
            k, scaled)
    scaled = compose_at(lift(Prim(Primitive.MUL), 2, (1, 2)), 1, Const(scale))
    shifted = compose_at(
        compose_at(lift(Prim(Primitive.ADD), 2, (1, 2)), 1, Const(offset)), 2, scaled)
    out, _ = normalize(shifted)
    return out


def rescale(f: Expr, box: BoxDomain) -> Expr:
    """Pre-compose `f` with the affine map sending [0,1]^n onto `box`."""
    n = f.arity
    if box.dim != n:
        raise StructureError(f"box has {box.dim} axes, function has arity {n}")
    out = f
    for k in range(1, n + 1):
        lo, hi = box.axis(k)
        if hi == lo:
            raise StructureError(f"axis {k} of the box has zero width")
        out = compose_at(out, k, _affine_slot(n, k, hi - lo, lo))
    return out
