"""Expression trees for multivariate real functions.

An expression is an immutable tree of function-valued nodes: arithmetic
primitives, constants, and structural operators (arity lift, positional
composition, oblique projection, partial inverse).  Every node derives its
arity and the set of slots that can affect its value; evaluation is pure and
never reads a slot outside that set, so partially-applied functions keep
stable slot numbering until they are explicitly compacted.

Slot indices are 1-based everywhere.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

# Absolute comparison tolerance used when nothing tighter is requested.
DEFAULT_TOL = 1e-9


class MvfaError(Exception):
    """Base class for every error raised by this package."""


class StructureError(MvfaError):
    """Malformed expression tree: bad arity, slot out of range, duplicates."""


class ConfigError(MvfaError):
    """Invalid or incomplete configuration (missing parameter, domain, ...)."""


class EvalError(MvfaError):
    """Evaluation failed; carries the offending node and point."""

    def __init__(self, message: str, node=None, point=None):
        super().__init__(message)
        self.node = node
        self.point = tuple(point) if point is not None else None


class EvalDomainError(EvalError):
    """A primitive was applied outside its real domain."""


class NoSolutionError(EvalError):
    """An inverse node found no preimage in its search interval."""


class Primitive(Enum):
    """The built-in pointwise operations.

    ADD(x,y)=x+y, MUL=x*y, DIV=x/y, POW=x**y, ROOT(x,y)=x**(1/y),
    LOG(x,y)=log of x in base y, IDENTITY(x)=x.  ROOT is single-valued real:
    it requires x >= 0 and y != 0 (negative-base odd roots are excluded).
    """

    ADD = "add"
    MUL = "mul"
    DIV = "div"
    POW = "pow"
    ROOT = "root"
    LOG = "log"
    IDENTITY = "e"

    @property
    def arity(self) -> int:
        return 1 if self is Primitive.IDENTITY else 2


@dataclass(frozen=True)
class Expr:
    """Abstract base node.  Subclasses populate arity and used slots."""

    def __post_init__(self):  # pragma: no cover - abstract
        raise TypeError("Expr is abstract; construct a concrete node")

    @property
    def arity(self) -> int:
        return self._arity

    @property
    def used_slots(self) -> frozenset[int]:
        """Slots whose value can affect evaluation (syntactic occurrence)."""
        return self._used

    def __call__(self, *point: float) -> float:
        return evaluate(self, point)

    def _derive(self, arity: int, used) -> None:
        object.__setattr__(self, "_arity", arity)
        object.__setattr__(self, "_used", frozenset(used))


@dataclass(frozen=True)
class Const(Expr):
    """A real constant; a function of no variables."""

    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        self._derive(0, ())


@dataclass(frozen=True)
class Prim(Expr):
    """A primitive operation used as a bare function of its own arity."""

    op: Primitive

    def __post_init__(self):
        if not isinstance(self.op, Primitive):
            raise StructureError(f"not a primitive: {self.op!r}")
        self._derive(self.op.arity, range(1, self.op.arity + 1))


@dataclass(frozen=True)
class Var(Expr):
    """Pointful reference to one slot; only frontend-built trees carry it.

    Structural (point-free) compilation output never contains Var nodes:
    slot routing is expressed through Lift positions instead.
    """

    slot: int

    def __post_init__(self):
        if not isinstance(self.slot, int) or self.slot < 1:
            raise StructureError(f"variable slot must be a positive integer, got {self.slot!r}")
        self._derive(self.slot, (self.slot,))


@dataclass(frozen=True)
class Lift(Expr):
    """Embed an m-ary function at arity n, routing variable k to slot positions[k-1]."""

    inner: Expr
    target_arity: int
    positions: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(int(p) for p in self.positions))
        m = self.inner.arity
        n = self.target_arity
        if not isinstance(n, int) or n < 0:
            raise StructureError(f"lift target arity must be a nonnegative integer, got {n!r}")
        if m > n:
            raise StructureError(f"cannot lift arity {m} down to arity {n}")
        if len(self.positions) != m:
            raise StructureError(
                f"lift needs one position per inner variable: got {len(self.positions)} for arity {m}")
        if len(set(self.positions)) != len(self.positions):
            raise StructureError(f"lift positions must be distinct, got {self.positions}")
        if any(p < 1 or p > n for p in self.positions):
            raise StructureError(f"lift position out of range 1..{n}: {self.positions}")
        self._derive(n, (self.positions[k - 1] for k in self.inner.used_slots))


@dataclass(frozen=True)
class Compose(Expr):
    """Positional composition: f with slot `slot` fed by the value of g.

    f and g must share an arity; a nullary operand embeds at any arity
    (a constant is a special n-ary function lacking every variable).  When
    `slot` is not used by f, no replacement happens and the result behaves
    exactly as f; g is then never evaluated.
    """

    f: Expr
    slot: int
    g: Expr

    def __post_init__(self):
        nf, ng = self.f.arity, self.g.arity
        n = max(nf, ng)
        if n == 0:
            raise StructureError("cannot compose two nullary expressions")
        if nf not in (0, n) or ng not in (0, n):
            raise StructureError(
                f"composition operands must share arity or be nullary; got {nf} and {ng} (lift first)")
        if not isinstance(self.slot, int) or not 1 <= self.slot <= n:
            raise StructureError(f"composition slot {self.slot!r} out of range 1..{n}")
        if self.slot in self.f.used_slots:
            used = (self.f.used_slots - {self.slot}) | self.g.used_slots
        else:
            used = self.f.used_slots
        self._derive(n, used)


@dataclass(frozen=True)
class Diagonal(Expr):
    """Oblique projection: coordinate j replaces coordinate i, slot i is
    deleted and the remaining slots are renumbered order-preservingly."""

    inner: Expr
    i: int
    j: int

    def __post_init__(self):
        n = self.inner.arity
        if n < 2:
            raise StructureError(f"oblique projection needs arity >= 2, got {n}")
        for s in (self.i, self.j):
            if not isinstance(s, int) or not 1 <= s <= n:
                raise StructureError(f"projection slot {s!r} out of range 1..{n}")
        if self.i == self.j:
            raise StructureError("projection slots must differ")
        s = self.inner.used_slots
        if self.i in s:
            s = (s - {self.i}) | {self.j}
        self._derive(n - 1, (k - 1 if k > self.i else k for k in s))


@dataclass(frozen=True)
class Inverse(Expr):
    """Partial inverse about one slot.

    The node has the same arity as its operand; its slot `slot` carries the
    output value and the remaining slots keep their variables.  Numeric
    evaluation searches `axis` (a closed interval for the inverted slot) and
    returns the smallest preimage; the full multivalued set is exposed by
    the inverse module.
    """

    inner: Expr
    slot: int
    axis: tuple[float, float] | None = None

    def __post_init__(self):
        n = self.inner.arity
        if n < 1:
            raise StructureError("cannot invert a nullary expression")
        if not isinstance(self.slot, int) or not 1 <= self.slot <= n:
            raise StructureError(f"inverse slot {self.slot!r} out of range 1..{n}")
        if self.axis is not None:
            lo, hi = self.axis
            object.__setattr__(self, "axis", (float(lo), float(hi)))
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise StructureError(f"bad inverse search interval {self.axis}")
        self._derive(n, self.inner.used_slots | {self.slot})


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box of closed real intervals, one per slot."""

    axes: tuple[tuple[float, float], ...]

    def __post_init__(self):
        axes = tuple((float(lo), float(hi)) for lo, hi in self.axes)
        object.__setattr__(self, "axes", axes)
        for k, (lo, hi) in enumerate(axes, start=1):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise StructureError(f"axis {k} bounds must be finite, got [{lo}, {hi}]")
            if lo > hi:
                raise StructureError(f"axis {k} is empty: [{lo}, {hi}]")

    @classmethod
    def unit(cls, n: int) -> "BoxDomain":
        return cls(((0.0, 1.0),) * n)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def axis(self, k: int) -> tuple[float, float]:
        if not 1 <= k <= self.dim:
            raise StructureError(f"axis {k} out of range 1..{self.dim}")
        return self.axes[k - 1]

    def with_axis(self, k: int, interval: tuple[float, float]) -> "BoxDomain":
        lo, hi = float(interval[0]), float(interval[1])
        return BoxDomain(self.axes[: k - 1] + ((lo, hi),) + self.axes[k:])

    def contains(self, point: Sequence[float], slack: float = 0.0) -> bool:
        if len(point) != self.dim:
            return False
        return all(lo - slack <= v <= hi + slack for v, (lo, hi) in zip(point, self.axes))


def arity(e: Expr) -> int:
    """Number of variables `e` accepts."""
    return e.arity


def used_slots(e: Expr) -> frozenset[int]:
    """Slots whose value can affect evaluation of `e`."""
    return e.used_slots


def evaluate(e: Expr, point: Sequence[float]) -> float:
    """Evaluate `e` at `point` (length must equal the arity).

    Deterministic: the same expression and point always give the bitwise
    identical result.  Domain violations raise :class:`EvalDomainError`
    carrying the offending node and point.
    """
    pt = tuple(float(v) for v in point)
    if len(pt) != e.arity:
        raise StructureError(f"point has {len(pt)} coordinates, expression expects {e.arity}")
    return _eval(e, pt)


def _eval(e: Expr, pt: tuple[float, ...]) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Prim):
        return _apply_primitive(e.op, pt, e, pt)
    if isinstance(e, Lift):
        return _eval(e.inner, tuple(pt[p - 1] for p in e.positions))
    if isinstance(e, Compose):
        if e.slot not in e.f.used_slots:
            # no replacement: behaves as f, g never evaluated
            return _eval(e.f, pt[: e.f.arity])
        v = _eval(e.g, pt if e.g.arity else ())
        inner_pt = list(pt)
        inner_pt[e.slot - 1] = v
        return _eval(e.f, tuple(inner_pt))
    if isinstance(e, Diagonal):
        i, j = e.i, e.j
        jj = j - 1 if j > i else j  # index of coordinate j after deleting slot i
        inner_pt = tuple(
            pt[jj - 1] if k == i else pt[(k - 1 if k > i else k) - 1]
            for k in range(1, e.inner.arity + 1)
        )
        return _eval(e.inner, inner_pt)
    if isinstance(e, Var):
        return pt[e.slot - 1]
    if isinstance(e, Inverse):
        return _eval_inverse(e, pt)
    raise StructureError(f"unknown node type: {type(e).__name__}")


def _eval_inverse(e: Inverse, pt: tuple[float, ...]) -> float:
    from .inverse import invert_at  # deferred: that module builds on this one

    if e.axis is None:
        raise ConfigError("inverse node has no search interval attached")
    axes = []
    fixed = []
    for k in range(1, e.inner.arity + 1):
        if k == e.slot:
            axes.append(e.axis)
        else:
            axes.append((pt[k - 1], pt[k - 1]))
            fixed.append(pt[k - 1])
    roots = invert_at(e.inner, e.slot, pt[e.slot - 1], fixed, BoxDomain(tuple(axes)))
    if not roots:
        raise NoSolutionError(
            f"no preimage of {pt[e.slot - 1]} on {list(e.axis)}", node=e, point=pt)
    return roots[0]


def _apply_primitive(op: Primitive, args, node, point) -> float:
    a = args[0]
    if op is Primitive.IDENTITY:
        return a
    b = args[1]
    if op is Primitive.ADD:
        return a + b
    if op is Primitive.MUL:
        return a * b
    if op is Primitive.DIV:
        if b == 0:
            raise EvalDomainError("division by zero", node, point)
        return a / b
    if op is Primitive.POW:
        return _checked_pow(a, b, node, point)
    if op is Primitive.ROOT:
        if b == 0:
            raise EvalDomainError("zeroth root", node, point)
        if a < 0:
            raise EvalDomainError("root of a negative base", node, point)
        return _checked_pow(a, 1.0 / b, node, point)
    if op is Primitive.LOG:
        if a <= 0:
            raise EvalDomainError("logarithm of a non-positive value", node, point)
        if b <= 0 or b == 1:
            raise EvalDomainError("logarithm base must be positive and not 1", node, point)
        return math.log(a, b)
    raise StructureError(f"unknown primitive {op!r}")  # pragma: no cover


def _checked_pow(base: float, exp: float, node, point) -> float:
    if base < 0 and not float(exp).is_integer():
        raise EvalDomainError("fractional power of a negative base", node, point)
    if base == 0 and exp < 0:
        raise EvalDomainError("zero base with a negative exponent", node, point)
    try:
        return base ** exp
    except OverflowError as exc:
        raise EvalError(f"overflow in power {base} ** {exp}", node, point) from exc


def equivalent_on(e1: Expr, e2: Expr, domain: BoxDomain, samples: int = 100,
                  tol: float = DEFAULT_TOL, seed: int = 0) -> bool:
    """Sampled evaluation equivalence of two expressions over a box.

    True iff |e1(x) - e2(x)| <= tol at every sampled x at which both sides
    evaluate.  A point where exactly one side raises an evaluation error is
    a counterexample; a point where both raise is skipped.  Sampling is
    uniform and deterministic for a given seed.
    """
    if e1.arity != e2.arity:
        raise StructureError(f"arity mismatch: {e1.arity} vs {e2.arity}")
    if e1.arity != domain.dim:
        raise StructureError(f"domain has {domain.dim} axes, expressions have arity {e1.arity}")
    rng = random.Random(seed)
    for _ in range(samples):
        x = [rng.uniform(lo, hi) for lo, hi in domain.axes]
        try:
            v1 = evaluate(e1, x)
            ok1 = True
        except EvalError:
            ok1 = False
        try:
            v2 = evaluate(e2, x)
            ok2 = True
        except EvalError:
            ok2 = False
        if ok1 != ok2:
            return False
        if ok1 and not abs(v1 - v2) <= tol:
            return False
    return True
