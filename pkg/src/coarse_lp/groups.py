"""Built-in finitely generated groups with unique normal forms.

Three families are supported:

* ``zd``: the free abelian group Z^d, elements are integer tuples, generators
  are the unit vectors and their negatives.
* ``lamplighter``: Z/2 wreath Z. An element is a pair ``(lamps, cursor)`` where
  ``lamps`` is the finite set of lit positions. The product is written so that
  left multiplication by a generator is a lamplighter move (``t`` moves the
  cursor right, ``a`` toggles the lamp under the cursor); the pair is then the
  state reached from the identity by playing the moves of a word backwards.
* ``free``: the free group F_k, elements are freely reduced tuples of nonzero
  integers (``i`` for the i-th letter, ``-i`` for its inverse).

All products are exact; labels are hashable and unique per element.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterator

from .errors import BudgetExceededError

KINDS = ("zd", "lamplighter", "free")

Label = Hashable

# lamplighter balls grow like n * 2^n; fail loudly rather than swap
DEFAULT_BUDGET = 5_000_000


@dataclass(frozen=True)
class GroupSpec:
    kind: str
    rank: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unsupported group kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "lamplighter":
            object.__setattr__(self, "rank", 1)
        elif self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")

    @classmethod
    def zd(cls, d: int) -> "GroupSpec":
        return cls("zd", d)

    @classmethod
    def lamplighter(cls) -> "GroupSpec":
        return cls("lamplighter", 1)

    @classmethod
    def free(cls, k: int) -> "GroupSpec":
        return cls("free", k)

    @classmethod
    def parse(cls, text: str) -> "GroupSpec":
        """Parse ``Z^2``, ``Z2``, ``zd:3``, ``lamplighter``, ``F2``, ``free:2``."""
        s = text.strip().lower().replace(" ", "")
        if s in ("lamplighter", "lamp", "z2wrz"):
            return cls.lamplighter()
        for prefix, kind in (("zd:", "zd"), ("z^", "zd"), ("free:", "free"), ("f", "free"), ("z", "zd")):
            if s.startswith(prefix):
                rest = s[len(prefix):] or "1"
                if rest.isdigit():
                    return cls(kind, int(rest))
        raise ValueError(f"cannot parse group {text!r}")

    def __str__(self):
        if self.kind == "zd":
            return f"Z^{self.rank}"
        if self.kind == "free":
            return f"F{self.rank}"
        return "lamplighter"

    # -- group law ---------------------------------------------------------

    @property
    def identity(self) -> Label:
        if self.kind == "zd":
            return (0,) * self.rank
        if self.kind == "lamplighter":
            return (frozenset(), 0)
        return ()

    def mul(self, x: Label, y: Label) -> Label:
        if self.kind == "zd":
            return tuple(a + b for a, b in zip(x, y))
        if self.kind == "lamplighter":
            (f, m), (g, n) = x, y
            return (frozenset(p + n for p in f) ^ g, m + n)
        return _free_reduce(x, y)

    def inv(self, x: Label) -> Label:
        if self.kind == "zd":
            return tuple(-a for a in x)
        if self.kind == "lamplighter":
            f, m = x
            return (frozenset(p - m for p in f), -m)
        return tuple(-a for a in reversed(x))

    def product(self, *elements: Label) -> Label:
        out = self.identity
        for e in elements:
            out = self.mul(out, e)
        return out

    # -- generators ----------------------------------------------------------

    @cached_property
    def generators(self) -> dict[str, Label]:
        """Symmetric generating set as an ordered name -> element mapping."""
        gens: dict[str, Label] = {}
        if self.kind == "zd":
            for i in range(self.rank):
                unit = tuple(int(j == i) for j in range(self.rank))
                gens[f"e{i + 1}"] = unit
                gens[f"e{i + 1}^-1"] = tuple(-u for u in unit)
        elif self.kind == "lamplighter":
            gens["t"] = (frozenset(), 1)
            gens["t^-1"] = (frozenset(), -1)
            gens["a"] = (frozenset({0}), 0)
        else:
            for i in range(1, self.rank + 1):
                gens[f"x{i}"] = (i,)
                gens[f"x{i}^-1"] = (-i,)
        return gens

    def inverse_name(self, name: str) -> str:
        target = self.inv(self.generators[name])
        for other, elt in self.generators.items():
            if elt == target:
                return other
        raise KeyError(name)  # pragma: no cover - the set is symmetric by construction

    def evaluate(self, word) -> Label:
        """Multiply out a sequence of generator names."""
        out = self.identity
        for name in word:
            out = self.mul(out, self.generators[name])
        return out

    # -- metric --------------------------------------------------------------

    def word_length(self, x: Label) -> int:
        """Closed-form word length with respect to :attr:`generators`."""
        if self.kind == "zd":
            return sum(abs(a) for a in x)
        if self.kind == "free":
            return len(x)
        lamps, cursor = x
        lo = min(min(lamps, default=0), 0, cursor)
        hi = max(max(lamps, default=0), 0, cursor)
        walk = (hi - lo) + min(-lo + abs(hi - cursor), hi + abs(cursor - lo))
        return walk + len(lamps)

    def word(self, x: Label) -> list[str]:
        """A geodesic word (list of generator names) evaluating to ``x``."""
        if self.kind == "zd":
            out = []
            for i, a in enumerate(x):
                out += [f"e{i + 1}" if a > 0 else f"e{i + 1}^-1"] * abs(a)
            return out
        if self.kind == "free":
            return [f"x{a}" if a > 0 else f"x{-a}^-1" for a in x]
        lamps, cursor = x
        lo = min(min(lamps, default=0), 0, cursor)
        hi = max(max(lamps, default=0), 0, cursor)
        low_first = -lo + abs(hi - cursor) <= hi + abs(cursor - lo)
        stops = [lo, hi, cursor] if low_first else [hi, lo, cursor]
        moves, pos, pending = [], 0, set(lamps)
        if pos in pending:
            moves.append("a")
            pending.discard(pos)
        for target in stops:
            step = 1 if target > pos else -1
            while pos != target:
                pos += step
                moves.append("t" if step > 0 else "t^-1")
                if pos in pending:
                    moves.append("a")
                    pending.discard(pos)
        # the label is the state after playing the word from the right
        return moves[::-1]

    # -- enumeration ---------------------------------------------------------

    def sphere(self, n: int) -> Iterator[Label]:
        """Elements of word length exactly ``n`` (Z^d and free groups)."""
        if n < 0:
            return
        if self.kind == "zd":
            yield from _lattice_sphere(self.rank, n)
        elif self.kind == "free":
            if n == 0:
                yield ()
                return
            letters = list(range(1, self.rank + 1)) + [-i for i in range(1, self.rank + 1)]
            yield from _reduced_words(letters, n, ())
        else:
            for x in self.ball(n):
                if self.word_length(x) == n:
                    yield x

    def ball(self, radius: int, budget: int | None = None) -> list[Label]:
        """All elements of word length <= radius, in BFS order."""
        budget = DEFAULT_BUDGET if budget is None else budget
        seen = {self.identity: 0}
        order = [self.identity]
        frontier = [self.identity]
        gens = list(self.generators.values())
        for r in range(1, radius + 1):
            nxt = []
            for x in frontier:
                for s in gens:
                    y = self.mul(x, s)
                    if y not in seen:
                        seen[y] = r
                        order.append(y)
                        nxt.append(y)
                        if len(order) > budget:
                            raise BudgetExceededError(f"ball of radius {radius} in {self}", len(order), budget)
            frontier = nxt
        return order

    # -- labels --------------------------------------------------------------

    def is_label(self, x) -> bool:
        if self.kind == "zd":
            return isinstance(x, tuple) and len(x) == self.rank and all(isinstance(a, int) for a in x)
        if self.kind == "free":
            return (
                isinstance(x, tuple)
                and all(isinstance(a, int) and 0 < abs(a) <= self.rank for a in x)
                and all(x[i] != -x[i + 1] for i in range(len(x) - 1))
            )
        return (
            isinstance(x, tuple)
            and len(x) == 2
            and isinstance(x[0], frozenset)
            and isinstance(x[1], int)
        )

    def format_label(self, x: Label) -> str:
        if self.kind == "zd":
            return ",".join(str(a) for a in x)
        if self.kind == "free":
            return ",".join(str(a) for a in x) if x else "e"
        lamps, cursor = x
        return "{" + ",".join(str(p) for p in sorted(lamps)) + "}@" + str(cursor)

    def parse_label(self, text: str) -> Label:
        text = text.strip()
        if self.kind == "zd":
            x = tuple(int(a) for a in text.split(","))
        elif self.kind == "free":
            x = () if text == "e" else tuple(int(a) for a in text.split(","))
        else:
            lamps, _, cursor = text.partition("@")
            inner = lamps.strip()[1:-1]
            x = (frozenset(int(p) for p in inner.split(",") if p), int(cursor))
        if not self.is_label(x):
            raise ValueError(f"{text!r} is not a normal form in {self}")
        return x


def _free_reduce(x: tuple, y: tuple) -> tuple:
    k = 0
    while k < len(x) and k < len(y) and x[len(x) - 1 - k] == -y[k]:
        k += 1
    return x[: len(x) - k] + y[k:]


def _reduced_words(letters, n, prefix):
    if n == 0:
        yield prefix
        return
    for a in letters:
        if not prefix or prefix[-1] != -a:
            yield from _reduced_words(letters, n - 1, prefix + (a,))


def _lattice_sphere(d: int, n: int) -> Iterator[tuple]:
    if d == 1:
        if n == 0:
            yield (0,)
        else:
            yield (n,)
            yield (-n,)
        return
    for a in range(-n, n + 1):
        for rest in _lattice_sphere(d - 1, n - abs(a)):
            yield (a,) + rest


def lattice_sphere_size(d: int, r: int) -> int:
    """Number of points of Z^d at l1-distance exactly r from the origin."""
    from math import comb

    if r == 0:
        return 1
    return sum(2**i * comb(d, i) * comb(r - 1, i - 1) for i in range(1, d + 1))
