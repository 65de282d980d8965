"""Integer site windows and row-major pattern codes.

A *window* is a contiguous integer interval of sites.  A *pattern* assigns
one symbol (a cell index of the state partition) to every site of a window.
Patterns are stored as row-major integer codes: the leftmost site is the
most significant digit in base ``n_symbols``.  Shifting a window does not
change the code of a pattern, which makes shifts free.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .errors import PatternOverflowError, WindowMismatchError

_CODE_LIMIT = 2**63


@dataclass(frozen=True, order=True)
class Interval:
    """Closed integer interval {lo, ..., hi}; empty when lo > hi."""

    lo: int
    hi: int

    def __len__(self) -> int:
        return max(0, self.hi - self.lo + 1)

    def __iter__(self):
        return iter(range(self.lo, self.hi + 1))

    def __contains__(self, site: int) -> bool:
        return self.lo <= site <= self.hi

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    def shift(self, offset: int) -> "Interval":
        return Interval(self.lo + offset, self.hi + offset)

    def __add__(self, other: "Interval") -> "Interval":
        """Minkowski sum {a + b | a in self, b in other}."""
        if self.is_empty or other.is_empty:
            raise ValueError("Minkowski sum of an empty interval is undefined")
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    def covers(self, other: "Interval") -> bool:
        return other.is_empty or (self.lo <= other.lo and other.hi <= self.hi)

    def drop_left(self) -> "Interval":
        """The window without its leftmost site."""
        return Interval(self.lo + 1, self.hi)

    def drop_right(self) -> "Interval":
        """The window without its rightmost site."""
        return Interval(self.lo, self.hi - 1)

    def __repr__(self) -> str:
        return f"Interval({self.lo}, {self.hi})"


class PatternCodec:
    """Bidirectional map between symbol tuples over a window and integer codes."""

    __slots__ = ("window", "n_symbols", "length", "_pows")

    def __init__(self, window: Interval, n_symbols: int):
        if n_symbols < 1:
            raise ValueError("n_symbols must be >= 1")
        length = len(window)
        if n_symbols > 1 and length > 0 and n_symbols**length >= _CODE_LIMIT:
            raise PatternOverflowError(
                f"{n_symbols}^{length} patterns do not fit in a 64-bit code"
            )
        self.window = window
        self.n_symbols = n_symbols
        self.length = length
        # _pows[k] = n_symbols**k, k = 0..length
        self._pows = [n_symbols**k for k in range(length + 1)]

    @property
    def size(self) -> int:
        """Number of distinct patterns over the window."""
        return self._pows[self.length]

    def encode(self, symbols) -> int:
        if len(symbols) != self.length:
            raise WindowMismatchError(
                f"expected {self.length} symbols for window {self.window}, got {len(symbols)}"
            )
        code = 0
        n = self.n_symbols
        for s in symbols:
            if not 0 <= s < n:
                raise ValueError(f"symbol {s} outside range(0, {n})")
            code = code * n + int(s)
        return code

    def decode(self, code: int) -> tuple[int, ...]:
        if not 0 <= code < self.size:
            raise ValueError(f"code {code} outside range(0, {self.size})")
        out = []
        n = self.n_symbols
        for _ in range(self.length):
            code, s = divmod(code, n)
            out.append(s)
        return tuple(reversed(out))

    def project(self, code: int, sub: Interval) -> int:
        """Code of the restriction of a pattern to a subwindow.

        The empty subwindow projects every pattern to code 0.
        """
        if sub.is_empty:
            return 0
        if not self.window.covers(sub):
            raise WindowMismatchError(f"{sub} is not contained in {self.window}")
        drop_right = self.window.hi - sub.hi
        return (code // self._pows[drop_right]) % self._pows[len(sub)]

    def all_codes(self) -> range:
        return range(self.size)

    def patterns(self):
        """All patterns in lexicographic (= code) order."""
        return product(range(self.n_symbols), repeat=self.length)


@lru_cache(maxsize=None)
def codec(window: Interval, n_symbols: int) -> PatternCodec:
    """Cached codec lookup; codecs are immutable and shared freely."""
    return PatternCodec(window, n_symbols)
