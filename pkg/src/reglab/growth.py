"""Growth functions F trading coarse complexity against fine accuracy."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError


@dataclass(frozen=True)
class GrowthFunction:
    """A monotone map from nonnegative reals to positive reals.

    kinds:
      ``linear``             F(M) = slope*M + intercept  (default M + 1)
      ``polynomial``         F(M) = (M + 1)**degree
      ``exponential``        F(M) = 2**(2M) / epsilon**3
      ``table``              step interpolation through (M, F(M)) points
    """

    kind: str
    params: tuple = ()
    table: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind == "linear":
            slope, intercept = self.params
            if slope < 0 or intercept <= 0:
                raise InputError("linear growth needs slope >= 0 and intercept > 0")
        elif self.kind == "polynomial":
            (degree,) = self.params
            if degree <= 0:
                raise InputError("polynomial degree must be positive")
        elif self.kind == "exponential":
            (eps,) = self.params
            if not 0 < eps <= 1:
                raise InputError("exponential growth needs epsilon in (0, 1]")
        elif self.kind == "table":
            if not self.table:
                raise InputError("growth table is empty")
            keys = [k for k, _ in self.table]
            vals = [v for _, v in self.table]
            if any(b <= a for a, b in zip(keys, keys[1:])):
                raise InputError("growth table arguments must be strictly increasing")
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise InputError("growth table values must be monotone")
            if min(vals) <= 0 or keys[0] < 0:
                raise InputError("growth table needs M >= 0 and F(M) > 0")
        else:
            raise InputError(f"unknown growth kind {self.kind!r}")

    @classmethod
    def linear(cls, slope: float = 1.0, intercept: float = 1.0) -> "GrowthFunction":
        return cls("linear", (float(slope), float(intercept)))

    @classmethod
    def polynomial(cls, degree: float) -> "GrowthFunction":
        return cls("polynomial", (float(degree),))

    @classmethod
    def exponential(cls, epsilon: float) -> "GrowthFunction":
        return cls("exponential", (float(epsilon),))

    @classmethod
    def from_table(cls, points) -> "GrowthFunction":
        pts = tuple((float(m), float(f)) for m, f in points)
        return cls("table", (), pts)

    def __call__(self, m: float) -> float:
        if m < 0:
            raise InputError("growth functions are defined on M >= 0")
        if self.kind == "linear":
            slope, intercept = self.params
            return slope * m + intercept
        if self.kind == "polynomial":
            return (m + 1.0) ** self.params[0]
        if self.kind == "exponential":
            return 2.0 ** (2.0 * m) / self.params[0] ** 3
        keys = [k for k, _ in self.table]
        i = bisect.bisect_right(keys, m) - 1
        return self.table[max(i, 0)][1]

    def spec(self) -> str:
        if self.kind == "linear":
            return "linear" if self.params == (1.0, 1.0) else f"linear:{self.params[0]:g},{self.params[1]:g}"
        if self.kind == "polynomial":
            return f"poly:{self.params[0]:g}"
        if self.kind == "exponential":
            return "paper-exp"
        return "table"

    def is_monotone_on(self, points) -> bool:
        vals = [self(p) for p in sorted(points)]
        return all(b >= a for a, b in zip(vals, vals[1:]))


def read_table(path: str | Path) -> GrowthFunction:
    """Parse ``M F(M)`` lines (``#`` comments allowed)."""
    points = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read growth table {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"growth table line {lineno}: expected 'M F(M)'")
        try:
            m, f = float(parts[0]), float(parts[1])
        except ValueError:
            raise InputError(f"growth table line {lineno}: not a number") from None
        if not (math.isfinite(m) and math.isfinite(f)):
            raise InputError(f"growth table line {lineno}: non-finite value")
        points.append((m, f))
    return GrowthFunction.from_table(points)


def parse_growth(spec: str, epsilon: float | None = None) -> GrowthFunction:
    """Parse a growth spec: ``linear``, ``poly:<k>``, ``paper-exp`` or ``table:<path>``."""
    if spec == "linear":
        return GrowthFunction.linear()
    if spec.startswith("poly:"):
        try:
            return GrowthFunction.polynomial(float(spec[5:]))
        except ValueError:
            raise InputError(f"bad polynomial degree in {spec!r}") from None
    if spec == "paper-exp":
        if epsilon is None:
            raise InputError("paper-exp growth needs epsilon")
        return GrowthFunction.exponential(epsilon)
    if spec.startswith("table:"):
        return read_table(spec[6:])
    raise InputError(f"unknown growth spec {spec!r}")
