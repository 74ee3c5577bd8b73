"""Coefficient algebra for index polynomials.

Index values are ordinary hashable Python values; a signed coefficient set
is described by its involution.  ``IndexPolynomial`` represents elements of
the group A = Z[S without L] / <x + x*>: coefficients are stored on the
lexicographically least serialization of each orbit {x, x*}, with Z2
coefficients on self-dual orbits.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd


def value_key(x) -> str:
    """Deterministic serialization used to order and name index values."""
    if isinstance(x, frozenset):
        return "{" + ",".join(sorted(value_key(e) for e in x)) + "}"
    if isinstance(x, (tuple, list)):
        return "(" + ",".join(value_key(e) for e in x) + ")"
    if isinstance(x, dict):
        items = sorted((value_key(k), value_key(v)) for k, v in x.items())
        return "{" + ",".join(f"{k}:{v}" for k, v in items) + "}"
    return repr(x)


class IndexPolynomial:
    """Class of a formal sum of signed-index values in A_sigma."""

    __slots__ = ("coeffs", "_reps")

    def __init__(self):
        self.coeffs: dict[str, int] = {}
        self._reps: dict[str, object] = {}

    def add(self, value, involution, coeff: int = 1) -> None:
        dual = involution(value)
        k, kd = value_key(value), value_key(dual)
        if k == kd:
            rep, c = k, coeff % 2
            self._reps[rep] = value
            self.coeffs[rep] = (self.coeffs.get(rep, 0) + c) % 2
            if not self.coeffs[rep]:
                del self.coeffs[rep]
                del self._reps[rep]
            return
        if kd < k:
            rep, c, obj = kd, -coeff, dual
        else:
            rep, c, obj = k, coeff, value
        self._reps[rep] = obj
        self.coeffs[rep] = self.coeffs.get(rep, 0) + c
        if not self.coeffs[rep]:
            del self.coeffs[rep]
            del self._reps[rep]

    def items(self):
        return [(self._reps[k], self.coeffs[k]) for k in sorted(self.coeffs)]

    def __eq__(self, other):
        return isinstance(other, IndexPolynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items())))

    def __bool__(self):
        return bool(self.coeffs)

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"{c}*[{k}]" for k, c in sorted(self.coeffs.items()))


def zpoly_str(poly: dict[int, int], var: str = "t") -> str:
    """Readable form of an element of Z[Z], e.g. {2:1, 1:-2} -> 't^2 - 2t'."""
    if not poly:
        return "0"
    parts = []
    for e in sorted(poly, reverse=True):
        c = poly[e]
        if not c:
            continue
        mag = abs(c)
        if e == 0:
            body = str(mag)
        else:
            head = "" if mag == 1 else str(mag)
            body = f"{head}{var}" + (f"^{e}" if e != 1 else "")
        parts.append(("- " if c < 0 else "+ ") + body)
    out = " ".join(parts)
    return out[2:] if out.startswith("+ ") else "-" + out[2:]


def zpoly_add(a: dict[int, int], b: dict[int, int]) -> dict[int, int]:
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, 0) + c
        if not out[e]:
            del out[e]
    return out


@dataclass(frozen=True)
class IntMod:
    """Element of Z / m (m = 0 means Z)."""

    value: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 0:
            object.__setattr__(self, "modulus", -self.modulus)
        if self.modulus:
            object.__setattr__(self, "value", self.value % self.modulus)

    def __add__(self, other):
        assert self.modulus == other.modulus
        return IntMod(self.value + other.value, self.modulus)

    def __neg__(self):
        return IntMod(-self.value, self.modulus)

    def scaled(self, k: int) -> "IntMod":
        return IntMod(self.value * k, self.modulus)

    def quotient(self, x: int) -> int:
        """Modulus of (Z/m) / <x>."""
        return gcd(self.modulus, x)

    def is_zero(self) -> bool:
        return self.value == 0 if self.modulus == 0 else self.value % self.modulus == 0

    def __repr__(self):
        return f"{self.value}" + (f" (mod {self.modulus})" if self.modulus else "")


@dataclass(frozen=True)
class QuotientVec:
    """Element of Z^n modulo one integer vector (used for homological parity)."""

    vec: tuple[int, ...]
    modulus: tuple[int, ...]

    @staticmethod
    def make(vec, modulus) -> "QuotientVec":
        from .surface import reduce_mod_cyclic

        return QuotientVec(reduce_mod_cyclic(tuple(vec), tuple(modulus)), tuple(modulus))

    def __add__(self, other):
        assert self.modulus == other.modulus
        return QuotientVec.make(
            tuple(a + b for a, b in zip(self.vec, other.vec)), self.modulus
        )

    def __neg__(self):
        return QuotientVec.make(tuple(-a for a in self.vec), self.modulus)

    def scaled(self, k: int) -> "QuotientVec":
        return QuotientVec.make(tuple(k * a for a in self.vec), self.modulus)

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.vec)

    def __repr__(self):
        return f"{list(self.vec)} mod <{list(self.modulus)}>"
