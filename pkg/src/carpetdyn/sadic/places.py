"""The finite set of places S attached to a carpet IFS and its three-way split."""
from __future__ import annotations

from dataclasses import dataclass

from carpetdyn.arith import INF, Place, prime_divisors, sorted_places

KINDS = ("ue", "dt", "tr")


@dataclass(frozen=True)
class PlacePartition:
    S: tuple[Place, ...]
    S_ue: tuple[Place, ...]
    S_dt: tuple[Place, ...]
    S_tr: tuple[Place, ...]

    def __post_init__(self):
        parts = set(self.S_ue) | set(self.S_dt) | set(self.S_tr)
        if parts != set(self.S) or len(self.S_ue) + len(self.S_dt) + len(self.S_tr) != len(self.S):
            raise ValueError("S_ue, S_dt, S_tr must partition S")
        if INF not in self.S_dt:
            raise ValueError("the archimedean place belongs to S_dt")

    @property
    def finite(self) -> tuple[Place, ...]:
        return tuple(p for p in self.S if not p.is_infinite)

    def kind(self, place: Place) -> str:
        if place in self.S_ue:
            return "ue"
        if place in self.S_dt:
            return "dt"
        if place in self.S_tr:
            return "tr"
        raise KeyError(f"place {place} is not in S")

    def to_dict(self) -> dict:
        return {name: [str(p) for p in getattr(self, name)] for name in ("S", "S_ue", "S_dt", "S_tr")}


def derive_places(ifs) -> PlacePartition:
    """S_f = primes of r, q and the translation denominators; S_ue = {p | q}, S_dt = {inf} + {p | r}."""
    r, q = ifs.rho.numerator, ifs.rho.denominator
    primes = prime_divisors(r) | prime_divisors(q)
    for y in ifs.translations:
        for c in y:
            primes |= prime_divisors(c.denominator)
    ue = {p for p in primes if q % p == 0}
    dt = {p for p in primes if r % p == 0}
    tr = primes - ue - dt
    S = sorted_places([INF] + [Place(p) for p in primes])
    return PlacePartition(
        tuple(S),
        tuple(sorted_places(Place(p) for p in ue)),
        tuple(sorted_places([INF] + [Place(p) for p in dt])),
        tuple(sorted_places(Place(p) for p in tr)),
    )
