"""Finitely describable Borel regions of the complex plane.

Regions are callables ``region(z) -> bool`` and can be handed straight to
:func:`fkrank.matcore.schur_reorder`.  ``boundary_distance`` is a diagnostic
lower bound on the distance from ``z`` to the region's boundary; for unions
and intersections it is the minimum over the children, which may
underestimate the true distance but never overestimates it.
"""

from dataclasses import dataclass
from typing import Tuple

from .errors import UsageError

__all__ = [
    "Region", "Disk", "HalfPlane", "Complement", "Union", "Intersection",
    "Singleton", "region_from_json", "region_to_json",
]


class Region:
    def contains(self, z: complex) -> bool:
        raise NotImplementedError

    def boundary_distance(self, z: complex) -> float:
        raise NotImplementedError

    def __call__(self, z):
        return self.contains(complex(z))

    def __invert__(self):
        return Complement(self)

    def __or__(self, other):
        return Union((self, other))

    def __and__(self, other):
        return Intersection((self, other))


@dataclass(frozen=True)
class Disk(Region):
    """Closed disk ``|z - center| <= radius``."""

    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise UsageError(f"disk radius must be nonnegative, got {self.radius}")

    def contains(self, z):
        return abs(z - self.center) <= self.radius

    def boundary_distance(self, z):
        return abs(abs(z - self.center) - self.radius)


@dataclass(frozen=True)
class HalfPlane(Region):
    """Closed half-plane ``Re(z * conj(normal)) >= offset``.

    ``HalfPlane(1, 0)`` is ``Re z >= 0``; ``HalfPlane(1j, 0)`` is ``Im z >= 0``.
    """

    normal: complex
    offset: float

    def __post_init__(self):
        if self.normal == 0:
            raise UsageError("half-plane normal must be nonzero")

    def _signed(self, z):
        return ((z * self.normal.conjugate()).real - self.offset) / abs(self.normal)

    def contains(self, z):
        return self._signed(z) >= 0

    def boundary_distance(self, z):
        return abs(self._signed(z))


@dataclass(frozen=True)
class Complement(Region):
    child: Region

    def contains(self, z):
        return not self.child.contains(z)

    def boundary_distance(self, z):
        return self.child.boundary_distance(z)


@dataclass(frozen=True)
class Union(Region):
    children: Tuple[Region, ...]

    def contains(self, z):
        return any(c.contains(z) for c in self.children)

    def boundary_distance(self, z):
        return min((c.boundary_distance(z) for c in self.children), default=float("inf"))


@dataclass(frozen=True)
class Intersection(Region):
    children: Tuple[Region, ...]

    def contains(self, z):
        return all(c.contains(z) for c in self.children)

    def boundary_distance(self, z):
        return min((c.boundary_distance(z) for c in self.children), default=float("inf"))


@dataclass(frozen=True)
class Singleton(Region):
    """A point, thickened to a closed disk of radius ``tolerance``."""

    point: complex
    tolerance: float = 0.0

    def contains(self, z):
        return abs(z - self.point) <= self.tolerance

    def boundary_distance(self, z):
        return abs(abs(z - self.point) - self.tolerance)


def _cplx(pair):
    try:
        re, im = pair
        return complex(float(re), float(im))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"expected [re, im], got {pair!r}") from exc


def region_from_json(obj) -> Region:
    try:
        kind = obj["kind"]
        if kind == "disk":
            return Disk(_cplx(obj["center"]), float(obj["radius"]))
        if kind == "halfplane":
            return HalfPlane(_cplx(obj["normal"]), float(obj["offset"]))
        if kind == "complement":
            return Complement(region_from_json(obj["child"]))
        if kind == "union":
            return Union(tuple(region_from_json(c) for c in obj["children"]))
        if kind == "intersection":
            return Intersection(tuple(region_from_json(c) for c in obj["children"]))
        if kind == "singleton":
            return Singleton(_cplx(obj["point"]), float(obj.get("tolerance", 0.0)))
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed region JSON: {exc}") from exc
    raise UsageError(f"unknown region kind {kind!r}")


def region_to_json(region: Region):
    def pair(z):
        return [z.real, z.imag]

    if isinstance(region, Disk):
        return {"kind": "disk", "center": pair(complex(region.center)), "radius": region.radius}
    if isinstance(region, HalfPlane):
        return {"kind": "halfplane", "normal": pair(complex(region.normal)), "offset": region.offset}
    if isinstance(region, Complement):
        return {"kind": "complement", "child": region_to_json(region.child)}
    if isinstance(region, Union):
        return {"kind": "union", "children": [region_to_json(c) for c in region.children]}
    if isinstance(region, Intersection):
        return {"kind": "intersection", "children": [region_to_json(c) for c in region.children]}
    if isinstance(region, Singleton):
        return {"kind": "singleton", "point": pair(complex(region.point)), "tolerance": region.tolerance}
    raise UsageError(f"cannot serialize region {region!r}")
