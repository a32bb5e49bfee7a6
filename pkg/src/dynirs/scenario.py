"""2D deployment geometry: node positions, array orientations and bearings."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .config import ScenarioConfig

NODES = ("bs", "ue", "radar", "target", "irs")

MAX_RESAMPLES = 10_000


class LayoutError(RuntimeError):
    """No layout satisfying ``min_separation`` was found."""


def sample_in_disk(rng: np.random.Generator, center, radius: float, size=None) -> np.ndarray:
    """Area-uniform points in a disk (radius R*sqrt(u), angle 2*pi*u')."""
    u = rng.random(size)
    v = rng.random(size)
    r = radius * np.sqrt(u)
    phi = 2.0 * np.pi * v
    pts = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)
    return pts + np.asarray(center, dtype=float)


def bearing(origin, point, broadside) -> float:
    """Signed angle in (-pi, pi] from the ``broadside`` direction to ``point - origin``.

    Counter-clockwise is positive.
    """
    d = np.asarray(point, dtype=float) - np.asarray(origin, dtype=float)
    b = np.asarray(broadside, dtype=float)
    return float(np.arctan2(b[0] * d[1] - b[1] * d[0], b[0] * d[0] + b[1] * d[1]))


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.hypot(v[0], v[1])
    return v / n if n > 0 else np.array([1.0, 0.0])


@dataclass(frozen=True)
class Layout:
    """Node positions (meters) and the broadside unit vector of each array.

    The target carries no array; its broadside entry is unused.
    """

    positions: dict
    broadsides: dict

    def distance(self, a: str, b: str) -> float:
        pa, pb = self.positions[a], self.positions[b]
        return float(np.hypot(pa[0] - pb[0], pa[1] - pb[1]))

    def angle(self, src: str, dst: str) -> float:
        return angle_of(self, src, dst)

    def distances(self) -> dict[str, float]:
        return {f"{a}-{b}": self.distance(a, b) for a, b in combinations(NODES, 2)}

    @classmethod
    def from_positions(cls, positions) -> "Layout":
        pos = {k: np.asarray(v, dtype=float) for k, v in positions.items()}
        return cls(pos, default_broadsides(pos))


def default_broadsides(pos) -> dict:
    """Orient each array toward its primary peer.

    BS faces the UE, UE faces the BS, radar faces the target.  The IRS sits
    on the BS-radar segment, so its normal is taken perpendicular to that
    segment, on the UE's side.
    """
    bs, ue, radar, target, irs = (pos[n] for n in NODES)
    seg = _unit(radar - bs)
    normal = np.array([-seg[1], seg[0]])
    if np.dot(normal, ue - irs) < 0:
        normal = -normal
    return {
        "bs": _unit(ue - bs),
        "ue": _unit(bs - ue),
        "radar": _unit(target - radar),
        "target": _unit(radar - target),
        "irs": normal,
    }


def angle_of(layout: Layout, src: str, dst: str) -> float:
    """Departure/arrival angle at ``src`` toward ``dst``, relative to ``src``'s broadside."""
    if src == dst:
        raise ValueError("angle_of needs two distinct nodes")
    return bearing(layout.positions[src], layout.positions[dst], layout.broadsides[src])


def _far_enough(p, others, min_sep):
    return all(np.hypot(*(p - q)) >= min_sep for q in others)


def sample_layout(config: ScenarioConfig, rng: np.random.Generator) -> Layout:
    """Draw one deployment.

    BS at the origin; UE and radar uniform over the BS disk; target uniform
    over the radar disk; IRS at the BS-radar midpoint.  Nodes violating
    ``min_separation`` are redrawn, up to :data:`MAX_RESAMPLES` times each.
    """
    sep = config.min_separation
    bs = np.zeros(2)

    def draw(center, radius, ok):
        for _ in range(MAX_RESAMPLES):
            p = sample_in_disk(rng, center, radius)
            if ok(p):
                return p
        raise LayoutError(
            f"could not place a node {sep} m from its neighbours within {MAX_RESAMPLES} draws; "
            "min_separation is inconsistent with the radii"
        )

    radar = draw(bs, config.bs_radius, lambda p: np.hypot(*p) >= 2 * sep)
    irs = 0.5 * (bs + radar)
    ue = draw(bs, config.bs_radius, lambda p: _far_enough(p, (bs, radar, irs), sep))
    target = draw(radar, config.radar_radius, lambda p: _far_enough(p, (bs, radar, irs, ue), sep))
    return Layout.from_positions({"bs": bs, "ue": ue, "radar": radar, "target": target, "irs": irs})
