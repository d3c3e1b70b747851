"""Interface-aligned 1-D finite-volume grids.

Cells are uniform within each region; region boundaries always coincide with
faces.  Face ``f`` separates cells ``f - 1`` and ``f``, so faces ``0`` and
``n_cells`` are the domain boundaries.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


class Region(enum.IntEnum):
    D1 = 0
    MEMBRANE = 1
    D3 = 2


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Mesh1D:
    faces: np.ndarray
    regions: np.ndarray
    interface_faces: tuple[int, ...]
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "faces", _frozen(self.faces))
        regions = np.array(self.regions, dtype=np.int8)
        regions.flags.writeable = False
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "interface_faces", tuple(int(f) for f in self.interface_faces))
        widths = np.diff(self.faces)
        if np.any(widths <= 0):
            raise ConfigError([("mesh", "faces must be strictly increasing")])
        object.__setattr__(self, "widths", _frozen(widths))
        object.__setattr__(self, "centers", _frozen(0.5 * (self.faces[1:] + self.faces[:-1])))

    @property
    def n_cells(self) -> int:
        return len(self.regions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def length(self) -> float:
        return float(self.faces[-1] - self.faces[0])

    @property
    def is_effective(self) -> bool:
        return len(self.interface_faces) == 1

    def mask(self, *regions: Region) -> np.ndarray:
        return np.isin(self.regions, [int(r) for r in regions])

    def center_spacing(self) -> np.ndarray:
        """Distances between adjacent cell centers (one per interior face)."""
        return np.diff(self.centers)


def _check_counts(problems, **counts):
    for name, n in counts.items():
        if int(n) != n or n < 2:
            problems.append((name, f"must be an integer >= 2, got {n!r}"))


def _region_faces(a: float, b: float, n: int) -> np.ndarray:
    # Endpoints are assigned exactly so region boundaries never drift.
    f = a + (b - a) * np.arange(n + 1) / n
    f[0], f[-1] = a, b
    return f


def build_full_mesh(L: float, x_m: float, epsilon: float, n1: int, n2: int, n3: int) -> Mesh1D:
    """Grid with a resolved membrane ``[x_m, x_m + epsilon]``."""
    problems = []
    if not L > 0:
        problems.append(("L", f"must be positive, got {L!r}"))
    if not 0 < x_m < L:
        problems.append(("x_m", f"must lie in (0, L), got {x_m!r}"))
    if not epsilon > 0:
        problems.append(("epsilon", f"must be positive, got {epsilon!r}"))
    elif not x_m + epsilon < L:
        problems.append(("epsilon", f"membrane [x_m, x_m+epsilon] overflows the domain (L={L})"))
    _check_counts(problems, n1=n1, n2=n2, n3=n3)
    if problems:
        raise ConfigError(problems)
    x2 = x_m + epsilon
    faces = np.concatenate([
        _region_faces(0.0, x_m, n1),
        _region_faces(x_m, x2, n2)[1:],
        _region_faces(x2, L, n3)[1:],
    ])
    regions = [Region.D1] * n1 + [Region.MEMBRANE] * n2 + [Region.D3] * n3
    return Mesh1D(faces, regions, (n1, n1 + n2), float(epsilon))


def build_effective_mesh(L: float, x_m: float, n1: int, n3: int) -> Mesh1D:
    """Grid where the membrane is collapsed onto the single face at ``x_m``."""
    problems = []
    if not L > 0:
        problems.append(("L", f"must be positive, got {L!r}"))
    if not 0 < x_m < L:
        problems.append(("x_m", f"must lie in (0, L), got {x_m!r}"))
    _check_counts(problems, n1=n1, n3=n3)
    if problems:
        raise ConfigError(problems)
    faces = np.concatenate([_region_faces(0.0, x_m, n1), _region_faces(x_m, L, n3)[1:]])
    regions = [Region.D1] * n1 + [Region.D3] * n3
    return Mesh1D(faces, regions, (n1,), 0.0)
