"""Mode lattice, wavefunctions and classical states on the m-torus.

Everything finite-dimensional in this package lives on the truncated mode
box ``{n in Z^m : |n_k| <= N}``.  Modes are enumerated lexicographically
(first axis slowest); that order fixes the layout of every coefficient
vector and operator matrix.  Amplitudes outside the box are implicitly
zero, so operators that shift modes across the boundary drop those
contributions; exact-identity checks therefore restrict themselves to
``interior_modes``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionMismatchError

TWO_PI = 2.0 * np.pi

#: A mode index is a plain length-m tuple of ints with |n_k| <= N.
ModeIndex = tuple


@dataclass(frozen=True)
class TorusModel:
    """Torus dimension, controlled/dynamic axis split, offsets, truncation.

    Axes are 0-based.  ``controlled`` lists the axes driven by the external
    parameters; the complement is ``dynamic``.  ``offsets[k]`` labels the
    quantization: the k-th action operator has spectrum ``n_k - offsets[k]``.
    Offsets are stored as given; integer differences are gauge-equivalent
    (see :func:`canonical_offsets`).  ``truncation`` is the per-axis mode
    cap N, so the lattice has ``(2 N + 1) ** m`` points.
    """

    m: int
    controlled: tuple[int, ...]
    offsets: tuple[float, ...]
    truncation: int

    def __post_init__(self):
        object.__setattr__(self, "controlled", tuple(sorted(int(a) for a in self.controlled)))
        object.__setattr__(self, "offsets", tuple(float(x) for x in self.offsets))
        if self.m < 1:
            raise ValueError("torus dimension m must be >= 1")
        if self.truncation < 1:
            raise ValueError("truncation N must be >= 1")
        if len(self.offsets) != self.m:
            raise ValueError("offsets must have length m")
        if len(set(self.controlled)) != len(self.controlled):
            raise ValueError("duplicate controlled axis")
        for a in self.controlled:
            if not 0 <= a < self.m:
                raise ValueError(f"controlled axis {a} out of range for m={self.m}")

    @property
    def dynamic(self) -> tuple[int, ...]:
        return tuple(k for k in range(self.m) if k not in self.controlled)

    @property
    def axis_size(self) -> int:
        return 2 * self.truncation + 1

    @property
    def size(self) -> int:
        return self.axis_size**self.m


def canonical_offsets(model: TorusModel) -> tuple[float, ...]:
    """Offsets reduced to [0, 1); representations differing by integers match here."""
    return tuple(x - np.floor(x) for x in model.offsets)


@lru_cache(maxsize=None)
def _mode_array(m: int, truncation: int) -> np.ndarray:
    arr = np.array(list(product(range(-truncation, truncation + 1), repeat=m)), dtype=np.int64)
    arr.flags.writeable = False
    return arr


def mode_array(model: TorusModel) -> np.ndarray:
    """All box modes as an (size, m) int array in lexicographic order."""
    return _mode_array(model.m, model.truncation)


def mode_iter(model: TorusModel) -> list[ModeIndex]:
    """Lexicographically ordered mode tuples; this is the global matrix layout."""
    return [tuple(int(v) for v in row) for row in mode_array(model)]


def mode_position(model: TorusModel, mode: Iterable[int]) -> int:
    """Position of a mode in the lexicographic layout."""
    n = tuple(int(v) for v in mode)
    if len(n) != model.m:
        raise DimensionMismatchError(f"mode has length {len(n)}, model has m={model.m}")
    N = model.truncation
    if any(abs(v) > N for v in n):
        raise ValueError(f"mode {n} outside the box |n_k| <= {N}")
    pos = 0
    for v in n:
        pos = pos * model.axis_size + (v + N)
    return pos


def interior_mask(model: TorusModel, guard: int) -> np.ndarray:
    """Boolean mask over the layout selecting modes with |n_k| <= N - guard."""
    if guard < 0:
        raise ValueError("guard bandwidth must be nonnegative")
    if guard > model.truncation:
        raise ValueError(f"guard {guard} exceeds truncation {model.truncation}: interior set is empty")
    return np.all(np.abs(mode_array(model)) <= model.truncation - guard, axis=1)


def interior_modes(model: TorusModel, guard: int) -> list[ModeIndex]:
    """Modes at least ``guard`` sites away from the truncation boundary."""
    mask = interior_mask(model, guard)
    return [tuple(int(v) for v in row) for row in mode_array(model)[mask]]


def sublattice_index(model: TorusModel, axes: tuple[int, ...]) -> tuple[np.ndarray, int]:
    """Ravel each full mode to its index in the sub-box over ``axes``.

    Returns ``(index, sub_size)`` where ``index[p]`` is the lexicographic
    position of mode p's components on ``axes`` within the
    ``(2N+1)**len(axes)`` sub-box.  Used to lift controlled-sublattice
    operators to the full lattice and to slice eigenspace blocks.
    """
    modes = mode_array(model)
    if not axes:
        return np.zeros(modes.shape[0], dtype=np.int64), 1
    cols = (modes[:, list(axes)] + model.truncation).T
    shape = (model.axis_size,) * len(axes)
    return np.ravel_multi_index(tuple(cols), shape), model.axis_size ** len(axes)


@dataclass(frozen=True)
class WaveFunction:
    """Complex amplitudes over the mode box, stored dense in layout order."""

    model: TorusModel
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (self.model.size,):
            raise DimensionMismatchError(
                f"expected {self.model.size} amplitudes, got shape {vals.shape}"
            )
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def zero(cls, model: TorusModel) -> "WaveFunction":
        return cls(model, np.zeros(model.size, dtype=np.complex128))

    @classmethod
    def basis(cls, model: TorusModel, mode: Iterable[int]) -> "WaveFunction":
        vals = np.zeros(model.size, dtype=np.complex128)
        vals[mode_position(model, mode)] = 1.0
        return cls(model, vals)

    @classmethod
    def from_modes(cls, model: TorusModel, amplitudes: Mapping[ModeIndex, complex]) -> "WaveFunction":
        vals = np.zeros(model.size, dtype=np.complex128)
        for mode, amp in amplitudes.items():
            vals[mode_position(model, mode)] = amp
        return cls(model, vals)

    def __getitem__(self, mode: Iterable[int]) -> complex:
        return complex(self.values[mode_position(self.model, mode)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def inner_product(s: WaveFunction, t: WaveFunction) -> complex:
    """Hermitian pairing of two wavefunctions on the same model.

    Convention: conjugate-linear in the first slot, so
    ``inner_product(s, t) = sum_n conj(s_n) t_n``.  Basis modes are
    orthonormal under this pairing.
    """
    if s.model != t.model:
        raise DimensionMismatchError("wavefunctions built over different models")
    return complex(np.vdot(s.values, t.values))


@dataclass(frozen=True)
class ClassicalState:
    """Action-angle point; angles are stored unwrapped (compare mod 2*pi)."""

    actions: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        I = np.asarray(self.actions, dtype=float).copy()
        phi = np.asarray(self.angles, dtype=float).copy()
        if I.ndim != 1 or phi.shape != I.shape:
            raise DimensionMismatchError("actions and angles must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(I)) and np.all(np.isfinite(phi))):
            raise ValueError("non-finite classical state")
        I.flags.writeable = False
        phi.flags.writeable = False
        object.__setattr__(self, "actions", I)
        object.__setattr__(self, "angles", phi)

    @property
    def m(self) -> int:
        return self.actions.shape[0]


def wrap_angles(phi: np.ndarray) -> np.ndarray:
    """Reduce angles to [0, 2*pi) for comparisons."""
    return np.mod(phi, TWO_PI)
