"""Operator matrices on the truncated mode basis.

Quantization of an affine observable ``f = sum_k a_k(phi) I_k + b(phi)`` is
the first-order operator

    f_hat = -i a_k d_k - (i/2) (d_k a_k) - a_k offset_k + b.

Applying it to a basis mode exp(i n . phi) and collecting the Fourier shift
c of each coefficient gives the closed-form matrix element

    <n + c | f_hat | n> = sum_k A_k[c] (n_k + c_k / 2 - offset_k) + B[c],

where A_k, B are the coefficient tables of a_k, b.  The half-shift makes
the element manifestly Hermitian for real fields, and the formula is locked
against an independent torus-quadrature oracle in the test suite.  Shifts
that leave the box are dropped; identities involving shift operators are
therefore asserted on interior modes only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BandwidthError, DimensionMismatchError, SplitViolationError
from .fields import ActionPolynomial, AffineObservable, poisson_bracket
from .lattice import TorusModel, interior_mask, mode_array


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex matrix in the lexicographic mode layout."""

    model: TorusModel
    matrix: np.ndarray
    bandwidth: int = 0

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.complex128)
        size = self.model.size
        if mat.shape != (size, size):
            raise DimensionMismatchError(f"matrix shape {mat.shape}, expected ({size}, {size})")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    def dagger(self) -> np.ndarray:
        return self.matrix.conj().T

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.dagger())))

    def offdiagonal_mass(self) -> float:
        off = self.matrix - np.diag(np.diag(self.matrix))
        return float(np.max(np.abs(off)))


def action_operator(model: TorusModel, axis: int) -> OperatorMatrix:
    """Diagonal action operator with entries ``n_axis - offset_axis``."""
    if not 0 <= axis < model.m:
        raise DimensionMismatchError(f"axis {axis} out of range for m={model.m}")
    diag = mode_array(model)[:, axis] - model.offsets[axis]
    return OperatorMatrix(model, np.diag(diag.astype(complex)))


def hamiltonian_spectrum(
    model: TorusModel, hamiltonian: ActionPolynomial | Callable[[np.ndarray], float]
) -> np.ndarray:
    """Diagonal values H(n - offsets), one per mode in layout order.

    A polynomial Hamiltonian must not touch controlled actions.  A plain
    callable is the hook for analytic Hamiltonians: it receives only the
    dynamic components of ``n - offsets`` (ordered by dynamic axis), which
    enforces the split structurally.
    """
    shifted = mode_array(model) - np.asarray(model.offsets)
    if isinstance(hamiltonian, ActionPolynomial):
        if hamiltonian.m != model.m:
            raise DimensionMismatchError("Hamiltonian dimension differs from model")
        bad = hamiltonian.action_axes() & set(model.controlled)
        if bad:
            raise SplitViolationError(f"Hamiltonian depends on controlled action axes {sorted(bad)}")
        return np.array([hamiltonian.evaluate(row) for row in shifted])
    dyn = list(model.dynamic)
    return np.array([float(hamiltonian(row[dyn])) for row in shifted])


def hamiltonian_operator(
    model: TorusModel, hamiltonian: ActionPolynomial | Callable[[np.ndarray], float]
) -> OperatorMatrix:
    """Diagonal Hamiltonian; entries are independent of controlled indices."""
    return OperatorMatrix(model, np.diag(hamiltonian_spectrum(model, hamiltonian).astype(complex)))


def quantize_affine(model: TorusModel, observable: AffineObservable) -> OperatorMatrix:
    """Matrix of the quantized affine observable via the element formula above."""
    if observable.m != model.m:
        raise DimensionMismatchError("observable dimension differs from model")
    C = observable.bandwidth
    N = model.truncation
    if C > N:
        raise BandwidthError(f"field bandwidth {C} exceeds truncation {N}")
    modes = mode_array(model)
    offsets = np.asarray(model.offsets)
    size = model.size
    shape = (model.axis_size,) * model.m
    matrix = np.zeros((size, size), dtype=complex)
    shifts: set[tuple[int, ...]] = set(observable.scalar.coefficients)
    for fld in observable.action_coeffs:
        shifts.update(fld.coefficients)
    for c in sorted(shifts):
        carr = np.asarray(c)
        target = modes + carr
        ok = np.all(np.abs(target) <= N, axis=1)
        if not ok.any():
            continue
        values = np.zeros(size, dtype=complex)
        for k in range(model.m):
            A = observable.action_coeffs[k].coefficients.get(c)
            if A:
                values += A * (modes[:, k] + 0.5 * c[k] - offsets[k])
        B = observable.scalar.coefficients.get(c)
        if B:
            values += B
        rows = np.ravel_multi_index((target[ok] + N).T, shape)
        cols = np.ravel_multi_index((modes[ok] + N).T, shape)
        matrix[rows, cols] += values[ok]
    return OperatorMatrix(model, matrix, bandwidth=C)


def multiplication_operator(model: TorusModel, shift: Iterable[int]) -> OperatorMatrix:
    """0/1 matrix of multiplication by the basis mode with the given shift."""
    c = tuple(int(x) for x in shift)
    if len(c) != model.m:
        raise DimensionMismatchError(f"shift length {len(c)}, expected {model.m}")
    N = model.truncation
    if any(abs(x) > 2 * N for x in c):
        raise ValueError(f"shift {c} exceeds 2N={2 * N}; the truncated matrix would vanish")
    modes = mode_array(model)
    target = modes + np.asarray(c)
    ok = np.all(np.abs(target) <= N, axis=1)
    shape = (model.axis_size,) * model.m
    matrix = np.zeros((model.size, model.size), dtype=complex)
    if ok.any():
        rows = np.ravel_multi_index((target[ok] + N).T, shape)
        cols = np.ravel_multi_index((modes[ok] + N).T, shape)
        matrix[rows, cols] = 1.0
    return OperatorMatrix(model, matrix, bandwidth=max((abs(x) for x in c), default=0))


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> np.ndarray:
    if a.model != b.model:
        raise DimensionMismatchError("operators built over different models")
    return a.matrix @ b.matrix - b.matrix @ a.matrix


def dirac_residual(model: TorusModel, f: AffineObservable, g: AffineObservable) -> float:
    """Max-norm of [f_hat, g_hat] + i (bracket quantized) on interior modes.

    The commutator of operators with bandwidths C_f, C_g is exact on modes
    deeper than C_f + C_g from the boundary, so rows and columns are
    restricted there (capped at the truncation).
    """
    bracket = poisson_bracket(f, g)
    fm = quantize_affine(model, f).matrix
    gm = quantize_affine(model, g).matrix
    bm = quantize_affine(model, bracket).matrix
    residual = (fm @ gm - gm @ fm) + 1j * bm
    guard = min(f.bandwidth + g.bandwidth, model.truncation)
    keep = interior_mask(model, guard)
    if not keep.any():
        return 0.0
    sub = residual[np.ix_(keep, keep)]
    return float(np.max(np.abs(sub)))


@dataclass(frozen=True)
class SpectralComparison:
    """Outcome of matching two diagonal spectra."""

    max_deviation: float
    compared: int
    method: str

    def matches(self, tolerance: float) -> bool:
        return self.max_deviation <= tolerance


def lambda_shift_equivalence(
    model: TorusModel,
    hamiltonian: ActionPolynomial | Callable[[np.ndarray], float],
    shift: Sequence[float],
) -> SpectralComparison:
    """Compare Hamiltonian spectra for offsets and offsets + shift.

    For an integer shift the representations are gauge-equivalent: the
    spectra match mode-for-mode after re-indexing ``n -> n + shift`` on the
    overlap of the two boxes.  For a non-integer shift no re-indexing
    exists; the sorted spectra over the full boxes are compared instead and
    genuinely differ.
    """
    shift = np.asarray(shift, dtype=float)
    if shift.shape != (model.m,):
        raise DimensionMismatchError(f"shift shape {shift.shape}, expected ({model.m},)")
    shifted_model = TorusModel(
        model.m,
        model.controlled,
        tuple(np.asarray(model.offsets) + shift),
        model.truncation,
    )
    base = hamiltonian_spectrum(model, hamiltonian)
    moved = hamiltonian_spectrum(shifted_model, hamiltonian)
    if np.all(shift == np.round(shift)):
        z = shift.astype(int)
        modes = mode_array(model)
        target = modes + z
        ok = np.all(np.abs(target) <= model.truncation, axis=1)
        if not ok.any():
            return SpectralComparison(0.0, 0, "reindex-empty-overlap")
        shape = (model.axis_size,) * model.m
        rows = np.ravel_multi_index((target[ok] + model.truncation).T, shape)
        cols = np.flatnonzero(ok)
        dev = float(np.max(np.abs(base[cols] - moved[rows])))
        return SpectralComparison(dev, int(ok.sum()), "reindex")
    dev = float(np.max(np.abs(np.sort(base) - np.sort(moved))))
    return SpectralComparison(dev, base.size, "sorted")


def halfform_equivalence(
    model: TorusModel,
    antiperiodic_axes: Iterable[int],
    hamiltonian: ActionPolynomial | Callable[[np.ndarray], float] | None = None,
) -> SpectralComparison:
    """Antiperiodic boundary behavior versus a half-integer offset shift.

    On each antiperiodic axis j the action spectrum is ``n_j - offset_j +
    1/2`` (half-integer mode labels); that must coincide mode-for-mode with
    the periodic representation at ``offset_j - 1/2``.  If a Hamiltonian is
    given its spectra are compared the same way.
    """
    axes = sorted(set(int(a) for a in antiperiodic_axes))
    for a in axes:
        if not 0 <= a < model.m:
            raise DimensionMismatchError(f"axis {a} out of range")
    half = np.array([0.5 if k in axes else 0.0 for k in range(model.m)])
    shifted_model = TorusModel(
        model.m,
        model.controlled,
        tuple(np.asarray(model.offsets) - half),
        model.truncation,
    )
    modes = mode_array(model)
    dev = 0.0
    compared = 0
    for k in range(model.m):
        anti = modes[:, k] - model.offsets[k] + (0.5 if k in axes else 0.0)
        periodic = modes[:, k] - shifted_model.offsets[k]
        dev = max(dev, float(np.max(np.abs(anti - periodic))))
        compared += modes.shape[0]
    if hamiltonian is not None:
        anti_vals = np.asarray(
            [_halfform_value(hamiltonian, model, row, half) for row in modes]
        )
        periodic_vals = hamiltonian_spectrum(shifted_model, hamiltonian)
        dev = max(dev, float(np.max(np.abs(anti_vals - periodic_vals))))
        compared += modes.shape[0]
    return SpectralComparison(dev, compared, "halfform")


def _halfform_value(hamiltonian, model, mode, half) -> float:
    shifted = mode - np.asarray(model.offsets) + half
    if isinstance(hamiltonian, ActionPolynomial):
        return hamiltonian.evaluate(shifted)
    dyn = list(model.dynamic)
    return float(hamiltonian(shifted[dyn]))
