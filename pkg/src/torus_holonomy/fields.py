"""Angle-dependent Fourier fields, affine observables and control connections.

Angle dependence enters exclusively through finite Fourier series, so sums,
products and angle derivatives are exact coefficient operations and matrix
elements downstream are exact.  An affine observable is
``f = sum_k a_k(phi) I_k + b(phi)`` with real-valued component fields; the
Poisson bracket of two affine observables is again affine and is computed
in closed form here.

A control connection couples parameter velocities to angle drift.  Its
components carry a Fourier shift over the torus angles and a polynomial
dependence on the parameter point sigma, so sigma-derivatives and line
integrals are exact as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BandwidthError, DimensionMismatchError

_REALITY_TOL = 1e-12


def _as_shift(c: Iterable[int], m: int) -> tuple[int, ...]:
    shift = tuple(int(v) for v in c)
    if len(shift) != m:
        raise DimensionMismatchError(f"shift {shift} has length {len(shift)}, expected {m}")
    return shift


@dataclass(frozen=True)
class TorusFourierField:
    """Finite Fourier series ``F(phi) = sum_c F_c exp(i c . phi)`` on the m-torus.

    ``real=True`` declares a real-valued function and requires the symmetry
    ``F_{-c} = conj(F_c)`` (checked at construction).  Exact zeros are pruned
    so the support is canonical.
    """

    m: int
    coefficients: Mapping[tuple[int, ...], complex] = field(default_factory=dict)
    real: bool = True

    def __post_init__(self):
        coeffs = {}
        for c, v in self.coefficients.items():
            shift = _as_shift(c, self.m)
            val = complex(v)
            if val != 0:
                coeffs[shift] = val
        object.__setattr__(self, "coefficients", coeffs)
        if self.real:
            scale = max((abs(v) for v in coeffs.values()), default=1.0)
            for c, v in coeffs.items():
                mirror = coeffs.get(tuple(-x for x in c), 0.0)
                if abs(np.conj(v) - mirror) > _REALITY_TOL * max(1.0, scale):
                    raise ValueError(
                        f"field flagged real but coefficient at {c} breaks F(-c) = conj(F(c))"
                    )

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, m: int) -> "TorusFourierField":
        return cls(m, {})

    @classmethod
    def constant(cls, m: int, value: float) -> "TorusFourierField":
        return cls(m, {(0,) * m: complex(value)})

    @classmethod
    def cosine(cls, m: int, axis: int, amplitude: float = 1.0) -> "TorusFourierField":
        plus = tuple(1 if k == axis else 0 for k in range(m))
        minus = tuple(-v for v in plus)
        return cls(m, {plus: amplitude / 2.0, minus: amplitude / 2.0})

    @classmethod
    def sine(cls, m: int, axis: int, amplitude: float = 1.0) -> "TorusFourierField":
        plus = tuple(1 if k == axis else 0 for k in range(m))
        minus = tuple(-v for v in plus)
        return cls(m, {plus: -0.5j * amplitude, minus: 0.5j * amplitude})

    @classmethod
    def from_half_spectrum(cls, m: int, half: Mapping[tuple[int, ...], complex]) -> "TorusFourierField":
        """Build a real field from one coefficient per +/-c pair.

        Each listed shift c also contributes conj(value) at -c.  The zero
        shift must be real.  Listing both members of a pair is rejected to
        avoid double counting.
        """
        coeffs: dict[tuple[int, ...], complex] = {}
        for c, v in half.items():
            shift = _as_shift(c, m)
            mirror = tuple(-x for x in shift)
            if mirror in coeffs and shift != mirror:
                raise ValueError(f"both {shift} and {mirror} listed; give one per pair")
            val = complex(v)
            if shift == mirror:
                if abs(val.imag) > _REALITY_TOL * max(1.0, abs(val)):
                    raise ValueError("zero-shift coefficient of a real field must be real")
                coeffs[shift] = complex(val.real)
            else:
                coeffs[shift] = val
                coeffs[mirror] = np.conj(val)
        return cls(m, coeffs)

    # -- queries -----------------------------------------------------------

    @property
    def bandwidth(self) -> int:
        """Smallest C with |c_k| <= C for every supported shift."""
        if not self.coefficients:
            return 0
        return max(max(abs(x) for x in c) for c in self.coefficients)

    def angle_axes(self) -> frozenset[int]:
        """Axes the field actually depends on."""
        axes = set()
        for c in self.coefficients:
            axes.update(k for k, x in enumerate(c) if x != 0)
        return frozenset(axes)

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    def evaluate(self, phi: Sequence[float]) -> complex:
        phi = np.asarray(phi, dtype=float)
        if phi.shape != (self.m,):
            raise DimensionMismatchError(f"angle vector shape {phi.shape}, expected ({self.m},)")
        total = 0.0 + 0.0j
        for c, v in sorted(self.coefficients.items()):
            total += v * np.exp(1j * float(np.dot(c, phi)))
        return total

    def evaluate_real(self, phi: Sequence[float]) -> float:
        if not self.real:
            raise ValueError("evaluate_real requires a real-flagged field")
        return float(self.evaluate(phi).real)

    # -- exact algebra -----------------------------------------------------

    def derivative(self, axis: int) -> "TorusFourierField":
        """Angle derivative along one axis; the derivative of a real field is real."""
        coeffs = {c: v * 1j * c[axis] for c, v in self.coefficients.items() if c[axis] != 0}
        return TorusFourierField(self.m, coeffs, real=self.real)

    def __add__(self, other: "TorusFourierField") -> "TorusFourierField":
        if self.m != other.m:
            raise DimensionMismatchError("field dimensions differ")
        coeffs = dict(self.coefficients)
        for c, v in other.coefficients.items():
            coeffs[c] = coeffs.get(c, 0.0) + v
        return TorusFourierField(self.m, coeffs, real=self.real and other.real)

    def __sub__(self, other: "TorusFourierField") -> "TorusFourierField":
        return self + other.scaled(-1.0)

    def __mul__(self, other: "TorusFourierField") -> "TorusFourierField":
        """Pointwise product via coefficient convolution (exact)."""
        if self.m != other.m:
            raise DimensionMismatchError("field dimensions differ")
        coeffs: dict[tuple[int, ...], complex] = {}
        for c1, v1 in self.coefficients.items():
            for c2, v2 in other.coefficients.items():
                c = tuple(x + y for x, y in zip(c1, c2))
                coeffs[c] = coeffs.get(c, 0.0) + v1 * v2
        return TorusFourierField(self.m, coeffs, real=self.real and other.real)

    def scaled(self, s: complex) -> "TorusFourierField":
        s = complex(s)
        real = self.real and s.imag == 0.0
        return TorusFourierField(self.m, {c: s * v for c, v in self.coefficients.items()}, real=real)


@dataclass(frozen=True)
class AffineObservable:
    """Observable affine in the actions: ``f = sum_k a_k(phi) I_k + b(phi)``."""

    action_coeffs: tuple[TorusFourierField, ...]
    scalar: TorusFourierField

    def __post_init__(self):
        object.__setattr__(self, "action_coeffs", tuple(self.action_coeffs))
        m = self.scalar.m
        if len(self.action_coeffs) != m:
            raise DimensionMismatchError("need one action coefficient field per axis")
        for f in self.action_coeffs:
            if f.m != m:
                raise DimensionMismatchError("component field dimension differs")
            if not f.real:
                raise ValueError("affine observables must have real component fields")
        if not self.scalar.real:
            raise ValueError("affine observables must have real component fields")

    @property
    def m(self) -> int:
        return self.scalar.m

    @property
    def bandwidth(self) -> int:
        return max([self.scalar.bandwidth] + [f.bandwidth for f in self.action_coeffs])

    @classmethod
    def zero(cls, m: int) -> "AffineObservable":
        z = TorusFourierField.zero(m)
        return cls((z,) * m, z)

    @classmethod
    def constant(cls, m: int, value: float) -> "AffineObservable":
        return cls((TorusFourierField.zero(m),) * m, TorusFourierField.constant(m, value))

    @classmethod
    def action(cls, m: int, axis: int) -> "AffineObservable":
        """The bare action observable I_axis."""
        fields = tuple(
            TorusFourierField.constant(m, 1.0) if k == axis else TorusFourierField.zero(m)
            for k in range(m)
        )
        return cls(fields, TorusFourierField.zero(m))

    @classmethod
    def from_parts(
        cls,
        m: int,
        action_coeffs: Mapping[int, TorusFourierField] | None = None,
        scalar: TorusFourierField | None = None,
    ) -> "AffineObservable":
        coeffs = dict(action_coeffs or {})
        fields = tuple(coeffs.get(k, TorusFourierField.zero(m)) for k in range(m))
        return cls(fields, scalar if scalar is not None else TorusFourierField.zero(m))

    def evaluate(self, actions: Sequence[float], phi: Sequence[float]) -> float:
        actions = np.asarray(actions, dtype=float)
        total = self.scalar.evaluate_real(phi)
        for k in range(self.m):
            if not self.action_coeffs[k].is_zero:
                total += self.action_coeffs[k].evaluate_real(phi) * actions[k]
        return float(total)

    @property
    def is_zero(self) -> bool:
        return self.scalar.is_zero and all(f.is_zero for f in self.action_coeffs)


def poisson_bracket(
    f: AffineObservable, g: AffineObservable, max_bandwidth: int | None = None
) -> AffineObservable:
    """Closed-form bracket ``{f, g} = d^k f d_k g - d_k f d^k g`` (I-derivative up).

    The bracket of two affine observables is again affine:

        a_r(result) = sum_k ( a_k(f) d_k a_r(g) - a_k(g) d_k a_r(f) )
        b(result)   = sum_k ( a_k(f) d_k b(g)   - a_k(g) d_k b(f) )

    Coefficient arithmetic is exact; nothing is truncated.  If
    ``max_bandwidth`` is given, a result wider than it is rejected instead
    of being clipped.
    """
    if f.m != g.m:
        raise DimensionMismatchError("observables have different torus dimensions")
    m = f.m
    new_actions = []
    for r in range(m):
        total = TorusFourierField.zero(m)
        for k in range(m):
            total = total + f.action_coeffs[k] * g.action_coeffs[r].derivative(k)
            total = total - g.action_coeffs[k] * f.action_coeffs[r].derivative(k)
        new_actions.append(total)
    new_scalar = TorusFourierField.zero(m)
    for k in range(m):
        new_scalar = new_scalar + f.action_coeffs[k] * g.scalar.derivative(k)
        new_scalar = new_scalar - g.action_coeffs[k] * f.scalar.derivative(k)
    result = AffineObservable(tuple(new_actions), new_scalar)
    if max_bandwidth is not None and result.bandwidth > max_bandwidth:
        raise BandwidthError(
            f"bracket bandwidth {result.bandwidth} exceeds declared cap {max_bandwidth}"
        )
    return result


@dataclass(frozen=True)
class ParameterPolynomial:
    """Polynomial on the parameter space R^d, exponent tuple -> coefficient."""

    dim: int
    coefficients: Mapping[tuple[int, ...], complex] = field(default_factory=dict)

    def __post_init__(self):
        coeffs = {}
        for e, v in self.coefficients.items():
            exps = tuple(int(x) for x in e)
            if len(exps) != self.dim:
                raise DimensionMismatchError(f"exponent tuple {exps} has wrong length")
            if any(x < 0 for x in exps):
                raise ValueError("negative exponent")
            val = complex(v)
            if val != 0:
                coeffs[exps] = val
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def constant(cls, dim: int, value: complex) -> "ParameterPolynomial":
        return cls(dim, {(0,) * dim: value})

    @property
    def degree(self) -> int:
        if not self.coefficients:
            return 0
        return max(sum(e) for e in self.coefficients)

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    def evaluate(self, sigma: Sequence[float]) -> complex:
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape != (self.dim,):
            raise DimensionMismatchError(f"parameter point shape {sigma.shape}, expected ({self.dim},)")
        total = 0.0 + 0.0j
        for e, v in sorted(self.coefficients.items()):
            term = v
            for x, p in zip(sigma, e):
                if p:
                    term = term * x**p
            total += term
        return total

    def conjugate(self) -> "ParameterPolynomial":
        return ParameterPolynomial(self.dim, {e: np.conj(v) for e, v in self.coefficients.items()})


@dataclass(frozen=True)
class ControlConnection:
    """Coupling of parameter velocities to angle drift on selected torus axes.

    ``components[(axis, beta)]`` maps a Fourier shift over the torus angles
    to a sigma-polynomial coefficient; the represented field is

        L_axis_beta(sigma, phi) = sum_c poly_c(sigma) exp(i c . phi).

    Reality for real sigma requires ``poly_{-c} = conj(poly_c)`` and is
    enforced here.  Whether the support respects a model's
    controlled/dynamic split is *not* enforced at construction: it is
    checked where it matters (``split_residual`` counts violations,
    operator builders raise).
    """

    m: int
    parameter_dim: int
    components: Mapping[tuple[int, int], Mapping[tuple[int, ...], ParameterPolynomial]] = field(
        default_factory=dict
    )

    def __post_init__(self):
        comps: dict[tuple[int, int], dict[tuple[int, ...], ParameterPolynomial]] = {}
        for (axis, beta), fourier in self.components.items():
            axis, beta = int(axis), int(beta)
            if not 0 <= axis < self.m:
                raise DimensionMismatchError(f"torus axis {axis} out of range for m={self.m}")
            if not 0 <= beta < self.parameter_dim:
                raise DimensionMismatchError(
                    f"parameter axis {beta} out of range for d={self.parameter_dim}"
                )
            entry: dict[tuple[int, ...], ParameterPolynomial] = {}
            for c, poly in fourier.items():
                shift = _as_shift(c, self.m)
                if poly.dim != self.parameter_dim:
                    raise DimensionMismatchError("sigma-polynomial dimension differs from d")
                if not poly.is_zero:
                    entry[shift] = poly
            for shift, poly in entry.items():
                mirror = entry.get(tuple(-x for x in shift))
                if mirror is None:
                    raise ValueError(f"component ({axis},{beta}) misses the mirror of shift {shift}")
                conj = poly.conjugate()
                scale = max((abs(v) for v in poly.coefficients.values()), default=1.0)
                for e, v in conj.coefficients.items():
                    if abs(v - mirror.coefficients.get(e, 0.0)) > _REALITY_TOL * max(1.0, scale):
                        raise ValueError(
                            f"component ({axis},{beta}) breaks reality at shift {shift}"
                        )
            if entry:
                comps[(axis, beta)] = entry
        object.__setattr__(self, "components", comps)

    @classmethod
    def empty(cls, m: int, parameter_dim: int) -> "ControlConnection":
        return cls(m, parameter_dim, {})

    @classmethod
    def from_half_spectrum(
        cls,
        m: int,
        parameter_dim: int,
        half: Mapping[tuple[int, int], Mapping[tuple[int, ...], ParameterPolynomial]],
    ) -> "ControlConnection":
        """Build from one Fourier entry per +/-c pair, mirroring conjugates."""
        comps: dict[tuple[int, int], dict[tuple[int, ...], ParameterPolynomial]] = {}
        for key, fourier in half.items():
            entry: dict[tuple[int, ...], ParameterPolynomial] = {}
            for c, poly in fourier.items():
                shift = _as_shift(c, m)
                mirror = tuple(-x for x in shift)
                if mirror in entry and shift != mirror:
                    raise ValueError(f"both {shift} and {mirror} listed; give one per pair")
                entry[shift] = poly
                if shift != mirror:
                    entry[mirror] = poly.conjugate()
            comps[key] = entry
        return cls(m, parameter_dim, comps)

    # -- queries -----------------------------------------------------------

    def component_axes(self) -> frozenset[int]:
        return frozenset(axis for axis, _ in self.components)

    def angle_axes(self) -> frozenset[int]:
        axes: set[int] = set()
        for fourier in self.components.values():
            for c in fourier:
                axes.update(k for k, x in enumerate(c) if x != 0)
        return frozenset(axes)

    @property
    def bandwidth(self) -> int:
        b = 0
        for fourier in self.components.values():
            for c in fourier:
                b = max(b, max((abs(x) for x in c), default=0))
        return b

    def is_angle_independent(self) -> bool:
        return not self.angle_axes()

    def field(self, axis: int, beta: int, sigma: Sequence[float]) -> TorusFourierField:
        """The (axis, beta) component frozen at a parameter point."""
        fourier = self.components.get((axis, beta))
        if not fourier:
            return TorusFourierField.zero(self.m)
        coeffs = {c: poly.evaluate(sigma) for c, poly in fourier.items()}
        return TorusFourierField(self.m, coeffs, real=True)

    def as_observable(self, sigma: Sequence[float], velocity: Sequence[float]) -> AffineObservable:
        """Velocity pairing: affine observable with a_axis = sum_beta L_axis_beta(sigma) v_beta.

        Linear in the velocity; the scalar part is zero.
        """
        velocity = np.asarray(velocity, dtype=float)
        if velocity.shape != (self.parameter_dim,):
            raise DimensionMismatchError(
                f"velocity shape {velocity.shape}, expected ({self.parameter_dim},)"
            )
        parts: dict[int, TorusFourierField] = {}
        for (axis, beta), _ in sorted(self.components.items()):
            v = velocity[beta]
            if v == 0.0:
                continue
            fld = self.field(axis, beta, sigma).scaled(float(v))
            parts[axis] = parts.get(axis, TorusFourierField.zero(self.m)) + fld
        return AffineObservable.from_parts(self.m, parts)

    def restricted(self, axes: tuple[int, ...]) -> "ControlConnection":
        """Project onto a sub-torus spanned by ``axes`` (order preserved).

        Requires every component axis and every Fourier shift to live on
        ``axes``; anything else would be silently dropped and is rejected.
        """
        from .errors import SplitViolationError

        axes = tuple(axes)
        pos = {a: i for i, a in enumerate(axes)}
        comps: dict[tuple[int, int], dict[tuple[int, ...], ParameterPolynomial]] = {}
        for (axis, beta), fourier in self.components.items():
            if axis not in pos:
                raise SplitViolationError(f"component on axis {axis} outside {axes}")
            entry = {}
            for c, poly in fourier.items():
                if any(x != 0 for k, x in enumerate(c) if k not in pos):
                    raise SplitViolationError(f"Fourier shift {c} touches axes outside {axes}")
                entry[tuple(c[a] for a in axes)] = poly
            comps[(pos[axis], beta)] = entry
        return ControlConnection(len(axes), self.parameter_dim, comps)


def connection_as_observable(
    connection: ControlConnection, sigma: Sequence[float], velocity: Sequence[float]
) -> AffineObservable:
    """Module-level alias for :meth:`ControlConnection.as_observable`."""
    return connection.as_observable(sigma, velocity)


@dataclass(frozen=True)
class ActionPolynomial:
    """Real polynomial in the m action variables, exponent tuple -> coefficient.

    Used as the dynamic Hamiltonian.  Which axes it may touch is a property
    of the model's split and is checked at the point of use, so violating
    instances can be constructed for the structural diagnostics.
    """

    m: int
    terms: Mapping[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        terms = {}
        for e, v in self.terms.items():
            exps = tuple(int(x) for x in e)
            if len(exps) != self.m:
                raise DimensionMismatchError(f"exponent tuple {exps} has wrong length")
            if any(x < 0 for x in exps):
                raise ValueError("negative exponent")
            val = float(v)
            if val != 0.0:
                terms[exps] = val
        object.__setattr__(self, "terms", terms)

    @classmethod
    def zero(cls, m: int) -> "ActionPolynomial":
        return cls(m, {})

    @classmethod
    def monomial(cls, m: int, axis: int, power: int, coefficient: float = 1.0) -> "ActionPolynomial":
        e = tuple(power if k == axis else 0 for k in range(m))
        return cls(m, {e: coefficient})

    def action_axes(self) -> frozenset[int]:
        axes: set[int] = set()
        for e in self.terms:
            axes.update(k for k, x in enumerate(e) if x > 0)
        return frozenset(axes)

    def evaluate(self, actions: Sequence[float]) -> float:
        actions = np.asarray(actions, dtype=float)
        if actions.shape != (self.m,):
            raise DimensionMismatchError(f"action vector shape {actions.shape}, expected ({self.m},)")
        total = 0.0
        for e, v in sorted(self.terms.items()):
            term = v
            for x, p in zip(actions, e):
                if p:
                    term *= x**p
            total += term
        return total

    def gradient(self, actions: Sequence[float]) -> np.ndarray:
        actions = np.asarray(actions, dtype=float)
        grad = np.zeros(self.m)
        for e, v in sorted(self.terms.items()):
            for k, p in enumerate(e):
                if p == 0:
                    continue
                term = v * p * actions[k] ** (p - 1)
                for j, q in enumerate(e):
                    if j != k and q:
                        term *= actions[j] ** q
                grad[k] += term
        return grad
