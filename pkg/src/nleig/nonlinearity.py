"""Nonlinearities and their local Lipschitz diagnostics.

Supported kinds:

* ``cubic``      f(psi) = |psi|^2 psi pointwise
* ``dnls_cubic`` the same map on lattice grids
* ``polynomial`` f(psi) = sum_{p,q} a_pq psi^p conj(psi)^q with
                 a_00 = a_01 = a_10 = 0; coefficients may be per-node arrays
* ``wire_combo`` f(psi) = |psi|^2 psi - psi * int_0^x Im(psi conj(psi')) ds
                 (1D only; cumulative trapezoid from the node nearest 0)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .core import GridFunction
from .errors import GridMismatch, NleigError, NotHomogeneous

_HOMOGENEOUS_DEGREE = {"cubic": 3.0, "dnls_cubic": 3.0, "wire_combo": 3.0}


@dataclass(frozen=True)
class NonlinearitySpec:
    """Selection of a nonlinearity kind plus polynomial coefficients."""

    kind: str
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("cubic", "dnls_cubic", "polynomial", "wire_combo"):
            raise NleigError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "polynomial":
            for (p, q), a in self.coefficients.items():
                if (p, q) in ((0, 0), (0, 1), (1, 0)) and np.any(np.asarray(a) != 0):
                    raise NleigError("polynomial terms a_00, a_01, a_10 must vanish")

    @property
    def homogeneity_degree(self) -> float | None:
        return _HOMOGENEOUS_DEGREE.get(self.kind)


def cubic() -> NonlinearitySpec:
    return NonlinearitySpec("cubic")


def eval_f(spec: NonlinearitySpec, psi: GridFunction) -> GridFunction:
    """Evaluate the nonlinearity on a grid function."""
    v = psi.values
    if spec.kind in ("cubic", "dnls_cubic"):
        return psi.with_values(np.abs(v) ** 2 * v)
    if spec.kind == "polynomial":
        out = np.zeros_like(v)
        cv = np.conj(v)
        for (p, q), a in spec.coefficients.items():
            out = out + np.asarray(a) * v**p * cv**q
        return psi.with_values(out)
    if spec.kind == "wire_combo":
        if psi.grid.dim != 1:
            raise GridMismatch("wire_combo requires a 1D grid")
        x = psi.grid.nodes[:, 0]
        dpsi = np.gradient(v, x)
        integrand = np.imag(v * np.conj(dpsi))
        cum = np.concatenate(([0.0], cumulative_trapezoid(integrand, x)))
        i0 = psi.grid.node_index(0.0)
        cum = cum - cum[i0]
        return psi.with_values(np.abs(v) ** 2 * v - v * cum)
    raise NleigError(f"unknown nonlinearity kind {spec.kind!r}")


def homogeneity_check(spec: NonlinearitySpec, psi: GridFunction, a: float) -> float:
    """||f(a psi) - a^q f(psi)|| / ||f(psi)|| for the kind's degree q."""
    q = spec.homogeneity_degree
    if q is None:
        raise NotHomogeneous(f"kind {spec.kind!r} has no homogeneity degree")
    fpsi = eval_f(spec, psi)
    fn = fpsi.norm()
    if fn == 0.0:
        return 0.0
    return (eval_f(spec, a * psi) - (a**q) * fpsi).norm() / fn


def lipschitz_estimate(spec: NonlinearitySpec, center: GridFunction,
                       radius: float, samples: int, seed: int = 0) -> float:
    """Sampled lower bound on the local Lipschitz constant of f.

    Difference quotients ||f(u) - f(v)||_sup / ||u - v||_sup are maximized
    over seeded sample pairs in the sup-norm ball around ``center``.  Short
    radial chords approximate directional derivatives at the ball boundary,
    so for pointwise nonlinearities the estimate tracks the scalar-calculus
    envelope (e.g. about 3 rho^2 for the cubic map on a disc of radius rho).
    Diagnostics only; not the continuum constant.
    """
    if radius <= 0 or samples < 2:
        raise NleigError("lipschitz_estimate needs radius > 0 and samples >= 2")
    rng = np.random.default_rng(seed)
    m = center.grid.size

    def draw(scale):
        rho = radius * scale * np.sqrt(rng.uniform(0, 1, m))
        ang = rng.uniform(0, 2 * np.pi, m)
        return rho * np.exp(1j * ang)

    sup = lambda x: float(np.max(np.abs(x)))
    best = 0.0
    prev = None
    for j in range(samples):
        delta = draw(1.0 if j % 3 else 0.5)
        u = center.values + delta
        candidates = [
            (u, center.values + 0.99 * delta),      # short radial chord
            (u, center.values - delta),             # mirrored pair
        ]
        if prev is not None:
            candidates.append((u, prev))
        for a, b in candidates:
            den = sup(a - b)
            if den == 0.0:
                continue
            fa = eval_f(spec, center.with_values(a)).values
            fb = eval_f(spec, center.with_values(b)).values
            best = max(best, sup(fa - fb) / den)
        prev = u
    return best


def pointwise_derivative(spec: NonlinearitySpec, psi: GridFunction):
    """Wirtinger derivatives (df/dpsi, df/dconj(psi)) at psi, per node.

    Defined for the pointwise kinds only; the Newton corrector assembles its
    real-coordinate Jacobian blocks from these.
    """
    v = psi.values
    if spec.kind in ("cubic", "dnls_cubic"):
        return 2.0 * np.abs(v) ** 2, v**2
    if spec.kind == "polynomial":
        fz = np.zeros_like(v)
        fzbar = np.zeros_like(v)
        cv = np.conj(v)
        for (p, q), a in spec.coefficients.items():
            a = np.asarray(a)
            if p >= 1:
                fz = fz + a * p * v ** (p - 1) * cv**q
            if q >= 1:
                fzbar = fzbar + a * q * v**p * cv ** (q - 1)
        return fz, fzbar
    raise NleigError(f"no pointwise derivative for kind {spec.kind!r}")
