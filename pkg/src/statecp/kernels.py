"""Base smoothing kernels and the one-sided second-order kernel used by the test.

The test kernel is built from a base kernel ``W`` rescaled to the unit
interval (``Wt``) as

    K(u) = c * [Wt(u / sqrt(a)) - a * Wt(u)],    0 <= u <= 1,

a contrast between a copy of ``Wt`` compressed onto ``[0, sqrt(a)]`` and
``Wt`` itself.  For every ``a`` in (0, 1) the choice ``c = 1 / (sqrt(a) - a)``
gives unit mass, and the first moment vanishes identically because both
components share the same normalised mean.  The remaining free parameter
``a`` is chosen to minimise ``lambda_K = int K^2``.  For the Epanechnikov
base the optimum is ``a = 1/3``; ``a = 0.34`` is kept as a preset.

All kernel objects are immutable and picklable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import optimize

from .errors import KernelConstructionError
from .quadrature import adaptive_simpson, gauss_legendre

PUBLISHED_A = 0.34
MOMENT_TOL = 1e-8


@dataclass(frozen=True)
class BaseKernel:
    """A compactly supported weight function.

    Subclasses implement ``profile`` (and ``slope`` for the derivative) on
    the support; ``__call__`` returns zero outside it.
    """

    name: str = "kernel"
    support: tuple[float, float] = (-1.0, 1.0)
    breakpoints: tuple[float, ...] = field(default=())

    def profile(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def slope(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _masked(self, fn, u):
        u = np.asarray(u, dtype=float)
        lo, hi = self.support
        inside = (u >= lo) & (u <= hi)
        out = np.where(inside, fn(np.clip(u, lo, hi)), 0.0)
        return out if out.ndim else float(out)

    def __call__(self, u):
        return self._masked(self.profile, u)

    def derivative(self, u):
        return self._masked(self.slope, u)

    def integral(self) -> float:
        lo, hi = self.support
        return gauss_legendre(self, lo, hi, breakpoints=self.breakpoints)


@dataclass(frozen=True)
class Epanechnikov(BaseKernel):
    name: str = "epanechnikov"

    def profile(self, u):
        return 0.75 * (1.0 - u * u)

    def slope(self, u):
        return -1.5 * u


@dataclass(frozen=True)
class Biweight(BaseKernel):
    name: str = "biweight"

    def profile(self, u):
        return 0.9375 * (1.0 - u * u) ** 2

    def slope(self, u):
        return -3.75 * u * (1.0 - u * u)


@dataclass(frozen=True)
class Uniform(BaseKernel):
    name: str = "uniform"

    def profile(self, u):
        lo, hi = self.support
        return np.full_like(u, 1.0 / (hi - lo), dtype=float)

    def slope(self, u):
        return np.zeros_like(u, dtype=float)


@dataclass(frozen=True)
class AffineKernel(BaseKernel):
    """``parent`` pulled back onto ``[0, 1]`` by ``x -> lo + width * x``."""

    parent: BaseKernel | None = None
    lo: float = 0.0
    width: float = 1.0

    def profile(self, x):
        return self.width * self.parent.profile(self.lo + self.width * x)

    def slope(self, x):
        return self.width**2 * self.parent.slope(self.lo + self.width * x)


def epanechnikov() -> BaseKernel:
    return Epanechnikov()


def uniform(lo: float = 0.0, hi: float = 1.0) -> BaseKernel:
    return Uniform(support=(float(lo), float(hi)))


def biweight() -> BaseKernel:
    return Biweight()


def rescale_to_unit(base: BaseKernel) -> BaseKernel:
    """Map a compactly supported kernel affinely onto ``[0, 1]``.

    The result keeps unit mass: ``Wt(x) = (hi - lo) * W(lo + (hi - lo) x)``.
    For the Epanechnikov kernel this is ``6 x (1 - x)``.
    """
    lo, hi = (float(s) for s in base.support)
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise KernelConstructionError(
            f"kernel {base.name!r} has non-compact support {base.support}", "support"
        )
    if (lo, hi) == (0.0, 1.0):
        return base
    width = hi - lo
    bps = tuple(sorted((p - lo) / width for p in base.breakpoints))
    return AffineKernel(
        name=f"{base.name}[0,1]", support=(0.0, 1.0), breakpoints=bps,
        parent=base, lo=lo, width=width,
    )


@dataclass(frozen=True)
class AntisymKernel:
    """One-sided kernel ``K`` on ``[0, 1]`` with its mirror and contrast.

    Attributes
    ----------
    base : BaseKernel
        Unit-mass kernel on ``[0, 1]`` the construction starts from.
    a, c : float
        Mixing parameter and normalising constant.
    lambda_K, K2, psi_K : float
        ``int K^2``, ``int (K')^2 / lambda_K`` and ``int u^2 K / 2``.
    a_source : str
        ``"auto"``, ``"published"`` or ``"user"``.
    """

    base: BaseKernel
    a: float
    c: float
    lambda_K: float = float("nan")
    K2: float = float("nan")
    psi_K: float = float("nan")
    a_source: str = "user"

    @property
    def root_a(self) -> float:
        return math.sqrt(self.a)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        s = self.root_a
        pts = {s, *(p for p in self.base.breakpoints), *(s * p for p in self.base.breakpoints)}
        return tuple(sorted(p for p in pts if 0.0 < p < 1.0))

    def K(self, u):
        u = np.asarray(u, dtype=float)
        out = self.c * (np.asarray(self.base(u / self.root_a)) - self.a * np.asarray(self.base(u)))
        return out if out.ndim else float(out)

    __call__ = K

    def K_star(self, u):
        return self.K(-np.asarray(u, dtype=float))

    def K_tilde(self, u):
        u = np.asarray(u, dtype=float)
        out = np.asarray(self.K(u)) - np.asarray(self.K(-u))
        return out if out.ndim else float(out)

    def K_prime(self, u):
        """Derivative on ``[0, 1]``; one-sided at 0, 1 and at the kink."""
        u = np.asarray(u, dtype=float)
        s = self.root_a
        out = self.c * (
            np.asarray(self.base.derivative(u / s)) / s - self.a * np.asarray(self.base.derivative(u))
        )
        out = np.where((u >= 0.0) & (u <= 1.0), out, 0.0)
        return out if out.ndim else float(out)

    def summary(self) -> dict:
        return {
            "base": self.base.name,
            "a": self.a,
            "c": self.c,
            "lambda_K": self.lambda_K,
            "K2": self.K2,
            "psi_K": self.psi_K,
            "a_source": self.a_source,
        }


KernelLike = Union[AntisymKernel, BaseKernel]


def _profile(k: KernelLike):
    if isinstance(k, AntisymKernel):
        return k.K, k.K_prime, k.breakpoints
    return k, k.derivative, k.breakpoints


def kernel_constants(k: KernelLike) -> tuple[float, float, float]:
    """Return ``(lambda_K, K2, psi_K)`` by adaptive Simpson quadrature on [0, 1].

    Accepts an :class:`AntisymKernel` or a plain one-sided profile given as
    a :class:`BaseKernel` (used for diagnostics, where the moment
    conditions need not hold).
    """
    f, df, bps = _profile(k)
    lam = adaptive_simpson(lambda u: np.asarray(f(u)) ** 2, 0.0, 1.0, bps)
    k2 = adaptive_simpson(lambda u: np.asarray(df(u)) ** 2, 0.0, 1.0, bps) / lam
    psi = adaptive_simpson(lambda u: u * u * np.asarray(f(u)), 0.0, 1.0, bps) / 2.0
    return lam, k2, psi


def _normaliser(a: float, mass: float = 1.0) -> float:
    return 1.0 / (mass * (math.sqrt(a) - a))


def _lambda_of(base: BaseKernel, a: float) -> float:
    trial = AntisymKernel(base, a, _normaliser(a))
    return gauss_legendre(lambda u: np.asarray(trial.K(u)) ** 2, 0.0, 1.0, breakpoints=trial.breakpoints)


def q_objective(base: BaseKernel, a: float) -> float:
    """``int K / sqrt(int K^2)`` for the kernel with mixing parameter ``a``.

    With unit mass imposed this is ``1 / sqrt(lambda_K)``.
    """
    trial = AntisymKernel(base, a, _normaliser(a))
    bps = trial.breakpoints
    mass = gauss_legendre(trial.K, 0.0, 1.0, breakpoints=bps)
    return mass / math.sqrt(gauss_legendre(lambda u: np.asarray(trial.K(u)) ** 2, 0.0, 1.0, breakpoints=bps))


def solve_mixing_parameter(base: BaseKernel, lo: float = 0.05, hi: float = 0.95, tol: float = 1e-10) -> float:
    """Bounded Brent search for the ``a`` minimising ``lambda_K``."""
    res = optimize.minimize_scalar(
        lambda a: _lambda_of(base, a), bounds=(lo, hi), method="bounded", options={"xatol": tol}
    )
    a = float(res.x)
    if not lo < a < hi:
        raise KernelConstructionError(f"mixing parameter search left [{lo}, {hi}] (a={a})", "a")
    return a


def build_antisym_kernel(base: BaseKernel | None = None, a: float | str = "auto") -> AntisymKernel:
    """Construct the one-sided second-order kernel.

    Parameters
    ----------
    base : BaseKernel, optional
        Unit-mass kernel on ``[0, 1]``.  Defaults to the rescaled
        Epanechnikov kernel ``6 x (1 - x)``.
    a : float or {"auto", "published"}
        Mixing parameter.  ``"auto"`` minimises ``lambda_K``; ``"published"``
        uses the published value 0.34.

    Raises
    ------
    KernelConstructionError
        If the base is not on ``[0, 1]`` or a moment / endpoint condition
        fails; ``condition`` names the failing one.
    """
    if base is None:
        base = rescale_to_unit(epanechnikov())
    if tuple(base.support) != (0.0, 1.0):
        raise KernelConstructionError(
            f"base kernel {base.name!r} must be supported on [0, 1], got {base.support}", "support"
        )
    # Gauss-Legendre is exact for the polynomial pieces checked here; the
    # reported constants below still go through adaptive Simpson
    mass = gauss_legendre(base, 0.0, 1.0, breakpoints=base.breakpoints)
    if abs(mass - 1.0) > MOMENT_TOL:
        raise KernelConstructionError(f"base kernel mass is {mass!r}, expected 1", "base mass")

    if a == "auto":
        a_val, source = solve_mixing_parameter(base), "auto"
    elif a == "published":
        a_val, source = PUBLISHED_A, "published"
    else:
        a_val, source = float(a), "user"
    if not 0.0 < a_val < 1.0:
        raise KernelConstructionError(f"mixing parameter must lie in (0, 1), got {a_val}", "a")

    k = AntisymKernel(base, a_val, _normaliser(a_val), a_source=source)
    bps = k.breakpoints
    checks = {
        "zeroth moment (int K = 1)": gauss_legendre(k.K, 0.0, 1.0, breakpoints=bps) - 1.0,
        "first moment (int u K = 0)": gauss_legendre(lambda u: u * np.asarray(k.K(u)), 0.0, 1.0, breakpoints=bps),
        "endpoint K(0) = 0": k.K(0.0),
        "endpoint K(1) = 0": k.K(1.0),
    }
    for name, err in checks.items():
        if abs(err) > MOMENT_TOL:
            raise KernelConstructionError(f"kernel construction failed: {name} off by {err:.3g}", name)
    if not k.K_prime(0.0) > 0.0:
        raise KernelConstructionError("kernel construction failed: K'(0+) must be positive", "K'(0+) > 0")

    lam, k2, psi = kernel_constants(k)
    return AntisymKernel(base, a_val, k.c, lam, k2, psi, source)


_DEFAULT: dict[str, AntisymKernel] = {}


def default_kernel(a: float | str = "auto") -> AntisymKernel:
    """Cached kernel on the rescaled Epanechnikov base."""
    key = str(a)
    if key not in _DEFAULT:
        _DEFAULT[key] = build_antisym_kernel(None, a)
    return _DEFAULT[key]
