"""Parameter maps between the weighted inequality (a, b, d) and the cylinder (q, Lambda).

Everything downstream is keyed on :class:`FsParams`, the full set of scalars
attached to one point (q, d) of the Felli-Schneider curve
Lambda = 4(d-1)/(q^2-4).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .specfun import cosh_moment, sphere_area

__all__ = [
    "ParameterError",
    "FsParams",
    "Classification",
    "critical_exponent",
    "lambda_fs",
    "fs_params",
    "cylinder_params",
    "classify",
    "exponent_from_ab",
]

FS_RTOL = 1e-12


class ParameterError(ValueError):
    """Raised when (q, d) or (a, b, d) lies outside the supported range."""


@dataclass(frozen=True)
class FsParams:
    """Scalars of the cylinder problem at exponent q, dimension d and weight Lambda.

    ``frak_a``/``frak_b`` are the two half-exponents of the degree-2 series
    and ``xi`` their difference. ``C_ab`` equals ||u||_q^{q-2} on the cylinder.
    """

    q: float
    d: float
    Lambda: float
    alpha: float
    beta: float
    a: float
    b: float
    frak_a: float
    frak_b: float
    xi: float
    M: float
    sphere_area: float
    C_ab: float
    on_fs_curve: bool = field(default=True, compare=False)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Classification:
    admissible: bool
    attainable: bool
    symmetric: bool
    on_fs_curve: bool
    q: float | None = None
    Lambda: float | None = None
    violations: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        out = asdict(self)
        out["violations"] = list(self.violations)
        return out


def critical_exponent(d: float) -> float:
    """2d/(d-2) for d > 2, infinity for d <= 2."""
    return math.inf if d <= 2 else 2 * d / (d - 2)


def lambda_fs(q: float, d: float) -> float:
    return 4 * (d - 1) / (q * q - 4)


def exponent_from_ab(a: float, b: float, d: float) -> float:
    denom = d - 2 + 2 * (b - a)
    return math.inf if denom == 0 else 2 * d / denom


def _check_qd(q: float, d: float) -> None:
    if not d >= 2:
        raise ParameterError(f"dimension d={d} must be at least 2")
    if not q > 2:
        raise ParameterError(f"exponent q={q} must exceed 2")
    if not q < critical_exponent(d):
        raise ParameterError(
            f"exponent q={q} is not subcritical: need q < 2d/(d-2) = {critical_exponent(d):g}"
        )


def cylinder_params(q: float, d: float, Lambda: float) -> FsParams:
    """Scalars for the cylinder problem with an arbitrary weight Lambda > 0.

    Off the FS curve only the optimizer-related fields (alpha, beta, C_ab, M)
    carry meaning; the series exponents are still filled in by formula.
    """
    _check_qd(q, d)
    if not Lambda > 0:
        raise ParameterError("Lambda must be positive")
    root = math.sqrt(Lambda)
    alpha = (q - 2) * root / 2
    beta = (q * Lambda / 2) ** (1 / (q - 2))
    a = (d - 2) / 2 - root
    b = a + d / q - (d - 2) / 2
    frak_a = math.sqrt(1 + 2 * d / Lambda) / (q - 2)
    frak_b = (2 * q - 3) / (q - 2)
    area = sphere_area(d)
    M = (q - 1) * (q - 2) * math.sqrt(area) / (2 * d)
    # ||u||_q^q = |S^{d-1}| beta^q / alpha * int cosh^{-2q/(q-2)}, in logs since beta^q overflows near q = 2
    log_lq_q = math.log(area) + math.log(q * Lambda / 2) * q / (q - 2) - math.log(alpha) \
        + math.log(cosh_moment(0, 2 * q / (q - 2)))
    c_ab = math.exp(log_lq_q * (q - 2) / q)
    on_curve = math.isclose(Lambda, lambda_fs(q, d), rel_tol=FS_RTOL)
    return FsParams(
        q=float(q), d=float(d), Lambda=Lambda, alpha=alpha, beta=beta, a=a, b=b,
        frak_a=frak_a, frak_b=frak_b, xi=frak_b - frak_a, M=M, sphere_area=area,
        C_ab=c_ab, on_fs_curve=on_curve,
    )


def fs_params(q: float, d: float) -> FsParams:
    """All FS-curve scalars at (q, d); requires 2 < q < 2*, d >= 2."""
    _check_qd(q, d)
    return cylinder_params(q, d, lambda_fs(q, d))


def classify(a: float, b: float, d: float, rtol: float = FS_RTOL) -> Classification:
    """Admissible / attainable / symmetric / on-FS-curve flags for a pair (a, b).

    ``on_fs_curve`` additionally requires a < 0, so the Sobolev point
    (0, 0) is symmetric but never reported on the curve.
    """
    violations = []
    if not a < min(0.0, b) + (d - 2) / 2:
        violations.append("admissible: a < min(0, b) + (d-2)/2")
    if not 0 <= b - a <= 1:
        violations.append("admissible: 0 <= b - a <= 1")
    if violations:
        return Classification(False, False, False, False, violations=tuple(violations))

    q = exponent_from_ab(a, b, d)
    Lam = ((d - 2 - 2 * a) / 2) ** 2
    attainable = (0 < b - a < 1) or (b == a and a >= 0)
    if not attainable:
        violations.append("attainable: 0 < b - a < 1 or b = a >= 0")
    if q == 2:
        lam_fs = math.inf
    elif math.isinf(q):
        lam_fs = 0.0
    else:
        lam_fs = lambda_fs(q, d)
    symmetric = Lam <= lam_fs * (1 + rtol)
    if not symmetric:
        violations.append("symmetric: Lambda <= 4(d-1)/(q^2-4)")
    on_curve = (
        attainable and a < 0 and math.isfinite(lam_fs)
        and math.isclose(Lam, lam_fs, rel_tol=rtol)
    )
    return Classification(
        admissible=True, attainable=attainable, symmetric=symmetric,
        on_fs_curve=on_curve, q=q, Lambda=Lam, violations=tuple(violations),
    )
