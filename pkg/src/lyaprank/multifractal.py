"""Pressure and dimension spectrum of weighted Birkhoff averages.

For a potential ``f(x0, x1)`` on ``S x S`` and a {0,1}-valued weight
sequence, the pressure ``psi(beta)`` is the Lyapunov exponent of the family

    A_0(beta) = 1 1'   (rank one, v'u = |S|),   A_1(beta) = (exp(beta f(i, j)))_{ij}

driven by the weights. With ``v = u = 1``, ``v'A_w u`` sums
``exp(beta * path sum of f)`` over all paths with ``|w|`` edges, which gives
closed forms for ``psi'`` and its limits at ``+-inf``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .errors import ConfigError, GridEmpty
from .lyapunov import MatrixFamily, RankOneMatrix
from .returnwords import FrequencyTable
from .words import Word, word_str

DEFAULT_BETA_MIN = -40.0
DEFAULT_BETA_MAX = 40.0
DEFAULT_BETA_POINTS = 801
FD_STEP = 1e-5
FD_RTOL = 1e-6
FD_DPS = 50
CONVEXITY_TOL = 1e-9


@dataclass(frozen=True)
class PotentialSpec:
    """``f(i, j)`` for ``i, j`` in ``S = {0, ..., |S|-1}``."""

    table: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.table, dtype=float)
        if f.ndim != 2 or f.shape[0] != f.shape[1] or f.shape[0] < 1:
            raise ConfigError("potential table must be a nonempty square array")
        if not np.all(np.isfinite(f)):
            raise ConfigError("potential table has non-finite entries")
        object.__setattr__(self, "table", f)

    @property
    def size(self) -> int:
        return self.table.shape[0]

    @classmethod
    def product(cls, size: int = 2) -> "PotentialSpec":
        """``f(x0, x1) = x0 * x1``."""
        s = np.arange(size, dtype=float)
        return cls(np.outer(s, s))


def beta_matrix(pot: PotentialSpec, w: int, beta: float) -> np.ndarray:
    """``(exp(beta * w * f(i, j)))_{ij}``; ``w = 0`` gives the all-ones matrix."""
    if w not in (0, 1):
        raise ConfigError("weights are restricted to {0, 1}: weight 0 must give the rank-one all-ones matrix")
    return np.exp(beta * w * pot.table)


def beta_family(pot: PotentialSpec, beta: float) -> MatrixFamily:
    one = np.ones(pot.size)
    return MatrixFamily(RankOneMatrix(one, one), [beta_matrix(pot, 1, beta)])


def _check_table(freqs: FrequencyTable) -> None:
    for w in freqs.exact:
        if any(c != 1 for c in w):
            raise ConfigError(
                f"return word {word_str(w)} has weights outside {{0, 1}}")


def _log_contraction_and_slope(pot: PotentialSpec, L: int, beta: float) -> Tuple[float, float]:
    """``log 1'A_1(beta)^L 1`` and its beta-derivative.

    Uses ``A_1 = e^(beta M) * exp(beta (f - M))`` with ``M = max f`` for
    ``beta >= 0`` and ``min f`` otherwise, so no entry exceeds 1, and
    propagates ``(r, dr)`` with per-step rescaling.
    """
    f = pot.table
    M = f.max() if beta >= 0 else f.min()
    g = f - M
    E = np.exp(beta * g)
    dE = E * g
    r = np.ones(pot.size)
    dr = np.zeros(pot.size)
    scale = 0.0
    for _ in range(L):
        r, dr = r @ E, dr @ E + r @ dE
        s = r.max()
        r, dr = r / s, dr / s
        scale += math.log(s)
    tot = r.sum()
    return scale + math.log(tot) + L * beta * M, L * M + dr.sum() / tot


def pressure_and_derivative(pot: PotentialSpec, freqs: FrequencyTable, beta: float) -> Tuple[float, float]:
    _check_table(freqs)
    logS = math.log(pot.size)
    terms, slopes = [freqs.rho0 * logS], []
    for w, F in freqs.exact.items():
        lc, dlc = _log_contraction_and_slope(pot, len(w), beta)
        terms.append(F * (lc - logS))
        slopes.append(F * dlc)
    return math.fsum(terms), math.fsum(slopes)


def pressure(pot: PotentialSpec, freqs: FrequencyTable, beta: float) -> float:
    """``psi(beta)`` via the closed form on the beta-family."""
    return pressure_and_derivative(pot, freqs, beta)[0]


def pressure_derivative(pot: PotentialSpec, freqs: FrequencyTable, beta: float) -> float:
    """Analytic ``psi'(beta) = sum_w F_w d/dbeta log 1'A_1(beta)^|w| 1``."""
    return pressure_and_derivative(pot, freqs, beta)[1]


def pressure_mp(pot: PotentialSpec, freqs: FrequencyTable, beta, dps: int = FD_DPS):
    """``psi(beta)`` in ``dps``-digit arithmetic (finite-difference oracle)."""
    _check_table(freqs)
    with mpmath.workdps(dps):
        b = mpmath.mpf(beta)
        n = pot.size
        E = mpmath.matrix([[mpmath.exp(b * mpmath.mpf(float(x))) for x in row] for row in pot.table])
        logS = mpmath.log(n)
        total = mpmath.mpf(freqs.rho0) * logS
        for w, F in freqs.exact.items():
            r = mpmath.matrix([[1] * n])
            for _ in range(len(w)):
                r = r * E
            total += mpmath.mpf(F) * (mpmath.log(sum(r)) - logS)
        return total


def finite_difference_derivative(pot: PotentialSpec, freqs: FrequencyTable, beta: float,
                                 h: float = FD_STEP) -> float:
    with mpmath.workdps(FD_DPS):
        hp = mpmath.mpf(h)
        b = mpmath.mpf(beta)
        return float((pressure_mp(pot, freqs, b + hp) - pressure_mp(pot, freqs, b - hp)) / (2 * hp))


def _extremal_path_sum(f: np.ndarray, L: int, use_max: bool) -> float:
    """Max (or min) of ``f(i0,i1) + ... + f(i(L-1),iL)`` over all paths (max-plus power)."""
    op = np.max if use_max else np.min
    best = np.zeros(f.shape[0])
    for _ in range(L):
        best = op(best[:, None] + f, axis=0)
    return float(op(best))


def derivative_asymptotes(pot: PotentialSpec, freqs: FrequencyTable) -> Tuple[float, float]:
    """``(psi'(-inf), psi'(+inf))``: frequency-weighted extremal path sums."""
    _check_table(freqs)
    lo = math.fsum(F * _extremal_path_sum(pot.table, len(w), False) for w, F in freqs.exact.items())
    hi = math.fsum(F * _extremal_path_sum(pot.table, len(w), True) for w, F in freqs.exact.items())
    return lo, hi


def default_grid() -> np.ndarray:
    return np.linspace(DEFAULT_BETA_MIN, DEFAULT_BETA_MAX, DEFAULT_BETA_POINTS)


def _as_grid(grid) -> np.ndarray:
    g = np.asarray(grid if grid is not None else default_grid(), dtype=float)
    if g.size == 0:
        raise GridEmpty("beta grid is empty")
    if np.any(np.diff(g) <= 0) or not np.all(np.isfinite(g)):
        raise ConfigError("beta grid must be finite and strictly increasing")
    return g


@dataclass
class PressureCurve:
    beta: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    asymptotes: Tuple[float, float]
    meta: dict = field(default_factory=dict)

    def convexity_defect(self) -> float:
        """Most negative discrete second difference (0 if convex)."""
        if self.beta.size < 3:
            return 0.0
        b, p = self.beta, self.psi
        slopes = np.diff(p) / np.diff(b)
        return float(min(np.min(np.diff(slopes)), 0.0))

    def is_convex(self, tol: float = CONVEXITY_TOL) -> bool:
        return self.convexity_defect() >= -tol

    def is_derivative_monotone(self, tol: float = CONVEXITY_TOL) -> bool:
        return bool(np.all(np.diff(self.dpsi) >= -tol))


@dataclass
class SpectrumCurve:
    alpha: np.ndarray
    dim: np.ndarray
    support: Tuple[float, float]
    log_base: float

    def legendre_dim(self, alpha: float, curve: PressureCurve) -> float:
        """``min_beta (psi(beta) - alpha beta) / log|S|`` over the sampled grid."""
        return float(np.min(curve.psi - alpha * curve.beta) / self.log_base)


def pressure_curve(pot: PotentialSpec, freqs: FrequencyTable, grid=None) -> PressureCurve:
    g = _as_grid(grid)
    vals = np.array([pressure_and_derivative(pot, freqs, b) for b in g])
    return PressureCurve(g, vals[:, 0], vals[:, 1], derivative_asymptotes(pot, freqs),
                         {"method": freqs.method, "rho0": freqs.rho0,
                          "frequencies": {word_str(w): F for w, F in freqs.exact.items()}})


def spectrum(pot: PotentialSpec, freqs: FrequencyTable, grid=None,
             curve: Optional[PressureCurve] = None) -> SpectrumCurve:
    """Parametric curve ``(psi'(beta), (psi(beta) - beta psi'(beta)) / log|S|)``."""
    if curve is None:
        curve = pressure_curve(pot, freqs, grid)
    if pot.size < 2:
        raise ConfigError("the spectrum needs |S| >= 2")
    logS = math.log(pot.size)
    dim = (curve.psi - curve.beta * curve.dpsi) / logS
    return SpectrumCurve(curve.dpsi.copy(), dim, curve.asymptotes, logS)


def derivative_check(pot: PotentialSpec, freqs: FrequencyTable, grid=None) -> List[Tuple[float, float, float, float]]:
    """``(beta, analytic, finite difference, relative error)`` per grid point."""
    out = []
    for b in _as_grid(grid):
        a = pressure_derivative(pot, freqs, b)
        fd = finite_difference_derivative(pot, freqs, b)
        rel = abs(a - fd) / abs(fd) if fd != 0 else abs(a)
        out.append((float(b), a, fd, rel))
    return out


# ------------------------------------------------------------ output


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def pressure_csv(curve: PressureCurve) -> str:
    buf = io.StringIO()
    buf.write("beta,psi,dpsi\n")
    for b, p, d in zip(curve.beta, curve.psi, curve.dpsi):
        buf.write(f"{_fmt(b)},{_fmt(p)},{_fmt(d)}\n")
    return buf.getvalue()


def spectrum_csv(spec: SpectrumCurve) -> str:
    buf = io.StringIO()
    buf.write("alpha,dim\n")
    for a, d in zip(spec.alpha, spec.dim):
        buf.write(f"{_fmt(a)},{_fmt(d)}\n")
    return buf.getvalue()


def _polyline_panel(x: np.ndarray, y: np.ndarray, x0: float, y0: float,
                    w: float, h: float) -> List[str]:
    xmin, xmax = float(np.min(x)), float(np.max(x))
    ymin, ymax = float(np.min(y)), float(np.max(y))
    xs = (xmax - xmin) or 1.0
    ys = (ymax - ymin) or 1.0
    px = x0 + (x - xmin) / xs * w
    py = y0 + h - (y - ymin) / ys * h
    pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(px, py))
    return [
        f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#888"/>',
        f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>',
        f'<text x="{x0}" y="{y0 + h + 14}" font-size="10">{xmin:.4g}</text>',
        f'<text x="{x0 + w}" y="{y0 + h + 14}" font-size="10" text-anchor="end">{xmax:.4g}</text>',
        f'<text x="{x0 - 4}" y="{y0 + h}" font-size="10" text-anchor="end">{ymin:.4g}</text>',
        f'<text x="{x0 - 4}" y="{y0 + 10}" font-size="10" text-anchor="end">{ymax:.4g}</text>',
    ]


def spectrum_svg(curve: PressureCurve, spec: SpectrumCurve) -> str:
    """Two panels: ``psi`` against ``beta`` and ``dim`` against ``alpha``."""
    parts = ['<svg xmlns="http://www.w3.org/2000/svg" width="760" height="300">']
    parts += _polyline_panel(curve.beta, curve.psi, 60, 20, 300, 240)
    parts += _polyline_panel(spec.alpha, spec.dim, 440, 20, 300, 240)
    parts.append("</svg>\n")
    return "\n".join(parts)
