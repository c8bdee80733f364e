"""Matrix-free resolvent solves, the vanishing-absorption ladder, and
empirical control-constant estimation.

The shifted systems ``(P_full - omega - i eps) u = f`` are solved by
right-preconditioned GMRES with the exact inverse of the Fourier-diagonal
part ``(m(k) - omega - i eps)`` as preconditioner. With ``eps > 0`` the skew
part is uniformly negative, so every system is invertible and the solution
obeys ``||u|| <= ||f|| / eps``. Ladders walk ``eps`` down a geometric
schedule, warm-starting each rung from the previous solution, and classify
the limit behavior from the Cauchy gaps and norm growth.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .charflow import find_limit_cycles
from .errors import RungFailureError
from .grid import Field, hs_norm, l2_norm, project_resolved, to_grid
from .operators import OperatorSpec, apply_Pbold

DEFAULT_SPECTRAL_WINDOW = 0.1
DEFAULT_EPSILONS = tuple(np.geomspace(1e-1, 1e-5, 9))
CONVERGED_GAP_FACTOR = 1e-4
DIVERGENCE_FACTOR = 2.0
DIVERGENCE_DECADES = 2.0
JUNK_ORDER = -4.0


@dataclass(frozen=True, eq=False)
class ResolventQuery:
    """One shifted solve: target omega, absorption epsilon, data and tolerances."""

    omega: complex
    epsilon: float
    f: Field
    rtol: float = 1e-8
    max_iter: int = 5000

    def __post_init__(self) -> None:
        if complex(self.omega).imag < 0.0:
            raise ValueError(f"Im omega must be >= 0, got {self.omega}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.rtol <= 0.0:
            raise ValueError("rtol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass(frozen=True, eq=False)
class ResolventSolution:
    u: Field
    residual: float
    iterations: int
    converged: bool


@dataclass(frozen=True, eq=False)
class ResolventLadder:
    """Vanishing-absorption continuation record at a fixed omega."""

    omega: complex
    epsilons: np.ndarray
    solutions: list[Field]
    residual_norms: np.ndarray
    solution_norms: np.ndarray
    cauchy_gaps: np.ndarray
    verdict: str
    iterations: np.ndarray
    meta: dict = field(default_factory=dict)


def _gmres(
    apply_A: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    apply_Minv: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray | None,
    rtol: float,
    restart: int | None,
    max_iter: int,
) -> tuple[np.ndarray, float, int]:
    """Right-preconditioned GMRES with Givens rotations.

    Minimizes the true residual over the preconditioned Krylov space; returns
    (x, relative residual, matvec count). ``restart=None`` runs full-memory.
    """
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0.0, 0
    x = np.zeros_like(b) if x0 is None else x0.astype(complex).copy()
    n = b.size
    nmv = 0
    cycle = max_iter if restart is None else max(int(restart), 1)

    while True:
        r = b - apply_A(x)
        nmv += 1
        rnorm = float(np.linalg.norm(r))
        if rnorm <= rtol * bnorm or nmv >= max_iter:
            return x, rnorm / bnorm, nmv

        m = min(cycle, max_iter - nmv)
        Q = np.empty((m + 1, n), dtype=complex)
        H = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m, dtype=complex)
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        Q[0] = r / rnorm
        g[0] = rnorm
        k_done = 0

        for k in range(m):
            w = apply_A(apply_Minv(Q[k]))
            nmv += 1
            for j in range(k + 1):
                H[j, k] = np.vdot(Q[j], w)
                w -= H[j, k] * Q[j]
            hnext = float(np.linalg.norm(w))
            H[k + 1, k] = hnext
            breakdown = hnext <= 1e-14 * bnorm
            if not breakdown:
                Q[k + 1] = w / hnext
            for j in range(k):
                t = cs[j] * H[j, k] + sn[j] * H[j + 1, k]
                H[j + 1, k] = -np.conj(sn[j]) * H[j, k] + np.conj(cs[j]) * H[j + 1, k]
                H[j, k] = t
            denom = np.sqrt(np.abs(H[k, k]) ** 2 + np.abs(H[k + 1, k]) ** 2)
            if denom == 0.0:
                break
            cs[k] = np.conj(H[k, k]) / denom
            sn[k] = np.conj(H[k + 1, k]) / denom
            H[k, k] = denom
            H[k + 1, k] = 0.0
            g[k + 1] = -np.conj(sn[k]) * g[k]
            g[k] = cs[k] * g[k]
            k_done = k + 1
            if abs(g[k + 1]) <= 0.9 * rtol * bnorm or breakdown:
                break

        if k_done == 0:
            return x, rnorm / bnorm, nmv
        y = np.linalg.solve(np.triu(H[:k_done, :k_done]), g[:k_done])
        x = x + apply_Minv(Q[:k_done].T @ y)


def _resolvent_operators(spec: OperatorSpec, shift: complex):
    grid = spec.grid
    mask = grid.nyquist_mask
    m = spec.m_table
    W = spec.V_real - 1j * spec.chi_real
    shape = grid.shape
    denom = m - shift

    def apply_A(v: np.ndarray) -> np.ndarray:
        u = v.reshape(shape)
        uh = np.fft.fft2(u) * mask
        out = np.fft.ifft2(m * uh + np.fft.fft2(W * u) * mask) - shift * u
        return out.ravel()

    def apply_Minv(v: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(np.fft.fft2(v.reshape(shape)) / denom).ravel()

    return apply_A, apply_Minv


def solve_resolvent(
    spec: OperatorSpec,
    q: ResolventQuery,
    restart: int | None = None,
    x0: Field | None = None,
) -> ResolventSolution:
    """Solve ``(P_full - omega - i eps) u = f`` to a relative-residual tolerance.

    The data is projected onto the resolved modes, on which the Krylov
    iteration then stays. On hitting ``max_iter`` the best iterate is returned
    flagged non-converged rather than raising. Unrestarted iteration is the
    default; restarted GMRES stagnates on these shifted indefinite systems.
    """
    if q.f.grid != spec.grid:
        raise ValueError("grid mismatch between operator and data")
    shift = complex(q.omega) + 1j * q.epsilon
    apply_A, apply_Minv = _resolvent_operators(spec, shift)
    b = project_resolved(q.f).values.ravel()
    x0_arr = to_grid(x0).values.ravel() if x0 is not None else None
    x, relres, nmv = _gmres(apply_A, b, apply_Minv, x0_arr, q.rtol, restart, q.max_iter)
    u = Field(spec.grid, x.reshape(spec.grid.shape))
    return ResolventSolution(
        u=u, residual=relres, iterations=nmv, converged=relres <= q.rtol
    )


def _classify(
    epsilons: np.ndarray,
    gaps: np.ndarray,
    norms: np.ndarray,
    f_norm: float,
) -> str:
    decreasing = len(gaps) >= 2 and bool(np.all(np.diff(gaps) < 0.0))
    if decreasing and gaps[-1] <= CONVERGED_GAP_FACTOR * f_norm:
        return "converged"
    target = epsilons[-1] * 10.0**DIVERGENCE_DECADES
    j = int(np.argmin(np.abs(np.log10(epsilons) - np.log10(target))))
    if j != len(epsilons) - 1 and norms[j] > 0 and norms[-1] / norms[j] >= DIVERGENCE_FACTOR:
        return "diverging"
    return "inconclusive"


def limiting_absorption(
    spec: OperatorSpec,
    omega: complex,
    f: Field,
    epsilons=None,
    rtol: float = 1e-8,
    max_iter: int = 5000,
    restart: int | None = None,
    delta: float = DEFAULT_SPECTRAL_WINDOW,
) -> ResolventLadder:
    """Walk the absorption parameter toward zero and classify the limit.

    Each rung warm-starts from the previous solution. The verdict is
    ``converged`` when the Cauchy gaps decrease strictly and the final gap is
    below 1e-4 ||f||, ``diverging`` when the solution norm grows by a factor
    of 2 over the last two decades of epsilon, otherwise ``inconclusive``.
    A rung that misses the residual tolerance aborts with partial results.
    """
    eps = np.asarray(DEFAULT_EPSILONS if epsilons is None else epsilons, dtype=float)
    if eps.ndim != 1 or len(eps) < 2:
        raise ValueError("need at least two epsilon rungs")
    if np.any(eps <= 0.0) or np.any(np.diff(eps) >= 0.0):
        raise ValueError("epsilons must be positive and strictly decreasing")
    if abs(complex(omega).real) > delta:
        raise ValueError(f"|Re omega| = {abs(complex(omega).real)} outside the window {delta}")

    f_norm = l2_norm(f)
    solutions: list[Field] = []
    residuals: list[float] = []
    iterations: list[int] = []
    norms: list[float] = []
    prev: Field | None = None
    meta = {
        "rtol": rtol,
        "max_iter": max_iter,
        "restart": restart,
        "gap_factor": CONVERGED_GAP_FACTOR,
        "divergence_factor": DIVERGENCE_FACTOR,
        "divergence_decades": DIVERGENCE_DECADES,
        "warm_start": True,
    }

    def build(eps_done: np.ndarray, verdict: str | None = None) -> ResolventLadder:
        gaps = np.array(
            [l2_norm(Field(spec.grid, solutions[i + 1].values - solutions[i].values))
             for i in range(len(solutions) - 1)]
        )
        v = verdict or _classify(eps_done, gaps, np.asarray(norms), f_norm)
        return ResolventLadder(
            omega=complex(omega),
            epsilons=eps_done,
            solutions=list(solutions),
            residual_norms=np.asarray(residuals),
            solution_norms=np.asarray(norms),
            cauchy_gaps=gaps,
            verdict=v,
            iterations=np.asarray(iterations, dtype=int),
            meta=dict(meta),
        )

    for j, e in enumerate(eps):
        q = ResolventQuery(omega=omega, epsilon=float(e), f=f, rtol=rtol, max_iter=max_iter)
        sol = solve_resolvent(spec, q, restart=restart, x0=prev)
        if not sol.converged:
            partial = build(eps[: j], verdict="inconclusive")
            raise RungFailureError(
                f"rung eps={e:.3e} stopped at relative residual {sol.residual:.2e} "
                f"(> rtol={rtol:.1e}) after {sol.iterations} iterations",
                partial=partial,
            )
        solutions.append(sol.u)
        residuals.append(sol.residual)
        iterations.append(sol.iterations)
        norms.append(l2_norm(sol.u))
        prev = sol.u

    return build(eps)


def omega_sweep(
    spec: OperatorSpec,
    f: Field,
    omegas,
    epsilons=None,
    delta: float = DEFAULT_SPECTRAL_WINDOW,
    jobs: int = 1,
    **ladder_kwargs,
) -> list[ResolventLadder]:
    """Ladders across a grid of real spectral targets inside the window."""
    omegas = [complex(w) for w in omegas]
    for w in omegas:
        if abs(w.real) > delta:
            raise ValueError(f"omega {w} outside the spectral window [{-delta}, {delta}]")

    def one(w: complex) -> ResolventLadder:
        return limiting_absorption(spec, w, f, epsilons=epsilons, delta=delta, **ladder_kwargs)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, omegas))
    return [one(w) for w in omegas]


@dataclass(frozen=True)
class ControlConstantReport:
    """Empirical constants for the cutoff-control inequality.

    ``ratios[(omega, eps)]`` is the max over samples of
    ``||u||_{H^s} / (||cutoff u||_{H^s} + ||(P_full - omega) u||_{H^{s+1}} + ||u||_{H^-4})``
    with u drawn from resolvent solves at that shift. A finite, eps-stable
    value is evidence for the inequality, not a proof.
    """

    s: float
    samples: int
    ratios: dict[tuple[float, float], float]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios.values())

    def by_epsilon(self) -> dict[float, float]:
        out: dict[float, float] = {}
        for (_, e), r in self.ratios.items():
            out[e] = max(out.get(e, 0.0), r)
        return out


def estimate_control_constant(
    spec: OperatorSpec,
    s: float,
    cutoff: Field,
    omegas,
    epsilons,
    samples: int = 3,
    rng: np.random.Generator | None = None,
    rtol: float = 1e-8,
    max_iter: int = 5000,
) -> ControlConstantReport:
    """Sample the control-inequality ratio over resolvent solves.

    Requires ``s > -1/2`` (the admissible range for sink-side control with
    purely spatial damping). Draws random data, solves at each (omega, eps),
    and records the worst ratio per shift.
    """
    if s <= -0.5:
        raise ValueError(f"control estimates need s > -1/2, got s={s}")
    if rng is None:
        rng = np.random.default_rng(0)
    cut_vals = to_grid(cutoff).values.real
    eps_desc = sorted((float(x) for x in epsilons), reverse=True)
    ratios: dict[tuple[float, float], float] = {}
    for w in omegas:
        w = float(w)
        for _ in range(samples):
            data = Field(
                spec.grid,
                rng.standard_normal(spec.grid.shape) + 1j * rng.standard_normal(spec.grid.shape),
            )
            prev: Field | None = None
            for e in eps_desc:
                q = ResolventQuery(omega=w, epsilon=e, f=data, rtol=rtol, max_iter=max_iter)
                sol = solve_resolvent(spec, q, x0=prev)
                if not sol.converged:
                    raise RungFailureError(
                        f"control-constant solve at omega={w}, eps={e} did not converge"
                    )
                prev = sol.u
                u = sol.u
                shifted = apply_Pbold(spec, u, w)
                denom = (
                    hs_norm(Field(spec.grid, cut_vals * u.values), s)
                    + hs_norm(shifted, s + 1.0)
                    + hs_norm(u, JUNK_ORDER)
                )
                ratio = hs_norm(u, s) / denom
                key = (w, e)
                ratios[key] = max(ratios.get(key, 0.0), ratio)
    return ControlConstantReport(s=s, samples=samples, ratios=ratios)


def validate_spectral_window(a: float, delta: float = DEFAULT_SPECTRAL_WINDOW,
                             min_margin: float = 1e-3) -> float:
    """Shrink the window until the shifted-surface cycles stay hyperbolic.

    Re-runs cycle detection at the window edges; if detection fails or a
    multiplier sits within ``min_margin`` of 1, the window is halved.
    """
    d = float(delta)
    while d >= 1e-6:
        try:
            ok = True
            for w in (-d, d):
                cycles = find_limit_cycles(a, omega=w)
                if min(abs(abs(c.floquet_multiplier) - 1.0) for c in cycles) < min_margin:
                    ok = False
                    break
            if ok:
                return d
        except (ValueError, RuntimeError):
            pass
        d /= 2.0
    raise RuntimeError(f"no hyperbolic spectral window found below delta={delta}")
