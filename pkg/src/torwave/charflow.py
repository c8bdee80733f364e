"""Bicharacteristic flow on the cosphere bundle: cycles, basins, control.

The rescaled flow field is ``X = (-sin(th)cos(th), cos(th)^2, a sin(x1) sin(th))``
in coordinates (x1, x2, theta). It is tangent to the characteristic surface
``sin(th) = a cos(x1) + omega`` for every level ``omega``, so one vector field
serves the whole spectral window. For ``0 < a < 1`` and ``|omega| < a`` the
surface carries exactly four closed orbits: theta in {0, pi} over the two
circles where ``a cos(x1) + omega = 0``, two attractive and two repulsive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import StepSizeCollapseError
from .grid import TWO_PI, Field, to_grid

Branch = Literal["theta_0", "theta_pi"]
CycleKind = Literal["attractive", "repulsive"]
ComponentLabel = Literal["x1_plus", "x1_minus"]
ControlSign = Literal["CC_plus", "CC_minus"]

SURFACE_TOL = 1e-8
HYPERBOLICITY_MARGIN = 1e-6
MULTIPLIER_CEILING = 1e6
FLOQUET_STEP = 1e-5


@dataclass(frozen=True)
class FlowPoint:
    """State (x1, x2, theta) on the cosphere bundle, angles mod 2*pi."""

    x1: float
    x2: float
    theta: float

    def wrapped(self) -> "FlowPoint":
        return FlowPoint(self.x1 % TWO_PI, self.x2 % TWO_PI, self.theta % TWO_PI)


@dataclass(frozen=True)
class Trajectory:
    """Sampled flow trajectory with its surface-conservation record."""

    times: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    theta: np.ndarray
    a: float
    omega: float = 0.0

    @property
    def max_surface_residual(self) -> float:
        res = np.sin(self.theta) - self.a * np.cos(self.x1) - self.omega
        return float(np.max(np.abs(res)))

    def endpoint(self) -> FlowPoint:
        return FlowPoint(float(self.x1[-1]), float(self.x2[-1]), float(self.theta[-1]))


@dataclass(frozen=True)
class LimitCycle:
    representative: FlowPoint
    period: float
    floquet_multiplier: float
    kind: CycleKind
    component_label: ComponentLabel
    branch: Branch


def vector_field(p: FlowPoint, a: float) -> tuple[float, float, float]:
    """The flow field at a point (defined on the whole bundle)."""
    s, c = math.sin(p.theta), math.cos(p.theta)
    return (-s * c, c * c, a * math.sin(p.x1) * s)


def surface_residual(p: FlowPoint, a: float, omega: float = 0.0) -> float:
    """Signed defect of the characteristic-surface equation at a point."""
    return math.sin(p.theta) - a * math.cos(p.x1) - omega


def branch_theta(x1: float, branch: Branch, a: float, omega: float = 0.0) -> float:
    """Solve the surface equation for theta on the requested branch."""
    s = a * math.cos(x1) + omega
    if abs(s) > 1.0:
        raise ValueError(f"no surface point over x1={x1}: |a cos x1 + omega| = {abs(s)} > 1")
    return math.asin(s) if branch == "theta_0" else math.pi - math.asin(s)


def on_surface_point(x1: float, x2: float, branch: Branch, a: float, omega: float = 0.0) -> FlowPoint:
    return FlowPoint(x1, x2, branch_theta(x1, branch, a, omega))


def _project_theta(x1: float, theta: float, a: float, omega: float) -> float:
    """Newton correction of theta onto the surface at fixed base point."""
    for _ in range(12):
        g = math.sin(theta) - a * math.cos(x1) - omega
        if abs(g) < 1e-15:
            break
        dg = math.cos(theta)
        if abs(dg) < 1e-6:
            break
        theta -= g / dg
    return theta


def _flow_rhs(a: float, direction: float) -> Callable:
    def f(t, y):
        s, c = math.sin(y[2]), math.cos(y[2])
        return (direction * -s * c, direction * c * c, direction * a * math.sin(y[0]) * s)

    return f


def integrate_trajectory(
    p0: FlowPoint,
    a: float,
    t_final: float,
    tol: float = 1e-10,
    omega: float = 0.0,
    times: np.ndarray | None = None,
    chunk: float = 1.0,
) -> Trajectory:
    """Adaptive integration of the flow with periodic surface re-projection.

    ``t_final < 0`` integrates backward. The starting point must satisfy the
    surface equation to 1e-8; along the output the residual stays within
    ``10 * tol``. Re-projection (a Newton step in theta) is applied between
    integration chunks of length ``chunk``.
    """
    r0 = abs(surface_residual(p0, a, omega))
    if r0 > SURFACE_TOL:
        raise ValueError(f"starting point off the surface: |residual| = {r0:.2e} > {SURFACE_TOL}")
    if t_final == 0.0:
        raise ValueError("t_final must be nonzero")

    direction = 1.0 if t_final > 0 else -1.0
    total = abs(t_final)
    fun = _flow_rhs(a, direction)

    if times is not None:
        times = np.asarray(times, dtype=float)
        if np.any(times * direction < 0) or np.any(np.abs(times) > total * (1 + 1e-12)):
            raise ValueError("requested times must lie between 0 and t_final")
        taus = np.sort(np.abs(times))
    else:
        taus = None

    y = np.array([p0.x1, p0.x2, p0.theta], dtype=float)
    out_t: list[float] = [0.0]
    out_y: list[np.ndarray] = [y.copy()]

    tau = 0.0
    while tau < total * (1 - 1e-12):
        tau_next = min(tau + chunk, total)
        want_dense = taus is not None
        sol = solve_ivp(
            fun,
            (tau, tau_next),
            y,
            method="DOP853",
            rtol=tol,
            atol=0.1 * tol,
            dense_output=want_dense,
        )
        if sol.status < 0:
            raise StepSizeCollapseError(f"integrator failed at t={direction * tau:.3f}: {sol.message}")
        if taus is not None:
            inside = taus[(taus > tau) & (taus <= tau_next)]
            for tq in inside:
                out_t.append(direction * tq)
                out_y.append(sol.sol(tq))
        else:
            out_t.extend((direction * sol.t[1:]).tolist())
            out_y.extend(sol.y.T[1:])
        y = sol.y[:, -1].copy()
        y[2] = _project_theta(y[0], y[2], a, omega)
        tau = tau_next

    arr = np.asarray(out_y)
    return Trajectory(
        times=np.asarray(out_t), x1=arr[:, 0], x2=arr[:, 1], theta=arr[:, 2], a=a, omega=omega
    )


def _poincare_return(
    x1: float, branch: Branch, a: float, omega: float, direction: float, tol: float = 1e-11
) -> tuple[float, float]:
    """Return-map value and return time for the section x2 = 0 mod 2*pi.

    The section is transversal because dx2/dt = cos(theta)^2 >= 1 - (a+|omega|)^2 > 0
    on the surface.
    """
    theta0 = branch_theta(x1, branch, a, omega)
    fun = _flow_rhs(a, direction)
    target = TWO_PI

    def crossed(t, y):
        return abs(y[1]) - target

    crossed.terminal = True
    crossed.direction = 1.0

    horizon = 4.0 * TWO_PI / max(1.0 - (a + abs(omega)) ** 2, 1e-3)
    sol = solve_ivp(
        fun,
        (0.0, horizon),
        [x1, 0.0, theta0],
        method="DOP853",
        rtol=tol,
        atol=1e-13,
        events=crossed,
        dense_output=False,
    )
    if sol.status < 0:
        raise StepSizeCollapseError(f"return-map integration failed: {sol.message}")
    if len(sol.t_events[0]) == 0:
        raise RuntimeError(f"no section return within t={horizon:.1f} from x1={x1}")
    y_ret = sol.y_events[0][0]
    return float(y_ret[0]), float(sol.t_events[0][0])


def find_limit_cycles(
    a: float,
    omega: float = 0.0,
    reverse: bool = False,
    bracket_halfwidth: float = 0.05,
) -> list[LimitCycle]:
    """Locate and classify the four closed orbits of the flow.

    Works in the covering regime ``0 < a < 1`` (and ``|omega| < a`` for the
    shifted surface). Each cycle is pinned by a 1D root find of the Poincare
    return map on its branch, the period is the return time, and the Floquet
    multiplier is a one-sided finite difference of the return map.
    """
    if not (0.0 < a < 1.0):
        raise ValueError(f"cycle detection requires 0 < a < 1, got a={a}")
    if abs(omega) >= a:
        raise ValueError(f"shifted surface loses its cycles: |omega| = {abs(omega)} >= a = {a}")
    direction = -1.0 if reverse else 1.0

    # base circles solve a cos(x1) + omega = 0
    x1_plus = math.acos(-omega / a)
    candidates: list[tuple[float, ComponentLabel]] = [
        (x1_plus, "x1_plus"),
        (-x1_plus, "x1_minus"),
    ]

    cycles: list[LimitCycle] = []
    for x1_star, label in candidates:
        for branch in ("theta_0", "theta_pi"):

            def gap(x1: float) -> float:
                return _poincare_return(x1, branch, a, omega, direction)[0] - x1

            lo, hi = x1_star - bracket_halfwidth, x1_star + bracket_halfwidth
            x1_fixed = brentq(gap, lo, hi, xtol=1e-13, rtol=8.9e-16)
            x1_ret, period = _poincare_return(x1_fixed, branch, a, omega, direction)
            x1_pert, _ = _poincare_return(x1_fixed + FLOQUET_STEP, branch, a, omega, direction)
            mu = (x1_pert - x1_ret) / FLOQUET_STEP

            if abs(mu - 1.0) < HYPERBOLICITY_MARGIN:
                raise RuntimeError(
                    f"non-hyperbolic cycle at x1={x1_fixed:.6f}, branch={branch}: mu={mu}"
                )
            if not (HYPERBOLICITY_MARGIN <= abs(mu) <= MULTIPLIER_CEILING):
                raise RuntimeError(
                    f"multiplier out of trusted range at x1={x1_fixed:.6f}: mu={mu}"
                )
            theta_star = branch_theta(x1_fixed, branch, a, omega)
            cycles.append(
                LimitCycle(
                    representative=FlowPoint(x1_fixed, 0.0, theta_star).wrapped(),
                    period=period,
                    floquet_multiplier=float(mu),
                    kind="attractive" if abs(mu) < 1.0 else "repulsive",
                    component_label=label,
                    branch=branch,
                )
            )
    return cycles


@dataclass(frozen=True)
class ControlConditionReport:
    sign: ControlSign
    threshold: float
    per_component: dict[str, bool]
    overall: bool
    max_chi: dict[str, float] = field(default_factory=dict)


def _max_chi_on_circle(chi: Field, x1_center: float) -> float:
    """Max of chi over the circle x1 = const, linearly interpolated in x1."""
    g = chi.grid
    vals = to_grid(chi).values.real
    pos = (x1_center % TWO_PI) / (TWO_PI / g.n1)
    i0 = int(np.floor(pos)) % g.n1
    i1 = (i0 + 1) % g.n1
    w = pos - np.floor(pos)
    row = (1.0 - w) * vals[i0, :] + w * vals[i1, :]
    return float(np.max(row))


def check_control_condition(
    chi: Field,
    cycles: list[LimitCycle],
    sign: ControlSign = "CC_plus",
    threshold: float = 0.1,
) -> ControlConditionReport:
    """Check whether the damping sees every targeted cycle component.

    For spatial damping, the conic set over its support contains all
    directions above each base point, so the condition reduces to the base
    circles: a component passes when ``max chi`` on its circle exceeds the
    threshold. ``CC_plus`` targets the attractive cycles, ``CC_minus`` the
    repulsive ones.
    """
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    wanted: CycleKind = "attractive" if sign == "CC_plus" else "repulsive"
    per: dict[str, bool] = {}
    max_chi: dict[str, float] = {}
    for cyc in cycles:
        if cyc.kind != wanted:
            continue
        peak = _max_chi_on_circle(chi, cyc.representative.x1)
        per[cyc.component_label] = peak > threshold
        max_chi[cyc.component_label] = peak
    if not per:
        raise ValueError(f"no {wanted} cycles among the {len(cycles)} provided")
    return ControlConditionReport(
        sign=sign,
        threshold=threshold,
        per_component=per,
        overall=all(per.values()),
        max_chi=max_chi,
    )
