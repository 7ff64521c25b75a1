"""Stationary barrier for global existence and maximum-principle validators.

The barrier is

    w(y) = T_M - (a kappa / C1) (1 - exp(C1 y / kappa))                      y < 0
    w(y) = T_M exp(-C2 y) (1 - T_M^3/(12 C2^2) + T_M^3 exp(-3 C2 y)/(12 C2^2))  y > 0

with slope parameter a < 0. On y > 0 it satisfies w'' + C2 w' = T_M^4 exp(-4 C2 y)
>= w^4, on y < 0 kappa w'' - C1 w' = 0.
"""

from dataclasses import dataclass, field

import numpy as np

from .initial_data import InitialSamples
from .nondim import NondimParams
from .solution import Solution

# multiplier applied to the smallest sampled C2 that passes every comparison
C2_SAFETY = 1.5


class InadmissibleDataError(ValueError):
    """Initial data outside the class covered by the barrier construction."""


@dataclass(frozen=True)
class BarrierSpec:
    C1: float
    C2: float
    alpha_w: float
    T_M: float
    L: float
    K: float
    kappa: float
    theta: float = float("nan")
    sampling_radius: float = float("nan")

    def gamma(self):
        """Roots of 4 T_M C2^2 - 4 L C1 C2 + T_M^4 in C2 (nan if complex)."""
        disc = (self.L * self.C1) ** 2 - self.T_M**5
        if disc < 0:
            return float("nan"), float("nan")
        r = np.sqrt(disc)
        # the product of the roots is T_M^3 / 4, so the small root avoids cancellation
        hi = (self.L * self.C1 + r) / (2 * self.T_M) if self.T_M > 0 else np.inf
        return self.T_M**4 / (2 * (self.L * self.C1 + r)), hi

    def slope_right(self):
        """w'(0+) = -(4 C2^2 T_M + T_M^4) / (4 C2)."""
        return -(4 * self.C2**2 * self.T_M + self.T_M**4) / (4 * self.C2)

    def liquid_limit(self):
        return self.T_M - self.alpha_w * self.kappa / self.C1

    def invariant_violations(self):
        """Names of the violated invariants (empty when the spec is valid)."""
        bad = []
        if not self.C2 > self.T_M**1.5 / (2 * np.sqrt(3)):
            bad.append("C2 > T_M^(3/2)/(2 sqrt 3)")
        if not self.C1 > np.sqrt(self.T_M**5 + 1) / self.L:
            bad.append("C1 > sqrt(T_M^5 + 1)/L")
        lo, hi = self.gamma()
        if not lo < self.C2 < hi:
            bad.append("Gamma-(C1) < C2 < Gamma+(C1)")
        if not -self.L / self.K * self.C2 < self.alpha_w < 0:
            bad.append("-(L/K) C2 < alpha_w < 0")
        if not self.slope_right() > -self.L * self.C1:
            bad.append("w'(0+) > -L C1")
        return bad


def eval_barrier(spec: BarrierSpec, y):
    """w(y), vectorised; w(0) = T_M."""
    y = np.asarray(y, dtype=float)
    T_M, C1, C2, k = spec.T_M, spec.C1, spec.C2, spec.kappa
    b = T_M**3 / (12 * C2**2)
    neg = np.minimum(y, 0.0)
    pos = np.maximum(y, 0.0)
    left = T_M - spec.alpha_w * k / C1 * (-np.expm1(C1 * neg / k))
    right = T_M * np.exp(-C2 * pos) * (1 - b + b * np.exp(-3 * C2 * pos))
    out = np.where(y < 0, left, np.where(y > 0, right, T_M))
    return out if out.ndim else float(out)


def barrier_derivatives(spec: BarrierSpec, y):
    """(w', w'') at y != 0 from the closed form; one-sided limits at 0 use side of sign."""
    y = np.asarray(y, dtype=float)
    T_M, C1, C2, k, a = spec.T_M, spec.C1, spec.C2, spec.kappa, spec.alpha_w
    b = T_M**3 / (12 * C2**2)
    neg = np.minimum(y, 0.0)
    pos = np.maximum(y, 0.0)
    e1, e4 = np.exp(-C2 * pos), np.exp(-4 * C2 * pos)
    d1 = np.where(y < 0, a * np.exp(C1 * neg / k), -C2 * T_M * (1 - b) * e1 - 4 * C2 * b * T_M * e4)
    d2 = np.where(y < 0, a * C1 / k * np.exp(C1 * neg / k), C2**2 * T_M * (1 - b) * e1 + 16 * C2**2 * b * T_M * e4)
    return d1, d2


@dataclass
class AdmissibilityReport:
    admissible: bool
    sup_liquid_margin: float
    inf_solid_positive: bool
    derivative_margins: tuple
    structurally_valid: bool = True
    details: dict = field(default_factory=dict)

    def violated(self):
        out = []
        if not self.structurally_valid:
            out.append("structure: " + "; ".join(self.details.get("structure", [])))
        if not self.sup_liquid_margin > 0:
            out.append("sup T0 on y<0 < T_M + kappa L^2/(K T_M)")
        if not self.inf_solid_positive:
            out.append("inf T0 on y>0 > 0")
        if not self.derivative_margins[0] > 0:
            out.append("T0 > T_M on y<0")
        if not self.derivative_margins[1] > 0:
            out.append("0 < T0 < T_M on y>0")
        return out


def check_admissible_initial_data(T0: InitialSamples, params: NondimParams, T_M=None) -> AdmissibilityReport:
    """Classify sampled initial data against the global-existence hypotheses.

    ``derivative_margins`` are the smallest one-sided difference quotients
    (T0 - T_M)/|y| on y < 0 and (T_M - T0)/y on y > 0; both positive iff the
    strict sign conditions hold at every sampled node.
    """
    T_M = params.T_M if T_M is None else T_M
    structure = []
    tol = 1e-12 * max(1.0, T_M)
    if T0.y_liquid[-1] != 0 or T0.y_solid[0] != 0:
        structure.append("both grids must end at y = 0")
    if abs(T0.T_liquid[-1] - T_M) > tol or abs(T0.T_solid[0] - T_M) > tol:
        structure.append("T0(0) != T_M")
    yl, Tl = T0.y_liquid[:-1], T0.T_liquid[:-1]
    ys, Ts = T0.y_solid[1:], T0.T_solid[1:]
    if np.any(Tl < T_M) or np.any(Ts > T_M):
        structure.append("T0 crosses T_M on the wrong side of the interface")
    bound = T_M + params.kappa * params.L**2 / (params.K * T_M) if T_M > 0 else np.inf
    sup_liq = float(T0.T_liquid.max())
    inf_sol = float(T0.T_solid.min())
    dm = (float(np.min((Tl - T_M) / np.abs(yl))) if yl.size else np.inf,
          float(np.min((T_M - Ts) / ys)) if ys.size else np.inf)
    report = AdmissibilityReport(
        admissible=False,
        sup_liquid_margin=float(bound - sup_liq),
        inf_solid_positive=bool(inf_sol > 0),
        derivative_margins=dm,
        structurally_valid=not structure,
        details={
            "structure": structure,
            "sup_liquid": sup_liq,
            "liquid_bound": float(bound),
            "inf_solid": inf_sol,
            "sup_abs_dT_liquid": float(np.abs(T0.dT_liquid).max()),
            "sup_abs_dT_solid": float(np.abs(T0.dT_solid).max()),
            "sampling_radius": T0.sampling_radius(),
        },
    )
    report.admissible = not report.violated()
    return report


def theta_from_margin(sup_liquid, params: NondimParams, T_M):
    """theta with (1 - theta)^2 halfway between the used fraction r and 1.

    r = (sup T0 - T_M) / (kappa L^2 / (K T_M)); the barrier's liquid limit
    tends to T_M + (1 - theta)^2 kappa L^2 / (K T_M) as C2 grows.
    """
    r = max(sup_liquid - T_M, 0.0) * params.K * T_M / (params.kappa * params.L**2)
    return 1.0 - np.sqrt(0.5 * (1.0 + r))


def _spec_for(C2, theta, params, T_M, radius):
    L, K = params.L, params.K
    C1 = C2 * T_M * (1 + T_M**3 / (4 * C2**2)) / ((1 - theta) * L)
    return BarrierSpec(C1=float(C1), C2=float(C2), alpha_w=float(-(1 - theta) * L * C2 / K), T_M=T_M, L=L, K=K,
                       kappa=params.kappa, theta=float(theta), sampling_radius=radius)


def _comparison_ok(spec, T0: InitialSamples, dT_liq, dT_sol):
    yl, ys = T0.y_liquid[:-1], T0.y_solid[1:]
    if spec.invariant_violations():
        return False
    if np.any(T0.T_liquid[:-1] >= eval_barrier(spec, yl)):
        return False
    if np.any(T0.T_solid[1:] <= eval_barrier(spec, ys)):
        return False
    return dT_liq < abs(spec.alpha_w) and dT_sol < abs(spec.slope_right())


def construct_barrier(T0: InitialSamples, params: NondimParams, T_M=None) -> BarrierSpec:
    """Build a barrier ordered against the sampled initial data.

    C1 is tied to C2 so that w'(0+) = -(1 - theta) L C1, and alpha_w =
    -(1 - theta) L C2 / K. Every comparison is monotone in C2 above
    T_M^(3/2), so the smallest passing C2 on the samples is bracketed by
    doubling and refined by bisection; the returned spec uses C2_SAFETY
    times that value.

    Raises
    ------
    InadmissibleDataError
        With the violated hypothesis named.
    """
    T_M = params.T_M if T_M is None else T_M
    report = check_admissible_initial_data(T0, params, T_M)
    if not report.admissible:
        raise InadmissibleDataError("; ".join(report.violated()))
    theta = theta_from_margin(report.details["sup_liquid"], params, T_M)
    radius = T0.sampling_radius()
    dl, ds = report.details["sup_abs_dT_liquid"], report.details["sup_abs_dT_solid"]
    ok = lambda c: _comparison_ok(_spec_for(c, theta, params, T_M, radius), T0, dl, ds)

    lo = max(T_M**1.5, 1e-6)
    hi = lo
    for _ in range(200):
        if ok(hi):
            break
        lo, hi = hi, 2 * hi
    else:
        raise InadmissibleDataError("no barrier found: comparison never satisfied")
    if hi != lo:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (lo, mid) if ok(mid) else (mid, hi)
            if hi - lo < 1e-10 * hi:
                break
    spec = _spec_for(C2_SAFETY * hi, theta, params, T_M, radius)
    if not _comparison_ok(spec, T0, dl, ds):
        raise InadmissibleDataError("barrier failed verification after the safety factor")
    return spec


@dataclass
class ValidationReport:
    """Worst margins and located violations for each maximum-principle check."""

    margins: dict
    violations: list
    n_snapshots: int
    atol: float

    @property
    def ok(self):
        return not self.violations

    def summary(self):
        return {"ok": self.ok, "n_violations": len(self.violations), "n_snapshots": self.n_snapshots,
                "atol": self.atol, "margins": {k: float(v) for k, v in self.margins.items()},
                "first_violations": self.violations[:10]}


def validate_solution(sol: Solution, spec: BarrierSpec, T_M=None, atol=1e-9) -> ValidationReport:
    """Check sign bounds, barrier orderings and front-speed bounds at every node.

    Non-strict bounds (T1 >= T_M, 0 <= T2 <= T_M) allow ``atol``; the barrier
    orderings away from y = 0 and the speed bounds are strict. Where w has
    underflowed to 0 (or T_M = 0) the solid ordering reduces to T2 >= 0.
    """
    T_M = sol.T_M if T_M is None else T_M
    yl, ys = sol.y_liquid, sol.y_solid
    T1, T2 = sol.u_liquid + T_M, sol.u_solid + T_M
    wl = eval_barrier(spec, yl[:-1])
    ws = eval_barrier(spec, ys[1:])
    # name: (margin array, node coordinates, strict?)
    checks = {
        "T1 >= T_M": (T1 - T_M + atol, yl, False),
        "T2 >= 0": (T2 + atol, ys, False),
        "T2 <= T_M": (T_M - T2 + atol, ys, False),
        "T1 < w": (wl - T1[:, :-1], yl[:-1], True),
        "T2 > w": (T2[:, 1:] - ws, ys[1:], True),
    }
    margins, violations = {}, []
    for name, (m, y, strict) in checks.items():
        margins[name] = float(m.min()) if m.size else np.inf
        if name == "T2 > w":
            bad = np.argwhere((m < 0) | ((m == 0) & (ws > 0)))
        else:
            bad = np.argwhere(m <= 0) if strict else np.argwhere(m < 0)
        for k, i in bad[:50]:
            violations.append({"check": name, "t": float(sol.snap_t[k]), "y": float(y[i]),
                               "margin": float(m[k, i])})
    for name, m in (("sdot > -C1", sol.sdot + spec.C1), ("sdot < C2", spec.C2 - sol.sdot)):
        margins[name] = float(m.min())
        for k in np.flatnonzero(m <= 0)[:50]:
            violations.append({"check": name, "t": float(sol.t[k]), "y": 0.0, "margin": float(m[k])})
    return ValidationReport(margins=margins, violations=violations, n_snapshots=int(sol.snap_t.size), atol=atol)
