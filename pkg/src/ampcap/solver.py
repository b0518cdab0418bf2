"""Capacity-achieving amplitude distributions by a Smith-style support search.

The inner problem maximizes the rate over positions and probabilities of a
fixed number of mass points with a Newton (SQP) iteration using the exact
Hessian of the quadrature rate.  The average-power constraint, when it can
bind, is kept as an equality constraint and its Lagrange multiplier is the
lambda of the KKT residual.  The outer loop adds a point wherever the KKT
residual is positive and continues in power from a small-power seed.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq, minimize_scalar
from scipy.special import logsumexp

from .dist import make_distribution
from .entropy import KKT_TOL, MixtureModel, kkt_report, kkt_report_from_model, rate
from .exceptions import CertificationError, DomainError, NumericalError
from .kernel import ChannelSpec, log_kernel_ratio, radial_grid
from .specfun import bessel_ratio_over_x

MAX_SUPPORT = 64
PRUNE_PROB = 1e-290
MIN_LOG_PROB = math.log(1e-280)
MERGE_GAP = 1e-6
# weights tried in turn for a new support point before the tuned one
INSERT_PROBS = (1e-3, 1e-5)
# a new point within this fraction of the local spacing of an existing point
# pushes that neighbour inward
DETACH_FRACTION = 0.5
DETACH_PROB = 1e-6
GRAD_TOL = 1e-7
# points lighter than this are invisible to the rate at double precision
LIGHT_PROB = 1e-7
POLISH_TOL = 1e-8
# accepted when progress stops; far below the certification tolerance
POLISH_FLOOR = 1e-6
FEAS_FLOOR = 1e-6
# iterations over which a settled polish must halve its residual to continue
CRAWL_WINDOW = 10
MAX_LOG_STEP = 2.0
# iterations without a 10% residual reduction before a squeezed point is dropped
STALL_ITERS = 5
NEWTON_ITERS = 200
OUTER_ITERS = 200
COARSE_GRID = 64
# continuation steps in peak power
MAX_STEP = 2.0
# at large power the step may also grow to this fraction of the current u
MAX_REL_STEP = 0.1
MIN_STEP = 1e-4
# intermediate continuation steps only seed the next one; the final solve
# is certified at the requested tolerance
STEP_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class SolverResult:
    capacity: float
    dist: object
    lam: float
    kkt: object
    trace: list = field(default_factory=list)

    @property
    def spec(self):
        return self.dist.spec

    def to_dict(self):
        return {
            "capacity": self.capacity,
            "points": list(self.dist.points),
            "probs": list(self.dist.probs),
            "lambda": self.lam,
            "kkt_worst": self.kkt.worst_violation,
            "kkt_mass_max": float(np.max(self.kkt.mass_point_residuals)),
            "trace": [list(t) for t in self.trace],
        }


class _Objective:
    """Rate (minus an optional power penalty) and its derivatives in (p, rho)."""

    def __init__(self, n, peak):
        self.n = n
        self.nu = n / 2 - 1
        grid = radial_grid(n, float(peak))
        self.r = grid.r
        self.logw = grid.log_weights

    def value(self, x, p, penalty=0.0):
        g = log_kernel_ratio(self.n, self.r[None, :], x[:, None])
        logmix = logsumexp(g + np.log(p)[:, None], axis=0)
        w = np.exp(self.logw[None, :] + g)
        m2 = p @ x**2
        return m2 / 2 - p @ (w @ logmix) - penalty * m2

    def derivatives(self, x, p, penalty=0.0):
        r = self.r
        xr = x[:, None] * r[None, :]
        g = log_kernel_ratio(self.n, r[None, :], x[:, None])
        logmix = logsumexp(g + np.log(p)[:, None], axis=0)
        w = np.exp(self.logw[None, :] + g)
        mix = np.exp(self.logw + logmix)
        q = bessel_ratio_over_x(self.nu, xr)
        d = x[:, None] * (-1.0 + r**2 * q)
        dd = -1.0 + r**2 * (1.0 - (2 * self.nu + 1) * q - (xr * q) ** 2)
        c = 0.5 - penalty
        lp1 = logmix + 1.0
        f = w * d
        m2 = p @ x**2
        val = m2 / 2 - p @ (w @ logmix) - penalty * m2
        grad = np.concatenate([c * x**2 - w @ lp1, 2 * c * p * x - p * (f @ lp1)])
        wm = w / mix
        pf = p[:, None] * f
        hpp = -wm @ w.T
        hpx = np.diag(2 * c * x - f @ lp1) - wm @ pf.T
        hxx = np.diag(2 * c * p - p * ((w * (d * d + dd)) @ lp1)) - (pf / mix) @ pf.T
        hess = np.block([[hpp, hpx], [hpx.T, hxx]])
        return val, grad, hess

    def stationarity(self, x, p, penalty=0.0):
        """Rate gradient with the position part divided by p, and its Jacobian.

        Returns (gp, gx, dgp_dp, dgp_dx, dgx_dp, dgx_dx); dividing the position
        gradient by p keeps every row O(1) however light the point is.
        """
        r = self.r
        xr = x[:, None] * r[None, :]
        g = log_kernel_ratio(self.n, r[None, :], x[:, None])
        logmix = logsumexp(g + np.log(p)[:, None], axis=0)
        w = np.exp(self.logw[None, :] + g)
        mix = np.exp(self.logw + logmix)
        q = bessel_ratio_over_x(self.nu, xr)
        d = x[:, None] * (-1.0 + r**2 * q)
        dd = -1.0 + r**2 * (1.0 - (2 * self.nu + 1) * q - (xr * q) ** 2)
        c = 0.5 - penalty
        lp1 = logmix + 1.0
        f = w * d
        gp = c * x**2 - w @ lp1
        gx = 2 * c * x - f @ lp1
        wm = w / mix
        fm = f / mix
        pf = p[:, None] * f
        dgp_dp = -wm @ w.T
        dgp_dx = np.diag(gx) - wm @ pf.T
        dgx_dp = -fm @ w.T
        dgx_dx = np.diag(2 * c - (w * (d * d + dd)) @ lp1) - fm @ pf.T
        return gp, gx, dgp_dp, dgp_dx, dgx_dp, dgx_dx


def _merge_close(x, p):
    order = np.argsort(x)
    x, p = x[order], p[order]
    keep_x, keep_p = [x[0]], [p[0]]
    for xi, pi in zip(x[1:], p[1:]):
        if xi - keep_x[-1] < MERGE_GAP:
            tot = keep_p[-1] + pi
            keep_x[-1] = (keep_x[-1] * keep_p[-1] + xi * pi) / tot
            keep_p[-1] = tot
        else:
            keep_x.append(xi)
            keep_p.append(pi)
    return np.array(keep_x), np.array(keep_p)


def _scales(p):
    # Fisher-like scaling: probabilities by sqrt(p), positions by 1/sqrt(p), so
    # light points neither dominate constraint restoration nor stall in position
    sp = np.sqrt(np.maximum(p, 1e-12))
    return np.concatenate([sp, 1.0 / sp])


def _sqp_step(hl, grad, amat, cons, p, free):
    """Null-space SQP step on the free variables with a sign-corrected reduced Hessian."""
    k = p.size
    sc = _scales(p)[free]
    hf = sc[:, None] * hl[np.ix_(free, free)] * sc[None, :]
    gf = sc * grad[free]
    af = amat[:, free] * sc[None, :]
    # range-space step restores the constraints, null-space step ascends
    step = -np.linalg.pinv(af) @ cons
    zb = null_space(af)
    if zb.size:
        evals, evecs = np.linalg.eigh(zb.T @ hf @ zb)
        floor = 1e-8 * max(1.0, np.abs(evals).max())
        evals = -np.maximum(np.abs(evals), floor)
        rg = zb.T @ (gf + hf @ step)
        step = step + zb @ (evecs @ (-(evecs.T @ rg) / evals))
    mu = np.linalg.lstsq(af.T, gf + hf @ step, rcond=None)[0]
    dz = np.zeros(2 * k)
    dz[free] = sc * step
    return dz, mu


def _restore(x, p, u_a, free, peak, sweeps=3):
    """Second-order correction: project back onto sum p = 1, sum p x**2 = u_a."""
    k = x.size
    for _ in range(sweeps):
        cons = np.array([p.sum() - 1.0, p @ x**2 - u_a])
        if np.abs(cons).max() <= 1e-15:
            break
        amat = np.array([np.concatenate([np.ones(k), np.zeros(k)]),
                         np.concatenate([x**2, 2 * p * x])])
        sc = _scales(p)[free]
        dz = np.zeros(2 * k)
        dz[free] = -sc * (np.linalg.pinv(amat[:, free] * sc[None, :]) @ cons)
        p = p + dz[:k]
        x = np.clip(x + dz[k:], 0.0, peak)
    return x, p


def _ascend(obj, x, p, peak, u_a, binding, penalty=0.0):
    """Globalized SQP ascent over the heavy points; returns (x, p, multipliers, trace, converged).

    Points lighter than ``LIGHT_PROB`` stay frozen: their effect on the rate
    is below rounding, so they are placed by :func:`_polish` instead.
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, peak)
    p = np.asarray(p, dtype=float)
    p = p / p.sum()
    x, p = _merge_close(x, p)
    trace = []
    for it in range(NEWTON_ITERS):
        k = x.size
        val, grad, hess = obj.derivatives(x, p, penalty)
        cons = [p.sum() - 1.0]
        rows = [np.concatenate([np.ones(k), np.zeros(k)])]
        chess = np.zeros((2 * k, 2 * k))
        if binding:
            cons.append(p @ x**2 - u_a)
            rows.append(np.concatenate([x**2, 2 * p * x]))
            idx = np.arange(k)
            chess[idx, k + idx] = chess[k + idx, idx] = 2 * x
            chess[k + idx, k + idx] = 2 * p
        cons = np.array(cons)
        amat = np.array(rows)

        # least-squares multipliers at the current point, for the Lagrangian
        # curvature and for deciding which boundary positions stay fixed
        frozen = p < LIGHT_PROB
        inner = np.concatenate([~frozen, (x > 0) & (x < peak) & ~frozen])
        mu = np.linalg.lstsq(amat[:, inner].T, grad[inner], rcond=None)[0]
        lag = grad - amat.T @ mu
        fixed = (x <= 0.0) | ((x >= peak) & (lag[k:] >= 0))
        hl = hess - (mu[1] * chess if binding else 0.0)
        for _ in range(k + 1):
            free = np.concatenate([~frozen, ~fixed & ~frozen])
            dz, mu = _sqp_step(hl, grad, amat, cons, p, free)
            # a boundary position whose step points outward joins the fixed set
            out = ~fixed & (((x >= peak) & (dz[k:] > 0)) | ((x <= 0) & (dz[k:] < 0)))
            if not np.any(out):
                break
            fixed = fixed | out
        lag = grad - amat.T @ mu
        gnorm = np.abs(lag[free]).max()
        trace.append((k, float(val), float(gnorm)))
        if gnorm <= GRAD_TOL and np.abs(cons).max() <= 1e-10:
            return x, p, mu, trace, True
        dp, dx = dz[:k], dz[k:]

        amax = 1.0
        neg = dp < 0
        if np.any(neg):
            amax = min(amax, float(np.min(0.995 * p[neg] / -dp[neg])))
        hit_hi = dx > 0
        if np.any(hit_hi):
            amax = min(amax, float(np.min((peak - x[hit_hi]) / dx[hit_hi])))
        # zero is approached geometrically, like a vanishing probability
        hit_lo = dx < 0
        if np.any(hit_lo):
            amax = min(amax, float(np.min(0.995 * x[hit_lo] / -dx[hit_lo])))

        # augmented Lagrangian merit; smooth, so full SQP steps are not rejected
        kappa = 10.0 * (1.0 + np.abs(mu).max())
        merit0 = val - mu @ cons - 0.5 * kappa * cons @ cons
        slope = (grad - amat.T @ (mu + kappa * cons)) @ dz
        alpha = amax
        accepted = False
        for _ in range(40):
            xn = np.clip(x + alpha * dx, 0.0, peak)
            pn = p + alpha * dp
            # land exactly on a bound when the step was cut by it
            xn[np.abs(xn - peak) < 1e-13 * max(1.0, peak)] = peak
            xn[xn < 1e-9] = 0.0
            if binding:
                xn, pn = _restore(xn, pn, u_a, free, peak)
            if np.all(pn > 0):
                c_new = np.array([pn.sum() - 1.0] + ([pn @ xn**2 - u_a] if binding else []))
                merit = obj.value(xn, pn, penalty) - mu @ c_new - 0.5 * kappa * c_new @ c_new
                if merit >= merit0 + 1e-4 * alpha * max(slope, 0.0) - 1e-14 * max(1.0, abs(merit0)):
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            # no measurable progress left near a stationary point
            near = gnorm <= 1e3 * GRAD_TOL and np.abs(cons).max() <= 1e-10
            return x, p, mu, trace, near
        x, p = xn, pn
        small = p < PRUNE_PROB
        if np.any(small) and x.size > 1:
            x, p = x[~small], p[~small]
        x, p = _merge_close(x, p / p.sum())
    return x, p, mu, trace, False


def _polish(obj, x, p, mu, peak, u_a, binding, penalty, trace):
    """Newton on the full stationarity system in (log p, positions, multipliers).

    Light points change the rate by less than rounding, so an ascent method
    cannot place them, but their equations

        d rate / d p_k = mu_0 + mu_1 x_k**2,   d rate / d x_k = 2 mu_1 p_k x_k

    are O(1) once the second is divided by p_k, and in log p_k the first is
    nearly linear for a point alone in the tail.  A point whose weight is
    driven towards zero without reducing the residual is dropped.
    """
    mu = np.array(mu, dtype=float)
    nc = mu.size
    slow = 0
    damp = None
    history = []
    for _ in range(NEWTON_ITERS):
        k = x.size

        def residual(x, p, mu, movable):
            gp, gx, *jac = obj.stationarity(x, p, penalty)
            m1 = mu[1] if binding else 0.0
            e1 = gp - mu[0] - m1 * x**2
            e2 = gx - 2 * m1 * x
            cons = [p.sum() - 1.0] + ([p @ x**2 - u_a] if binding else [])
            return np.concatenate([e1, e2[movable], cons]), e2, jac

        _, e2, _ = residual(x, p, mu, np.ones(k, bool))
        movable = (x > 0) & ~((x >= peak) & (e2 >= 0))
        res, _, (a, b, cm, dm) = residual(x, p, mu, movable)
        err = float(np.abs(res[:-nc]).max())
        trace.append((int(k), -1.0, err))
        feasible = np.abs(res[-nc:]).max()
        if err <= POLISH_TOL and feasible <= 1e-12:
            return x, p, mu
        settled = err <= POLISH_FLOOR and feasible <= FEAS_FLOOR
        history.append(err)
        # near a degenerate optimum Newton converges only linearly
        crawling = len(history) > CRAWL_WINDOW and err > 0.5 * history[-CRAWL_WINDOW - 1]
        mv = np.flatnonzero(movable)
        m = mv.size
        size = k + m + nc
        # weight unknowns scaled by the inverse diagonal curvature: log p for a
        # point that dominates its part of the output, p itself for a light
        # point buried under a heavy neighbour
        sig = 1.0 / np.maximum(-np.diag(a), 1e-12)
        jac = np.zeros((size, size))
        jac[:k, :k] = a * sig[None, :]
        jac[:k, k:k + m] = b[:, mv]
        jac[k:k + m, :k] = cm[mv] * sig[None, :]
        jac[k:k + m, k:k + m] = dm[np.ix_(mv, mv)]
        jac[:k, k + m] = -1.0
        jac[k + m, :k] = sig
        if binding:
            jac[mv, k + np.arange(m)] -= 2 * mu[1] * x[mv]
            jac[k + np.arange(m), k + np.arange(m)] -= 2 * mu[1]
            jac[:k, k + m + 1] = -x**2
            jac[k:k + m, k + m + 1] = -2 * x[mv]
            jac[k + m + 1, :k] = sig * x**2
            jac[k + m + 1, k:k + m] = 2 * p[mv] * x[mv]
        # Levenberg-Marquardt: the Jacobian is nearly singular along the flat
        # directions of the rate, where plain Newton steps overshoot
        jtj = jac.T @ jac
        jtr = jac.T @ res
        phi0 = res @ res
        damp = damp if damp is not None else 1e-8 * np.abs(np.diag(jtj)).max()
        for _ in range(60):
            step = -np.linalg.solve(jtj + damp * np.eye(size), jtr)
            ratio, dx, dmu = sig * step[:k] / p, np.zeros(k), step[k + m:]
            dx[mv] = step[k:k + m]
            # growth is additive, shrinking multiplicative, so p stays positive
            dt = np.where(ratio >= 0, np.log1p(np.maximum(ratio, 0.0)), ratio)
            big = np.abs(dt).max()
            if big > MAX_LOG_STEP:
                dt, dx, dmu = dt * (MAX_LOG_STEP / big), dx * (MAX_LOG_STEP / big), dmu * (MAX_LOG_STEP / big)
            xn = np.clip(x + dx, 0.0, peak)
            xn[np.abs(xn - peak) < 1e-13 * max(1.0, peak)] = peak
            pn = p * np.exp(dt)
            mun = mu + dmu
            rn, _, _ = residual(xn, pn, mun, movable)
            if rn @ rn < phi0:
                damp = max(damp / 3, 1e-300)
                break
            damp *= 4
        else:
            if settled:
                return _project(x, p, mu, u_a, binding, peak)
            raise NumericalError("stationarity Newton made no progress", detail=trace)
        # a weight pushed below the representable range leaves the support
        dying = np.log(pn) < MIN_LOG_PROB
        slow = slow + 1 if rn @ rn > 0.81 * phi0 else 0
        if slow >= STALL_ITERS and k > 1 and dt.min() < -1.0:
            # stalled: the point being squeezed hardest leaves
            dying[int(np.argmin(dt))] = True
        if settled and (slow >= STALL_ITERS or crawling) and not np.any(dying):
            return _project(x, p, mu, u_a, binding, peak)
        x, p, mu = xn, pn, mun
        if np.any(dying) and k > 1:
            x, p = x[~dying], p[~dying] / p[~dying].sum()
            slow = 0
        if np.any(np.diff(x) < MERGE_GAP):
            x, p = _merge_close(x, p)
    if settled:
        return _project(x, p, mu, u_a, binding, peak)
    raise NumericalError("stationarity Newton did not converge", detail=trace)


def _project(x, p, mu, u_a, binding, peak):
    """Restore sum p = 1 (and the power equality) exactly after a settled polish."""
    p = p / p.sum()
    if binding:
        x, p = _restore(x, p, u_a, np.ones(2 * x.size, bool), peak, sweeps=5)
    return x, p, mu


def _newton(obj, x, p, peak, u_a, binding, penalty=0.0):
    """Maximize the (penalized) rate over a fixed support; returns (x, p, multipliers, trace).

    A globalized ascent places the heavy points, then Newton on the
    stationarity equations settles all points jointly.
    """
    x, p, mu, trace, ok = _ascend(obj, x, p, peak, u_a, binding, penalty)
    if ok and p.min() >= LIGHT_PROB:
        return x, p, mu, trace
    # an ascent that crawls through a flat valley is finished by Newton
    x, p, mu = _polish(obj, x, p, mu, peak, u_a, binding, penalty, trace)
    return x, p, mu, trace


def _solve_support(spec, x, p, obj=None):
    """Fixed-support optimum for ``spec``; returns (x, p, lam) with lam >= 0."""
    peak = spec.peak_amplitude
    obj = obj or _Objective(spec.n, peak)
    if spec.relaxed or not math.isfinite(spec.u_a):
        x, p, _, _ = _newton(obj, x, p, peak, spec.u_a, binding=False)
        return x, p, 0.0
    x1, p1, mu, _ = _newton(obj, x, p, peak, spec.u_a, binding=True)
    if mu[1] >= 0:
        return x1, p1, float(mu[1])
    x0, p0, _, _ = _newton(obj, x1, p1, peak, spec.u_a, binding=False)
    if p0 @ x0**2 <= spec.u_a + 1e-9:
        return x0, p0, 0.0
    return x1, p1, 0.0


def optimize_fixed_support(spec, init, lam=None):
    """Local maximizer of rate - lam * E[P**2] with the support size of ``init``.

    With ``lam=None`` the average constraint is imposed as an equality when
    it can bind (u_a < u_p) and lam is taken from its multiplier.
    """
    x = init.points_array()
    p = init.probs_array()
    if spec.u_p == 0:
        return make_distribution([0.0], [1.0], spec)
    obj = _Objective(spec.n, spec.peak_amplitude)
    if lam is None:
        x, p, _ = _solve_support(spec, x, p, obj)
    else:
        if lam < 0:
            raise DomainError("lambda must be non-negative")
        x, p, _, _ = _newton(obj, x, p, spec.peak_amplitude, spec.u_a, False, penalty=lam)
    return make_distribution(x, p, spec)


def _refine_argmax(model, report, lam, spec):
    grid = report.grid
    k = int(np.argmax(report.residuals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    if hi - lo <= 0:
        return grid[k]

    def neg_s(rho):
        s = model.marginal(rho)[0] - model.entropy()
        return -(s - lam * (rho * rho - spec.u_a)) if lam else -s

    res = minimize_scalar(neg_s, bounds=(lo, hi), method="bounded", options={"xatol": 1e-8})
    return float(res.x) if -res.fun >= report.worst_violation else float(grid[k])


def _tuned_weight(spec, x, p, rho, lam):
    """Weight of a new point at ``rho`` maximizing rate - lam * E[P**2] along the mixing segment.

    The gain behaves like -eps log eps, so a point far in the tail can deserve
    a weight of 1e-30 or less; the weight is the root of the directional
    derivative in log(eps).
    """
    xs = np.append(x, rho)
    peak = spec.peak_amplitude

    def slope(log_eps):
        eps = math.exp(log_eps)
        ps = np.append(p * (1 - eps), eps)
        model = MixtureModel(spec.n, xs, ps, peak)
        h = model.marginal(xs) - lam * xs**2
        return h[-1] - ps @ h

    hi = math.log(0.5)
    if slope(hi) >= 0:
        return 0.5
    if slope(MIN_LOG_PROB) <= 0:
        return math.exp(MIN_LOG_PROB)
    return math.exp(brentq(slope, MIN_LOG_PROB, hi, xtol=1e-3))


def _with_point(x, p, rho, eps):
    return np.append(x, rho), np.append(p * (1 - eps), eps)


def _candidates(spec, x, p, new, lam):
    """Supports to try after adding the point ``new``, in order of preference."""
    peak = spec.peak_amplitude
    if x.size > 1 and x[-2] < new and x[-1] < peak:
        # a degenerate tail can settle off the optimum; restarting with the
        # outermost point on the sphere often lets it find the right spot
        snapped = x.copy()
        snapped[-1] = peak
        yield snapped, p
    tuned = _tuned_weight(spec, x, p, new, lam)
    j = int(np.argmin(np.abs(x - new)))
    if j > 0 and abs(x[j] - new) < DETACH_FRACTION * (x[j] - x[j - 1]):
        # a near-coincident pair makes the fixed-support system nearly
        # singular, so the neighbour restarts halfway to its inner neighbour
        moved = x.copy()
        moved[j] = 0.5 * (x[j - 1] + x[j])
        for eps in (DETACH_PROB, tuned):
            xs, ps = _with_point(moved, p, new, eps)
            order = np.argsort(xs)
            yield xs[order], ps[order]
    for eps in INSERT_PROBS:
        yield _with_point(x, p, new, eps)
    yield _with_point(x, p, new, tuned)


def _certify(spec, x, p, grid_size, trace, tol=KKT_TOL):
    """Alternate fixed-support optimization and point addition until certified.

    A new point first gets a weight from ``INSERT_PROBS``, heavy enough for
    the ascent to rearrange its neighbours; if none lowers the violation, the
    tuned (possibly tiny) weight of :func:`_tuned_weight` is tried.  A point
    that lands close to an existing one first moves that neighbour inward.
    """
    obj = _Objective(spec.n, spec.peak_amplitude)
    x, p, lam = _solve_support(spec, x, p, obj)
    model = MixtureModel(spec.n, x, p, spec.peak_amplitude)
    rep = kkt_report_from_model(model, lam, spec, grid_size)
    for _ in range(OUTER_ITERS):
        trace.append((int(x.size), model.rate(), rep.worst_violation))
        if rep.certified(tol) or x.size >= MAX_SUPPORT:
            break
        new = _refine_argmax(model, rep, lam, spec)
        if np.min(np.abs(x - new)) < MERGE_GAP:
            break
        best = None
        for xs, ps in _candidates(spec, x, p, new, lam):
            try:
                cand = _solve_support(spec, xs, ps, obj)
            except NumericalError:
                continue
            cmodel = MixtureModel(spec.n, cand[0], cand[1], spec.peak_amplitude)
            crep = kkt_report_from_model(cmodel, cand[2], spec, grid_size)
            if crep.worst_violation < rep.worst_violation:
                best = cand, cmodel, crep
                break
        if best is None:
            break
        (x, p, lam), model, rep = best
    if rep.certified(tol):
        return x, p, lam
    raise CertificationError(
        "could not certify optimality within the support budget",
        detail={"points": x.tolist(), "probs": p.tolist(), "lambda": lam,
                "kkt": rep.to_dict(), "trace": list(trace)},
    )


def _finish(spec, x, p, lam, trace, grid_size):
    if lam == 0 or not math.isfinite(spec.u_a):
        lam = 0.0
    else:
        # exact feasibility before validation
        p = p / p.sum()
    dist = make_distribution(x, p, spec)
    rep = kkt_report(dist, lam, spec, grid_size)
    return SolverResult(capacity=rate(dist), dist=dist, lam=float(lam), kkt=rep, trace=trace)


def solve_capacity(spec, grid_size=512):
    """Certified capacity and optimal amplitude law for the identity channel ``spec``."""
    if spec.n < 2:
        raise DomainError("solve_capacity needs n >= 2; use scalar_capacity for n = 1")
    return solve_amplitude(spec, grid_size)


def solve_amplitude(spec, grid_size=512):
    """Continuation and support search shared by the vector and scalar channels.

    For n = 1 the amplitude law describes the symmetric input +-rho.
    """
    if not math.isfinite(spec.u_p):
        raise DomainError("the capacity solver needs a finite peak bound")
    trace = []
    if spec.u_p == 0 or spec.u_a == 0:
        dist = make_distribution([0.0], [1.0], spec)
        rep = kkt_report(dist, 0.0, spec, max(grid_size, 64))
        return SolverResult(capacity=rate(dist), dist=dist, lam=0.0, kkt=rep, trace=[(1, 0.0, 0.0)])

    x, p = np.array([0.0]), np.array([1.0])
    # peak power grows with the average constraint slack, then with it binding
    u_relaxed = min(spec.u_p, spec.u_a)
    x, p, lam = _continue(lambda u: ChannelSpec(spec.n, u), 0.0, u_relaxed, x, p, trace, True)
    if spec.u_a < spec.u_p:
        x, p, lam = _continue(lambda u: ChannelSpec(spec.n, u, spec.u_a), spec.u_a, spec.u_p,
                              x, p, trace, False)
    x, p, lam = _certify(spec, x, p, grid_size, trace)
    return _finish(spec, x, p, lam, trace, grid_size)


def _continue(make_spec, start, stop, x, p, trace, follow_peak):
    """Track the optimum while the peak power moves from ``start`` to ``stop``.

    Steps grow after a success and halve after a failure.  With
    ``follow_peak`` points on the peak sphere stay on it as the sphere grows;
    otherwise the previous optimum is kept as a feasible start.
    """
    step = min(MAX_STEP, (stop - start) / 10)
    u, lam = start, 0.0
    while u < stop:
        nxt = min(stop, u + step)
        old_peak, peak = math.sqrt(u), math.sqrt(nxt)
        xs = np.where(x >= old_peak, peak, x) if follow_peak else x
        try:
            xs, ps, lam = _certify(make_spec(nxt), xs, p, COARSE_GRID, trace, STEP_TOL)
        except (NumericalError, CertificationError):
            step /= 2
            if step < MIN_STEP * max(1.0, stop):
                raise
            continue
        x, p, u = xs, ps, nxt
        step = min(max(MAX_STEP, MAX_REL_STEP * u), 1.5 * step)
    return x, p, lam
