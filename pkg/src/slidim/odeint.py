"""Batched embedded Runge-Kutta 5(4) integration with event localization.

All flows in the package go through :func:`integrate_batch`.  It advances N
trajectories simultaneously, each with its own adaptive step size, which is
what makes scans over thousands of return-map seeds affordable.  Events are
located by sign-change bracketing followed by bisection that re-integrates
short steps from the last accepted state (no dense output), down to
``|event| < tol_event``.

The scheme is the Dormand-Prince 5(4) pair; the 5th-order solution is
propagated.
"""

import numpy as np

# Dormand-Prince 5(4) tableau
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_ERR = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                 -17253 / 339200, 22 / 525, -1 / 40])

# terminal status codes
RUNNING = 0
EVENT = 1
TIMEOUT = 2
DOMAIN_EXIT = 3
STEP_FAIL = 4
STEPS_EXHAUSTED = 5


class EventSpec:
    """A scalar event function with crossing direction and departure rule.

    ``require_departure`` implements the policy that excludes the trivial
    root at t=0: crossings only count once |fn| exceeded tol_event at some
    earlier accepted sample.
    """

    def __init__(self, fn, direction=0, require_departure=True):
        self.fn = fn
        self.direction = direction
        self.require_departure = require_departure


class BatchResult:
    def __init__(self, n):
        self.t = np.zeros(n)
        self.u = np.zeros((n, 3))
        self.status = np.full(n, RUNNING, dtype=int)
        self.event = np.full(n, -1, dtype=int)
        self.winding = np.zeros(n)
        self.steps = np.zeros(n, dtype=int)
        self.samples = None


def _rk_step(f, u, h):
    """One DP54 step of sizes ``h`` for states ``u``; returns (u_new, err)."""
    hcol = h[:, None]
    k = [f(u)]
    for row in _A[1:]:
        du = row[0] * k[0]
        for coef, ki in zip(row[1:], k[1:]):
            du = du + coef * ki
        k.append(f(u + hcol * du))
    ks = np.stack(k)
    u_new = u + hcol * np.tensordot(_B5, ks, axes=(0, 0))
    err = hcol * np.tensordot(_ERR, ks, axes=(0, 0))
    return u_new, err


def _angles(u, winding):
    center, e1, e2 = winding
    d = u - center
    return np.arctan2(d @ e2, d @ e1)


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def integrate_batch(f, u0, t_max, events=(), *, rtol=1e-10, atol=1e-12,
                    tol_event=1e-12, h0=1e-4, h_max=0.25, project=None,
                    winding=None, domain=None, record=False,
                    max_rounds=300000, row_args=None):
    """Advance every row of ``u0`` until an event, t_max, or domain exit.

    f        : (M, 3) -> (M, 3) field (sign-folded by the caller for
               backward flows); t does not appear (autonomous systems).
    events   : sequence of EventSpec; first localized crossing terminates.
    project  : optional (M, 3) -> (M, 3) applied after each accepted step
               (manifold drift correction).
    winding  : optional (center, e1, e2) accumulating the rotation angle
               of u around center in the (e1, e2) frame.
    record   : keep per-trajectory (t, u) samples (scalar use only).
    row_args : optional (N, K) per-trajectory constants; f is then called
               as f(u, args) with rows aligned.
    """
    u = np.array(u0, dtype=float)
    if u.ndim == 1:
        u = u[None, :]
    n = u.shape[0]
    res = BatchResult(n)
    res.u[:] = u
    if record:
        res.samples = [[(0.0, u[i].copy())] for i in range(n)]

    t = np.zeros(n)
    h = np.full(n, min(h0, h_max))
    t_max = np.broadcast_to(np.asarray(t_max, dtype=float), (n,)).copy()

    n_ev = len(events)
    ev_prev = np.zeros((n, n_ev))
    departed = np.zeros((n, n_ev), dtype=bool)
    for j, ev in enumerate(events):
        vals = np.asarray(ev.fn(u), dtype=float)
        ev_prev[:, j] = vals
        departed[:, j] = np.abs(vals) > tol_event if ev.require_departure else True

    theta = _angles(u, winding) if winding is not None else None

    active = np.ones(n, dtype=bool)
    tiny = np.maximum(1e-14, 1e-14 * t_max)
    for _ in range(max_rounds):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        ui, ti, hi = u[idx], t[idx], h[idx]
        hi = np.minimum(hi, t_max[idx] - ti)
        if row_args is not None:
            fi = lambda uu, _a=row_args[idx]: f(uu, _a)  # noqa: E731
        else:
            fi = f

        with np.errstate(all="ignore"):
            u_new, err = _rk_step(fi, ui, hi)
            scale = atol + rtol * np.maximum(np.abs(ui), np.abs(u_new))
            errnorm = np.sqrt(np.mean((err / scale) ** 2, axis=1))
        bad = ~np.isfinite(errnorm)
        errnorm[bad] = np.inf
        accept = errnorm <= 1.0

        # step-size update (factor clipped to [0.2, 5])
        with np.errstate(all="ignore"):
            fac = 0.9 * errnorm ** -0.2
        fac[errnorm == 0.0] = 5.0
        fac = np.clip(fac, 0.2, 5.0)
        h_new = np.minimum(hi * fac, h_max)

        # rejected rows: shrink and retry (STEP_FAIL on underflow)
        rej = idx[~accept]
        if rej.size:
            h[rej] = h_new[~accept]
            fail = h[rej] < 1e-14 * np.maximum(1.0, t[rej])
            if fail.any():
                frows = rej[fail]
                res.status[frows] = STEP_FAIL
                res.t[frows], res.u[frows] = t[frows], u[frows]
                active[frows] = False

        if not accept.any():
            continue
        rows = idx[accept]
        ua, ta = u_new[accept], ti[accept] + hi[accept]
        ha = hi[accept]
        if project is not None:
            ua = project(ua)

        # event handling on accepted rows
        hit_event = np.full(rows.size, -1, dtype=int)
        hit_frac = np.full(rows.size, np.inf)
        if n_ev:
            for j, ev in enumerate(events):
                vals = np.asarray(ev.fn(ua), dtype=float)
                prev = ev_prev[rows, j]
                dep = departed[rows, j]
                crossed = dep & (prev * vals < 0.0)
                if ev.direction > 0:
                    crossed &= vals > prev
                elif ev.direction < 0:
                    crossed &= vals < prev
                landed = dep & (np.abs(vals) <= tol_event) & ~crossed
                for kind, mask in (("cross", crossed), ("land", landed)):
                    if not mask.any():
                        continue
                    sub = np.nonzero(mask)[0]
                    if kind == "cross":
                        if row_args is not None:
                            fsub = lambda uu, _a=row_args[rows[sub]]: f(uu, _a)  # noqa: E731
                        else:
                            fsub = f
                        frac = _refine(fsub, u[rows[sub]], ha[sub], ev.fn,
                                       prev[sub], tol_event, project)
                    else:
                        frac = np.ones(sub.size)
                    better = frac < hit_frac[sub]
                    hit_event[sub[better]] = j
                    hit_frac[sub[better]] = frac[better]
                ev_prev[rows, j] = vals
                departed[rows, j] |= np.abs(vals) > tol_event

        hit = hit_event >= 0
        if hit.any():
            sub = np.nonzero(hit)[0]
            tau = hit_frac[sub] * ha[sub]
            if row_args is not None:
                fsub = lambda uu, _a=row_args[rows[sub]]: f(uu, _a)  # noqa: E731
            else:
                fsub = f
            u_hit = _substep(fsub, u[rows[sub]], tau, project)
            rr = rows[sub]
            if winding is not None:
                th = _angles(u_hit, winding)
                res.winding[rr] += _wrap(th - theta[rr])
            res.status[rr] = EVENT
            res.event[rr] = hit_event[sub]
            res.t[rr] = t[rr] + tau
            res.u[rr] = u_hit
            active[rr] = False
            if record:
                for i, row in enumerate(rr):
                    res.samples[row].append((res.t[row], u_hit[i].copy()))

        go = ~hit
        rows, ua, ta = rows[go], ua[go], ta[go]
        if rows.size:
            if winding is not None:
                th = _angles(ua, winding)
                res.winding[rows] += _wrap(th - theta[rows])
                theta[rows] = th
            u[rows], t[rows] = ua, ta
            h[rows] = h_new[accept][go]
            res.steps[rows] += 1
            if record:
                for i, row in enumerate(rows):
                    res.samples[row].append((t[row], ua[i].copy()))

            if domain is not None:
                lo, hi_box = domain
                out = np.any((ua < lo) | (ua > hi_box), axis=1)
                if out.any():
                    orows = rows[out]
                    res.status[orows] = DOMAIN_EXIT
                    res.t[orows], res.u[orows] = t[orows], u[orows]
                    active[orows] = False

            done = t[rows] >= t_max[rows] - tiny[rows]
            if done.any():
                drows = rows[done]
                res.status[drows] = TIMEOUT
                res.t[drows], res.u[drows] = t[drows], u[drows]
                active[drows] = False

    still = res.status == RUNNING
    if still.any():
        res.status[still] = STEPS_EXHAUSTED
        res.t[still], res.u[still] = t[still], u[still]
    return res


def _substep(f, u0, tau, project):
    """One RK step of per-row size tau from u0, with projection."""
    u1, _ = _rk_step(f, u0, tau)
    return project(u1) if project is not None else u1


def _refine(f, u0, h, ev_fn, ev_lo, tol_event, project, max_iter=80):
    """Bisection for the crossing fraction in (0, 1] of each row's step.

    Brackets [lo, hi] maintain opposite event signs; each probe re-integrates
    a single short step from the accepted pre-step state u0.
    """
    m = u0.shape[0]
    lo = np.zeros(m)
    hi = np.ones(m)
    sign_lo = np.sign(ev_lo)
    frac = np.full(m, np.nan)
    live = np.ones(m, dtype=bool)
    for _ in range(max_iter):
        if not live.any():
            break
        mid = np.where(live, 0.5 * (lo + hi), hi)
        probe = _substep(f, u0, mid * h, project)
        vals = np.asarray(ev_fn(probe), dtype=float)
        ok = live & (np.abs(vals) <= tol_event)
        frac[ok] = mid[ok]
        live &= ~ok
        same = live & (np.sign(vals) == sign_lo)
        lo[same] = mid[same]
        other = live & ~same
        hi[other] = mid[other]
        tight = live & ((hi - lo) < 1e-16)
        frac[tight] = hi[tight]
        live &= ~tight
    frac[live] = hi[live]
    return frac
