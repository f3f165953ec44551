"""Inner loops for trajectory integration and batch basin labeling.

Compiled with numba when it is importable; set EGD_BACKEND=numpy to force
the plain-Python fallback. The fallback runs the very same function bodies,
so results are bit-identical across backends, just slower.

Conventions shared by both dynamics:

* ``eqs`` is an (m, n) array of known rest points; a run that ends within
  ``conv_radius`` of row r reports label r, otherwise label -1.
* status codes: 0 converged, 1 horizon reached, 2 step-size underflow,
  3 degenerate geometry, 4 step or event budget exhausted.
"""

import os

import numpy as np

_requested = (os.environ.get("EGD_BACKEND") or "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"EGD_BACKEND must be 'auto', 'numba' or 'numpy', got {_requested!r}")

if _requested in ("auto", "numba"):
    try:
        import numba as _numba

        def _jit(func):
            return _numba.njit(cache=True, nogil=True)(func)

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        def _jit(func):
            return func

        BACKEND = "numpy"
else:
    def _jit(func):
        return func

    BACKEND = "numpy"

STATUS_CONVERGED = 0
STATUS_HORIZON = 1
STATUS_UNDERFLOW = 2
STATUS_DEGENERATE = 3
STATUS_BUDGET = 4

SEG_REGULAR = 0
SEG_SLIDING = 1
SEG_TERMINAL = 2

# Dormand-Prince 5(4) tableau.
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
# Difference between the 5th and 4th order weights, for the error estimate.
_E1 = 35.0 / 384.0 - 5179.0 / 57600.0
_E3 = 500.0 / 1113.0 - 7571.0 / 16695.0
_E4 = 125.0 / 192.0 - 393.0 / 640.0
_E5 = -2187.0 / 6784.0 + 92097.0 / 339200.0
_E6 = 11.0 / 84.0 - 187.0 / 2100.0
_E7 = -1.0 / 40.0

_H_MAX = 10.0
_H_INIT = 1e-3
# Accepted states may dip this far below zero before the step is rejected
# outright; smaller negatives are round-off and clamp to the face.
_NEG_REJECT = -1e-10
# Frequencies below this are flushed to exactly zero. Re-entering from such
# a level would take longer than any horizon used here, and keeping the
# decayed mode alive forces a stability-limited step size on stiff games.
_FLUSH = 1e-60


@_jit
def _rhs_into(A, x, out):
    n = x.shape[0]
    phi = 0.0
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += A[i, j] * x[j]
        out[i] = s
    for i in range(n):
        phi += x[i] * out[i]
    for i in range(n):
        out[i] = x[i] * (out[i] - phi)


@_jit
def _nearest_sq(eqs, x):
    best = -1
    bestd = 1.0e300
    for r in range(eqs.shape[0]):
        d = 0.0
        for i in range(x.shape[0]):
            diff = eqs[r, i] - x[i]
            d += diff * diff
        if d < bestd:
            bestd = d
            best = r
    return best, bestd


@_jit
def _rd_run(A, x, horizon, rtol, atol, eqs, conv_radius, dwell, max_steps,
            ts, xs, cap, record):
    """Advance one replicator orbit in place; returns (nrec, status, label, t).

    Renormalizes after every accepted step, keeps faces exact (a zero stays
    zero through all stages), and stops early after ``dwell`` consecutive
    accepted steps inside ``conv_radius`` of the same known rest point.
    """
    n = x.shape[0]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    xt = np.empty(n)
    xn = np.empty(n)

    t = 0.0
    h = _H_INIT
    if h > horizon:
        h = horizon
    nrec = 0
    if record and cap > 0:
        ts[0] = 0.0
        for i in range(n):
            xs[0, i] = x[i]
        nrec = 1
    dwell_eq = -1
    dwell_count = 0
    status = STATUS_HORIZON
    label = -1
    steps = 0
    conv_sq = conv_radius * conv_radius

    _rhs_into(A, x, k1)
    while t < horizon:
        if steps >= max_steps:
            status = STATUS_BUDGET
            break
        steps += 1
        if h > horizon - t:
            h = horizon - t

        for i in range(n):
            xt[i] = x[i] + h * _A21 * k1[i]
        _rhs_into(A, xt, k2)
        for i in range(n):
            xt[i] = x[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        _rhs_into(A, xt, k3)
        for i in range(n):
            xt[i] = x[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _rhs_into(A, xt, k4)
        for i in range(n):
            xt[i] = x[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        _rhs_into(A, xt, k5)
        for i in range(n):
            xt[i] = x[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                + _A64 * k4[i] + _A65 * k5[i])
        _rhs_into(A, xt, k6)
        for i in range(n):
            xn[i] = x[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                + _B5 * k5[i] + _B6 * k6[i])
        _rhs_into(A, xn, k7)

        errsum = 0.0
        for i in range(n):
            e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                     + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            ax = abs(x[i])
            axn = abs(xn[i])
            sc = atol + rtol * (ax if ax > axn else axn)
            q = e / sc
            errsum += q * q
        err = np.sqrt(errsum / n)

        if err <= 1.0:
            bad = False
            for i in range(n):
                if xn[i] < 0.0:
                    if xn[i] < _NEG_REJECT:
                        bad = True
                        break
                    xn[i] = 0.0
            if bad:
                h *= 0.5
                if h < 1e-14 * (1.0 + t):
                    status = STATUS_UNDERFLOW
                    break
                continue
            s = 0.0
            for i in range(n):
                if xn[i] < _FLUSH:
                    xn[i] = 0.0
                s += xn[i]
            for i in range(n):
                x[i] = xn[i] / s
            t += h
            _rhs_into(A, x, k1)
            if record and nrec < cap:
                ts[nrec] = t
                for i in range(n):
                    xs[nrec, i] = x[i]
                nrec += 1
            if eqs.shape[0] > 0:
                near, dsq = _nearest_sq(eqs, x)
                if dsq <= conv_sq:
                    if near == dwell_eq:
                        dwell_count += 1
                    else:
                        dwell_eq = near
                        dwell_count = 1
                    if dwell_count >= dwell:
                        status = STATUS_CONVERGED
                        label = dwell_eq
                        break
                else:
                    dwell_eq = -1
                    dwell_count = 0
            fac = 5.0
            if err > 0.0:
                fac = 0.9 * err ** -0.2
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h *= fac
            if h > _H_MAX:
                h = _H_MAX
        else:
            fac = 0.9 * err ** -0.2
            if fac < 0.2:
                fac = 0.2
            h *= fac
            if h < 1e-14 * (1.0 + t):
                status = STATUS_UNDERFLOW
                break

    if status != STATUS_CONVERGED and eqs.shape[0] > 0:
        near, dsq = _nearest_sq(eqs, x)
        if dsq <= conv_sq:
            label = near
    if record and nrec > 0 and nrec < cap and ts[nrec - 1] < t:
        ts[nrec] = t
        for i in range(n):
            xs[nrec, i] = x[i]
        nrec += 1
    return nrec, status, label, t


@_jit
def _rd_batch(A, X0, horizon, rtol, atol, eqs, conv_radius, dwell, max_steps,
              labels, statuses):
    m, n = X0.shape
    ts = np.empty(1)
    xs = np.empty((1, n))
    x = np.empty(n)
    for r in range(m):
        for i in range(n):
            x[i] = X0[r, i]
        nrec, st, lb, t = _rd_run(A, x, horizon, rtol, atol, eqs, conv_radius,
                                  dwell, max_steps, ts, xs, 0, False)
        labels[r] = lb
        statuses[r] = st


@_jit
def _exp_root(c, d, ctol):
    """Smallest tau > 0 solving c + d*exp(-tau) = 0, else -1.

    Gaps along both regular and sliding arcs have exactly this shape. A
    root in forward time needs c < 0 and d > -c; when |c| is below ``ctol``
    the gap is numerically constant and never counted as crossing.
    """
    if c >= -ctol:
        return -1.0
    if d <= -c:
        return -1.0
    return np.log(d / (-c))


@_jit
def _pair_decision(A, i, j, ztol):
    """Resolve a two-way payoff tie: 0 enter regime i, 1 regime j, 2 slide.

    The gap (Ax)_i - (Ax)_j grows at constant rate -a_ji under regime i
    and a_ij under regime j while on the tie line. Both rates positive
    pushes the state to i's side, both negative to j's; anything else
    keeps the state on the line as a vertex mixture.
    """
    si = -A[j, i]
    sj = A[i, j]
    if si > ztol and sj > ztol:
        return 0
    if si < -ztol and sj < -ztol:
        return 1
    return 2


@_jit
def _brd_run(A, x, horizon, conv_radius, eqs, tie_tol, ztol, ctol, max_events,
             seg_t, seg_x, seg_tgt, seg_pair, seg_kind, cap, record):
    """Event-driven best-response orbit; returns (nseg, status, label, t).

    Every arc, regular or sliding, is x(t) = target + exp(-t)(x0 - target),
    so events are logarithm roots and the state advances exactly. Recorded
    segment r covers [seg_t[r], seg_t[r+1]) with its own target; a sentinel
    row at index nseg holds the terminal time and state.
    """
    n = x.shape[0]
    p = np.empty(n)
    q = np.empty(n)
    aq = np.empty(n)
    conv_sq = conv_radius * conv_radius

    t = 0.0
    nseg = 0
    status = STATUS_HORIZON
    label = -1

    near = -1
    dsq = 1.0e300
    if eqs.shape[0] > 0:
        near, dsq = _nearest_sq(eqs, x)
    if dsq <= conv_sq:
        if record and cap > 0:
            seg_t[0] = 0.0
            for i in range(n):
                seg_x[0, i] = x[i]
                seg_tgt[0, i] = x[i]
            seg_pair[0, 0] = -1
            seg_pair[0, 1] = -1
            seg_kind[0] = SEG_TERMINAL
        return 0, STATUS_CONVERGED, near, 0.0

    # Current mode: regime >= 0 means heading to that vertex, -1 means
    # sliding on slide_i/slide_j, -2 means undecided (resolve below).
    regime = -2
    slide_i = -1
    slide_j = -1

    for i in range(n):
        s = 0.0
        for jj in range(n):
            s += A[i, jj] * x[jj]
        p[i] = s
    pmax = p[0]
    for i in range(1, n):
        if p[i] > pmax:
            pmax = p[i]
    ties0 = 0
    first = -1
    second = -1
    for i in range(n):
        if p[i] >= pmax - tie_tol:
            ties0 += 1
            if first < 0:
                first = i
            elif second < 0:
                second = i
    if ties0 == 1:
        regime = first
    elif ties0 == 2:
        dec = _pair_decision(A, first, second, ztol)
        if dec == 0:
            regime = first
        elif dec == 1:
            regime = second
        else:
            regime = -1
            slide_i = first
            slide_j = second
    else:
        # Full tie away from any known rest point: nothing to resolve.
        return 0, STATUS_DEGENERATE, -1, 0.0

    events = 0
    while t < horizon:
        if events >= max_events:
            status = STATUS_BUDGET
            break
        events += 1

        for i in range(n):
            s = 0.0
            for jj in range(n):
                s += A[i, jj] * x[jj]
            p[i] = s

        if regime >= 0:
            b = regime
            if record and nseg < cap - 1:
                seg_t[nseg] = t
                for i in range(n):
                    seg_x[nseg, i] = x[i]
                    seg_tgt[nseg, i] = 1.0 if i == b else 0.0
                seg_pair[nseg, 0] = b
                seg_pair[nseg, 1] = -1
                seg_kind[nseg] = SEG_REGULAR
                nseg += 1

            tau = -1.0
            hit = -1
            for j in range(n):
                if j == b:
                    continue
                c = -A[j, b]
                d = (p[b] - p[j]) - c
                r = _exp_root(c, d, ctol)
                if r >= 0.0 and (tau < 0.0 or r < tau):
                    tau = r
                    hit = j
            simultaneous = 0
            if tau >= 0.0:
                for j in range(n):
                    if j == b or j == hit:
                        continue
                    c = -A[j, b]
                    d = (p[b] - p[j]) - c
                    r = _exp_root(c, d, ctol)
                    if r >= 0.0 and r - tau <= 1e-12 * (1.0 + tau):
                        simultaneous += 1

            if tau < 0.0:
                # b stays the best response; the orbit runs into e_b.
                dist = 0.0
                for i in range(n):
                    diff = x[i] - (1.0 if i == b else 0.0)
                    dist += diff * diff
                dist = np.sqrt(dist)
                if dist <= conv_radius:
                    tneed = 0.0
                else:
                    tneed = np.log(dist / conv_radius)
                if t + tneed <= horizon:
                    f = np.exp(-tneed)
                    for i in range(n):
                        tgt = 1.0 if i == b else 0.0
                        x[i] = tgt + f * (x[i] - tgt)
                    t += tneed
                    if eqs.shape[0] > 0:
                        near, dsq = _nearest_sq(eqs, x)
                        if dsq <= conv_sq * 4.0:
                            status = STATUS_CONVERGED
                            label = near
                            break
                    status = STATUS_HORIZON
                    break
                f = np.exp(-(horizon - t))
                for i in range(n):
                    tgt = 1.0 if i == b else 0.0
                    x[i] = tgt + f * (x[i] - tgt)
                t = horizon
                break

            f = np.exp(-tau)
            for i in range(n):
                tgt = 1.0 if i == b else 0.0
                x[i] = tgt + f * (x[i] - tgt)
            t += tau
            if eqs.shape[0] > 0:
                near, dsq = _nearest_sq(eqs, x)
                if dsq <= conv_sq:
                    status = STATUS_CONVERGED
                    label = near
                    break
            if simultaneous > 0:
                # More than two payoffs tied off every known rest point.
                status = STATUS_DEGENERATE
                break
            dec = _pair_decision(A, b, hit, ztol)
            if dec == 1:
                regime = hit
            elif dec == 2:
                regime = -1
                slide_i = b if b < hit else hit
                slide_j = hit if b < hit else b
            # dec == 0 cannot happen after an approach from regime b.

        else:
            si, sj = slide_i, slide_j
            aij = A[si, sj]
            aji = A[sj, si]
            den = aij + aji
            if den == 0.0:
                status = STATUS_DEGENERATE
                break
            lam = aij / den
            if lam < -1e-12 or lam > 1.0 + 1e-12:
                status = STATUS_DEGENERATE
                break
            for i in range(n):
                q[i] = 0.0
            q[si] = lam
            q[sj] = 1.0 - lam
            if record and nseg < cap - 1:
                seg_t[nseg] = t
                for i in range(n):
                    seg_x[nseg, i] = x[i]
                    seg_tgt[nseg, i] = q[i]
                seg_pair[nseg, 0] = si
                seg_pair[nseg, 1] = sj
                seg_kind[nseg] = SEG_SLIDING
                nseg += 1

            for i in range(n):
                s = 0.0
                for jj in range(n):
                    s += A[i, jj] * q[jj]
                aq[i] = s
            tau = -1.0
            for k in range(n):
                if k == si or k == sj:
                    continue
                c = aq[si] - aq[k]
                d = (p[si] - p[k]) - c
                r = _exp_root(c, d, ctol)
                if r >= 0.0 and (tau < 0.0 or r < tau):
                    tau = r
            dist = 0.0
            for i in range(n):
                diff = x[i] - q[i]
                dist += diff * diff
            dist = np.sqrt(dist)
            if dist <= conv_radius:
                tq = 0.0
            else:
                tq = np.log(dist / conv_radius)

            if tau < 0.0 or tq <= tau:
                # The slide reaches the q-ball before any third strategy
                # catches up; q is then a rest point of the inclusion.
                if t + tq <= horizon:
                    f = np.exp(-tq)
                    for i in range(n):
                        x[i] = q[i] + f * (x[i] - q[i])
                    t += tq
                    if eqs.shape[0] > 0:
                        near, dsq = _nearest_sq(eqs, x)
                        if dsq <= conv_sq * 4.0:
                            status = STATUS_CONVERGED
                            label = near
                            break
                    status = STATUS_HORIZON
                    break
                f = np.exp(-(horizon - t))
                for i in range(n):
                    x[i] = q[i] + f * (x[i] - q[i])
                t = horizon
                break

            f = np.exp(-tau)
            for i in range(n):
                x[i] = q[i] + f * (x[i] - q[i])
            t += tau
            # Three-way tie: for n = 3 this is the interior rest point.
            if eqs.shape[0] > 0:
                near, dsq = _nearest_sq(eqs, x)
                if dsq <= conv_sq * 4.0:
                    status = STATUS_CONVERGED
                    label = near
                    break
            status = STATUS_DEGENERATE
            break

    if status != STATUS_CONVERGED and eqs.shape[0] > 0:
        near, dsq = _nearest_sq(eqs, x)
        if dsq <= conv_sq:
            label = near
    if record and nseg < cap:
        seg_t[nseg] = t
        for i in range(n):
            seg_x[nseg, i] = x[i]
            seg_tgt[nseg, i] = x[i]
        seg_pair[nseg, 0] = -1
        seg_pair[nseg, 1] = -1
        seg_kind[nseg] = SEG_TERMINAL
    return nseg, status, label, t


@_jit
def _brd_batch(A, X0, horizon, conv_radius, eqs, tie_tol, ztol, ctol,
               max_events, labels, statuses):
    m, n = X0.shape
    seg_t = np.empty(1)
    seg_x = np.empty((1, n))
    seg_tgt = np.empty((1, n))
    seg_pair = np.empty((1, 2), dtype=np.int32)
    seg_kind = np.empty(1, dtype=np.int32)
    x = np.empty(n)
    for r in range(m):
        for i in range(n):
            x[i] = X0[r, i]
        nseg, st, lb, t = _brd_run(A, x, horizon, conv_radius, eqs, tie_tol,
                                   ztol, ctol, max_events, seg_t, seg_x,
                                   seg_tgt, seg_pair, seg_kind, 0, False)
        labels[r] = lb
        statuses[r] = st
