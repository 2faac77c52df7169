"""Compiled inner loops.

All comparisons against frequency thresholds are done in integer grid
arithmetic.  With ``mu = 2nm/(n-2)`` a grid index ``k`` satisfies

* ``p < 1 - 3/n``  iff  ``k*(n-2) < 2m*(n-4)``
* ``p <= 1/4``     iff  ``8m + 4k*(n-2) <= 2nm``

Random draws go through the numpy Generator passed in, so a kernel and the
pure-Python step consume the same stream in the same order.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def fitness(x, n, fid):
    if fid == 0:
        f = 0
        while f < n and x[f] == 1:
            f += 1
        return f
    f = 0
    for i in range(n):
        f += x[i]
    return f


@njit(cache=True)
def _fill_probs(p, k, n, mu):
    for i in range(n):
        p[i] = 1.0 / n + k[i] / mu


@njit(cache=True)
def _sample_into(rng, x, p, n):
    for i in range(n):
        x[i] = 1 if rng.random() < p[i] else 0


@njit(cache=True)
def _is_low(kv, n, m):
    return kv * (n - 2) < 2 * m * (n - 4)


@njit(cache=True)
def _critical(k, n, m):
    for i in range(n):
        if _is_low(k[i], n, m):
            return i + 1
    return 0


@njit(cache=True)
def _prefix_at(k, n, upper):
    j = 0
    while j < n and k[j] == upper:
        j += 1
    return j


@njit(cache=True)
def cga_run(rng, n, m, fid, budget, trace_every, max_records):
    """Run the cGA until an optimum is sampled or ``budget`` evaluations.

    Observables are tracked on every state the algorithm samples from.
    """
    upper = 2 * m
    mu = 2.0 * n * m / (n - 2)
    k = np.full(n, m, np.int64)
    p = np.empty(n)
    x1 = np.empty(n, np.int64)
    x2 = np.empty(n, np.int64)

    reached = np.zeros(n, np.bool_)
    dropped = np.zeros(n, np.bool_)
    low_count = 0
    for i in range(n):
        if _is_low(k[i], n, m):
            low_count += 1
    departed = 0
    n_dropped = 0
    below_quarter = False
    first_high = -1
    maintained = True
    dep_iters = 0
    run_max = 0
    ev_iter = np.full(n + 1, -1, np.int64)
    ev_val = np.full(n + 1, -1, np.int64)
    ev_iter[0] = 0
    ev_val[0] = 0
    n_ev = 1

    tr_iter = np.empty(max_records, np.int64)
    tr_crit = np.empty(max_records, np.int64)
    tr_mink = np.empty(max_records, np.int64)
    tr_prefix = np.empty(max_records, np.int64)
    tr_opt = np.empty(max_records)
    n_tr = 0

    t = 0
    evals = 0
    hit = -1
    while evals < budget:
        # observables of the state sampled in iteration t
        if low_count == 0:
            if first_high < 0:
                first_high = t
        elif first_high >= 0:
            maintained = False
        if departed > 0:
            dep_iters += 1
        pre = _prefix_at(k, n, upper)
        if pre > run_max:
            run_max = pre
            ev_iter[n_ev] = t
            ev_val[n_ev] = pre
            n_ev += 1
        _fill_probs(p, k, n, mu)
        if t % trace_every == 0 and n_tr < max_records - 1:
            tr_iter[n_tr] = t
            tr_crit[n_tr] = _critical(k, n, m)
            tr_mink[n_tr] = k.min()
            tr_prefix[n_tr] = pre
            prod = 1.0
            for i in range(n):
                prod *= p[i]
            tr_opt[n_tr] = prod
            n_tr += 1

        _sample_into(rng, x1, p, n)
        _sample_into(rng, x2, p, n)
        f1 = fitness(x1, n, fid)
        f2 = fitness(x2, n, fid)
        if f1 == n:
            hit = 2 * t + 1
        elif f2 == n:
            hit = 2 * t + 2
        sign = 1
        if f1 < f2:
            sign = -1
        for i in range(n):
            d = (x1[i] - x2[i]) * sign
            if d == 0:
                continue
            kn = k[i] + d
            if kn < 0 or kn > upper:
                continue
            was_low = _is_low(k[i], n, m)
            k[i] = kn
            now_low = _is_low(kn, n, m)
            if was_low and not now_low:
                low_count -= 1
            elif now_low and not was_low:
                low_count += 1
            if kn == upper:
                if not reached[i]:
                    reached[i] = True
                else:
                    departed -= 1
            elif d < 0:
                if reached[i] and kn == upper - 1:
                    departed += 1
                if now_low and reached[i] and not dropped[i]:
                    dropped[i] = True
                    n_dropped += 1
                if 8 * m + 4 * kn * (n - 2) <= 2 * n * m:
                    below_quarter = True
        t += 1
        evals += 2
        if hit >= 0:
            break

    if hit > budget:
        hit = -1
    # final state, always recorded
    if n_tr == 0 or tr_iter[n_tr - 1] != t:
        _fill_probs(p, k, n, mu)
        tr_iter[n_tr] = t
        tr_crit[n_tr] = _critical(k, n, m)
        tr_mink[n_tr] = k.min()
        tr_prefix[n_tr] = _prefix_at(k, n, upper)
        prod = 1.0
        for i in range(n):
            prod *= p[i]
        tr_opt[n_tr] = prod
        n_tr += 1

    return (hit, t, k, first_high, maintained, below_quarter, dep_iters, n_dropped,
            ev_iter[:n_ev], ev_val[:n_ev],
            tr_iter[:n_tr], tr_crit[:n_tr], tr_mink[:n_tr], tr_prefix[:n_tr], tr_opt[:n_tr])


@njit(cache=True)
def cga_delta_counts(rng, k0, n, m, fid, steps):
    """Histogram of clamped delta vectors over ``steps`` single steps from ``k0``.

    A delta vector is encoded as ``sum((d_i + 1) * 3**i)``.
    """
    upper = 2 * m
    mu = 2.0 * n * m / (n - 2)
    p = np.empty(n)
    _fill_probs(p, k0, n, mu)
    x1 = np.empty(n, np.int64)
    x2 = np.empty(n, np.int64)
    counts = np.zeros(3 ** n, np.int64)
    for _ in range(steps):
        _sample_into(rng, x1, p, n)
        _sample_into(rng, x2, p, n)
        sign = 1
        if fitness(x1, n, fid) < fitness(x2, n, fid):
            sign = -1
        code = 0
        w = 1
        for i in range(n):
            d = (x1[i] - x2[i]) * sign
            kn = k0[i] + d
            if kn < 0 or kn > upper:
                d = 0
            code += (d + 1) * w
            w *= 3
        counts[code] += 1
    return counts


@njit(cache=True)
def cga_min_at(rng, n, m, fid, iterations, pos):
    """Run ``iterations`` cGA steps (no stopping) and return the minimum grid
    index observed at position ``pos`` (0-based), initial state included."""
    upper = 2 * m
    mu = 2.0 * n * m / (n - 2)
    k = np.full(n, m, np.int64)
    p = np.empty(n)
    x1 = np.empty(n, np.int64)
    x2 = np.empty(n, np.int64)
    lowest = k[pos]
    for _ in range(iterations):
        _fill_probs(p, k, n, mu)
        _sample_into(rng, x1, p, n)
        _sample_into(rng, x2, p, n)
        sign = 1
        if fitness(x1, n, fid) < fitness(x2, n, fid):
            sign = -1
        for i in range(n):
            kn = k[i] + (x1[i] - x2[i]) * sign
            if 0 <= kn <= upper:
                k[i] = kn
        if k[pos] < lowest:
            lowest = k[pos]
    return lowest


@njit(cache=True)
def _umda_at_upper(c, n, mu_sel):
    return c * n >= mu_sel * (n - 1)


@njit(cache=True)
def umda_probs(p, c, n, mu_sel):
    lo = 1.0 / n
    hi = (n - 1.0) / n
    for i in range(n):
        if c[i] * n <= mu_sel:
            p[i] = lo
        elif _umda_at_upper(c[i], n, mu_sel):
            p[i] = hi
        else:
            p[i] = c[i] / mu_sel


@njit(cache=True)
def umda_select_counts(X, fit, mu_sel, c):
    """Counts of ones among the ``mu_sel`` best rows of ``X``.

    Rows are ordered by fitness descending; ties keep sample order.
    """
    order = np.argsort(-fit, kind="mergesort")
    n = X.shape[1]
    for i in range(n):
        c[i] = 0
    for r in range(mu_sel):
        row = order[r]
        for i in range(n):
            c[i] += X[row, i]


@njit(cache=True)
def umda_run(rng, n, lam, mu_sel, fid, budget, trace_every, max_records):
    """UMDA run loop.

    After the first update the model is the count vector ``c`` with frequency
    ``clamp(c/mu_sel)``; before it every frequency is exactly 1/2.
    """
    c = np.zeros(n, np.int64)
    p = np.full(n, 0.5)
    X = np.empty((lam, n), np.int64)
    fit = np.empty(lam, np.int64)
    reached = np.zeros(n, np.bool_)
    at_up = np.zeros(n, np.bool_)
    below_quarter = False
    dep_iters = 0

    tr_iter = np.empty(max_records, np.int64)
    tr_crit = np.empty(max_records, np.int64)
    tr_minp = np.empty(max_records)
    tr_prefix = np.empty(max_records, np.int64)
    tr_opt = np.empty(max_records)
    n_tr = 0

    t = 0
    evals = 0
    hit = -1
    while evals < budget:
        if t > 0:
            departed = False
            for i in range(n):
                up = _umda_at_upper(c[i], n, mu_sel)
                if up:
                    reached[i] = True
                elif reached[i]:
                    departed = True
                at_up[i] = up
                if n >= 4 and 4 * c[i] <= mu_sel:
                    below_quarter = True
            if departed:
                dep_iters += 1
        if t % trace_every == 0 and n_tr < max_records - 1:
            _umda_record(tr_iter, tr_crit, tr_minp, tr_prefix, tr_opt, n_tr, t, p, at_up, n)
            n_tr += 1
        for r in range(lam):
            for i in range(n):
                X[r, i] = 1 if rng.random() < p[i] else 0
            fit[r] = fitness(X[r], n, fid)
            if hit < 0 and fit[r] == n:
                hit = t * lam + r + 1
        umda_select_counts(X, fit, mu_sel, c)
        umda_probs(p, c, n, mu_sel)
        t += 1
        evals += lam
        if hit >= 0:
            break

    if hit > budget:
        hit = -1
    if n_tr == 0 or tr_iter[n_tr - 1] != t:
        if t > 0:
            for i in range(n):
                at_up[i] = _umda_at_upper(c[i], n, mu_sel)
        _umda_record(tr_iter, tr_crit, tr_minp, tr_prefix, tr_opt, n_tr, t, p, at_up, n)
        n_tr += 1
    return (hit, t, c, below_quarter, dep_iters,
            tr_iter[:n_tr], tr_crit[:n_tr], tr_minp[:n_tr], tr_prefix[:n_tr], tr_opt[:n_tr])


@njit(cache=True)
def _umda_record(tr_iter, tr_crit, tr_minp, tr_prefix, tr_opt, j, t, p, at_up, n):
    # diagnostic only, plain float comparison
    crit = 0
    for i in range(n):
        if p[i] < 1.0 - 3.0 / n:
            crit = i + 1
            break
    tr_crit[j] = crit
    pre = 0
    while pre < n and at_up[pre]:
        pre += 1
    prod = 1.0
    for i in range(n):
        prod *= p[i]
    tr_iter[j] = t
    tr_minp[j] = p.min()
    tr_prefix[j] = pre
    tr_opt[j] = prod
