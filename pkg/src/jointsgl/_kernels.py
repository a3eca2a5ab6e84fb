"""Compiled coordinate-descent kernels.

Layout conventions: design and residual matrices are passed transposed
(features/responses as leading axis) so every dot product runs over a
contiguous row.  Coefficient cells are flattened row-major, cell = j*q+k,
and block membership travels as CSR-style index pairs.  The outcome
model reuses the same structures with q = 1.

The per-coordinate subproblem splits its penalty by how much mass the
containing blocks carry away from the current cell: blocks whose other
cells are all zero act as an extra L1 factor inside the prox, blocks
with off-cell mass contribute a smooth term to the gradient.  Fixed
points of that scheme satisfy the coordinate stationarity equations
exactly, which is what the optimality oracle measures.

Zeroing decisions are made at block level: the sweep kills a block when
the blockwise proximal step lands exactly at zero (backtracked so the
move is a guaranteed descent), and a separate guarded step revives
all-zero blocks that violate the zero-block stationarity test, since
per-coordinate moves alone cannot escape a stuck zero block.
"""
import numpy as np
from numba import njit

BT_SLACK = 1e-12
STEP_FLOOR = 1e-12
REVIVE_MARGIN = 1e-10


@njit(cache=True)
def _soft(z, thr):
    a = abs(z) - thr
    if a <= 0.0:
        return 0.0
    return a if z > 0.0 else -a


# ---------------------------------------------------------------------------
# shared block helpers
# ---------------------------------------------------------------------------


@njit(cache=True)
def _block_sumsq(B, q, g, blk_cell_indptr, blk_cells):
    ssq = 0.0
    for u in range(blk_cell_indptr[g], blk_cell_indptr[g + 1]):
        c = blk_cells[u]
        v = B[c // q, c % q]
        ssq += v * v
    return ssq


@njit(cache=True)
def _penalty_value(B, blk_cell_indptr, blk_cells, lam_feat, lam_block):
    p, q = B.shape
    pen = 0.0
    for j in range(p):
        lf = lam_feat[j]
        if lf != 0.0:
            for k in range(q):
                pen += lf * abs(B[j, k])
    for g in range(lam_block.shape[0]):
        if lam_block[g] != 0.0:
            pen += lam_block[g] * np.sqrt(_block_sumsq(B, q, g, blk_cell_indptr, blk_cells))
    return pen


@njit(cache=True)
def _group_delta(
    B, q, g, blk_cell_indptr, blk_cells, cell_blk_indptr, cell_blk_ids,
    lam_block, scratch_v, mult, touched,
):
    """Exact change of every affected block-norm term if block g moves to
    mult * scratch_v.  ``touched`` is an int workspace of block ids."""
    lo = blk_cell_indptr[g]
    m = blk_cell_indptr[g + 1] - lo
    n_touch = 0
    for u in range(m):
        c = blk_cells[lo + u]
        for v in range(cell_blk_indptr[c], cell_blk_indptr[c + 1]):
            og = cell_blk_ids[v]
            seen = False
            for w in range(n_touch):
                if touched[w] == og:
                    seen = True
                    break
            if not seen:
                touched[n_touch] = og
                n_touch += 1
    dgroup = 0.0
    for w in range(n_touch):
        og = touched[w]
        if lam_block[og] == 0.0:
            continue
        before = 0.0
        after = 0.0
        for v in range(blk_cell_indptr[og], blk_cell_indptr[og + 1]):
            c2 = blk_cells[v]
            val = B[c2 // q, c2 % q]
            before += val * val
            cand = val
            for u in range(m):
                if blk_cells[lo + u] == c2:
                    cand = mult * scratch_v[u]
                    break
            after += cand * cand
        dgroup += lam_block[og] * (np.sqrt(after) - np.sqrt(before))
    return dgroup


# ---------------------------------------------------------------------------
# linear model (shared by the multivariate and single-response fits)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _lin_smooth_loss(beta, S, cn, n, blk_lam, blk_off, n_smooth):
    val = (0.5 * cn * beta * beta - S * beta) / n
    for t in range(n_smooth):
        val += blk_lam[t] * np.sqrt(beta * beta + blk_off[t])
    return val


@njit(cache=True)
def _lin_smooth_grad(beta, S, cn, n, blk_lam, blk_off, n_smooth):
    g = (cn * beta - S) / n
    for t in range(n_smooth):
        g += blk_lam[t] * beta / np.sqrt(beta * beta + blk_off[t])
    return g


@njit(cache=True)
def _lin_solve_coordinate(
    beta0, S, cn, n, thr, lam_zero, blk_lam, blk_off, n_smooth,
    inner_tol, max_inner, step_init, step_shrink,
):
    """1-D accelerated prox descent; returns (best value, iterations, floor hit).

    The committed value is the best iterate by subproblem objective, so a
    coordinate visit can never increase the overall objective.
    """
    theta_old = beta0
    center = beta0
    t = step_init
    best = beta0
    best_f = _lin_smooth_loss(beta0, S, cn, n, blk_lam, blk_off, n_smooth) + (
        thr + lam_zero
    ) * abs(beta0)
    floor_hit = 0
    iters = 0
    for l in range(1, max_inner + 1):
        g = _lin_smooth_grad(center, S, cn, n, blk_lam, blk_off, n_smooth)
        base = _lin_smooth_loss(center, S, cn, n, blk_lam, blk_off, n_smooth)
        u = center
        lhs = base
        while True:
            u = _soft(center - t * g, t * thr)
            if u != 0.0 and lam_zero > 0.0:
                mult = 1.0 - t * lam_zero / abs(u)
                u = mult * u if mult > 0.0 else 0.0
            d = u - center
            lhs = _lin_smooth_loss(u, S, cn, n, blk_lam, blk_off, n_smooth)
            if lhs <= base + g * d + 0.5 * d * d / t + BT_SLACK * (1.0 + abs(base)):
                break
            t_next = t * step_shrink
            if t_next < STEP_FLOOR:
                floor_hit = 1
                break
            t = t_next
        theta_new = u
        iters = l
        f = lhs + (thr + lam_zero) * abs(theta_new)
        if f <= best_f:
            best_f = f
            best = theta_new
        if abs(theta_new - theta_old) < inner_tol:
            break
        center = theta_new + (l / (l + 3.0)) * (theta_new - theta_old)
        theta_old = theta_new
    return best, iters, floor_hit


@njit(cache=True)
def _lin_refresh_residual(XT, YT, B, RT):
    p, n = XT.shape
    q = YT.shape[0]
    for k in range(q):
        for i in range(n):
            RT[k, i] = YT[k, i]
    for j in range(p):
        for k in range(q):
            b = B[j, k]
            if b != 0.0:
                for i in range(n):
                    RT[k, i] -= b * XT[j, i]


@njit(cache=True)
def _linear_objective(RT, B, blk_cell_indptr, blk_cells, lam_feat, lam_block):
    q, n = RT.shape
    quad = 0.0
    for k in range(q):
        for i in range(n):
            quad += RT[k, i] * RT[k, i]
    quad *= 0.5 / n
    return quad + _penalty_value(B, blk_cell_indptr, blk_cells, lam_feat, lam_block)


@njit(cache=True)
def _lin_block_prox(
    XT, RT, B, g, blk_cell_indptr, blk_cells,
    lam_feat, lam_block, step_init, step_shrink, scratch_v, scratch_s, scratch_dr,
):
    """Backtracked blockwise proximal candidate for block g.

    Leaves soft-thresholded values in ``scratch_v`` and plain gradients
    x_j' r_k in ``scratch_s``.  Returns (t, mult), where the candidate is
    mult * scratch_v and t < 0 flags a step-floor failure.  mult == 0
    means the proximal step is the kill decision.
    """
    q = B.shape[1]
    n = XT.shape[1]
    lo = blk_cell_indptr[g]
    m = blk_cell_indptr[g + 1] - lo
    for u in range(m):
        c = blk_cells[lo + u]
        j = c // q
        k = c % q
        s = 0.0
        for i in range(n):
            s += XT[j, i] * RT[k, i]
        scratch_s[u] = s
    t = step_init
    while True:
        vnorm2 = 0.0
        for u in range(m):
            c = blk_cells[lo + u]
            j = c // q
            beta = B[j, c % q]
            grad = -scratch_s[u] / n
            scratch_v[u] = _soft(beta - t * grad, t * lam_feat[j])
            vnorm2 += scratch_v[u] * scratch_v[u]
        vnorm = np.sqrt(vnorm2)
        if vnorm <= t * lam_block[g]:
            mult = 0.0
        else:
            mult = 1.0 - t * lam_block[g] / vnorm
        lin = 0.0
        dd = 0.0
        for u in range(m):
            c = blk_cells[lo + u]
            j = c // q
            beta = B[j, c % q]
            d = mult * scratch_v[u] - beta
            grad = -scratch_s[u] / n
            lin += grad * d
            dd += d * d
        if dd == 0.0:
            return t, mult
        dquad = 0.0
        for k in range(q):
            any_cell = False
            for u in range(m):
                if blk_cells[lo + u] % q == k:
                    any_cell = True
                    break
            if not any_cell:
                continue
            for i in range(n):
                scratch_dr[i] = 0.0
            for u in range(m):
                c = blk_cells[lo + u]
                if c % q == k:
                    j = c // q
                    d = mult * scratch_v[u] - B[j, k]
                    if d != 0.0:
                        for i in range(n):
                            scratch_dr[i] += d * XT[j, i]
            acc = 0.0
            for i in range(n):
                acc += scratch_dr[i] * (scratch_dr[i] - 2.0 * RT[k, i])
            dquad += 0.5 / n * acc
        if dquad <= lin + 0.5 * dd / t + BT_SLACK * (1.0 + abs(dquad)):
            return t, mult
        t_next = t * step_shrink
        if t_next < STEP_FLOOR:
            return -1.0, mult
        t = t_next


@njit(cache=True)
def _lin_apply_block(XT, RT, B, g, blk_cell_indptr, blk_cells, scratch_v, mult):
    q = B.shape[1]
    n = XT.shape[1]
    lo = blk_cell_indptr[g]
    max_d = 0.0
    for u in range(blk_cell_indptr[g + 1] - lo):
        c = blk_cells[lo + u]
        j = c // q
        k = c % q
        new = mult * scratch_v[u]
        d = new - B[j, k]
        if d != 0.0:
            for i in range(n):
                RT[k, i] -= d * XT[j, i]
            B[j, k] = new
            if abs(d) > max_d:
                max_d = abs(d)
    return max_d


@njit(cache=True)
def linear_fit(
    XT, YT, B,
    cell_blk_indptr, cell_blk_ids, blk_cell_indptr, blk_cells,
    lam_feat, lam_block,
    inner_tol, max_inner, outer_tol, max_outer,
    step_init, step_shrink, do_revive,
):
    """Full solver loop; B is updated in place.

    Returns (status, err_j, err_k, outer, converged, inner_total,
    floor_hits, objectives, final_delta); status 1 flags a non-finite
    update at coefficient (err_j, err_k).
    """
    p, n = XT.shape
    q = YT.shape[0]
    G = lam_block.shape[0]
    RT = np.empty((q, n))
    colnorm2 = np.empty(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += XT[j, i] * XT[j, i]
        colnorm2[j] = s

    max_nb = 1
    for c in range(p * q):
        nb = cell_blk_indptr[c + 1] - cell_blk_indptr[c]
        if nb > max_nb:
            max_nb = nb
    blk_lam = np.empty(max_nb)
    blk_off = np.empty(max_nb)
    max_cells = 1
    for g in range(G):
        m = blk_cell_indptr[g + 1] - blk_cell_indptr[g]
        if m > max_cells:
            max_cells = m
    scratch_v = np.empty(max_cells)
    scratch_s = np.empty(max_cells)
    scratch_dr = np.empty(n)
    touched = np.zeros(max(G, 1), dtype=np.int64)

    objectives = np.empty(max_outer)
    inner_total = 0
    floor_hits = 0
    outer_done = 0
    converged = False
    final_delta = np.inf
    for outer in range(max_outer):
        _lin_refresh_residual(XT, YT, B, RT)
        max_delta = 0.0
        for j in range(p):
            cn = colnorm2[j]
            for k in range(q):
                cell = j * q + k
                beta0 = B[j, k]
                s = 0.0
                for i in range(n):
                    s += XT[j, i] * RT[k, i]
                S = s + cn * beta0
                lam_zero = 0.0
                n_smooth = 0
                for u in range(cell_blk_indptr[cell], cell_blk_indptr[cell + 1]):
                    g = cell_blk_ids[u]
                    if lam_block[g] == 0.0:
                        continue
                    offsq = 0.0
                    for v in range(blk_cell_indptr[g], blk_cell_indptr[g + 1]):
                        c2 = blk_cells[v]
                        if c2 != cell:
                            val = B[c2 // q, c2 % q]
                            offsq += val * val
                    if offsq > 0.0:
                        blk_lam[n_smooth] = lam_block[g]
                        blk_off[n_smooth] = offsq
                        n_smooth += 1
                    else:
                        lam_zero += lam_block[g]
                new_beta, iters, hit = _lin_solve_coordinate(
                    beta0, S, cn, n, lam_feat[j], lam_zero, blk_lam, blk_off, n_smooth,
                    inner_tol, max_inner, step_init, step_shrink,
                )
                inner_total += iters
                floor_hits += hit
                if not np.isfinite(new_beta):
                    return 1, j, k, outer_done, False, inner_total, floor_hits, objectives, np.inf
                if new_beta != beta0:
                    d = new_beta - beta0
                    for i in range(n):
                        RT[k, i] -= d * XT[j, i]
                    B[j, k] = new_beta
                    if abs(d) > max_delta:
                        max_delta = abs(d)

        # block sweep: kill whole blocks whose proximal step lands at zero
        for g in range(G):
            if lam_block[g] == 0.0:
                continue
            if _block_sumsq(B, q, g, blk_cell_indptr, blk_cells) == 0.0:
                continue
            t, mult = _lin_block_prox(
                XT, RT, B, g, blk_cell_indptr, blk_cells,
                lam_feat, lam_block, step_init, step_shrink,
                scratch_v, scratch_s, scratch_dr,
            )
            if t < 0.0:
                floor_hits += 1
                continue
            if mult == 0.0:
                d = _lin_apply_block(XT, RT, B, g, blk_cell_indptr, blk_cells, scratch_v, 0.0)
                if d > max_delta:
                    max_delta = d

        if do_revive:
            for g in range(G):
                if lam_block[g] == 0.0:
                    continue
                if _block_sumsq(B, q, g, blk_cell_indptr, blk_cells) != 0.0:
                    continue
                lo = blk_cell_indptr[g]
                m = blk_cell_indptr[g + 1] - lo
                nu2 = 0.0
                for u in range(m):
                    c = blk_cells[lo + u]
                    j = c // q
                    k = c % q
                    s = 0.0
                    for i in range(n):
                        s += XT[j, i] * RT[k, i]
                    slack = abs(s) / n - lam_feat[j]
                    if slack > 0.0:
                        nu2 += slack * slack
                if np.sqrt(nu2) <= lam_block[g] * (1.0 + REVIVE_MARGIN):
                    continue
                t, mult = _lin_block_prox(
                    XT, RT, B, g, blk_cell_indptr, blk_cells,
                    lam_feat, lam_block, step_init, step_shrink,
                    scratch_v, scratch_s, scratch_dr,
                )
                if t < 0.0:
                    floor_hits += 1
                    continue
                if mult == 0.0:
                    continue
                dquad = 0.0
                for k in range(q):
                    any_cell = False
                    for u in range(m):
                        if blk_cells[lo + u] % q == k:
                            any_cell = True
                            break
                    if not any_cell:
                        continue
                    for i in range(n):
                        scratch_dr[i] = 0.0
                    for u in range(m):
                        c = blk_cells[lo + u]
                        if c % q == k:
                            d = mult * scratch_v[u]
                            if d != 0.0:
                                for i in range(n):
                                    scratch_dr[i] += d * XT[c // q, i]
                    acc = 0.0
                    for i in range(n):
                        acc += scratch_dr[i] * (scratch_dr[i] - 2.0 * RT[k, i])
                    dquad += 0.5 / n * acc
                dl1 = 0.0
                for u in range(m):
                    c = blk_cells[lo + u]
                    dl1 += lam_feat[c // q] * abs(mult * scratch_v[u])
                dgroup = _group_delta(
                    B, q, g, blk_cell_indptr, blk_cells, cell_blk_indptr, cell_blk_ids,
                    lam_block, scratch_v, mult, touched,
                )
                if dquad + dl1 + dgroup <= 0.0:
                    d = _lin_apply_block(XT, RT, B, g, blk_cell_indptr, blk_cells, scratch_v, mult)
                    if d > max_delta:
                        max_delta = d

        objectives[outer] = _linear_objective(
            RT, B, blk_cell_indptr, blk_cells, lam_feat, lam_block
        )
        outer_done = outer + 1
        final_delta = max_delta
        if not np.isfinite(objectives[outer]):
            return 1, -1, -1, outer_done, False, inner_total, floor_hits, objectives, final_delta
        if max_delta < outer_tol:
            converged = True
            break
    return 0, -1, -1, outer_done, converged, inner_total, floor_hits, objectives, final_delta


# ---------------------------------------------------------------------------
# Cox model
# ---------------------------------------------------------------------------


@njit(cache=True)
def _cox_eval(eta, xj, delta, event, tie_first, suffA, suffAj, suffM, want_grad, n_total):
    """Averaged negative log partial likelihood and (optionally) its
    derivative in the coefficient of feature column ``xj``.

    Subjects arrive sorted by ascending time; the risk set of the event
    at position s starts at tie_first[s].  Running-max rescaling keeps
    every exponential in range regardless of the linear predictor scale.
    """
    n = eta.shape[0]
    M = -np.inf
    A = 0.0
    Aj = 0.0
    for s in range(n - 1, -1, -1):
        e = eta[s] + xj[s] * delta
        if e > M:
            sc = np.exp(M - e)
            A *= sc
            Aj *= sc
            M = e
        w = np.exp(e - M)
        A += w
        if want_grad:
            Aj += xj[s] * w
        suffA[s] = A
        suffAj[s] = Aj
        suffM[s] = M
    loss = 0.0
    gradj = 0.0
    for s in range(n):
        if event[s] == 1:
            rs = tie_first[s]
            loss += np.log(suffA[rs]) + suffM[rs] - (eta[s] + xj[s] * delta)
            if want_grad:
                gradj += suffAj[rs] / suffA[rs] - xj[s]
    return loss / n_total, gradj / n_total


@njit(cache=True)
def _cox_solve_coordinate(
    eta, xj, gamma0, event, tie_first, suffA, suffAj, suffM, n_total,
    thr, lam_zero, blk_lam, blk_off, n_smooth,
    inner_tol, max_inner, step_init, step_shrink,
):
    theta_old = gamma0
    center = gamma0
    t = step_init
    loss0, _ = _cox_eval(eta, xj, 0.0, event, tie_first, suffA, suffAj, suffM, False, n_total)
    best = gamma0
    best_f = loss0
    for u_ in range(n_smooth):
        best_f += blk_lam[u_] * np.sqrt(gamma0 * gamma0 + blk_off[u_])
    best_f += (thr + lam_zero) * abs(gamma0)
    floor_hit = 0
    iters = 0
    for l in range(1, max_inner + 1):
        base, g = _cox_eval(
            eta, xj, center - gamma0, event, tie_first, suffA, suffAj, suffM, True, n_total
        )
        for u_ in range(n_smooth):
            base += blk_lam[u_] * np.sqrt(center * center + blk_off[u_])
            g += blk_lam[u_] * center / np.sqrt(center * center + blk_off[u_])
        u = center
        lhs = base
        while True:
            u = _soft(center - t * g, t * thr)
            if u != 0.0 and lam_zero > 0.0:
                mult = 1.0 - t * lam_zero / abs(u)
                u = mult * u if mult > 0.0 else 0.0
            d = u - center
            lhs, _ = _cox_eval(
                eta, xj, u - gamma0, event, tie_first, suffA, suffAj, suffM, False, n_total
            )
            for u_ in range(n_smooth):
                lhs += blk_lam[u_] * np.sqrt(u * u + blk_off[u_])
            if lhs <= base + g * d + 0.5 * d * d / t + BT_SLACK * (1.0 + abs(base)):
                break
            t_next = t * step_shrink
            if t_next < STEP_FLOOR:
                floor_hit = 1
                break
            t = t_next
        theta_new = u
        iters = l
        f = lhs + (thr + lam_zero) * abs(theta_new)
        if f <= best_f:
            best_f = f
            best = theta_new
        if abs(theta_new - theta_old) < inner_tol:
            break
        center = theta_new + (l / (l + 3.0)) * (theta_new - theta_old)
        theta_old = theta_new
    return best, iters, floor_hit


@njit(cache=True)
def _cox_loss_at(eta_cand, event, tie_first, suffA, suffM, n_total):
    n = eta_cand.shape[0]
    M = -np.inf
    A = 0.0
    for s in range(n - 1, -1, -1):
        e = eta_cand[s]
        if e > M:
            A *= np.exp(M - e)
            M = e
        A += np.exp(e - M)
        suffA[s] = A
        suffM[s] = M
    loss = 0.0
    for s in range(n):
        if event[s] == 1:
            rs = tie_first[s]
            loss += np.log(suffA[rs]) + suffM[rs] - eta_cand[s]
    return loss / n_total


@njit(cache=True)
def _cox_block_prox(
    XT, eta, gamma, grad, g, blk_cell_indptr, blk_cells,
    lam_feat, lam_block, step_init, step_shrink,
    event, tie_first, suffA, suffM, n_total, scratch_v, scratch_eta,
):
    """Backtracked blockwise proximal candidate for feature group g."""
    n = eta.shape[0]
    lo = blk_cell_indptr[g]
    m = blk_cell_indptr[g + 1] - lo
    base = _cox_loss_at(eta, event, tie_first, suffA, suffM, n_total)
    t = step_init
    while True:
        vnorm2 = 0.0
        for u in range(m):
            j = blk_cells[lo + u]
            scratch_v[u] = _soft(gamma[j] - t * grad[j], t * lam_feat[j])
            vnorm2 += scratch_v[u] * scratch_v[u]
        vnorm = np.sqrt(vnorm2)
        if vnorm <= t * lam_block[g]:
            mult = 0.0
        else:
            mult = 1.0 - t * lam_block[g] / vnorm
        lin = 0.0
        dd = 0.0
        for u in range(m):
            j = blk_cells[lo + u]
            d = mult * scratch_v[u] - gamma[j]
            lin += grad[j] * d
            dd += d * d
        if dd == 0.0:
            return t, mult
        for i in range(n):
            scratch_eta[i] = eta[i]
        for u in range(m):
            j = blk_cells[lo + u]
            d = mult * scratch_v[u] - gamma[j]
            if d != 0.0:
                for i in range(n):
                    scratch_eta[i] += d * XT[j, i]
        cand = _cox_loss_at(scratch_eta, event, tie_first, suffA, suffM, n_total)
        if cand <= base + lin + 0.5 * dd / t + BT_SLACK * (1.0 + abs(base)):
            return t, mult
        t_next = t * step_shrink
        if t_next < STEP_FLOOR:
            return -1.0, mult
        t = t_next


@njit(cache=True)
def cox_fit(
    XT, event, tie_first, gamma,
    cell_blk_indptr, cell_blk_ids, blk_cell_indptr, blk_cells,
    lam_feat, lam_block,
    inner_tol, max_inner, outer_tol, max_outer,
    step_init, step_shrink, do_revive,
):
    """Coordinate descent on the penalized partial likelihood.

    Subjects must already be sorted by ascending time; gamma is updated
    in place.  Returns the same tuple layout as :func:`linear_fit` with
    err_k fixed at 0.
    """
    p, n = XT.shape
    G = lam_block.shape[0]
    eta = np.zeros(n)
    suffA = np.empty(n)
    suffAj = np.empty(n)
    suffM = np.empty(n)
    scratch_eta = np.empty(n)
    grad_full = np.empty(p)
    n_total = float(n)

    max_nb = 1
    for c in range(p):
        nb = cell_blk_indptr[c + 1] - cell_blk_indptr[c]
        if nb > max_nb:
            max_nb = nb
    blk_lam = np.empty(max_nb)
    blk_off = np.empty(max_nb)
    max_cells = 1
    for g in range(G):
        m = blk_cell_indptr[g + 1] - blk_cell_indptr[g]
        if m > max_cells:
            max_cells = m
    scratch_v = np.empty(max_cells)
    touched = np.zeros(max(G, 1), dtype=np.int64)
    gamma2d = gamma.reshape((p, 1))

    objectives = np.empty(max_outer)
    inner_total = 0
    floor_hits = 0
    outer_done = 0
    converged = False
    final_delta = np.inf
    for outer in range(max_outer):
        for i in range(n):
            acc = 0.0
            for j in range(p):
                if gamma[j] != 0.0:
                    acc += gamma[j] * XT[j, i]
            eta[i] = acc
        max_delta = 0.0
        for j in range(p):
            gamma0 = gamma[j]
            lam_zero = 0.0
            n_smooth = 0
            for u in range(cell_blk_indptr[j], cell_blk_indptr[j + 1]):
                g = cell_blk_ids[u]
                if lam_block[g] == 0.0:
                    continue
                offsq = 0.0
                for v in range(blk_cell_indptr[g], blk_cell_indptr[g + 1]):
                    j2 = blk_cells[v]
                    if j2 != j:
                        offsq += gamma[j2] * gamma[j2]
                if offsq > 0.0:
                    blk_lam[n_smooth] = lam_block[g]
                    blk_off[n_smooth] = offsq
                    n_smooth += 1
                else:
                    lam_zero += lam_block[g]
            new_gamma, iters, hit = _cox_solve_coordinate(
                eta, XT[j], gamma0, event, tie_first, suffA, suffAj, suffM, n_total,
                lam_feat[j], lam_zero, blk_lam, blk_off, n_smooth,
                inner_tol, max_inner, step_init, step_shrink,
            )
            inner_total += iters
            floor_hits += hit
            if not np.isfinite(new_gamma):
                return 1, j, 0, outer_done, False, inner_total, floor_hits, objectives, np.inf
            if new_gamma != gamma0:
                d = new_gamma - gamma0
                for i in range(n):
                    eta[i] += d * XT[j, i]
                gamma[j] = new_gamma
                if abs(d) > max_delta:
                    max_delta = abs(d)

        if G > 0:
            for j in range(p):
                _, gj = _cox_eval(
                    eta, XT[j], 0.0, event, tie_first, suffA, suffAj, suffM, True, n_total
                )
                grad_full[j] = gj

        for g in range(G):
            if lam_block[g] == 0.0:
                continue
            if _block_sumsq(gamma2d, 1, g, blk_cell_indptr, blk_cells) == 0.0:
                continue
            t, mult = _cox_block_prox(
                XT, eta, gamma, grad_full, g, blk_cell_indptr, blk_cells,
                lam_feat, lam_block, step_init, step_shrink,
                event, tie_first, suffA, suffM, n_total, scratch_v, scratch_eta,
            )
            if t < 0.0:
                floor_hits += 1
                continue
            if mult == 0.0:
                lo = blk_cell_indptr[g]
                for u in range(blk_cell_indptr[g + 1] - lo):
                    j = blk_cells[lo + u]
                    d = -gamma[j]
                    if d != 0.0:
                        for i in range(n):
                            eta[i] += d * XT[j, i]
                        gamma[j] = 0.0
                        if abs(d) > max_delta:
                            max_delta = abs(d)

        if do_revive and G > 0:
            base_loss = -1.0
            for g in range(G):
                if lam_block[g] == 0.0:
                    continue
                if _block_sumsq(gamma2d, 1, g, blk_cell_indptr, blk_cells) != 0.0:
                    continue
                lo = blk_cell_indptr[g]
                m = blk_cell_indptr[g + 1] - lo
                nu2 = 0.0
                for u in range(m):
                    j = blk_cells[lo + u]
                    slack = abs(grad_full[j]) - lam_feat[j]
                    if slack > 0.0:
                        nu2 += slack * slack
                if np.sqrt(nu2) <= lam_block[g] * (1.0 + REVIVE_MARGIN):
                    continue
                t, mult = _cox_block_prox(
                    XT, eta, gamma, grad_full, g, blk_cell_indptr, blk_cells,
                    lam_feat, lam_block, step_init, step_shrink,
                    event, tie_first, suffA, suffM, n_total, scratch_v, scratch_eta,
                )
                if t < 0.0:
                    floor_hits += 1
                    continue
                if mult == 0.0:
                    continue
                if base_loss < 0.0:
                    base_loss = _cox_loss_at(eta, event, tie_first, suffA, suffM, n_total)
                for i in range(n):
                    scratch_eta[i] = eta[i]
                for u in range(m):
                    j = blk_cells[lo + u]
                    d = mult * scratch_v[u] - gamma[j]
                    if d != 0.0:
                        for i in range(n):
                            scratch_eta[i] += d * XT[j, i]
                dloss = (
                    _cox_loss_at(scratch_eta, event, tie_first, suffA, suffM, n_total) - base_loss
                )
                dl1 = 0.0
                for u in range(m):
                    j = blk_cells[lo + u]
                    dl1 += lam_feat[j] * abs(mult * scratch_v[u])
                dgroup = _group_delta(
                    gamma2d, 1, g, blk_cell_indptr, blk_cells, cell_blk_indptr, cell_blk_ids,
                    lam_block, scratch_v, mult, touched,
                )
                if dloss + dl1 + dgroup <= 0.0:
                    cd = 0.0
                    for u in range(m):
                        j = blk_cells[lo + u]
                        d = mult * scratch_v[u] - gamma[j]
                        if d != 0.0:
                            for i in range(n):
                                eta[i] += d * XT[j, i]
                            gamma[j] = mult * scratch_v[u]
                            if abs(d) > cd:
                                cd = abs(d)
                    if cd > max_delta:
                        max_delta = cd
                    base_loss = -1.0

        objectives[outer] = _cox_loss_at(
            eta, event, tie_first, suffA, suffM, n_total
        ) + _penalty_value(gamma2d, blk_cell_indptr, blk_cells, lam_feat, lam_block)
        outer_done = outer + 1
        final_delta = max_delta
        if not np.isfinite(objectives[outer]):
            return 1, -1, 0, outer_done, False, inner_total, floor_hits, objectives, final_delta
        if max_delta < outer_tol:
            converged = True
            break
    return 0, -1, 0, outer_done, converged, inner_total, floor_hits, objectives, final_delta
