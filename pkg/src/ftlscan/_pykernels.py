"""Pure numpy implementations of the compiled kernels.

Same signatures and same random-stream consumption as ``_ckernels``.
Sequential loops are replaced by block-wise ``cumsum`` scans; ``np.cumsum``
adds left to right, so the partial sums equal the compiled running sums bit
for bit.
"""

from __future__ import annotations

import math

import numpy as np

FTL, FIXED, STRATEGY_B = 0, 1, 2
STOPPED, HORIZON = 0, 1
BRIDGE_CUT = 36.0

_MIN_BLOCK = 512
_MAX_BLOCK = 1 << 16


def _stage_rhs(n, b, mu, p0, y, B):
    K = (n - 1) + b * math.exp(-mu * y)
    c = 1.0 - p0 * (1.0 + K)
    num = ((n - 1) * mu * B + 2.0 * n * (K - 1.0) / mu
           - 2.0 * (1.0 - 2.0 * p0) * (K - n + 1.0) * (K + 1.0) / (mu * K))
    return num / c


def integrate_stage(n, b, mu, eps, y_lo, y_hi, B0, m):
    p0 = 1.0 - eps
    h = (y_hi - y_lo) / m
    hh = 0.5 * h
    ys = np.empty(m + 1)
    Bs = np.empty(m + 1)
    ys[0] = y_lo
    Bs[0] = B = B0
    for i in range(m):
        y = y_lo + i * h
        k1 = _stage_rhs(n, b, mu, p0, y, B)
        k2 = _stage_rhs(n, b, mu, p0, y + hh, B + hh * k1)
        k3 = _stage_rhs(n, b, mu, p0, y + hh, B + hh * k2)
        k4 = _stage_rhs(n, b, mu, p0, y + h, B + h * k3)
        B = B + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[i + 1] = y_lo + (i + 1) * h
        Bs[i + 1] = B
    ys[m] = y_hi
    return ys, Bs


class _NormalStream:
    """Buffered standard normals; block draws equal repeated scalar draws.

    With ``group > 1`` each item is the left-to-right sum of ``group``
    consecutive normals.
    """

    def __init__(self, gen, group=1):
        self.gen = gen
        self.group = group
        self.buf = np.empty(0)
        self.pos = 0
        self.block = _MIN_BLOCK

    def take(self, limit):
        if self.pos == self.buf.size:
            raw = self.gen.standard_normal(self.block * self.group).reshape(self.block, self.group)
            self.buf = raw[:, 0].copy()
            for k in range(1, self.group):
                self.buf += raw[:, k]
            self.pos = 0
            self.block = min(2 * self.block, _MAX_BLOCK)
        k = min(self.buf.size - self.pos, limit)
        out = self.buf[self.pos:self.pos + k]
        return out

    def consume(self, k):
        self.pos += k


def _ftl_index(x):
    best = 0
    for i in range(1, len(x)):
        if x[i] >= x[best]:
            best = i
    return best


def _stop_levels(x, J, mu, log_odds, inv_odds):
    N = len(x)
    mo = -math.inf
    k = -1
    for i in range(N):
        if i != J and x[i] >= mo:
            mo = x[i]
            k = i
    s = 0.0
    rest = 0.0
    for i in range(N):
        if i != J:
            s += math.exp(mu * (x[i] - mo))
            if i != k:
                rest += math.exp(mu * (x[i] - mo))
    up = mo + (math.log(s) + log_odds) / mu
    bracket = inv_odds - rest
    lo = mo + math.log(bracket) / mu if bracket > 0.0 else -math.inf
    return up, lo


def run_search(gen, x, mu, eps, dt, policy, target, switch_level, max_steps, substeps=1):
    if substeps < 1:
        raise ValueError("substeps must be positive")
    N = len(x)
    p0 = 1.0 - eps
    log_odds = math.log(p0 / (1.0 - p0))
    inv_odds = (1.0 - p0) / p0
    sdt = math.sqrt(dt / substeps)
    xs = [float(v) for v in x]

    mmax = xs[0]
    for i in range(1, N):
        if xs[i] > mmax:
            mmax = xs[i]
    wsum = 0.0
    for i in range(N):
        wsum += math.exp(mu * (xs[i] - mmax))
    u = gen.random()
    acc = 0.0
    jstar = N - 1
    for i in range(N):
        acc += math.exp(mu * (xs[i] - mmax)) / wsum
        if u < acc:
            jstar = i
            break

    normals = _NormalStream(gen, substeps)
    n = 0
    phase = 0
    status = -1
    while status < 0:
        if policy == FIXED or (policy == STRATEGY_B and phase == 0):
            J = target
        else:
            J = _ftl_index(xs)
        up, lo = _stop_levels(xs, J, mu, log_odds, inv_odds)
        xj = xs[J]
        if n == 0 and (xj >= up or xj <= lo):
            status = STOPPED
            break
        sw_lt = sw_le = -math.inf
        sw_ge = math.inf
        if policy == FTL or (policy == STRATEGY_B and phase == 1):
            sw_lt = max(xs[:J], default=-math.inf)
            sw_le = max(xs[J + 1:], default=-math.inf)
        elif policy == STRATEGY_B:
            sw_ge = switch_level
        d = dt * ((mu if J == jstar else 0.0) - 0.5 * mu)
        while True:
            if n >= max_steps:
                status = HORIZON
                break
            z = normals.take(max_steps - n)
            path = np.cumsum(np.concatenate(([xj], sdt * z + d)))[1:]
            stop = (path >= up) | (path <= lo)
            switch = (path < sw_lt) | (path <= sw_le) | (path >= sw_ge)
            event = stop | switch
            if event.any():
                i = int(np.argmax(event))
                normals.consume(i + 1)
                n += i + 1
                xj = float(path[i])
                if stop[i]:
                    status = STOPPED
                elif policy == STRATEGY_B:
                    phase = 1
                break
            normals.consume(z.size)
            n += z.size
            xj = float(path[-1])
        xs[J] = xj
    x[:] = xs
    return n, jstar, status


def exit_paths(gen_normal, gen_uniform, n_paths, x, a, b, lam, sigma2, dt, max_steps):
    side = np.empty(n_paths, dtype=np.int8)
    times = np.empty(n_paths)
    sd = math.sqrt(sigma2 * dt)
    d = lam * dt
    s2dt = sigma2 * dt
    normals = _NormalStream(gen_normal)
    for k in range(n_paths):
        xp = x
        n = 0
        s = -1
        while n < max_steps and s < 0:
            z = normals.take(max_steps - n)
            path = np.cumsum(np.concatenate(([xp], sd * z + d)))
            prev, nxt = path[:-1], path[1:]
            au = 2.0 * (a - prev) * (a - nxt) / s2dt
            al = 2.0 * (prev - b) * (nxt - b) / s2dt
            out = (nxt >= a) | (nxt <= b)
            near = ~out & ((au < BRIDGE_CUT) | (al < BRIDGE_CUT))
            first_out = int(np.argmax(out)) if out.any() else z.size
            for i in np.flatnonzero(near[:first_out]):
                pu = math.exp(-au[i]) if au[i] < BRIDGE_CUT else 0.0
                pl = math.exp(-al[i]) if al[i] < BRIDGE_CUT else 0.0
                U = gen_uniform.random()
                if U < pu:
                    s = 1
                elif U < pu + pl:
                    s = 0
                if s >= 0:
                    first_out = int(i)
                    break
            if s < 0 and first_out < z.size:
                s = 1 if nxt[first_out] >= a else 0
            if s >= 0:
                normals.consume(first_out + 1)
                n += first_out + 1
            else:
                normals.consume(z.size)
                n += z.size
                xp = float(nxt[-1])
        side[k] = s
        times[k] = (n - 0.5) * dt if s >= 0 else math.nan
    return side, times


def driftless_paths(gen, n_boxes, n_steps, dt):
    sdt = math.sqrt(dt)
    W = np.cumsum(np.concatenate(([0.0], sdt * gen.standard_normal(n_steps))))
    M = np.minimum.accumulate(W)
    away = W > M
    starts = np.flatnonzero(away[1:] & ~away[:-1]) + 1
    lab = (gen.random(starts.size) * n_boxes).astype(np.int64)
    np.minimum(lab, n_boxes - 1, out=lab)
    labels = np.full(n_steps + 1, -1, dtype=np.int64)
    if starts.size:
        owner = np.cumsum(np.isin(np.arange(n_steps + 1), starts)) - 1
        labels[away] = lab[owner[away]]
    base = M / n_boxes
    X = np.repeat(base[:, None], n_boxes, axis=1)
    idx = np.flatnonzero(away)
    X[idx, labels[idx]] = base[idx] + (W[idx] - M[idx])
    return W, M, X, labels
