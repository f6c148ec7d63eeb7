"""Independent brute-force reference implementations used by the tests.

Everything here is written as plain loops over the defining sums, on purpose.
No code is shared with the package under test; where the package vectorises,
these oracles iterate, so agreement between the two is meaningful evidence.
All oracles work on a single sequence laid out as a (T, H, W) array (or on
flat vectors where noted).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

EPS_GUARD = 1e-12


# ---------------------------------------------------------------------------
# spatial weights


def oracle_neighbors(height: int, width: int, scheme: str) -> list[list[int]]:
    """Sorted neighbor lists for a regular grid, flat row-major indices."""
    if scheme == "rook":
        offsets = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    elif scheme == "queen":
        offsets = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]
    else:
        raise ValueError(scheme)
    out = []
    for r in range(height):
        for c in range(width):
            nbrs = []
            for dr, dc in offsets:
                rr, cc = r + dr, c + dc
                if 0 <= rr < height and 0 <= cc < width:
                    nbrs.append(rr * width + cc)
            out.append(sorted(nbrs))
    return out


# ---------------------------------------------------------------------------
# spatio-temporal expectations


def oracle_expectation(x: np.ndarray, variant: str, lengthscale: float):
    """mu (T, H, W) and validity mask (T,) for one sequence, by direct sums."""
    t_steps, height, width = x.shape
    flat = x.reshape(t_steps, height * width)
    n = height * width
    mu = np.zeros((t_steps, n), dtype=np.float64)
    valid = [True] * t_steps

    if variant == "k":
        grand = 0.0
        for tt in range(t_steps):
            for j in range(n):
                grand += flat[tt, j]
        if abs(grand) < EPS_GUARD:
            raise ZeroDivisionError("degenerate grand total")
        for t in range(t_steps):
            spatial = sum(flat[t, j] for j in range(n))
            for i in range(n):
                temporal = sum(flat[tt, i] for tt in range(t_steps))
                mu[t, i] = spatial * temporal / grand
    elif variant == "kw":
        for t in range(t_steps):
            spatial = sum(flat[t, j] for j in range(n))
            denom = 0.0
            for j in range(n):
                for tt in range(t_steps):
                    denom += math.exp(-abs(t - tt) / lengthscale) * flat[tt, j]
            if abs(denom) < EPS_GUARD:
                raise ZeroDivisionError("degenerate weighted total")
            for i in range(n):
                temporal = sum(
                    math.exp(-abs(t - tt) / lengthscale) * flat[tt, i] for tt in range(t_steps)
                )
                mu[t, i] = spatial * temporal / denom
    elif variant == "ksw":
        if t_steps < 2:
            raise ValueError("ksw needs at least two frames")
        for i in range(n):
            mu[0, i] = flat[0, i]
        valid[0] = False
        for t in range(1, t_steps):
            spatial = sum(flat[t, j] for j in range(n))
            denom = 0.0
            for j in range(n):
                for tt in range(t):
                    denom += math.exp(-abs(t - tt) / lengthscale) * flat[tt, j]
            if abs(denom) < EPS_GUARD:
                raise ZeroDivisionError("degenerate past total")
            for i in range(n):
                temporal = sum(
                    math.exp(-abs(t - tt) / lengthscale) * flat[tt, i] for tt in range(t)
                )
                mu[t, i] = spatial * temporal / denom
    else:
        raise ValueError(variant)
    return mu.reshape(t_steps, height, width), np.array(valid)


# ---------------------------------------------------------------------------
# local association statistic


def oracle_spate(x: np.ndarray, variant: str, lengthscale: float, scheme: str) -> np.ndarray:
    """Brute-force statistic for one (T, H, W) sequence.

    variant "moran" uses the per-frame mean; the others use the matching
    expectation above.  Prefactor (n_i - 1), residual-square denominator over
    all pixels of the frame, neighbor sum over adjacent pixels only.
    """
    t_steps, height, width = x.shape
    n = height * width
    nbrs = oracle_neighbors(height, width, scheme)
    flat = x.reshape(t_steps, n)
    if variant == "moran":
        z = np.empty_like(flat)
        for t in range(t_steps):
            mean = sum(flat[t, j] for j in range(n)) / n
            for i in range(n):
                z[t, i] = flat[t, i] - mean
    else:
        mu, _ = oracle_expectation(x, variant, lengthscale)
        z = flat - mu.reshape(t_steps, n)
    out = np.zeros((t_steps, n), dtype=np.float64)
    for t in range(t_steps):
        ssq = sum(z[t, j] * z[t, j] for j in range(n))
        if ssq < EPS_GUARD:
            continue
        for i in range(n):
            acc = sum(z[t, j] for j in nbrs[i])
            out[t, i] = (len(nbrs[i]) - 1) * z[t, i] / ssq * acc
    return out.reshape(t_steps, height, width)


# ---------------------------------------------------------------------------
# recurrences


def oracle_generator(a, b, c, d, latents) -> np.ndarray:
    """State recurrence + linear readout, evaluated with python loops.

    a: (ds, ds), b: (ds, dz), c: (n, ds), d: (n,), latents: (T, dz).
    Returns frames (T, n).
    """
    d_state = len(a)
    n = len(c)
    t_steps = len(latents)
    state = [0.0] * d_state
    frames = np.zeros((t_steps, n), dtype=np.float64)
    for t in range(t_steps):
        nxt = []
        for r in range(d_state):
            acc = 0.0
            for k in range(d_state):
                acc += a[r][k] * state[k]
            for k in range(len(latents[t])):
                acc += b[r][k] * latents[t][k]
            nxt.append(math.tanh(acc))
        state = nxt
        for p in range(n):
            acc = d[p]
            for k in range(d_state):
                acc += c[p][k] * state[k]
            frames[t, p] = acc
    return frames


def oracle_recurrent(state_k, input_k, readout, bias, seq) -> np.ndarray:
    """One causal branch: state_t = tanh(W s + U x_t); out_t = R s + b.

    seq: (T, d_in).  Returns (J, T).
    """
    d_hidden = len(state_k)
    j_outputs = len(readout)
    t_steps = len(seq)
    state = [0.0] * d_hidden
    out = np.zeros((j_outputs, t_steps), dtype=np.float64)
    for t in range(t_steps):
        nxt = []
        for r in range(d_hidden):
            acc = 0.0
            for k in range(d_hidden):
                acc += state_k[r][k] * state[k]
            for k in range(len(seq[t])):
                acc += input_k[r][k] * seq[t][k]
            nxt.append(math.tanh(acc))
        state = nxt
        for j in range(j_outputs):
            acc = bias[j]
            for k in range(d_hidden):
                acc += readout[j][k] * state[k]
            out[j, t] = acc
    return out


# ---------------------------------------------------------------------------
# transport


def oracle_exact_ot(cost: np.ndarray) -> float:
    """(1/m) * minimum over all assignment permutations."""
    m = len(cost)
    best = math.inf
    for perm in itertools.permutations(range(m)):
        total = sum(cost[i][perm[i]] for i in range(m))
        best = min(best, total)
    return best / m


def oracle_sinkhorn(cost: np.ndarray, epsilon: float, rounds: int):
    """Scaling-domain Sinkhorn (no log stabilisation), uniform marginals.

    Matches the package's iteration order exactly in exact arithmetic:
    v starts at 1 (zero potential), u updates first.  Only usable when
    epsilon is large enough for exp(-c/eps) not to underflow.
    Returns (plan, value).
    """
    m = len(cost)
    kernel = np.exp(-np.asarray(cost, dtype=np.float64) / epsilon)
    a = np.full(m, 1.0 / m)
    b = np.full(m, 1.0 / m)
    v = np.ones(m)
    u = np.ones(m)
    for _ in range(rounds):
        u = a / (kernel @ v)
        v = b / (kernel.T @ u)
    plan = u[:, None] * kernel * v[None, :]
    value = 0.0
    for i in range(m):
        for j in range(m):
            p = plan[i, j]
            value += p * cost[i][j]
            if p > 0.0:
                value += epsilon * p * math.log(p)
    return plan, value


def oracle_base_cost(x: np.ndarray, y: np.ndarray) -> float:
    acc = 0.0
    for xv, yv in zip(np.asarray(x).ravel(), np.asarray(y).ravel()):
        acc += (xv - yv) ** 2
    return acc


def oracle_causal_cost(x, y, h_y, m_x) -> float:
    """base + sum_j sum_{t=1}^{T-1} h^j_t(y) * (M^j_{t+1}(x) - M^j_t(x)).

    h_y: (J, T-1) with column t-1 holding h^j_t; m_x: (J, T).
    """
    total = oracle_base_cost(x, y)
    j_outputs, t_minus_1 = np.asarray(h_y).shape
    for j in range(j_outputs):
        for t in range(t_minus_1):
            total += h_y[j][t] * (m_x[j][t + 1] - m_x[j][t])
    return total


def oracle_martingale_penalty(m_values: np.ndarray, eta: float) -> float:
    """(1/(mT)) sum_j sum_t |sum_batch dM / (sqrt(pop var of M^j) + eta)|."""
    m, j_outputs, t_steps = np.asarray(m_values).shape
    total = 0.0
    for j in range(j_outputs):
        vals = [m_values[d][j][t] for d in range(m) for t in range(t_steps)]
        mean = sum(vals) / len(vals)
        var = sum((v - mean) ** 2 for v in vals) / len(vals)
        scale = math.sqrt(var) + eta
        for t in range(t_steps - 1):
            acc = 0.0
            for d in range(m):
                acc += (m_values[d][j][t + 1] - m_values[d][j][t]) / scale
            total += abs(acc)
    return total / (m * t_steps)


# ---------------------------------------------------------------------------
# sample metrics


def oracle_emd(p: np.ndarray, s: np.ndarray) -> float:
    """Minimum over bijections of the summed Euclidean distances (n! search)."""
    n = len(p)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        total = 0.0
        for i in range(n):
            diff = np.asarray(p[i], dtype=np.float64) - np.asarray(s[perm[i]], dtype=np.float64)
            total += math.sqrt(float(np.dot(diff, diff)))
        best = min(best, total)
    return best


def oracle_mmd(p: np.ndarray, s: np.ndarray, sigma: float) -> float:
    """Unbiased-style RBF MMD^2 with diagonal-free within sums."""

    def k(u, v):
        diff = np.asarray(u, dtype=np.float64) - np.asarray(v, dtype=np.float64)
        return math.exp(-float(np.dot(diff, diff)) / (2.0 * sigma * sigma))

    n = len(p)
    pp = sum(k(p[i], p[j]) for i in range(n) for j in range(n) if i != j)
    ss = sum(k(s[i], s[j]) for i in range(n) for j in range(n) if i != j)
    ps = sum(k(p[i], s[j]) for i in range(n) for j in range(n))
    return pp / (n * (n - 1)) + ss / (n * (n - 1)) - 2.0 * ps / (n * n)


# ---------------------------------------------------------------------------
# deterministic RNG reference (pure-int arithmetic)

_MASK = (1 << 64) - 1


def oracle_splitmix(seed: int, count: int) -> list[int]:
    """First ``count`` SplitMix64 outputs for ``seed`` using plain integers."""
    out = []
    state = seed & _MASK
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & _MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        out.append(z ^ (z >> 31))
    return out


def oracle_uniforms(seed: int, count: int) -> list[float]:
    return [(u >> 11) * 2.0**-53 for u in oracle_splitmix(seed, count)]


def oracle_normals(seed: int, count: int) -> list[float]:
    pairs = (count + 1) // 2
    u = oracle_uniforms(seed, 2 * pairs)
    out = []
    for k in range(pairs):
        r = math.sqrt(-2.0 * math.log1p(-u[2 * k]))
        angle = 2.0 * math.pi * u[2 * k + 1]
        out.append(r * math.cos(angle))
        out.append(r * math.sin(angle))
    return out[:count]
