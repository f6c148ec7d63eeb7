"""Desk-scale adversarial trainer with finite-difference gradients.

Each iteration alternates two updates.  First the discriminator ascends
the full objective (mixed Sinkhorn divergence with the causally adjusted
cost, minus lam times the martingale penalty of both real mini-batches).
Then, on fresh latent draws, the generator descends the divergence term
alone.  Gradients are plain central differences per coordinate, so the
SPATE embedding of the generated batch is recomputed at every probe and
its dependence on the generator is differentiated through.

The probe loop is the hot path: probes are stacked into blocks and every
stage (generator recurrence, embedding, readouts, pair costs, Sinkhorn)
runs batched over the block, with one compiled solve call per block.
The gradient is assembled in coordinate order, so results are identical
across chunk sizes and thread counts.

RNG discipline (single SplitMix64 stream per run): generator init, then
discriminator init, then per iteration 2m distinct batch indices, 2m
latent sequences for the discriminator phase, and 2m fresh latent
sequences for the generator phase, in that order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import NumericalError, ShapeError, ValidationError
from .expectation import (
    DEFAULT_EPS_TOTAL,
    DEFAULT_LENGTHSCALE,
    VARIANTS,
    _as_single_channel,
    expectation_values,
)
from .nets import (
    DiscriminatorParams,
    GeneratorParams,
    NetDims,
    RecurrentNet,
    discriminator_forward_batch,
    generator_forward,
)
from .rng import SplitMix64
from .spate import DEFAULT_EPS_VAR, _embedding_variant
from .transport import (
    SinkhornConfig,
    _solve_batch,
    martingale_penalty,
    mixed_sinkhorn_divergence,
    pairwise_base_cost,
)
from .weights import WeightMatrix, build_grid_weights

__all__ = [
    "TrainConfig",
    "TrainState",
    "fd_gradient",
    "adam_step",
    "spate_gan_objective",
    "objective_terms",
    "train",
]

_LOG = logging.getLogger("spategan.train")

_TRAIN_VARIANTS = VARIANTS + ("moran",)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the toy loop.

    epsilon, lengthscale, lam, alpha, beta1 and beta2 carry the reference
    defaults; sinkhorn_iters is a free knob and defaults low because the
    objective is evaluated thousands of times per iteration by the FD
    probes (a truncated Sinkhorn value is still smooth in the costs,
    which is all the trainer needs).  lengthscale is clamped to T when
    the sequence is shorter, with a logged warning.
    """

    iterations: int
    seed: int = 0
    m: int = 4
    epsilon: float = 0.8
    sinkhorn_iters: int = 20
    lengthscale: float = DEFAULT_LENGTHSCALE
    lam: float = 1.5
    eta: float = 1e-8
    alpha: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    variant: str = "ksw"
    scheme: str = "queen"
    fd_step: float = 1e-3
    d_latent: int = 4
    d_state: int = 16
    d_disc: int = 2
    j_outputs: int = 4

    def __post_init__(self):
        if self.iterations < 0:
            raise ValidationError(f"iterations must be >= 0, got {self.iterations}")
        if self.m < 1:
            raise ValidationError(f"batch size m must be >= 1, got {self.m}")
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ValidationError("epsilon must be positive and finite")
        if self.sinkhorn_iters < 1:
            raise ValidationError("sinkhorn_iters must be >= 1")
        if not (self.lengthscale > 0.0):
            raise ValidationError("lengthscale must be positive")
        if self.lam < 0.0 or not math.isfinite(self.lam):
            raise ValidationError("lam must be finite and >= 0")
        if not (self.eta > 0.0):
            raise ValidationError("eta must be positive")
        if not (self.alpha > 0.0):
            raise ValidationError("alpha must be positive")
        for name, b in (("beta1", self.beta1), ("beta2", self.beta2)):
            if not (0.0 <= b < 1.0):
                raise ValidationError(f"{name} must lie in [0, 1), got {b}")
        if self.variant not in _TRAIN_VARIANTS:
            raise ValidationError(f"variant must be one of {_TRAIN_VARIANTS}, got {self.variant!r}")
        if not (self.fd_step > 0.0):
            raise ValidationError("fd_step must be positive")
        if min(self.d_latent, self.d_state, self.d_disc, self.j_outputs) < 1:
            raise ValidationError("network dims must be >= 1")


@dataclass
class TrainState:
    """Parameters, Adam moments and loss history after a run.

    history has one row per iteration: (iteration, phi_loss, theta_loss),
    both losses evaluated at the start of their respective half-steps
    (phi_loss is the full objective the discriminator ascends, theta_loss
    the divergence the generator then descends, on its fresh latents).
    """

    dims: NetDims
    theta: np.ndarray
    phi: np.ndarray
    theta_m1: np.ndarray
    theta_m2: np.ndarray
    phi_m1: np.ndarray
    phi_m2: np.ndarray
    step: int
    seed: int
    history: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def generator(self) -> GeneratorParams:
        return GeneratorParams.unpack(self.dims, self.theta)

    def discriminator(self) -> DiscriminatorParams:
        return DiscriminatorParams.unpack(self.dims, self.phi)


def fd_gradient(fn, params: np.ndarray, step: float) -> np.ndarray:
    """Central differences (f(p + h e_i) - f(p - h e_i)) / 2h per coordinate."""
    if not (step > 0.0):
        raise ValidationError(f"fd step must be positive, got {step}")
    params = np.asarray(params, dtype=np.float64)
    flat = params.ravel()
    grad = np.empty(flat.shape, dtype=np.float64)
    for i in range(flat.size):
        probe = flat.copy()
        probe[i] += step
        up = float(fn(probe.reshape(params.shape)))
        probe[i] -= 2.0 * step
        down = float(fn(probe.reshape(params.shape)))
        if not (math.isfinite(up) and math.isfinite(down)):
            raise NumericalError(f"objective non-finite at probe of coordinate {i}")
        grad[i] = (up - down) / (2.0 * step)
    return grad.reshape(params.shape)


def adam_step(
    params: np.ndarray,
    grad: np.ndarray,
    m1: np.ndarray,
    m2: np.ndarray,
    step_index: int,
    alpha: float,
    beta1: float,
    beta2: float,
    eps_adam: float = 1e-8,
):
    """One bias-corrected Adam update; returns (params, m1, m2)."""
    if step_index < 1:
        raise ValidationError("adam step_index counts from 1")
    if params.shape != grad.shape or m1.shape != params.shape or m2.shape != params.shape:
        raise ShapeError("params, grad and moments must share one shape")
    m1 = beta1 * m1 + (1.0 - beta1) * grad
    m2 = beta2 * m2 + (1.0 - beta2) * grad * grad
    m1_hat = m1 / (1.0 - beta1 ** step_index)
    m2_hat = m2 / (1.0 - beta2 ** step_index)
    return params - alpha * m1_hat / (np.sqrt(m2_hat) + eps_adam), m1, m2


def _effective_lengthscale(cfg: TrainConfig, t_steps: int) -> float:
    if cfg.variant in ("kw", "ksw") and cfg.lengthscale > t_steps:
        _LOG.warning(
            "lengthscale %g exceeds sequence length %d; clamped to %d",
            cfg.lengthscale, t_steps, t_steps,
        )
        return float(t_steps)
    return cfg.lengthscale


def _dense_weight_matrix(weights: WeightMatrix) -> np.ndarray:
    """Binary (n, n) adjacency; at grid sizes a dense GEMM beats the gather."""
    n = weights.n_pixels
    dense = np.zeros((n, n), dtype=np.float64)
    for i, nbrs in enumerate(weights.neighbors):
        dense[i, list(nbrs)] = 1.0
    return dense


@njit(cache=True)
def _field_fill(zf, neigh, counts_m1, xflat, out, eps_var):
    """Fused per-frame normalization: out[:, :, 0] = data, out[:, :, 1] = field."""
    n_items, t_steps, n = zf.shape
    for b in range(n_items):
        for t in range(t_steps):
            sq = 0.0
            for p in range(n):
                sq += zf[b, t, p] * zf[b, t, p]
            if sq >= eps_var:
                for p in range(n):
                    out[b, t, 0, p] = xflat[b, t, p]
                    out[b, t, 1, p] = zf[b, t, p] * neigh[b, t, p] * counts_m1[p] / sq
            else:
                for p in range(n):
                    out[b, t, 0, p] = xflat[b, t, p]
                    out[b, t, 1, p] = 0.0


def _fast_embed(
    x: np.ndarray,
    weights: WeightMatrix,
    variant: str,
    lengthscale: float,
    dense_w: np.ndarray | None = None,
) -> np.ndarray:
    """(N, T, H, W) data -> (N, T, 2, H, W) with the association field as channel 1."""
    n_items, t_steps, height, width = x.shape
    n = height * width
    if variant == "moran":
        z = x - x.mean(axis=(2, 3), keepdims=True)
    else:
        mu, _ = expectation_values(x, variant, lengthscale, DEFAULT_EPS_TOTAL)
        z = x - mu
    zf = z.reshape(n_items, t_steps, n)
    if dense_w is None:
        neigh = weights.neighbor_sums(zf)
    else:
        # symmetric binary weights: row sums via one GEMM
        neigh = (zf.reshape(-1, n) @ dense_w).reshape(zf.shape)
    out = np.empty((n_items, t_steps, 2, n), dtype=np.float64)
    _field_fill(
        zf,
        neigh,
        np.ascontiguousarray(weights.counts - 1.0),
        np.ascontiguousarray(x.reshape(n_items, t_steps, n)),
        out,
        DEFAULT_EPS_VAR,
    )
    return out.reshape(n_items, t_steps, 2, height, width)


def _generate_block(block: np.ndarray, latents: np.ndarray, dims: NetDims) -> np.ndarray:
    """Run one generator per block row over shared latents.

    block: (Q, P_theta) flat parameter vectors; latents: (mb, T, d_z).
    Returns frames (Q, mb, T, n_pixels).
    """
    q = block.shape[0]
    ds, dz, n = dims.d_state, dims.d_latent, dims.n_pixels
    mb, t_steps, _ = latents.shape
    o1, o2, o3 = ds * ds, ds * (ds + dz), ds * (ds + dz) + n * ds
    a = block[:, :o1].reshape(q, ds, ds)
    b = block[:, o1:o2].reshape(q, ds, dz)
    c = block[:, o2:o3].reshape(q, n, ds)
    d = block[:, o3:]
    # One GEMM for every B z_t product: (Q*ds, dz) @ (dz, mb*T).
    zin = (b.reshape(q * ds, dz) @ latents.reshape(mb * t_steps, dz).T).reshape(q, ds, mb, t_steps)
    a_t = np.ascontiguousarray(a.transpose(0, 2, 1))
    state = np.zeros((q, mb, ds), dtype=np.float64)
    states = np.empty((q, mb, t_steps, ds), dtype=np.float64)
    for t in range(t_steps):
        state = np.tanh(np.matmul(state, a_t) + zin[:, :, :, t].transpose(0, 2, 1))
        states[:, :, t] = state
    frames = np.matmul(states.reshape(q, mb * t_steps, ds), c.transpose(0, 2, 1))
    frames += d[:, None, :]
    return frames.reshape(q, mb, t_steps, n)


def _net_outputs_block(block: np.ndarray, seqs: np.ndarray, dims: NetDims) -> np.ndarray:
    """One recurrent branch per block row over shared sequences.

    block: (Q, P_net) flat vectors of a single branch; seqs: (N, T, d_in).
    Returns readouts (Q, N, J, T).
    """
    q = block.shape[0]
    dh, di, j = dims.d_disc, dims.disc_input, dims.j_outputs
    n_seq, t_steps, _ = seqs.shape
    o1, o2, o3 = dh * dh, dh * (dh + di), dh * (dh + di) + j * dh
    a = block[:, :o1].reshape(q, dh, dh)
    b = block[:, o1:o2].reshape(q, dh, di)
    c = block[:, o2:o3].reshape(q, j, dh)
    bias = block[:, o3:]
    xin = (b.reshape(q * dh, di) @ seqs.reshape(n_seq * t_steps, di).T).reshape(q, dh, n_seq, t_steps)
    a_t = np.ascontiguousarray(a.transpose(0, 2, 1))
    c_t = np.ascontiguousarray(c.transpose(0, 2, 1))
    state = np.zeros((q, n_seq, dh), dtype=np.float64)
    outs = np.empty((q, n_seq, j, t_steps), dtype=np.float64)
    for t in range(t_steps):
        state = np.tanh(np.matmul(state, a_t) + xin[:, :, :, t].transpose(0, 2, 1))
        outs[:, :, :, t] = np.matmul(state, c_t) + bias[:, None, :]
    return outs


def _net_outputs_single(net: RecurrentNet, seqs: np.ndarray) -> np.ndarray:
    """One branch over (N, T, d_in) sequences; returns (N, J, T)."""
    n_seq, t_steps, d_in = seqs.shape
    # all input projections in one contiguous GEMM, recurrence on the rest
    xin = (seqs.reshape(-1, d_in) @ net.input_kernel.T).reshape(n_seq, t_steps, -1)
    state = np.zeros((n_seq, net.state_kernel.shape[0]), dtype=np.float64)
    outs = np.empty((n_seq, net.bias.shape[0], t_steps), dtype=np.float64)
    for t in range(t_steps):
        state = np.tanh(state @ net.state_kernel.T + xin[:, t])
        outs[:, :, t] = state @ net.readout.T + net.bias
    return outs


def _penalty_block(m_values: np.ndarray, eta: float) -> np.ndarray:
    """martingale_penalty per slice of a (Q, m, J, T) stack; returns (Q,)."""
    q, m, _, t_steps = m_values.shape
    scale = np.sqrt(m_values.var(axis=(1, 3))) + eta  # (Q, J)
    inc = (m_values[..., 1:] - m_values[..., :-1]) / scale[:, None, :, None]
    return np.abs(inc.sum(axis=1)).sum(axis=(1, 2)) / (m * t_steps)


def _combine(v0, v1, v2, v3):
    # Same association order as mixed_sinkhorn_divergence, so identical
    # quadruples cancel to exactly 0.0 here too.
    return ((v0 + v1) - v2) - v3


def _perturbation_block(center: np.ndarray, coords: np.ndarray, step: float) -> np.ndarray:
    """Stack [plus probes..., minus probes...] for the given coordinates."""
    n = coords.size
    block = np.repeat(center[None, :], 2 * n, axis=0)
    rows = np.arange(n)
    block[rows, coords] += step
    block[rows + n, coords] -= step
    return block


class _Trainer:
    """Per-run workspace: data caches, weight tables, batched FD phases."""

    def __init__(self, cfg: TrainConfig, data: np.ndarray):
        b, t_steps, height, width = data.shape
        if b < 2 * cfg.m:
            raise ValidationError(f"need at least {2 * cfg.m} data items, got {b}")
        if cfg.variant == "ksw" and t_steps < 2:
            raise ValidationError("the sequential variant needs T >= 2")
        self.cfg = cfg
        self.dims = NetDims(
            t_steps, height, width,
            d_latent=cfg.d_latent, d_state=cfg.d_state,
            d_disc=cfg.d_disc, j_outputs=cfg.j_outputs,
        )
        self.weights = build_grid_weights(height, width, cfg.scheme)
        self.lengthscale = _effective_lengthscale(cfg, t_steps)
        self.sink = SinkhornConfig(epsilon=cfg.epsilon, iterations=cfg.sinkhorn_iters, tol=0.0)
        self.n_data = b
        self.dense_w = _dense_weight_matrix(self.weights)
        # Real embeddings never change: one pass over the whole dataset.
        emb = _fast_embed(data, self.weights, cfg.variant, self.lengthscale, self.dense_w)
        self.real_seq = np.ascontiguousarray(emb.reshape(b, t_steps, self.dims.disc_input))
        self.real_flat = np.ascontiguousarray(emb.reshape(b, -1))
        self.flat_dim = self.real_flat.shape[1]

    # -- shared pieces ---------------------------------------------------

    def _embed_fakes(self, frames: np.ndarray) -> np.ndarray:
        """(..., T, n) generator output -> (..., T, 2, H, W) embedding."""
        lead = frames.shape[:-2]
        t_steps = frames.shape[-2]
        x = frames.reshape(-1, t_steps, self.dims.height, self.dims.width)
        emb = _fast_embed(x, self.weights, self.cfg.variant, self.lengthscale, self.dense_w)
        return emb.reshape(lead + (t_steps, 2, self.dims.height, self.dims.width))

    def _disc_evals(self, phi: np.ndarray, seqs: np.ndarray):
        """h and M readouts of both branches under flat phi; seqs (N, T, d_in)."""
        params = DiscriminatorParams.unpack(self.dims, phi)
        h_out = _net_outputs_single(params.h_net, seqs)
        m_out = _net_outputs_single(params.m_net, seqs)
        return h_out[:, :, :-1], m_out

    def _solve_values(self, costs: np.ndarray) -> np.ndarray:
        _, values, _, _ = _solve_batch(np.ascontiguousarray(costs), self.sink)
        return values

    # -- discriminator phase ---------------------------------------------

    def phi_phase(self, theta: np.ndarray, phi: np.ndarray, idx: np.ndarray,
                  latents: np.ndarray):
        """Full objective at the centre plus its ascent gradient."""
        cfg = self.cfg
        m = cfg.m
        dims = self.dims
        frames = _generate_block(theta[None, :], latents, dims)[0]  # (2m, T, n)
        femb = self._embed_fakes(frames)
        fake_seq = femb.reshape(2 * m, dims.t_steps, dims.disc_input)
        fake_flat = femb.reshape(2 * m, -1)
        # Batch order (X, Y, X2, Y2): rows of the four transport pairs are
        # X, X2, X, Y and columns Y, Y2, X2, Y2.
        seqs = np.concatenate(
            [self.real_seq[idx[:m]], fake_seq[:m], self.real_seq[idx[m:]], fake_seq[m:]], axis=0)
        flats = np.concatenate(
            [self.real_flat[idx[:m]], fake_flat[:m], self.real_flat[idx[m:]], fake_flat[m:]], axis=0)
        sl = [slice(k * m, (k + 1) * m) for k in range(4)]
        base = np.stack([
            pairwise_base_cost(flats[sl[0]], flats[sl[1]]),
            pairwise_base_cost(flats[sl[2]], flats[sl[3]]),
            pairwise_base_cost(flats[sl[0]], flats[sl[2]]),
            pairwise_base_cost(flats[sl[1]], flats[sl[3]]),
        ])

        h_c, m_c = self._disc_evals(phi, seqs)
        inc_c = m_c[:, :, 1:] - m_c[:, :, :-1]
        centre = base + np.stack([
            np.einsum("ujt,vjt->uv", inc_c[sl[0]], h_c[sl[1]]),
            np.einsum("ujt,vjt->uv", inc_c[sl[2]], h_c[sl[3]]),
            np.einsum("ujt,vjt->uv", inc_c[sl[0]], h_c[sl[2]]),
            np.einsum("ujt,vjt->uv", inc_c[sl[1]], h_c[sl[3]]),
        ])
        v = self._solve_values(centre)
        divergence = _combine(v[0], v[1], v[2], v[3])
        penalty = (martingale_penalty(m_c[sl[0]], cfg.eta)
                   + martingale_penalty(m_c[sl[2]], cfg.eta))
        phi_loss = divergence - cfg.lam * penalty

        half = RecurrentNet.param_count(dims)
        step = cfg.fd_step
        grad = np.empty(2 * half, dtype=np.float64)

        # h branch: M readouts and the penalty stay at their centre values;
        # the constant penalty cancels in the central difference and is
        # left out rather than rounded through it.
        coords = np.arange(half)
        block = _perturbation_block(phi[:half], coords, step)
        h_all = _net_outputs_block(block, seqs, dims)[:, :, :, :-1]
        costs = base[None] + np.stack([
            np.einsum("ujt,qvjt->quv", inc_c[sl[0]], h_all[:, sl[1]]),
            np.einsum("ujt,qvjt->quv", inc_c[sl[2]], h_all[:, sl[3]]),
            np.einsum("ujt,qvjt->quv", inc_c[sl[0]], h_all[:, sl[2]]),
            np.einsum("ujt,qvjt->quv", inc_c[sl[1]], h_all[:, sl[3]]),
        ], axis=1)
        vals = self._solve_values(costs.reshape(-1, m, m)).reshape(-1, 4)
        div = _combine(vals[:, 0], vals[:, 1], vals[:, 2], vals[:, 3])
        grad[:half] = (div[:half] - div[half:]) / (2.0 * step)

        # M branch: h readouts stay at centre; penalty moves with the probe.
        block = _perturbation_block(phi[half:], coords, step)
        m_all = _net_outputs_block(block, seqs, dims)
        inc_all = m_all[..., 1:] - m_all[..., :-1]
        costs = base[None] + np.stack([
            np.einsum("qujt,vjt->quv", inc_all[:, sl[0]], h_c[sl[1]]),
            np.einsum("qujt,vjt->quv", inc_all[:, sl[2]], h_c[sl[3]]),
            np.einsum("qujt,vjt->quv", inc_all[:, sl[0]], h_c[sl[2]]),
            np.einsum("qujt,vjt->quv", inc_all[:, sl[1]], h_c[sl[3]]),
        ], axis=1)
        vals = self._solve_values(costs.reshape(-1, m, m)).reshape(-1, 4)
        div = _combine(vals[:, 0], vals[:, 1], vals[:, 2], vals[:, 3])
        pen = (_penalty_block(m_all[:, sl[0]], cfg.eta)
               + _penalty_block(m_all[:, sl[2]], cfg.eta))
        full = div - cfg.lam * pen
        grad[half:] = (full[:half] - full[half:]) / (2.0 * step)
        return phi_loss, grad

    # -- generator phase -------------------------------------------------

    def theta_phase(self, theta: np.ndarray, phi: np.ndarray, idx: np.ndarray,
                    latents: np.ndarray, chunk: int = 64):
        """Divergence at the centre plus its descent gradient.

        The penalty never enters here: this phase differentiates the
        divergence term only, and the (X, X2) transport value is reused
        across probes because no probe can move it.
        """
        cfg = self.cfg
        m = cfg.m
        dims = self.dims
        real_flat_x = self.real_flat[idx[:m]]
        real_flat_x2 = self.real_flat[idx[m:]]
        h_r, m_r = self._disc_evals(phi, self.real_seq[idx])
        inc_r = m_r[:, :, 1:] - m_r[:, :, :-1]
        h_x2 = h_r[m:]
        inc_x, inc_x2 = inc_r[:m], inc_r[m:]
        uu_x = np.einsum("id,id->i", real_flat_x, real_flat_x)
        uu_x2 = np.einsum("id,id->i", real_flat_x2, real_flat_x2)

        frames = _generate_block(theta[None, :], latents, dims)[0]
        femb = self._embed_fakes(frames)
        fake_seq = femb.reshape(2 * m, dims.t_steps, dims.disc_input)
        fake_flat = femb.reshape(2 * m, -1)
        h_f, m_f = self._disc_evals(phi, fake_seq)
        inc_y = m_f[:m, :, 1:] - m_f[:m, :, :-1]
        centre = np.stack([
            pairwise_base_cost(real_flat_x, fake_flat[:m])
            + np.einsum("ujt,vjt->uv", inc_x, h_f[:m]),
            pairwise_base_cost(real_flat_x2, fake_flat[m:])
            + np.einsum("ujt,vjt->uv", inc_x2, h_f[m:]),
            pairwise_base_cost(real_flat_x, real_flat_x2)
            + np.einsum("ujt,vjt->uv", inc_x, h_x2),
            pairwise_base_cost(fake_flat[:m], fake_flat[m:])
            + np.einsum("ujt,vjt->uv", inc_y, h_f[m:]),
        ])
        v = self._solve_values(centre)
        theta_loss = _combine(v[0], v[1], v[2], v[3])
        w_real = v[2]

        step = cfg.fd_step
        p_theta = theta.size
        grad = np.empty(p_theta, dtype=np.float64)
        for start in range(0, p_theta, chunk):
            coords = np.arange(start, min(start + chunk, p_theta))
            n_c = coords.size
            block = _perturbation_block(theta, coords, step)
            frames_b = _generate_block(block, latents, dims)  # (2n, 2m, T, n)
            femb_b = self._embed_fakes(frames_b)
            flat_b = femb_b.reshape(2 * n_c, 2 * m, -1)
            seq_b = femb_b.reshape(2 * n_c * 2 * m, dims.t_steps, dims.disc_input)
            h_b, m_b = self._disc_evals(phi, seq_b)
            h_b = h_b.reshape(2 * n_c, 2 * m, *h_b.shape[1:])
            m_b = m_b.reshape(2 * n_c, 2 * m, *m_b.shape[1:])
            inc_yb = m_b[:, :m, :, 1:] - m_b[:, :m, :, :-1]
            y_flat, y2_flat = flat_b[:, :m], flat_b[:, m:]
            vv_y = np.einsum("qyd,qyd->qy", y_flat, y_flat)
            vv_y2 = np.einsum("qyd,qyd->qy", y2_flat, y2_flat)
            costs = np.empty((2 * n_c, 3, m, m), dtype=np.float64)
            costs[:, 0] = np.maximum(
                uu_x[None, :, None] + vv_y[:, None, :]
                - 2.0 * np.einsum("xd,qyd->qxy", real_flat_x, y_flat), 0.0)
            costs[:, 0] += np.einsum("ujt,qvjt->quv", inc_x, h_b[:, :m])
            costs[:, 1] = np.maximum(
                uu_x2[None, :, None] + vv_y2[:, None, :]
                - 2.0 * np.einsum("xd,qyd->qxy", real_flat_x2, y2_flat), 0.0)
            costs[:, 1] += np.einsum("ujt,qvjt->quv", inc_x2, h_b[:, m:])
            costs[:, 2] = np.maximum(
                vv_y[:, :, None] + vv_y2[:, None, :]
                - 2.0 * np.einsum("qxd,qyd->qxy", y_flat, y2_flat), 0.0)
            costs[:, 2] += np.einsum("qujt,qvjt->quv", inc_yb, h_b[:, m:])
            vals = self._solve_values(costs.reshape(-1, m, m)).reshape(-1, 3)
            div = _combine(vals[:, 0], vals[:, 1], w_real, vals[:, 2])
            grad[coords] = (div[:n_c] - div[n_c:]) / (2.0 * step)
        return theta_loss, grad


def objective_terms(real_batch, real_batch2, gen_params: GeneratorParams,
                    disc_params: DiscriminatorParams, latents: np.ndarray,
                    cfg: TrainConfig):
    """(divergence, penalty) of the objective, via the reference code paths.

    This routes through the public single-sample pieces (generator_forward,
    the association-field embedding, mixed_sinkhorn_divergence) and serves
    as the ground truth the batched trainer is tested against.
    """
    x1 = _as_single_channel(real_batch)
    x2 = _as_single_channel(real_batch2)
    if x1.shape != x2.shape:
        raise ShapeError(f"real batches differ in shape: {x1.shape} vs {x2.shape}")
    m, t_steps, height, width = x1.shape
    latents = np.asarray(latents, dtype=np.float64)
    if latents.shape != (2 * m, t_steps, cfg.d_latent):
        raise ShapeError(
            f"latents must be (2m, T, d_latent) = {(2 * m, t_steps, cfg.d_latent)}, "
            f"got {latents.shape}")
    weights = build_grid_weights(height, width, cfg.scheme)
    lengthscale = _effective_lengthscale(cfg, t_steps)
    fakes = np.stack([
        generator_forward(gen_params, latents[i], height, width) for i in range(2 * m)
    ])
    batches = [x1, fakes[:m], x2, fakes[m:]]
    embedded = []
    for arr in batches:
        fld = _embedding_variant(arr, weights, cfg.variant, lengthscale, DEFAULT_EPS_TOTAL)
        embedded.append(np.stack([arr, fld], axis=2))
    evals = tuple(
        discriminator_forward_batch(disc_params, emb.reshape(m, t_steps, -1))
        for emb in embedded
    )
    sink = SinkhornConfig(epsilon=cfg.epsilon, iterations=cfg.sinkhorn_iters, tol=0.0)
    divergence = mixed_sinkhorn_divergence(
        embedded[0], embedded[1], embedded[2], embedded[3], config=sink, evals=evals)
    penalty = (martingale_penalty(evals[0].m_values, cfg.eta)
               + martingale_penalty(evals[2].m_values, cfg.eta))
    return divergence, penalty


def spate_gan_objective(real_batch, real_batch2, gen_params: GeneratorParams,
                        disc_params: DiscriminatorParams, latents: np.ndarray,
                        cfg: TrainConfig) -> float:
    """Full adversarial objective: divergence minus lam times the penalty."""
    divergence, penalty = objective_terms(
        real_batch, real_batch2, gen_params, disc_params, latents, cfg)
    return float(divergence - cfg.lam * penalty)


def train(cfg: TrainConfig, data) -> TrainState:
    """Run the alternating loop over a (B, T, H, W) dataset.

    Per iteration: draw 2m distinct item indices, draw 2m latent
    sequences, ascend the discriminator on the full objective; draw 2m
    fresh latents, descend the generator on the divergence alone.  Both
    centre losses land in the history row for that iteration.
    """
    x = _as_single_channel(data)
    worker = _Trainer(cfg, x)
    dims = worker.dims
    stream = SplitMix64(cfg.seed)
    theta = stream.uniform_block(GeneratorParams.param_count(dims)) * 0.2 - 0.1
    phi = stream.uniform_block(DiscriminatorParams.param_count(dims)) * 0.2 - 0.1
    theta_m1 = np.zeros_like(theta)
    theta_m2 = np.zeros_like(theta)
    phi_m1 = np.zeros_like(phi)
    phi_m2 = np.zeros_like(phi)
    history = np.zeros((cfg.iterations, 3), dtype=np.float64)
    n_latent = 2 * cfg.m * dims.t_steps * cfg.d_latent
    for it in range(cfg.iterations):
        idx = stream.sample_indices(worker.n_data, 2 * cfg.m)
        z_phi = stream.normal_block(n_latent).reshape(2 * cfg.m, dims.t_steps, cfg.d_latent)
        phi_loss, phi_grad = worker.phi_phase(theta, phi, idx, z_phi)
        # Ascent: Adam minimises, so feed it the negated gradient.
        phi, phi_m1, phi_m2 = adam_step(
            phi, -phi_grad, phi_m1, phi_m2, it + 1, cfg.alpha, cfg.beta1, cfg.beta2)
        z_theta = stream.normal_block(n_latent).reshape(2 * cfg.m, dims.t_steps, cfg.d_latent)
        theta_loss, theta_grad = worker.theta_phase(theta, phi, idx, z_theta)
        theta, theta_m1, theta_m2 = adam_step(
            theta, theta_grad, theta_m1, theta_m2, it + 1, cfg.alpha, cfg.beta1, cfg.beta2)
        if not (math.isfinite(phi_loss) and math.isfinite(theta_loss)):
            raise NumericalError(
                f"non-finite loss at iteration {it}: phi={phi_loss}, theta={theta_loss}")
        history[it] = (it, phi_loss, theta_loss)
    return TrainState(
        dims=dims,
        theta=theta, phi=phi,
        theta_m1=theta_m1, theta_m2=theta_m2,
        phi_m1=phi_m1, phi_m2=phi_m2,
        step=cfg.iterations, seed=cfg.seed, history=history,
    )
