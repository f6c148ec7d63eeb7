"""Tiny recurrent networks for the desk-scale trainer.

Generator: a tanh state recurrence with a linear frame readout,

    s_0 = 0,  s_t = tanh(A s_{t-1} + B z_t),  frame_t = reshape(C s_t + d)

Discriminator: two independent recurrences of the same shape over
flattened frames, one producing the h readouts (frames 1..T-1 of the
second batch argument of the causal cost), the other the M readouts
(all T frames).  The state at step t has consumed frames up to t only,
so every output is causal by construction.

Parameters initialise uniformly in [-0.1, 0.1] from a SplitMix64 stream,
drawn in flat pack order (documented on the pack functions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError
from .rng import SplitMix64
from .transport import DiscriminatorEvals

__all__ = [
    "NetDims",
    "GeneratorParams",
    "RecurrentNet",
    "DiscriminatorParams",
    "generator_forward",
    "discriminator_forward",
    "discriminator_forward_batch",
    "init_generator",
    "init_discriminator",
]


@dataclass(frozen=True)
class NetDims:
    """Shared sizes for the toy networks.

    ``d_disc`` is the discriminator state width; the discriminator reads
    2-channel frames (data plus embedding), so its input width is
    2 * height * width.
    """

    t_steps: int
    height: int
    width: int
    d_latent: int = 4
    d_state: int = 16
    d_disc: int = 4
    j_outputs: int = 4

    def __post_init__(self):
        if min(self.t_steps, self.height, self.width, self.d_latent,
               self.d_state, self.d_disc, self.j_outputs) < 1:
            raise ValidationError("all network dims must be >= 1")

    @property
    def n_pixels(self) -> int:
        return self.height * self.width

    @property
    def disc_input(self) -> int:
        return 2 * self.height * self.width


@dataclass(frozen=True)
class GeneratorParams:
    state_kernel: np.ndarray  # (d_s, d_s)
    input_kernel: np.ndarray  # (d_s, d_z)
    readout: np.ndarray  # (H*W, d_s)
    bias: np.ndarray  # (H*W,)

    def pack(self) -> np.ndarray:
        """Flat vector in [state_kernel, input_kernel, readout, bias] order."""
        return np.concatenate(
            [self.state_kernel.ravel(), self.input_kernel.ravel(),
             self.readout.ravel(), self.bias.ravel()]
        )

    @staticmethod
    def param_count(dims: NetDims) -> int:
        return (dims.d_state * dims.d_state + dims.d_state * dims.d_latent
                + dims.n_pixels * dims.d_state + dims.n_pixels)

    @classmethod
    def unpack(cls, dims: NetDims, flat: np.ndarray) -> "GeneratorParams":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (cls.param_count(dims),):
            raise ShapeError(f"expected {cls.param_count(dims)} params, got {flat.shape}")
        ds, dz, n = dims.d_state, dims.d_latent, dims.n_pixels
        parts = np.split(flat, np.cumsum([ds * ds, ds * dz, n * ds]))
        return cls(
            state_kernel=parts[0].reshape(ds, ds),
            input_kernel=parts[1].reshape(ds, dz),
            readout=parts[2].reshape(n, ds),
            bias=parts[3].copy(),
        )


@dataclass(frozen=True)
class RecurrentNet:
    """One discriminator branch: tanh recurrence plus linear readout."""

    state_kernel: np.ndarray  # (d_h, d_h)
    input_kernel: np.ndarray  # (d_h, d_in)
    readout: np.ndarray  # (J, d_h)
    bias: np.ndarray  # (J,)

    def pack(self) -> np.ndarray:
        return np.concatenate(
            [self.state_kernel.ravel(), self.input_kernel.ravel(),
             self.readout.ravel(), self.bias.ravel()]
        )

    @staticmethod
    def param_count(dims: NetDims) -> int:
        dh, j = dims.d_disc, dims.j_outputs
        return dh * dh + dh * dims.disc_input + j * dh + j

    @classmethod
    def unpack(cls, dims: NetDims, flat: np.ndarray) -> "RecurrentNet":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (cls.param_count(dims),):
            raise ShapeError(f"expected {cls.param_count(dims)} params, got {flat.shape}")
        dh, di, j = dims.d_disc, dims.disc_input, dims.j_outputs
        parts = np.split(flat, np.cumsum([dh * dh, dh * di, j * dh]))
        return cls(
            state_kernel=parts[0].reshape(dh, dh),
            input_kernel=parts[1].reshape(dh, di),
            readout=parts[2].reshape(j, dh),
            bias=parts[3].copy(),
        )


@dataclass(frozen=True)
class DiscriminatorParams:
    h_net: RecurrentNet
    m_net: RecurrentNet

    def pack(self) -> np.ndarray:
        """Flat vector: all h_net parameters, then all m_net parameters."""
        return np.concatenate([self.h_net.pack(), self.m_net.pack()])

    @staticmethod
    def param_count(dims: NetDims) -> int:
        return 2 * RecurrentNet.param_count(dims)

    @classmethod
    def unpack(cls, dims: NetDims, flat: np.ndarray) -> "DiscriminatorParams":
        flat = np.asarray(flat, dtype=np.float64)
        half = RecurrentNet.param_count(dims)
        if flat.shape != (2 * half,):
            raise ShapeError(f"expected {2 * half} params, got {flat.shape}")
        return cls(
            h_net=RecurrentNet.unpack(dims, flat[:half]),
            m_net=RecurrentNet.unpack(dims, flat[half:]),
        )


def init_generator(dims: NetDims, stream: SplitMix64) -> GeneratorParams:
    """Uniform [-0.1, 0.1] init, consumed in pack order."""
    flat = stream.uniform_block(GeneratorParams.param_count(dims)) * 0.2 - 0.1
    return GeneratorParams.unpack(dims, flat)


def init_discriminator(dims: NetDims, stream: SplitMix64) -> DiscriminatorParams:
    """Uniform [-0.1, 0.1] init, h branch first, each in pack order."""
    flat = stream.uniform_block(DiscriminatorParams.param_count(dims)) * 0.2 - 0.1
    return DiscriminatorParams.unpack(dims, flat)


def generator_forward(params: GeneratorParams, latents: np.ndarray,
                      height: int, width: int) -> np.ndarray:
    """Run the recurrence over latents of shape (T, d_z); returns (T, H, W)."""
    latents = np.asarray(latents, dtype=np.float64)
    if latents.ndim != 2 or latents.shape[1] != params.input_kernel.shape[1]:
        raise ShapeError(f"latents must be (T, d_z={params.input_kernel.shape[1]})")
    if params.bias.shape[0] != height * width:
        raise ShapeError("readout size does not match the requested grid")
    t_steps = latents.shape[0]
    state = np.zeros(params.state_kernel.shape[0], dtype=np.float64)
    frames = np.empty((t_steps, height * width), dtype=np.float64)
    for t in range(t_steps):
        state = np.tanh(params.state_kernel @ state + params.input_kernel @ latents[t])
        frames[t] = params.readout @ state + params.bias
    return frames.reshape(t_steps, height, width)


def _flatten_frames(seq: np.ndarray, d_in: int) -> np.ndarray:
    seq = np.asarray(seq, dtype=np.float64)
    flat = seq.reshape(seq.shape[0], -1)
    if flat.shape[1] != d_in:
        raise ShapeError(f"frames flatten to {flat.shape[1]}, net expects {d_in}")
    return flat


def _net_outputs(net: RecurrentNet, frames_flat: np.ndarray) -> np.ndarray:
    """Readouts after each step, shape (J, T)."""
    t_steps = frames_flat.shape[0]
    state = np.zeros(net.state_kernel.shape[0], dtype=np.float64)
    outs = np.empty((net.bias.shape[0], t_steps), dtype=np.float64)
    for t in range(t_steps):
        state = np.tanh(net.state_kernel @ state + net.input_kernel @ frames_flat[t])
        outs[:, t] = net.readout @ state + net.bias
    return outs


def discriminator_forward(params: DiscriminatorParams, seq: np.ndarray) -> DiscriminatorEvals:
    """Evals for one sequence whose frames flatten to the nets' input width."""
    d_in = params.h_net.input_kernel.shape[1]
    flat = _flatten_frames(seq, d_in)
    h_out = _net_outputs(params.h_net, flat)  # (J, T)
    m_out = _net_outputs(params.m_net, flat)
    return DiscriminatorEvals(h_values=h_out[None, :, :-1], m_values=m_out[None, :, :])


def discriminator_forward_batch(params: DiscriminatorParams, batch: np.ndarray) -> DiscriminatorEvals:
    """Evals for a batch with leading item axis; one stacked result."""
    batch = np.asarray(batch, dtype=np.float64)
    per_item = [discriminator_forward(params, item) for item in batch]
    return DiscriminatorEvals(
        h_values=np.concatenate([e.h_values for e in per_item], axis=0),
        m_values=np.concatenate([e.m_values for e in per_item], axis=0),
    )
