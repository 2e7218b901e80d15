"""Finite-SNR Monte Carlo simulation of the layered alignment chain.

One trial is a single channel use: every transmitter superimposes its PAM
layers, receiver k observes

    y_k = sqrt(P^{a_k}) * sum_l h_kl x_l + z_k,

and decoding peels layer by layer.  At an alignment layer the receiver
jointly resolves its own data vector q and the aggregated interference
vector q' by an exhaustive nearest-point search over the composite
constellation

    scale * (sum_i S(i) q_i + sum_i I(i) q'_i),
    q_i in [-Q, Q],  q'_i in [-K_layer Q, K_layer Q],

treating the lower layers as noise, then subtracts the reconstruction.
The next-to-last layer is a joint two-symbol decode at the two remaining
receivers, and the last layer a plain PAM slice at receiver K.

The nearest-point search sorts the composite constellation once per
(receiver, layer, P) and then decodes whole trial batches with binary
search; ties are broken toward the lexicographically smallest integer
vector.  Minimum distances (brute force over the same enumeration) and the
deterministic residual-interference bound are computed from the same
machinery.  Everything is reproducible from (seed, config).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .channel import ChannelRealization, sample_channel  # noqa: F401  (re-export)
from .gdof_core import AlphaProfile
from .scheme import (
    DimensionSet,
    EnumerationCapError,
    LayerPlan,
    TransmitConfig,
    beam_values,
    build_layer_plan,
    build_transmit_config,
    desired_set,
    interference_set,
    monomial_set,
    power_normalizer,
)

SCHEMA_VERSION = "mlia-sim-1"
DEFAULT_ENUM_CAP = 500_000


# ---------------------------------------------------------------------------
# nearest-point decoding over an explicit composite constellation


@dataclass(eq=False)
class NearestPointDecoder:
    """Exhaustive min-distance decoder for scale * sum_d dim[d] * q_d.

    Enumerates every integer vector with |q_d| <= half_range[d]
    (lexicographic order, first coordinate most significant), sorts the
    point values once, then decodes observations by binary search.  An
    exact distance tie resolves to the lexicographically smallest vector.
    """

    scale: float
    dim_values: np.ndarray
    half_ranges: np.ndarray
    sorted_values: np.ndarray = field(init=False)
    _order: np.ndarray = field(init=False)
    _rep: np.ndarray = field(init=False)

    def __post_init__(self):
        sizes = 2 * self.half_ranges + 1
        values = np.zeros(1)
        for dim, half in zip(self.dim_values, self.half_ranges):
            step = self.scale * dim
            offsets = step * np.arange(-half, half + 1)
            values = (values[:, None] + offsets[None, :]).ravel()
        order = np.argsort(values, kind="stable")
        self.sorted_values = values[order]
        self._order = order
        # representative (lexicographically smallest) combo per duplicate
        # value run; duplicates only occur on measure-zero channel draws
        rep = order.copy()
        dup = np.flatnonzero(np.diff(self.sorted_values) == 0)
        if dup.size:
            for start in dup:
                if start and self.sorted_values[start - 1] == self.sorted_values[start]:
                    continue  # not a run head
                stop = start + 1
                while (
                    stop < len(rep)
                    and self.sorted_values[stop] == self.sorted_values[start]
                ):
                    stop += 1
                rep[start:stop] = rep[start:stop].min()
        self._rep = rep
        self._sizes = sizes

    @property
    def size(self) -> int:
        return len(self.sorted_values)

    @property
    def zero_index(self) -> int:
        """Enumeration index of the all-zero vector."""
        idx = 0
        for half, size in zip(self.half_ranges, self._sizes):
            idx = idx * size + half
        return int(idx)

    def decode(self, obs: np.ndarray) -> np.ndarray:
        """Enumeration indices of the nearest points to each observation."""
        obs = np.atleast_1d(np.asarray(obs, dtype=float))
        sv = self.sorted_values
        pos = np.searchsorted(sv, obs)
        left = np.clip(pos - 1, 0, self.size - 1)
        right = np.clip(pos, 0, self.size - 1)
        d_left = np.abs(obs - sv[left])
        d_right = np.abs(obs - sv[right])
        chosen = np.where(d_right < d_left, right, left)
        combos = self._rep[chosen]
        tie = d_right == d_left
        if np.any(tie):
            combos = combos.copy()
            combos[tie] = np.minimum(self._rep[left[tie]], self._rep[right[tie]])
        return combos

    def unravel(self, combos: np.ndarray) -> np.ndarray:
        """Integer vectors (rows) for enumeration indices."""
        combos = np.atleast_1d(np.asarray(combos)).astype(np.int64)
        out = np.empty((len(combos), len(self.dim_values)), dtype=np.int64)
        rest = combos.copy()
        for d in range(len(self.dim_values) - 1, -1, -1):
            size = self._sizes[d]
            out[:, d] = rest % size - self.half_ranges[d]
            rest //= size
        return out

    def point_value(self, vectors: np.ndarray) -> np.ndarray:
        """scale * sum_d dim[d] * q_d for integer vectors (rows)."""
        return self.scale * (np.atleast_2d(vectors) @ self.dim_values)

    def min_distance(self) -> float:
        """Smallest |point value| over all nonzero integer vectors."""
        sv = self.sorted_values
        pos = int(np.searchsorted(sv, 0.0))
        lo = max(0, pos - 3)
        hi = min(self.size, pos + 4)
        zero = self.zero_index
        window = [abs(sv[i]) for i in range(lo, hi) if self._order[i] != zero]
        return float(min(window))


def enumeration_size(n_dims: int, m_dims: int, k_layer: int, q: int) -> int:
    """Search-space size of an alignment-layer decode."""
    return (2 * q + 1) ** n_dims * (2 * k_layer * q + 1) ** (m_dims - n_dims)


def _check_cap(what: str, size: int, cap: int):
    if size > cap:
        raise EnumerationCapError(what, size, cap)


def _alignment_decoder(
    s_set: DimensionSet,
    i_set: DimensionSet,
    plan: LayerPlan,
    gamma: float,
    k: int,
    ell: int,
    cap: int,
) -> NearestPointDecoder:
    lay = plan.layer(ell)
    q = lay.q_level
    size = enumeration_size(len(s_set), len(s_set) + len(i_set), lay.k_users, q)
    _check_cap(f"decode search for (user {k}, layer {ell})", size, cap)
    exponent = float(plan.alpha.alpha(k) - lay.power_offset)
    scale = gamma / q * plan.p ** (exponent / 2)
    dims = np.concatenate([s_set.values, i_set.values])
    halves = np.array([q] * len(s_set) + [lay.k_users * q] * len(i_set))
    return NearestPointDecoder(scale=scale, dim_values=dims, half_ranges=halves)


def decode_layer(
    obs: float,
    k: int,
    ell: int,
    s_set: DimensionSet,
    i_set: DimensionSet,
    plan: LayerPlan,
    gamma: float,
    cap: int = DEFAULT_ENUM_CAP,
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-point estimate (q, q') of one alignment-layer observation."""
    dec = _alignment_decoder(s_set, i_set, plan, gamma, k, ell, cap)
    vec = dec.unravel(dec.decode(obs))[0]
    n = len(s_set)
    return vec[:n], vec[n:]


def dmin_bruteforce(
    channel: ChannelRealization,
    k: int,
    ell: int,
    plan: LayerPlan,
    gamma: float,
    cap: int = DEFAULT_ENUM_CAP,
) -> float:
    """Exact minimum distance of the composite constellation at (k, ell)."""
    s_set = desired_set(channel, k, ell, plan.n)
    i_set = interference_set(channel, k, ell, plan.n)
    dec = _alignment_decoder(s_set, i_set, plan, gamma, k, ell, cap)
    return dec.min_distance()


def t_bound(
    channel: ChannelRealization,
    plan: LayerPlan,
    k: int,
    ell: int,
    gamma: float,
) -> float:
    """Deterministic ceiling on the treated-as-noise term below layer ell.

    P^{(a_k - a_ell)/2} * gamma * sum over active lower layers l > ell of
    (sum_{j=l..K} |h_kj|) (sum_i |v_{l,i}|); every realized residual is at
    most this, whatever the symbols.
    """
    kk = plan.k_users
    if not 1 <= ell <= kk - 2:
        raise ValueError(f"the residual bound applies to layers 1..{kk - 2}")
    delta = 0.0
    for l in range(ell + 1, kk + 1):
        if not plan.layer(l).active:
            continue
        beam_mass = float(np.sum(np.abs(beam_values(channel, plan, l))))
        h_mass = float(np.sum(np.abs(channel.h[k - 1, l - 1 :])))
        delta += h_mass * beam_mass
    delta *= gamma
    exponent = float(plan.alpha.alpha(k) - plan.alpha.alpha(ell))
    return plan.p ** (exponent / 2) * delta


# ---------------------------------------------------------------------------
# frames


@dataclass(eq=False)
class ReceivedFrame:
    """One channel use: observations, the true integer symbols, the noise."""

    y: np.ndarray  # (K,)
    symbols: dict[tuple[int, int], np.ndarray]  # (user, layer) -> int vector
    noise: np.ndarray  # (K,)


def draw_symbols_batch(
    plan: LayerPlan, rng: np.random.Generator, trials: int
) -> dict[tuple[int, int], np.ndarray]:
    """Uniform integer PAM indices for every data cell, (trials, N) each."""
    symbols = {}
    for k in range(1, plan.k_users + 1):
        for ell in range(1, k + 1):
            lay = plan.layer(ell)
            if not lay.active:
                continue
            symbols[(k, ell)] = rng.integers(
                -lay.q_level, lay.q_level + 1, size=(trials, lay.n_dims)
            )
    return symbols


def transmit_batch(
    configs: dict[int, TransmitConfig],
    symbols: dict[tuple[int, int], np.ndarray],
    trials: int,
) -> np.ndarray:
    """(trials, K) matrix of transmitted signals."""
    kk = len(configs)
    x = np.zeros((trials, kk))
    for k, config in configs.items():
        for lay in config.layers:
            if not lay.active:
                continue
            q = symbols[(k, lay.index)]
            x[:, k - 1] += lay.power_factor * lay.constellation.xi * (q @ lay.beam)
    return x


def synthesize_batch(
    channel: ChannelRealization,
    plan: LayerPlan,
    configs: dict[int, TransmitConfig],
    symbols: dict[tuple[int, int], np.ndarray],
    noise: np.ndarray,
) -> np.ndarray:
    """(trials, K) received observations y = sqrt(P^a) (x h^T) + z."""
    trials = noise.shape[0]
    x = transmit_batch(configs, symbols, trials)
    gains = np.array([plan.p ** (float(a) / 2) for a in plan.alpha.alphas])
    return (x @ channel.h.T) * gains[None, :] + noise


def synthesize_frame(
    channel: ChannelRealization,
    plan: LayerPlan,
    configs: dict[int, TransmitConfig],
    symbols: dict[tuple[int, int], np.ndarray],
    noise: np.ndarray,
) -> ReceivedFrame:
    batch_symbols = {cell: np.atleast_2d(q) for cell, q in symbols.items()}
    y = synthesize_batch(channel, plan, configs, batch_symbols, noise[None, :])[0]
    return ReceivedFrame(y=y, symbols=symbols, noise=noise)


def layer_observation(
    frame: ReceivedFrame,
    channel: ChannelRealization,
    plan: LayerPlan,
    gamma: float,
    k: int,
    ell: int,
    history: dict[tuple[int, int], np.ndarray] | None = None,
) -> float:
    """y_k with the first ell-1 layers' contributions removed.

    ``history`` maps (transmitter j, layer l) to the integer symbol vectors
    already decoded; for ell = 1 it may be omitted and y_k is returned
    unchanged.
    """
    obs = float(frame.y[k - 1])
    if ell == 1:
        return obs
    history = history or {}
    for l in range(1, ell):
        lay = plan.layer(l)
        if not lay.active:
            continue
        xi = gamma / lay.q_level
        beam = beam_values(channel, plan, l)
        exponent = float(plan.alpha.alpha(k) - lay.power_offset)
        gain = plan.p ** (exponent / 2)
        for j in range(l, plan.k_users + 1):
            if (j, l) not in history:
                raise ValueError(f"missing decoded history for (user {j}, layer {l})")
            q = np.asarray(history[(j, l)])
            obs -= gain * channel.coeff(k, j) * xi * float(beam @ q)
    return obs


def realized_residual_batch(
    channel: ChannelRealization,
    plan: LayerPlan,
    gamma: float,
    symbols: dict[tuple[int, int], np.ndarray],
    k: int,
    ell: int,
) -> np.ndarray:
    """The exact treated-as-noise term below layer ell at receiver k."""
    trials = next(iter(symbols.values())).shape[0]
    total = np.zeros(trials)
    for l in range(ell + 1, plan.k_users + 1):
        lay = plan.layer(l)
        if not lay.active:
            continue
        xi = gamma / lay.q_level
        beam = beam_values(channel, plan, l)
        exponent = float(plan.alpha.alpha(k) - lay.power_offset)
        gain = plan.p ** (exponent / 2)
        for j in range(l, plan.k_users + 1):
            total += gain * channel.coeff(k, j) * xi * (symbols[(j, l)] @ beam)
    return total


# ---------------------------------------------------------------------------
# successive decoding


@dataclass(eq=False)
class DecoderBank:
    """Per-(receiver, layer) decoders and set indexing for one (channel,
    plan, gamma); build once, decode any number of frames."""

    channel: ChannelRealization
    plan: LayerPlan
    gamma: float
    cap: int
    sets: dict[tuple[int, int], tuple[DimensionSet, DimensionSet]]
    decoders: dict[tuple[int, int], NearestPointDecoder]
    pair_decoders: dict[int, NearestPointDecoder]
    last_decoder: NearestPointDecoder | None
    scatter: dict[tuple[int, int], dict[int, np.ndarray]]

    def aggregate_truth(
        self, symbols: dict[tuple[int, int], np.ndarray], k: int, ell: int
    ) -> np.ndarray:
        """True aggregated interference integers at (receiver k, layer ell)."""
        _, i_set = self.sets[(k, ell)]
        trials = next(iter(symbols.values())).shape[0]
        agg = np.zeros((trials, len(i_set)), dtype=np.int64)
        for j, positions in self.scatter[(k, ell)].items():
            agg[:, positions] += symbols[(j, ell)]
        return agg


def build_decoder_bank(
    channel: ChannelRealization,
    plan: LayerPlan,
    gamma: float | None = None,
    cap: int = DEFAULT_ENUM_CAP,
) -> DecoderBank:
    kk = plan.k_users
    if gamma is None:
        _, gamma = power_normalizer(channel, plan)
    sets = {}
    decoders = {}
    scatter = {}
    for ell in range(1, kk - 1):
        lay = plan.layer(ell)
        if not lay.active:
            continue
        v_set = monomial_set(channel, ell, plan.n)
        num = len(v_set.pair_order)
        for k in range(ell, kk + 1):
            s_set = desired_set(channel, k, ell, plan.n)
            i_set = interference_set(channel, k, ell, plan.n)
            sets[(k, ell)] = (s_set, i_set)
            decoders[(k, ell)] = _alignment_decoder(
                s_set, i_set, plan, gamma, k, ell, cap
            )
            # positions of h_kj * V(i) inside the interference code list
            maps = {}
            for j in range(ell, kk + 1):
                if j == k:
                    continue
                place = (plan.n + 1) ** (num - 1 - v_set.pair_order.index((k, j)))
                codes = v_set.codes + np.int64(place)
                pos = np.searchsorted(i_set.codes, codes)
                assert np.array_equal(i_set.codes[pos], codes)
                maps[j] = pos
            scatter[(k, ell)] = maps

    pair_decoders = {}
    lay = plan.layer(kk - 1)
    if lay.active:
        q = lay.q_level
        _check_cap("pair decode", (2 * q + 1) ** 2, cap)
        for k in (kk - 1, kk):
            exponent = float(plan.alpha.alpha(k) - lay.power_offset)
            scale = gamma / q * plan.p ** (exponent / 2)
            dims = np.array([channel.coeff(k, kk - 1), channel.coeff(k, kk)])
            pair_decoders[k] = NearestPointDecoder(
                scale=scale, dim_values=dims, half_ranges=np.array([q, q])
            )

    last_decoder = None
    lay = plan.layer(kk)
    if lay.active:
        q = lay.q_level
        _check_cap("final-layer decode", 2 * q + 1, cap)
        exponent = float(plan.alpha.alpha(kk) - lay.power_offset)
        scale = gamma / q * plan.p ** (exponent / 2)
        last_decoder = NearestPointDecoder(
            scale=scale,
            dim_values=np.array([channel.coeff(kk, kk)]),
            half_ranges=np.array([q]),
        )

    return DecoderBank(
        channel=channel,
        plan=plan,
        gamma=gamma,
        cap=cap,
        sets=sets,
        decoders=decoders,
        pair_decoders=pair_decoders,
        last_decoder=last_decoder,
        scatter=scatter,
    )


@dataclass(eq=False)
class DecodeResult:
    """Batch decode output: estimates per data cell plus success flags."""

    symbols: dict[tuple[int, int], np.ndarray]  # (user, layer) -> (T, N) ints
    aggregates: dict[tuple[int, int], np.ndarray]  # alignment cells, (T, |I|)
    desired_ok: dict[tuple[int, int], np.ndarray]  # (T,) bool per data cell
    aggregate_ok: dict[tuple[int, int], np.ndarray]

    def frame_ok(self) -> np.ndarray:
        flags = None
        for ok in self.desired_ok.values():
            flags = ok if flags is None else flags & ok
        return flags


def successive_decode_batch(
    y: np.ndarray,
    bank: DecoderBank,
    truth: dict[tuple[int, int], np.ndarray] | None = None,
    force: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] | None = None,
) -> DecodeResult:
    """Layer-peeling decode of a (trials, K) observation batch.

    Alignment layers are decoded at every participating receiver and their
    reconstructions subtracted; the next-to-last layer is decoded jointly
    at the last two receivers; the last layer at receiver K.  ``truth``
    enables the per-cell success flags; ``force`` overrides the decode at
    chosen (receiver, layer) cells before peeling, to make error
    propagation observable on demand.
    """
    plan = bank.plan
    kk = plan.k_users
    force = force or {}
    residual = np.array(y, dtype=float, copy=True)
    decoded: dict[tuple[int, int], np.ndarray] = {}
    aggregates: dict[tuple[int, int], np.ndarray] = {}
    desired_ok: dict[tuple[int, int], np.ndarray] = {}
    aggregate_ok: dict[tuple[int, int], np.ndarray] = {}

    for ell in range(1, kk - 1):
        lay = plan.layer(ell)
        if not lay.active:
            continue
        for k in range(ell, kk + 1):
            dec = bank.decoders[(k, ell)]
            n_data = len(bank.sets[(k, ell)][0])
            vectors = dec.unravel(dec.decode(residual[:, k - 1]))
            if (k, ell) in force:
                fq, fqp = force[(k, ell)]
                vectors = np.hstack(
                    [
                        np.broadcast_to(fq, (len(vectors), n_data)),
                        np.broadcast_to(fqp, (len(vectors), vectors.shape[1] - n_data)),
                    ]
                ).astype(np.int64)
            residual[:, k - 1] -= dec.point_value(vectors)
            q_hat, qp_hat = vectors[:, :n_data], vectors[:, n_data:]
            decoded[(k, ell)] = q_hat
            aggregates[(k, ell)] = qp_hat
            if truth is not None:
                desired_ok[(k, ell)] = np.all(q_hat == truth[(k, ell)], axis=1)
                agg_true = bank.aggregate_truth(truth, k, ell)
                aggregate_ok[(k, ell)] = np.all(qp_hat == agg_true, axis=1)

    lay = plan.layer(kk - 1)
    if lay.active:
        for k in (kk - 1, kk):
            dec = bank.pair_decoders[k]
            vectors = dec.unravel(dec.decode(residual[:, k - 1]))
            if (k, kk - 1) in force:
                fq, fqp = force[(k, kk - 1)]
                vectors = np.broadcast_to(
                    np.concatenate([np.atleast_1d(fq), np.atleast_1d(fqp)]),
                    vectors.shape,
                ).astype(np.int64)
            residual[:, k - 1] -= dec.point_value(vectors)
            own = vectors[:, 0:1] if k == kk - 1 else vectors[:, 1:2]
            decoded[(k, kk - 1)] = own
            if truth is not None:
                desired_ok[(k, kk - 1)] = np.all(own == truth[(k, kk - 1)], axis=1)

    lay = plan.layer(kk)
    if lay.active:
        dec = bank.last_decoder
        vectors = dec.unravel(dec.decode(residual[:, kk - 1]))
        residual[:, kk - 1] -= dec.point_value(vectors)
        decoded[(kk, kk)] = vectors
        if truth is not None:
            desired_ok[(kk, kk)] = np.all(vectors == truth[(kk, kk)], axis=1)

    return DecodeResult(
        symbols=decoded,
        aggregates=aggregates,
        desired_ok=desired_ok,
        aggregate_ok=aggregate_ok,
    )


def successive_decode(
    frame: ReceivedFrame,
    channel: ChannelRealization,
    plan: LayerPlan,
    gamma: float | None = None,
    cap: int = DEFAULT_ENUM_CAP,
    bank: DecoderBank | None = None,
    force: dict | None = None,
) -> DecodeResult:
    """Single-frame convenience wrapper around the batch decoder."""
    if bank is None:
        bank = build_decoder_bank(channel, plan, gamma=gamma, cap=cap)
    truth = {cell: np.atleast_2d(q) for cell, q in frame.symbols.items()}
    return successive_decode_batch(frame.y[None, :], bank, truth=truth, force=force)


# ---------------------------------------------------------------------------
# Monte Carlo harness


@dataclass(frozen=True)
class SimConfig:
    """Everything a run needs; the report embeds it for provenance."""

    alphas: tuple[Fraction, ...]
    n: int
    p_grid: tuple[float, ...]
    trials: int
    seed: int = 0
    eps: Fraction | None = None
    h_min: float = 0.5
    h_max: float = 2.0
    noise_std: float = 1.0
    enum_cap: int = DEFAULT_ENUM_CAP
    ser_threshold: float = 1e-2
    with_dmin: bool = False

    def profile(self) -> AlphaProfile:
        return AlphaProfile.parse(self.alphas)

    def to_json_dict(self) -> dict:
        return {
            "alphas": [str(Fraction(a)) for a in self.alphas],
            "n": self.n,
            "p_grid": list(self.p_grid),
            "trials": self.trials,
            "seed": self.seed,
            "eps": None if self.eps is None else str(Fraction(self.eps)),
            "h_min": self.h_min,
            "h_max": self.h_max,
            "noise_std": self.noise_std,
            "enum_cap": self.enum_cap,
            "ser_threshold": self.ser_threshold,
            "with_dmin": self.with_dmin,
        }


@dataclass(eq=False)
class SimReport:
    """Decode statistics per (P, user, layer) plus per-P summaries."""

    config: dict
    channel_seed: int
    h_matrix: list
    cells: list  # dicts: p, user, layer, trials, errors, ser, dmin, tbound
    layers: list  # dicts: p, layer, trials, errors, ser
    summaries: list  # dicts: p, gdof_estimate, frame_success_rate
    schema_version: str = SCHEMA_VERSION

    def to_json(self) -> str:
        payload = {
            "schema_version": self.schema_version,
            "config": self.config,
            "channel_seed": self.channel_seed,
            "h_matrix": self.h_matrix,
            "cells": self.cells,
            "layers": self.layers,
            "summaries": self.summaries,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def csv_rows(self) -> list[list]:
        header = ["p", "user", "layer", "trials", "errors", "ser", "dmin", "tbound"]
        rows = [header]
        for cell in self.cells:
            rows.append([cell[name] for name in header])
        return rows

    def cell(self, p: float, user: int, layer: int) -> dict:
        for entry in self.cells:
            if entry["p"] == p and entry["user"] == user and entry["layer"] == layer:
                return entry
        raise KeyError((p, user, layer))


def estimate_gdof(plan: LayerPlan, reliable_cells: list[tuple[int, int]]) -> float:
    """Sum of per-symbol entropies over reliable cells, in GDoF units."""
    bits = 0.0
    for _, ell in reliable_cells:
        lay = plan.layer(ell)
        bits += lay.n_dims * math.log2(1 + 2 * lay.q_level)
    return bits / (0.5 * math.log2(plan.p))


def run_monte_carlo(config: SimConfig) -> SimReport:
    """Seeded SER sweep over the P grid.

    The trial randomness is re-seeded identically at every P point (common
    random numbers), noise first, so SER curves across P are directly
    comparable.  A cell's estimated rate enters the sum-GDoF estimate only
    when its measured SER is at or below the configured threshold.
    """
    alpha = config.profile()
    kk = alpha.k_users
    if config.trials < 0:
        raise ValueError("trials must be >= 0")
    for p in config.p_grid:  # validate the whole grid before any work
        build_layer_plan(alpha, config.n, eps=config.eps, p=p)
    channel = sample_channel(kk, config.h_min, config.h_max, config.seed)
    cells = []
    layer_rows = []
    summaries = []
    for p in config.p_grid:
        plan = build_layer_plan(alpha, config.n, eps=config.eps, p=p)
        _, gamma = power_normalizer(channel, plan)
        bank = build_decoder_bank(channel, plan, gamma=gamma, cap=config.enum_cap)
        configs = {
            k: build_transmit_config(channel, plan, k, gamma=gamma)
            for k in range(1, kk + 1)
        }
        data_cells = [
            (k, ell)
            for k in range(1, kk + 1)
            for ell in range(1, k + 1)
            if plan.layer(ell).active
        ]
        if config.trials:
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=config.seed, spawn_key=(1,))
            )
            noise = config.noise_std * rng.standard_normal((config.trials, kk))
            symbols = draw_symbols_batch(plan, rng, config.trials)
            y = synthesize_batch(channel, plan, configs, symbols, noise)
            result = successive_decode_batch(y, bank, truth=symbols)
            frame_rate = float(np.mean(result.frame_ok()))
        else:
            result = None
            frame_rate = None

        reliable = []
        layer_totals: dict[int, list[int]] = {}
        for k, ell in data_cells:
            if result is not None:
                errors = int(config.trials - np.sum(result.desired_ok[(k, ell)]))
                ser = errors / config.trials
                if ser <= config.ser_threshold:
                    reliable.append((k, ell))
            else:
                errors, ser = 0, None
            dmin = None
            tb = None
            if ell <= kk - 2:
                tb = t_bound(channel, plan, k, ell, gamma)
                if config.with_dmin:
                    dmin = dmin_bruteforce(channel, k, ell, plan, gamma, config.enum_cap)
            cells.append(
                {
                    "p": p,
                    "user": k,
                    "layer": ell,
                    "trials": config.trials,
                    "errors": errors,
                    "ser": ser,
                    "dmin": dmin,
                    "tbound": tb,
                }
            )
            totals = layer_totals.setdefault(ell, [0, 0])
            totals[0] += config.trials
            totals[1] += errors
        for ell in sorted(layer_totals):
            trials_total, errors_total = layer_totals[ell]
            layer_rows.append(
                {
                    "p": p,
                    "layer": ell,
                    "trials": trials_total,
                    "errors": errors_total,
                    "ser": errors_total / trials_total if trials_total else None,
                }
            )
        summaries.append(
            {
                "p": p,
                "gdof_estimate": (
                    estimate_gdof(plan, reliable) if result and p > 1.0 else None
                ),
                "frame_success_rate": frame_rate,
            }
        )
    return SimReport(
        config=config.to_json_dict(),
        channel_seed=config.seed,
        h_matrix=channel.h.tolist(),
        cells=cells,
        layers=layer_rows,
        summaries=summaries,
    )
