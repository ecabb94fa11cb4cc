"""Trajectory prediction network: encoder, interactor, decoder.

Encoder: per-context MLP+GRU tracks for the target, neighbors, and lane-node
pose runs; neighbor-to-lane cross attention fused into the lane encodings;
graph-attention rounds over the successor adjacency.

Interactor: target-to-lane and target-to-agent attention, Gumbel-Softmax goal
proposals over lane nodes, and a K-row mode embedding refined through four
sequential cross-attention blocks (target, neighbors, lanes, goals).

Decoder: per-mode mixing weights, plus a GRU unrolled over the horizon from a
constant per-mode input (fused target state, latent noise, mode encoding),
with Laplace location and scale heads at every step.

All randomness enters through an explicit ForwardNoise bundle, so a forward
pass is a pure function of (inputs, parameters, noise).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import nn
from ..autodiff import tensor as T
from ..autodiff.rng import RngStream
from ..autodiff.tensor import Tensor
from ..scenes.features import DEFAULT_LIMITS, encode_features
from ..scenes.types import ModelInputs, Scene
from .config import ModelConfig, PredictionSet

# positions and speeds are scaled into roughly unit range before the MLPs;
# the location head emits per-step displacements in units of OUTPUT_SCALE
# meters, and their running sum is the trajectory
COORD_SCALE = 0.1
OUTPUT_SCALE = 5.0


@dataclass
class Encodings:
    h_target: Tensor  # [1, D]
    h_nbr: Tensor  # [N_max, D], masked rows zero
    nbr_mask: np.ndarray
    h_lane: Tensor  # [V_max, D], masked rows zero
    node_mask: np.ndarray
    adjacency_mask: np.ndarray


@dataclass
class GoalProposal:
    goal_weights: object  # [S, V_max]; rows are simplices over unmasked nodes
    h_goal: object  # [S, 2D]


@dataclass
class InteractOut:
    k_enc: Tensor  # [K, D]
    goals: GoalProposal
    h_target_fused: Tensor  # [1, D]


@dataclass
class ForwardNoise:
    """Frozen stochastic inputs for one forward pass."""

    gumbel: np.ndarray  # [S, V_max] standard Gumbel
    z: np.ndarray  # [K, D] latent samples, already scaled by sigma_z


class TrajectoryModel:
    """Graph-conditioned multimodal trajectory predictor."""

    def __init__(self, cfg: ModelConfig, seed: int = 0, dtype=np.float32):
        self.cfg = cfg
        self.seed = int(seed)
        self.dtype = np.dtype(dtype)
        self.store = nn.ParameterStore()
        rng = RngStream(seed).derive("init")
        D, H = cfg.embed_dim, cfg.heads
        add = self.store

        self.enc_target_mlp = nn.init_mlp(add, rng, "enc.target.mlp", [6, D, D], dtype)
        self.enc_target_gru = nn.init_gru(add, rng, "enc.target.gru", D, D, dtype)
        self.enc_nbr_mlp = nn.init_mlp(add, rng, "enc.nbr.mlp", [6, D, D], dtype)
        self.enc_nbr_gru = nn.init_gru(add, rng, "enc.nbr.gru", D, D, dtype)
        self.enc_lane_mlp = nn.init_mlp(add, rng, "enc.lane.mlp", [4, D, D], dtype)
        self.enc_lane_gru = nn.init_gru(add, rng, "enc.lane.gru", D, D, dtype)
        self.atn_n2l = nn.init_mha(add, rng, "enc.atn_n2l", D, H, dtype)
        self.lane_fuse = nn.init_linear(add, rng, "enc.lane_fuse", 2 * D, D, dtype=dtype)
        self.gats = [nn.init_gat(add, rng, f"enc.gat{i}", D, D, dtype)
                     for i in range(cfg.gat_layers)]

        self.atn_t2l = nn.init_mha(add, rng, "inter.atn_t2l", D, H, dtype)
        self.atn_t2a = nn.init_mha(add, rng, "inter.atn_t2a", D, H, dtype)
        self.target_fuse = nn.init_linear(add, rng, "inter.target_fuse", 3 * D, D, dtype=dtype)
        self.goal_logit_mlp = nn.init_mlp(add, rng, "inter.goal_logits", [2 * D, D, 1], dtype)
        self.goal_proj = nn.init_linear(add, rng, "inter.goal_proj", 2 * D, D, dtype=dtype)
        self.k_embed = nn.init_embedding(add, rng, "inter.k_embed", cfg.modes, D, dtype)
        self.blocks = []
        for name in ("self", "nbr", "lane", "goal"):
            self.blocks.append((
                name,
                nn.init_mha(add, rng, f"inter.block_{name}.mha", D, H, dtype),
                nn.init_norm(add, f"inter.block_{name}.norm", D, dtype),
            ))
        self.norm_plain = nn.init_norm(add, "inter.norm_plain", D, dtype)

        self.pi_mlp = nn.init_mlp(add, rng, "dec.pi", [D, D, 1], dtype)
        self.dec_gru = nn.init_gru(add, rng, "dec.gru", 3 * D, D, dtype)
        self.mu_mlp = nn.init_mlp(add, rng, "dec.mu", [D, D, 2], dtype)
        self.b_mlp = nn.init_mlp(add, rng, "dec.b", [D, D, 2], dtype)

    # -- noise ------------------------------------------------------------

    def draw_noise(self, rng: RngStream, v_max: int) -> ForwardNoise:
        """Draw one forward pass worth of noise; order is fixed (goals, then z)."""
        gumbel = rng.gumbel((self.cfg.goal_samples, v_max), dtype=self.dtype)
        z = rng.normal((self.cfg.modes, self.cfg.embed_dim), dtype=self.dtype)
        return ForwardNoise(gumbel=gumbel, z=z * np.asarray(self.cfg.sigma_z, self.dtype))

    # -- stages -----------------------------------------------------------

    def encode(self, inputs: ModelInputs) -> Encodings:
        dt = self.dtype
        tf = np.asarray(inputs.target_feats, dtype=dt).copy()
        nf = np.asarray(inputs.nbr_feats, dtype=dt).copy()
        lf = np.asarray(inputs.node_feats, dtype=dt).copy()
        tf[:, :3] *= dt.type(COORD_SCALE)
        nf[:, :, :3] *= dt.type(COORD_SCALE)
        lf[:, :, :2] *= dt.type(COORD_SCALE)
        nbr_mask = np.asarray(inputs.nbr_mask, dtype=bool)
        node_mask = np.asarray(inputs.node_mask, dtype=bool)

        _, h_target = nn.gru(self.enc_target_gru, nn.mlp(self.enc_target_mlp, Tensor(tf)))
        h_target = T.reshape(h_target, (1, -1))

        # neighbors run batched through the shared GRU, padded rows zeroed after
        nbr_x = nn.mlp(self.enc_nbr_mlp, Tensor(nf))  # [N, h+1, D]
        _, h_nbr = nn.gru(self.enc_nbr_gru, T.swapaxes(nbr_x, 0, 1))  # [N, D]
        h_nbr = h_nbr * nbr_mask[:, None].astype(dt)

        lane_x = nn.mlp(self.enc_lane_mlp, Tensor(lf))  # [V, P, D]
        _, h_lane = nn.gru(self.enc_lane_gru, T.swapaxes(lane_x, 0, 1))  # [V, D]
        h_lane = h_lane * node_mask[:, None].astype(dt)

        atn = nn.multi_head_attention(self.atn_n2l, h_lane, h_nbr, key_mask=nbr_mask)
        h_lane = nn.linear(self.lane_fuse, T.concat([h_lane, atn], axis=1))
        h_lane = h_lane * node_mask[:, None].astype(dt)
        for gat in self.gats:
            h_lane = nn.gat_layer(gat, h_lane, inputs.adjacency_mask, node_mask)
        return Encodings(h_target, h_nbr, nbr_mask, h_lane, node_mask,
                         np.asarray(inputs.adjacency_mask, dtype=bool))

    def propose_goals(self, h_target: Tensor, h_lane: Tensor, node_mask: np.ndarray,
                      atn_t2l: Tensor, gumbel: np.ndarray) -> GoalProposal:
        if not node_mask.any():
            raise nn.DegenerateInput("goal proposal over a fully masked lane graph")
        v_max = h_lane.shape[0]
        s = self.cfg.goal_samples
        pair = T.concat([T.broadcast_to(h_target, (v_max, h_target.shape[1])), h_lane], axis=1)
        logits = T.reshape(nn.mlp(self.goal_logit_mlp, pair), (v_max,))
        rows = [nn.gumbel_softmax(logits, gumbel[i], self.cfg.tau, node_mask)
                for i in range(s)]
        weights = T.stack(rows, axis=0)  # [S, V]
        core = T.matmul(weights, h_lane)  # [S, D]
        h_goal = T.concat([core, T.broadcast_to(atn_t2l, (s, atn_t2l.shape[1]))], axis=1)
        return GoalProposal(weights, h_goal)

    def _uniform_goals(self, h_lane: Tensor, node_mask: np.ndarray,
                       atn_t2l: Tensor) -> GoalProposal:
        s = self.cfg.goal_samples
        w = node_mask.astype(self.dtype)
        w = w / max(w.sum(), 1.0)
        weights = Tensor(np.broadcast_to(w, (s, w.shape[0])).copy())
        core = T.matmul(weights, h_lane)
        h_goal = T.concat([core, T.broadcast_to(atn_t2l, (s, atn_t2l.shape[1]))], axis=1)
        return GoalProposal(weights, h_goal)

    def interact(self, enc: Encodings, noise: ForwardNoise) -> InteractOut:
        cfg = self.cfg
        atn_t2l = nn.multi_head_attention(self.atn_t2l, enc.h_target, enc.h_lane,
                                          key_mask=enc.node_mask)  # [1, D]
        atn_t2a = nn.multi_head_attention(self.atn_t2a, enc.h_target, enc.h_nbr,
                                          key_mask=enc.nbr_mask)  # [1, D]
        fused = nn.linear(self.target_fuse,
                          T.concat([enc.h_target, atn_t2l, atn_t2a], axis=1))  # [1, D]

        if cfg.use_goal_proposals:
            goals = self.propose_goals(enc.h_target, enc.h_lane, enc.node_mask,
                                       atn_t2l, noise.gumbel)
        else:
            goals = self._uniform_goals(enc.h_lane, enc.node_mask, atn_t2l)

        x = self.k_embed + T.broadcast_to(fused, (cfg.modes, cfg.embed_dim))  # [K, D]
        if not cfg.use_cross_attention:
            return InteractOut(nn.layer_norm(self.norm_plain, x), goals, fused)

        sources = {
            "self": (fused, None),
            "nbr": (enc.h_nbr, enc.nbr_mask),
            "lane": (enc.h_lane, enc.node_mask),
        }
        for name, mha, norm in self.blocks:
            if name == "goal":
                if not cfg.use_goal_proposals:
                    continue
                src, mask = nn.linear(self.goal_proj, goals.h_goal), None
            else:
                src, mask = sources[name]
            x = nn.layer_norm(norm, x + nn.multi_head_attention(mha, x, src, key_mask=mask))
        return InteractOut(x, goals, fused)

    def decode(self, k_enc: Tensor, h_target_fused: Tensor, noise: ForwardNoise) -> PredictionSet:
        cfg = self.cfg
        K, D, f = cfg.modes, cfg.embed_dim, cfg.future_steps
        pi = T.softmax(T.reshape(nn.mlp(self.pi_mlp, k_enc), (K,)), axis=-1)
        parts = [T.broadcast_to(h_target_fused, (K, D)), Tensor(noise.z), k_enc]
        dec_in = T.concat(parts, axis=1)  # [K, 3D]
        seq = T.broadcast_to(T.reshape(dec_in, (1, K, 3 * D)), (f, K, 3 * D))
        h_seq, _ = nn.gru(self.dec_gru, seq)  # [f, K, D]
        steps = T.swapaxes(nn.mlp(self.mu_mlp, h_seq), 0, 1) * OUTPUT_SCALE
        mu = T.cumsum(steps, axis=1)  # [K, f, 2] positions from displacements
        b = T.swapaxes(T.softplus(nn.mlp(self.b_mlp, h_seq)), 0, 1) + 1e-3
        return PredictionSet(pi=pi, mu=mu, b=b)

    # -- composition --------------------------------------------------------

    def forward(self, inputs: ModelInputs, noise: ForwardNoise):
        enc = self.encode(inputs)
        inter = self.interact(enc, noise)
        pred = self.decode(inter.k_enc, inter.h_target_fused, noise)
        return pred, inter.goals

    def predict(self, scene: Scene, seed: int = 0,
                limits: tuple[int, int] = DEFAULT_LIMITS) -> PredictionSet:
        """Inference on one target-centric scene; detached numpy outputs."""
        pred, _ = self.predict_with_goals(scene, seed, limits)
        return pred

    def predict_with_goals(self, scene: Scene, seed: int = 0,
                           limits: tuple[int, int] = DEFAULT_LIMITS):
        inputs = encode_features(scene, limits)
        noise = self.draw_noise(RngStream(seed), limits[1])
        pred, goals = self.forward(inputs, noise)
        weights = np.asarray(getattr(goals.goal_weights, "values", goals.goal_weights))
        return pred.numpy(), weights
