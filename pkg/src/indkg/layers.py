"""Relational graph convolution layers over extracted subgraphs.

All three layers share the same message layout: every stored edge
(src, dst, rel) yields a forward message src -> dst and an inverse message
dst -> src, so information reaches both endpoints of the target pair. The
basis-decomposed layers maintain one logical weight slot per
(relation, direction); slot index = 2 * rel + direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Tensor,
    circular_correlation,
    concat,
    gather_rows,
    matmul,
    mul,
    relu,
    reshape,
    segment_sum,
    sigmoid,
)
from .errors import ShapeMismatch, UnknownCompositionOp
from .subgraph import Subgraph

FWD, BWD = 0, 1


@dataclass
class LayerParams:
    d_in: int
    d_out: int
    num_relations: int
    bases: Tensor = None        # (B, d_in * d_out)
    coeffs: Tensor = None       # (2 * num_relations, B)
    self_weight: Tensor = None  # (d_in, d_out)
    att_a: Tensor = None        # (2 * d_out + 2 * d_rel,), attention layer only
    w_fwd: Tensor = None        # composition layer weights, d_rel == d_in
    w_bwd: Tensor = None
    w_self: Tensor = None
    w_rel: Tensor = None

    def tensors(self, prefix: str) -> dict:
        out = {}
        for name in ("bases", "coeffs", "self_weight", "att_a",
                     "w_fwd", "w_bwd", "w_self", "w_rel"):
            t = getattr(self, name)
            if t is not None:
                out[f"{prefix}.{name}"] = t
        return out


def _glorot(rng, *shape):
    scale = np.sqrt(2.0 / sum(shape)) if len(shape) > 1 else 1.0 / np.sqrt(shape[0])
    return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True)


def init_basis_layer(rng, d_in, d_out, num_relations, num_bases,
                     d_rel=None, attention=False) -> LayerParams:
    p = LayerParams(d_in, d_out, num_relations)
    p.bases = _glorot(rng, num_bases, d_in * d_out)
    p.coeffs = _glorot(rng, 2 * num_relations, num_bases)
    p.self_weight = _glorot(rng, d_in, d_out)
    if attention:
        p.att_a = _glorot(rng, 2 * d_out + 2 * d_rel)
    return p


def init_comp_layer(rng, d_in, d_out, num_relations) -> LayerParams:
    p = LayerParams(d_in, d_out, num_relations)
    p.w_fwd = _glorot(rng, d_in, d_out)
    p.w_bwd = _glorot(rng, d_in, d_out)
    p.w_self = _glorot(rng, d_in, d_out)
    p.w_rel = _glorot(rng, d_in, d_out)
    return p


def _message_arrays(sub: Subgraph):
    """Bidirectional message list: (src, dst, rel, dir) plus 1/c normalization.

    c is the number of incoming messages a node receives for one
    (relation, direction) slot.
    """
    if len(sub.edges) == 0:
        z = np.empty(0, dtype=np.int64)
        return z, z, z, z, np.empty(0, dtype=np.float64)
    src, dst, rel = sub.edges[:, 0], sub.edges[:, 1], sub.edges[:, 2]
    m = len(src)
    msrc = np.concatenate([src, dst])
    mdst = np.concatenate([dst, src])
    mrel = np.concatenate([rel, rel])
    mdir = np.concatenate([np.full(m, FWD, np.int64), np.full(m, BWD, np.int64)])
    slot = 2 * mrel + mdir
    key = mdst * (2 * (int(rel.max()) + 1)) + slot
    _, inverse, counts = np.unique(key, return_inverse=True, return_counts=True)
    norm = 1.0 / counts[inverse]
    return msrc, mdst, mrel, mdir, norm


def _slot_weight(P: LayerParams, slot: int) -> Tensor:
    """Basis-decomposed weight for one (relation, direction) slot."""
    mixed = matmul(gather_rows(P.coeffs, [slot]), P.bases)  # (1, d_in*d_out)
    return reshape(mixed, (P.d_in, P.d_out))


def _check_features(sub: Subgraph, H: Tensor, d_in: int):
    if H.shape != (sub.num_nodes, d_in):
        raise ShapeMismatch(
            f"features {H.shape} do not match ({sub.num_nodes}, {d_in})")


def rgcn_layer(sub: Subgraph, H: Tensor, P: LayerParams, activation=True) -> Tensor:
    """Basis-decomposed R-GCN convolution with mean aggregation per slot."""
    _check_features(sub, H, P.d_in)
    n = sub.num_nodes
    out = matmul(H, P.self_weight)
    msrc, mdst, mrel, mdir, norm = _message_arrays(sub)
    for slot in np.unique(2 * mrel + mdir):
        mask = (2 * mrel + mdir) == slot
        W = _slot_weight(P, int(slot))
        msgs = matmul(gather_rows(H, msrc[mask]), W)
        msgs = mul(msgs, norm[mask][:, None])
        out = out + segment_sum(msgs, mdst[mask], n)
    return relu(out) if activation else out


def rel_att_layer(sub: Subgraph, H: Tensor, P: LayerParams, rel_emb: Tensor,
                  target_rel: int, activation=True) -> Tensor:
    """R-GCN convolution with per-edge sigmoid attention.

    Each message from j to i under slot weight W is scaled by
    sigmoid(a . [W h_j ++ W h_i ++ e_rel ++ e_target]).
    """
    _check_features(sub, H, P.d_in)
    n = sub.num_nodes
    out = matmul(H, P.self_weight)
    msrc, mdst, mrel, mdir, norm = _message_arrays(sub)
    slots = 2 * mrel + mdir
    for slot in np.unique(slots):
        mask = slots == slot
        m = int(mask.sum())
        W = _slot_weight(P, int(slot))
        wh_src = matmul(gather_rows(H, msrc[mask]), W)
        wh_dst = matmul(gather_rows(H, mdst[mask]), W)
        e_rel = gather_rows(rel_emb, np.full(m, int(slot) // 2, np.int64))
        e_tgt = gather_rows(rel_emb, np.full(m, target_rel, np.int64))
        z = concat([wh_src, wh_dst, e_rel, e_tgt], axis=1)
        alpha = sigmoid(matmul(z, P.att_a))
        msgs = mul(wh_src, reshape(alpha, (m, 1)))
        msgs = mul(msgs, norm[mask][:, None])
        out = out + segment_sum(msgs, mdst[mask], n)
    return relu(out) if activation else out


COMP_OPS = ("sub", "mult", "corr")


def _compose(h: Tensor, e: Tensor, op: str) -> Tensor:
    if op == "sub":
        return h - e
    if op == "mult":
        return mul(h, e)
    if op == "corr":
        return circular_correlation(h, e)
    raise UnknownCompositionOp(op)


def rel_comp_layer(sub: Subgraph, H: Tensor, E_rel: Tensor, P: LayerParams,
                   op: str = "sub", activation=True):
    """Composition-based convolution; also transforms the relation table.

    Neighbor features are composed with their relation embedding before the
    per-direction projection; requires d_rel == d_in.
    """
    _check_features(sub, H, P.d_in)
    if E_rel.shape[1] != P.d_in:
        raise ShapeMismatch("composition layer requires d_rel == d_in")
    if op not in COMP_OPS:
        raise UnknownCompositionOp(op)
    n = sub.num_nodes
    out = matmul(H, P.w_self)
    msrc, mdst, mrel, mdir, _ = _message_arrays(sub)
    for direction, W in ((FWD, P.w_fwd), (BWD, P.w_bwd)):
        mask = mdir == direction
        if not mask.any():
            continue
        hj = gather_rows(H, msrc[mask])
        er = gather_rows(E_rel, mrel[mask])
        phi = _compose(hj, er, op)
        out = out + segment_sum(matmul(phi, W), mdst[mask], n)
    new_rel = matmul(E_rel, P.w_rel)
    return (relu(out) if activation else out), new_rel
