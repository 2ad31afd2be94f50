"""Training loops for the two model families.

Both loops are deterministic functions of (dataset, config, seed): every
stochastic choice draws from an RNG stream derived from the master seed and
the position of the item, so logs and resulting parameters are reproducible
run to run.
"""

from __future__ import annotations

import copy
import logging
import time

import numpy as np

from .config import RunConfig
from .errors import NonFiniteLoss
from .evaluate import (
    MonitorState,
    classification_metrics,
    early_stop_decision,
)
from .kgcore import DatasetBundle
from .model import (
    Adam,
    DecoderKind,
    EntityEncoderParams,
    ModelParams,
    init_entity_embeddings,
    init_entity_encoder,
    init_model,
    kge_score,
    margin_loss,
    subgraph_score,
)
from .autodiff import gather_rows, reshape
from .sampling import (
    NegativeSpec,
    corrupt_triple,
    make_classification_batch,
    make_train_instance,
    sample_meta_task,
)

log = logging.getLogger(__name__)


def decoder_from_config(cfg: RunConfig) -> DecoderKind:
    return DecoderKind(cfg.decoder, p=cfg.transe_p, margin=cfg.margin)


def _snapshot(params: dict) -> dict:
    return {name: t.data.copy() for name, t in params.items()}


def _restore(params: dict, snap: dict) -> None:
    for name, t in params.items():
        t.data[...] = snap[name]


def _check_finite_loss(value: float, params: dict, context: str) -> None:
    if np.isfinite(value):
        return
    diag = {name: float(np.abs(t.data).max()) for name, t in params.items()}
    log.error("non-finite loss in %s; max-abs per tensor: %s", context, diag)
    raise NonFiniteLoss(f"{context}: loss = {value}")


def _max_nodes(cfg: RunConfig):
    return cfg.max_nodes if cfg.max_nodes > 0 else None


def validation_classification(model: ModelParams, graph, triples, cfg: RunConfig,
                              seed_tag: int):
    """AUC / AUC-PR of the current model on a classification batch."""
    rng = np.random.default_rng((cfg.seed, 0x5EED, seed_tag))
    batch = make_classification_batch(graph, triples, cfg.k, rng,
                                      max_nodes=_max_nodes(cfg))
    scores = np.array([subgraph_score(model, it.sub, it.labels, it.rel).item()
                       for it in batch.items])
    return classification_metrics(scores, batch.labels01)


def train_subgraph_model(bundle: DatasetBundle, cfg: RunConfig):
    """Margin-loss training of the subgraph scorer with per-epoch validation.

    Returns (model at best validation AUC-PR, list of metric-log dicts).
    """
    rng = np.random.default_rng((cfg.seed, 0x1017))
    model = init_model(bundle.vocab.num_relations, cfg.k, dim=cfg.dim,
                       rel_dim=cfg.rel_dim, num_layers=cfg.num_layers,
                       num_bases=cfg.num_bases, layer_kind=cfg.layer_kind,
                       comp_op=cfg.comp_op, rng=rng)
    params = model.tensors()
    opt = Adam(params, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2,
               eps=cfg.adam_eps)
    spec = NegativeSpec(mode="both-uniform", num_neg=cfg.num_neg,
                        filtered=cfg.filtered)
    monitor = MonitorState(patience=cfg.patience, min_delta=cfg.min_delta)
    graph = bundle.train_graph
    triples = bundle.train
    records = []
    best = _snapshot(params)

    for epoch in range(cfg.epochs):
        t0 = time.monotonic()
        epoch_losses = []
        for start in range(0, len(triples), cfg.batch_size):
            batch = triples[start:start + cfg.batch_size]
            pos_scores, neg_scores = [], []
            for bi, triple in enumerate(batch.tolist()):
                item_rng = np.random.default_rng((cfg.seed, epoch, start + bi))
                inst = make_train_instance(graph, triple, cfg.k, spec, item_rng,
                                           max_nodes=_max_nodes(cfg))
                p = subgraph_score(model, inst.pos.sub, inst.pos.labels,
                                   inst.pos.rel)
                for neg in inst.negs:
                    pos_scores.append(p)
                    neg_scores.append(
                        subgraph_score(model, neg.sub, neg.labels, neg.rel))
            loss = margin_loss(pos_scores, neg_scores, cfg.margin)
            _check_finite_loss(loss.item(), params, f"epoch {epoch}")
            epoch_losses.append(loss.item())
            loss.backward()
            opt.step()
        records.append({"epoch": epoch, "split": "train",
                        "loss": float(np.mean(epoch_losses)),
                        "auc": None, "auc_pr": None,
                        "wall_ms": (time.monotonic() - t0) * 1000.0,
                        "seed": cfg.seed})

        if (epoch + 1) % cfg.check_per_epoch == 0 and len(bundle.valid):
            t1 = time.monotonic()
            auc, auc_pr = validation_classification(
                model, graph, bundle.valid, cfg, seed_tag=epoch)
            records.append({"epoch": epoch, "split": "valid", "loss": None,
                            "auc": auc, "auc_pr": auc_pr,
                            "wall_ms": (time.monotonic() - t1) * 1000.0,
                            "seed": cfg.seed})
            monitor, stop, is_best = early_stop_decision(monitor, auc_pr)
            if is_best:
                best = _snapshot(params)
            if stop:
                log.info("early stop at epoch %d (best %.4f at check %d)",
                         epoch, monitor.best_value, monitor.best_epoch)
                break

    if monitor.best_epoch >= 0:
        _restore(params, best)
    return model, records


def episode_loss(enc: EntityEncoderParams, task, graph, cfg: RunConfig, rng):
    """Margin loss of one meta-task: support-derived embeddings score the
    query triples against per-query corruptions."""
    ents = np.unique(task.support[:, [0, 2]])
    local = {int(e): i for i, e in enumerate(ents)}
    emb = init_entity_embeddings(task.support, ents, enc.psi)
    dim = enc.dim
    rel_width = enc.dec_rel.shape[1]
    pos_scores, neg_scores = [], []
    for q in task.query.tolist():
        h, r, t = (int(x) for x in q)
        h_vec = reshape(gather_rows(emb, [local[h]]), (dim,))
        t_vec = reshape(gather_rows(emb, [local[t]]), (dim,))
        r_vec = reshape(gather_rows(enc.dec_rel, [r]), (rel_width,))
        pos = kge_score(enc.decoder, h_vec, r_vec, t_vec)
        # corrupt within the task region so the negative has an embedding
        for _ in range(cfg.num_neg):
            for _attempt in range(100):
                e = int(ents[rng.integers(len(ents))])
                corrupt_head = rng.random() < 0.5
                cand = (e, r, t) if corrupt_head else (h, r, e)
                if cand != (h, r, t) and not graph.contains(*cand):
                    break
            else:
                continue
            nh = reshape(gather_rows(emb, [local[cand[0]]]), (dim,))
            nt = reshape(gather_rows(emb, [local[cand[2]]]), (dim,))
            pos_scores.append(pos)
            neg_scores.append(kge_score(enc.decoder, nh, r_vec, nt))
    if not pos_scores:
        return None
    return margin_loss(pos_scores, neg_scores, cfg.margin)


def train_entity_encoder_model(bundle: DatasetBundle, cfg: RunConfig):
    """Episodic training of the relation-derived entity initializer."""
    rng = np.random.default_rng((cfg.seed, 0x3317))
    enc = init_entity_encoder(bundle.vocab.num_relations, cfg.dim,
                              decoder_from_config(cfg), rng=rng)
    params = enc.tensors()
    opt = Adam(params, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2,
               eps=cfg.adam_eps)
    graph = bundle.train_graph
    records = []
    for episode in range(cfg.episodes):
        t0 = time.monotonic()
        ep_rng = np.random.default_rng((cfg.seed, 0xEA5, episode))
        task = sample_meta_task(graph, cfg.region_size, cfg.support_frac, ep_rng)
        loss = episode_loss(enc, task, graph, cfg, ep_rng)
        if loss is None:
            continue
        _check_finite_loss(loss.item(), params, f"episode {episode}")
        loss.backward()
        opt.step()
        if (episode + 1) % cfg.check_per_epoch == 0:
            records.append({"epoch": episode, "split": "train",
                            "loss": loss.item(), "auc": None, "auc_pr": None,
                            "wall_ms": (time.monotonic() - t0) * 1000.0,
                            "seed": cfg.seed})
    return enc, records


def entity_triple_scorer(enc: EntityEncoderParams, support_triples,
                         entity_ids):
    """Build a (h, r, t) -> score callable from support-derived embeddings."""
    entity_ids = np.asarray(entity_ids, dtype=np.int64)
    local = {int(e): i for i, e in enumerate(entity_ids)}
    emb = init_entity_embeddings(support_triples, entity_ids, enc.psi).data
    dec_rel = enc.dec_rel.data
    kind = enc.decoder

    def score(triple) -> float:
        h, r, t = (int(x) for x in triple)
        if h not in local or t not in local:
            return float("-inf")  # unembeddable candidate can never win
        hv, tv, rv = emb[local[h]], emb[local[t]], dec_rel[r]
        if kind.name == "transe":
            diff = hv + rv - tv
            if kind.p == 1.0:
                return float(-np.abs(diff).sum())
            return float(-np.linalg.norm(diff, ord=kind.p))
        if kind.name == "distmult":
            return float((hv * rv * tv).sum())
        d2 = len(hv) // 2
        rot_re = hv[:d2] * np.cos(rv) - hv[d2:] * np.sin(rv)
        rot_im = hv[:d2] * np.sin(rv) + hv[d2:] * np.cos(rv)
        mod = np.hypot(rot_re - tv[:d2], rot_im - tv[d2:])
        return float(kind.margin - mod.sum())

    return score


def subgraph_item_scorer(model: ModelParams):
    """Scorer over ScoredItems for the evaluation protocols."""
    def score(item) -> float:
        return subgraph_score(model, item.sub, item.labels, item.rel).item()
    return score
