"""Shared generators and independent oracles for the test suite.

The oracles deliberately use different algorithms from the library code
(matrix-power reachability instead of BFS, dense adjacency message passing,
explicit pair counting) so agreement is meaningful.
"""

import numpy as np

from indkg.kgcore import build_graph


# -- random graphs ----------------------------------------------------------

def random_triples(rng, n_entities, n_relations, density):
    """Directed multigraph triples without self-loops, density per ordered pair."""
    triples = []
    for h in range(n_entities):
        for t in range(n_entities):
            if h == t:
                continue
            if rng.random() < density:
                triples.append((h, int(rng.integers(n_relations)), t))
    return np.asarray(triples, dtype=np.int64).reshape(-1, 3)


def random_graph(rng, n_entities=20, n_relations=3, density=0.15):
    triples = random_triples(rng, n_entities, n_relations, density)
    return build_graph(triples, n_entities, n_relations), triples


# -- distance / extraction oracles ------------------------------------------

def masked_adjacency(triples, n, target):
    """Boolean undirected adjacency with exactly the target triple removed."""
    A = np.zeros((n, n), dtype=bool)
    tgt = tuple(int(x) for x in target)
    for h, r, t in np.asarray(triples).tolist():
        if (h, r, t) == tgt:
            continue
        A[h, t] = True
        A[t, h] = True
    return A


def matrix_power_distances(A, source, max_steps):
    """dist[i] = first s <= max_steps with a length-s walk source -> i."""
    n = A.shape[0]
    dist = np.full(n, -1, dtype=np.int64)
    reach = np.zeros(n, dtype=bool)
    reach[source] = True
    dist[source] = 0
    for s in range(1, max_steps + 1):
        reach = A.T @ reach
        newly = reach & (dist < 0)
        dist[newly] = s
    return dist


def enclosing_nodes_oracle(triples, n, target, k):
    """Node set of the enclosing subgraph by walk-length enumeration.

    A node belongs iff it lies on some undirected walk h -> t of length
    <= k + 1 in the graph without the target edge (h, t always included).
    """
    h, _, t = (int(x) for x in target)
    A = masked_adjacency(triples, n, target)
    d_h = matrix_power_distances(A, h, k + 1)
    d_t = matrix_power_distances(A, t, k + 1)
    nodes = {h, t}
    for i in range(n):
        if i in (h, t) or d_h[i] < 0 or d_t[i] < 0:
            continue
        if d_h[i] <= k and d_t[i] <= k and d_h[i] + d_t[i] <= k + 1:
            nodes.add(i)
    return nodes


# -- dense message-passing oracles ------------------------------------------

def slot_weight_dense(P, slot):
    return (P.coeffs.data[slot] @ P.bases.data).reshape(P.d_in, P.d_out)


def message_list(sub):
    """(src, dst, rel, dir) including inverse-direction messages."""
    out = []
    for s, d, r in sub.edges.tolist():
        out.append((s, d, r, 0))
        out.append((d, s, r, 1))
    return out


def dense_rgcn(sub, H, P, activation=True):
    n = H.shape[0]
    out = H @ P.self_weight.data
    msgs = message_list(sub)
    counts = {}
    for s, d, r, direction in msgs:
        counts[(d, r, direction)] = counts.get((d, r, direction), 0) + 1
    for s, d, r, direction in msgs:
        W = slot_weight_dense(P, 2 * r + direction)
        out[d] += (H[s] @ W) / counts[(d, r, direction)]
    return np.maximum(out, 0.0) if activation else out


def dense_att(sub, H, P, rel_emb, target_rel, activation=True):
    out = H @ P.self_weight.data
    msgs = message_list(sub)
    counts = {}
    for s, d, r, direction in msgs:
        counts[(d, r, direction)] = counts.get((d, r, direction), 0) + 1
    for s, d, r, direction in msgs:
        W = slot_weight_dense(P, 2 * r + direction)
        z = np.concatenate([H[s] @ W, H[d] @ W, rel_emb[r], rel_emb[target_rel]])
        alpha = 1.0 / (1.0 + np.exp(-(z @ P.att_a.data)))
        out[d] += alpha * (H[s] @ W) / counts[(d, r, direction)]
    return np.maximum(out, 0.0) if activation else out


def corr_oracle(a, b):
    """O(d^2) circular correlation of two vectors."""
    d = len(a)
    out = np.zeros(d)
    for k in range(d):
        for i in range(d):
            out[k] += a[i] * b[(i + k) % d]
    return out


def dense_comp(sub, H, E_rel, P, op, activation=True):
    out = H @ P.w_self.data
    for s, d, r, direction in message_list(sub):
        e = E_rel[r]
        if op == "sub":
            phi = H[s] - e
        elif op == "mult":
            phi = H[s] * e
        else:
            phi = corr_oracle(H[s], e)
        W = P.w_fwd.data if direction == 0 else P.w_bwd.data
        out[d] += phi @ W
    new_rel = E_rel @ P.w_rel.data
    return (np.maximum(out, 0.0) if activation else out), new_rel


# -- metric oracles ---------------------------------------------------------

def auc_pair_oracle(scores, labels01):
    scores = np.asarray(scores, dtype=np.float64)
    labels01 = np.asarray(labels01)
    pos = scores[labels01 == 1]
    neg = scores[labels01 == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def ap_grouped_oracle(scores, labels01):
    items = sorted(zip(scores, labels01), key=lambda x: -x[0])
    n_pos = sum(l for _, l in items)
    total = 0.0
    cum_tp = cum = i = 0
    while i < len(items):
        j = i
        tp = 0
        while j < len(items) and items[j][0] == items[i][0]:
            tp += items[j][1]
            j += 1
        cum_tp += tp
        cum += j - i
        total += tp * (cum_tp / cum)
        i = j
    return total / n_pos


def rank_sort_oracle(scores, truth_idx):
    scores = np.asarray(scores, dtype=np.float64)
    s = scores[truth_idx]
    order = np.argsort(-scores, kind="stable")
    positions = [pos + 1 for pos, i in enumerate(order) if scores[i] == s]
    return float(np.mean(positions))


# -- random subgraphs for store tests ---------------------------------------

def random_subgraph(rng):
    from indkg.subgraph import Subgraph
    k = int(rng.integers(1, 4))
    n = int(rng.integers(2, 30))
    nodes = rng.choice(10_000, size=n, replace=False).astype(np.int64)
    dist = rng.integers(0, k + 2, size=(n, 2)).astype(np.int64)
    dist[0] = (0, rng.integers(0, k + 2))
    dist[1] = (rng.integers(0, k + 2), 0)
    m = int(rng.integers(0, 4 * n))
    edges = np.column_stack([rng.integers(n, size=m), rng.integers(n, size=m),
                             rng.integers(8, size=m)]).astype(np.int64)
    target = (int(nodes[0]), int(rng.integers(8)), int(nodes[1]))
    return Subgraph(target, nodes, dist, edges.reshape(-1, 3), k,
                    union_size=int(rng.integers(n, 3 * n)))


# -- synthetic datasets ------------------------------------------------------

def write_tsv(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for h, r, t in rows:
            fh.write(f"{h}\t{r}\t{t}\n")


def make_raw_dataset_dir(root, rng, n_train_ents=40, n_ind_ents=16,
                         n_relations=4, density=0.08):
    """Two-directory raw layout with disjoint inductive entities."""
    import os
    os.makedirs(os.path.join(root, "train"), exist_ok=True)
    os.makedirs(os.path.join(root, "ind"), exist_ok=True)

    def labelled(triples, prefix):
        return [(f"{prefix}{h}", f"r{r}", f"{prefix}{t}") for h, r, t in triples]

    train_all = labelled(random_triples(rng, n_train_ents, n_relations, density), "e")
    rng.shuffle(train_all)
    n_valid = max(2, len(train_all) // 10)
    valid, test, train = (train_all[:n_valid],
                          train_all[n_valid:2 * n_valid],
                          train_all[2 * n_valid:])
    ind_all = labelled(random_triples(rng, n_ind_ents, n_relations,
                                      max(density * 2, 0.15)), "u")
    rng.shuffle(ind_all)
    # query triples must only use entities present in support
    n_query = max(2, len(ind_all) // 5)
    support, query = ind_all[n_query:], ind_all[:n_query]
    support_ents = {e for h, _, t in support for e in (h, t)}
    kept = [q for q in query if q[0] in support_ents and q[2] in support_ents]
    moved = [q for q in query if q not in kept]
    support += moved
    query = kept if kept else [support.pop()]
    write_tsv(os.path.join(root, "train", "train.txt"), train)
    write_tsv(os.path.join(root, "train", "valid.txt"), valid)
    write_tsv(os.path.join(root, "train", "test.txt"), test)
    write_tsv(os.path.join(root, "ind", "train.txt"), support)
    write_tsv(os.path.join(root, "ind", "test.txt"), query)
    return root


def planted_type_cycle_kg(rng, n_types=10, per_type_train=10, per_type_ind=4):
    """A compositional KG whose facts follow a cycle over entity types.

    Relation r_k holds exactly between every type-k entity and every
    type-(k+1 mod T) entity, so each type has a unique incident-relation
    signature and a relation-derived entity encoder can identify it.
    Returns (train_triples, support, query, num_entities, num_relations)
    with inductive entities occupying fresh ids after the training ones.
    """
    def complete_facts(type_of):
        ents_by_type = {}
        for e, τ in type_of.items():
            ents_by_type.setdefault(τ, []).append(e)
        facts = []
        for k in range(n_types):
            for a in ents_by_type[k]:
                for b in ents_by_type[(k + 1) % n_types]:
                    facts.append((a, k, b))
        return facts

    n_train = n_types * per_type_train
    train_types = {e: e % n_types for e in range(n_train)}
    train = complete_facts(train_types)

    n_ind = n_types * per_type_ind
    ind_types = {n_train + e: e % n_types for e in range(n_ind)}
    ind = complete_facts(ind_types)
    rng.shuffle(ind)
    n_query = len(ind) // 5
    query, support = ind[:n_query], ind[n_query:]
    support_ents = {e for h, _, t in support for e in (h, t)}
    kept = [q for q in query if q[0] in support_ents and q[2] in support_ents]
    support += [q for q in query if q not in kept]
    return (np.asarray(train, dtype=np.int64),
            np.asarray(support, dtype=np.int64),
            np.asarray(kept, dtype=np.int64),
            n_train + n_ind, n_types)
