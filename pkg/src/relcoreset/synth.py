"""Seeded synthetic relational instances.

Four families:
- random_instance: small random tree-shaped schemas with integer keys, for
  exhaustive cross-checks against materialization
- manifold_instance: a 3-table chain whose joined points hug a 2-parameter
  surface embedded in 12 dimensions, for objective-corridor experiments
- cluster_chain_instance: large skewed-key chains with planted, well
  separated clusters and an optional binary label, for downstream training
  and scaling runs
- tiered_instance: a million-row-join chain with heavy/light mass tiers and
  nested payload structure at graded scales, for coreset-vs-uniform
  benchmarking across a sweep of coreset sizes
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .schema import Table, build_partition, table_from_arrays
from .util import STREAM_SYNTH, rng_for


def random_instance(
    seed: int,
    s: int | None = None,
    max_rows: int = 50,
    max_feats: int = 8,
    key_domain: int = 4,
    p_isolated: float = 0.1,
    p_double_key: float = 0.25,
) -> list[Table]:
    """Random acyclic instance: a random tree over ``s`` tables, one or two
    fresh key features per edge, integer keys in a small domain, plus real
    payload columns up to ``max_feats`` total columns per table."""
    rng = rng_for(seed, STREAM_SYNTH, 0)
    if s is None:
        s = int(rng.integers(2, 5))
    parents = [None] + [int(rng.integers(0, i)) for i in range(1, s)]
    if s > 1:
        for i in range(1, s):
            if rng.random() < p_isolated:
                parents[i] = None  # disconnected component: a cross product
    edge_keys: dict[int, list[str]] = {i: [] for i in range(s)}
    for i in range(1, s):
        if parents[i] is None:
            continue
        keys = [f"k{i}"] if rng.random() >= p_double_key else [f"k{i}", f"k{i}b"]
        edge_keys[i].extend(keys)
        edge_keys[parents[i]].extend(keys)

    tables = []
    for i in range(s):
        keys = edge_keys[i]
        n_payload = int(rng.integers(1, max(2, max_feats - len(keys) + 1)))
        names = keys + [f"x{i}_{j}" for j in range(n_payload)]
        rows = int(rng.integers(1, max_rows + 1))
        data = np.empty((rows, len(names)))
        data[:, : len(keys)] = rng.integers(0, key_domain, size=(rows, len(keys))).astype(float)
        data[:, len(keys) :] = np.round(rng.normal(size=(rows, len(names) - len(keys))), 3)
        tables.append(table_from_arrays(f"T{i}", names, data))
    return tables


def cyclic_instance(seed: int = 0) -> list[Table]:
    """Triangle schema: three tables chained pairwise; GYO cannot reduce it."""
    rng = rng_for(seed, STREAM_SYNTH, 1)
    mk = lambda name, f1, f2: table_from_arrays(
        name, (f1, f2, f"x_{name}"), np.column_stack([
            rng.integers(0, 3, 5).astype(float),
            rng.integers(0, 3, 5).astype(float),
            rng.normal(size=5),
        ])
    )
    return [mk("A", "u", "v"), mk("B", "v", "w"), mk("C", "w", "u")]


def manifold_instance(
    seed: int,
    n_keys: int = 12,
    rows_per_key: int = 3,
    fanout: int = 4,
    noise: float = 0.02,
) -> list[Table]:
    """3-table chain whose join lies near a 2-parameter surface in 12 dims.

    Key values themselves are the latent parameters t and u; payload columns
    are smooth functions of them plus Gaussian noise.  The last column of the
    third table is a binary label (u above its median), so the same instance
    serves labeled and unlabeled tasks.
    """
    rng = rng_for(seed, STREAM_SYNTH, 2)
    t_vals = np.sort(rng.uniform(0.0, 1.0, n_keys))
    u_vals = np.sort(rng.uniform(0.0, 1.0, n_keys))

    def noisy(cols):
        return np.column_stack(cols) + noise * rng.normal(size=(len(cols[0]), len(cols)))

    t = np.repeat(t_vals, rows_per_key)
    t1 = np.column_stack([t, noisy([np.sin(2 * np.pi * t), np.cos(2 * np.pi * t), t * t])])
    pairs_t = np.repeat(t_vals, fanout)
    pairs_u = np.concatenate([rng.choice(u_vals, size=fanout, replace=False) for _ in t_vals])
    t2 = np.column_stack(
        [
            pairs_t,
            pairs_u,
            noisy(
                [
                    pairs_t + pairs_u,
                    np.sin(2 * np.pi * (pairs_t - pairs_u)),
                    pairs_t * pairs_u,
                    np.cos(2 * np.pi * (pairs_t + pairs_u)),
                ]
            ),
        ]
    )
    u = np.repeat(u_vals, rows_per_key)
    label = (u > np.median(u_vals)).astype(float)
    t3 = np.column_stack([u, noisy([np.sin(4 * np.pi * u), np.cos(4 * np.pi * u)]), label])

    return [
        table_from_arrays("S1", ("t", "a1", "a2", "a3"), t1),
        table_from_arrays("S2", ("t", "u", "b1", "b2", "b3", "b4"), t2),
        table_from_arrays("S3", ("u", "c1", "c2", "label"), t3),
    ]


def _zipf_weights(n: int, skew: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** skew
    return w / w.sum()


def cluster_chain_instance(
    seed: int,
    rows: int = 1000,
    n_clusters: int = 10,
    keys_per_cluster: int = 3,
    payload_dims: tuple[int, int, int] = (3, 3, 3),
    skew: float = 0.8,
    separation: float = 8.0,
    noise: float = 0.6,
    label: bool = False,
) -> list[Table]:
    """Chain T1(key1,...) - T2(key1,key2,...) - T3(key2,...) with planted
    clusters.

    Keys are partitioned across clusters on both sides and T2 only links keys
    of the same cluster, so joined tuples stay cluster-pure.  Cluster masses
    follow a zipf(``skew``) law.  With ``label``, T3 carries the cluster's
    parity as a 0/1 column.
    """
    rng = rng_for(seed, STREAM_SYNTH, 3)
    d1, d2, d3 = payload_dims
    centers = rng.normal(0.0, separation, size=(n_clusters, d1 + d2 + d3))
    weights = _zipf_weights(n_clusters, skew)
    rows_c = np.maximum(1, np.round(rows * weights)).astype(int)

    key1_pool = [np.arange(c * keys_per_cluster, (c + 1) * keys_per_cluster) for c in range(n_clusters)]
    key2_pool = [np.arange(1000 + c * keys_per_cluster, 1000 + (c + 1) * keys_per_cluster) for c in range(n_clusters)]

    def block(construct):
        rows_out = []
        for c in range(n_clusters):
            rows_out.append(construct(c, rows_c[c]))
        return np.vstack(rows_out)

    t1 = block(
        lambda c, m: np.column_stack(
            [rng.choice(key1_pool[c], m).astype(float), centers[c, :d1] + noise * rng.normal(size=(m, d1))]
        )
    )
    t2 = block(
        lambda c, m: np.column_stack(
            [
                rng.choice(key1_pool[c], m).astype(float),
                rng.choice(key2_pool[c], m).astype(float),
                centers[c, d1 : d1 + d2] + noise * rng.normal(size=(m, d2)),
            ]
        )
    )

    def t3_rows(c, m):
        cols = [rng.choice(key2_pool[c], m).astype(float), centers[c, d1 + d2 :] + noise * rng.normal(size=(m, d3))]
        if label:
            cols.append(np.full((m, 1), float(c % 2)))
        return np.column_stack(cols)

    t3 = block(t3_rows)

    f1 = ["key1"] + [f"p{j}" for j in range(d1)]
    f2 = ["key1", "key2"] + [f"q{j}" for j in range(d2)]
    f3 = ["key2"] + [f"r{j}" for j in range(d3)] + (["label"] if label else [])
    return [
        table_from_arrays("T1", f1, t1),
        table_from_arrays("T2", f2, t2),
        table_from_arrays("T3", f3, t3),
    ]


def tiered_instance(
    seed: int,
    join_target: int = 1_240_000,
    fanout: int = 35,
    spread: float = 900.0,
    gap_big: float = 320.0,
    depth0: float = 60.0,
    depth_step: float = 12.0,
    sub_sep: float = 144.2,
    sub_dx: float = 40.0,
    sigma: float = 4.0,
    flip: float = 0.25,
    key_scale: float = 0.002,
    label: bool = True,
) -> list[Table]:
    """Large chain whose join mass is tiered: two heavy payload locations
    hold ~97% of the join, six light "outposts" hold the rest.

    Every location hosts both classes at equal mass, so the payload axes
    carry no label signal; the class geometry lives on axis 0 alone.  Heavy
    locations sit at +/- ``gap_big`` on axis 0 and carry a four-level payload
    cascade with asymmetric masses, splits at geometrically spaced scales
    that a summary at budget k resolves one after another as its certified
    cube radius shrinks.  Outposts sit inside the margin band at graded
    depths with ``flip`` label noise, so they fix where the boundary falls
    and how expensive it is to misplace.  Frequency-proportional samples
    spend almost everything on the two heavy locations; a cover that spends
    budget on geometry keeps the outposts too.

    Row counts per site are solved so each site's share of the join matches
    its mass: a site with c key values per side and r rows per table joins
    to about r^3/c^2 tuples.  Defaults give ~1.24M join rows from ~2000-row
    tables.
    """
    rng = rng_for(seed, STREAM_SYNTH, 9)
    n_loc, n_big_loc = 8, 2
    loc_shares = np.array([0.551, 0.4205, 0.006, 0.0055, 0.005, 0.0045, 0.004, 0.0035])
    # redraw until every location pair is well separated: serving each
    # location with its own cluster center then beats any split-and-merge
    # rearrangement by a wide margin, so the 10-center optimum is forced
    for _ in range(200):
        loc = rng.normal(0.0, spread, size=(n_loc, 7))
        loc[:, 0] = 0.0
        diff = loc[:, None, :] - loc[None, :, :]
        dist = np.sqrt((diff**2).sum(-1))
        np.fill_diagonal(dist, np.inf)
        if dist.min() >= 2.45 * spread:
            break
    n_groups = 2 * n_loc
    gmass = np.repeat(loc_shares / 2.0, 2)
    glab = np.tile([0, 1], n_loc).astype(int)
    sgn = np.where(glab == 1, 1.0, -1.0)
    centers = np.repeat(loc, 2, axis=0)
    for g in range(n_groups):
        l, mem = divmod(g, 2)
        if l < n_big_loc:
            centers[g, 0] = sgn[g] * gap_big * (1.0 + 0.2 * rng.normal())
        else:
            depth = depth0 + depth_step * (l - n_big_loc) + 6.0 * mem
            centers[g, 0] = -sgn[g] * depth * (1.0 + 0.15 * rng.normal())

    def payload_cascade(ds, fs):
        offs = [np.zeros(7)]
        frac = [1.0]
        for d, f in zip(ds, fs):
            v = np.zeros(7)
            v[1:] = rng.normal(size=6)
            v[1:] *= d / np.linalg.norm(v[1:])
            offs = [o + s * v for o in offs for s in (1.0, -1.0)]
            frac = [m * p for m in frac for p in (f, 1.0 - f)]
        return offs, frac

    # both class members share each cascade, so it carries no label signal
    casc_d = (186.7, 144.2, 120.8, 105.7)
    casc_f = (0.65, 0.6, 0.58, 0.55)
    casc = [payload_cascade(casc_d, casc_f) for _ in range(n_big_loc)]
    # outpost substructure: a two-level payload cascade whose leaves carry
    # graded axis-0 offsets, so each resolution event sharpens the
    # margin-side representation as well
    ocasc = [payload_cascade((sub_sep, 105.7), (0.6, 0.55)) for _ in range(n_big_loc, n_loc)]
    subs, smass, slab = [], [], []
    for g in range(n_groups):
        l = g // 2
        if l < n_big_loc:
            offs, frac = casc[l]
            for o, m in zip(offs, frac):
                off = o.copy()
                off[0] = 1.2 * rng.normal()
                subs.append(centers[g] + off)
                smass.append(gmass[g] * m)
                slab.append(glab[g])
        else:
            offs, frac = ocasc[l - n_big_loc]
            for j, (o, m) in enumerate(zip(offs, frac)):
                off = o.copy()
                off[0] = sub_dx * (j - 1.5) * (1.0 + 0.2 * rng.normal()) + 0.5 * rng.normal()
                subs.append(centers[g] + off)
                smass.append(gmass[g] * m)
                slab.append(glab[g])
    sites = np.vstack(subs)
    site_mass = np.asarray(smass)
    site_lab = np.asarray(slab, dtype=int)
    n_big_sites = n_big_loc * 2 * (2 ** len(casc_d))
    n_sites = sites.shape[0]

    rows_c = np.empty(n_sites, dtype=int)
    keys_c = np.empty(n_sites, dtype=int)
    for c in range(n_sites):
        jc = site_mass[c] * join_target
        k = max(1, int(np.ceil(jc / fanout**3)))
        keys_c[c] = k
        rows_c[c] = max(2, round((jc * k * k) ** (1.0 / 3.0)))
    k1, k2 = [], []
    n1 = n2 = 0
    for c in range(n_sites):
        k1.append(key_scale * np.arange(n1, n1 + keys_c[c], dtype=float))
        k2.append(key_scale * np.arange(10**6 + n2, 10**6 + n2 + keys_c[c], dtype=float))
        n1 += keys_c[c]
        n2 += keys_c[c]

    def block(f):
        return np.vstack([f(c, rows_c[c]) for c in range(n_sites)])

    # axis 0 carries the class geometry: keep its noise tight so the margin
    # structure stays resolvable; payload noise is sigma
    t1 = block(
        lambda c, m: np.column_stack(
            [rng.choice(k1[c], m), sites[c, :2] + np.array([0.6, sigma]) * rng.normal(size=(m, 2))]
        )
    )
    t2 = block(
        lambda c, m: np.column_stack(
            [
                rng.choice(k1[c], m),
                rng.choice(k2[c], m),
                sites[c, 2:4] + sigma * rng.normal(size=(m, 2)),
            ]
        )
    )

    def t3_rows(c, m):
        cols = [rng.choice(k2[c], m), sites[c, 4:7] + sigma * rng.normal(size=(m, 3))]
        if label:
            base = float(site_lab[c])
            p = flip if c >= n_big_sites else 0.0  # label noise only on the outposts
            fl = rng.random(m) < p
            cols.append(np.where(fl, 1.0 - base, base).reshape(-1, 1))
        return np.column_stack(cols)

    t3 = block(t3_rows)
    f3 = ["key2", "r0", "r1", "r2"] + (["label"] if label else [])
    return [
        table_from_arrays("T1", ["key1", "p0", "p1"], t1),
        table_from_arrays("T2", ["key1", "key2", "q0", "q1"], t2),
        table_from_arrays("T3", f3, t3),
    ]


def scaling_instance(seed: int, rows: int, n_clusters: int = 10) -> list[Table]:
    """Chain instance with d=9 whose key domains grow with the row count, so
    per-key fanout stays bounded as rows scale."""
    keys_per_cluster = max(1, rows // (n_clusters * 10))
    return cluster_chain_instance(
        seed,
        rows=rows,
        n_clusters=n_clusters,
        keys_per_cluster=keys_per_cluster,
        payload_dims=(2, 2, 3),
        label=False,
    )


def write_instance(tables: list[Table], outdir: str, name: str = "instance") -> str:
    """Write tables as CSV plus a join-spec JSON; returns the spec path."""
    os.makedirs(outdir, exist_ok=True)
    entries = []
    for t in tables:
        fname = f"{t.name}.csv"
        with open(os.path.join(outdir, fname), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(t.feature_names)
            for row in t.data:
                writer.writerow([repr(float(v)) for v in row])
        entries.append({"name": t.name, "path": fname})
    spec_path = os.path.join(outdir, f"{name}.json")
    with open(spec_path, "w") as fh:
        json.dump({"tables": entries}, fh, indent=2)
        fh.write("\n")
    return spec_path


def from_memory(tables: list[Table]):
    """Convenience: partition alongside the tables, mirroring load_tables."""
    return tables, build_partition(tables)
