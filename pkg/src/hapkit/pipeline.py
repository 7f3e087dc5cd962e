"""End-to-end pipeline with persisted, resumable stage artifacts.

Stages communicate only through files in the run directory, so any stage
can be re-run (or run from the CLI) independently.  Pair comparisons are
the expensive part: each pair writes its own exchange file, pairs already
on disk are skipped, and per-fold seeds derive from (base seed, pair id),
so results are a pure function of config + inputs no matter how many
workers execute them.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import network as net
from .decision import DIFFERENT, SAME, PairVerdict, classify_pair
from .discriminator import (
    FoldAccuracies,
    FoldConfig,
    feature_bank,
    load_fold_accuracies,
    make_pair_id,
    run_folds,
    save_fold_accuracies,
)
from .heightmap import (
    HeightMap,
    PatchSet,
    RegionSpec,
    detrend,
    load_heightmap,
    octagon_orient,
    patchify_region,
    save_heightmap,
    validate_region_areas,
)
from .rad import DEFAULT_BOOTSTRAP_OFFSET, DEFAULT_P_REF, empirical_threshold, max_pmf
from .synth import ArtistProfile, gen_painting, preset_profiles, save_profiles

STAGE_EXIT_CODES = {
    "preprocess": 2,
    "compare": 3,
    "decide": 4,
    "graph": 5,
    "communities": 6,
    "degrees": 7,
    "baseline": 8,
    "metrics": 9,
    "report": 10,
}


@dataclass(frozen=True)
class RunConfig:
    """All pipeline parameters; defaults follow the published protocol."""

    manifest: str
    out: str
    folds: int = 26
    epochs: int = 25
    val_fraction: float = 0.30
    batch_size: int = 32
    patch_size_cm: float = 1.0
    detrend_radius_cm: float = 0.5
    prune_fraction: float = 0.09
    resolution: float = 1.0
    z_threshold: float = 2.0
    bootstrap_offset: float = DEFAULT_BOOTSTRAP_OFFSET
    p_ref: float = DEFAULT_P_REF
    alpha: float = 0.01
    base_seed: int = 0
    worker_count: int = 1
    region_min_cm2: float = 180.0
    region_max_cm2: float = 540.0
    export_patches: bool = False

    def fold_config(self) -> FoldConfig:
        return FoldConfig(
            folds=self.folds,
            epochs=self.epochs,
            val_fraction=self.val_fraction,
            batch_size=self.batch_size,
            base_seed=self.base_seed,
        )

    def out_dir(self) -> Path:
        return Path(self.out)


def load_config(path: str | Path, **overrides) -> RunConfig:
    doc = json.loads(Path(path).read_text())
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**doc)


def write_config(cfg: RunConfig) -> None:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.json").write_text(json.dumps(asdict(cfg), indent=2))


def record_error(cfg: RunConfig, stage: str, err: Exception) -> None:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    path = out / "errors.json"
    log = json.loads(path.read_text()) if path.exists() else []
    log.append(
        {
            "stage": stage,
            "type": type(err).__name__,
            "message": str(err),
            "time": time.strftime("%Y-%m-%dT%H:%M:%S"),
        }
    )
    path.write_text(json.dumps(log, indent=2))


# ---------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class PaintingEntry:
    painting_id: str
    image: Path
    metadata: Path
    label: str | None = None


@dataclass(frozen=True)
class Manifest:
    paintings: tuple[PaintingEntry, ...]
    regions: tuple[RegionSpec, ...]

    def labels(self) -> dict[str, str]:
        """region_id -> ground-truth label, for regions whose painting has one."""
        by_painting = {p.painting_id: p.label for p in self.paintings}
        explicit = {r.painting_id for r in self.regions}
        out = {
            r.region_id: by_painting[r.painting_id]
            for r in self.regions
            if by_painting.get(r.painting_id) is not None
        }
        for p in self.paintings:
            if p.painting_id not in explicit and p.label is not None:
                out[p.painting_id] = p.label  # whole-painting region
        return out


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    doc = json.loads(path.read_text())
    base = path.parent
    paintings = []
    for e in doc["paintings"]:
        paintings.append(
            PaintingEntry(
                painting_id=e["painting_id"],
                image=base / e["image"],
                metadata=base / e["metadata"],
                label=e.get("label"),
            )
        )
    # paintings without explicit regions become whole-painting regions at
    # preprocess time, once image dimensions are known
    regions = tuple(
        RegionSpec(
            region_id=e["region_id"],
            painting_id=e["painting_id"],
            rect=tuple(e["rect"]) if "rect" in e else None,
            polygon=tuple(tuple(p) for p in e["polygon"]) if "polygon" in e else None,
        )
        for e in doc.get("regions", [])
    )
    return Manifest(paintings=tuple(paintings), regions=regions)


# ---------------------------------------------------------------------------
# preprocess


def _region_npz(cfg: RunConfig, region_id: str) -> Path:
    return cfg.out_dir() / "patches" / f"{region_id}.npz"


def stage_preprocess(cfg: RunConfig) -> dict:
    """Load, detrend and patchify every region; persist squares + inventory."""
    manifest = load_manifest(cfg.manifest)
    out = cfg.out_dir() / "patches"
    out.mkdir(parents=True, exist_ok=True)

    regions = list(manifest.regions)
    inventory = {"patch_size_cm": cfg.patch_size_cm, "regions": []}
    resolution = None
    for painting in manifest.paintings:
        hm = load_heightmap(painting.image, painting.metadata)
        resolution = hm.lateral_resolution
        flat = detrend(hm, cfg.detrend_radius_cm)
        my_regions = [r for r in regions if r.painting_id == painting.painting_id]
        if not my_regions:
            my_regions = [
                RegionSpec(
                    region_id=painting.painting_id,
                    painting_id=painting.painting_id,
                    rect=(0, 0, hm.width_px, hm.height_px),
                )
            ]
        if len(my_regions) > 1:
            validate_region_areas(
                my_regions, hm.lateral_resolution, cfg.region_min_cm2, cfg.region_max_cm2
            )
        for region in my_regions:
            ps = patchify_region(flat, region, cfg.patch_size_cm)
            squares = np.stack([p.source for p in ps.patches])
            np.savez_compressed(
                _region_npz(cfg, region.region_id),
                squares=squares,
                grid_origin=np.array(ps.patch_grid_origin),
                grid_cells=np.array(ps.grid_cells),
            )
            inventory["regions"].append(
                {
                    "region_id": region.region_id,
                    "painting_id": region.painting_id,
                    "patches": len(ps),
                    "side_px": ps.patches[0].side_px,
                    "grid_origin": list(ps.patch_grid_origin),
                }
            )
            if cfg.export_patches:
                _export_patches(cfg, ps)
    inventory["lateral_resolution_um"] = resolution
    (out / "inventory.json").write_text(json.dumps(inventory, indent=2))
    return inventory


def _export_seed(base_seed: int, region_id: str) -> int:
    digest = hashlib.sha256(f"{base_seed}|{region_id}|export".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _export_patches(cfg: RunConfig, ps: PatchSet) -> None:
    """16-bit PNG export of oriented patches + JSON index (adapter input)."""
    from PIL import Image

    out = cfg.out_dir() / "patches" / "export" / ps.region_id
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(_export_seed(cfg.base_seed, ps.region_id))
    index = {
        "region_id": ps.region_id,
        "side_px": ps.patches[0].side_px,
        "count": len(ps),
        "fill": 0.0,
        "patches": [],
    }
    for patch in ps.patches:
        orientation = int(rng.integers(0, 8))
        oriented = octagon_orient(
            patch.source, orientation, region_id=ps.region_id, index=patch.index
        )
        v = oriented.pixels
        vmin = float(v.min())
        vmax = float(v.max())
        scale = (vmax - vmin) / 65535.0 if vmax > vmin else 1.0
        counts = np.round((v - vmin) / scale).astype(np.uint16)
        name = f"{patch.index:04d}.png"
        Image.fromarray(counts).save(out / name)
        index["patches"].append(
            {
                "file": name,
                "index": patch.index,
                "orientation": orientation,
                "scale": scale,
                "offset": vmin,
            }
        )
    (out / "index.json").write_text(json.dumps(index, indent=2))


def load_patchset(cfg: RunConfig, region_id: str) -> PatchSet:
    """Rebuild a PatchSet from the persisted squares."""
    path = _region_npz(cfg, region_id)
    if not path.exists():
        raise FileNotFoundError(f"{path}: run the preprocess stage first")
    data = np.load(path)
    squares = data["squares"]
    patches = tuple(
        octagon_orient(squares[i], 0, region_id=region_id, index=i)
        for i in range(squares.shape[0])
    )
    return PatchSet(
        region_id=region_id,
        patches=patches,
        patch_grid_origin=tuple(int(v) for v in data["grid_origin"]),
        grid_cells=tuple((int(r), int(c)) for r, c in data["grid_cells"]),
    )


def _inventory(cfg: RunConfig) -> dict:
    path = cfg.out_dir() / "patches" / "inventory.json"
    if not path.exists():
        raise FileNotFoundError(f"{path}: run the preprocess stage first")
    return json.loads(path.read_text())


def region_ids(cfg: RunConfig) -> list[str]:
    return sorted(e["region_id"] for e in _inventory(cfg)["regions"])


def all_pairs(cfg: RunConfig) -> list[tuple[str, str]]:
    ids = region_ids(cfg)
    return [(a, b) for i, a in enumerate(ids) for b in ids[i + 1 :]]


# ---------------------------------------------------------------------------
# compare (parallel)

_WORKER_CFG: RunConfig | None = None
_WORKER_CACHE: dict[str, tuple[PatchSet, np.ndarray]] = {}


def _worker_init(cfg: RunConfig) -> None:
    global _WORKER_CFG
    _WORKER_CFG = cfg
    _WORKER_CACHE.clear()


def _worker_region(region_id: str) -> tuple[PatchSet, np.ndarray]:
    if region_id not in _WORKER_CACHE:
        ps = load_patchset(_WORKER_CFG, region_id)
        _WORKER_CACHE[region_id] = (ps, feature_bank(ps))
    return _WORKER_CACHE[region_id]


def _worker_compare(pair: tuple[str, str]) -> str:
    a, b = pair
    ps_a, bank_a = _worker_region(a)
    ps_b, bank_b = _worker_region(b)
    acc = run_folds(ps_a, ps_b, _WORKER_CFG.fold_config(), banks=(bank_a, bank_b))
    path = _pair_path(_WORKER_CFG, acc.pair_id)
    tmp = path.with_suffix(".tmp")
    save_fold_accuracies(acc, tmp)
    tmp.replace(path)
    return acc.pair_id


def _pair_path(cfg: RunConfig, pair_id: str) -> Path:
    return cfg.out_dir() / "pairs" / f"{pair_id}.folds.json"


def stage_compare(cfg: RunConfig) -> dict:
    """Evaluate every missing pair; existing exchange files are kept."""
    pairs_dir = cfg.out_dir() / "pairs"
    pairs_dir.mkdir(parents=True, exist_ok=True)
    todo = [
        (a, b)
        for a, b in all_pairs(cfg)
        if not _pair_path(cfg, make_pair_id(a, b)).exists()
    ]
    if cfg.worker_count <= 1:
        _worker_init(cfg)
        for pair in todo:
            _worker_compare(pair)
        _WORKER_CACHE.clear()
    else:
        with ProcessPoolExecutor(
            max_workers=cfg.worker_count, initializer=_worker_init, initargs=(cfg,)
        ) as pool:
            list(pool.map(_worker_compare, todo, chunksize=1))
    return {"evaluated": len(todo), "total": len(all_pairs(cfg))}


# ---------------------------------------------------------------------------
# decide


def stage_decide(cfg: RunConfig) -> list[PairVerdict]:
    """Classify every pair; verdict table sorted by pair id."""
    rad_cache: dict[int, tuple] = {}
    verdicts = []
    for a, b in all_pairs(cfg):
        acc = load_fold_accuracies(
            _pair_path(cfg, make_pair_id(a, b)), expected_folds=cfg.folds
        )
        if acc.n_test not in rad_cache:
            rad_cache[acc.n_test] = (
                max_pmf(acc.n_test, cfg.epochs),
                empirical_threshold(
                    acc.n_test, cfg.epochs, p_ref=cfg.p_ref, offset=cfg.bootstrap_offset
                ),
            )
        rad, thr = rad_cache[acc.n_test]
        verdicts.append(classify_pair(acc, rad, thr, z_threshold=cfg.z_threshold))
    verdicts.sort(key=lambda v: v.pair_id)

    path = cfg.out_dir() / "verdicts.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["pair_id", "region_a", "region_b", "verdict", "z", "max_observed", "threshold"]
        )
        for v in verdicts:
            writer.writerow(
                [v.pair_id, v.region_a, v.region_b, v.verdict,
                 repr(float(v.z)), repr(float(v.max_observed)),
                 repr(float(v.threshold_accuracy))]
            )
    return verdicts


def load_verdicts(cfg: RunConfig) -> list[PairVerdict]:
    path = cfg.out_dir() / "verdicts.csv"
    if not path.exists():
        raise FileNotFoundError(f"{path}: run the decide stage first")
    out = []
    with path.open() as fh:
        for row in csv.DictReader(fh):
            out.append(
                PairVerdict(
                    pair_id=row["pair_id"],
                    region_a=row["region_a"],
                    region_b=row["region_b"],
                    verdict=row["verdict"],
                    z=float(row["z"]),
                    max_observed=float(row["max_observed"]),
                    threshold_accuracy=float(row["threshold"]),
                    rad_n=0,
                    rad_k=0,
                )
            )
    return out


# ---------------------------------------------------------------------------
# graph / communities / degrees


def build_graphs(cfg: RunConfig) -> tuple[net.PracticeGraph, net.PracticeGraph]:
    """(pre-pruning graph with W attached, pruned graph)."""
    verdicts = load_verdicts(cfg)
    g = net.build_graph(verdicts)
    pre = net.PracticeGraph(nodes=g.nodes, edges=g.edges, uniqueness=net.compute_uniqueness(g))
    pruned = net.prune_edges(g, cfg.prune_fraction)
    return pre, pruned


def stage_graph(cfg: RunConfig) -> dict:
    pre, pruned = build_graphs(cfg)
    out = cfg.out_dir()
    net.to_graphml(pre, out / "graph_pre.graphml")
    net.to_dot(pre, out / "graph_pre.dot")
    net.to_graphml(pruned, out / "graph.graphml")
    net.to_dot(pruned, out / "graph.dot")
    return {
        "nodes": pre.n_nodes,
        "edges_before": pre.n_edges,
        "edges_after": pruned.n_edges,
    }


def stage_communities(cfg: RunConfig) -> net.Partition:
    _, pruned = build_graphs(cfg)
    part = net.louvain_partition(pruned, resolution=cfg.resolution, seed=cfg.base_seed)
    out = cfg.out_dir() / "partition.csv"
    with out.open("w", newline="") as fh:
        fh.write(f"# Q={part.modularity_q!r} resolution={cfg.resolution!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["region_id", "community"])
        for node in sorted(part.assignment):
            writer.writerow([node, part.assignment[node]])
    # refresh graph exports with community attributes
    net.to_graphml(pruned, cfg.out_dir() / "graph.graphml", part)
    net.to_dot(pruned, cfg.out_dir() / "graph.dot", part)
    return part


def load_partition(cfg: RunConfig) -> net.Partition:
    path = cfg.out_dir() / "partition.csv"
    if not path.exists():
        raise FileNotFoundError(f"{path}: run the communities stage first")
    lines = path.read_text().splitlines()
    header = lines[0]
    q = float(header.split("Q=")[1].split()[0])
    resolution = float(header.split("resolution=")[1].split()[0])
    assignment = {}
    for row in csv.DictReader(lines[1:]):
        assignment[row["region_id"]] = int(row["community"])
    return net.Partition(assignment=assignment, modularity_q=q, resolution=resolution)


def stage_degrees(cfg: RunConfig) -> net.DegreeReport:
    _, pruned = build_graphs(cfg)
    part = load_partition(cfg)
    rep = net.degree_report(pruned, part)
    doc = {
        "k_int": {str(c): v for c, v in rep.k_int.items()},
        "k_ext_pair": [
            {"a": c1, "b": c2, "k_ext": v} for (c1, c2), v in sorted(rep.k_ext_pair.items())
        ],
        "k_ext_total": {str(c): v for c, v in rep.k_ext_total.items()},
    }
    (cfg.out_dir() / "degrees.json").write_text(json.dumps(doc, indent=2))
    return rep


# ---------------------------------------------------------------------------
# baseline + metrics


def stage_baseline(cfg: RunConfig) -> list[bl.RoughnessVerdict]:
    profiles = [
        bl.roughness_profile(load_patchset(cfg, rid)) for rid in region_ids(cfg)
    ]
    verdicts = bl.roughness_verdicts(profiles, alpha=cfg.alpha)
    path = cfg.out_dir() / "baseline.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region_a", "region_b", "p_value", "verdict"])
        for v in verdicts:
            writer.writerow([v.region_a, v.region_b, repr(v.p_value), v.verdict])
    return verdicts


def stage_metrics(cfg: RunConfig) -> list[bl.MetricsRow]:
    """Score PATCH (and roughness, when present) against manifest labels."""
    labels = load_manifest(cfg.manifest).labels()
    if not labels:
        raise ValueError("manifest has no ground-truth labels; metrics unavailable")

    def truth(a: str, b: str) -> str | None:
        if a in labels and b in labels:
            return SAME if labels[a] == labels[b] else DIFFERENT
        return None

    rows = []
    verdicts = load_verdicts(cfg)
    pred, actual = [], []
    for v in verdicts:
        t = truth(v.region_a, v.region_b)
        if t is not None:
            pred.append(v.verdict)
            actual.append(t)
    rows.append(bl.classification_metrics(pred, actual, method="learnability"))

    baseline_path = cfg.out_dir() / "baseline.csv"
    if baseline_path.exists():
        pred, actual = [], []
        with baseline_path.open() as fh:
            for row in csv.DictReader(fh):
                t = truth(row["region_a"], row["region_b"])
                if t is not None:
                    pred.append(row["verdict"])
                    actual.append(t)
        rows.append(bl.classification_metrics(pred, actual, method="surface-roughness"))

    path = cfg.out_dir() / "metrics.csv"
    fmt = lambda v: "" if v is None else repr(round(v, 6))
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["method",
             "precision_same", "recall_same", "f1_same",
             "precision_different", "recall_different", "f1_different",
             "macro_precision", "macro_recall", "macro_f1"]
        )
        for r in rows:
            writer.writerow(
                [r.method,
                 fmt(r.same.precision), fmt(r.same.recall), fmt(r.same.f1),
                 fmt(r.different.precision), fmt(r.different.recall), fmt(r.different.f1),
                 fmt(r.macro_precision), fmt(r.macro_recall), fmt(r.macro_f1)]
            )
    return rows


# ---------------------------------------------------------------------------
# report (plots + summary)


def stage_report(cfg: RunConfig) -> dict:
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "hapkit"
    import matplotlib.pyplot as plt

    out = cfg.out_dir()
    plots = out / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    verdicts = load_verdicts(cfg)

    # accuracy distributions against the chance model
    accs = {}
    n_tests = set()
    for a, b in all_pairs(cfg):
        fa = load_fold_accuracies(_pair_path(cfg, make_pair_id(a, b)))
        accs[fa.pair_id] = fa
        n_tests.add(fa.n_test)
    n_common = max(n_tests)
    rad = max_pmf(n_common, cfg.epochs)
    thr = empirical_threshold(n_common, cfg.epochs, p_ref=cfg.p_ref, offset=cfg.bootstrap_offset)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
    m = np.arange(n_common + 1) / n_common
    ax1.plot(m, rad.pmf_max * n_common, color="k", lw=1.2, label="chance (max-of-epochs)")
    by_verdict = {SAME: [], DIFFERENT: []}
    for v in verdicts:
        if accs[v.pair_id].n_test == n_common:
            by_verdict[v.verdict].extend(accs[v.pair_id].max_val_accuracies)
    for verdict, color in ((SAME, "tab:blue"), (DIFFERENT, "tab:red")):
        if by_verdict[verdict]:
            ax1.hist(
                by_verdict[verdict], bins=30, range=(0.3, 1.0), density=True,
                alpha=0.45, color=color, label=f"{verdict} pairs"
            )
    ax1.axvline(thr.threshold_accuracy, color="gray", ls="--", lw=1, label="max threshold")
    ax1.set_xlabel("fold max validation accuracy")
    ax1.set_ylabel("density")
    ax1.legend(fontsize=8)

    order = sorted(accs)
    means = [float(np.mean(accs[p].max_val_accuracies)) for p in order]
    maxima = [max(accs[p].max_val_accuracies) for p in order]
    colors = ["tab:blue" if v.verdict == SAME else "tab:red"
              for v in sorted(verdicts, key=lambda v: v.pair_id)]
    ax2.scatter(range(len(order)), means, c=colors, s=12, label="fold mean")
    ax2.scatter(range(len(order)), maxima, c=colors, s=12, marker="^", alpha=0.5, label="fold max")
    ax2.axhline(thr.threshold_accuracy, color="gray", ls="--", lw=1)
    ax2.axhline(rad.mean_max / n_common, color="k", lw=1)
    ax2.set_xlabel("pair (sorted by id)")
    ax2.set_ylabel("accuracy")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(plots / "accuracy.svg", metadata={"Date": None})
    plt.close(fig)

    # network layout: communities on a ring, members on sub-rings
    _, pruned = build_graphs(cfg)
    part = load_partition(cfg) if (out / "partition.csv").exists() else None
    fig, ax = plt.subplots(figsize=(6, 6))
    pos = _community_layout(pruned, part)
    for a, b in pruned.edges:
        xs, ys = zip(pos[a], pos[b])
        ax.plot(xs, ys, color="0.8", lw=0.8, zorder=1)
    cmap = plt.get_cmap("tab10")
    for node, (x, y) in pos.items():
        c = cmap(part.assignment[node] % 10) if part else "tab:blue"
        ax.scatter([x], [y], color=c, s=60, zorder=2)
        ax.annotate(node, (x, y), fontsize=5, ha="center", va="center", zorder=3)
    title = f"Q = {part.modularity_q:.3f}" if part else "no partition"
    ax.set_title(title)
    ax.set_aspect("equal")
    ax.axis("off")
    fig.savefig(plots / "network.svg", metadata={"Date": None})
    plt.close(fig)

    summary = {
        "pairs": len(verdicts),
        "same": sum(v.verdict == SAME for v in verdicts),
        "different": sum(v.verdict == DIFFERENT for v in verdicts),
        "communities": part.n_communities if part else None,
        "modularity_q": part.modularity_q if part else None,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary


def _community_layout(
    g: net.PracticeGraph, part: net.Partition | None
) -> dict[str, tuple[float, float]]:
    if part is None:
        groups = {0: list(g.nodes)}
    else:
        groups = part.communities()
    pos = {}
    n_groups = len(groups)
    for gi, (c, members) in enumerate(sorted(groups.items())):
        if n_groups == 1:
            cx, cy = 0.0, 0.0
        else:
            ang = 2 * math.pi * gi / n_groups
            cx, cy = 3.0 * math.cos(ang), 3.0 * math.sin(ang)
        r = 0.6 + 0.08 * len(members)
        for ni, node in enumerate(members):
            a = 2 * math.pi * ni / max(len(members), 1)
            pos[node] = (cx + r * math.cos(a), cy + r * math.sin(a))
    return pos


# ---------------------------------------------------------------------------
# synth study + full pipeline


def generate_study(
    out_dir: str | Path,
    profiles: list[ArtistProfile] | None = None,
    paintings_per_profile: int = 2,
    width_cm: float = 12.0,
    height_cm: float = 15.0,
    resolution_um: float = 200.0,
    seed: int = 0,
) -> Path:
    """Write a synthetic study: height maps, sidecars, manifest with labels."""
    out = Path(out_dir)
    maps = out / "maps"
    maps.mkdir(parents=True, exist_ok=True)
    if profiles is None:
        profiles = preset_profiles()
    save_profiles(profiles, out / "profiles.json")
    entries = []
    for profile in profiles:
        for copy in range(paintings_per_profile):
            digest = hashlib.sha256(
                f"{seed}|{profile.profile_id}|{copy}".encode()
            ).digest()
            painting_seed = int.from_bytes(digest[:8], "little")
            pid = f"{profile.profile_id}-p{copy}"
            hm = gen_painting(
                profile, width_cm, height_cm, resolution_um, painting_seed, painting_id=pid
            )
            save_heightmap(hm, maps / f"{pid}.png", maps / f"{pid}.json")
            entries.append(
                {
                    "painting_id": pid,
                    "image": f"maps/{pid}.png",
                    "metadata": f"maps/{pid}.json",
                    "label": profile.profile_id,
                }
            )
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps({"paintings": entries}, indent=2))
    return manifest_path


def run_pipeline(cfg: RunConfig) -> dict:
    """All stages in order; pair comparisons resume from existing files."""
    write_config(cfg)
    results = {}
    results["preprocess"] = stage_preprocess(cfg)
    results["compare"] = stage_compare(cfg)
    results["decide"] = len(stage_decide(cfg))
    results["graph"] = stage_graph(cfg)
    part = stage_communities(cfg)
    results["communities"] = {"n": part.n_communities, "q": part.modularity_q}
    stage_degrees(cfg)
    if len(region_ids(cfg)) >= 2:
        stage_baseline(cfg)
    if load_manifest(cfg.manifest).labels():
        stage_metrics(cfg)
    results["report"] = stage_report(cfg)
    return results
