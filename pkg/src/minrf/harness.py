"""Data loaders, experiment configuration and sweep runner."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .cover_robust import parse_algorithm, run_named
from .cover_zero import ALG0_NAMES, Alg0Request, get_alg0
from .objectives import (
    GroupConstraintSpec,
    Graph,
    Instance,
    MovieData,
    adversarial_oracle,
    assign_groups,
    build_lt_influence,
    build_movie_utility,
    random_graph,
    random_instance,
    set_cover_instance,
    tight_instance,
)
from .oracle import InputError, QueryLedger, SeededRng

log = logging.getLogger(__name__)

CSV_COLUMNS = ["sweep", "algorithm", "mean_size", "mean_queries", "feasible_rate",
               "mean_ms", "reps", "seed0"]


class ParseError(InputError):
    pass


# ---------------------------------------------------------------------------
# Loaders
# ---------------------------------------------------------------------------


def load_graph(path) -> Graph:
    """SNAP edge list: whitespace separated "u v" pairs, '#' comments.

    Undirected pairs become two directed edges; ids are compacted to
    0..n-1 in ascending order of the original id; w(u, v) = 1 / indeg(v).
    """
    pairs = set()
    self_loops = 0
    lines = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) < 2:
                raise ParseError(f"{path}:{lineno}: expected two node ids, got {s!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-integer node id in {s!r}") from None
            lines += 1
            if u == v:
                self_loops += 1
                continue
            pairs.add((min(u, v), max(u, v)))
    if not pairs:
        raise ParseError(f"{path}: no edges")
    labels = sorted({x for p in pairs for x in p})
    index = {x: i for i, x in enumerate(labels)}
    und = sorted((index[a], index[b]) for a, b in pairs)
    edges = [(a, b) for a, b in und] + [(b, a) for a, b in und]
    stats = {"nodes": len(labels), "undirected_edges": len(und), "lines": lines,
             "self_loops_dropped": self_loops, "duplicates_collapsed": lines - self_loops - len(und)}
    if self_loops:
        log.info("%s: dropped %d self-loops", path, self_loops)
    return Graph.from_edges(len(labels), edges, labels=labels, stats=stats)


def save_graph(g: Graph, path) -> None:
    """Write each undirected pair once, using the original node labels."""
    labels = g.labels or list(range(g.n))
    seen = sorted({(min(a, b), max(a, b)) for a, b in zip(g.src.tolist(), g.dst.tolist())})
    with open(path, "w") as fh:
        fh.write(f"# nodes {g.n} edges {len(seen)}\n")
        for a, b in seen:
            fh.write(f"{labels[a]}\t{labels[b]}\n")


def load_movielens(ratings_path, genome_path, user_count: int = 4, min_rating: float = 4.0,
                   seed: int = 0, T: float = 1.0) -> MovieData:
    """MovieLens ratings + tag genome into candidate movies, keyword vectors and favourites.

    Candidate movies are those with genome rows plus the picked users'
    favourites; movies without genome rows get zero vectors. Only users
    with at least one favourite that has a genome row are eligible.
    """
    import pandas as pd

    ratings = pd.read_csv(ratings_path)
    genome = pd.read_csv(genome_path)
    for frame, cols, what in ((ratings, ("userId", "movieId", "rating"), "ratings"),
                              (genome, ("movieId", "tagId", "relevance"), "genome")):
        missing = [c for c in cols if c not in frame.columns]
        if missing:
            raise ParseError(f"{what} file lacks columns {missing}")
    liked = ratings[ratings["rating"] >= min_rating]
    # a user whose favourites all lack genome rows would get zero utility everywhere
    scored = liked[liked["movieId"].isin(genome["movieId"].unique())]
    eligible = np.sort(scored["userId"].unique())
    if len(eligible) < user_count:
        raise InputError(f"only {len(eligible)} users have favourites, need {user_count}")
    rng = np.random.default_rng(seed)
    users = sorted(rng.choice(eligible, size=user_count, replace=False).tolist())
    fav_ids = {u: sorted(liked.loc[liked["userId"] == u, "movieId"].unique().tolist()) for u in users}

    tags = np.sort(genome["tagId"].unique())
    movies = sorted(set(genome["movieId"].unique().tolist()).union(*fav_ids.values()))
    row = {mid: i for i, mid in enumerate(movies)}
    col = {t: j for j, t in enumerate(tags.tolist())}
    vectors = np.zeros((len(movies), len(tags)))
    vectors[genome["movieId"].map(row).to_numpy(), genome["tagId"].map(col).to_numpy()] = \
        genome["relevance"].to_numpy(dtype=float)
    favorites = {u: [row[mid] for mid in fav_ids[u]] for u in users}
    return MovieData(movie_ids=movies, vectors=vectors, favorites=favorites, T=T)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """One experiment: an objective family, algorithms, and a sweep over T or r.

    ``objective`` is a dict with ``kind`` in {set-cover, lt-influence,
    movie-utility, adversarial, tight, random} plus kind-specific fields.
    The sweep axis not being swept is held at ``T`` / ``r``.
    """
    objective: dict
    algorithms: list
    sweep_axis: str = "T"
    sweep_values: list = field(default_factory=lambda: [1.0])
    alpha: float = 0.1
    gamma: float = 0.2
    K: int = 100
    T: float = 1.0
    r: int = 0
    repetitions: int = 10
    seed: int = 0
    output: Optional[str] = None
    record_time: bool = True
    jobs: int = 1

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise InputError("alpha must lie in [0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise InputError("gamma must lie in (0, 1)")
        if self.repetitions < 1:
            raise InputError("repetitions must be >= 1")
        if self.sweep_axis not in ("T", "r"):
            raise InputError("sweep_axis must be 'T' or 'r'")
        if "kind" not in self.objective:
            raise InputError("objective needs a 'kind'")
        if not self.algorithms:
            raise InputError("no algorithms configured")
        for a in self.algorithms:
            robust, base = parse_algorithm(a)
            if base not in ALG0_NAMES:
                raise InputError(f"unknown r=0 algorithm in {a!r}")

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        raw.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**raw)
        except TypeError as exc:
            raise InputError(f"bad config {path}: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from the given parts, independent of sweep order."""
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(h, "big") >> 1


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


def _graph_for(obj: dict) -> Graph:
    if "graph" in obj:
        return load_graph(obj["graph"])
    return random_graph(int(obj.get("nodes", 200)), float(obj.get("p", 0.03)),
                        int(obj.get("graph_seed", 0)))


def build_instance(obj: dict, T: float, K: int, seed: int) -> Instance:
    """Materialise the configured objective for threshold T and an instance seed."""
    kind = obj["kind"]
    if kind == "random":
        return random_instance(int(obj.get("n", 200)), int(obj.get("m", 8)),
                               float(obj.get("density", 0.1)), seed, T=T,
                               weighted=bool(obj.get("weighted", False)))
    if kind == "set-cover":
        return set_cover_instance(obj["universe"], obj["family"], T=T,
                                  labels=obj.get("labels"))
    if kind == "lt-influence":
        g = _graph_for(obj)
        if "groups" in obj:
            groups = [frozenset(x) for x in obj["groups"]]
        else:
            groups = assign_groups(g.n, int(obj.get("m", 4)), int(obj.get("group_seed", 0)))
        cons = build_lt_influence(g, GroupConstraintSpec(groups, T), K=K, seed=seed)
        return Instance(g.n, cons, labels=g.labels, name="lt-influence")
    if kind == "movie-utility":
        if "ratings" in obj:
            data = load_movielens(obj["ratings"], obj["genome"], int(obj.get("users", 4)),
                                  float(obj.get("min_rating", 4.0)),
                                  int(obj.get("user_seed", 0)), T=T)
        else:
            data = synthetic_movies(int(obj.get("movies", 300)), int(obj.get("dim", 32)),
                                    int(obj.get("users", 4)), int(obj.get("favorites", 5)),
                                    seed=int(obj.get("data_seed", 0)), T=T)
        return Instance(len(data.movie_ids), build_movie_utility(data), labels=data.movie_ids,
                        name="movie-utility")
    if kind == "tight":
        return tight_instance(int(obj.get("k", 4)))
    if kind == "adversarial":
        n, r = int(obj.get("n", 30)), int(obj.get("r_hidden", obj.get("r", 5)))
        return Instance(n, [adversarial_oracle(n, r, seed)], name="adversarial")
    raise InputError(f"unknown objective kind {kind!r}")


def synthetic_movies(movies: int, dim: int, users: int, favorites: int, seed: int,
                     T: float = 1.0) -> MovieData:
    """Sparse non-negative keyword vectors with random favourite lists."""
    rng = np.random.default_rng(seed)
    vec = rng.random((movies, dim)) * (rng.random((movies, dim)) < 0.3)
    favs = {u: sorted(rng.choice(movies, size=favorites, replace=False).tolist())
            for u in range(users)}
    return MovieData(list(range(movies)), vec, favs, T=T)


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


@dataclass
class RunRecord:
    sweep: float
    algorithm: str
    rep: int
    seed: int
    instance_seed: int
    size: int
    queries: int
    feasible: bool
    ms: float
    solution: list


@dataclass
class ResultRow:
    sweep: float
    algorithm: str
    mean_size: float
    mean_queries: float
    feasible_rate: float
    mean_ms: float
    reps: int
    seed0: int
    seeds: list = field(default_factory=list)


def run_one(cfg: ExperimentConfig, value, algorithm: str, rep: int) -> RunRecord:
    T = float(value) if cfg.sweep_axis == "T" else cfg.T
    r = int(value) if cfg.sweep_axis == "r" else cfg.r
    inst_seed = derive_seed(cfg.seed, "instance", value, rep)
    seed = derive_seed(cfg.seed, algorithm, value, rep)
    inst = build_instance(cfg.objective, T, cfg.K, inst_seed)
    robust, base = parse_algorithm(algorithm)
    ledger = QueryLedger()
    t0 = time.perf_counter()
    if r == 0 and robust != "disjoint":
        res = get_alg0(base, gamma=cfg.gamma)(
            Alg0Request(inst.n, inst.constraints, cfg.alpha, rng=SeededRng(seed), ledger=ledger))
    else:
        res = run_named(algorithm, inst.n, inst.constraints, r, cfg.alpha, seed=seed,
                        gamma=cfg.gamma, ledger=ledger)
    ms = (time.perf_counter() - t0) * 1000.0 if cfg.record_time else 0.0
    return RunRecord(value, algorithm, rep, seed, inst_seed, res.size, ledger.total,
                     res.feasible, ms, sorted(res.solution))


def aggregate(records: list, cfg: ExperimentConfig) -> list:
    rows = []
    for value in cfg.sweep_values:
        for alg in cfg.algorithms:
            runs = [x for x in records if x.sweep == value and x.algorithm == alg]
            ok = [x for x in runs if x.feasible]
            rows.append(ResultRow(
                sweep=value,
                algorithm=alg,
                mean_size=float(np.mean([x.size for x in ok])) if ok else math.nan,
                mean_queries=float(np.mean([x.queries for x in runs])),
                feasible_rate=len(ok) / len(runs),
                mean_ms=float(np.mean([x.ms for x in runs])),
                reps=len(runs),
                seed0=runs[0].seed,
                seeds=[x.seed for x in runs],
            ))
    return rows


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([row.sweep, row.algorithm, f"{row.mean_size:.6f}", f"{row.mean_queries:.6f}",
                    f"{row.feasible_rate:.6f}", f"{row.mean_ms:.3f}", row.reps, row.seed0])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, records_out: Optional[list] = None) -> list:
    """Run every sweep value x algorithm x repetition, aggregate, and write the CSV.

    Aggregation happens in a fixed order, so ``jobs > 1`` yields the same
    rows as a sequential run.
    """
    tasks = [(v, a, k) for v in cfg.sweep_values for a in cfg.algorithms
             for k in range(cfg.repetitions)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(run_one, *zip(*[(cfg, v, a, k) for v, a, k in tasks])))
    else:
        records = [run_one(cfg, v, a, k) for v, a, k in tasks]
    rows = aggregate(records, cfg)
    if cfg.output:
        out = Path(cfg.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(rows_to_csv(rows))
        out.with_suffix(".runs.json").write_text(
            json.dumps([asdict(x) for x in records], indent=1, sort_keys=True))
    if records_out is not None:
        records_out.extend(records)
    return rows


def emit_plot_data(rows: list, directory) -> list:
    """One whitespace-separated series file per algorithm: x mean_size mean_queries."""
    if not rows:
        raise InputError("no rows to emit")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for alg in sorted({r.algorithm for r in rows}):
        series = sorted((r for r in rows if r.algorithm == alg), key=lambda r: r.sweep)
        path = directory / f"{alg.replace('+', '_')}.dat"
        with open(path, "w") as fh:
            fh.write("# x mean_size mean_queries\n")
            for r in series:
                fh.write(f"{r.sweep} {r.mean_size:.6f} {r.mean_queries:.6f}\n")
        paths.append(path)
    return paths
