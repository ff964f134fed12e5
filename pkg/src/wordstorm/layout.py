"""Cloud and storm placement.

Three pipelines build on one greedy primitive: words are placed one at a
time in weight order, each walking outward along an Archimedean spiral
from a desired start position until it fits (no glyph-level intersection,
fully inside the frame). The independent pipeline runs that once per
cloud. The iterative pipeline repeats it, resetting each shared word's
desired position to the mean of its current positions across clouds. The
combined pipeline runs the iterative pipeline and then hands the storm to
the gradient optimizer.

All randomness flows through per-cloud streams keyed by (seed, doc_id),
so results do not depend on the order in which clouds are processed.
"""

from __future__ import annotations

import json
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import style as style_mod
from .corpus import Document, DocumentVector, build_vector, compute_stats, load_stopwords, select_words
from .geometry import (
    Box,
    Frame,
    GlyphBoxTree,
    boxes_overlap,
    intersects,
    measure,
    spiral_step,
)
from .style import SizeScale, WordStyle, assign_size, assign_styles, color_hex, parse_color

INDEPENDENT = "independent"
ITERATIVE = "iterative"
GRADIENT = "gradient"
COMBINED = "combined"
METHODS = (INDEPENDENT, ITERATIVE, GRADIENT, COMBINED)

# Shared-word spread below which the iterative rounds stop early.
SPREAD_CONVERGED = 0.5


class LayoutDiverged(RuntimeError):
    """Spiral placement failed even after the maximum number of frame restarts."""


@dataclass
class LayoutConfig:
    """Knobs for storm construction: selection, styling, and placement."""

    words_per_cloud: int = 25
    seed: int = 0
    max_spiral_steps: int = 2000
    frame_growth: float = 1.2
    max_restarts: int = 10
    iterations: int = 5
    sigma_frac: float = 0.15
    fill_ratio: float = 0.35
    spiral_a: float = 1.5
    spiral_b: float = 0.35
    s_min: float = 12.0
    s_max: float = 64.0
    alpha_min: float = 0.35
    p_vertical: float = 0.2
    palette: tuple[tuple[int, int, int], ...] = style_mod.DEFAULT_PALETTE
    weight_mode: str = "tf"
    stopwords: str | None = None
    threads: int = 1

    def __post_init__(self) -> None:
        positive = {
            "words_per_cloud": self.words_per_cloud,
            "max_spiral_steps": self.max_spiral_steps,
            "sigma_frac": self.sigma_frac,
            "fill_ratio": self.fill_ratio,
            "spiral_a": self.spiral_a,
            "spiral_b": self.spiral_b,
            "threads": self.threads,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.frame_growth <= 1.0:
            raise ValueError("frame_growth must exceed 1")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be non-negative")
        if self.s_min >= self.s_max:
            raise ValueError("s_min must be below s_max")
        if self.weight_mode not in ("tf", "tfidf"):
            raise ValueError(f"unknown weight_mode {self.weight_mode!r}")
        if not 0.0 <= self.p_vertical <= 1.0:
            raise ValueError("p_vertical must lie in [0, 1]")


@dataclass
class Cloud:
    """One placed word cloud; positions refer to root-box centers."""

    doc_id: str
    words: list[str]
    positions: dict[str, tuple[float, float]]
    sizes: dict[str, float]
    frame: Frame

    def tree(self, word: str, styles: dict[str, WordStyle]) -> GlyphBoxTree:
        return measure(word, self.sizes[word], styles[word].orientation)


@dataclass
class Storm:
    """Ordered clouds plus the storm-wide style table."""

    clouds: list[Cloud]
    styles: dict[str, WordStyle]
    meta: dict = field(default_factory=dict)

    def shared_word_index(self) -> dict[str, list[int]]:
        index: dict[str, list[int]] = {}
        for i, cloud in enumerate(self.clouds):
            for w in cloud.words:
                index.setdefault(w, []).append(i)
        return index


def estimate_frame(words: list[str], sizes: dict[str, float],
                   styles: dict[str, WordStyle] | None = None,
                   fill_ratio: float = 0.35, aspect: float = 4.0 / 3.0) -> Frame:
    """Frame sized so the word boxes fill roughly fill_ratio of its area.

    Keeps a 4:3 aspect unless a single word forces a wider or taller frame.
    """
    if not words:
        raise ValueError("cannot estimate a frame for zero words")
    trees = [
        measure(w, sizes[w], styles[w].orientation if styles else "horizontal")
        for w in words
    ]
    area = sum(t.width * t.height for t in trees) / fill_ratio
    width = math.sqrt(area * aspect)
    height = width / aspect
    width = max(width, 1.05 * max(t.width for t in trees))
    height = max(height, 1.05 * max(t.height for t in trees))
    return Frame(width, height)


def sample_position(frame: Frame, rng: random.Random,
                    sigma_frac: float = 0.15) -> tuple[float, float]:
    """Gaussian draw around the frame center, resampled until inside."""
    sx = sigma_frac * frame.width
    sy = sigma_frac * frame.height
    while True:
        x = rng.gauss(0.0, sx)
        y = rng.gauss(0.0, sy)
        if frame.contains_point(x, y):
            return (x, y)


def _position_valid(tree: GlyphBoxTree, pos: tuple[float, float], frame: Frame,
                    placed_roots: list[Box], placed_children: list[list[Box]]) -> bool:
    root = tree.root_at(pos)
    if not frame.contains_box(root):
        return False
    own_children: list[Box] | None = None
    for other_root, other_children in zip(placed_roots, placed_children):
        if not boxes_overlap(root, other_root):
            continue
        if own_children is None:
            own_children = tree.children_at(pos)
        for ca in own_children:
            for cb in other_children:
                if boxes_overlap(ca, cb):
                    return False
    return True


def spiral_layout(doc_id: str, words: list[str], sizes: dict[str, float],
                  styles: dict[str, WordStyle], frame: Frame, rng: random.Random,
                  config: LayoutConfig,
                  desired: dict[str, tuple[float, float]] | None = None) -> Cloud:
    """Greedy spiral placement of words (given in weight-descending order).

    Words without a desired position start from a Gaussian sample. If any
    word exhausts max_spiral_steps the whole cloud restarts with the frame
    scaled by frame_growth; supplied desired positions persist across
    restarts while sampled ones are redrawn.
    """
    trees = {w: measure(w, sizes[w], styles[w].orientation) for w in words}
    frame_now = frame
    for _attempt in range(config.max_restarts + 1):
        placed_roots: list[Box] = []
        placed_children: list[list[Box]] = []
        positions: dict[str, tuple[float, float]] = {}
        failed = False
        for w in words:
            tree = trees[w]
            start = desired.get(w) if desired else None
            if start is None:
                start = sample_position(frame_now, rng, config.sigma_frac)
            pos = None
            for k in range(config.max_spiral_steps):
                cand = spiral_step(start, k, (config.spiral_a, config.spiral_b))
                if _position_valid(tree, cand, frame_now, placed_roots, placed_children):
                    pos = cand
                    break
            if pos is None:
                failed = True
                break
            positions[w] = pos
            placed_roots.append(tree.root_at(pos))
            placed_children.append(tree.children_at(pos))
        if not failed:
            return Cloud(doc_id=doc_id, words=list(words), positions=positions,
                         sizes=dict(sizes), frame=frame_now)
        frame_now = frame_now.scaled(config.frame_growth)
    raise LayoutDiverged(
        f"cloud {doc_id!r}: no valid layout within {config.max_restarts} frame restarts")


def cloud_rng(seed: int, doc_id: str, phase: str) -> random.Random:
    """Deterministic per-cloud stream, independent of processing order."""
    return random.Random(f"{seed}\x1f{doc_id}\x1f{phase}")


def _map_clouds(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def average_shared_positions(storm: Storm) -> list[dict[str, tuple[float, float]]]:
    """Per-cloud desired positions: the mean of each word's current positions."""
    averages: dict[str, tuple[float, float]] = {}
    for word, cloud_ids in storm.shared_word_index().items():
        pts = [storm.clouds[i].positions[word] for i in cloud_ids]
        n = len(pts)
        averages[word] = (sum(p[0] for p in pts) / n, sum(p[1] for p in pts) / n)
    return [{w: averages[w] for w in cloud.words} for cloud in storm.clouds]


def shared_word_spread(storm: Storm) -> float:
    """Mean distance of shared words from their cross-cloud centroid (px)."""
    spreads = []
    for word, cloud_ids in storm.shared_word_index().items():
        if len(cloud_ids) < 2:
            continue
        pts = [storm.clouds[i].positions[word] for i in cloud_ids]
        cx = sum(p[0] for p in pts) / len(pts)
        cy = sum(p[1] for p in pts) / len(pts)
        spreads.append(sum(math.hypot(p[0] - cx, p[1] - cy) for p in pts) / len(pts))
    return sum(spreads) / len(spreads) if spreads else 0.0


def independent_layout(storm: Storm, config: LayoutConfig) -> Storm:
    """Spiral-place every cloud on its own, no coordination."""
    def place(cloud: Cloud) -> Cloud:
        rng = cloud_rng(config.seed, cloud.doc_id, "init")
        return spiral_layout(cloud.doc_id, cloud.words, cloud.sizes, storm.styles,
                             cloud.frame, rng, config)

    storm.clouds = _map_clouds(place, storm.clouds, config.threads)
    return storm


def iterative_layout(storm: Storm, config: LayoutConfig,
                     rounds: int | None = None) -> Storm:
    """Independent pass, then coordination rounds of average-and-respiral.

    Stops early once the shared-word spread drops below SPREAD_CONVERGED.
    The spread after the initial pass and after each round is recorded in
    storm.meta["round_spreads"].
    """
    t = config.iterations if rounds is None else rounds
    independent_layout(storm, config)
    spreads = [shared_word_spread(storm)]
    for r in range(1, t + 1):
        if spreads[-1] < SPREAD_CONVERGED:
            break
        desired = average_shared_positions(storm)

        def place(pair: tuple[Cloud, dict[str, tuple[float, float]]]) -> Cloud:
            cloud, want = pair
            rng = cloud_rng(config.seed, cloud.doc_id, f"round{r}")
            return spiral_layout(cloud.doc_id, cloud.words, cloud.sizes, storm.styles,
                                 cloud.frame, rng, config, desired=want)

        storm.clouds = _map_clouds(place, list(zip(storm.clouds, desired)), config.threads)
        spreads.append(shared_word_spread(storm))
    storm.meta["round_spreads"] = spreads
    return storm


def plan_storm(docs: list[Document], config: LayoutConfig) -> tuple[Storm, dict[str, DocumentVector]]:
    """Select words, assign styles and sizes, and estimate frames (no positions)."""
    stoplist = load_stopwords(config.stopwords)
    vectors = {d.id: build_vector(d, stoplist) for d in docs}
    stats = compute_stats(list(vectors.values()))
    idf = stats.idf if config.weight_mode == "tfidf" else None
    selections = {d.id: select_words(vectors[d.id], config.words_per_cloud, idf) for d in docs}
    vocab = {w for sel in selections.values() for w, _ in sel}
    styles = assign_styles(vocab, stats, config.palette, config.p_vertical,
                           config.seed, config.alpha_min)
    clouds = []
    for d in docs:
        sel = selections[d.id]
        words = [w for w, _ in sel]
        scale = SizeScale.from_weights([wt for _, wt in sel], config.s_min, config.s_max)
        sizes = {w: assign_size(wt, scale) for w, wt in sel}
        frame = estimate_frame(words, sizes, styles, config.fill_ratio)
        clouds.append(Cloud(doc_id=d.id, words=words, positions={}, sizes=sizes, frame=frame))
    storm = Storm(clouds=clouds, styles=styles, meta={"seed": config.seed})
    return storm, vectors


def combined_layout(docs: list[Document], config: LayoutConfig,
                    params=None, trace: list | None = None) -> Storm:
    """Iterative coordination, then the gradient optimizer."""
    storm, vectors = plan_storm(docs, config)
    iterative_layout(storm, config)
    from .optimizer import ObjectiveParams, minimize  # deferred: optimizer imports this module

    params = params if params is not None else ObjectiveParams()
    return minimize(storm, vectors, params, config, trace=trace)


def build_storm(docs: list[Document], method: str, config: LayoutConfig,
                params=None, trace: list | None = None) -> tuple[Storm, dict[str, DocumentVector]]:
    """Run one of the four layout methods over a corpus."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    storm, vectors = plan_storm(docs, config)
    if method == INDEPENDENT:
        independent_layout(storm, config)
    elif method == ITERATIVE:
        iterative_layout(storm, config)
    else:
        from .optimizer import ObjectiveParams, minimize

        if method == GRADIENT:
            independent_layout(storm, config)
        else:
            iterative_layout(storm, config)
        params = params if params is not None else ObjectiveParams()
        storm = minimize(storm, vectors, params, config, trace=trace)
    storm.meta["method"] = method
    return storm, vectors


def validate_storm(storm: Storm) -> list[str]:
    """Invariant violations: within-cloud overlaps and out-of-frame words."""
    problems = []
    for cloud in storm.clouds:
        missing = [w for w in cloud.words if w not in storm.styles]
        if missing:
            problems.append(f"{cloud.doc_id}: words missing from style table: {missing}")
            continue
        trees = {w: cloud.tree(w, storm.styles) for w in cloud.words}
        for w in cloud.words:
            if not cloud.frame.contains_box(trees[w].root_at(cloud.positions[w])):
                problems.append(f"{cloud.doc_id}: word {w!r} outside frame")
        for i, a in enumerate(cloud.words):
            for b in cloud.words[i + 1:]:
                if intersects(trees[a], cloud.positions[a], trees[b], cloud.positions[b]):
                    problems.append(f"{cloud.doc_id}: words {a!r} and {b!r} overlap")
    return problems


def storm_to_dict(storm: Storm) -> dict:
    """Serializable form: per cloud, per word text/x/y/size/color/alpha/orientation."""
    return {
        "meta": dict(storm.meta),
        "clouds": [
            {
                "doc_id": cloud.doc_id,
                "frame": {"width": cloud.frame.width, "height": cloud.frame.height},
                "words": [
                    {
                        "text": w,
                        "x": cloud.positions[w][0],
                        "y": cloud.positions[w][1],
                        "size": cloud.sizes[w],
                        "color": color_hex(storm.styles[w].color),
                        "alpha": storm.styles[w].alpha,
                        "orientation": storm.styles[w].orientation,
                    }
                    for w in cloud.words
                ],
            }
            for cloud in storm.clouds
        ],
    }


def storm_from_dict(payload: dict) -> Storm:
    clouds = []
    styles: dict[str, WordStyle] = {}
    for entry in payload["clouds"]:
        words = []
        positions = {}
        sizes = {}
        for rec in entry["words"]:
            w = rec["text"]
            words.append(w)
            positions[w] = (float(rec["x"]), float(rec["y"]))
            sizes[w] = float(rec["size"])
            if w not in styles:
                styles[w] = WordStyle(word=w, color=parse_color(rec["color"]),
                                      alpha=float(rec["alpha"]),
                                      orientation=rec["orientation"])
        frame = Frame(float(entry["frame"]["width"]), float(entry["frame"]["height"]))
        clouds.append(Cloud(doc_id=entry["doc_id"], words=words, positions=positions,
                            sizes=sizes, frame=frame))
    return Storm(clouds=clouds, styles=styles, meta=dict(payload.get("meta", {})))


def save_storm(storm: Storm, path: str | Path) -> None:
    Path(path).write_text(json.dumps(storm_to_dict(storm), indent=2) + "\n", encoding="utf-8")


def load_storm(path: str | Path) -> Storm:
    return storm_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
