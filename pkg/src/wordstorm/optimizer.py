"""Gradient-based storm coordination.

The objective ties the storm to its corpus: for every document pair, the
squared gap between the document distance (Euclidean, on size-mapped
term-weight vectors) and the cloud distance (summed squared size
differences plus a weighted sum of squared position differences for
shared words), plus a per-cloud correspondence term keeping displayed
sizes near their document-derived targets. Two penalties are added: the
squared minimum separation distance of every overlapping root-box pair,
weighted by an exponentially growing factor until no overlap remains, and
the squared distance of every word from its cloud center.

Gradients are analytic. Root-box dimensions are treated as constants with
respect to font size within one inner descent run and refreshed between
runs, so each run minimizes one fixed smooth(ish) function and its
backtracked trace is non-increasing. Overlap and termination checks
always use boxes at current sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import DocumentVector, compute_stats
from .geometry import measure
from .layout import Cloud, LayoutConfig, Storm, cloud_rng, spiral_layout
from .style import SizeScale, WordStyle, assign_size

# Residual penetrations at most this large (px) may be resolved by the
# direct separation sweep instead of another penalty increase.
NUDGE_EPS = 0.75
SWEEP_GAP = 1e-6
MAX_SWEEP_PASSES = 64

ARMIJO_C = 1e-4
MIN_STEP = 1e-20

FRAME_MARGIN_FRAC = 0.05
FRAME_MARGIN_MIN = 2.0


class OptimizerStalled(RuntimeError):
    """Overlaps persisted past the overlap penalty cap."""


@dataclass
class ObjectiveParams:
    """Weights and schedule for the penalized objective."""

    position_weight: float = 0.1        # shared-word position term inside cloud distance
    compactness_weight: float = 0.05    # pull toward the cloud center
    correspondence_weight: float = 1.0  # displayed sizes vs document targets
    overlap_penalty: float = 1.0        # starting overlap weight
    overlap_growth: float = 2.0
    overlap_cap_factor: float = 2.0 ** 20
    inner_tol_frac: float = 1e-4        # gradient-norm tolerance, relative to run start
    max_inner_iterations: int = 500

    def __post_init__(self) -> None:
        if self.position_weight < 0 or self.compactness_weight < 0:
            raise ValueError("term weights must be non-negative")
        if self.overlap_penalty <= 0:
            raise ValueError("overlap_penalty must be positive")
        if self.overlap_growth <= 1:
            raise ValueError("overlap_growth must exceed 1")
        if self.max_inner_iterations < 1:
            raise ValueError("max_inner_iterations must be positive")


@dataclass
class OptState:
    """Snapshot of the flat optimization vector (x, y, s per word)."""

    x: np.ndarray
    objective: float
    gradient_norm: float
    overlap_penalty: float


@dataclass(frozen=True)
class TraceRow:
    """One accepted descent step; the optional CSV trace row."""

    iteration: int
    overlap_penalty: float
    objective: float
    stress: float
    correspondence: float
    overlap: float
    compactness: float
    gradient_norm: float


@dataclass(frozen=True)
class ObjectiveTerms:
    stress: float
    correspondence: float
    overlap: float
    compactness: float

    @property
    def total(self) -> float:
        return self.stress + self.correspondence + self.overlap + self.compactness


def doc_distance(u: dict[str, float], v: dict[str, float]) -> float:
    """Euclidean distance between two sparse vectors (absent word = 0)."""
    words = set(u) | set(v)
    return math.sqrt(sum((u.get(w, 0.0) - v.get(w, 0.0)) ** 2 for w in words))


def cloud_distance(a: Cloud, b: Cloud, position_weight: float) -> float:
    """Summed squared size differences over the word union (absent size = 0)
    plus position_weight times squared position differences over shared words."""
    size_part = 0.0
    for w in set(a.words) | set(b.words):
        size_part += (a.sizes.get(w, 0.0) - b.sizes.get(w, 0.0)) ** 2
    pos_part = 0.0
    for w in set(a.words) & set(b.words):
        pa, pb = a.positions[w], b.positions[w]
        pos_part += (pa[0] - pb[0]) ** 2 + (pa[1] - pb[1]) ** 2
    return size_part + position_weight * pos_part


def word_targets(vector: DocumentVector, words: list[str], s_min: float = 12.0,
                 s_max: float = 64.0, idf: dict[str, float] | None = None) -> dict[str, float]:
    """Size-space targets for a cloud's words: the initial size assignment."""
    if idf is None:
        weights = {w: float(vector.counts[w]) for w in words}
    else:
        weights = {w: vector.counts[w] * idf.get(w, 0.0) for w in words}
    scale = SizeScale.from_weights(list(weights.values()), s_min, s_max)
    return {w: assign_size(wt, scale) for w, wt in weights.items()}


def correspondence(vector: DocumentVector, cloud: Cloud, s_min: float = 12.0,
                   s_max: float = 64.0, idf: dict[str, float] | None = None) -> float:
    """Summed squared gap between displayed sizes and their targets."""
    targets = word_targets(vector, cloud.words, s_min, s_max, idf)
    return sum((targets[w] - cloud.sizes[w]) ** 2 for w in cloud.words)


def _storm_idf(vectors: dict[str, DocumentVector], config: LayoutConfig) -> dict[str, float] | None:
    if config.weight_mode != "tfidf":
        return None
    return compute_stats(list(vectors.values())).idf


def _all_targets(storm: Storm, vectors: dict[str, DocumentVector],
                 config: LayoutConfig) -> dict[str, dict[str, float]]:
    idf = _storm_idf(vectors, config)
    return {
        c.doc_id: word_targets(vectors[c.doc_id], c.words, config.s_min, config.s_max, idf)
        for c in storm.clouds
    }


def stress_term(storm: Storm, vectors: dict[str, DocumentVector],
                params: ObjectiveParams, config: LayoutConfig | None = None) -> float:
    config = config or LayoutConfig()
    targets = _all_targets(storm, vectors, config)
    clouds = storm.clouds
    total = 0.0
    for i in range(len(clouds)):
        for j in range(i + 1, len(clouds)):
            du = doc_distance(targets[clouds[i].doc_id], targets[clouds[j].doc_id])
            dv = cloud_distance(clouds[i], clouds[j], params.position_weight)
            total += (du - dv) ** 2
    return total


def correspondence_term(storm: Storm, vectors: dict[str, DocumentVector],
                        params: ObjectiveParams, config: LayoutConfig | None = None) -> float:
    config = config or LayoutConfig()
    idf = _storm_idf(vectors, config)
    return params.correspondence_weight * sum(
        correspondence(vectors[c.doc_id], c, config.s_min, config.s_max, idf)
        for c in storm.clouds
    )


def overlap_term(storm: Storm, params: ObjectiveParams,
                 overlap_penalty: float | None = None) -> float:
    """Penalty weight times the summed squared root-box separation distances."""
    lam = params.overlap_penalty if overlap_penalty is None else overlap_penalty
    total = 0.0
    for cloud in storm.clouds:
        trees = {w: cloud.tree(w, _styles_of(storm)) for w in cloud.words}
        for i, a in enumerate(cloud.words):
            for b in cloud.words[i + 1:]:
                pen = _root_penetration(trees[a], cloud.positions[a], trees[b], cloud.positions[b])
                total += pen * pen
    return lam * total


def compactness_term(storm: Storm, params: ObjectiveParams) -> float:
    total = 0.0
    for cloud in storm.clouds:
        for w in cloud.words:
            x, y = cloud.positions[w]
            total += x * x + y * y
    return params.compactness_weight * total


def _styles_of(storm: Storm) -> dict[str, WordStyle]:
    return storm.styles


def _root_penetration(tree_a, pos_a, tree_b, pos_b) -> float:
    from .geometry import separation_distance

    return separation_distance(tree_a, pos_a, tree_b, pos_b)


def similarity_discrepancy(storm: Storm, vectors: dict[str, DocumentVector],
                           params: ObjectiveParams | None = None,
                           config: LayoutConfig | None = None) -> float:
    """Stress plus (unweighted) correspondence: how far the storm drifts
    from faithfully mirroring the corpus."""
    params = params or ObjectiveParams()
    config = config or LayoutConfig()
    unit = ObjectiveParams(position_weight=params.position_weight, correspondence_weight=1.0)
    return stress_term(storm, vectors, params, config) + correspondence_term(storm, vectors, unit, config)


def objective_terms(storm: Storm, vectors: dict[str, DocumentVector],
                    params: ObjectiveParams, config: LayoutConfig | None = None,
                    overlap_penalty: float | None = None) -> ObjectiveTerms:
    """The four weighted terms of the penalized objective, computed via the
    reference (dictionary) path."""
    config = config or LayoutConfig()
    return ObjectiveTerms(
        stress=stress_term(storm, vectors, params, config),
        correspondence=correspondence_term(storm, vectors, params, config),
        overlap=overlap_term(storm, params, overlap_penalty),
        compactness=compactness_term(storm, params),
    )


def penalized_objective(storm: Storm, vectors: dict[str, DocumentVector],
                        params: ObjectiveParams, config: LayoutConfig | None = None,
                        overlap_penalty: float | None = None) -> float:
    """Full objective value at the storm's current state (vectorized path)."""
    config = config or LayoutConfig()
    problem = StormProblem(storm, vectors, params, config)
    lam = params.overlap_penalty if overlap_penalty is None else overlap_penalty
    return problem.objective(problem.pack(storm), lam)


def gradient(storm: Storm, vectors: dict[str, DocumentVector],
             params: ObjectiveParams, config: LayoutConfig | None = None,
             overlap_penalty: float | None = None) -> np.ndarray:
    """Analytic gradient of the penalized objective at the storm's state.

    Flat layout: per cloud (storm order), per word (cloud order), the
    triple (x, y, s). Box dimensions are taken at the current sizes and
    held constant, so the overlap term has no size partials.
    """
    config = config or LayoutConfig()
    problem = StormProblem(storm, vectors, params, config)
    lam = params.overlap_penalty if overlap_penalty is None else overlap_penalty
    x = problem.pack(storm)
    return problem.gradient(x, lam, problem.box_dims(x))


class StormProblem:
    """Vectorized objective/gradient over a storm's flat state vector.

    Word presence is encoded over the storm vocabulary so pairwise terms
    become a handful of dense matrix products; within-cloud overlap terms
    use padded per-cloud slot arrays.
    """

    def __init__(self, storm: Storm, vectors: dict[str, DocumentVector],
                 params: ObjectiveParams, config: LayoutConfig):
        self.params = params
        self.config = config
        clouds = storm.clouds
        n = len(clouds)
        vocab = sorted({w for c in clouds for w in c.words})
        vidx = {w: i for i, w in enumerate(vocab)}
        self.vocab = vocab
        self.n_clouds = n

        counts = [len(c.words) for c in clouds]
        self.dim = 3 * sum(counts)
        rows, cols, flat = [], [], []
        offset = 0
        for i, c in enumerate(clouds):
            for w in c.words:
                rows.append(i)
                cols.append(vidx[w])
                flat.append(offset)
                offset += 3
        self.rows = np.asarray(rows, dtype=np.intp)
        self.cols = np.asarray(cols, dtype=np.intp)
        self.flat = np.asarray(flat, dtype=np.intp)

        v = len(vocab)
        present = np.zeros((n, v))
        present[self.rows, self.cols] = 1.0
        self.present = present

        # Padded per-cloud slots for the overlap term.
        m = max(counts) if counts else 0
        self.slot_mask = np.zeros((n, m), dtype=bool)
        self.slot_flat = np.zeros((n, m), dtype=np.intp)
        self.unit_w = np.zeros((n, m))
        self.unit_h = np.zeros((n, m))
        k = 0
        for i, c in enumerate(clouds):
            for j, w in enumerate(c.words):
                self.slot_mask[i, j] = True
                self.slot_flat[i, j] = self.flat[k]
                unit = measure(w, 1.0, storm.styles[w].orientation)
                self.unit_w[i, j] = unit.width
                self.unit_h[i, j] = unit.height
                k += 1

        targets = _all_targets(storm, vectors, config)
        t = np.zeros((n, v))
        k = 0
        for i, c in enumerate(clouds):
            for w in c.words:
                t[i, vidx[w]] = targets[c.doc_id][w]
                k += 1
        self.targets = t

        # Constant pairwise document distances in size units.
        gram = t @ t.T
        sq = np.diag(gram).copy()
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0)
        np.fill_diagonal(d2, 0.0)
        self.doc_dist = np.sqrt(d2)

    # -- state packing ---------------------------------------------------

    def pack(self, storm: Storm) -> np.ndarray:
        x = np.zeros(self.dim)
        k = 0
        for c in storm.clouds:
            for w in c.words:
                px, py = c.positions[w]
                x[k], x[k + 1], x[k + 2] = px, py, c.sizes[w]
                k += 3
        return x

    def unpack_into(self, storm: Storm, x: np.ndarray) -> None:
        k = 0
        for c in storm.clouds:
            for w in c.words:
                c.positions[w] = (float(x[k]), float(x[k + 1]))
                c.sizes[w] = float(x[k + 2])
                k += 3

    def _fields(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n, v = self.present.shape
        xs = np.zeros((n, v))
        ys = np.zeros((n, v))
        ss = np.zeros((n, v))
        xs[self.rows, self.cols] = x[self.flat]
        ys[self.rows, self.cols] = x[self.flat + 1]
        ss[self.rows, self.cols] = x[self.flat + 2]
        return xs, ys, ss

    def box_dims(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Full root-box dimensions per slot at the sizes inside x."""
        s = np.where(self.slot_mask, x[self.slot_flat + 2], 0.0)
        return s * self.unit_w, s * self.unit_h

    def _slot_xy(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        sx = np.where(self.slot_mask, x[self.slot_flat], 0.0)
        sy = np.where(self.slot_mask, x[self.slot_flat + 1], 0.0)
        return sx, sy

    # -- objective -------------------------------------------------------

    def _cloud_dist_matrix(self, xs, ys, ss) -> np.ndarray:
        p = self.present
        gram = ss @ ss.T
        sq = np.diag(gram).copy()
        vmat = sq[:, None] + sq[None, :] - 2.0 * gram
        if self.params.position_weight != 0.0:
            q = xs * xs + ys * ys
            pos = q @ p.T + p @ q.T - 2.0 * (xs @ xs.T + ys @ ys.T)
            vmat = vmat + self.params.position_weight * pos
        np.fill_diagonal(vmat, 0.0)
        return vmat

    def _penetrations(self, x: np.ndarray,
                      dims: tuple[np.ndarray, np.ndarray] | None) -> tuple[np.ndarray, ...]:
        w, h = self.box_dims(x) if dims is None else dims
        sx, sy = self._slot_xy(x)
        dx = sx[:, :, None] - sx[:, None, :]
        dy = sy[:, :, None] - sy[:, None, :]
        ox = 0.5 * (w[:, :, None] + w[:, None, :]) - np.abs(dx)
        oy = 0.5 * (h[:, :, None] + h[:, None, :]) - np.abs(dy)
        pair = self.slot_mask[:, :, None] & self.slot_mask[:, None, :]
        m = pair.shape[1]
        if m:
            idx = np.arange(m)
            pair[:, idx, idx] = False
        pen = np.where(pair & (ox > 0.0) & (oy > 0.0), np.minimum(ox, oy), 0.0)
        return pen, ox, oy, dx, dy

    def terms(self, x: np.ndarray, overlap_penalty: float,
              dims: tuple[np.ndarray, np.ndarray] | None = None) -> ObjectiveTerms:
        xs, ys, ss = self._fields(x)
        r = self.doc_dist - self._cloud_dist_matrix(xs, ys, ss)
        stress = 0.5 * float(np.sum(r * r))
        corr = self.params.correspondence_weight * float(np.sum((ss - self.targets) ** 2))
        pen = self._penetrations(x, dims)[0]
        overlap = overlap_penalty * 0.5 * float(np.sum(pen * pen))
        compact = self.params.compactness_weight * float(np.sum(xs * xs + ys * ys))
        return ObjectiveTerms(stress, corr, overlap, compact)

    def objective(self, x: np.ndarray, overlap_penalty: float,
                  dims: tuple[np.ndarray, np.ndarray] | None = None) -> float:
        return self.terms(x, overlap_penalty, dims).total

    def gradient(self, x: np.ndarray, overlap_penalty: float,
                 dims: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
        xs, ys, ss = self._fields(x)
        p = self.present
        kappa = self.params.position_weight
        r = self.doc_dist - self._cloud_dist_matrix(xs, ys, ss)
        rsum = r.sum(axis=1)

        gs = -4.0 * (rsum[:, None] * ss - r @ ss)
        gs += 2.0 * self.params.correspondence_weight * (ss - self.targets)
        if kappa != 0.0:
            gx = -4.0 * kappa * (xs * (r @ p) - p * (r @ xs))
            gy = -4.0 * kappa * (ys * (r @ p) - p * (r @ ys))
        else:
            gx = np.zeros_like(xs)
            gy = np.zeros_like(ys)
        mu = self.params.compactness_weight
        gx += 2.0 * mu * xs
        gy += 2.0 * mu * ys

        grad = np.zeros(self.dim)
        grad[self.flat] = (gx * p)[self.rows, self.cols]
        grad[self.flat + 1] = (gy * p)[self.rows, self.cols]
        grad[self.flat + 2] = (gs * p)[self.rows, self.cols]

        pen, ox, oy, dx, dy = self._penetrations(x, dims)
        if np.any(pen > 0.0):
            active_x = pen > 0.0
            use_x = ox <= oy  # ties resolved along the x axis
            mx = np.where(active_x & use_x, -2.0 * pen * np.sign(dx), 0.0)
            my = np.where(active_x & ~use_x, -2.0 * pen * np.sign(dy), 0.0)
            gox = overlap_penalty * mx.sum(axis=2)
            goy = overlap_penalty * my.sum(axis=2)
            np.add.at(grad, self.slot_flat[self.slot_mask], gox[self.slot_mask])
            np.add.at(grad, self.slot_flat[self.slot_mask] + 1, goy[self.slot_mask])
        return grad

    def max_penetration(self, x: np.ndarray) -> float:
        """Worst root-box penetration at current sizes (0 = overlap-free)."""
        pen = self._penetrations(x, None)[0]
        return float(pen.max()) if pen.size else 0.0

    def state(self, x: np.ndarray, overlap_penalty: float) -> OptState:
        dims = self.box_dims(x)
        g = self.gradient(x, overlap_penalty, dims)
        return OptState(x=x, objective=self.objective(x, overlap_penalty, dims),
                        gradient_norm=float(np.linalg.norm(g)),
                        overlap_penalty=overlap_penalty)


def _descend(problem: StormProblem, x: np.ndarray, lam: float,
             trace: list[TraceRow] | None) -> np.ndarray:
    """One inner run: backtracked gradient descent at fixed penalty weight.

    Box dimensions are frozen at the run's entry sizes, so the accepted
    objective sequence is strictly non-increasing.
    """
    params = problem.params
    dims = problem.box_dims(x)
    f = problem.objective(x, lam, dims)
    g = problem.gradient(x, lam, dims)
    gnorm = float(np.linalg.norm(g))
    tol = params.inner_tol_frac * gnorm
    if trace is not None:
        trace.append(_trace_row(problem, x, lam, dims, 0, f, gnorm))
    step = 1.0
    for it in range(1, params.max_inner_iterations + 1):
        if gnorm <= tol:
            break
        gsq = gnorm * gnorm
        t = step
        accepted = False
        while t >= MIN_STEP:
            x_new = x - t * g
            f_new = problem.objective(x_new, lam, dims)
            if f_new <= f - ARMIJO_C * t * gsq:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        x, f = x_new, f_new
        step = 2.0 * t
        g = problem.gradient(x, lam, dims)
        gnorm = float(np.linalg.norm(g))
        if trace is not None:
            trace.append(_trace_row(problem, x, lam, dims, it, f, gnorm))
    return x


def _trace_row(problem: StormProblem, x: np.ndarray, lam: float, dims,
               iteration: int, objective: float, gnorm: float) -> TraceRow:
    terms = problem.terms(x, lam, dims)
    return TraceRow(iteration=iteration, overlap_penalty=lam, objective=objective,
                    stress=terms.stress, correspondence=terms.correspondence,
                    overlap=terms.overlap, compactness=terms.compactness,
                    gradient_norm=gnorm)


def _separation_sweep(problem: StormProblem, x: np.ndarray) -> tuple[np.ndarray, bool]:
    """Resolve residual penetrations up to NUDGE_EPS by direct pushes.

    Pairs are processed in a fixed (cloud, slot, slot) order, shifted apart
    along the smaller-penetration axis. Returns the possibly updated state
    and whether it is now overlap-free.
    """
    worst = problem.max_penetration(x)
    if worst == 0.0:
        return x, True
    if worst > NUDGE_EPS:
        return x, False
    x = x.copy()
    for _ in range(MAX_SWEEP_PASSES):
        pen, ox, oy, dx, dy = problem._penetrations(x, None)
        hits = np.argwhere(pen > 0.0)
        hits = hits[hits[:, 1] < hits[:, 2]]
        if hits.size == 0:
            return x, True
        for i, k, l in hits:
            fk = problem.slot_flat[i, k]
            fl = problem.slot_flat[i, l]
            if ox[i, k, l] <= oy[i, k, l]:
                shift = 0.5 * ox[i, k, l] + SWEEP_GAP
                sign = 1.0 if dx[i, k, l] >= 0.0 else -1.0
                x[fk] += sign * shift
                x[fl] -= sign * shift
            else:
                shift = 0.5 * oy[i, k, l] + SWEEP_GAP
                sign = 1.0 if dy[i, k, l] >= 0.0 else -1.0
                x[fk + 1] += sign * shift
                x[fl + 1] -= sign * shift
    return x, problem.max_penetration(x) == 0.0


def _fit_frame(cloud: Cloud, styles: dict[str, WordStyle]):
    from .geometry import Frame

    half_w = half_h = 1.0
    for w in cloud.words:
        tree = cloud.tree(w, styles)
        x0, y0, x1, y1 = tree.root_at(cloud.positions[w])
        half_w = max(half_w, abs(x0), abs(x1))
        half_h = max(half_h, abs(y0), abs(y1))
    margin = max(FRAME_MARGIN_MIN, FRAME_MARGIN_FRAC * max(half_w, half_h))
    return Frame(2.0 * (half_w + margin), 2.0 * (half_h + margin))


def _cloud_has_overlap(problem: StormProblem, x: np.ndarray, cloud_index: int) -> bool:
    pen = problem._penetrations(x, None)[0]
    return bool(np.any(pen[cloud_index] > 0.0))


def minimize(storm: Storm, vectors: dict[str, DocumentVector],
             params: ObjectiveParams, config: LayoutConfig | None = None,
             trace: list[TraceRow] | None = None) -> Storm:
    """Penalty-scheduled descent until the storm is overlap-free.

    Runs inner descent at the current overlap weight, grows the weight
    exponentially while any root-box overlap survives, then clamps sizes
    to [s_min, s_max] and repairs with one spiral pass per affected cloud
    if the clamp reintroduced overlap. Frames are recomputed from the
    final bounding boxes. Raises OptimizerStalled past the penalty cap.
    """
    config = config or LayoutConfig()
    problem = StormProblem(storm, vectors, params, config)
    x = problem.pack(storm)
    if not np.all(np.isfinite(x)):
        raise ValueError("storm state contains non-finite positions or sizes")

    lam = params.overlap_penalty
    lam_max = params.overlap_penalty * params.overlap_cap_factor
    while True:
        x = _descend(problem, x, lam, trace)
        x, clean = _separation_sweep(problem, x)
        if clean:
            break
        lam *= params.overlap_growth
        if lam > lam_max:
            raise OptimizerStalled(
                f"overlaps remain at overlap penalty {lam:.3g} (cap {lam_max:.3g})")
    storm.meta["final_overlap_penalty"] = lam

    sizes = x[problem.flat + 2]
    clamped = np.clip(sizes, config.s_min, config.s_max)
    if np.any(clamped != sizes):
        x = x.copy()
        x[problem.flat + 2] = clamped
    problem.unpack_into(storm, x)

    needs_repair = [
        i for i in range(len(storm.clouds)) if _cloud_has_overlap(problem, x, i)
    ]
    for i in needs_repair:
        cloud = storm.clouds[i]
        frame = _fit_frame(cloud, storm.styles)
        rng = cloud_rng(config.seed, cloud.doc_id, "repair")
        storm.clouds[i] = spiral_layout(cloud.doc_id, cloud.words, cloud.sizes,
                                        storm.styles, frame, rng, config,
                                        desired=dict(cloud.positions))
    for i, cloud in enumerate(storm.clouds):
        storm.clouds[i].frame = _fit_frame(cloud, storm.styles)
    return storm
