"""Storm-wide visual attributes.

Font size encodes a word's weight within its cloud via a linear min-max
map. Color and orientation are drawn from a PRNG keyed by (seed, word),
so a word looks the same in every cloud of a storm and across runs. The
alpha channel encodes inverse document frequency: words present in many
documents render more transparent.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import VocabularyStats

HORIZONTAL = "horizontal"
VERTICAL = "vertical"

ALPHA_MIN = 0.35
P_VERTICAL = 0.2
SIZE_MIN = 12.0
SIZE_MAX = 64.0

# Dark saturated hues that read well on white.
DEFAULT_PALETTE: tuple[tuple[int, int, int], ...] = (
    (192, 57, 43),    # red
    (31, 97, 141),    # blue
    (30, 132, 73),    # green
    (108, 52, 131),   # purple
    (185, 119, 14),   # amber
    (17, 122, 139),   # teal
)


@dataclass(frozen=True)
class WordStyle:
    word: str
    color: tuple[int, int, int]
    alpha: float
    orientation: str


@dataclass(frozen=True)
class SizeScale:
    """Linear map from an observed weight range to a point-size range."""

    w_min: float
    w_max: float
    s_min: float = SIZE_MIN
    s_max: float = SIZE_MAX

    def __post_init__(self) -> None:
        if self.s_min >= self.s_max:
            raise ValueError("s_min must be below s_max")
        if self.w_min > self.w_max:
            raise ValueError("w_min must not exceed w_max")

    @classmethod
    def from_weights(cls, weights: list[float], s_min: float = SIZE_MIN,
                     s_max: float = SIZE_MAX) -> "SizeScale":
        return cls(w_min=min(weights), w_max=max(weights), s_min=s_min, s_max=s_max)


def assign_size(weight: float, scale: SizeScale) -> float:
    """Point size for a weight; a degenerate weight range maps to s_max."""
    if scale.w_min == scale.w_max:
        return scale.s_max
    frac = (weight - scale.w_min) / (scale.w_max - scale.w_min)
    return scale.s_min + (scale.s_max - scale.s_min) * frac


def _word_rng(seed: int, word: str) -> random.Random:
    # String seeding hashes via SHA-512, stable across runs and platforms.
    return random.Random(f"{seed}\x1f{word}")


def assign_styles(vocab: set[str] | frozenset[str], stats: VocabularyStats,
                  palette: tuple[tuple[int, int, int], ...] = DEFAULT_PALETTE,
                  p_vertical: float = P_VERTICAL, seed: int = 0,
                  alpha_min: float = ALPHA_MIN) -> dict[str, WordStyle]:
    """One style per word, identical regardless of cloud or iteration order."""
    if not palette:
        raise ValueError("palette must not be empty")
    if not 0.0 <= p_vertical <= 1.0:
        raise ValueError("p_vertical must lie in [0, 1]")
    idf_max = stats.idf_max
    styles = {}
    for word in sorted(vocab):
        rng = _word_rng(seed, word)
        color = palette[rng.randrange(len(palette))]
        orientation = VERTICAL if rng.random() < p_vertical else HORIZONTAL
        if idf_max == 0.0:
            alpha = 1.0
        else:
            alpha = alpha_min + (1.0 - alpha_min) * stats.idf.get(word, 0.0) / idf_max
        styles[word] = WordStyle(word=word, color=color, alpha=alpha, orientation=orientation)
    return styles


def color_hex(color: tuple[int, int, int]) -> str:
    return "#{:02x}{:02x}{:02x}".format(*color)


def parse_color(value: str) -> tuple[int, int, int]:
    """Parse a #rrggbb hex string."""
    v = value.lstrip("#")
    if len(v) != 6:
        raise ValueError(f"expected #rrggbb color, got {value!r}")
    return (int(v[0:2], 16), int(v[2:4], 16), int(v[4:6], 16))
