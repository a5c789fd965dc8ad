"""RSVP session planning: oddball block construction and presentation timelines.

Plans must replicate across implementations, so the shuffle is pinned down to
a named algorithm rather than a library default: xoshiro256** seeded through
splitmix64, driving an unbiased Fisher-Yates shuffle (rejection sampling for
the bounded draw). Every structural decision the plan encodes (which targets
land in which block, within-block order) comes from one documented stream of
draws, in the order written in :func:`build_plan`.
"""

from __future__ import annotations

from .dataio import RsvpPlan

_MASK64 = (1 << 64) - 1

IMAGES_PER_BLOCK = 200
TARGETS_PER_BLOCK = 10
N_BLOCKS = 5


class Xoshiro256StarStar:
    """xoshiro256** 1.0 (Blackman & Vigna), state seeded via splitmix64."""

    def __init__(self, seed: int):
        state = seed & _MASK64
        self._s = []
        for _ in range(4):
            state = (state + 0x9E3779B97F4A7C15) & _MASK64
            z = state
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
            self._s.append(z ^ (z >> 31))

    @staticmethod
    def _rotl(x: int, k: int) -> int:
        return ((x << k) | (x >> (64 - k))) & _MASK64

    def next_u64(self) -> int:
        s = self._s
        result = (self._rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = self._rotl(s[3], 45)
        return result

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection on the top of the 64-bit range."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = _MASK64 - (_MASK64 + 1) % bound
        while True:
            x = self.next_u64()
            if x <= limit:
                return x % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, descending index order."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]


def build_plan(
    image_ids_target: list[str],
    image_ids_distractor: list[str],
    rate_hz: int,
    seed: int,
    query_id: str = "",
    inter_block_gap_s: float = 5.0,
) -> RsvpPlan:
    """Build a 5-block oddball plan: 200 images per block, exactly 10 targets each.

    Draw order (one xoshiro256** stream from ``seed``): shuffle the target
    list, shuffle the distractor list, chunk both sequentially into blocks
    (10 + 190 per block), then shuffle each block's 200 entries.
    """
    n_targets = N_BLOCKS * TARGETS_PER_BLOCK
    n_distractors = N_BLOCKS * (IMAGES_PER_BLOCK - TARGETS_PER_BLOCK)
    if len(image_ids_target) != n_targets:
        raise ValueError(f"need exactly {n_targets} target ids, got {len(image_ids_target)}")
    if len(image_ids_distractor) != n_distractors:
        raise ValueError(
            f"need exactly {n_distractors} distractor ids, got {len(image_ids_distractor)}"
        )
    all_ids = list(image_ids_target) + list(image_ids_distractor)
    if len(set(all_ids)) != len(all_ids):
        raise ValueError("image ids must be distinct across targets and distractors")

    rng = Xoshiro256StarStar(seed)
    targets = list(image_ids_target)
    distractors = list(image_ids_distractor)
    rng.shuffle(targets)
    rng.shuffle(distractors)

    blocks: list[list[tuple[str, bool]]] = []
    per_block_distractors = IMAGES_PER_BLOCK - TARGETS_PER_BLOCK
    for b in range(N_BLOCKS):
        block = [(i, True) for i in targets[b * TARGETS_PER_BLOCK : (b + 1) * TARGETS_PER_BLOCK]]
        block += [
            (i, False)
            for i in distractors[b * per_block_distractors : (b + 1) * per_block_distractors]
        ]
        rng.shuffle(block)
        blocks.append(block)

    plan = RsvpPlan(
        query_id=query_id or f"q-seed{seed}",
        rate_hz=rate_hz,
        blocks=blocks,
        inter_block_gap_s=inter_block_gap_s,
        seed=seed,
    )
    plan.validate()
    return plan


def timeline_ms(plan: RsvpPlan) -> list[int]:
    """Stimulus onset times in integer milliseconds from presentation start.

    Onsets within a block are spaced exactly 1000/rate ms; blocks are separated
    by the plan's inter-block rest gap (excluded from the stimulus span).
    """
    spacing_ms = 1000 // plan.rate_hz
    if spacing_ms * plan.rate_hz != 1000:
        raise ValueError(f"rate {plan.rate_hz} Hz does not divide 1000 ms evenly")
    gap_ms = round(plan.inter_block_gap_s * 1000)
    onsets: list[int] = []
    t = 0
    for block in plan.blocks:
        for _ in block:
            onsets.append(t)
            t += spacing_ms
        t += gap_ms
    return onsets


def timeline(plan: RsvpPlan) -> list[float]:
    """Stimulus onsets in seconds (see :func:`timeline_ms` for the exact grid)."""
    return [t / 1000 for t in timeline_ms(plan)]


def stimulus_span_s(plan: RsvpPlan) -> float:
    """Total on-screen stimulus time: n_images / rate, rest gaps excluded."""
    return plan.n_images / plan.rate_hz
