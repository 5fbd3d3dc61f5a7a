"""Popularity-discriminable pair mining.

Treats the log-scaled like count S of a post as a noisy observation of its
latent intrinsic popularity (S normal around the latent mean with std sigma).
For two posts of the same user, the probability that A is intrinsically more
popular than B given the observed evidence is

    P = Phi((S_A - S_B) / (sqrt(2) * sigma))

where Phi is the standard normal CDF; the sqrt(2) reflects the doubled
variance of the difference of two independent observations. A pair is emitted
when that probability clears the threshold T and the two posts are close
enough in time and caption context that non-visual factors roughly cancel:
same user, upload times within ten days, captions with identical hashtag and
mention multisets and at most six plain words, and each post in at most one
pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .corpus import SECONDS_PER_DAY, CaptionInfo, Post, analyze_caption, log_likes

# Zelen & Severo polynomial for the standard normal CDF (abs error <= 7.5e-8).
_CDF_P = 0.2316419
_CDF_B = (0.319381530, -0.356563782, 1.781477937, -1.821255978, 1.330274429)


@dataclass(frozen=True)
class MinerConfig:
    """Mining thresholds; defaults follow the reference operating point."""

    threshold: float = 0.95  # minimum pair probability T
    sigma: float = 0.3  # std of the log-likes observation model
    max_interval_days: int = 10
    max_caption_words: int = 6
    reference_time: int = 0

    def __post_init__(self):
        if not 0.5 < self.threshold < 1.0:
            raise ValueError(f"threshold must be in (0.5, 1), got {self.threshold}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.max_interval_days <= 0:
            raise ValueError(f"max_interval_days must be positive, got {self.max_interval_days}")
        if self.max_caption_words < 0:
            raise ValueError(f"max_caption_words must be >= 0, got {self.max_caption_words}")


@dataclass(frozen=True)
class PDIP:
    """An ordered popularity-discriminable pair: id_a is the more popular post."""

    id_a: str
    id_b: str
    user_id: str
    prob: float  # P(A intrinsically more popular than B), >= threshold
    delta_s: float  # S_A - S_B, >= 0 in canonical orientation


@dataclass(frozen=True)
class PairStats:
    n_pairs: int
    n_users: int
    mean_prob: float
    mean_interval_days: float


def normal_cdf(z: float) -> float:
    """Standard normal CDF, absolute error <= 7.5e-8 on [-8, 8], clamped to [0, 1].

    Rational polynomial approximation in 1/(1 + p|z|) weighted by the normal
    density; the negative branch uses the exact symmetry Phi(-z) = 1 - Phi(z).
    """
    if not math.isfinite(z):
        raise ValueError(f"normal_cdf requires finite z, got {z}")
    if z == 0.0:
        return 0.5
    az = abs(z)
    t = 1.0 / (1.0 + _CDF_P * az)
    poly = t * (_CDF_B[0] + t * (_CDF_B[1] + t * (_CDF_B[2] + t * (_CDF_B[3] + t * _CDF_B[4]))))
    upper = 1.0 - poly * math.exp(-0.5 * az * az) / math.sqrt(2.0 * math.pi)
    p = upper if z > 0 else 1.0 - upper
    return min(1.0, max(0.0, p))


def pdip_probability(s_a: float, s_b: float, sigma: float) -> float:
    """Probability that the post with evidence s_a is intrinsically more popular."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return normal_cdf((s_a - s_b) / (math.sqrt(2.0) * sigma))


def captions_compatible(a: CaptionInfo, b: CaptionInfo, max_words: int) -> bool:
    """True iff both captions are short and share identical hashtag/mention multisets."""
    return (
        a.word_count <= max_words
        and b.word_count <= max_words
        and a.hashtags == b.hashtags
        and a.mentions == b.mentions
    )


def mine_pairs(posts: list[Post], features_present: set[str] | None, config: MinerConfig) -> list[PDIP]:
    """Mine constraint-satisfying pairs from an already-filtered candidate pool.

    Within each user, candidates are enumerated over a sliding window of
    `max_interval_days` on the time-sorted posts, then matched greedily in
    descending probability order (ties broken by pair ids) so that no post
    joins more than one pair. `features_present` of None admits every post.
    The result is sorted by (user_id, id_a) and fully deterministic.
    """
    by_user: dict[str, list[Post]] = {}
    for post in posts:
        by_user.setdefault(post.user_id, []).append(post)

    max_interval = config.max_interval_days * SECONDS_PER_DAY
    result: list[PDIP] = []
    for user_id in sorted(by_user):
        group = sorted(by_user[user_id], key=lambda p: (p.upload_time, p.post_id))
        if features_present is not None:
            group = [p for p in group if p.post_id in features_present]
        captions = [analyze_caption(p.caption) for p in group]
        scores = [log_likes(p.likes) for p in group]

        candidates: list[PDIP] = []
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                if group[j].upload_time - group[i].upload_time > max_interval:
                    break
                if not captions_compatible(captions[i], captions[j], config.max_caption_words):
                    continue
                hi, lo = (i, j) if scores[i] >= scores[j] else (j, i)
                prob = pdip_probability(scores[hi], scores[lo], config.sigma)
                if prob < config.threshold:
                    continue
                candidates.append(
                    PDIP(
                        id_a=group[hi].post_id,
                        id_b=group[lo].post_id,
                        user_id=user_id,
                        prob=prob,
                        delta_s=scores[hi] - scores[lo],
                    )
                )

        candidates.sort(key=lambda c: (-c.prob, c.id_a, c.id_b))
        used: set[str] = set()
        for cand in candidates:
            if cand.id_a in used or cand.id_b in used:
                continue
            used.add(cand.id_a)
            used.add(cand.id_b)
            result.append(cand)

    result.sort(key=lambda c: (c.user_id, c.id_a))
    return result


def pair_stats(pairs: list[PDIP], posts: list[Post]) -> PairStats:
    """Summary statistics of a mined pair list; pair ids must resolve in `posts`."""
    upload_time = {p.post_id: p.upload_time for p in posts}
    intervals = []
    for pair in pairs:
        for pid in (pair.id_a, pair.id_b):
            if pid not in upload_time:
                raise ValueError(f"pair references unknown post_id {pid!r}")
        intervals.append(abs(upload_time[pair.id_a] - upload_time[pair.id_b]) / SECONDS_PER_DAY)
    n = len(pairs)
    return PairStats(
        n_pairs=n,
        n_users=len({pair.user_id for pair in pairs}),
        mean_prob=sum(p.prob for p in pairs) / n if n else math.nan,
        mean_interval_days=sum(intervals) / n if n else math.nan,
    )


def write_pairs(path: str | Path, pairs: list[PDIP]) -> None:
    """Emit pairs as CSV: id_a, id_b, user_id, prob (6 decimals), delta_s."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("id_a,id_b,user_id,prob,delta_s\n")
        for p in pairs:
            f.write(f"{p.id_a},{p.id_b},{p.user_id},{p.prob:.6f},{format(p.delta_s, '.17g')}\n")


def read_pairs(path: str | Path) -> list[PDIP]:
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != "id_a,id_b,user_id,prob,delta_s":
            raise ValueError(f"unexpected pairs header: {header!r}")
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            if len(parts) != 5:
                raise ValueError(f"line {lineno}: expected 5 fields, got {len(parts)}")
            pairs.append(
                PDIP(id_a=parts[0], id_b=parts[1], user_id=parts[2], prob=float(parts[3]), delta_s=float(parts[4]))
            )
    return pairs


def write_pair_stats_csv(path: str | Path, stats: PairStats) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("name,value\n")
        f.write(f"n_pairs,{stats.n_pairs}\n")
        f.write(f"n_users,{stats.n_users}\n")
        f.write(f"mean_prob,{stats.mean_prob!r}\n")
        f.write(f"mean_interval_days,{stats.mean_interval_days!r}\n")
