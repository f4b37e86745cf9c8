"""Request workloads: trace files, synthetic rulesets, locality-controlled packets.

All generation is a pure function of its inputs and seed (``random.Random``).
"""

from __future__ import annotations

import bisect
import itertools
import math
import random
import warnings
from dataclasses import dataclass, field
from typing import Hashable, Optional, Union

from .rules import (
    FIELD_MAX,
    FieldRange,
    Packet,
    ParseError,
    Rule,
    Ruleset,
    format_rule_line,
    highest_priority_match,
    overlaps,
    parse_rule_line,
)

# ---------------------------------------------------------------------------
# Trace types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Access:
    node: Hashable


@dataclass(frozen=True)
class Insert:
    rule: Rule


@dataclass(frozen=True)
class Delete:
    node: Hashable


Request = Union[Packet, Access, Insert, Delete]


@dataclass(frozen=True)
class LocalityParams:
    kind: str = "UNIFORM"
    zipf_s: float = 1.0
    run_len_mean: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("ZIPF", "RUNS", "UNIFORM"):
            raise ValueError(f"unknown locality kind {self.kind!r}")
        if not self.zipf_s > 0:
            raise ValueError("zipf_s must be > 0")
        if not self.run_len_mean >= 1:
            raise ValueError("run_len_mean must be >= 1")


@dataclass
class Trace:
    requests: list = field(default_factory=list)
    # per-request rule id the packet was built for (or the file's filterId)
    expected: list = field(default_factory=list)
    # per-request flag: packet lies in the rule's exclusive region
    exclusive: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.requests)

    def __iter__(self):
        return iter(self.requests)

    def packets(self) -> list:
        return [r for r in self.requests if isinstance(r, Packet)]


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------


def _parse_id(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


def parse_classbench_trace(text: str, rs: Optional[Ruleset] = None) -> Trace:
    """Parse a trace file.

    Packet lines are ``srcIP dstIP sport dport proto [filterId]`` in decimal;
    abstract lines are ``A id``, ``D id`` and ``I <filter line>``. Leading
    ``# key: value`` comments become metadata. Inserted rules get ids and
    priorities after every rule of ``rs``.
    """
    trace = Trace()
    next_id = len(rs) + 1 if rs is not None else 1
    if rs is not None:
        next_id = max([next_id] + [r.id + 1 for r in rs if isinstance(r.id, int)])
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            key, sep, value = s[1:].partition(":")
            if sep and not trace.requests:
                trace.meta[key.strip()] = value.strip()
            continue
        head, _, rest = s.partition(" ")
        if head in ("A", "D"):
            if not rest.strip() or len(rest.split()) != 1:
                raise ParseError(lineno, f"expected '{head} <id>'")
            node = _parse_id(rest.strip())
            trace.requests.append(Access(node) if head == "A" else Delete(node))
            trace.expected.append(node)
            trace.exclusive.append(True)
            continue
        if head == "I":
            rule = parse_rule_line(rest, next_id, next_id, lineno)
            next_id += 1
            trace.requests.append(Insert(rule))
            trace.expected.append(rule.id)
            trace.exclusive.append(True)
            continue
        toks = s.split()
        if len(toks) not in (5, 6) or not all(t.isdigit() for t in toks):
            raise ParseError(lineno, f"malformed packet line: {s!r}")
        src, dst, sport, dport, proto = map(int, toks[:5])
        try:
            pkt = Packet(proto, src, dst, sport, dport)
            for v, hi in zip(pkt, FIELD_MAX):
                if v > hi:
                    raise ValueError(f"header value {v} out of range")
        except ValueError as e:
            raise ParseError(lineno, str(e)) from None
        trace.requests.append(pkt)
        trace.expected.append(int(toks[5]) if len(toks) == 6 else None)
        trace.exclusive.append(True)
    return trace


def validate_trace(trace: Trace, rs: Ruleset, warn: bool = True) -> list[tuple]:
    """Packets whose annotated rule differs from the true best match.

    Returns ``(index, annotated, actual)`` tuples and emits one warning each.
    """
    bad = []
    for i, (req, exp) in enumerate(zip(trace.requests, trace.expected)):
        if isinstance(req, Packet) and exp is not None:
            actual = highest_priority_match(rs, req)
            if actual != exp:
                bad.append((i, exp, actual))
                if warn:
                    warnings.warn(f"packet {i}: annotated rule {exp}, best match {actual}")
    return bad


def format_trace(trace: Trace) -> str:
    lines = [f"# {k}: {v}" for k, v in trace.meta.items()]
    expected = trace.expected or [None] * len(trace.requests)
    for req, exp in zip(trace.requests, expected):
        if isinstance(req, Packet):
            cols = [req.src_ip, req.dst_ip, req.src_port, req.dst_port, req.protocol]
            if exp is not None:
                cols.append(exp)
            lines.append(" ".join(map(str, cols)))
        elif isinstance(req, Access):
            lines.append(f"A {req.node}")
        elif isinstance(req, Delete):
            lines.append(f"D {req.node}")
        elif isinstance(req, Insert):
            lines.append(f"I {format_rule_line(req.rule)}")
        else:
            raise TypeError(f"unknown request {req!r}")
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# Packet synthesis
# ---------------------------------------------------------------------------

Box = tuple  # five (lo, hi) pairs


def _box(rule: Rule) -> Box:
    return tuple((r.lo, r.hi) for r in rule.fields)


def _subtract(box: Box, cut: Box) -> list[Box]:
    """``box`` minus ``cut`` as disjoint boxes."""
    inter = []
    for (lo, hi), (clo, chi) in zip(box, cut):
        a, b = max(lo, clo), min(hi, chi)
        if a > b:
            return [box]
        inter.append((a, b))
    pieces = []
    rest = list(box)
    for d, (a, b) in enumerate(inter):
        lo, hi = rest[d]
        if lo < a:
            pieces.append(tuple(rest[:d] + [(lo, a - 1)] + rest[d + 1:]))
        if b < hi:
            pieces.append(tuple(rest[:d] + [(b + 1, hi)] + rest[d + 1:]))
        rest[d] = (a, b)
    return pieces


def _volume(box: Box) -> int:
    return math.prod(hi - lo + 1 for lo, hi in box)


class PacketSampler:
    """Draws packets that a chosen rule wins as the highest-priority match.

    A rule's exclusive region (its box minus every higher-priority overlapping
    rule) is computed exactly by box subtraction when that stays under
    ``max_pieces`` boxes; otherwise rejection sampling is used. A rule with no
    exclusive region yields a point of its own box, flagged non-exclusive.
    """

    def __init__(self, rs: Ruleset, max_pieces: int = 4096, tries: int = 256):
        self.rs = rs
        self.max_pieces = max_pieces
        self.tries = tries
        self._regions: dict = {}

    def _region(self, idx: int):
        if idx in self._regions:
            return self._regions[idx]
        rule = self.rs[idx]
        pieces = [_box(rule)]
        region = None
        for other in self.rs[:idx]:
            if not overlaps(rule, other):
                continue
            cut = _box(other)
            pieces = [p for piece in pieces for p in _subtract(piece, cut)]
            if not pieces or len(pieces) > self.max_pieces:
                break
        else:
            region = pieces
        if not pieces:
            region = []
        if region is not None:
            cum = list(itertools.accumulate(_volume(b) for b in region))
            region = (region, cum)
        self._regions[idx] = region
        return region

    def sample(self, idx: int, rng: random.Random) -> tuple[Packet, bool]:
        rule = self.rs[idx]
        region = self._region(idx)
        if region is None:  # too fragmented: rejection sampling
            for _ in range(self.tries):
                pkt = _point(_box(rule), rng)
                if highest_priority_match(self.rs, pkt) == rule.id:
                    return pkt, True
            return _point(_box(rule), rng), False
        boxes, cum = region
        if not boxes:
            return _point(_box(rule), rng), False
        k = bisect.bisect_right(cum, rng.randrange(cum[-1]))
        return _point(boxes[k], rng), True


def _point(box: Box, rng: random.Random) -> Packet:
    return Packet(*(rng.randint(lo, hi) for lo, hi in box))


def _packet_trace(rs: Ruleset, choices: list[int], rng: random.Random, meta: dict) -> Trace:
    sampler = PacketSampler(rs)
    trace = Trace(meta=meta)
    for idx in choices:
        pkt, excl = sampler.sample(idx, rng)
        trace.requests.append(pkt)
        trace.expected.append(rs[idx].id)
        trace.exclusive.append(excl)
    return trace


def _meta(name: str, params: LocalityParams, m: int) -> dict:
    return {"generator": name, "seed": params.seed, "zipf_s": params.zipf_s,
            "run_len_mean": params.run_len_mean, "packets": m}


def gen_zipf_trace(rs: Ruleset, params: LocalityParams, m: int) -> Trace:
    """Rule popularity follows Zipf(s) over a seeded random ranking of rules."""
    if params.kind != "ZIPF":
        raise ValueError("gen_zipf_trace needs ZIPF params")
    rng = random.Random(params.seed)
    ranking = list(range(len(rs)))
    rng.shuffle(ranking)
    weights = [r ** -params.zipf_s for r in range(1, len(rs) + 1)]
    cum = list(itertools.accumulate(weights))
    choices = [ranking[k] for k in rng.choices(range(len(rs)), cum_weights=cum, k=m)]
    trace = _packet_trace(rs, choices, rng, _meta("zipf", params, m))
    trace.meta["ranking"] = [rs[i].id for i in ranking]
    return trace


def gen_runs_trace(rs: Ruleset, params: LocalityParams, m: int) -> Trace:
    """Runs of one rule with geometric lengths (mean run_len_mean), rules uniform."""
    if params.kind != "RUNS":
        raise ValueError("gen_runs_trace needs RUNS params")
    rng = random.Random(params.seed)
    p = 1.0 / params.run_len_mean
    choices: list[int] = []
    while len(choices) < m:
        idx = rng.randrange(len(rs))
        run = 1
        if p < 1.0:
            # inverse-CDF geometric on {1, 2, ...}
            run = 1 + int(math.log(1.0 - rng.random()) / math.log(1.0 - p))
        choices.extend([idx] * min(run, m - len(choices)))
    return _packet_trace(rs, choices, rng, _meta("runs", params, m))


def gen_uniform_trace(rs: Ruleset, params: LocalityParams, m: int) -> Trace:
    rng = random.Random(params.seed)
    choices = [rng.randrange(len(rs)) for _ in range(m)]
    return _packet_trace(rs, choices, rng, _meta("uniform", params, m))


def generate_trace(rs: Ruleset, params: LocalityParams, m: int) -> Trace:
    gen = {"ZIPF": gen_zipf_trace, "RUNS": gen_runs_trace, "UNIFORM": gen_uniform_trace}
    return gen[params.kind](rs, params, m)


# ---------------------------------------------------------------------------
# Synthetic rulesets
# ---------------------------------------------------------------------------


def _nested_ports(center: int, j: int) -> FieldRange:
    """Port range of width 2j+1 near ``center``; strictly grows with j."""
    width = 2 * j + 1
    if width > 2**16:
        raise ValueError("cluster too large for strictly nested port ranges")
    lo = max(0, min(center - j, 2**16 - width))
    return FieldRange(lo, lo + width - 1)


def _cluster_sizes(n: int, target_pairs: float) -> list[int]:
    """Split n rules into clusters of sizes g and g+1 with pair count near target.

    Equal clusters of size g give density (g-1)/(n-1), so the search starts
    there and walks outward; the leftover cluster matters at high density, so
    every g is tried and ties go to the g closest to the equal-split guess.
    """
    density = target_pairs / (n * (n - 1) / 2) if n > 1 else 0.0
    base = int(density * (n - 1)) + 1
    best = None
    for g in sorted(range(1, n + 1), key=lambda g: (abs(g - base), g)):
        for a in range(n // (g + 1) + 1):
            b, r = divmod(n - a * (g + 1), g)
            pairs = a * g * (g + 1) // 2 + b * g * (g - 1) // 2 + r * (r - 1) // 2
            key = abs(pairs - target_pairs)
            if best is None or key < best[0]:
                best = (key, [g + 1] * a + [g] * b + ([r] if r else []))
    return best[1]


@dataclass
class SyntheticRuleset:
    ruleset: Ruleset
    requested_density: float
    achieved_density: float
    clusters: list


def gen_synthetic_ruleset(n: int, overlap_density: float, seed: int) -> SyntheticRuleset:
    """Rulesets made of clusters of nested rules.

    Rules inside a cluster share a destination /20 subtree and nest: the
    highest-priority member is the narrowest, every later member strictly
    widens the destination prefix or port range, so all pairs in a cluster
    overlap and every rule keeps a nonempty exclusive region. Distinct
    clusters use disjoint subtrees and never overlap. Cluster sizes are chosen
    so that about ``overlap_density * n(n-1)/2`` pairs overlap; priorities of
    different clusters are interleaved at random.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= overlap_density <= 1:
        raise ValueError("overlap_density must be within [0, 1]")
    rng = random.Random(seed)
    total_pairs = n * (n - 1) / 2
    sizes = _cluster_sizes(n, overlap_density * total_pairs)
    blocks = rng.sample(range(1, 2**20), len(sizes))

    clusters = []
    for g, block in zip(sizes, blocks):
        proto = FieldRange.exact(rng.choice([6, 6, 17]))
        src = FieldRange.from_prefix(rng.getrandbits(32), rng.choice([0, 8, 16, 24]))
        anchor = block << 12 | rng.getrandbits(12)
        center = rng.randrange(1024, 60000)
        members = []
        for j in range(g):
            dst = FieldRange.from_prefix(anchor, 32 - min(j, 12))
            members.append((proto, src, dst, _nested_ports(center, j)))
        clusters.append(members)

    # interleave clusters, each keeping its narrow-first order
    slots = [c for c, members in enumerate(clusters) for _ in members]
    rng.shuffle(slots)
    cursor = [0] * len(clusters)
    rules = []
    for prio, c in enumerate(slots, 1):
        proto, src, dst, dport = clusters[c][cursor[c]]
        cursor[c] += 1
        rules.append(Rule(prio, prio, proto, src, dst, FieldRange(0, 2**16 - 1),
                          dport, rng.choice(["ACCEPT", "DENY"])))
    rs = Ruleset(rules)
    pairs = sum(g * (g - 1) // 2 for g in sizes)
    achieved = pairs / total_pairs if total_pairs else 0.0
    return SyntheticRuleset(rs, overlap_density, achieved, sizes)
