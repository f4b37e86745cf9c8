"""Five-tuple match-action rules, packet matching, and rule overlap."""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, NamedTuple, Optional, Sequence

IP_MAX = 2**32 - 1
PORT_MAX = 2**16 - 1
PROTO_MAX = 2**8 - 1

PROTO_NAMES = {"TCP": 6, "UDP": 17, "ICMP": 1}

FIELD_NAMES = ("protocol", "src_ip", "dst_ip", "src_port", "dst_port")
FIELD_MAX = (PROTO_MAX, IP_MAX, IP_MAX, PORT_MAX, PORT_MAX)


class ParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True, order=True)
class FieldRange:
    """Closed interval [lo, hi] over one header dimension."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo < 0 or self.lo > self.hi:
            raise ValueError(f"invalid range [{self.lo}, {self.hi}]")

    @classmethod
    def exact(cls, value: int) -> FieldRange:
        return cls(value, value)

    @classmethod
    def from_prefix(cls, addr: int, length: int, bits: int = 32) -> FieldRange:
        if not 0 <= length <= bits:
            raise ValueError(f"prefix length {length} out of range")
        host_bits = bits - length
        base = (addr >> host_bits) << host_bits
        return cls(base, base + (1 << host_bits) - 1)

    def as_prefix(self, bits: int = 32) -> Optional[tuple[int, int]]:
        """Inverse of from_prefix, or None when the range is not a prefix."""
        size = self.hi - self.lo + 1
        if size & (size - 1) or self.lo % size:
            return None
        host_bits = size.bit_length() - 1
        if host_bits > bits:
            return None
        return self.lo, bits - host_bits

    def contains(self, value: int) -> bool:
        return self.lo <= value <= self.hi

    def intersects(self, other: FieldRange) -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersection(self, other: FieldRange) -> Optional[FieldRange]:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return FieldRange(lo, hi) if lo <= hi else None

    def __len__(self) -> int:
        return self.hi - self.lo + 1


def full_range(dim: int) -> FieldRange:
    return FieldRange(0, FIELD_MAX[dim])


class Packet(NamedTuple):
    protocol: int
    src_ip: int
    dst_ip: int
    src_port: int
    dst_port: int

    @classmethod
    def from_strings(cls, protocol, src_ip, dst_ip, src_port, dst_port) -> Packet:
        """Convenience constructor taking protocol names and dotted quads."""
        if isinstance(protocol, str):
            protocol = PROTO_NAMES[protocol.upper()]
        return cls(protocol, ip_to_int(src_ip), ip_to_int(dst_ip),
                   int(src_port), int(dst_port))


@dataclass(frozen=True)
class Rule:
    id: Hashable
    priority: float
    protocol: FieldRange
    src_ip: FieldRange
    dst_ip: FieldRange
    src_port: FieldRange
    dst_port: FieldRange
    action: str = "ACCEPT"
    # flat (lo0, hi0, lo1, hi1, ...) for the hot matching loop
    bounds: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        flat = []
        for dim, r in enumerate(self.fields):
            if r.hi > FIELD_MAX[dim]:
                raise ValueError(f"{FIELD_NAMES[dim]} range {r} exceeds domain")
            flat += (r.lo, r.hi)
        object.__setattr__(self, "bounds", tuple(flat))

    @property
    def fields(self) -> tuple[FieldRange, ...]:
        return (self.protocol, self.src_ip, self.dst_ip, self.src_port, self.dst_port)

    def volume(self) -> int:
        v = 1
        for r in self.fields:
            v *= len(r)
        return v


def make_rule(id, priority, protocol="ANY", src="0.0.0.0/0", dst="0.0.0.0/0",
              sport="ANY", dport="ANY", action="ACCEPT") -> Rule:
    """Build a rule from human-readable field specs.

    Addresses accept ``a.b.c.d`` or ``a.b.c.d/len``; ports accept ``ANY``,
    ``80`` or ``1024:65535``; protocol accepts ``ANY``, a name or a number.
    """
    return Rule(id, priority, _proto_range(protocol), _ip_range(src),
                _ip_range(dst), _port_range(sport), _port_range(dport), action)


def _proto_range(spec) -> FieldRange:
    if isinstance(spec, FieldRange):
        return spec
    if isinstance(spec, str):
        if spec.upper() == "ANY":
            return FieldRange(0, PROTO_MAX)
        spec = PROTO_NAMES.get(spec.upper(), None) or int(spec, 0)
    return FieldRange.exact(spec)


def _ip_range(spec) -> FieldRange:
    if isinstance(spec, FieldRange):
        return spec
    if spec.upper() == "ANY":
        return FieldRange(0, IP_MAX)
    addr, _, length = spec.partition("/")
    return FieldRange.from_prefix(ip_to_int(addr), int(length) if length else 32)


def _port_range(spec) -> FieldRange:
    if isinstance(spec, FieldRange):
        return spec
    if isinstance(spec, int):
        return FieldRange.exact(spec)
    if spec.upper() == "ANY":
        return FieldRange(0, PORT_MAX)
    lo, _, hi = spec.partition(":")
    return FieldRange(int(lo), int(hi) if hi else int(lo))


def ip_to_int(addr: str) -> int:
    return int(ipaddress.IPv4Address(addr))


def int_to_ip(value: int) -> str:
    return str(ipaddress.IPv4Address(value))


class Ruleset(Sequence[Rule]):
    """Rules in priority order (index 0 is the highest priority)."""

    def __init__(self, rules: Iterable[Rule]):
        rules = sorted(rules, key=lambda r: r.priority)
        self._rules = tuple(rules)
        self._by_id = {r.id: r for r in rules}
        if len(self._by_id) != len(rules):
            raise ValueError("duplicate rule ids")
        if len({r.priority for r in rules}) != len(rules):
            raise ValueError("duplicate rule priorities")

    def __getitem__(self, i):
        return self._rules[i]

    def __len__(self) -> int:
        return len(self._rules)

    def __iter__(self) -> Iterator[Rule]:
        return iter(self._rules)

    def __contains__(self, rule_id) -> bool:
        return rule_id in self._by_id

    def get(self, rule_id) -> Rule:
        return self._by_id[rule_id]

    @property
    def ids(self) -> list:
        return [r.id for r in self._rules]

    def __repr__(self):
        return f"Ruleset({len(self)} rules)"


def matches(rule: Rule, pkt: Sequence[int]) -> bool:
    b = rule.bounds
    return (b[0] <= pkt[0] <= b[1] and b[2] <= pkt[1] <= b[3]
            and b[4] <= pkt[2] <= b[5] and b[6] <= pkt[3] <= b[7]
            and b[8] <= pkt[4] <= b[9])


def overlaps(a: Rule, b: Rule) -> bool:
    x, y = a.bounds, b.bounds
    return all(x[i] <= y[i + 1] and y[i] <= x[i + 1] for i in range(0, 10, 2))


def depends_on(a: Rule, b: Rule) -> bool:
    """True iff ``b`` must precede ``a`` in every list configuration."""
    return b.priority < a.priority and overlaps(a, b)


def highest_priority_match(rs: Ruleset, pkt: Sequence[int]):
    for rule in rs:
        if matches(rule, pkt):
            return rule.id
    return None


# ClassBench filter lines:
#   @10.1.1.0/24  20.1.1.1/32  0 : 65535  0 : 65535  0x06/0xFF  [flags...] [ACTION]
_CB_RULE = re.compile(
    r"^@(?P<src>\d+\.\d+\.\d+\.\d+/\d+)\s+(?P<dst>\d+\.\d+\.\d+\.\d+/\d+)\s+"
    r"(?P<slo>\d+)\s*:\s*(?P<shi>\d+)\s+(?P<dlo>\d+)\s*:\s*(?P<dhi>\d+)\s+"
    r"(?P<proto>0[xX][0-9a-fA-F]+)/(?P<mask>0[xX][0-9a-fA-F]+)(?P<rest>.*)$"
)
_ACTION = re.compile(r"^[A-Za-z_][\w-]*$")


def parse_rule_line(line: str, id, priority, lineno: int = 1) -> Rule:
    m = _CB_RULE.match(line.strip())
    if not m:
        raise ParseError(lineno, f"not a ClassBench filter: {line.strip()!r}")
    try:
        proto, mask = int(m["proto"], 16), int(m["mask"], 16)
        if mask == 0:
            proto_r = FieldRange(0, PROTO_MAX)
        elif mask == 0xFF:
            proto_r = FieldRange.exact(proto)
        else:
            raise ValueError(f"unsupported protocol mask {m['mask']}")
        action = "ACCEPT"
        for tok in m["rest"].split():
            if _ACTION.match(tok):
                action = tok
        return Rule(id, priority, proto_r, _ip_range(m["src"]), _ip_range(m["dst"]),
                    FieldRange(int(m["slo"]), int(m["shi"])),
                    FieldRange(int(m["dlo"]), int(m["dhi"])), action)
    except ValueError as e:
        raise ParseError(lineno, str(e)) from None


def parse_classbench_ruleset(text: str) -> Ruleset:
    """Parse ClassBench filter text; rule ids and priorities follow line order.

    Blank lines and ``#`` comments are skipped. A trailing bare word after the
    flag fields, if present, is taken as the rule's action label.
    """
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        n = len(rules) + 1
        rules.append(parse_rule_line(s, n, n, lineno))
    if not rules:
        raise ParseError(0, "empty ruleset")
    return Ruleset(rules)


def format_rule_line(rule: Rule) -> str:
    def prefix(r: FieldRange) -> str:
        p = r.as_prefix()
        if p is None:
            raise ValueError(f"address range {r} is not a prefix")
        return f"{int_to_ip(p[0])}/{p[1]}"

    if rule.protocol == FieldRange(0, PROTO_MAX):
        proto = "0x00/0x00"
    elif rule.protocol.lo == rule.protocol.hi:
        proto = f"0x{rule.protocol.lo:02X}/0xFF"
    else:
        raise ValueError(f"protocol range {rule.protocol} not expressible")
    return (f"@{prefix(rule.src_ip)}\t{prefix(rule.dst_ip)}\t"
            f"{rule.src_port.lo} : {rule.src_port.hi}\t"
            f"{rule.dst_port.lo} : {rule.dst_port.hi}\t{proto}\t{rule.action}")


def format_classbench_ruleset(rs: Ruleset) -> str:
    return "".join(format_rule_line(r) + "\n" for r in rs)
