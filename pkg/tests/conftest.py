import os

import hypothesis
import pytest

from mrflist.rules import Ruleset, make_rule

hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=20, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

# rule id -> (src, dst, dport, action); every rule is TCP with any source port
SAMPLE_RULES = [
    ("1", "10.1.1.1", "20.1.1.1", "80", "ACCEPT"),
    ("2", "10.1.1.2", "20.1.1.1", "80", "ACCEPT"),
    ("3", "10.1.1.3", "20.1.1.1", "80", "ACCEPT"),
    ("x", "10.1.1.0/24", "20.1.1.1", "ANY", "DENY"),
    ("4", "0.0.0.0/0", "0.0.0.0/0", "445", "ACCEPT"),
    ("5", "0.0.0.0/0", "0.0.0.0/0", "17", "ACCEPT"),
    ("6", "0.0.0.0/0", "0.0.0.0/0", "18", "ACCEPT"),
]

SAMPLE_EDGES = {("x", "1"), ("x", "2"), ("x", "3"), ("4", "x"), ("5", "x"), ("6", "x")}

SAMPLE_TEXT = """\
# small ruleset with one shadowing rule
@10.1.1.1/32\t20.1.1.1/32\t0 : 65535\t80 : 80\t0x06/0xFF\tACCEPT
@10.1.1.2/32\t20.1.1.1/32\t0 : 65535\t80 : 80\t0x06/0xFF\tACCEPT
@10.1.1.3/32\t20.1.1.1/32\t0 : 65535\t80 : 80\t0x06/0xFF\tACCEPT
@10.1.1.0/24\t20.1.1.1/32\t0 : 65535\t0 : 65535\t0x06/0xFF\tDENY
@0.0.0.0/0\t0.0.0.0/0\t0 : 65535\t445 : 445\t0x06/0xFF\tACCEPT
@0.0.0.0/0\t0.0.0.0/0\t0 : 65535\t17 : 17\t0x06/0xFF\tACCEPT
@0.0.0.0/0\t0.0.0.0/0\t0 : 65535\t18 : 18\t0x06/0xFF\tACCEPT
"""


def sample_rules(with_x=True):
    rules = []
    for prio, (rid, src, dst, dport, action) in enumerate(SAMPLE_RULES, 1):
        if rid == "x" and not with_x:
            continue
        rules.append(make_rule(rid, prio, "TCP", src, dst, "ANY", dport, action))
    return rules


@pytest.fixture
def sample_rs():
    return Ruleset(sample_rules())


@pytest.fixture
def sample_no_x():
    return Ruleset(sample_rules(with_x=False))
