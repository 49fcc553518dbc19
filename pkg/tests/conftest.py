import os

from hypothesis import HealthCheck, settings, strategies as st

from coarse_lp.groups import GroupSpec

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BUILTIN_GROUPS = [GroupSpec.zd(1), GroupSpec.zd(2), GroupSpec.zd(3), GroupSpec.lamplighter(), GroupSpec.free(2)]


def elements(group: GroupSpec, max_len: int = 8):
    """Random group elements as evaluated random words."""
    names = list(group.generators)
    return st.lists(st.sampled_from(names), max_size=max_len).map(group.evaluate)
