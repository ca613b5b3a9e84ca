import os

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from tighttypes.syntax import Abs, App, Config, Get, Set, Var

settings.register_profile(
    "default", deadline=None, max_examples=150,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

names = st.sampled_from(("x", "y", "z"))
locs = st.sampled_from(("l", "k"))

cbv_terms = st.recursive(
    names.map(Var),
    lambda c: st.one_of(st.builds(Abs, names, c), st.builds(App, c, c)),
    max_leaves=10,
)


def _gs_layer(children):
    values = st.one_of(names.map(Var), st.builds(Abs, names, children))
    return st.one_of(
        st.builds(Abs, names, children),
        st.builds(App, values, children),
        st.builds(Get, locs, names, children),
        st.builds(Set, locs, values, children),
    )


gs_terms = st.recursive(names.map(Var), _gs_layer, max_leaves=8)
gs_values = st.one_of(names.map(Var), st.builds(Abs, names, gs_terms))
cbv_values = st.one_of(names.map(Var), st.builds(Abs, names, cbv_terms))
states = st.lists(st.tuples(locs, gs_values), max_size=4).map(tuple)
distinct_states = st.lists(st.tuples(locs, gs_values), max_size=2,
                           unique_by=lambda b: b[0]).map(tuple)
configs = st.builds(Config, gs_terms, states)


# acceptance criteria report one line each; collected here and echoed at the end of the run
def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def report_line(request):
    def emit(line: str):
        print(line)
        request.config.acceptance_lines.append(line)
    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
