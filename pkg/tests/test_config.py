import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eigshape.config import SCHEMA, ConfigError, parse_config

MINIMAL = "domain.rects = 0,1,0,1\ndomain.h = 0.125\na = 0.2\n"


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.domain.rects == ((0.0, 1.0, 0.0, 1.0),)
    assert cfg.domain.anchor == "node"
    assert cfg.solver.steps == 40
    assert cfg.solver.c_pen is None
    assert cfg.seed == 0
    echo = cfg.echo()
    assert [line.split(" = ")[0] for line in echo] == list(SCHEMA)
    assert "a = 0.2" in echo
    assert "solver.c_pen = none" in echo


def test_echo_round_trips():
    cfg = parse_config(MINIMAL + "solver.bracket = 10, 1000\nseed = 7\n")
    assert parse_config("\n".join(cfg.echo())) == cfg


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\n" + MINIMAL.replace("a = 0.2", "a = 0.3  # target"))
    assert cfg.a == 0.3


def test_a_out_of_range_reports_line():
    text = "domain.rects = 0,1,0,1\ndomain.h = 0.125\na = 2.0\n"
    with pytest.raises(ConfigError, match=r"a out of range \(0, \|D\|\)") as info:
        parse_config(text)
    assert info.value.line == 3
    assert str(info.value).startswith("line 3:")


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate key") as info:
        parse_config(MINIMAL + "a = 0.1\n")
    assert info.value.line == 4


def test_unknown_key():
    with pytest.raises(ConfigError, match="unknown key") as info:
        parse_config(MINIMAL + "solver.speed = 3\n")
    assert info.value.line == 4


@pytest.mark.parametrize(
    "line",
    ["solver.steps = 3.5", "domain.h = fast", "solver.exact_volume = maybe", "domain.rects = 0,1,0"],
)
def test_type_mismatch(line):
    text = MINIMAL.replace("domain.h = 0.125\n", "") if line.startswith("domain.h") else MINIMAL
    if line.startswith("domain.rects"):
        text = text.replace("domain.rects = 0,1,0,1\n", "")
    with pytest.raises(ConfigError, match="type mismatch"):
        parse_config(text + line + "\n")


def test_missing_required():
    with pytest.raises(ConfigError, match="missing required key 'a'"):
        parse_config("domain.rects = 0,1,0,1\ndomain.h = 0.125\n")


def test_missing_equals():
    with pytest.raises(ConfigError, match="expected 'key = value'") as info:
        parse_config(MINIMAL + "oops\n")
    assert info.value.line == 4


@pytest.mark.parametrize("seed", ["-1", str(2**64)])
def test_seed_out_of_range(seed):
    with pytest.raises(ConfigError, match="64-bit unsigned"):
        parse_config(MINIMAL + f"seed = {seed}\n")


def test_seed_extremes_accepted():
    assert parse_config(MINIMAL + f"seed = {2**64 - 1}\n").seed == 2**64 - 1
    assert parse_config(MINIMAL + "seed = 0x10\n").seed == 16


@pytest.mark.parametrize("value", ["100, 10", "0, 10", "5"])
def test_bad_bracket(value):
    with pytest.raises(ConfigError, match="solver.bracket"):
        parse_config(MINIMAL + f"solver.bracket = {value}\n")


@pytest.mark.parametrize("line", ["solver.tol = 0", "solver.steps = -2", "diagnostics.dim2_radii = 4, 0"])
def test_nonpositive_values(line):
    with pytest.raises(ConfigError, match="must be positive"):
        parse_config(MINIMAL + line + "\n")


def test_empty_domain_is_config_error():
    with pytest.raises(ConfigError, match="empty domain"):
        parse_config("domain.rects = 0,0,0,1\ndomain.h = 0.125\na = 0.2\n")


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.7), st.integers(0, 2**64 - 1), st.booleans())
def test_parse_echo_fixed_point(a, seed, exact):
    text = MINIMAL.replace("a = 0.2", f"a = {a!r}") + f"seed = {seed}\nsolver.exact_volume = {exact}\n"
    cfg = parse_config(text)
    assert cfg.a == a and cfg.seed == seed and cfg.solver.exact_volume is exact
    assert parse_config("\n".join(cfg.echo())).echo() == cfg.echo()
