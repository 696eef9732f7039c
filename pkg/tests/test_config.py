import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarswim.config import ConfigError, RunConfig, dump_config, initial_field, load_config, parse_config
from polarswim.spectral import Grid
from polarswim.timestep import stable_dt

MINIMAL = "[model]\nepsilon = 0.1\n[grid]\nn = 32\n"


def test_minimal_document_defaults():
    cfg, p = parse_config(MINIMAL)
    assert p.epsilon == 0.1 and p.mu2 == 1.0 and p.alpha == 1.0 and p.kappa == 0.0
    assert p.mu1 == 0.1 and p.lambda1 == 0.1 and p.gamma1 == 0.0
    assert cfg.grid == Grid.cube(3, 32)
    assert cfg.t_end == 1.0 and cfg.seed == 0 and cfg.sample_every == 1
    assert cfg.gronwall_delta == 0.1 and cfg.gronwall_c == 1.0
    assert cfg.snapshots and cfg.energy and cfg.apriori_check


def test_dt_omitted_uses_stable_dt():
    text = "[model]\nepsilon = 0.1\n[grid]\ndim = 2\nn = 16\n[time]\ndt_max = 0.05\n"
    cfg, p = parse_config(text)
    assert cfg.dt_from_estimate
    assert cfg.dt == stable_dt(cfg.grid, p, initial_field(cfg), dt_max=0.05)
    cfg2, _ = parse_config(text.replace("dt_max = 0.05", "dt_max = 0.05\ndt = auto"))
    assert cfg2.dt == cfg.dt


def test_explicit_dt():
    cfg, _ = parse_config(MINIMAL + "[time]\ndt = 0.002\nt_end = 0.5\n")
    assert cfg.dt == 0.002 and not cfg.dt_from_estimate


def test_duplicate_key_names_both_lines():
    with pytest.raises(ConfigError) as exc:
        parse_config("[model]\nepsilon = 0.1\nmu2 = 1\n\nepsilon = 0.2\n[grid]\nn=8\n")
    msg = str(exc.value)
    assert "epsilon" in msg and "2" in msg and "5" in msg


@pytest.mark.parametrize("text, needle", [
    ("[model]\nepsilon = 0.1\n", "n"),
    ("[grid]\nn = 8\n", "epsilon"),
    ("[model]\nepsilon = abc\n[grid]\nn = 8\n", "line 2"),
    ("[model]\nepsilon = 0.1\nfoo = 1\n[grid]\nn = 8\n", "foo"),
    ("[modle]\nepsilon = 0.1\n[grid]\nn = 8\n", "modle"),
    ("[model]\nepsilon = 0.1\n[grid]\nn = 8\ndim = 4\n", "dim"),
    ("[model]\nepsilon = 0.1\n[grid]\nn = 7\n", "even"),
    ("[model]\nepsilon = 0.1\nalpha = 0\n[grid]\nn = 8\n", "alpha"),
    ("[model]\nepsilon = 0.1\nkappa = 0.3\nstrict = true\n[grid]\nn = 8\n", "kappa"),
    ("[model]\nepsilon = 0.1\n[grid]\nn = 8\n[time]\ndt = 0.1\nt_end = 0.01\n", "t_end"),
    ("[model]\nepsilon = 0.1\n[grid]\nn = 8\n[diagnostics]\ngronwall_delta = 0\n", "delta"),
    ("epsilon = 0.1\n", "section"),
])
def test_errors(text, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert needle in str(exc.value)


def test_comments_and_lists():
    cfg, _ = parse_config("# run\n[model]\nepsilon = 1e-2  # weak\n[grid]\ndim = 2\nn = 16, 32\nbox = 6.0, 12.0\n")
    assert cfg.grid.n == (16, 32) and cfg.grid.box == (6.0, 12.0)


def test_seed_override():
    cfg, _ = parse_config(MINIMAL + "[init]\nseed = 4\n", seed=9)
    assert cfg.seed == 9


def test_run_config_invariants():
    cfg, _ = parse_config(MINIMAL + "[time]\ndt = 0.01\n")
    for bad in (dict(dt=0.0), dict(t_end=0.001), dict(sample_every=0), dict(gronwall_c=0.0)):
        with pytest.raises(ConfigError):
            replace(cfg, **bad)


def test_dump_round_trip_is_canonical(tmp_path):
    text = ("[grid]\nn = 16\ndim = 2\n[model]\nmu2 = 0.01\nepsilon = 0.05\ngamma2 = -0.25\n"
            "[time]\ndt = 0.001\nt_end = 0.1\n[init]\nspectrum = gauss\n")
    cfg, p = parse_config(text)
    dumped = dump_config(cfg, p)
    path = tmp_path / "c.ini"
    path.write_text(dumped)
    cfg2, p2 = load_config(path)
    assert dump_config(cfg2, p2) == dumped
    assert (cfg2, p2) == (cfg, p)
    lines = [ln for ln in dumped.splitlines() if "=" in ln]
    assert len(lines) > 25  # every default materialised


def test_reference_config_loads():
    from pathlib import Path

    cfg, p = load_config(Path(__file__).parents[1] / "configs" / "reference.ini")
    assert cfg.grid.dim == 2 and p.epsilon == 0.01 and cfg.dt_from_estimate
    assert 0 < cfg.dt <= cfg.dt_max


@given(st.floats(1e-6, 10.0), st.floats(-5, 5), st.integers(0, 2**63 - 1))
def test_parse_deterministic(eps, gamma2, seed):
    text = f"[model]\nepsilon = {eps!r}\ngamma2 = {gamma2!r}\n[grid]\nn = 8\n[time]\ndt = 0.01\n[init]\nseed = {seed}\n"
    a = dump_config(*parse_config(text))
    b = dump_config(*parse_config(text))
    assert a == b
    cfg, p = parse_config(a)
    assert p.epsilon == eps and p.gamma2 == gamma2 and cfg.seed == seed
    assert math.isfinite(cfg.dt)
