import pytest

from emvj import config as C
from emvj.errors import ConfigError
from emvj.params import REFERENCE_JUMPS, REFERENCE_MARKET

TEXT = """
# comment
[run]
seed = 3
n_epochs = 10
base_rates = 1e-4, 2e-4, 3e-4
compensate = false
T = 0.5

[market]
mu = 0.1
"""


def test_parse_and_types():
    cfg = C.Config.from_text(TEXT)
    run = C.run_config(cfg)
    assert run.master_seed == 3 and run.n_epochs == 10 and run.T == 0.5
    assert run.base_rates == (1e-4, 2e-4, 3e-4)
    assert run.compensate is False
    mp, jp = C.environment(cfg)
    assert mp.mu == 0.1 and mp.sigma == REFERENCE_MARKET.sigma and jp == REFERENCE_JUMPS


def test_flags_override_file():
    cfg = C.Config.from_text(TEXT)
    cfg.set("run", "seed", 9)
    assert C.run_config(cfg).master_seed == 9


@pytest.mark.parametrize("text,field", [
    ("[run]\nn_epochs = ten\n", "[run] n_epochs"),
    ("[run]\nepochs = 3\n", "[run] epochs"),
    ("[nope]\nx = 1\n", "[nope]"),
    ("[run]\njump_sampling = daily\n", "[run] jump_sampling"),
    ("[run]\ncompensate = maybe\n", "[run] compensate"),
    ("[market]\nsigma = -1\n", "[market]"),
    ("[run]\nn_epochs = 0\n", "[run]"),
])
def test_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as info:
        cfg = C.Config.from_text(text)
        C.run_config(cfg)
        C.environment(cfg)
    assert field in str(info.value)


def test_single_data_source():
    both = C.Config.from_text("[market]\nmu = 0.1\n[data]\nprices = p.csv\n")
    with pytest.raises(ConfigError, match="exactly one"):
        C.check_single_source(both, want_csv=True)
    with pytest.raises(ConfigError, match="prices"):
        C.check_single_source(C.Config(), want_csv=True)
    with pytest.raises(ConfigError, match="prices"):
        C.check_single_source(C.Config.from_text("[data]\nprices = p.csv\n"), want_csv=False)
    C.check_single_source(C.Config.from_text("[data]\nprices = p.csv\n"), want_csv=True)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        C.Config.load(tmp_path / "none.ini")


def test_malformed_file():
    with pytest.raises(ConfigError):
        C.Config.from_text("key = value without section\n")


def test_shipped_configs_parse():
    from pathlib import Path
    for path in sorted((Path(__file__).parent.parent / "configs").glob("*.ini")):
        cfg = C.Config.load(path)
        C.run_config(cfg)
        C.window_spec(cfg)
