import json
from pathlib import Path
from typing import Any

import pytest

from kamforge._config import RunConfig, load_config, parse_config
from kamforge._errors import ConfigError


def _document(**changes: Any) -> dict[str, Any]:
    data: dict[str, Any] = {"schema_version": 1, "model": "standard", "epsilon": 1e-4}
    data.update(changes)
    return data


def test_parse_defaults() -> None:
    config = parse_config(_document())
    assert config.model == "standard"
    assert config.epsilon == 1e-4
    assert config.schedule.rho == 0.5
    assert config.tolerances.tol == 1e-12
    assert config.diophantine.tau == 1.5
    assert config.max_steps == 40
    assert config.translate


def test_parse_sections() -> None:
    config = parse_config(
        _document(
            schedule={"rho": 0.4, "eta": 3.0, "kcap": 128},
            tolerances={"guard": 1e-10},
            box=[[2.0], [4.5]],
        )
    )
    assert config.schedule.kcap == 128
    assert config.tolerances.guard == 1e-10
    assert config.box == ([2.0], [4.5])
    assert config.to_record()["box"] == [[2.0], [4.5]]


@pytest.mark.parametrize(
    "data, field",
    [
        ({"model": "standard"}, "schema_version"),
        ({"schema_version": 1}, "model"),
        (_document(schema_version=2), "schema_version"),
        (_document(model="cubic"), "model"),
        (_document(model="nope"), "model"),
        (_document(epsilon=-1.0), "epsilon"),
        (_document(epsilon=1.0), "epsilon"),
        (_document(colour="red"), "colour"),
        (_document(schedule={"rho": 1.5}), "schedule.rho"),
        (_document(schedule={"depth": 3}), "schedule.depth"),
        (_document(schedule=[1, 2]), "schedule"),
        (_document(tolerances={"tol": 0.0}), "tolerances.tol"),
        (_document(max_steps=-1), "max_steps"),
    ],
)
def test_parse_names_offending_field(data: dict[str, Any], field: str) -> None:
    with pytest.raises(ConfigError, match=f"'{field}'"):
        parse_config(data)


def test_load_config(tmp_path: Path) -> None:
    path = tmp_path / "run.json"
    path.write_text(json.dumps(_document(model="rotation")), encoding="utf-8")
    config = load_config(path)
    assert isinstance(config, RunConfig)
    assert config.model == "rotation"


def test_load_config_syntax_error(tmp_path: Path) -> None:
    path = tmp_path / "run.json"
    path.write_text('{\n  "schema_version": 1,\n  "model": }\n', encoding="utf-8")
    with pytest.raises(ConfigError, match="line 3 column"):
        load_config(path)


def test_load_config_rejects_non_object(tmp_path: Path) -> None:
    path = tmp_path / "run.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError, match="JSON object"):
        load_config(path)


def test_with_overrides() -> None:
    config = parse_config(_document())
    changed = config.with_overrides(epsilon=1e-3, **{"schedule.rho": 0.3})
    assert changed.epsilon == 1e-3
    assert changed.schedule.rho == 0.3
    assert config.schedule.rho == 0.5
    with pytest.raises(ConfigError, match="schedule.rho"):
        config.with_overrides(**{"schedule.rho": 2.0})
