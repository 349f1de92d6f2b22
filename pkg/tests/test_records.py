import json
import math
from pathlib import Path

import numpy as np

from kamforge._records import format_float, to_json


def test_format_float() -> None:
    assert format_float(None) == ""
    assert format_float(3) == "3"
    assert format_float(np.int64(4)) == "4"
    assert format_float(0.1) == "0.10000000000000001"


def test_to_json_writes_seventeen_digits() -> None:
    text = to_json({"eps": 0.1, "xi": np.array([0.2, 0.5]), "steps": np.int64(3)})
    assert '"eps": 0.10000000000000001' in text
    assert "0.20000000000000001" in text
    record = json.loads(text)
    assert record == {"eps": 0.1, "xi": [0.2, 0.5], "steps": 3}


def test_to_json_nested_and_special_values(tmp_path: Path) -> None:
    path = tmp_path / "result.json"
    text = to_json(
        {"report": {"ok": True, "names": [], "bound": math.inf}, "error": None}, path
    )
    assert path.read_text(encoding="utf-8") == text
    record = json.loads(text)
    assert record["report"] == {"ok": True, "names": [], "bound": math.inf}
    assert record["error"] is None
