# orbital_stability/config.py

import json
import os
from dataclasses import asdict, dataclass, fields
from typing import List, Optional

from .errors import InvalidArgument

COMMANDS = (
    "orbital-eval",
    "orbital-scan",
    "stability-scan",
    "charsum",
    "smallcell",
    "dualkernel",
    "moment",
    "newforms",
)


@dataclass
class RunConfig:
    """Parameters of one run; rationals are kept as 'a/b' strings."""

    command: str
    p: Optional[int] = None
    n: Optional[int] = None
    m: Optional[int] = None
    t: Optional[str] = None
    chi: Optional[str] = None
    omega: Optional[str] = None
    q: Optional[int] = None
    level: Optional[int] = None
    weight: Optional[int] = None
    umax: Optional[str] = None
    m_min: Optional[int] = None
    m_max: Optional[int] = None
    terms: Optional[int] = None
    tol: Optional[float] = None
    threads: Optional[int] = None
    format: Optional[str] = None
    out: Optional[str] = None
    coeffs: Optional[str] = None
    evaluator: Optional[str] = None
    sigma_plus_rule: Optional[str] = None
    threshold_c: Optional[float] = None
    seed: Optional[int] = None
    cutoff: Optional[int] = None
    kind: Optional[str] = None
    k: Optional[int] = None
    r1: Optional[int] = None
    r2: Optional[int] = None
    e_x: Optional[int] = None
    s: Optional[str] = None
    labels: Optional[List[str]] = None
    count: Optional[int] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidArgument(f"unknown command '{self.command}' (expected one of {', '.join(COMMANDS)})")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidArgument(f"unknown run configuration key(s): {', '.join(unknown)}")
        if "command" not in data:
            raise InvalidArgument("run configuration has no 'command'")
        return cls(**data)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def merged(self, overrides: dict) -> "RunConfig":
        """Copy with every non-None override applied."""
        data = asdict(self)
        data.update({k: v for k, v in overrides.items() if v is not None and k in data})
        return RunConfig(**data)

    def get(self, name: str, default):
        value = getattr(self, name)
        return default if value is None else value


class RunStore:
    """Named run configurations stored as JSON files in one folder."""

    def __init__(self, save_folder="saved_runs"):
        self.save_folder = save_folder
        if not os.path.exists(self.save_folder):
            os.makedirs(self.save_folder)

    def _path(self, name: str) -> str:
        return os.path.join(self.save_folder, name + ".json")

    def save_run(self, config: RunConfig, name: str) -> str:
        full_path = self._path(name)
        with open(full_path, "w", encoding="utf-8") as file:
            json.dump(config.to_dict(), file, indent=4, sort_keys=True)
        return f"Run saved: {full_path}"

    def load_run(self, name: str):
        """Return (RunConfig or None, status message)."""
        full_path = self._path(name)
        if not os.path.exists(full_path):
            return None, f"File not found: {full_path}"
        return load_config_file(full_path), f"Run loaded: {full_path}"

    def list_runs(self) -> List[str]:
        runs = []
        if os.path.exists(self.save_folder):
            for file in sorted(os.listdir(self.save_folder)):
                if file.endswith(".json"):
                    runs.append(file[:-5])
        return runs

    def delete_run(self, name: str) -> bool:
        full_path = self._path(name)
        if not os.path.exists(full_path):
            return False
        os.remove(full_path)
        return True


def load_config_file(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as file:
        try:
            data = json.load(file)
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(data, dict):
        raise InvalidArgument(f"{path}: run configuration must be a JSON object")
    return RunConfig.from_dict(data)
