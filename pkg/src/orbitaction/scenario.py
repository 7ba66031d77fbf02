"""Scenario files: JSON documents naming an orbit, a loop, numerics and tasks."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .errors import ValidationError
from .isotopy import (
    Constant,
    Cosine,
    GeneratorPath,
    PiecewiseConstant,
    Sine,
    central_loop,
    diagonal_loop,
    fourier_path,
    random_closed_loop,
    su2_pi_loop,
)
from .liecore import random_haar_unitary, random_skew_hermitian
from .numerics import DEFAULT, Numerics
from .orbit import OrbitSpec, make_orbit

__all__ = [
    "TASKS",
    "ScenarioError",
    "Scenario",
    "load_schema",
    "load_scenario",
    "parse_scenario",
    "resolve_path",
    "build_loop",
]

TASKS = (
    "kappa",
    "verify-independence",
    "verify-product",
    "verify-deformation",
    "vertices",
    "character",
    "convergence",
)


class ScenarioError(ValidationError):
    """A scenario that fails to parse or validate; carries the offending line when known."""

    def __init__(self, message: str, source: str = "<scenario>", line: int | None = None):
        self.source = source
        self.line = line
        self.message = message
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


@dataclass(eq=False)
class Scenario:
    name: str
    spec: OrbitSpec
    loop: GeneratorPath
    numerics: Numerics
    tasks: list[str]
    raw: dict
    digest: str  # sha256 of the file bytes
    source: str = "<scenario>"
    second_loop: GeneratorPath | None = None
    deformation: dict = field(default_factory=dict)
    independence_points: int = 10
    point_seed: int | None = None


def load_schema() -> dict:
    return json.loads(resources.files("orbitaction").joinpath("scenario.schema.json").read_text())


def resolve_path(name: str | Path) -> Path:
    """A path on disk, or the name of a bundled scenario (with or without ``.json``)."""
    p = Path(name)
    if p.exists():
        return p
    bundled = resources.files("orbitaction").joinpath("scenarios")
    for cand in (str(name), f"{name}.json"):
        q = bundled.joinpath(cand)
        if q.is_file():
            return Path(str(q))
    return p


def _locate(text: str, path) -> int | None:
    """Best-effort line number of the JSON node at ``path`` (keys and list indices)."""
    pos = 0
    line = None
    for key in path:
        if isinstance(key, str):
            i = text.find(json.dumps(key), pos)
            if i < 0:
                break
            pos = i + 1
            line = text.count("\n", 0, i) + 1
    return line


def _basis(spec_node, n: int) -> np.ndarray:
    if isinstance(spec_node, dict) and "diag_imag" in spec_node:
        d = np.asarray(spec_node["diag_imag"], dtype=float)
        return np.diag(1j * d)
    if isinstance(spec_node, dict) and "random" in spec_node:
        r = spec_node["random"]
        return random_skew_hermitian(int(r["n"]), int(r["seed"]), float(r.get("scale", 1.0)))
    arr = np.asarray(spec_node, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"basis must be an n x n array of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _coefficient(node):
    (kind, arg), = node.items()
    if kind == "constant":
        return Constant(float(arg))
    if kind == "cosine":
        return Cosine(int(arg["k"]), float(arg.get("amplitude", 1.0)))
    if kind == "sine":
        return Sine(int(arg["k"]), float(arg.get("amplitude", 1.0)))
    return PiecewiseConstant(tuple(float(v) for v in arg))


def build_loop(node: dict, n: int) -> GeneratorPath:
    """Build a generator path from a validated ``loop`` node."""
    (kind, arg), = node.items()
    if kind == "terms":
        terms = []
        for t in arg:
            B = _basis(t["basis"], n)
            if B.shape != (n, n):
                raise ValidationError(f"basis has shape {B.shape}, orbit needs ({n}, {n})")
            terms.append((B, _coefficient(t["coefficient"])))
        return GeneratorPath(n, tuple(terms))
    if kind == "central_loop":
        frame = random_haar_unitary(n, arg["frame_seed"]) if "frame_seed" in arg else None
        return central_loop(n, float(arg["theta"]), arg.get("shifts"), frame)
    if kind == "su2_pi":
        if n != 2:
            raise ValidationError(f"su2_pi is a u(2) loop, orbit has n={n}")
        return su2_pi_loop()
    if kind == "diagonal":
        return diagonal_loop(arg["ints"])
    if kind == "random_closed":
        return random_closed_loop(n, int(arg["seed"]), int(arg.get("pieces", 2)), float(arg.get("theta", 0.0)))
    if kind == "fourier":
        return fourier_path(n, int(arg.get("modes", 2)), int(arg["seed"]), float(arg.get("scale", 1.0)))
    raise ValidationError(f"unknown loop constructor {kind!r}")


def _numerics(node: dict) -> Numerics:
    changes: dict[str, Any] = {k: v for k, v in node.items()}
    if "cap_grid" in changes:
        changes["cap_grid"] = tuple(int(v) for v in changes["cap_grid"])
    return DEFAULT.with_(**changes)


def parse_scenario(text: str, source: str = "<scenario>", digest: str | None = None) -> Scenario:
    """Parse and validate scenario text; every failure is a ``ScenarioError`` with a line number."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON: {e.msg}", source, e.lineno) from None

    validator = jsonschema.Draft202012Validator(load_schema())
    err = jsonschema.exceptions.best_match(validator.iter_errors(raw))
    if err is not None:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ScenarioError(f"{where}: {err.message}", source, _locate(text, err.absolute_path) or 1)

    def fail(msg, *path):
        return ScenarioError(msg, source, _locate(text, path))

    o = raw["orbit"]
    try:
        spec = make_orbit(o["multiplicities"], o["char_ints"])
    except ValidationError as e:
        key = "multiplicities" if "multiplicit" in str(e) else "char_ints"
        raise fail(str(e), "orbit", key) from None

    built = {}
    for key in ("loop", "second_loop"):
        if key in raw:
            try:
                built[key] = build_loop(raw[key], spec.n)
            except ValidationError as e:
                raise fail(str(e), key) from None
    loop, second = built["loop"], built.get("second_loop")
    for key, p in (("loop", loop), ("second_loop", second)):
        if p is not None and p.n != spec.n:
            raise fail(f"{key} acts on C^{p.n} but the orbit lives in u({spec.n})", key)

    try:
        numerics = _numerics(raw.get("numerics", {}))
    except (ValidationError, ValueError, TypeError) as e:
        raise fail(str(e), "numerics") from None

    tasks = list(raw["tasks"])
    if "verify-product" in tasks and second is None:
        raise fail("verify-product needs a second_loop", "tasks")

    deformation = dict(raw.get("deformation", {}))
    if "C" in deformation:
        try:
            C = _basis(deformation["C"], spec.n)
        except ValidationError as e:
            raise fail(str(e), "deformation") from None
        if C.shape != (spec.n, spec.n):
            raise fail(f"deformation generator has shape {C.shape}", "deformation")
        deformation["C"] = C

    if digest is None:
        digest = hashlib.sha256(text.encode()).hexdigest()
    return Scenario(
        name=raw.get("name", Path(source).stem),
        spec=spec,
        loop=loop,
        numerics=numerics,
        tasks=tasks,
        raw=raw,
        digest=digest,
        source=source,
        second_loop=second,
        deformation=deformation,
        independence_points=int(raw.get("independence", {}).get("n_points", 10)),
        point_seed=raw.get("point_seed"),
    )


def load_scenario(path: str | Path) -> Scenario:
    """Read and parse a scenario file (or bundled scenario name). ``OSError`` propagates."""
    p = resolve_path(path)
    data = p.read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ScenarioError(f"not UTF-8: {e.reason}", str(p), 1) from None
    return parse_scenario(text, str(p), hashlib.sha256(data).hexdigest())
