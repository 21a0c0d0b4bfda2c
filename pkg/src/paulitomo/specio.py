"""Loading and resolving the YAML spec files consumed by the CLI.

Spec files are plain key-value text with nested sections so they diff
cleanly; preset names (decompositions ``M4-C2``/``M4-mixed``, experiment
specs ``fig1a.spec``/``fig1b.spec``) resolve against the files shipped in
``paulitomo/presets``.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .basis import SubalgebraDecomposition
from .channel import GeneralizedPauliChannel, QubitPauliChannel
from .errors import SpecFileError
from .estimator import BlochTriple, FrequencyMatrix
from .optimizer import OptimizerSettings
from .simulator import (
    _TRIPLE_DRAW_SALT,
    ExperimentSpec,
    OrthogonalitySweep,
    ScalingSweep,
    haar_rotation_triple,
)


def preset_path(name: str) -> Path | None:
    """Path of a shipped preset file, or None if no such preset exists."""
    root = resources.files("paulitomo") / "presets"
    for candidate in (name, f"{name}.yaml", f"{name}.spec"):
        entry = root / candidate
        if entry.is_file():
            return Path(str(entry))
    return None


def load_spec_file(ref: str | Path) -> dict:
    """Parse a spec file; bare names fall back to the shipped presets."""
    path = Path(ref)
    if not path.is_file():
        preset = preset_path(str(ref))
        if preset is None:
            raise SpecFileError(f"spec file {ref!r} not found (and no such preset)")
        path = preset
    try:
        loaded = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise SpecFileError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(loaded, dict):
        raise SpecFileError(f"{path} must hold a key-value mapping at top level")
    return loaded


def decomposition_from_mapping(mapping: dict) -> SubalgebraDecomposition:
    try:
        dim = int(mapping["dim"])
        entries = mapping["blocks"]
        blocks = tuple(tuple(int(i) for i in entry["indices"]) for entry in entries)
        kinds = tuple(entry.get("kind") for entry in entries)
    except (KeyError, TypeError) as exc:
        raise SpecFileError(f"malformed decomposition mapping: {exc}") from exc
    try:
        return SubalgebraDecomposition(dim=dim, blocks=blocks, kinds=kinds)
    except ValueError as exc:
        raise SpecFileError(f"invalid decomposition: {exc}") from exc


def resolve_decomposition(ref: str | Path) -> SubalgebraDecomposition:
    """Decomposition from a preset name or a file path."""
    return decomposition_from_mapping(load_spec_file(ref))


def resolve_channel(mapping: dict) -> QubitPauliChannel | GeneralizedPauliChannel:
    """Channel from a spec section: qubit (lambdas + angles) or generalized
    (decomposition reference + per-block lambdas)."""
    if not isinstance(mapping, dict):
        raise SpecFileError("channel section must be a mapping")
    if "lambdas" not in mapping:
        raise SpecFileError("channel section needs a 'lambdas' entry")
    lambdas = np.asarray(mapping["lambdas"], dtype=float)
    if "decomposition" in mapping:
        decomposition = resolve_decomposition(mapping["decomposition"])
        try:
            return GeneralizedPauliChannel(decomposition=decomposition, lambdas=lambdas)
        except ValueError as exc:
            raise SpecFileError(str(exc)) from exc
    angles = np.asarray(mapping.get("angles", [0.0, 0.0, 0.0]), dtype=float)
    try:
        return QubitPauliChannel(lambdas=lambdas, angles=angles)
    except ValueError as exc:
        raise SpecFileError(str(exc)) from exc


def resolve_triple(value, seed: int) -> BlochTriple:
    """Triple from 'identity', 'random-orthogonal' (drawn from the seed), or
    an explicit list of three Bloch column vectors."""
    if isinstance(value, str):
        if value == "identity":
            return BlochTriple.identity()
        if value == "random-orthogonal":
            return haar_rotation_triple(np.random.default_rng((seed, _TRIPLE_DRAW_SALT)))
        raise SpecFileError(f"unknown triple shorthand {value!r}")
    try:
        columns = [np.asarray(column, dtype=float) for column in value]
        return BlochTriple.from_columns(*columns)
    except (TypeError, ValueError) as exc:
        raise SpecFileError(f"invalid triple: {exc}") from exc


def resolve_sweep(mapping: dict) -> OrthogonalitySweep | ScalingSweep:
    if not isinstance(mapping, dict) or "kind" not in mapping:
        raise SpecFileError("sweep section needs a 'kind' entry")
    kind = mapping["kind"]
    if kind == "orthogonality":
        try:
            return OrthogonalitySweep(angles_deg=tuple(float(a) for a in mapping["angles_deg"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecFileError(f"malformed orthogonality sweep: {exc}") from exc
    if kind == "scaling":
        try:
            return ScalingSweep(
                shots=tuple(int(n) for n in mapping["shots"]),
                weights=tuple(float(w) for w in mapping["weights"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecFileError(f"malformed scaling sweep: {exc}") from exc
    raise SpecFileError(f"unknown sweep kind {kind!r}")


def resolve_experiment(spec: dict, seed_override: int | None = None) -> ExperimentSpec:
    """Experiment spec from the 'channel', 'experiment' and optional 'sweep'
    sections; a seed override replaces the file's seed before triples are
    drawn."""
    channel = resolve_channel(spec.get("channel", {}))
    if not isinstance(channel, QubitPauliChannel):
        raise SpecFileError("experiments run on qubit channels")
    section = spec.get("experiment")
    if not isinstance(section, dict):
        raise SpecFileError("spec needs an 'experiment' section")
    try:
        seed = int(section["seed"]) if seed_override is None else int(seed_override)
        shots = int(section["shots_per_cell"])
        repetitions = int(section["repetitions"])
        weight = float(section.get("weight", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecFileError(f"malformed experiment section: {exc}") from exc
    sweep = resolve_sweep(spec["sweep"]) if "sweep" in spec else None
    try:
        return ExperimentSpec(
            truth=channel,
            input_triple=resolve_triple(section.get("input_triple", "identity"), seed),
            measurement_triple=resolve_triple(
                section.get("measurement_triple", "identity"), seed
            ),
            shots_per_cell=shots,
            repetitions=repetitions,
            weight=weight,
            seed=seed,
            sweep=sweep,
        )
    except ValueError as exc:
        raise SpecFileError(str(exc)) from exc


def resolve_frequencies(mapping: dict) -> FrequencyMatrix:
    """Frequency matrix from 'frequencies' plus scalar or matrix 'counts'."""
    try:
        nu = np.asarray(mapping["frequencies"], dtype=float)
        counts = mapping.get("counts", 1)
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecFileError(f"malformed frequencies: {exc}") from exc
    counts = np.broadcast_to(np.asarray(counts, dtype=int), (3, 3))
    try:
        return FrequencyMatrix(nu=nu, counts=counts)
    except ValueError as exc:
        raise SpecFileError(str(exc)) from exc


def resolve_optimizer_settings(spec: dict, seed_override: int | None = None) -> OptimizerSettings:
    section = spec.get("optimizer", {}) or {}
    if not isinstance(section, dict):
        raise SpecFileError("optimizer section must be a mapping")
    known = {"grid_points_per_axis", "max_iterations", "step_size", "tolerance", "seed"}
    unknown = set(section) - known
    if unknown:
        raise SpecFileError(f"unknown optimizer settings: {sorted(unknown)}")
    values = dict(section)
    if seed_override is not None:
        values["seed"] = int(seed_override)
    try:
        return OptimizerSettings(**values)
    except (TypeError, ValueError) as exc:
        raise SpecFileError(str(exc)) from exc


def spec_hash(resolved: dict) -> str:
    """sha256 over the canonical JSON form of a resolved spec."""
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
