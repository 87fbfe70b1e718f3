"""Command line interface, run configuration and report bundles.

Exit codes: 0 success, 1 an assertion failed, 2 configuration error,
3 numerical non-convergence or truncation failure.
"""

import argparse
import dataclasses
import hashlib
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import metrics as mt
from . import scenarios as sc
from .errors import ConfigError, NonConvergenceError, PreconditionError, TruncationError

__all__ = ["RunConfig", "ReportBundle", "write_bundle", "result_to_dict", "main", "EXIT_OK",
           "EXIT_FAIL", "EXIT_CONFIG", "EXIT_NUMERIC"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

_FORMATS = ("json", "csv", "plotdata")
_UNITS = {"hbar": 1.0, "mass": 1.0, "omega": 1.0, "alpha": 1.0}
_REGION = {"l_X": 4.0, "l_P": 4.0, "grid": 5}
_OPTIMIZER = {f.name for f in dataclasses.fields(mt.ExtensionSearchConfig)}
_SWEEPS = {f.name for f in dataclasses.fields(sc.SweepCounts)}
_TOP = ("scenario", "dim", "units", "region", "optimizer", "sweeps", "seed", "out", "formats")


def _positive(path, value, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if not value > 0 or not math.isfinite(value):
        raise ConfigError(f"{path}: must be positive and finite, got {value!r}")
    return int(value) if integer else float(value)


def _block(name, given, allowed):
    if not isinstance(given, dict):
        raise ConfigError(f"{name}: expected an object")
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(unknown)}")
    return dict(given)


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run.

    Parameters
    ----------
    scenario : str
        Scenario id or ``"all"``.
    dim : int, optional
        Fock truncation; scenarios fall back to their own defaults.
    units : dict
        ``hbar``, ``mass``, ``omega`` and the readout coupling ``alpha``.
    region : dict
        ``l_X``, ``l_P`` and ``grid`` (nodes per axis).
    optimizer : dict
        Fields of :class:`~qerrdist.metrics.ExtensionSearchConfig`.
    sweeps : dict
        Fields of :class:`~qerrdist.scenarios.SweepCounts`.
    seed : int
    out : str
        Output directory. Not echoed into the manifest.
    formats : tuple of str
        Subset of ``json``, ``csv`` and ``plotdata``.
    """

    scenario: str = "all"
    dim: int = None
    units: dict = field(default_factory=lambda: dict(_UNITS))
    region: dict = field(default_factory=lambda: dict(_REGION))
    optimizer: dict = field(default_factory=dict)
    sweeps: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "qerrdist_out"
    formats: tuple = ("json", "csv")

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be an object")
        _block("config", data, _TOP)
        kw = {}
        if "scenario" in data:
            s = data["scenario"]
            if s != "all" and s not in sc.SCENARIOS:
                raise ConfigError(f"scenario: unknown scenario {s!r}")
            kw["scenario"] = s
        if "dim" in data:
            kw["dim"] = _positive("dim", data["dim"], integer=True, allow_none=True)
        if "units" in data:
            u = _block("units", data["units"], _UNITS)
            kw["units"] = {**_UNITS, **{k: _positive(f"units.{k}", v) for k, v in u.items()}}
        if "region" in data:
            r = _block("region", data["region"], _REGION)
            checked = {}
            for k, v in r.items():
                checked[k] = _positive(f"region.{k}", v, integer=(k == "grid"))
            kw["region"] = {**_REGION, **checked}
        if "optimizer" in data:
            o = _block("optimizer", data["optimizer"], _OPTIMIZER)
            try:
                mt.ExtensionSearchConfig(**o)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"optimizer: {exc}") from None
            kw["optimizer"] = o
        if "sweeps" in data:
            w = _block("sweeps", data["sweeps"], _SWEEPS)
            kw["sweeps"] = {k: _positive(f"sweeps.{k}", v, integer=True) for k, v in w.items()}
        if "seed" in data:
            s = data["seed"]
            if isinstance(s, bool) or not isinstance(s, int) or s < 0:
                raise ConfigError(f"seed: expected a nonnegative integer, got {s!r}")
            kw["seed"] = s
        if "out" in data:
            if not isinstance(data["out"], str) or not data["out"]:
                raise ConfigError("out: expected a directory path")
            kw["out"] = data["out"]
        if "formats" in data:
            kw["formats"] = _formats(data["formats"])
        return cls(**kw)

    @classmethod
    def from_file(cls, path):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        return cls.from_dict(data)

    def with_overrides(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        if "dim" in changes:
            changes["dim"] = _positive("--dim", changes["dim"], integer=True)
        if "seed" in changes and changes["seed"] < 0:
            raise ConfigError("--seed: expected a nonnegative integer")
        if "formats" in changes:
            changes["formats"] = _formats(changes["formats"])
        return dataclasses.replace(self, **changes)

    def optimizer_config(self):
        return mt.ExtensionSearchConfig(**self.optimizer)

    def sweep_counts(self):
        return sc.SweepCounts(**self.sweeps)

    def echo(self):
        """Config as stored in the manifest (output location omitted)."""
        return {
            "scenario": self.scenario, "dim": self.dim, "units": dict(sorted(self.units.items())),
            "region": dict(sorted(self.region.items())),
            "optimizer": dict(sorted(self.optimizer.items())),
            "sweeps": dict(sorted(self.sweeps.items())), "seed": self.seed,
            "formats": list(self.formats),
        }


def _formats(value):
    if isinstance(value, str):
        value = [v.strip() for v in value.split(",") if v.strip()]
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError("formats: expected a non-empty list")
    bad = [v for v in value if v not in _FORMATS]
    if bad:
        raise ConfigError(f"formats: unsupported {', '.join(map(str, bad))}; choose from {', '.join(_FORMATS)}")
    return tuple(dict.fromkeys(value))


# -- serialisation -----------------------------------------------------------


def _num(x):
    """JSON-safe float: shortest round-trip repr, non-finite values as strings."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return x


def result_to_dict(res):
    return {
        "id": res.id,
        "status": "PASS" if res.passed else "FAIL",
        "quantities": [
            {"name": q.name, "value": _num(q.value), "unit": q.unit,
             "tolerance": None if q.tolerance is None else _num(q.tolerance), "status": q.status}
            for q in res.quantities
        ],
        "distributions": [
            {"name": d.name, "support": [_num(v) for v in d.support],
             "weights": [_num(w) for w in d.weights]}
            for d in res.distributions
        ],
        "assertions": [
            {"claim_ref": a.claim_ref, "status": a.status, "slack": _num(a.slack), "detail": a.detail}
            for a in res.assertions
        ],
    }


def _dumps(obj):
    return json.dumps(obj, indent=1, sort_keys=False, allow_nan=False, ensure_ascii=True) + "\n"


def distribution_csv(dist):
    lines = ["value,probability"]
    lines += [f"{float(v)!r},{float(w)!r}" for v, w in zip(dist.support, dist.weights)]
    return "\n".join(lines) + "\n"


def _slug(text):
    return re.sub(r"[^A-Za-z0-9.-]+", "_", text).strip("_") or "dist"


@dataclass
class ReportBundle:
    manifest: dict
    files: dict
    directory: Path


def write_bundle(results, config, directory):
    """Write ``bundle.json`` and the per-distribution CSV files.

    The manifest lists the SHA-256 digest of every emitted payload: the
    serialised scenario list and each CSV file. ``content_hash`` digests that
    list, so it covers all emitted bytes apart from the manifest itself.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    scen = [result_to_dict(r) for r in results]
    payloads = {}
    if any(f in config.formats for f in ("csv", "plotdata")):
        for r in results:
            for d in r.distributions:
                payloads[f"{_slug(r.id)}__{_slug(d.name)}.csv"] = distribution_csv(d).encode()
    scen_bytes = _dumps(scen).encode()
    digests = {"bundle.json#scenarios": hashlib.sha256(scen_bytes).hexdigest()}
    for name in sorted(payloads):
        digests[name] = hashlib.sha256(payloads[name]).hexdigest()
    content = "".join(f"{k}\0{v}\n" for k, v in digests.items())
    manifest = {
        "tool": "qerrdist",
        "version": __version__,
        "config": config.echo(),
        "files": digests,
        "content_hash": hashlib.sha256(content.encode()).hexdigest(),
        "summary": {r.id: ("PASS" if r.passed else "FAIL") for r in results},
    }
    written = {}
    for name, data in sorted(payloads.items()):
        (directory / name).write_bytes(data)
        written[name] = directory / name
    if "json" in config.formats:
        text = '{\n"manifest": ' + _dumps(manifest).rstrip("\n") + ',\n"scenarios": ' + scen_bytes.decode() + "}\n"
        (directory / "bundle.json").write_text(text)
        written["bundle.json"] = directory / "bundle.json"
    return ReportBundle(manifest, written, directory)


# -- CLI ---------------------------------------------------------------------


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--dim", type=int, help="Fock truncation")
    common.add_argument("--seed", type=int, help="root seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", dest="formats", help="comma-separated subset of json,csv,plotdata")
    p = argparse.ArgumentParser(prog="qerrdist", description="Error and disturbance figures for quantum measurements.")
    p.add_argument("--version", action="version", version=f"qerrdist {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list", parents=[common], help="list scenarios")
    r = sub.add_parser("run", parents=[common], help="run one scenario (or all) and write a bundle")
    r.add_argument("scenario", nargs="?", help="scenario id or 'all'")
    sub.add_parser("verify", parents=[common], help="run every scenario; exit 1 on any FAIL")
    sub.add_parser("fig1", parents=[common], help="write the two shifted-oscillator distributions as CSV")
    return p


def _config(args):
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    return cfg.with_overrides(dim=args.dim, seed=args.seed, out=args.out, formats=args.formats)


def _run(ids, cfg, out=sys.stdout):
    results = []
    for sid in ids:
        res = sc.SCENARIOS[sid].runner(cfg)
        results.append(res)
        n_fail = sum(a.status != "PASS" for a in res.assertions)
        print(f"{sid}: {'PASS' if res.passed else 'FAIL'} ({len(res.assertions) - n_fail}/{len(res.assertions)} assertions)",
              file=out)
        for a in res.assertions:
            if a.status != "PASS":
                print(f"  FAIL {a.claim_ref} [{a.detail}] slack={a.slack!r}", file=out)
    return results


def main(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        if args.command == "list":
            for s in sc.SCENARIOS.values():
                print(f"{s.id:16s} {s.title}\n{'':16s} {s.anchor}")
            return EXIT_OK
        if args.command == "fig1":
            res = sc.SCENARIOS["example7"].runner(cfg)
            out = Path(cfg.out)
            out.mkdir(parents=True, exist_ok=True)
            for d in res.distributions:
                path = out / f"fig1_{_slug(d.name)}.csv"
                path.write_text(distribution_csv(d))
                print(path)
            return EXIT_OK
        if args.command == "run":
            sid = args.scenario or cfg.scenario
            if sid != "all" and sid not in sc.SCENARIOS:
                raise ConfigError(f"unknown scenario {sid!r}; see 'qerrdist list'")
            ids = list(sc.SCENARIOS) if sid == "all" else [sid]
            cfg = dataclasses.replace(cfg, scenario=sid)
        else:
            ids = list(sc.SCENARIOS)
            cfg = dataclasses.replace(cfg, scenario="all")
        results = _run(ids, cfg)
        bundle = write_bundle(results, cfg, cfg.out)
        print(f"bundle: {bundle.directory} content_hash={bundle.manifest['content_hash']}")
        return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL
    except (ConfigError, PreconditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergenceError, TruncationError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
