"""Command-line front end: ``analyze``, ``simulate`` and ``sweep``.

Configuration files are flat JSON objects whose keys are NetworkConfig
field names plus ``trials``, ``seed``, ``parallel``, ``e_lfsr``, ``e_mul``,
``e_add`` and ``packet_bytes``. Every run writes its resolved manifest in
the same format, so ``--config manifest.json`` reproduces it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import secrets
import sys
from dataclasses import asdict, fields

from . import analysis
from .analysis import EnergyParams
from .codec import ConfigurationError
from .gf import FieldError
from .montecarlo import SWEEP_AXES, SummaryStats, simulate_trials, summarize, sweep
from .simnet import NetworkConfig

log = logging.getLogger("coopcoding")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

ANALYZE_COLUMNS = ["m", "q", "m_prime", "M_expected", "p_independent", "m_min", "e_nc_packet",
                   "e_node_nc", "e_dc_packet", "e_node_dc", "e_source_savings", "total_packets"]
TRIAL_COLUMNS = ["trial", "seed", "destination_rank", "decoded", "packets", "retransmitted",
                 "energy", "success"]

_CONFIG_KEYS = {f.name for f in fields(NetworkConfig)}
_ENERGY_KEYS = {"e_lfsr", "e_mul", "e_add"}
_RUN_KEYS = {"trials", "seed", "parallel", "axis", "values", "linked"}
_IGNORED_KEYS = {"command", "out", "per_trial", "rank_profile", "manifest"}


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.6g}"
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def write_csv(path: str | None, header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(row[h]) for h in header])
    text = buf.getvalue()
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def packet_bits(packet_bytes: int, q: int) -> int:
    """Packet length in bits, zero-padded up to a whole number of q-bit symbols."""
    if packet_bytes < 1:
        raise ConfigurationError("packet_bytes must be >= 1")
    return -(-8 * packet_bytes // q) * q


def load_config_file(path: str) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a JSON object")
    unknown = set(data) - _CONFIG_KEYS - _ENERGY_KEYS - _RUN_KEYS - _IGNORED_KEYS - {"packet_bytes"}
    if unknown:
        raise ConfigurationError(f"{path}: unknown keys {sorted(unknown)}")
    return data


_OVERRIDES = {
    "m": "m", "m_prime": "m_prime", "clusters": "K", "cluster_size": "cluster_size",
    "r": "r", "rs": "r_s", "p_loss": "p_loss", "scheme": "scheme", "policy": "policy",
    "q": "q", "max_rounds": "max_retransmission_rounds", "e_lfsr": "e_lfsr",
    "e_mul": "e_mul", "e_add": "e_add", "trials": "trials", "seed": "seed",
    "parallel": "parallel",
}


def resolve(args) -> tuple[NetworkConfig, EnergyParams, dict]:
    """Merge defaults, the config file and command-line overrides."""
    raw = load_config_file(args.config) if getattr(args, "config", None) else {}
    for flag, key in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            raw[key] = value
    if getattr(args, "packet_bytes", None) is not None:
        raw["packet_bytes"] = args.packet_bytes
    if "packet_bytes" in raw:
        raw["L"] = packet_bits(int(raw.pop("packet_bytes")), int(raw.get("q", NetworkConfig.q)))

    cfg_kwargs = {k: raw[k] for k in _CONFIG_KEYS if k in raw}
    if "cluster_size" in raw:
        K = int(cfg_kwargs.get("K", NetworkConfig.K))
        cfg_kwargs["cluster_sizes"] = (int(raw["cluster_size"]),) * K
    elif "K" in cfg_kwargs and "cluster_sizes" in cfg_kwargs \
            and len(cfg_kwargs["cluster_sizes"]) != cfg_kwargs["K"]:
        cfg_kwargs["cluster_sizes"] = (cfg_kwargs["cluster_sizes"][0],) * int(cfg_kwargs["K"])
    if cfg_kwargs.get("cluster_sizes") is not None:
        cfg_kwargs["cluster_sizes"] = tuple(cfg_kwargs["cluster_sizes"])
    config = NetworkConfig(**cfg_kwargs)
    energy = EnergyParams(**{k: float(raw[k]) for k in _ENERGY_KEYS if k in raw},
                          L=config.L, q=config.q)

    run = {
        "trials": int(raw.get("trials", 1000)),
        "seed": int(raw["seed"]) if raw.get("seed") is not None else secrets.randbits(63),
        "parallel": int(raw.get("parallel", 1)),
    }
    if run["trials"] < 1:
        raise ConfigurationError("trials must be >= 1")
    for key in ("axis", "values", "linked"):
        if key in raw:
            run[key] = raw[key]
    return config, energy, run


def manifest(command: str, config: NetworkConfig, energy: EnergyParams, run: dict,
             outputs: dict) -> dict:
    data = {"command": command}
    data.update({k: (v.value if hasattr(v, "value") else v) for k, v in asdict(config).items()})
    data["cluster_sizes"] = list(config.cluster_sizes)
    data.update({k: getattr(energy, k) for k in sorted(_ENERGY_KEYS)})
    data.update(run)
    data.update({k: v for k, v in outputs.items() if v})
    return data


def _write_manifest(path: str, data: dict) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest_path(args) -> str | None:
    if args.manifest:
        return args.manifest
    if args.out and args.out != "-":
        return os.path.splitext(args.out)[0] + ".manifest.json"
    return None


def cmd_analyze(args) -> int:
    energy = EnergyParams(e_lfsr=args.e_lfsr, e_mul=args.e_mul, e_add=args.e_add,
                          L=packet_bits(args.packet_bytes, args.q), q=args.q)
    rows = []
    for m in args.m:
        m_min = analysis.min_combination_packets(m, args.q)
        m_prime = args.m_prime if args.m_prime is not None else m_min
        sizes = [args.cluster_size if args.cluster_size is not None else m_prime] * args.clusters
        report = analysis.energy_report(m, m_prime, energy, sizes, args.retransmitted)
        rows.append({
            "m": m, "q": args.q, "m_prime": m_prime,
            "M_expected": analysis.expected_innovative_transmissions(m, args.q),
            "p_independent": analysis.independence_probability(m, args.q),
            "m_min": m_min, **report.as_dict(),
        })
    write_csv(args.out, ANALYZE_COLUMNS, rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config, energy, run = resolve(args)
    results = simulate_trials(config, run["trials"], run["seed"], run["parallel"], energy)
    stats = summarize(results)
    row = stats.as_row()
    write_csv(args.out, list(row), [row])
    if args.per_trial:
        write_csv(args.per_trial, TRIAL_COLUMNS, [{
            "trial": r.trial_seed[1], "seed": f"{r.trial_seed[0]}:{r.trial_seed[1]}",
            "destination_rank": r.destination_rank, "decoded": r.decoded_count,
            "packets": r.packets_transmitted, "retransmitted": r.packets_retransmitted,
            "energy": float(r.coding_energy), "success": r.success,
        } for r in results])
    if args.rank_profile:
        write_csv(args.rank_profile, ["cluster", "full_rank_fraction", "mean_rank"], [
            {"cluster": i + 1, "full_rank_fraction": f, "mean_rank": mr}
            for i, (f, mr) in enumerate(zip(stats.cluster_full_rank_fraction,
                                            stats.mean_cluster_rank))])
    path = _manifest_path(args)
    if path:
        _write_manifest(path, manifest("simulate", config, energy, run, {
            "out": args.out, "per_trial": args.per_trial, "rank_profile": args.rank_profile}))
    return EXIT_OK


def parse_values(axis: str, text) -> list:
    if isinstance(text, list):
        items = text
    else:
        text = str(text)
        if ".." in text:
            lo, hi = text.split("..")
            items = list(range(int(lo), int(hi) + 1))
        else:
            items = [v.strip() for v in text.split(",") if v.strip()]
    if axis in ("m_prime", "r", "cluster_size", "K"):
        return [int(v) for v in items]
    if axis == "p_loss":
        return [float(v) for v in items]
    return [str(v) for v in items]


def cmd_sweep(args) -> int:
    config, energy, run = resolve(args)
    axis = args.axis or run.get("axis")
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    text = args.values if args.values is not None else run.get("values")
    if text is None:
        raise ConfigurationError("sweep needs --values")
    values = parse_values(axis, text)
    linked = False if args.unlinked else bool(run.get("linked", True))
    table = sweep(config, axis, values, run["trials"], run["seed"], linked, run["parallel"], energy)
    rows = [{axis: v, **stats.as_row()} for v, stats in table]
    write_csv(args.out, list(rows[0]), rows)
    path = _manifest_path(args)
    if path:
        run = {**run, "axis": axis, "values": values, "linked": linked}
        _write_manifest(path, manifest("sweep", config, energy, run, {"out": args.out}))
    return EXIT_OK


def _add_network_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config or manifest file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--parallel", type=int, help="worker processes")
    p.add_argument("--out", help="summary CSV path (default stdout)")
    p.add_argument("--manifest", help="manifest path (default derived from --out)")
    p.add_argument("--m", type=int)
    p.add_argument("--m-prime", type=int)
    p.add_argument("--clusters", type=int, help="number of clusters K")
    p.add_argument("--cluster-size", type=int, help="nodes per cluster (default m')")
    p.add_argument("--r", type=int, help="node-to-next-cluster connectivity")
    p.add_argument("--rs", type=int, help="source connectivity (default r)")
    p.add_argument("--p-loss", type=float)
    p.add_argument("--scheme", choices=["CNC", "CDC", "cnc", "cdc"])
    p.add_argument("--policy")
    p.add_argument("--max-rounds", type=int, help="retransmission round budget")
    p.add_argument("--q", type=int)
    p.add_argument("--packet-bytes", type=int)
    p.add_argument("--e-lfsr", type=float)
    p.add_argument("--e-mul", type=float)
    p.add_argument("--e-add", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopcoding", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form packet counts and coding energy")
    p.add_argument("--m", type=int, nargs="+", default=[10])
    p.add_argument("--q", type=int, default=8)
    p.add_argument("--m-prime", type=int, help="default: smallest sufficient m'")
    p.add_argument("--clusters", type=int, default=20)
    p.add_argument("--cluster-size", type=int, help="default: m'")
    p.add_argument("--retransmitted", type=int, default=0)
    p.add_argument("--packet-bytes", type=int, default=100)
    p.add_argument("--e-lfsr", type=float, default=1.0)
    p.add_argument("--e-mul", type=float, default=1.0)
    p.add_argument("--e-add", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo run of one configuration")
    _add_network_flags(p)
    p.add_argument("--per-trial", help="per-trial CSV path")
    p.add_argument("--rank-profile", help="per-cluster rank CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo run over one parameter axis")
    _add_network_flags(p)
    p.add_argument("--axis", choices=SWEEP_AXES)
    p.add_argument("--values", help="comma list or inclusive range lo..hi")
    p.add_argument("--unlinked", action="store_true",
                   help="keep cluster sizes fixed when sweeping m_prime")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, FieldError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - defensive exit code
        log.exception("run failed")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
