"""Config-driven experiment runner.

Reproduces the far-field gain sweeps, the near-field gain/loss curves, and
the capacity studies from declarative YAML configs, writing CSV tables
(one per scenario), a metadata file with every resolved parameter, and
optional line charts.  Invoked as `hmimo gain|nearfield|capacity`.

Exit codes: 0 success, 2 config parse error, 3 semantic validation error,
1 runtime failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import hashlib
import json
import os
import sys

import numpy as np
import yaml

from . import capacity as cap
from . import channel as ch
from . import farfield as ff
from . import nearfield as nf
from .geometry import AngularSpread, build_geometry, steer_excitation

GAIN_CSV_COLUMNS = ("topology,method,N_x,spacing_lambda,theta_deg,"
                    "gain_lin,gain_dBi,efficiency,realized")
NEARFIELD_CSV_COLUMNS = ("R_lambda,mode,source_pol,field_pol,gain_lin,gain_dB,"
                         "loss_polarization,loss_illumination,loss_beamforming")
CAPACITY_CSV_COLUMNS = ("scenario,topology,policy,N_x,spacing_lambda,R_lambda,"
                        "snr_dB,capacity_mean,capacity_stderr,seed")

SCENARIOS = {
    "gain": ("gain_sweep",),
    "nearfield": ("nearfield_gain",),
    "capacity": ("capacity_quasi_static", "capacity_ergodic",
                 "capacity_nearfield"),
}

_POLICY_NAMES = {
    "traditional": ch.TRADITIONAL,
    "electromagnetic": ch.TX_NC_RX_C,
    "tx_nc_rx_c": ch.TX_NC_RX_C,
}


class ConfigError(Exception):
    """Invalid configuration; message names the offending key path."""


def fmt(x) -> str:
    """Numbers formatted with 9 significant digits for CSV stability."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.9g}"
    return str(x)


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

DEFAULTS = {
    "seed": 12345,
    "threads": 1,
    "charts": False,
    "gain_sweep": {
        "topology": "planar",
        "L_x": 5.0, "L_y": 5.0, "dz_offset": 1.0,
        "N_x": [3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 26, 31, 41],
        "theta_deg": [0.0, 30.0, 60.0],
        "methods": ["closed", "physical"],
        # boardless point-source element, gain doubled to align with the
        # reflective-board assumption of the physical aperture formula
        "pattern": {"u": 0.0, "v": 0.0, "board_factor": 2.0},
        "efficiency": {"D_e": 3.28, "a_l": 0.77, "S_v": 0.065},
        "realized": False,
        "quadrature_check": False,
    },
    "nearfield_gain": {
        "L": 5.0,
        "spacing": 0.5,
        "R_lambda": [2.0, 3.0, 4.2, 6.0, 8.5, 12.0, 17.5, 25.0, 35.0, 50.0],
    },
    "capacity_quasi_static": {
        "topologies": ["linear", "planar", "volumetric"],
        "N_x": [3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 26, 31, 41],
        "policies": ["traditional", "electromagnetic"],
        "gain_methods": ["closed", "physical"],
        "users": {"linear": 10, "planar": 100, "volumetric": 100},
        "snr_db": 10.0,
        "n_realizations": 100,
        "L_x": 5.0, "L_y": 5.0, "dz_offset": 1.0,
        "spread_theta_deg": 60.0,
        "spectrum": "full_sphere",
    },
    "capacity_ergodic": {
        "topologies": ["linear", "planar", "volumetric"],
        "N_x": [3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 26, 31, 41],
        "policies": ["traditional", "electromagnetic"],
        "gain_methods": ["closed", "physical"],
        "users": {"linear": 10, "planar": 100, "volumetric": 100},
        "snr_db": 10.0,
        "n_realizations": 2000,
        "L_x": 5.0, "L_y": 5.0, "dz_offset": 1.0,
        "spread_theta_deg": 60.0,
        "spectrum": "full_sphere",
    },
    "capacity_nearfield": {
        "topologies": ["planar", "volumetric"],
        "modes": ["farfield", "nf_focus", "nf_steer"],
        "R_lambda": [5.0, 7.5, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0],
        "snr_db": 10.0,
        "L": 5.0,
        "tx_spacing": 0.5,
    },
}


def load_config(path: str) -> dict:
    """Parse the YAML config file; raises ConfigError on parse problems."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    return raw


def resolve_config(raw: dict, subcommand: str) -> dict:
    """Defaults + user config for the selected scenario, fully explicit."""
    scenario = raw.get("scenario")
    if scenario is None:
        scenario = SCENARIOS[subcommand][0]
    cfg = {
        "scenario": scenario,
        "seed": raw.get("seed", DEFAULTS["seed"]),
        "threads": raw.get("threads", DEFAULTS["threads"]),
        "charts": raw.get("charts", DEFAULTS["charts"]),
    }
    if scenario in DEFAULTS:
        section = copy.deepcopy(DEFAULTS[scenario])
        user = raw.get(scenario, {})
        if not isinstance(user, dict):
            raise ConfigError(f"{scenario}: section must be a mapping")
        for key, value in user.items():
            if key not in section:
                raise ConfigError(f"{scenario}.{key}: unknown key")
            if isinstance(section[key], dict) and isinstance(value, dict):
                for sub, sval in value.items():
                    if sub not in section[key]:
                        raise ConfigError(f"{scenario}.{key}.{sub}: unknown key")
                    section[key][sub] = sval
            else:
                section[key] = value
        cfg[scenario] = section
    return cfg


def validate(cfg: dict, subcommand: str) -> list[str]:
    """Semantic checks; returns a list of diagnostics (empty when valid)."""
    diags = []
    scenario = cfg.get("scenario")
    if scenario not in SCENARIOS[subcommand]:
        diags.append(f"scenario: {scenario!r} is not valid for the "
                     f"{subcommand!r} subcommand (expected one of "
                     f"{SCENARIOS[subcommand]})")
        return diags
    section = cfg.get(scenario, {})
    for key, value in section.items():
        if value is None:
            diags.append(f"{scenario}.{key}: missing value")
    if diags:
        return diags

    def positive(key, value):
        if not (isinstance(value, (int, float)) and value > 0):
            diags.append(f"{scenario}.{key}: must be a positive number")

    if scenario == "gain_sweep":
        if section["topology"] not in ("linear", "planar", "volumetric"):
            diags.append(f"{scenario}.topology: unknown topology "
                         f"{section['topology']!r}")
        positive("L_x", section["L_x"])
        if section["topology"] != "linear":
            positive("L_y", section["L_y"])
        if not section["N_x"] or any(int(n) < 1 for n in section["N_x"]):
            diags.append(f"{scenario}.N_x: need element counts >= 1")
        for m in section["methods"]:
            if m not in ("closed", "quadrature", "physical"):
                diags.append(f"{scenario}.methods: unknown method {m!r}")
        if section["pattern"]["board_factor"] not in (1, 2, 1.0, 2.0):
            diags.append(f"{scenario}.pattern.board_factor: must be 1 or 2")
    elif scenario == "nearfield_gain":
        positive("L", section["L"])
        positive("spacing", section["spacing"])
        if not section["R_lambda"] or min(section["R_lambda"]) <= 0:
            diags.append(f"{scenario}.R_lambda: need positive distances")
    else:
        if not isinstance(section["snr_db"], (int, float)):
            diags.append(f"{scenario}.snr_db: must be a number (dB)")
        if scenario in ("capacity_quasi_static", "capacity_ergodic"):
            if int(section["n_realizations"]) < 1:
                diags.append(f"{scenario}.n_realizations: must be >= 1")
            for t in section["topologies"]:
                if t not in ("linear", "planar", "volumetric"):
                    diags.append(f"{scenario}.topologies: unknown {t!r}")
                elif t not in section["users"]:
                    diags.append(f"{scenario}.users.{t}: missing user count")
            for p in section["policies"]:
                if p not in _POLICY_NAMES:
                    diags.append(f"{scenario}.policies: unknown policy {p!r}")
            if not 0 < float(section["spread_theta_deg"]) <= 90:
                diags.append(f"{scenario}.spread_theta_deg: must lie in (0, 90]")
            if section["spectrum"] not in ("full_sphere", "sector", "sector_two_sided"):
                diags.append(f"{scenario}.spectrum: unknown spectrum "
                             f"{section['spectrum']!r}")
        else:
            for t in section["topologies"]:
                if t not in ("planar", "volumetric"):
                    diags.append(f"{scenario}.topologies: unknown {t!r}")
            for m in section["modes"]:
                if m not in ("farfield", "nf_focus", "nf_steer"):
                    diags.append(f"{scenario}.modes: unknown mode {m!r}")
            if not section["R_lambda"] or min(section["R_lambda"]) <= 0:
                diags.append(f"{scenario}.R_lambda: need positive distances")
    return diags


# ---------------------------------------------------------------------------
# scenario runners
# ---------------------------------------------------------------------------

def _gain_rows(cfg: dict) -> list[dict]:
    sec = cfg["gain_sweep"]
    pattern = ff.ElementPattern(float(sec["pattern"]["u"]),
                                float(sec["pattern"]["v"]),
                                float(sec["pattern"]["board_factor"]))
    model = ff.EfficiencyModel(**{k: float(v)
                                  for k, v in sec["efficiency"].items()})
    realized = bool(sec["realized"])

    def one_point(args):
        n_x, theta_deg = args
        geom = build_geometry(sec["topology"], sec["L_x"], sec["L_y"],
                              int(n_x), sec["dz_offset"])
        theta = np.deg2rad(theta_deg)
        eff = ff.embedded_efficiency(geom, model) if realized else 1.0
        out = []
        for method in sec["methods"]:
            if method == "physical":
                gain = ff.gain_physical(geom, theta).value * eff
            else:
                exc = steer_excitation(geom, theta, 0.0)
                if method == "closed":
                    gain = ff.gain_closed(geom, exc, pattern, theta).value * eff
                else:
                    gain = ff.gain_quadrature(
                        geom, exc, pattern, theta,
                        check=bool(sec["quadrature_check"])).value * eff
            out.append({
                "topology": sec["topology"], "method": method,
                "N_x": int(n_x), "spacing_lambda": geom.spacing_x,
                "theta_deg": float(theta_deg), "gain_lin": gain,
                "gain_dBi": 10.0 * np.log10(gain), "efficiency": eff,
                "realized": realized,
            })
        return out

    points = [(n_x, th) for n_x in sec["N_x"] for th in sec["theta_deg"]]
    return [row for chunk in _map_ordered(one_point, points, cfg["threads"])
            for row in chunk]


def _nearfield_rows(cfg: dict) -> list[dict]:
    sec = cfg["nearfield_gain"]
    tx = nf.square_array(float(sec["L"]), float(sec["spacing"]))

    def one_point(r_lambda):
        d = nf.gain_loss_decomposition(tx, float(r_lambda))
        gain = d["gain_dyadic_focus"]
        return {
            "R_lambda": float(r_lambda), "mode": "dyadic_focus",
            "source_pol": "x", "field_pol": "x",
            "gain_lin": gain, "gain_dB": 10.0 * np.log10(gain),
            "loss_polarization": d["polarization"],
            "loss_illumination": d["illumination"],
            "loss_beamforming": d["beamforming"],
        }

    return list(_map_ordered(one_point, sec["R_lambda"], cfg["threads"]))


def _capacity_rows(cfg: dict) -> list[dict]:
    scenario = cfg["scenario"]
    sec = cfg[scenario]
    if scenario == "capacity_nearfield":
        raw = cap.nearfield_capacity_sweep(
            [float(r) for r in sec["R_lambda"]], sec["topologies"],
            sec["modes"], float(sec["snr_db"]), L=float(sec["L"]),
            tx_spacing=float(sec["tx_spacing"]))
        return [{
            "scenario": scenario, "topology": r["topology"],
            "policy": f"block_{r['mode']}", "N_x": "",
            "spacing_lambda": "", "R_lambda": r["R_lambda"],
            "snr_dB": r["snr_dB"], "capacity_mean": r["capacity"],
            "capacity_stderr": 0.0, "seed": cfg["seed"],
        } for r in raw]

    include_eff = scenario == "capacity_ergodic"
    spectrum = {
        "full_sphere": ch.FULL_SPHERE,
        "sector": ch.AngularPowerSpectrum(np.deg2rad(float(sec["spread_theta_deg"]))),
        "sector_two_sided": ch.AngularPowerSpectrum(
            np.deg2rad(float(sec["spread_theta_deg"])), two_sided=True),
    }[sec["spectrum"]]
    spread = AngularSpread(np.deg2rad(float(sec["spread_theta_deg"])), np.pi)
    policies = [ch.NormalizationPolicy(_POLICY_NAMES[p]) for p in sec["policies"]]

    def one_topology(topology):
        return cap.fading_sweep(
            topology, [int(n) for n in sec["N_x"]], policies,
            list(sec["gain_methods"]), n_users=int(sec["users"][topology]),
            snr_db=float(sec["snr_db"]),
            n_realizations=int(sec["n_realizations"]), seed=int(cfg["seed"]),
            L_x=float(sec["L_x"]), L_y=float(sec["L_y"]),
            dz_offset=float(sec["dz_offset"]), include_efficiency=include_eff,
            spread=spread, spectrum=spectrum)

    rows = []
    for chunk in _map_ordered(one_topology, sec["topologies"], cfg["threads"]):
        for r in chunk:
            rows.append({
                "scenario": scenario, "topology": r["topology"],
                "policy": (r["policy"] if r["method"] in ("none",)
                           else f"{r['policy']}_{r['method']}"),
                "N_x": r["N_x"], "spacing_lambda": r["spacing_lambda"],
                "R_lambda": "", "snr_dB": r["snr_dB"],
                "capacity_mean": r["capacity_mean"],
                "capacity_stderr": r["capacity_stderr"], "seed": r["seed"],
            })
    return rows


def _map_ordered(fn, items, threads):
    """Apply fn over items, preserving order; threads > 1 uses a pool."""
    items = list(items)
    if int(threads) <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# output assembly
# ---------------------------------------------------------------------------

def _write_csv(path, columns, rows, cfg):
    header = json.dumps(cfg, sort_keys=True, default=str)
    cols = columns.split(",")
    with open(path, "w") as fh:
        fh.write(f"# config: {header}\n")
        fh.write(columns + "\n")
        for row in rows:
            fh.write(",".join(fmt(row[c]) for c in cols) + "\n")


def _write_metadata(out_dir, cfg, files):
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    meta = {
        "resolved_config": cfg,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "outputs": files,
        "norm_target_rtol": ch.NORM_TARGET_RTOL,
        "quadrature_rel_tol": ff.QUAD_REL_TOL,
    }
    path = os.path.join(out_dir, "metadata.json")
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
    return path


def _write_chart(path, rows, x_key, y_key, group_keys, logx=False):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups = {}
    for r in rows:
        key = tuple(str(r[k]) for k in group_keys)
        groups.setdefault(key, []).append((r[x_key], r[y_key]))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for key, pts in sorted(groups.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker="o", ms=3, label="/".join(key))
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(x_key)
    ax.set_ylabel(y_key)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _dump_geometries(cfg, out_dir):
    files = []
    scenario = cfg["scenario"]
    sec = cfg[scenario]
    if scenario == "gain_sweep":
        specs = [(sec["topology"], sec["L_x"], sec["L_y"], n, sec["dz_offset"])
                 for n in sec["N_x"]]
    elif scenario == "nearfield_gain":
        n = int(round(sec["L"] / sec["spacing"])) + 1
        specs = [("planar", sec["L"], sec["L"], n, 0.0)]
    elif scenario == "capacity_nearfield":
        specs = [(t, sec["L"], sec["L"],
                  int(round(sec["L"] / (0.5 if t == "planar" else 0.25))) + 1, 1.0)
                 for t in sec["topologies"]]
    else:
        specs = [(t, sec["L_x"], sec["L_y"], n, sec["dz_offset"])
                 for t in sec["topologies"] for n in sec["N_x"]]
    for kind, lx, ly, n_x, dz in specs:
        geom = build_geometry(kind, lx, ly, int(n_x), dz)
        name = f"geometry_{kind}_Nx{int(n_x)}.txt"
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(geom.dump_table())
        files.append(name)
    return files


def run(cfg: dict, out_dir: str, dump_geometry: bool = False) -> list[str]:
    """Execute the configured scenario; returns the list of files written.

    Partial outputs are removed if the run fails.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    try:
        scenario = cfg["scenario"]
        if scenario == "gain_sweep":
            rows = _gain_rows(cfg)
            csv_path = os.path.join(out_dir, "gain_sweep.csv")
            _write_csv(csv_path, GAIN_CSV_COLUMNS, rows, cfg)
            written.append(csv_path)
            if cfg["charts"]:
                png = os.path.join(out_dir, "gain_sweep.png")
                _write_chart(png, rows, "N_x", "gain_dBi", ("method", "theta_deg"))
                written.append(png)
        elif scenario == "nearfield_gain":
            rows = _nearfield_rows(cfg)
            csv_path = os.path.join(out_dir, "nearfield_gain.csv")
            _write_csv(csv_path, NEARFIELD_CSV_COLUMNS, rows, cfg)
            written.append(csv_path)
            if cfg["charts"]:
                png = os.path.join(out_dir, "nearfield_losses.png")
                loss_rows = []
                for r in rows:
                    for loss in ("polarization", "illumination", "beamforming"):
                        loss_rows.append({"R_lambda": r["R_lambda"],
                                          "loss": r[f"loss_{loss}"],
                                          "kind": loss})
                _write_chart(png, loss_rows, "R_lambda", "loss", ("kind",),
                             logx=True)
                written.append(png)
        else:
            rows = _capacity_rows(cfg)
            csv_path = os.path.join(out_dir, f"{scenario}.csv")
            _write_csv(csv_path, CAPACITY_CSV_COLUMNS, rows, cfg)
            written.append(csv_path)
            if cfg["charts"]:
                png = os.path.join(out_dir, f"{scenario}.png")
                x_key = "R_lambda" if scenario == "capacity_nearfield" else "N_x"
                _write_chart(png, rows, x_key, "capacity_mean",
                             ("topology", "policy"))
                written.append(png)
        if dump_geometry:
            for name in _dump_geometries(cfg, out_dir):
                written.append(os.path.join(out_dir, name))
        written.append(_write_metadata(out_dir, cfg, [os.path.basename(f)
                                                      for f in written]))
        return written
    except Exception:
        for path in written:
            if os.path.exists(path):
                os.remove(path)
        raise


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmimo",
        description="Antenna-array gain and MIMO channel normalization "
                    "experiments")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in (
            ("gain", "far-field gain sweeps over element count and angle"),
            ("nearfield", "near-field gain and loss-factor curves"),
            ("capacity", "quasi-static / ergodic / near-field capacity")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, help="root seed override")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for sweep points")
        p.add_argument("--dump-geometry", action="store_true",
                       help="also write element-position tables")
        p.add_argument("--validate-only", action="store_true",
                       help="check the config and exit")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load_config(args.config) if args.config else {}
        cfg = resolve_config(raw, args.subcommand)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.threads is not None:
        cfg["threads"] = args.threads
    diags = validate(cfg, args.subcommand)
    if diags:
        for d in diags:
            print(f"invalid config: {d}", file=sys.stderr)
        return 3
    if args.validate_only:
        print("config ok")
        return 0
    try:
        files = run(cfg, args.out, dump_geometry=args.dump_geometry)
    except Exception as exc:  # partial outputs already cleaned up
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f"wrote {f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
