"""Scenario files, run orchestration, metrics, and CSV/JSON emission.

Scenario files are YAML: key/value sections for zones, guidance, control,
plant, comparison gains, initial conditions, and run settings.  Angle-valued
keys are accepted either as `<name>_deg` (convenient for hand-written
files) or `<name>_rad` (emitted by `save_scenario`, lossless round trip).
The bundled `paper_sec4` scenario carries the reference zone set and
parameter table used throughout the test suite; `paper_sec5` is the same
geometry with inertia uncertainty enabled and the benchmark initial
orientation.
"""

import csv
import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import List, Optional

import numpy as np
import yaml

from .controller import ControlGains, tube_level_for_margin
from .dynamics import PlantParams, Trajectory, simulate
from .errors import NoSolution, ParseError, ValidationError
from .guidance import (
    ForbiddenZone,
    GuidanceConfig,
    critical_point_residual,
    find_critical_point,
    propagate_reference,
    validate_config,
    zone_clearances,
)
from .manifold import geodesic_distance, unit_vector
from .observer import DisturbanceObserver
from .ppta import PptaSchedule

_CONTROLLER_KINDS = ("ibgc", "apf", "pd")


@dataclass(eq=False)
class Scenario:
    """One fully-resolved simulation setup."""

    name: str
    guidance: GuidanceConfig
    control: ControlGains
    observer: DisturbanceObserver
    plant: PlantParams
    initial_x: np.ndarray
    t_end: float
    dt: float
    output_decimation: int = 1
    controller_kind: str = "ibgc"
    disturbance_enabled: bool = True
    guidance_only: bool = False
    seed: int = 0
    convergence_threshold: float = math.radians(2.0)
    apf_kp: float = 5.0
    apf_kd: float = 2.0
    pd_kp: float = 0.05
    pd_kd: float = 2.0
    initial_rot: Optional[np.ndarray] = None
    initial_omega: Optional[np.ndarray] = None
    _j_nom_inv: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


@dataclass
class MetricsSummary:
    """Scalar outcome of one run, written alongside the trajectory CSV."""

    name: str
    status: str
    failure_time: Optional[float]
    tube_breached: bool
    convergence_time: Optional[float]
    final_error: float
    min_zone_clearance: List[float]
    max_torque: float
    max_xi: float
    max_d_tilde_after_settle: float


# ---------------------------------------------------------------------------
# Parsing


def _require(mapping, key, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ParseError(f"missing field '{where}.{key}'" if where else f"missing field '{key}'")
    return mapping[key]


def _angle(mapping, name, where, default=None):
    """Angle field in radians; accepts <name>_deg or <name>_rad."""
    has_deg = isinstance(mapping, dict) and f"{name}_deg" in mapping
    has_rad = isinstance(mapping, dict) and f"{name}_rad" in mapping
    if has_deg and has_rad:
        raise ParseError(f"field '{where}.{name}' given both in degrees and radians")
    if has_deg:
        return math.radians(float(mapping[f"{name}_deg"]))
    if has_rad:
        return float(mapping[f"{name}_rad"])
    if default is not None:
        return default
    raise ParseError(f"missing field '{where}.{name}_deg' (or '{where}.{name}_rad')")


def _vec3(value, where):
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"field '{where}' is not a numeric 3-vector") from None
    if v.shape != (3,):
        raise ParseError(f"field '{where}' must have exactly 3 components")
    return v


def parse_scenario(doc: dict, name: str = "scenario") -> Scenario:
    """Build a Scenario from a parsed YAML document (no validation yet)."""
    if not isinstance(doc, dict):
        raise ParseError("scenario document must be a mapping")
    name = str(doc.get("name", name))
    goal = unit_vector(_vec3(_require(doc, "goal", ""), "goal"))
    boresight_body = unit_vector(
        _vec3(doc.get("boresight_body", [0.0, 0.0, 1.0]), "boresight_body")
    )

    zones_doc = _require(doc, "zones", "")
    virtual_half = _angle(zones_doc, "virtual_half_angle", "zones")
    zones = [ForbiddenZone(axis=-goal, half_angle=virtual_half, is_virtual=True)]
    for i, zdoc in enumerate(_require(zones_doc, "real", "zones")):
        axis = _vec3(_require(zdoc, "axis", f"zones.real[{i}]"), f"zones.real[{i}].axis")
        zones.append(
            ForbiddenZone(
                axis=axis,
                half_angle=_angle(zdoc, "half_angle", f"zones.real[{i}]"),
            )
        )

    gdoc = _require(doc, "guidance", "")
    margin = _angle(gdoc, "margin", "guidance")
    guidance = GuidanceConfig(
        zones=zones,
        goal=goal,
        margin=margin,
        influence=_angle(gdoc, "influence", "guidance"),
        clearance=_angle(gdoc, "clearance", "guidance"),
        attract_gain=float(_require(gdoc, "attract_gain", "guidance")),
        repulse_gain=float(_require(gdoc, "repulse_gain", "guidance")),
        schedule=PptaSchedule(
            horizon=float(_require(gdoc, "horizon", "guidance")),
            saturation=float(_require(gdoc, "saturation", "guidance")),
        ),
    )

    cdoc = _require(doc, "control", "")
    control_sched = PptaSchedule(
        horizon=float(_require(cdoc, "horizon", "control")),
        saturation=float(_require(cdoc, "saturation", "control")),
    )
    tube_level = cdoc.get("tube_level")
    control = ControlGains(
        att_gain=float(_require(cdoc, "att_gain", "control")),
        rate_gain=float(_require(cdoc, "rate_gain", "control")),
        tube_level=float(tube_level) if tube_level is not None else tube_level_for_margin(margin),
        boresight_body=boresight_body,
        schedule=control_sched,
    )
    observer = DisturbanceObserver(
        gain=float(_require(cdoc, "obs_gain", "control")), schedule=control_sched
    )

    pdoc = _require(doc, "plant", "")
    inertia = np.asarray(_require(pdoc, "inertia", "plant"), dtype=float)
    if inertia.shape != (3, 3):
        raise ParseError("field 'plant.inertia' must be a 3x3 matrix")
    torque_limit = pdoc.get("torque_limit")
    plant = PlantParams(
        inertia=inertia,
        delta_j_enabled=bool(pdoc.get("delta_j", False)),
        torque_limit=float(torque_limit) if torque_limit is not None else None,
    )

    comparison = doc.get("comparison", {})
    apf = comparison.get("apf", {}) if isinstance(comparison, dict) else {}
    pd = comparison.get("pd", {}) if isinstance(comparison, dict) else {}

    idoc = _require(doc, "initial", "")
    initial_x = _vec3(_require(idoc, "x0", "initial"), "initial.x0")
    initial_rot = np.asarray(idoc["rot"], dtype=float) if "rot" in idoc else None
    initial_omega = _vec3(idoc["omega"], "initial.omega") if "omega" in idoc else None

    rdoc = _require(doc, "run", "")
    return Scenario(
        name=name,
        guidance=guidance,
        control=control,
        observer=observer,
        plant=plant,
        initial_x=initial_x,
        initial_rot=initial_rot,
        initial_omega=initial_omega,
        t_end=float(_require(rdoc, "t_end", "run")),
        dt=float(_require(rdoc, "dt", "run")),
        output_decimation=int(rdoc.get("output_decimation", 1)),
        controller_kind=str(rdoc.get("controller", "ibgc")),
        disturbance_enabled=bool(rdoc.get("disturbance", True)),
        guidance_only=bool(rdoc.get("guidance_only", False)),
        seed=int(rdoc.get("seed", 0)),
        convergence_threshold=_angle(rdoc, "convergence_threshold", "run", default=math.radians(2.0)),
        apf_kp=float(apf.get("kp", 5.0)),
        apf_kd=float(apf.get("kd", 2.0)),
        pd_kp=float(pd.get("kp", 0.05)),
        pd_kd=float(pd.get("kd", 2.0)),
    )


def validate_scenario(sc: Scenario) -> None:
    """Raise ValidationError listing every violated scenario-level clause."""
    failures = list(validate_config(sc.guidance).failures)
    if sc.t_end <= 0.0:
        failures.append(f"t_end must be positive, got {sc.t_end}")
    if sc.dt <= 0.0:
        failures.append(f"dt must be positive, got {sc.dt}")
    if sc.output_decimation < 1:
        failures.append("output_decimation must be >= 1")
    if sc.controller_kind not in _CONTROLLER_KINDS:
        failures.append(
            f"controller must be one of {', '.join(_CONTROLLER_KINDS)}, got '{sc.controller_kind}'"
        )
    if sc.control.schedule.saturation > sc.guidance.schedule.saturation:
        failures.append(
            "control saturation time must not exceed guidance saturation time "
            f"({sc.control.schedule.saturation} > {sc.guidance.schedule.saturation})"
        )
    if sc.control.tube_level > tube_level_for_margin(sc.guidance.margin) + 1e-12:
        failures.append(
            "tube level exceeds 1 - cos(margin); the safe tube must fit inside "
            "the guidance safety margin"
        )
    if failures:
        raise ValidationError(failures)


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ParseError(f"invalid YAML in {path}: {exc}") from None
    sc = parse_scenario(doc, name=os.path.splitext(os.path.basename(str(path)))[0])
    validate_scenario(sc)
    return sc


def scenario_to_dict(sc: Scenario) -> dict:
    """Plain-python document of a Scenario, as written by save_scenario."""
    doc = {
        "name": sc.name,
        "goal": [float(v) for v in sc.guidance.goal],
        "boresight_body": [float(v) for v in sc.control.boresight_body],
        "zones": {
            "virtual_half_angle_rad": float(sc.guidance.zones[0].half_angle),
            "real": [
                {
                    "axis": [float(v) for v in z.axis],
                    "half_angle_rad": float(z.half_angle),
                }
                for z in sc.guidance.zones[1:]
            ],
        },
        "guidance": {
            "margin_rad": float(sc.guidance.margin),
            "influence_rad": float(sc.guidance.influence),
            "clearance_rad": float(sc.guidance.clearance),
            "attract_gain": float(sc.guidance.attract_gain),
            "repulse_gain": float(sc.guidance.repulse_gain),
            "horizon": float(sc.guidance.schedule.horizon),
            "saturation": float(sc.guidance.schedule.saturation),
        },
        "control": {
            "obs_gain": float(sc.observer.gain),
            "att_gain": float(sc.control.att_gain),
            "rate_gain": float(sc.control.rate_gain),
            "tube_level": float(sc.control.tube_level),
            "horizon": float(sc.control.schedule.horizon),
            "saturation": float(sc.control.schedule.saturation),
        },
        "plant": {
            "inertia": [[float(v) for v in row] for row in sc.plant.inertia],
            "delta_j": bool(sc.plant.delta_j_enabled),
            "torque_limit": (
                float(sc.plant.torque_limit) if sc.plant.torque_limit is not None else None
            ),
        },
        "comparison": {
            "apf": {"kp": float(sc.apf_kp), "kd": float(sc.apf_kd)},
            "pd": {"kp": float(sc.pd_kp), "kd": float(sc.pd_kd)},
        },
        "initial": {"x0": [float(v) for v in sc.initial_x]},
        "run": {
            "t_end": float(sc.t_end),
            "dt": float(sc.dt),
            "output_decimation": int(sc.output_decimation),
            "controller": sc.controller_kind,
            "disturbance": bool(sc.disturbance_enabled),
            "guidance_only": bool(sc.guidance_only),
            "seed": int(sc.seed),
            "convergence_threshold_rad": float(sc.convergence_threshold),
        },
    }
    if sc.initial_rot is not None:
        doc["initial"]["rot"] = [[float(v) for v in row] for row in sc.initial_rot]
    if sc.initial_omega is not None:
        doc["initial"]["omega"] = [float(v) for v in sc.initial_omega]
    return doc


def save_scenario(sc: Scenario, path) -> None:
    """Write a Scenario back to YAML (angles in radians, full precision)."""
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(scenario_to_dict(sc), fh, sort_keys=False)


def with_initial(sc: Scenario, x0) -> Scenario:
    """Copy of a scenario started from a different boresight direction."""
    return dataclasses.replace(
        sc, initial_x=np.asarray(x0, dtype=float), initial_rot=None, initial_omega=None
    )


# ---------------------------------------------------------------------------
# Bundled scenarios


def bundled_scenario_path(name: str):
    """Filesystem path of a scenario shipped with the package."""
    p = resources.files(__package__) / "scenarios" / f"{name}.yaml"
    if not p.is_file():
        raise FileNotFoundError(f"no bundled scenario named '{name}'")
    return p


def load_bundled(name: str) -> Scenario:
    return load_scenario(bundled_scenario_path(name))


def load_initials(path) -> List[np.ndarray]:
    """Initial-orientation list file: mapping with key 'initials'."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    entries = _require(doc, "initials", "")
    return [unit_vector(_vec3(v, f"initials[{i}]")) for i, v in enumerate(entries)]


def bundled_initials(name: str = "fig5_initials") -> List[np.ndarray]:
    return load_initials(bundled_scenario_path(name))


# ---------------------------------------------------------------------------
# Metrics and emission


def _guidance_only_trajectory(sc: Scenario) -> Trajectory:
    """Reference-flow run packaged with the closed-loop trajectory schema.

    The true boresight columns mirror the reference; controller and observer
    columns are zero.
    """
    samples = propagate_reference(
        sc.initial_x, sc.guidance, sc.dt, sc.t_end, law="ppt", record_every=sc.output_decimation
    )
    n = len(samples)
    x = np.array([s.x for s in samples])
    zeros3 = np.zeros((n, 3))
    return Trajectory(
        t=np.array([s.t for s in samples]),
        rot=np.broadcast_to(np.eye(3), (n, 3, 3)).copy(),
        omega=zeros3.copy(),
        x=x,
        x_ref=x.copy(),
        p=zeros3.copy(),
        omega_ref=np.array([s.omega for s in samples]),
        sigma_e=np.zeros(n),
        xi=np.zeros(n),
        omega_err=zeros3.copy(),
        backstep_err=zeros3.copy(),
        u=zeros3.copy(),
        d=zeros3.copy(),
        d_hat=zeros3.copy(),
        coriolis_comp=zeros3.copy(),
        clearances=np.array([zone_clearances(xi_, sc.guidance) for xi_ in x]),
    )


def compute_metrics(traj: Trajectory, sc: Scenario) -> MetricsSummary:
    """Scalar summary of a (possibly partial) trajectory."""
    nz = len(sc.guidance.zones)
    if traj.t.size == 0:
        return MetricsSummary(
            name=sc.name,
            status=traj.status,
            failure_time=traj.failure_time,
            tube_breached=traj.status == "tube_breach",
            convergence_time=None,
            final_error=float("nan"),
            min_zone_clearance=[float("nan")] * nz,
            max_torque=float("nan"),
            max_xi=float("nan"),
            max_d_tilde_after_settle=float("nan"),
        )
    angles = np.arccos(np.clip(traj.x @ sc.guidance.goal, -1.0, 1.0))
    below = np.nonzero(angles <= sc.convergence_threshold)[0]
    convergence_time = float(traj.t[below[0]]) if below.size else None
    d_tilde = np.linalg.norm(traj.d - traj.d_hat, axis=1)
    settle = sc.control.schedule.saturation
    after = traj.t >= settle
    max_d_tilde = float(np.max(d_tilde[after])) if after.any() else float("nan")
    max_xi = float(np.max(traj.xi))
    return MetricsSummary(
        name=sc.name,
        status=traj.status,
        failure_time=traj.failure_time,
        tube_breached=traj.status == "tube_breach" or max_xi >= 1.0,
        convergence_time=convergence_time,
        final_error=float(1.0 - traj.x[-1] @ sc.guidance.goal),
        min_zone_clearance=[float(v) for v in traj.clearances.min(axis=0)],
        max_torque=float(np.max(np.abs(traj.u))),
        max_xi=max_xi,
        max_d_tilde_after_settle=max_d_tilde,
    )


def csv_header(sc: Scenario) -> List[str]:
    head = ["t"]
    head += [f"x{i}" for i in range(3)]
    head += [f"xr{i}" for i in range(3)]
    head += ["sigma_e", "xi"]
    head += [f"omega{i}" for i in range(3)]
    head += [f"omega_e{i}" for i in range(3)]
    head += [f"u{i}" for i in range(3)]
    head += [f"d{i}" for i in range(3)]
    head += [f"d_hat{i}" for i in range(3)]
    head += ["d_tilde_norm"]
    head += [f"clearance_P{i}" for i in range(len(sc.guidance.zones))]
    return head


def write_trajectory_csv(traj: Trajectory, sc: Scenario, path) -> None:
    """Emit the per-sample trajectory table (full double precision)."""
    d_tilde = np.linalg.norm(traj.d - traj.d_hat, axis=1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(sc))
        for k in range(traj.t.size):
            row = [traj.t[k]]
            row += list(traj.x[k])
            row += list(traj.x_ref[k])
            row += [traj.sigma_e[k], traj.xi[k]]
            row += list(traj.omega[k])
            row += list(traj.omega_err[k])
            row += list(traj.u[k])
            row += list(traj.d[k])
            row += list(traj.d_hat[k])
            row += [d_tilde[k]]
            row += list(traj.clearances[k])
            writer.writerow([repr(float(v)) for v in row])


def metrics_to_dict(m: MetricsSummary) -> dict:
    return dataclasses.asdict(m)


def run(sc: Scenario, output_dir=None) -> MetricsSummary:
    """Execute one scenario; optionally write trajectory.csv and metrics.json."""
    validate_scenario(sc)
    if sc.guidance_only:
        traj = _guidance_only_trajectory(sc)
    else:
        traj = simulate(sc, raise_on_fatal=False)
    metrics = compute_metrics(traj, sc)
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        write_trajectory_csv(traj, sc, os.path.join(output_dir, "trajectory.csv"))
        with open(os.path.join(output_dir, "metrics.json"), "w", encoding="utf-8") as fh:
            json.dump(metrics_to_dict(metrics), fh, indent=2)
            fh.write("\n")
    return metrics


def sample_free_initials(sc: Scenario, count: int, seed: Optional[int] = None) -> List[np.ndarray]:
    """Uniform directions on the sphere, rejecting any inside a padded cone."""
    rng = np.random.default_rng(sc.seed if seed is None else seed)
    cfg = sc.guidance
    out: List[np.ndarray] = []
    while len(out) < count:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n < 1e-12:
            continue
        v = v / n
        if np.all(zone_clearances(v, cfg) > cfg.margin):
            out.append(v)
    return out


def _batch_entry(args):
    sc, index, x0, output_dir = args
    sub_dir = os.path.join(output_dir, f"run_{index:03d}") if output_dir is not None else None
    return index, run(with_initial(sc, x0), sub_dir)


def batch(
    sc: Scenario,
    initials: Optional[List] = None,
    count: Optional[int] = None,
    seed: Optional[int] = None,
    output_dir=None,
    workers: int = 1,
) -> List[MetricsSummary]:
    """Independent runs of one scenario from many initial orientations.

    Either an explicit initial list or a (count, seed) random sample must be
    given.  Per-run failures are recorded in their metrics and do not stop
    the batch.  Results are ordered by initial index regardless of execution
    order.
    """
    if initials is None:
        if count is None:
            raise ValueError("either initials or count must be given")
        initials = sample_free_initials(sc, count, seed)
    initials = [unit_vector(v) for v in initials]
    jobs = [(sc, i, x0, output_dir) for i, x0 in enumerate(initials)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_batch_entry, jobs))
    else:
        results = [_batch_entry(job) for job in jobs]
    results.sort(key=lambda pair: pair[0])
    return [m for _, m in results]


def critical_points_report(sc: Scenario) -> List[dict]:
    """Critical-point solution, residual, and geometry for every real zone."""
    report = []
    cfg = sc.guidance
    for i in cfg.real_zone_indices:
        entry = {"zone": i}
        try:
            c = find_critical_point(i, cfg)
            entry["point"] = [float(v) for v in c]
            entry["residual"] = critical_point_residual(c, i, cfg)
            entry["dist_to_goal"] = geodesic_distance(c, cfg.goal)
            entry["offset_from_axis"] = geodesic_distance(c, cfg.zones[i].axis)
        except NoSolution as exc:
            entry["error"] = str(exc)
        report.append(entry)
    return report
