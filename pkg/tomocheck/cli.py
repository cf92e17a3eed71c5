"""Command-line entry point: ``python -m tomocheck <command>``.

Stages communicate through files in the output directory:
state.json -> dataset.jsonl -> moments.json / check.json / reconstruction.json,
and ``report`` runs the whole analysis into report.json and report.md.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

from tomocheck import __version__
from tomocheck.artifacts import ReportJSONEncoder, read_json, render_summary, write_joint_csv, write_json
from tomocheck.config import load_config
from tomocheck.errors import ConfigError, TomoCheckError
from tomocheck.homodyne_lab import HomodyneDataset, NoiseModel, acquire, make_phase_schedule
from tomocheck.log import configure_logging
from tomocheck.moment_engine import AnalyticSource, EmpiricalSource, build_moment_table, cross_covariances
from tomocheck.photon_stats import cauchy_schwarz_report, photon_moments
from tomocheck.quantum_state import (SIGMA, SIGMA_PRIME, GridWigner, StateDescriptor, make_state, save_grid,
                                     state_from_dict, state_to_dict, validate_physicality)
from tomocheck.reconstruction import (charfn_from_moments, invert_to_tomogram, invert_to_wigner,
                                      symmetric_moments, wigner_charfn_from_moments)
from tomocheck.tomography import RadonSettings
from tomocheck.uncertainty_check import EXIT_CODES, ERROR, dispersion_matrix, full_report, worst_verdict

logger = logging.getLogger(__name__)


def _radon_settings(config):
    tomography = config.tomography
    return RadonSettings(interpolation_order=tomography.interpolation_order,
                         slice_points=tomography.slice_points, joint_points=tomography.joint_points)


def _load_state(args, config):
    if getattr(args, "state", None):
        path = Path(args.state)
        if path.suffix == ".npz":
            return make_state(StateDescriptor("grid", {"path": str(path)}))
        return state_from_dict(read_json(path, "gaussian-state"))
    return make_state(config.state)


def _load_source(args, config, max_order=None):
    max_order = max(max_order or 0, config.solver.max_degree, 4)
    if getattr(args, "data", None):
        dataset = HomodyneDataset.read_jsonl(args.data)
        source = EmpiricalSource(dataset, n_boot=config.bootstrap.replicates, seed=config.seed,
                                 max_order=max_order, min_records=config.acquisition.min_records)
        info = {"kind": "empirical", "path": str(args.data), "records": len(dataset),
                "descriptor": dataset.metadata.get("descriptor", {"kind": "unknown"})}
        return source, info
    state = _load_state(args, config)
    info = {"kind": "analytic", "descriptor": state.descriptor.to_dict()}
    return AnalyticSource(state, _radon_settings(config)), info


def _out_dir(args, config):
    path = Path(args.out or config.output.directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_state(args, config):
    if args.descriptor:
        try:
            with open(args.descriptor, "r", encoding="utf-8") as handle:
                descriptor = StateDescriptor.from_dict(json.load(handle))
        except (OSError, ValueError) as e:
            raise ConfigError(f"Cannot read state descriptor {args.descriptor}: {e}")
    elif args.kind:
        try:
            params = json.loads(args.params) if args.params else {}
        except ValueError as e:
            raise ConfigError(f"--params is not valid JSON: {e}")
        descriptor = StateDescriptor(args.kind, params)
    else:
        descriptor = StateDescriptor.from_dict(config.state)
    state = make_state(descriptor)
    out = _out_dir(args, config)
    if isinstance(state, GridWigner):
        logger.info(f"Grid state with normalization {state.normalization():.6f}")
        return 0
    physical, min_eig = validate_physicality(state)
    logger.info(f"State {descriptor.kind}: physical={physical}, min eigenvalue {min_eig:.3e}")
    payload = state_to_dict(state)
    payload.pop("schema_version")
    payload.pop("kind")
    write_json(out / "state.json", "gaussian-state", dict(payload, physical=physical, min_eigenvalue=min_eig))
    if args.grid is not None:
        points = args.grid or config.tomography.grid_points(state.n_modes)
        grid = GridWigner.from_gaussian(state, points, config.tomography.width_sigmas)
        save_grid(out / "state_grid.npz", grid)
    return 0 if physical else EXIT_CODES[ERROR]


def cmd_sample(args, config):
    state = _load_state(args, config)
    schedule = args.schedule or list(config.acquisition.schedule)
    shots = args.shots or config.acquisition.shots
    jobs = make_phase_schedule(schedule, shots, config.reconstruction.order)
    noise = NoiseModel(config.acquisition.noise_sigma if args.noise_sigma is None else args.noise_sigma)
    dataset = acquire(state, jobs, config.seed, noise, config.jobs, _radon_settings(config),
                      metadata={"schedule": schedule, "shots": shots})
    out = _out_dir(args, config)
    dataset.write_jsonl(out / "dataset.jsonl")
    return 0


def _moments_payload(source, config):
    table = build_moment_table(source, (1, 2), config.solver.max_degree, phases=config.solver.phases,
                               tol=config.solver.singular_tolerance)
    payload = {
        "ordered_moments": table.to_json_rows(),
        "cross_moments": table.cross_rows(),
        "cross_covariances": {k: v.to_dict() for k, v in cross_covariances(source).as_dict().items()},
    }
    for ordering in (SIGMA, SIGMA_PRIME):
        dispersion = dispersion_matrix(source, ordering)
        payload[f"dispersion_{ordering}"] = {"labels": dispersion.labels, "values": dispersion.values,
                                             "stderr": dispersion.stderr}
    return table, payload


def cmd_moments(args, config):
    source, info = _load_source(args, config)
    _, payload = _moments_payload(source, config)
    write_json(_out_dir(args, config) / "moments.json", "moment-table", dict(payload, source=info))
    return 0


def cmd_check(args, config):
    source, info = _load_source(args, config)
    report = full_report(source, config.check)
    write_json(_out_dir(args, config) / "check.json", "uncertainty-report",
               {"source": info, "config": config.to_dict(), "uncertainty": report.to_dict()})
    logger.info(f"Verdict: {report.verdict}")
    return report.exit_code


def _reconstruction(source, config, out, wigner=False):
    rc = config.reconstruction
    field = charfn_from_moments(source, rc.theta1, rc.theta2, rc.order, kind=rc.series,
                                points=rc.charfn_points, epsilon=rc.truncation_epsilon,
                                decay_floor=rc.decay_floor)
    joint = invert_to_tomogram(field, rc.output_points, imaginary_tolerance=rc.imaginary_tolerance)
    write_joint_csv(out / "tomogram.csv", joint)
    summary = {"order": rc.order, "series": rc.series, "theta1": rc.theta1, "theta2": rc.theta2,
               "window": field.window, "truncation_bound": field.truncation_bound,
               "normalization_drift": joint.drift}
    if wigner:
        moments = symmetric_moments(source, rc.order, config.solver.phases, config.solver.singular_tolerance)
        wfield = wigner_charfn_from_moments(moments, rc.order, rc.wigner_points, kind=rc.series,
                                            epsilon=rc.truncation_epsilon, decay_floor=rc.decay_floor)
        grid = invert_to_wigner(wfield, imaginary_tolerance=rc.imaginary_tolerance)
        save_grid(out / "wigner.npz", grid)
        summary["wigner_window"] = wfield.window
        summary["wigner_truncation_bound"] = wfield.truncation_bound
    return summary


def cmd_reconstruct(args, config):
    source, info = _load_source(args, config, config.reconstruction.order)
    out = _out_dir(args, config)
    summary = _reconstruction(source, config, out, wigner=args.wigner)
    write_json(out / "reconstruction.json", "reconstruction", {"source": info, **summary})
    return 0


def cmd_report(args, config):
    source, info = _load_source(args, config, config.reconstruction.order)
    out = _out_dir(args, config)
    uncertainty = full_report(source, config.check)
    document = {"source": info, "config": config.to_dict(), "uncertainty": uncertainty.to_dict(),
                "photons": None, "photon_cauchy_schwarz": None, "moments": None, "reconstruction": None}
    verdicts = [uncertainty.verdict]
    try:
        table, document["moments"] = _moments_payload(source, config)
        document["photons"] = photon_moments(table).to_dict()
        photon_check = cauchy_schwarz_report(table, config.check.z, config.check.tolerance)
        document["photon_cauchy_schwarz"] = photon_check.to_dict()
        verdicts.append(photon_check.verdict)
    except TomoCheckError as e:
        logger.warning(f"Photon statistics unavailable: {e}")
    if not args.skip_reconstruction:
        try:
            document["reconstruction"] = _reconstruction(source, config, out)
        except TomoCheckError as e:
            logger.warning(f"Reconstruction unavailable: {e}")
    document["verdict"] = worst_verdict(verdicts)
    logger.info(f"Report verdict: {document['verdict']}")
    write_json(out / "report.json", "full-report", document)
    with open(out / "report.md", "w", encoding="utf-8") as handle:
        handle.write(render_summary(json.loads(json.dumps(document, cls=ReportJSONEncoder))))
    return EXIT_CODES[document["verdict"]]


def build_parser():
    cliargs = argparse.ArgumentParser(prog="tomocheck",
                                      description="Two-mode optical tomography and uncertainty-relation checks")
    cliargs.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    cliargs.add_argument("--config", help="YAML or JSON file merged over the packaged defaults")
    cliargs.add_argument("--seed", type=int, help="master seed")
    cliargs.add_argument("--jobs", type=int, help="worker threads for acquisition")
    cliargs.add_argument("--out", help="output directory")
    cliargs.add_argument("--log-level", help="overrides TOMOCHECK_LOG_LEVEL")
    sub = cliargs.add_subparsers(dest="command", required=True)

    state = sub.add_parser("state", help="prepare a state and write state.json")
    state.add_argument("--kind", help="state kind, e.g. two_mode_squeezed")
    state.add_argument("--params", help="JSON object of state parameters")
    state.add_argument("--descriptor", help="JSON file with {kind, params}")
    state.add_argument("--grid", type=int, nargs="?", const=0,
                       help="also write a gridded Wigner function; without a value the points per axis come "
                            "from tomography.one_mode_points or two_mode_points")
    state.set_defaults(func=cmd_state)

    def add_source(parser):
        group = parser.add_mutually_exclusive_group()
        group.add_argument("--data", help="homodyne dataset (JSONL)")
        group.add_argument("--state", help="state.json or grid .npz for exact moments")

    sample = sub.add_parser("sample", help="simulate homodyne acquisition")
    sample.add_argument("--state", help="state.json or grid .npz")
    sample.add_argument("--schedule", nargs="+", help="schedule names")
    sample.add_argument("--shots", type=int, help="records per (mode, phase)")
    sample.add_argument("--noise-sigma", type=float, help="additive detector noise")
    sample.set_defaults(func=cmd_sample)

    moments = sub.add_parser("moments", help="ordered-moment table and dispersion matrices")
    add_source(moments)
    moments.set_defaults(func=cmd_moments)

    check = sub.add_parser("check", help="evaluate the uncertainty relations")
    add_source(check)
    check.set_defaults(func=cmd_check)

    reconstruct = sub.add_parser("reconstruct", help="characteristic-function reconstruction")
    add_source(reconstruct)
    reconstruct.add_argument("--wigner", action="store_true", help="also reconstruct the 4D Wigner function")
    reconstruct.set_defaults(func=cmd_reconstruct)

    report = sub.add_parser("report", help="full analysis with report.json and report.md")
    add_source(report)
    report.add_argument("--skip-reconstruction", action="store_true")
    report.set_defaults(func=cmd_report)
    return cliargs


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    overrides = {key: getattr(args, key) for key in ("seed", "jobs") if getattr(args, key) is not None}
    try:
        config = load_config(args.config, overrides)
        return args.func(args, config)
    except TomoCheckError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_CODES[ERROR]


if __name__ == "__main__":
    sys.exit(main())
