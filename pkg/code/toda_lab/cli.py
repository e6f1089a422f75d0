"""
Batch front door: parse a run configuration, run one pipeline command and
write its result as JSON or CSV.

    python -m toda_lab spectrum --N 2 --Lambda 0.3 --levels 2
    python -m toda_lab rh-map --sigma "0.3j,-0.3j" --Lambda 0.2
    python -m toda_lab verify --output verify.json
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .config import COMMANDS, FORMATS, load_config, output_path
from .errors import EXIT_NUMERICAL, EXIT_OK, ConfigError, TodaLabError, as_lab_error, plain_value
from .gutzwiller import SpectralData, hill_zeros
from .logs import get_logger
from .monodromy_algebra import (
    MonodromyData,
    characteristic_polynomial,
    check_sigma_collisions,
    connection_E,
    expected_characteristic_polynomial,
    is_quantized_E,
    monodromy_M0,
    msf_matrix,
    stokes_matrix,
    vandermonde_V,
)
from .nlie import NlieParams, log_zeta, solve_nlie, tau_from_delta, u_energy
from .oper import rh_round_trip
from .quantize import QuantizationProblem, modes_for_level, oracle_spectrum_n2, quantize
from .verify import run_verify
from .yangyang import grad_delta_check, lambda_derivative_check, sigma_gradient_check, yang_yang

cli_logger = get_logger("cli")

PROGRAM = "toda-lab"
ORACLE_TOL = 1e-6
ROUND_TRIP_TOL = 1e-6
QUANTIZED_E_TOL = 1e-5
GRADIENT_TOL = 1e-6


##############################
# Shared Input Handling
##############################

def _nlie_params(cfg, delta):
    return NlieParams(N=cfg.N, hbar=cfg.hbar, Lambda=cfg.Lambda, delta=tuple(delta), M=cfg.grid_M, h=cfg.grid_h)


def _delta_input(cfg):
    """delta from --delta, or -i hbar sigma from --sigma."""
    if cfg.delta is not None:
        return np.asarray(cfg.delta, dtype=complex)
    if cfg.sigma is not None:
        return -1j * cfg.hbar * np.asarray(cfg.sigma, dtype=complex)
    raise ConfigError(f"{cfg.command} needs --delta or --sigma")


def _sigma_input(cfg):
    if cfg.sigma is not None:
        return np.asarray(cfg.sigma, dtype=complex)
    if cfg.delta is not None:
        return 1j * np.asarray(cfg.delta, dtype=complex) / cfg.hbar
    raise ConfigError(f"{cfg.command} needs --sigma or --delta")


def _nlie_diagnostics(sol):
    return {"iterations": sol.iterations, "residual": sol.residual, "damping": sol.damping,
            "M": sol.grid.M, "h": sol.grid.h}


##############################
# Commands
##############################

def _oracle_row(rec):
    level = abs(rec.modes[0] - rec.modes[1]) - 1
    oracle = oracle_spectrum_n2(rec.hbar, rec.Lambda, level)
    pipeline = -rec.E2.real
    deviation = abs(pipeline - oracle) / abs(oracle)
    return {
        "level": level,
        "oracle_minus_E2": oracle,
        "pipeline_minus_E2": pipeline,
        "relative_deviation": deviation,
        "tolerance": ORACLE_TOL,
        "passed": deviation < ORACLE_TOL,
    }


def cmd_spectrum(cfg):
    if cfg.modes is not None:
        mode_sets = [cfg.modes]
    else:
        mode_sets = [modes_for_level(cfg.N, level) for level in range(cfg.levels)]
    rows = []
    for modes in mode_sets:
        qp = QuantizationProblem(
            N=cfg.N, hbar=cfg.hbar, Lambda=cfg.Lambda, modes=modes,
            seed=cfg.delta if cfg.modes is not None else None,
            tol=cfg.tol, max_iter=cfg.max_iter, grid_M=cfg.grid_M, grid_h=cfg.grid_h,
        )
        rec = quantize(qp)
        if cfg.N == 2 and rec.modes[0] != rec.modes[1]:
            rec.oracle = _oracle_row(rec)
        row = rec.as_dict()
        row["tolerance"] = cfg.tol
        rows.append(row)
    cli_logger.info(f"spectrum N={cfg.N} Lambda={cfg.Lambda}: {len(rows)} level(s)")
    return {"results": rows, "diagnostics": {"levels": len(rows)}}


def _rh_from_tau(cfg):
    s = SpectralData(N=cfg.N, tau=cfg.tau, Lambda=cfg.Lambda, hbar=cfg.hbar)
    zeros = hill_zeros(s)
    sigma = 1j * np.asarray(zeros.delta) / cfg.hbar
    report = rh_round_trip(s, sigma)
    results = {
        "direction": "tau-to-sigma",
        "tau": list(s.tau),
        "charges": list(s.charges),
        "sigma": sigma.tolist(),
        "delta": list(zeros.delta),
        "monodromy": report,
        "tolerance": ROUND_TRIP_TOL,
        "passed": report["mismatch"] < ROUND_TRIP_TOL,
    }
    return {"results": results, "diagnostics": {"source": zeros.source}}


def cmd_rh_map(cfg):
    """sigma -> delta = -i hbar sigma -> NLIE -> E_2..E_N, certified by the ODE monodromy."""
    if cfg.tau is not None and cfg.sigma is None and cfg.delta is None:
        return _rh_from_tau(cfg)
    sigma = _sigma_input(cfg)
    check_sigma_collisions(MonodromyData(N=cfg.N, sigma=tuple(sigma - np.mean(sigma))))
    sol = solve_nlie(_nlie_params(cfg, -1j * cfg.hbar * sigma))
    s = tau_from_delta(sol)
    report = rh_round_trip(s, sigma)
    eta = log_zeta(sol) / (2j * math.pi)
    results = {
        "direction": "sigma-to-charges",
        "sigma": sigma.tolist(),
        "charges": list(s.charges),
        "tau": list(s.tau),
        "eta": eta.tolist(),
        "monodromy": report,
        "tolerance": ROUND_TRIP_TOL,
        "passed": report["mismatch"] < ROUND_TRIP_TOL,
    }
    cli_logger.info(f"rh-map N={cfg.N} Lambda={cfg.Lambda}: eigenvalue mismatch {report['mismatch']:.3e}")
    return {"results": results, "diagnostics": {"nlie": _nlie_diagnostics(sol)}}


def cmd_monodromy(cfg):
    sigma = _sigma_input(cfg)
    d = MonodromyData(N=cfg.N, sigma=tuple(sigma), flip_sign=cfg.flip_stokes_sign)
    M0 = monodromy_M0(d)
    computed = characteristic_polynomial(M0)
    expected = np.poly(d.Sigma)
    results = {
        "sigma": list(d.sigma),
        "Sigma": d.Sigma.tolist(),
        "stokes_constants": d.s.tolist(),
        "stokes_matrices": [stokes_matrix(k, d).tolist() for k in range(2 * cfg.N)],
        "M0": M0.tolist(),
        "char_poly": {
            "computed": computed.tolist(),
            "from_stokes": expected_characteristic_polynomial(d).tolist(),
            "from_Sigma": expected.tolist(),
            "deviation": float(np.max(np.abs(computed - expected))),
            "tolerance": 1e-12,
        },
        "det_M0": complex(np.linalg.det(M0)),
        "vandermonde": vandermonde_V(d).tolist(),
        "msf": msf_matrix(d).tolist(),
    }
    diagnostics = {"flip_stokes_sign": cfg.flip_stokes_sign}
    sol = solve_nlie(_nlie_params(cfg, -1j * cfg.hbar * sigma))
    eta = log_zeta(sol) / (2j * math.pi)
    E = connection_E(MonodromyData(N=cfg.N, sigma=tuple(sigma), eta=tuple(eta)))
    quantized, score = is_quantized_E(E, QUANTIZED_E_TOL)
    results["connection"] = {
        "eta": eta.tolist(),
        "E": E.tolist(),
        "score": score,
        "tolerance": QUANTIZED_E_TOL,
        "quantized": quantized,
    }
    diagnostics["nlie"] = _nlie_diagnostics(sol)
    cli_logger.info(f"monodromy N={cfg.N}: char-poly deviation {results['char_poly']['deviation']:.3e}, E score {score:.3e}")
    return {"results": results, "diagnostics": diagnostics}


def cmd_yangyang(cfg):
    delta = _delta_input(cfg)
    p = _nlie_params(cfg, delta)
    sol = solve_nlie(p)
    value = yang_yang(sol)
    grad = grad_delta_check(p, sol=sol)
    results = {
        "delta": delta.tolist(),
        "y_pert": value.y_pert,
        "y_inst": value.y_inst,
        "Y": value.total,
        "gradient": {**grad, "tolerance": GRADIENT_TOL},
    }
    if abs(np.sum(delta)) < 1e-12:
        results["u"] = u_energy(sol)
        results["lambda_derivative"] = {**lambda_derivative_check(p, sol=sol), "tolerance": GRADIENT_TOL}
        sigma = 1j * delta / cfg.hbar
        results["generating_function"] = {
            **sigma_gradient_check(sigma, cfg.Lambda, cfg.hbar, M=p.M, h=p.h),
            "S": value.total,
            "tolerance": GRADIENT_TOL,
        }
    else:
        cli_logger.warning(f"yangyang: sum(delta)={np.sum(delta)} != 0, Lambda-derivative and S checks skipped")
    return {"results": results, "diagnostics": {"nlie": _nlie_diagnostics(sol)}}


def cmd_verify(cfg):
    report = run_verify(grid_M=cfg.grid_M, grid_h=cfg.grid_h, flip_stokes_sign=cfg.flip_stokes_sign)
    return {"results": report["checks"], "diagnostics": report["summary"]}


COMMAND_TABLE = {
    "spectrum": cmd_spectrum,
    "rh-map": cmd_rh_map,
    "monodromy": cmd_monodromy,
    "yangyang": cmd_yangyang,
    "verify": cmd_verify,
}


def run_command(cfg):
    """Run one command and wrap it in the {meta, inputs, results, diagnostics} document."""
    payload = COMMAND_TABLE[cfg.command](cfg)
    inputs = cfg.as_dict()
    inputs.pop("output")
    inputs.pop("format")
    return {
        "meta": {"program": PROGRAM, "version": __version__, "command": cfg.command},
        "inputs": plain_value(inputs),
        "results": plain_value(payload["results"]),
        "diagnostics": plain_value(payload["diagnostics"]),
    }


def exit_code_for(document):
    if document["meta"]["command"] == "verify" and document["diagnostics"]["failed"]:
        return EXIT_NUMERICAL
    return EXIT_OK


##############################
# Writers
##############################

def render_json(document):
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _flatten(value, prefix, out):
    if isinstance(value, dict) and set(value) == {"re", "im"}:
        out[f"{prefix}.re"] = value["re"]
        out[f"{prefix}.im"] = value["im"]
    elif isinstance(value, dict):
        for key in sorted(value):
            _flatten(value[key], f"{prefix}.{key}" if prefix else key, out)
    elif isinstance(value, list):
        for i, item in enumerate(value):
            _flatten(item, f"{prefix}.{i}", out)
    else:
        out[prefix] = value
    return out


def render_csv(document):
    results = document["results"]
    records = results if isinstance(results, list) else [results]
    rows = [_flatten(record, "", {}) for record in records]
    header = []
    for row in rows:
        header.extend(key for key in row if key not in header)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def write_output(cfg, document):
    text = render_json(document) if cfg.format == "json" else render_csv(document)
    path = output_path(cfg)
    if path is None:
        sys.stdout.write(text)
        return None
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    cli_logger.info(f"{cfg.command}: wrote {cfg.format} to {path}")
    return path


##############################
# Argument Parsing
##############################

def _common_flags():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--N", type=int)
    common.add_argument("--hbar", type=float)
    common.add_argument("--Lambda", type=float)
    common.add_argument("--delta", help="comma-separated complex values, e.g. '0.3,-0.3'")
    common.add_argument("--sigma", help="comma-separated complex values, e.g. '0.3j,-0.3j'")
    common.add_argument("--tau", help="comma-separated complex roots of t")
    common.add_argument("--modes", help="comma-separated distinct integers")
    common.add_argument("--levels", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iter", type=int)
    common.add_argument("--grid-M", type=float)
    common.add_argument("--grid-h", type=float)
    common.add_argument("--output")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--flip-stokes-sign", action="store_true", default=None)
    return common


def build_parser():
    parser = argparse.ArgumentParser(prog=PROGRAM, description="Quantum Toda chain numerical lab")
    parser.add_argument("--version", action="version", version=f"{PROGRAM} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()
    helps = {
        "spectrum": "quantize levels and tabulate E_2..E_N",
        "rh-map": "monodromy exponents sigma to oper charges, with the ODE check",
        "monodromy": "Stokes, monodromy and connection matrices",
        "yangyang": "Yang-Yang function and its derivative identities",
        "verify": "run the invariant battery",
        "tui": "interactive curses menu",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _overrides(args):
    skip = {"command", "config"}
    return {k: v for k, v in vars(args).items() if k not in skip and v is not None}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "tui":
        from .tui import run_tui

        return run_tui()
    try:
        cfg = load_config(args.command, args.config, _overrides(args))
        document = run_command(cfg)
        write_output(cfg, document)
    except (TodaLabError, ValueError) as error:
        e = as_lab_error(error, module="cli")
        cli_logger.error(f"{args.command} failed in {e.module}: {type(e).__name__}: {e}")
        sys.stderr.write(render_json(plain_value(e.report())))
        return e.exit_code
    code = exit_code_for(document)
    cli_logger.info(f"{args.command} finished with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
