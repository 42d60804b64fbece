#!/usr/bin/env python3
"""
Harmonic dynamics toolkit: batch command line.

Composes, iterates and linearizes complex harmonic maps f = h + conj(g) and
builds composition operators on the truncated HH^2 space. Artifacts (JSON,
CSV, PPM) go to stdout or --output; logs go to stderr.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional, Tuple, Union

import numpy as np

from config import Config, RunConfig
from dynamics import (
    OrbitStatus,
    basin_render,
    classify_mobius_harmonic,
    induced_fixed_points,
    orbit_crossed,
    orbit_direct,
)
from errors import HarmonicError
from expression import parse_analytic, parse_complex, parse_harmonic
from hardy import (
    BlockOperator,
    adjoint_kernel_image,
    commutator_norm,
    general_comp_op,
    general_norm_bound,
    is_simple_composition,
    kernel_mapping_misfit,
    multiplicativity_residual,
    norm_bound_simple,
    op_norm,
    rank_one_perturbation,
    spectral_norm,
)
from harmonic import CompositionLaw, compose, compose_blend
from linearization import harmonic_boettcher, harmonic_koenigs, linearize
from selftest import format_table, run_selftest
from serialization import (
    basin_ppm_bytes,
    dumps,
    encode_complex,
    fixed_points_to_json,
    linearization_to_json,
    operator_from_json,
    operator_to_csv,
    operator_to_json,
    orbit_to_csv,
    serialize_map,
    taxonomy_to_json,
    vector_to_json,
)

logger = logging.getLogger(__name__)

Artifact = Union[str, bytes]

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: str = "INFO", log_file: Optional[str] = None) -> None:
    """Configure root logging: stderr always, a log file when requested."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


# ========== ARGUMENTS ==========

def build_parser() -> argparse.ArgumentParser:
    """Global options first, then one subcommand per artifact."""
    parser = argparse.ArgumentParser(
        prog="harmonic",
        description="Composition calculus, dynamics and HH^2 operators for complex harmonic maps",
    )
    parser.add_argument("--trunc", type=int, help="truncation order N (default from HARMONIC_TRUNC)")
    parser.add_argument("--tol", type=float, help="convergence tolerance")
    parser.add_argument("--n-max", type=int, dest="n_max", help="iteration cap")
    parser.add_argument("--escape-radius", type=float, dest="escape_radius", help="escape threshold")
    parser.add_argument("--seed", type=int, help="seed of randomized checks")
    parser.add_argument("--config", help="KEY=VALUE file with HARMONIC_* settings")
    parser.add_argument("--output", help="write the artifact here instead of stdout")
    parser.add_argument("--log-level", dest="log_level", default=None, help="DEBUG, INFO, WARNING, ...")
    parser.add_argument("--log-file", dest="log_file", default=None, help="also log to this file")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compose", help="compose two maps (JSON map)")
    p.add_argument("--law", choices=["direct", "crossed", "blend"], default="direct")
    for name, default in (("alpha", "1"), ("beta", "1"), ("gamma", "0"), ("delta", "0")):
        p.add_argument(f"--{name}", default=default, help=f"blend coefficient {name} (default {default})")
    p.add_argument("f1")
    p.add_argument("f2")

    p = sub.add_parser("iterate", help="orbit of z0 (CSV n,re,im)")
    p.add_argument("law", choices=["direct", "crossed"])
    p.add_argument("f")
    p.add_argument("z0")
    p.add_argument("n", type=int, nargs="?", help="number of steps (default --n-max)")

    p = sub.add_parser("fixed-points", help="induced h-fixed points (JSON)")
    p.add_argument("f")

    p = sub.add_parser("classify-mobius", help="convergence taxonomy of a Möbius harmonic map (JSON)")
    p.add_argument("f")

    for name, text in (
        ("koenigs", "Koenigs conjugator (JSON)"),
        ("boettcher", "Boettcher conjugator on h, Koenigs on g (JSON)"),
        ("linearize", "conjugator chosen from the multipliers at 0 (JSON)"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("f")
        if name != "koenigs":
            p.add_argument("--root-index", type=int, default=0, dest="root_index",
                           help="branch of the (p-1)-th root of a_p")

    p = sub.add_parser("basin", help="basin image of the induced fixed points (PPM)")
    p.add_argument("f")
    p.add_argument("--grid", type=int, nargs=2, default=[200, 200], metavar=("W", "H"))
    p.add_argument("--re-range", type=float, nargs=2, default=[-2.0, 2.0], dest="re_range", metavar=("MIN", "MAX"))
    p.add_argument("--im-range", type=float, nargs=2, default=[-2.0, 2.0], dest="im_range", metavar=("MIN", "MAX"))
    p.add_argument("out", nargs="?", help="PPM file (default --output or stdout)")

    p = sub.add_parser("op", help="composition operators on HH^2")
    p.add_argument("action", choices=[
        "matrix", "norm", "adjoint-kernel", "simple-check", "normal-check",
        "multiplicativity-check", "kernel-check",
    ])
    p.add_argument("--phi", default="z", help="analytic symbol")
    p.add_argument("--pi", default="z", help="co-analytic symbol")
    for name, default in (("alpha", "1"), ("beta", "1"), ("gamma", "0"), ("delta", "0")):
        p.add_argument(f"--{name}", default=default)
    p.add_argument("--operator", help="JSON BlockOperator file instead of symbols")
    p.add_argument("--perturb", type=float, default=0.0, help="rank-one perturbation size (matrix)")
    p.add_argument("--format", choices=["json", "csv"], default="json", help="matrix output format")
    p.add_argument("--lambda", dest="lam", default="0.2", help="kernel point (adjoint-kernel)")
    p.add_argument("--budget", type=int, default=None, help="degree budget (simple-check)")

    sub.add_parser("selftest", help="run the acceptance checks and print a table")
    return parser


# ========== COMMANDS ==========

class HarmonicCLI:
    """Executes one parsed command and returns its artifact."""

    def __init__(self, config: RunConfig):
        self.config = config

    def _map(self, text: str):
        return parse_harmonic(text, self.config.trunc)

    def compose(self, args) -> Artifact:
        f1, f2 = self._map(args.f1), self._map(args.f2)
        if args.law == "blend":
            coeffs = [parse_complex(getattr(args, k)) for k in ("alpha", "beta", "gamma", "delta")]
            result = compose_blend(f1, f2, *coeffs)
        else:
            result = compose(f1, f2, CompositionLaw(args.law))
        logger.info(f"✅ composed with the {args.law} law")
        return serialize_map(result)

    def iterate(self, args) -> Artifact:
        f = self._map(args.f)
        z0 = parse_complex(args.z0)
        n_max = args.n if args.n is not None else self.config.n_max
        runner = orbit_direct if args.law == "direct" else orbit_crossed
        orbit = runner(f, z0, n_max=n_max, tol=self.config.tol, escape_radius=self.config.escape_radius)
        if orbit.at_pole:
            logger.warning(f"⚠️  orbit hit a pole after {orbit.steps} step(s)")
        elif orbit.status is OrbitStatus.CONVERGED:
            logger.info(f"✅ converged after {orbit.steps} step(s) to {orbit.limit.value()}")
        else:
            logger.info(f"📊 orbit status {orbit.status.value} after {orbit.steps} step(s)")
        return orbit_to_csv(orbit)

    def fixed_points(self, args) -> Artifact:
        records = induced_fixed_points(self._map(args.f))
        logger.info(f"📊 {len(records)} induced fixed point(s)")
        return fixed_points_to_json(records)

    def classify_mobius(self, args) -> Artifact:
        taxonomy = classify_mobius_harmonic(self._map(args.f))
        logger.info(f"📊 case {taxonomy.case_label.value}")
        return taxonomy_to_json(taxonomy)

    def koenigs(self, args) -> Artifact:
        return self._linearization(harmonic_koenigs(self._map(args.f), self.config.trunc))

    def boettcher(self, args) -> Artifact:
        return self._linearization(harmonic_boettcher(self._map(args.f), self.config.trunc, args.root_index))

    def linearize(self, args) -> Artifact:
        return self._linearization(linearize(self._map(args.f), self.config.trunc, args.root_index))

    def _linearization(self, result) -> Artifact:
        if result.residual >= 1e-9:
            logger.warning(f"⚠️  functional-equation residual {result.residual:.3e}")
        else:
            logger.info(f"✅ {result.kind.value} residual {result.residual:.3e}")
        return linearization_to_json(result)

    def basin(self, args) -> Artifact:
        width, height = args.grid
        if width < 1 or height < 1:
            raise ValueError("Configuration validation failed:\n  - basin grid must be at least 1x1")
        grid = basin_render(
            self._map(args.f), width, height, args.re_range, args.im_range,
            n_max=self.config.n_max, tol=self.config.tol, escape_radius=self.config.escape_radius,
        )
        logger.info(f"✅ rendered {width}x{height} basin, {int(np.sum(grid < 0))} escaping pixel(s)")
        return basin_ppm_bytes(grid)

    # ---------- operators ----------

    def _operator(self, args) -> BlockOperator:
        if args.operator:
            with open(args.operator, encoding="utf-8") as handle:
                return operator_from_json(handle.read())
        phi, pi = self._symbols(args)
        coeffs = self._coefficients(args)
        return general_comp_op(phi, pi, *coeffs, self.config.trunc)

    def _symbols(self, args):
        return parse_analytic(args.phi, self.config.trunc), parse_analytic(args.pi, self.config.trunc)

    @staticmethod
    def _coefficients(args):
        return [parse_complex(getattr(args, k)) for k in ("alpha", "beta", "gamma", "delta")]

    def op(self, args) -> Artifact:
        L = self._operator(args)
        seed = self.config.seed
        if args.action == "matrix":
            if args.perturb:
                L = rank_one_perturbation(L, args.perturb, seed=seed)
            return operator_to_csv(L) if args.format == "csv" else operator_to_json(L)
        if args.action == "norm":
            sigma_a = spectral_norm(L.A, seed=seed)
            sigma_b = spectral_norm(L.B, seed=seed)
            payload = {"norm": op_norm(L, seed=seed), "sigma_A": sigma_a, "sigma_B": sigma_b}
            if not args.operator:
                phi, pi = self._symbols(args)
                bound_a, bound_b = general_norm_bound(phi, pi, *self._coefficients(args))
                payload.update({"bound_A": bound_a, "bound_B": bound_b,
                                "bound_phi": norm_bound_simple(phi), "bound_pi": norm_bound_simple(pi)})
            return dumps(payload)
        if args.action == "adjoint-kernel":
            phi, pi = self._symbols(args)
            image = adjoint_kernel_image(phi, pi, parse_complex(args.lam), self.config.trunc)
            return dumps({
                "lambda": encode_complex(parse_complex(args.lam)),
                "misfit": image.misfit,
                "tolerance": image.tolerance,
                "ok": image.ok,
                "actual": json.loads(vector_to_json(image.actual)),
                "predicted": json.loads(vector_to_json(image.predicted)),
            })
        if args.action == "simple-check":
            symbols = is_simple_composition(L, self.config.tol, args.budget)
            payload = {"simple": symbols is not None}
            if symbols is not None:
                payload["phi"] = [encode_complex(c) for c in symbols[0].coeffs]
                payload["pi"] = [encode_complex(c) for c in symbols[1].coeffs]
            logger.info(f"📊 simple composition operator: {symbols is not None}")
            return dumps(payload)
        if args.action == "multiplicativity-check":
            residual = multiplicativity_residual(L)
            return dumps({"multiplicative": residual < self.config.tol, "residual": residual})
        if args.action == "kernel-check":
            misfit = kernel_mapping_misfit(L)
            return dumps({"maps_kernels": misfit < self.config.tol, "misfit": misfit})
        norm = commutator_norm(L)
        return dumps({"normal": norm < 1e-12, "commutator_norm": norm})

    def selftest(self, args) -> Artifact:
        rows = run_selftest(self.config)
        failed = [row for row in rows if not row.passed]
        if failed:
            raise SelftestFailed(format_table(rows))
        logger.info(f"✅ all {len(rows)} acceptance checks passed")
        return format_table(rows)


class SelftestFailed(HarmonicError):
    """At least one acceptance check failed; the message holds the table."""

    exit_code = 5


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """RunConfig from the environment, the --config file and the command-line flags, in that order."""
    return RunConfig.load(
        args.config,
        trunc=args.trunc,
        tol=args.tol,
        n_max=args.n_max,
        escape_radius=args.escape_radius,
        seed=args.seed,
        output=args.output,
    )


def execute(argv: List[str]) -> Artifact:
    """
    Run one command and return its artifact without writing it anywhere.

    Raises:
        HarmonicError, ValueError: as the command raises them
    """
    artifact, _ = _execute(build_parser().parse_args(argv))
    return artifact


def _execute(args: argparse.Namespace) -> Tuple[Artifact, RunConfig]:
    config = load_run_config(args)
    cli = HarmonicCLI(config)
    handler = getattr(cli, args.command.replace("-", "_"))
    return handler(args), config


def _write(artifact: Artifact, path: str) -> None:
    if path:
        mode = "wb" if isinstance(artifact, bytes) else "w"
        kwargs = {} if isinstance(artifact, bytes) else {"encoding": "utf-8", "newline": ""}
        with open(path, mode, **kwargs) as handle:
            handle.write(artifact)
        logger.info(f"💾 wrote {path}")
    elif isinstance(artifact, bytes):
        sys.stdout.buffer.write(artifact)
        sys.stdout.buffer.flush()
    else:
        sys.stdout.write(artifact)
        sys.stdout.flush()


def run(argv: Optional[List[str]] = None) -> int:
    """Parse, execute, write the artifact; returns the process exit code."""
    args = build_parser().parse_args(sys.argv[1:] if argv is None else argv)
    setup_logging(args.log_level or Config.HARMONIC_LOG_LEVEL, args.log_file or Config.HARMONIC_LOG_FILE)
    try:
        Config.validate()
        Config.display()
        artifact, config = _execute(args)
        target = getattr(args, "out", None) or config.output
        _write(artifact, target)
    except SelftestFailed as e:
        sys.stdout.write(str(e))
        logger.error("❌ self-test failed")
        return e.exit_code
    except HarmonicError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
    except ValueError as e:
        logger.error(f"❌ {e}")
        return 4
    except OSError as e:
        # unreadable input or unwritable output file: a precondition of the run
        logger.error(f"❌ {e}")
        return 4
    return 0


def main():
    """Main entry point for the script."""
    sys.exit(run())


if __name__ == "__main__":
    main()
