"""``sfhd`` command-line entry point.

    sfhd <kernel|spectrum|covariance|simulate|verify> [--config PATH] [flags] [--section.field VALUE ...]

Exit codes: 0 success, 1 verification failure, 2 computational failure,
64 configuration or usage error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys

from . import BACKEND
from .config import ConfigError, RunConfig, format_float, load_config, parse_number_list
from .covariance import covariance_from_spectrum, covariance_grid, write_covariance_csv
from .errors import SFHDError
from .fieldsim import simulate_evolution, write_coefficients_csv, write_grid_csv
from .kernel import h_eval_route
from .spectra import DiscreteMeasure, angular_spectrum, write_spectrum_csv

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_COMPUTE = 2
EXIT_USAGE = 64

log = logging.getLogger("sfhd")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _threads() -> int:
    raw = os.environ.get("SFHD_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"SFHD_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"SFHD_THREADS must be a positive integer, got {raw!r}")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sfhd", description="Fractional hyperbolic diffusion random fields on the sphere.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON configuration file (default: built-in example)")
        sp.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")

    k = sub.add_parser("kernel", help="evaluate H(mu, t) on a grid")
    common(k)
    k.add_argument("--mu", required=True, help="comma list, ranges as start:stop:count")
    k.add_argument("--t", required=True, help="comma list, ranges as start:stop:count")
    k.add_argument("--out", default="kernel.csv")

    s = sub.add_parser("spectrum", help="angular power spectrum C_l(t, t')")
    common(s)
    s.add_argument("--l-max", type=int, default=100)
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--t-prime", type=float, default=None)
    s.add_argument("--out", default="spectrum.csv")

    c = sub.add_parser("covariance", help="covariance R(cos gamma, t, t)")
    common(c)
    c.add_argument("--gamma", required=True, help="radians; comma list, ranges as start:stop:count")
    c.add_argument("--t", required=True, help="comma list, ranges as start:stop:count")
    c.add_argument("--from-spectrum", action="store_true", help="Legendre reconstruction from C_l")
    c.add_argument("--l-max", type=int, default=100, help="spectrum truncation for --from-spectrum")
    c.add_argument("--out", default="covariance.csv")

    m = sub.add_parser("simulate", help="simulate field realisations on the sphere grid")
    common(m)

    v = sub.add_parser("verify", help="run the cross-route verification suite")
    common(v)
    v.add_argument("--only", action="append", help="run only the named check (repeatable)")
    return p


def _split_overrides(extra: list[str]) -> list[tuple[str, str]]:
    out = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or "." not in tok:
            raise UsageError(f"sfhd: unrecognized argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise UsageError(f"sfhd: override {tok} needs a value")
            value = extra[i + 1]
            i += 2
        out.append((key, value))
    return out


def _out_path(cfg: RunConfig, name: str) -> str:
    return name if os.path.isabs(name) else os.path.join(cfg.output_dir, name)


def cmd_kernel(cfg: RunConfig, args) -> int:
    mus = parse_number_list(args.mu)
    ts = parse_number_list(args.t)
    path = _out_path(cfg, args.out)
    rows = []
    for mu in mus:
        for t in ts:
            try:
                h, route = h_eval_route(cfg.model, cfg.kernel, mu, t)
            except (SFHDError, ValueError, ArithmeticError) as exc:
                log.error("kernel evaluation failed at mu=%s, t=%s: %s", format_float(mu), format_float(t), exc)
                return EXIT_COMPUTE
            rows.append([format_float(mu), format_float(t), format_float(h), route])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mu", "t", "H", "route"])
        w.writerows(rows)
    log.info("wrote %d rows to %s", len(rows), path)
    print(path)
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, args) -> int:
    if args.l_max < 0:
        raise ConfigError("--l-max must be >= 0")
    t_prime = args.t if args.t_prime is None else args.t_prime
    sp = angular_spectrum(cfg.measure, cfg.model, cfg.kernel, args.l_max, args.t, t_prime)
    path = _out_path(cfg, args.out)
    write_spectrum_csv(path, sp)
    total = float(sp.partial_sums()[-1])
    log.info("sum_(l<=%d) (2l+1) C_l = %s", args.l_max, format_float(total))
    print(path)
    return EXIT_OK


def cmd_covariance(cfg: RunConfig, args) -> int:
    gammas = parse_number_list(args.gamma)
    ts = parse_number_list(args.t)
    for g in gammas:
        if not 0.0 <= g <= math.pi:
            raise ConfigError(f"--gamma values must lie in [0, pi], got {g!r}")
    for t in ts:
        if not t >= 0:
            raise ConfigError(f"--t values must be >= 0, got {t!r}")
    if args.from_spectrum:
        import numpy as np

        mat = np.empty((len(gammas), len(ts)))
        for j, t in enumerate(ts):
            sp = angular_spectrum(cfg.measure, cfg.model, cfg.kernel, args.l_max, t, t)
            mat[:, j] = covariance_from_spectrum(sp, np.array(gammas))
    else:
        mat = covariance_grid(cfg.measure, cfg.model, cfg.kernel, gammas, ts)
    path = _out_path(cfg, args.out)
    write_covariance_csv(path, gammas, ts, mat)
    print(path)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    if cfg.simulation is None:
        raise ConfigError("simulation: section is required for 'simulate'")
    if not isinstance(cfg.measure, DiscreteMeasure):
        raise ConfigError("measure: simulation needs a discrete measure (discretise the Matern density first)")
    n_threads = _threads()
    results = simulate_evolution(cfg.measure, cfg.model, cfg.kernel, cfg.simulation, n_threads, return_coefficients=True)
    for i, (t, grid, coeffs) in enumerate(results):
        gpath = _out_path(cfg, f"grid_{i:03d}.csv")
        cpath = _out_path(cfg, f"coefficients_{i:03d}.csv")
        write_grid_csv(gpath, grid)
        write_coefficients_csv(cpath, coeffs)
        print(f"t={format_float(t)} variance={format_float(grid.sample_variance())} grid={gpath} coefficients={cpath}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    from .verify import format_report, run_checks

    results = run_checks(cfg, args.only)
    print(format_report(results))
    failed = [r for r in results if not r.passed]
    if failed:
        log.error("verification failed: %s", failed[0].name)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {
    "kernel": cmd_kernel,
    "spectrum": cmd_spectrum,
    "covariance": cmd_covariance,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        if args.command is None:
            raise UsageError("sfhd: a subcommand is required (kernel, spectrum, covariance, simulate, verify)")
        overrides = _split_overrides(extra)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config, overrides)
        cfg.check_output_dir()
        _threads()
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    log.debug("backend=%s threads=%d", BACKEND, _threads())

    try:
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (SFHDError, ArithmeticError, ValueError) as exc:
        log.error("computation failed: %s", exc)
        return EXIT_COMPUTE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
