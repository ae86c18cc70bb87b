"""Command-line driver: run experiment configs, verify invariants, list presets.

Subcommands:
    run <config> [--seed N] [--particles N] [--out DIR]
    verify <config>
    presets list

<config> is a bundled preset name (fig2..fig9) or a path to a config file.
The output root can also be set through the PILOTLATTICE_OUT variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    backward_reachable,
    find_crossing_pairs,
    rebin_distribution,
    screen_histogram,
    transition_net,
    tv_distance,
)
from .config import (
    ENSEMBLE_ARTIFACTS,
    ConfigError,
    ExperimentConfig,
    load_preset,
    preset_names,
    resolve_config,
)
from .io import (
    write_distributions_csv,
    write_histogram_csv,
    write_manifest,
    write_matrices_csv,
    write_net_csv,
    write_region_csv,
    write_trajectories_csv,
    write_transport_csv,
)
from .lattice import make_grid, normalize
from .markov import build_chain, run_ensemble
from .transport import (
    average_action,
    brute_force_optimal,
    minimal_stochastic_matrix,
    msd_report,
    quadratic_cost,
    relativistic_cost,
    wasserstein,
)
from .wavefield import boundary_weight_ratio

log = logging.getLogger("pilotlattice")

BOUNDARY_RATIO_LIMIT = 1e-9


def _output_dir(config: ExperimentConfig, out_override: str | None) -> Path:
    if out_override:
        return Path(out_override)
    if config.out_dir:
        return Path(config.out_dir)
    root = os.environ.get("PILOTLATTICE_OUT", "runs")
    return Path(root) / config.name


def run_experiment(config: ExperimentConfig, out_dir=None) -> Path:
    """Execute one configured run and write every requested artifact.

    Returns the path of the manifest JSON, which lists all written files
    along with a config echo and summary statistics.
    """
    out = _output_dir(config, out_dir)
    out.mkdir(parents=True, exist_ok=True)

    grid = config.grid()
    geom = config.geometry()
    times = config.times()
    if config.cost_variant == "relativistic":
        margin = config.light_cone_margin()
        if margin >= 1.0:
            log.warning(
                "grid span exceeds the light cone: max displacement is %.3g "
                "of c*tau; transitions beyond it carry infinite action", margin
            )

    t0 = time.perf_counter()
    chain = build_chain(grid, geom, times, config.n_lines)
    log.info("chain built: %d lines x %d sites in %.2f s",
             chain.n_lines, grid.n_sites, time.perf_counter() - t0)

    worst_boundary = max(
        boundary_weight_ratio(d) for d in chain.lines[1:]
    )
    if worst_boundary > BOUNDARY_RATIO_LIMIT:
        log.warning(
            "grid may truncate field tails: boundary-site weight reaches "
            "%.2e of the line maximum (target < %.0e); widen the grid to "
            "reduce edge distortion", worst_boundary, BOUNDARY_RATIO_LIMIT,
        )

    files: list[str] = []
    summary: dict = {"boundary_weight_ratio": worst_boundary}

    def emit(name, writer, *args, **kwargs):
        path = out / name
        writer(path, *args, **kwargs)
        files.append(name)

    if "distributions" in config.artifacts:
        emit("distributions.csv", write_distributions_csv, chain)
    if "matrices" in config.artifacts:
        emit("matrices.csv", write_matrices_csv, chain)

    if "net" in config.artifacts:
        net = transition_net(chain, config.net_threshold)
        emit("net.csv", write_net_csv, net, chain)
        summary["net_p_max"] = net.p_max
        summary["net_edges"] = int(net.n_edges)

    if "transport" in config.artifacts:
        if config.cost_variant == "relativistic":
            cost = relativistic_cost(grid, grid, times.mass, times.tau)
        else:
            cost = quadratic_cost(grid, grid)
        records = []
        for j, matrix in enumerate(chain.matrices):
            rep = msd_report(matrix, chain.lines[j], grid, grid)
            records.append({
                "step": j,
                "average_action": average_action(matrix, chain.lines[j], cost),
                "total_msd": rep.total_msd,
                "w2": wasserstein(chain.lines[j], chain.lines[j + 1], 2.0),
                "nonzero_entries": rep.nonzero_entries,
            })
        emit("transport.csv", write_transport_csv, records)
        summary["total_msd"] = float(sum(r["total_msd"] for r in records))

    if "region" in config.artifacts:
        if config.region_site == "peak":
            site = int(np.argmax(chain.lines[-1].weights))
        else:
            site = int(config.region_site)
        regions = backward_reachable(chain, site)
        emit("region.csv", write_region_csv, chain, regions)
        summary["region_site"] = site

    needs_ensemble = any(a in config.artifacts for a in ENSEMBLE_ARTIFACTS)
    if needs_ensemble:
        t0 = time.perf_counter()
        ensemble = run_ensemble(chain, config.particles, config.seed)
        log.info("sampled %d trajectories in %.2f s",
                 config.particles, time.perf_counter() - t0)
        if "trajectories" in config.artifacts:
            emit("trajectories.csv", write_trajectories_csv, ensemble,
                 config.trajectory_limit)
        if "histogram" in config.artifacts:
            counts = screen_histogram(ensemble, chain.n_steps, grid)
            theory = chain.lines[-1].weights
            emit("histogram.csv", write_histogram_csv, grid, counts, theory)
            summary["tv_screen"] = tv_distance(counts, chain.lines[-1])
            report_grid = config.report_grid()
            coarse_counts = screen_histogram(ensemble, chain.n_steps,
                                             report_grid)
            coarse_theory = rebin_distribution(chain.lines[-1], report_grid)
            summary["tv_screen_binned"] = tv_distance(coarse_counts,
                                                      coarse_theory)
            summary["report_bins"] = config.report_bins

    manifest = {
        "config": config.echo(),
        "version": __version__,
        "seed": config.seed,
        "files": sorted(files),
        "summary": summary,
        "generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    manifest_path = out / "manifest.json"
    write_manifest(manifest_path, manifest)
    return manifest_path


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self):
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            yield (f"{status}  {c.name}: residual {c.residual:.3e} "
                   f"(tolerance {c.tolerance:.0e})")


def chain_residuals(chain) -> dict[str, float]:
    """Marginal conservation, crossing, and minimal-stochasticity residuals
    of every matrix of a chain."""
    res = chain.validate()
    grid = chain.grid
    cost = quadratic_cost(grid, grid)
    crossing = 0.0
    both_dir = 0.0
    for j, matrix in enumerate(chain.matrices):
        pairs = find_crossing_pairs(matrix, chain.lines[j], cost, step=j)
        crossing = max(crossing, float(len(pairs)))
        prod = matrix._csr.multiply(matrix._csr.T).tocoo()
        off = prod.row != prod.col
        if np.any(off):
            both_dir = max(both_dir, float(np.abs(prod.data[off]).max()))
    res["crossing_pairs"] = crossing
    res["bidirectional_product"] = both_dir
    return res


def verify_config(config: ExperimentConfig, oracle_instances: int = 200,
                  metric_pairs: int = 100, rng_seed: int = 1234) -> VerificationReport:
    """Run the invariant suites for a configuration.

    Chain checks run on the configured experiment; the optimality oracle and
    the distance identities run on randomized desk-scale instances.
    """
    chain = build_chain(config.grid(), config.geometry(), config.times(),
                        config.n_lines)
    res = chain_residuals(chain)
    checks = [
        Check("row sums equal 1 on occupied rows", res["row_sum"], 1e-12),
        Check("pushforward restores next line", res["pushforward"], 1e-12),
        Check("no crossing transitions", res["crossing_pairs"], 0.0),
        Check("minimal stochasticity (one direction forbidden)",
              res["bidirectional_product"], 0.0),
    ]

    rng = np.random.default_rng(rng_seed)
    worst = 0.0
    for _ in range(oracle_instances):
        n_from = int(rng.integers(2, 7))
        n_to = int(rng.integers(2, 7))
        g_from = make_grid(0.0, 1.0, n_from)
        g_to = make_grid(0.0, 1.0, n_to)
        p_from = normalize(rng.random(n_from) + 1e-3, g_from)
        p_to = normalize(rng.random(n_to) + 1e-3, g_to)
        cost = quadratic_cost(g_from, g_to)
        matrix = minimal_stochastic_matrix(p_from, p_to)
        mine = average_action(matrix, p_from, cost)
        _, best = brute_force_optimal(p_from, p_to, cost)
        worst = max(worst, abs(mine - best))
    checks.append(Check(
        f"sweep matches transport optimum on {oracle_instances} instances",
        worst, 1e-9))

    worst = 0.0
    for _ in range(metric_pairs):
        n = int(rng.integers(2, 30))
        g = make_grid(0.0, 1.0, n)
        p = normalize(rng.random(n) + 1e-3, g)
        q = normalize(rng.random(n) + 1e-3, g)
        matrix = minimal_stochastic_matrix(p, q)
        rep = msd_report(matrix, p, g, g)
        w2 = wasserstein(p, q, 2.0)
        worst = max(worst, abs(w2**2 - rep.total_msd))
    checks.append(Check(
        f"squared order-2 distance equals minimal total MSD on {metric_pairs} pairs",
        worst, 1e-12))

    return VerificationReport(checks=tuple(checks))


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _preset_description(name: str) -> str:
    ref = resources.files("pilotlattice").joinpath(f"presets/{name}.ini")
    for line in ref.read_text().splitlines():
        line = line.strip()
        if line.startswith("#"):
            return line.lstrip("# ")
        if line:
            break
    return ""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pilotlattice",
        description="Stochastic lattice pilot-wave simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config or preset")
    p_run.add_argument("config", help="preset name or path to a config file")
    p_run.add_argument("--seed", type=int, help="override the ensemble seed")
    p_run.add_argument("--particles", type=int, help="override the particle count")
    p_run.add_argument("--out", help="output directory")

    p_verify = sub.add_parser("verify", help="check invariants for a config")
    p_verify.add_argument("config", help="preset name or path to a config file")

    p_presets = sub.add_parser("presets", help="preset utilities")
    p_presets.add_argument("action", choices=["list"])
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    if args.command == "presets":
        for name in preset_names():
            print(f"{name}: {_preset_description(name)}")
        return 0

    try:
        config = resolve_config(args.config)
    except ConfigError as e:
        print(f"config error - {e}", file=sys.stderr)
        return 2

    if args.command == "run":
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.particles is not None:
            overrides["particles"] = args.particles
        if overrides:
            try:
                config = dataclasses.replace(config, **overrides)
            except ConfigError as e:
                print(f"config error - {e}", file=sys.stderr)
                return 2
        try:
            manifest = run_experiment(config, out_dir=args.out)
        except (ValueError, RuntimeError) as e:
            print(f"run failed - {e}", file=sys.stderr)
            return 1
        print(manifest)
        return 0

    if args.command == "verify":
        report = verify_config(config)
        for line in report.lines():
            print(line)
        return 0 if report.passed else 1

    return 2


if __name__ == "__main__":
    sys.exit(main())
