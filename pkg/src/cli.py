"""
Command-line interface for the Kapitza-Dirac simulator.

Subcommands compute model spectra, build figure datasets, run Monte Carlo
estimates and compare spectrum files. Every dataset carries the resolved run
configuration in its header, so `rerun` can regenerate it.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

try:
    from .analysis import classical_density, compare_spectra, deflection_angle, smoothed_classical, smoothed_spectrum
    from .models import (
        HalfIndex, MCConfig, Metric, ModelKind, ModelParams, OutputFormat, Parity,
        PhysicalContext, RunConfig, Spectrum, VelocityProfile, ZetaMode, default_window,
    )
    from .montecarlo import estimate_spectrum
    from .qm_model import qm0_intensity, qm_intensity_curve, qm_line_intensities, qm_smoothed_intensity_curve
    from .reports import DEFAULT_GAMMA, DEFAULT_SIGMA_REL, FIGURE_IDS, FigureReporter
    from .settings import Settings, __version__, load_settings
    from .spectrum_files import SpectrumStore, render_table, spectrum_table
    from .stochastic_model import coupled_spectrum, coupled_spectrum_approx, stoch0_intensity_curve, stoch0_spectrum
    from .validators import NumericalError, ValidationError, validate_run_config
except ImportError:
    from analysis import classical_density, compare_spectra, deflection_angle, smoothed_classical, smoothed_spectrum
    from models import (
        HalfIndex, MCConfig, Metric, ModelKind, ModelParams, OutputFormat, Parity,
        PhysicalContext, RunConfig, Spectrum, VelocityProfile, ZetaMode, default_window,
    )
    from montecarlo import estimate_spectrum
    from qm_model import qm0_intensity, qm_intensity_curve, qm_line_intensities, qm_smoothed_intensity_curve
    from reports import DEFAULT_GAMMA, DEFAULT_SIGMA_REL, FIGURE_IDS, FigureReporter
    from settings import Settings, __version__, load_settings
    from spectrum_files import SpectrumStore, render_table, spectrum_table
    from stochastic_model import coupled_spectrum, coupled_spectrum_approx, stoch0_intensity_curve, stoch0_spectrum
    from validators import NumericalError, ValidationError, validate_run_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

SPECTRUM_MODELS = [
    ModelKind.QM0, ModelKind.QM, ModelKind.QM_SMOOTHED, ModelKind.STOCH0,
    ModelKind.COUPLED, ModelKind.COUPLED_APPROX, ModelKind.CLASSICAL,
]
SMOOTHABLE = {ModelKind.QM0, ModelKind.QM, ModelKind.QM_SMOOTHED, ModelKind.STOCH0, ModelKind.CLASSICAL}


def _qm0_line(key: HalfIndex, t):
    return qm0_intensity(key.as_integer(), t)


def _stoch0_line(key: HalfIndex, t):
    return stoch0_intensity_curve(key.as_integer(), t)


class KDSimCLI:
    """Command-line interface for the Kapitza-Dirac simulator."""

    def __init__(self, settings: Optional[Settings] = None, store: Optional[SpectrumStore] = None):
        self.settings = settings or load_settings()
        self.store = store or SpectrumStore(self.settings.output_dir)
        self.parser = self.create_parser()

    def create_parser(self) -> argparse.ArgumentParser:
        """Create the argument parser with all commands."""
        parser = argparse.ArgumentParser(
            prog='kd-sim',
            description='Simulate Kapitza-Dirac scattering spectra',
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog="""
Examples:
  kd-sim spectrum --model qm0 --tau 3
  kd-sim spectrum --model coupled --tau 2 --gamma 0.2 --initial odd --output odd.csv
  kd-sim figure 2
  kd-sim mc --tau 3 --n 200000 --seed 1 --zeta uniform --output mc.csv
  kd-sim compare stoch0.csv mc.csv --metric chi2 --tol 2.5
  kd-sim rerun mc.csv
            """
        )
        parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
        parser.add_argument('-v', '--verbose', action='store_true', help='Log progress to stderr')

        subparsers = parser.add_subparsers(dest='command', help='Available commands')
        formats = [f.value for f in OutputFormat]

        # Spectrum command
        spectrum_parser = subparsers.add_parser('spectrum', help='Compute a model spectrum')
        spectrum_parser.add_argument('--model', choices=[m.value for m in SPECTRUM_MODELS],
                                     default=ModelKind.QM0.value, help='Spectrum model')
        spectrum_parser.add_argument('--tau', type=float, required=True, help='Dimensionless transit time')
        spectrum_parser.add_argument('--gamma', type=float, default=DEFAULT_GAMMA,
                                     help='Coupling ratio for the gamma > 0 models')
        spectrum_parser.add_argument('--initial', choices=[p.value for p in Parity], default=Parity.EVEN.value,
                                     help='Internal state of the incoming atom (coupled model)')
        spectrum_parser.add_argument('--smooth', action='store_true', help='Average over the transit-time spread')
        spectrum_parser.add_argument('--sigma-rel', type=float, default=DEFAULT_SIGMA_REL,
                                     help='Relative transit-time spread used by --smooth')
        spectrum_parser.add_argument('--max-n', type=int, help='Largest |n| to report')
        spectrum_parser.add_argument('--deflection', action='store_true', help='Add a deflection_rad column')
        spectrum_parser.add_argument('--format', choices=formats, help='Output format (default from file suffix)')
        spectrum_parser.add_argument('--output', help='Output file (default stdout)')

        # Figure command
        figure_parser = subparsers.add_parser('figure', help='Build a figure dataset')
        figure_parser.add_argument('figure_id', type=int, help=f'Figure number ({", ".join(map(str, FIGURE_IDS))})')
        figure_parser.add_argument('--tau', type=float, help='Transit time for figure 2 (default 50)')
        figure_parser.add_argument('--gamma', type=float, default=DEFAULT_GAMMA, help='Coupling ratio')
        figure_parser.add_argument('--sigma-rel', type=float, default=DEFAULT_SIGMA_REL,
                                   help='Relative transit-time spread')
        figure_parser.add_argument('--format', choices=formats, help='Output format')
        figure_parser.add_argument('--output', help='Output file (default <output dir>/fig<id>.<format>)')

        # Monte Carlo command
        mc_parser = subparsers.add_parser('mc', help='Estimate a spectrum by Monte Carlo')
        mc_parser.add_argument('--tau', type=float, required=True, help='Dimensionless transit time')
        mc_parser.add_argument('--n', '--trajectories', dest='trajectories', type=int, default=100000,
                               help='Number of trajectories')
        mc_parser.add_argument('--seed', type=int, default=0, help='Random seed')
        mc_parser.add_argument('--zeta', default=ZetaMode.UNIFORM.value,
                               help='Standing-wave phase: "uniform" or a fixed value')
        mc_parser.add_argument('--coupled', action='store_true', help='Simulate the coupled even/odd walk')
        mc_parser.add_argument('--gamma', type=float, default=DEFAULT_GAMMA, help='Coupling ratio with --coupled')
        mc_parser.add_argument('--initial', choices=[p.value for p in Parity], default=Parity.EVEN.value,
                               help='Internal state of the incoming atom')
        mc_parser.add_argument('--workers', type=int, help='Worker processes (default KDSIM_WORKERS)')
        mc_parser.add_argument('--block-size', type=int, help='Trajectories per random stream')
        mc_parser.add_argument('--format', choices=formats, help='Output format')
        mc_parser.add_argument('--output', help='Output file (default stdout)')

        # Compare command
        compare_parser = subparsers.add_parser('compare', help='Compare two spectrum files')
        compare_parser.add_argument('file_a', help='First spectrum file')
        compare_parser.add_argument('file_b', help='Second spectrum file')
        compare_parser.add_argument('--metric', choices=[m.value for m in Metric], default=Metric.SUP.value,
                                    help='Comparison metric')
        compare_parser.add_argument('--tol', type=float, help='Pass threshold; exit status 1 when exceeded')
        compare_parser.add_argument('--window', type=float, help='Only compare lines with |n| <= WINDOW')
        compare_parser.add_argument('--output', help='Write the JSON report here (default stdout)')

        # Rerun command
        rerun_parser = subparsers.add_parser('rerun', help='Regenerate a dataset from its header')
        rerun_parser.add_argument('file', help='Dataset written by kd-sim')
        rerun_parser.add_argument('--output', help='Output file (default stdout)')

        return parser

    def _emit(self, table, output: Optional[str], fmt: Optional[str]) -> None:
        if output:
            self.store.write_table(table, output, fmt)
        else:
            sys.stdout.write(render_table(table, OutputFormat(fmt or OutputFormat.CSV.value)))

    def _format(self, args) -> str:
        if args.format:
            return args.format
        if args.output:
            return self.store.format_for(Path(args.output)).value
        return OutputFormat.CSV.value

    def _resolve(self, config: RunConfig) -> RunConfig:
        cleaned = validate_run_config(config.to_dict())
        return RunConfig.from_dict(cleaned)

    def _line_spectrum(self, model: ModelKind, args) -> Spectrum:
        tau = args.tau
        parity = Parity(args.initial)
        if parity is Parity.ODD and model is not ModelKind.COUPLED:
            raise ValidationError("--initial odd needs --model coupled.")
        if args.smooth and model not in SMOOTHABLE:
            raise ValidationError(f"--smooth is not available for the {model.value} model.")

        if args.smooth:
            profile = VelocityProfile(args.sigma_rel)
            reach = tau * (1 + 6 * args.sigma_rel)
            max_n = default_window(reach) if args.max_n is None else args.max_n
            integral = [HalfIndex(2 * n) for n in range(-max_n, max_n + 1)]
            if model is ModelKind.QM0:
                return smoothed_spectrum(_qm0_line, integral, tau, model, profile)
            if model is ModelKind.STOCH0:
                return smoothed_spectrum(_stoch0_line, integral, tau, model, profile)
            if model is ModelKind.CLASSICAL:
                values = {key.k: smoothed_classical(key, tau, profile) for key in integral}
                return Spectrum.from_intensities(values, tau, model, meta={"sigma_rel": profile.sigma_rel})
            curve = qm_smoothed_intensity_curve if model is ModelKind.QM_SMOOTHED else qm_intensity_curve
            keys = [HalfIndex(k) for k in range(-2 * max_n - 1, 2 * max_n + 2)]
            spectrum = smoothed_spectrum(lambda key, t: curve(key.k, t, args.gamma), keys, tau, model, profile)
            spectrum.meta["gamma"] = args.gamma
            return spectrum

        if model is ModelKind.QM0:
            return qm_line_intensities(ModelParams(tau, 0.0), args.max_n)
        if model in (ModelKind.QM, ModelKind.QM_SMOOTHED):
            return qm_line_intensities(ModelParams(tau, args.gamma), args.max_n, smoothed=model is ModelKind.QM_SMOOTHED)
        if model is ModelKind.STOCH0:
            return stoch0_spectrum(tau, args.max_n)
        if model is ModelKind.COUPLED:
            spectrum = coupled_spectrum(tau, args.gamma, parity)
            return spectrum if args.max_n is None else spectrum.window(2 * args.max_n + 1)
        if model is ModelKind.COUPLED_APPROX:
            return coupled_spectrum_approx(tau, args.gamma, args.max_n)

        max_n = default_window(tau) if args.max_n is None else args.max_n
        values = {2 * n: float(classical_density(n, tau)) for n in range(-max_n, max_n + 1)}
        return Spectrum.from_intensities(values, tau, model)

    def cmd_spectrum(self, args):
        """Handle the spectrum command."""
        model = ModelKind(args.model)
        uses_gamma = model in (ModelKind.QM, ModelKind.QM_SMOOTHED, ModelKind.COUPLED, ModelKind.COUPLED_APPROX)
        options = {"smooth": args.smooth, "max_n": args.max_n, "deflection": args.deflection}
        config = self._resolve(RunConfig(
            subcommand="spectrum",
            model=model.value,
            tau=args.tau,
            gamma=args.gamma if uses_gamma else None,
            sigma_rel=args.sigma_rel if args.smooth else None,
            initial_parity=args.initial,
            output=args.output,
            format=self._format(args),
            options=options,
        ))
        if config.options.get("max_n") is not None and config.options["max_n"] < 0:
            raise ValidationError(f"--max-n must be nonnegative, got {args.max_n}.")

        spectrum = self._line_spectrum(model, args).trimmed()
        logger.info(f"Computed {spectrum}")

        extra = {}
        if args.deflection:
            ctx = PhysicalContext.sodium()
            extra["deflection_rad"] = lambda key: deflection_angle(key, ctx)
        self._emit(spectrum_table(spectrum, config, extra), args.output, config.format)
        return EXIT_OK

    def cmd_figure(self, args):
        """Handle the figure command."""
        if args.figure_id not in FIGURE_IDS:
            raise ValidationError(f"unknown figure {args.figure_id}; choose from {', '.join(map(str, FIGURE_IDS))}.")
        fmt = self._format(args)
        config = self._resolve(RunConfig(
            subcommand="figure",
            tau=args.tau,
            gamma=args.gamma,
            sigma_rel=args.sigma_rel,
            output=args.output,
            format=fmt,
            options={"figure": args.figure_id},
        ))
        reporter = FigureReporter(gamma=config.gamma, sigma_rel=config.sigma_rel)
        table = reporter.build(args.figure_id, config=config, tau=config.tau)

        output = args.output or self.store.default_path(f"fig{args.figure_id}.{fmt}")
        path = self.store.write_table(table, output, fmt)
        print(f"Wrote {path}")
        for line in reporter.summary_lines(table):
            print(line)
        return EXIT_OK

    def cmd_mc(self, args):
        """Handle the mc command."""
        if args.zeta == ZetaMode.UNIFORM.value:
            zeta_mode, zeta = ZetaMode.UNIFORM, 0.0
        else:
            try:
                zeta_mode, zeta = ZetaMode.FIXED, float(args.zeta)
            except ValueError:
                raise ValidationError(f"--zeta must be 'uniform' or a number, got {args.zeta!r}.")

        block_size = args.block_size or self.settings.block_size
        workers = args.workers or self.settings.workers
        if workers < 1:
            raise ValidationError(f"--workers must be at least 1, got {workers}.")
        gamma = args.gamma if args.coupled else None

        config = self._resolve(RunConfig(
            subcommand="mc",
            model=ModelKind.MC.value,
            tau=args.tau,
            gamma=gamma,
            seed=args.seed,
            trajectories=args.trajectories,
            initial_parity=args.initial,
            output=args.output,
            format=self._format(args),
            options={"zeta": args.zeta if zeta_mode is ZetaMode.UNIFORM else zeta, "block_size": block_size},
        ))
        mc_config = MCConfig(
            trajectories=config.trajectories,
            seed=config.seed,
            tau=config.tau,
            gamma=config.gamma,
            zeta_mode=zeta_mode,
            zeta=zeta,
            initial_parity=Parity(config.initial_parity),
            block_size=block_size,
        )
        spectrum = estimate_spectrum(mc_config, workers=workers)
        self._emit(spectrum_table(spectrum, config), args.output, config.format)
        return EXIT_OK

    def cmd_compare(self, args):
        """Handle the compare command."""
        a = self.store.read_spectrum(args.file_a)
        b = self.store.read_spectrum(args.file_b)
        report = compare_spectra(a, b, Metric(args.metric), tolerance=args.tol, max_line=args.window)
        config = RunConfig(
            subcommand="compare",
            output=args.output,
            format=OutputFormat.JSON.value,
            options={"files": [args.file_a, args.file_b], "metric": args.metric, "tol": args.tol, "window": args.window},
        )
        if args.output:
            self.store.write_report(report.to_dict(), args.output, config)
        else:
            print(json.dumps(report.to_dict(), indent=2, sort_keys=True))

        verdict = {True: "pass", False: "FAIL", None: "no tolerance"}[report.passed]
        print(f"{report.metric.value} = {report.value:.6g} ({verdict})", file=sys.stderr)
        return EXIT_FAILED if report.passed is False else EXIT_OK

    def cmd_rerun(self, args):
        """Handle the rerun command."""
        table = self.store.read_table(args.file)
        echoed = table.header.get("config")
        if not isinstance(echoed, dict) or "subcommand" not in echoed:
            raise ValidationError(f"{args.file} has no run configuration in its header.")
        argv = self.config_argv(RunConfig.from_dict(echoed))
        if args.output:
            argv += ["--output", args.output]
        logger.info(f"Rerunning: kd-sim {' '.join(argv)}")
        return self.dispatch(self.parser.parse_args(argv))

    @staticmethod
    def config_argv(config: RunConfig) -> List[str]:
        """Command line that reproduces a resolved run configuration."""
        options: Dict = config.options
        if config.subcommand == "spectrum":
            argv = ["spectrum", "--model", config.model, "--tau", repr(config.tau),
                    "--initial", config.initial_parity or Parity.EVEN.value, "--format", config.format]
            if config.gamma is not None:
                argv += ["--gamma", repr(config.gamma)]
            if options.get("smooth"):
                argv += ["--smooth", "--sigma-rel", repr(config.sigma_rel)]
            if options.get("max_n") is not None:
                argv += ["--max-n", str(options["max_n"])]
            if options.get("deflection"):
                argv.append("--deflection")
            return argv
        if config.subcommand == "mc":
            zeta = options.get("zeta", ZetaMode.UNIFORM.value)
            argv = ["mc", "--tau", repr(config.tau), "--n", str(config.trajectories), "--seed", str(config.seed),
                    "--zeta", zeta if isinstance(zeta, str) else repr(zeta),
                    "--initial", config.initial_parity or Parity.EVEN.value, "--format", config.format]
            if options.get("block_size") is not None:
                argv += ["--block-size", str(options["block_size"])]
            if config.gamma is not None:
                argv += ["--coupled", "--gamma", repr(config.gamma)]
            return argv
        if config.subcommand == "figure":
            argv = ["figure", str(options["figure"]), "--gamma", repr(config.gamma),
                    "--sigma-rel", repr(config.sigma_rel), "--format", config.format]
            if config.tau is not None:
                argv += ["--tau", repr(config.tau)]
            return argv
        raise ValidationError(f"cannot rerun a {config.subcommand!r} dataset.")

    def dispatch(self, parsed_args) -> int:
        """Call the handler for a parsed command line."""
        handler = getattr(self, f"cmd_{parsed_args.command}", None)
        if handler is None:
            print(f"Unknown command: {parsed_args.command}", file=sys.stderr)
            return EXIT_USAGE
        return handler(parsed_args)

    def run(self, args=None):
        """
        Run the CLI with the given arguments.

        Returns:
            0 on success, 1 when a comparison fails its tolerance, 2 for
            invalid input and 3 for a numerical failure
        """
        try:
            parsed_args = self.parser.parse_args(args)
        except SystemExit as e:
            return e.code if isinstance(e.code, int) else EXIT_USAGE

        if parsed_args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        if parsed_args.command is None:
            self.parser.print_help(sys.stderr)
            return EXIT_USAGE

        try:
            return self.dispatch(parsed_args)
        except SystemExit as e:
            return e.code if isinstance(e.code, int) else EXIT_USAGE
        except ValidationError as e:
            print(f"Error: {e}", file=sys.stderr)
            return EXIT_USAGE
        except NumericalError as e:
            print(f"Numerical error: {e}", file=sys.stderr)
            return EXIT_NUMERICAL
        except OSError as e:
            print(f"Error: {e}", file=sys.stderr)
            return EXIT_USAGE
        except KeyboardInterrupt:
            print("\nOperation cancelled.", file=sys.stderr)
            return EXIT_FAILED


def main():
    """Main entry point for the CLI."""
    try:
        settings = load_settings()
    except ValidationError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(EXIT_USAGE)
    logging.basicConfig(
        level=settings.log_level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    cli = KDSimCLI(settings=settings)
    exit_code = cli.run()
    sys.exit(exit_code)


if __name__ == "__main__":
    main()
