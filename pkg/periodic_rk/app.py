import argparse
import logging
import sys
from functools import partial
from typing import Callable, NoReturn, Sequence

from impuls.errors import MultipleDataErrors
from impuls.tools import logs

from . import harness
from .basis import MIN_NODES
from .errors import InputError, SolverError
from .kernel import FourthOrderCondition
from .options import CONVERGED_PASSES, SolverOptions


class App:
    """Command-line application skeleton: argument parsing, logging setup and the mapping of
    errors to exit codes (0 success, 1 bad input, 2 numerical failure)."""

    def __init__(self) -> None:
        self.logger = logging.getLogger(f"periodic_rk.{type(self).__name__}")

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        pass

    def execute(self, args: argparse.Namespace) -> None:
        raise NotImplementedError

    def make_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog="periodic_rk")
        parser.add_argument("-v", "--verbose", action="store_true", help="show debug logs")
        self.add_arguments(parser)
        return parser

    def main(self, argv: Sequence[str] | None = None) -> int:
        try:
            args = self.make_parser().parse_args(argv)
        except SystemExit as e:
            # usage errors are input errors; --help exits with 0
            return 0 if e.code in (0, None) else InputError.exit_code

        logs.initialize(args.verbose)

        try:
            self.execute(args)
        except MultipleDataErrors as e:
            self.logger.error("%s", e)
            return InputError.exit_code
        except SolverError as e:
            self.logger.error("%s", e)
            return e.exit_code
        except OSError as e:
            self.logger.error("%s", e)
            return InputError.exit_code
        return 0

    def run(self) -> NoReturn:
        sys.exit(self.main())


def int_at_least(minimum: int, text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer: {text!r}") from None
    if value < minimum:
        raise argparse.ArgumentTypeError(f"expected an integer of at least {minimum}, got {value}")
    return value


def int_list(text: str, minimum: int | None = None) -> list[int]:
    try:
        values = [int(i) for i in text.split(",") if i.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a comma-separated list of integers: {text!r}"
        ) from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    if minimum is not None and min(values) < minimum:
        raise argparse.ArgumentTypeError(f"expected integers of at least {minimum}: {text!r}")
    return values


node_count = partial(int_at_least, MIN_NODES)
pass_count = partial(int_at_least, 1)


class PeriodicRK(App):
    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "--kernel-condition",
            choices=["auto"] + [c.value for c in FourthOrderCondition],
            default="auto",
            help="boundary-condition variant used to synthesize the kernel",
        )
        commands = parser.add_subparsers(dest="command", required=True)

        solve = commands.add_parser("solve", help="solve one problem and write its error table")
        solve.add_argument(
            "--problem",
            required=True,
            help="path to a problem file, or example1, example2, example3",
        )
        solve.add_argument("--n", type=node_count, help="number of collocation nodes")
        solve.add_argument("--picard", type=pass_count, default=1, help="number of outer passes")
        solve.add_argument("--out", help="CSV destination (default: stdout)")
        solve.set_defaults(handler=self.solve)

        bench = commands.add_parser("bench", help="run the built-in examples for several n")
        bench.add_argument("--examples", type=int_list, default=[1, 2, 3])
        bench.add_argument(
            "--n-list",
            type=partial(int_list, minimum=MIN_NODES),
            default=list(harness.DEFAULT_BENCH_N),
        )
        bench.add_argument(
            "--picard",
            type=pass_count,
            default=CONVERGED_PASSES,
            help="maximum number of outer passes (default: iterate to convergence)",
        )
        bench.add_argument("--out", help="summary CSV destination (default: stdout)")
        bench.set_defaults(handler=self.bench)

        check = commands.add_parser("kernel-check", help="report kernel diagnostics")
        check.add_argument("--grid", type=node_count, default=21)
        check.add_argument("--out", help="report destination (default: stdout)")
        check.set_defaults(handler=self.kernel_check)

    def execute(self, args: argparse.Namespace) -> None:
        handler: Callable[[argparse.Namespace, SolverOptions], None] = args.handler
        handler(args, self.options(args))

    @staticmethod
    def options(args: argparse.Namespace) -> SolverOptions:
        condition = (
            None if args.kernel_condition == "auto" else FourthOrderCondition(args.kernel_condition)
        )
        return SolverOptions(
            kernel_condition=condition,
            picard_passes=getattr(args, "picard", 1),
        )

    def solve(self, args: argparse.Namespace, options: SolverOptions) -> None:
        problem_file = harness.resolve_problem(args.problem)
        problem, solution = harness.run_problem(problem_file, args.n, options)
        destination = args.out if args.out is not None else sys.stdout

        if problem.exact is None:
            self.logger.info("%s has no exact solution; writing solution values", problem.name)
            harness.emit_solution_csv(solution, destination)
        else:
            table = harness.tabulate(problem, solution)
            self.logger.info(
                "%s, n=%d: max abs error %.3e after %d pass(es)",
                table.name,
                table.n,
                table.max_abs_err,
                table.passes,
            )
            harness.emit_csv(table, destination)

    def bench(self, args: argparse.Namespace, options: SolverOptions) -> None:
        rows = harness.bench(args.examples, args.n_list, options)
        harness.emit_bench_csv(rows, args.out if args.out is not None else sys.stdout)

    def kernel_check(self, args: argparse.Namespace, options: SolverOptions) -> None:
        report = harness.kernel_check(args.grid, options)
        harness.emit_kernel_report(report, args.out if args.out is not None else sys.stdout)


def main(argv: Sequence[str] | None = None) -> int:
    return PeriodicRK().main(argv)
