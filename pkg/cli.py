"""adtool: evaluate, differentiate and benchmark expression-language programs.

    adtool eval   FILE --set S=100 ... --request "d(V)*d(S)" ... [--seed price=1]
    adtool tensor FILE --set ... --order 2 [--vars S,V,T,R] [--shift S=0.5]
    adtool bench  FILE --set ... [--orders 0..5] [--reps 10000] [--randomize-inputs S=90:110]
"""
import argparse
import logging
import sys

from errors import AdToolError, DomainError, InputError, ParseError, RequestError
from services.bench import run_bench
from services.derivatives import run_eval, run_tensor
from services.parser import parse_file
from services.settings import get_log_level, get_order_cap
from services.validators import validate_assignment, validate_order_list, validate_range_spec

logger = logging.getLogger("adtool")

EXIT_CODES = (
    (ParseError, 2),
    (RequestError, 2),
    (InputError, 3),
    (DomainError, 4),
    (AdToolError, 1),
)


def exit_code(error: AdToolError) -> int:
    for kind, code in EXIT_CODES:
        if isinstance(error, kind):
            return code
    return 1


def _assignments(parser: argparse.ArgumentParser, items: list[str] | None, flag: str) -> dict[str, float]:
    result = {}
    for item in items or []:
        validation = validate_assignment(item)
        if not validation['is_valid']:
            parser.error(f"{flag}: {validation['error']}")
        name, value = validation['data']
        result[name] = value
    return result


def _variables(text: str | None) -> list[str] | None:
    if not text:
        return None
    return [name.strip() for name in text.split(',') if name.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adtool", description="Taylor backpropagation for expression files.")
    parser.add_argument("--verbose", "-v", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    def common(sub):
        sub.add_argument("file", help="expression-language source")
        sub.add_argument("--set", action="append", metavar="VAR=VAL", help="input value (repeatable)")
        sub.add_argument("--format", choices=("json", "csv"), default="json")

    eval_cmd = commands.add_parser("eval", help="primal values and selected derivatives")
    common(eval_cmd)
    eval_cmd.add_argument("--request", action="append", required=True, metavar="REQ",
                          help='derivative request such as "d<2>(V)" or "d(V)*d(S)" (repeatable)')
    eval_cmd.add_argument("--seed", action="append", metavar="OUT=VAL",
                          help="output seed (repeatable); defaults to the last statement with 1")

    tensor_cmd = commands.add_parser("tensor", help="every derivative up to an order")
    common(tensor_cmd)
    tensor_cmd.add_argument("--order", type=int, required=True)
    tensor_cmd.add_argument("--vars", help="comma separated tensor variables (default: all)")
    tensor_cmd.add_argument("--shift", action="append", metavar="VAR=DELTA",
                            help="re-price the output at a shifted input from the tensor (repeatable)")

    bench_cmd = commands.add_parser("bench", help="time full tensors of increasing order")
    common(bench_cmd)
    bench_cmd.add_argument("--orders", default="0..5", help="A..B or a comma list")
    bench_cmd.add_argument("--reps", type=int, default=1000)
    bench_cmd.add_argument("--vars", help="comma separated tensor variables (default: all)")
    bench_cmd.add_argument("--randomize-inputs", metavar="VAR=LO:HI,...",
                           help="draw these inputs uniformly per repetition")
    bench_cmd.add_argument("--random-seed", type=int, help="seed of the input randomizer")
    return parser


def run(args: argparse.Namespace, parser: argparse.ArgumentParser):
    inputs = _assignments(parser, args.set, "--set")
    program = parse_file(args.file)

    match args.command:
        case "eval":
            seeds = _assignments(parser, args.seed, "--seed")
            return run_eval(program, inputs, args.request, seeds or None)
        case "tensor":
            shifts = _assignments(parser, args.shift, "--shift")
            return run_tensor(program, inputs, args.order, _variables(args.vars), shifts or None)
        case "bench":
            if args.reps < 1:
                parser.error("--reps must be at least 1")
            orders = validate_order_list(args.orders, get_order_cap())
            if not orders['is_valid']:
                parser.error(f"--orders: {orders['error']}")
            ranges = {}
            if args.randomize_inputs:
                validation = validate_range_spec(args.randomize_inputs)
                if not validation['is_valid']:
                    parser.error(f"--randomize-inputs: {validation['error']}")
                ranges = validation['data']
            return run_bench(program, inputs, orders['data'], args.reps, _variables(args.vars),
                             ranges, args.random_seed)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else get_log_level(),
                        format="%(name)s %(levelname)s %(message)s")
    try:
        report = run(args, parser)
    except AdToolError as e:
        logger.debug("command failed", exc_info=True)
        print(f"adtool: error: {e}", file=sys.stderr)
        return exit_code(e)

    print(report.to_json() if args.format == "json" else report.to_csv(), end="" if args.format == "csv" else "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
