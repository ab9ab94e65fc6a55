"""``generate``: write a random distributed-MPC instance file."""

import json
import logging
from pathlib import Path

from amabench.models import GeneratorParams, save_instance
from amabench.services import generate_random_instance

logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("generate", help="Generate a random distributed MPC instance")
    parser.add_argument("--M", type=int, help="Number of agents")
    parser.add_argument("--nx", type=int, dest="n_x", help="States per agent")
    parser.add_argument("--nu", type=int, dest="n_u", help="Inputs per agent")
    parser.add_argument("--N", type=int, help="Prediction horizon")
    parser.add_argument("--box", type=float, nargs=2, metavar=("LOWER", "UPPER"), help="Input bounds")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--neighbors", type=int, nargs=2, metavar=("MIN", "MAX"),
                        help="Range of neighbor counts (excluding the agent itself)")
    parser.add_argument("--activation-target", type=float, help="Share of optimal inputs on the bounds")
    parser.add_argument("--activation-scale", type=float, help="Fixed initial-state scale (skips the search)")
    parser.add_argument("--r-placement", choices=["own", "shared", "neighborhood"])
    parser.add_argument("--output", type=Path, required=True)
    parser.set_defaults(handler=cmd_generate)


def params_from_args(args) -> GeneratorParams:
    """GeneratorParams with every flag that was given; the rest keep their defaults."""
    overrides = {
        "M": args.M,
        "n_x": args.n_x,
        "n_u": args.n_u,
        "N": args.N,
        "seed": args.seed,
        "activation_target": args.activation_target,
        "activation_scale": args.activation_scale,
        "r_placement": args.r_placement,
    }
    if args.box is not None:
        overrides.update(box_lower=args.box[0], box_upper=args.box[1])
    if args.neighbors is not None:
        overrides.update(neighbor_min=args.neighbors[0], neighbor_max=args.neighbors[1])
    return GeneratorParams(**{key: value for key, value in overrides.items() if value is not None})


async def cmd_generate(args) -> int:
    """Generate, save and summarize an instance.

    Returns:
        Exit code
    """
    params = params_from_args(args)
    instance, record = generate_random_instance(params)
    digest = save_instance(record, args.output)
    summary = {**instance.summary(), "sha256": digest, "output": str(args.output)}
    print(json.dumps(summary, indent=2))
    return 0
