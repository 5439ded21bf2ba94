"""`marp rates`: rate constants and convergence radii for a schedule pair."""

import argparse
import logging
import sys
from typing import Any

import orjson

from marp.errors import InvalidParameterError, RegularityMarginError
from marp.services import rates, schedules
from marp.services.config_loader import JSON_OPTIONS
from marp.settings import MarpSettings

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "rates", help="Certified rates for relaxation schedules"
    )
    parser.add_argument("--theta", type=float, default=0.0, help="CQ-number in [0, 1)")
    parser.add_argument("--eps", type=float, default=None, help="Regularity epsilon")
    parser.add_argument(
        "--lambda",
        dest="lam",
        type=schedules.parse_flag,
        default=schedules.parse_flag("const:0.5"),
        help="Schedule for the A-step, e.g. const:0.5 or geom:0.5:0.9",
    )
    parser.add_argument(
        "--mu",
        type=schedules.parse_flag,
        default=schedules.parse_flag("const:0.5"),
        help="Schedule for the B-step",
    )
    parser.add_argument(
        "--horizon",
        type=int,
        default=schedules.DEFAULT_HORIZON,
        help="Terms scanned for suprema without a closed form",
    )
    parser.add_argument(
        "--r", type=float, default=None, help="Radius for the local convergence ball"
    )
    parser.add_argument(
        "--delta", type=float, default=None, help="Regularity radius delta"
    )
    parser.add_argument(
        "--eps-slack",
        type=float,
        default=None,
        help="Slack eps for the CQ start radius",
    )
    parser.set_defaults(func=cmd_rates)


def certificates(args: argparse.Namespace) -> dict[str, Any]:
    """rho_hat, eta, kappa_hat when its precondition holds, and requested radii."""
    lam, mu = args.lam, args.mu
    rho = rates.rho_hat(lam, mu, args.theta, args.horizon)
    output: dict[str, Any] = {
        "rho_hat": rho.model_dump(mode="json"),
        "eta": rates.eta(lam, mu, args.horizon).model_dump(mode="json"),
    }
    alpha0 = schedules.pair_meta(lam, mu, args.horizon).alpha0

    kappa = None
    if args.eps is not None:
        try:
            kappa = rates.kappa_hat(lam, mu, args.theta, args.eps, args.horizon)
            output["kappa_hat"] = kappa.model_dump(mode="json")
            output["kappa_hat_squared"] = kappa.value**2
        except RegularityMarginError as e:
            logger.warning("kappa_hat unavailable: %s", e)
            output["kappa_hat"] = {"error": str(e)}

    radii: dict[str, Any] = {}
    try:
        if args.r is not None and rho.valid:
            local = rates.local_convergence_radius(args.r, rho.value, alpha0)
            radii["local"] = {
                "start_radius": local.start_radius,
                "coefficient": local.coefficient,
            }
        if args.eps_slack is not None and rho.valid:
            cq = rates.cq_delta(args.eps_slack, rho.value, alpha0)
            radii["cq"] = {"delta": cq.delta, "radius": cq.radius}
        if args.delta is not None and kappa is not None and kappa.valid:
            ball = rates.regularity_ball(args.delta, kappa.value, alpha0)
            radii["regularity"] = {
                "start_radius": ball.start_radius,
                "radius": ball.radius,
                "coefficient": ball.coefficient,
                "unrelaxed_coefficient": ball.unrelaxed_coefficient,
            }
    except InvalidParameterError as e:
        logger.warning("Radius unavailable: %s", e)
        radii["error"] = str(e)
    if radii:
        output["radii"] = radii
    return output


def cmd_rates(args: argparse.Namespace, settings: MarpSettings) -> int:
    output = certificates(args)
    sys.stdout.write(orjson.dumps(output, option=JSON_OPTIONS).decode() + "\n")
    return 0
