"""``nntk-exp``: run one experiment and write its CSV.

Exit codes: 0 success, 2 input error, 3 positive-definiteness abort outside
the sweep experiments.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import DefinitenessError, InputError
from .experiments import EXPERIMENTS, TARGETS, ExperimentConfig, run_experiment

log = logging.getLogger("nntk")


def _list(cast):
    def parse(text):
        try:
            return [cast(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _width(text):
    text = text.strip()
    if text.startswith("2^"):
        return 2 ** int(text[2:])
    return int(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nntk-exp", description=__doc__.splitlines()[0])
    p.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    p.add_argument("--n-list", type=_list(_width), default=[256, 1024, 4096],
                   help="comma-separated widths; '2^k' accepted")
    p.add_argument("--gamma-list", type=_list(float), default=[1.0])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.52)
    p.add_argument("--m", type=int, default=16, help="number of training samples")
    p.add_argument("--k", type=int, default=3, help="number of Newton steps")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed0", type=int, default=0)
    p.add_argument("--mc-samples", type=int, default=200_000)
    p.add_argument("--target", choices=sorted(TARGETS), default="sin20pi")
    p.add_argument("--activation", choices=["tanh", "sigmoid"], default="tanh")
    p.add_argument("--c-halfwidth", type=float, default=1.0)
    p.add_argument("--w-eta-std", type=float, default=1.0)
    p.add_argument("--out", default=None, help="output CSV path (default: <experiment>.csv)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = ExperimentConfig(
            experiment=args.experiment,
            N_list=args.n_list,
            gamma_list=args.gamma_list,
            alpha=args.alpha,
            beta=args.beta,
            M=args.m,
            K=args.k,
            seeds=args.seeds,
            seed0=args.seed0,
            mc_samples=args.mc_samples,
            target=args.target,
            out=args.out,
            activation=args.activation,
            c_halfwidth=args.c_halfwidth,
            w_eta_std=args.w_eta_std,
        )
        path = run_experiment(cfg)
    except InputError as exc:
        print(f"nntk-exp: input error: {exc}", file=sys.stderr)
        return 2
    except DefinitenessError as exc:
        print(f"nntk-exp: aborted: {exc}", file=sys.stderr)
        return 3
    log.info("wrote %s", path)
    return 0
