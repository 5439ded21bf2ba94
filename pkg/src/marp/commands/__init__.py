# Commands package
from marp.commands.cq import register as register_cq
from marp.commands.examples import register as register_examples
from marp.commands.rates import register as register_rates
from marp.commands.run import register as register_run
from marp.commands.sweep import register as register_sweep

__all__ = [
    "register_cq",
    "register_examples",
    "register_rates",
    "register_run",
    "register_sweep",
]
