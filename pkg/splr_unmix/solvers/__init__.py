"""Abundance matrix solvers for one window of pixels."""
from .adsplru import ADSpLRUSolver, adsplru_solve
from .base import Solver
from .ipsplru import IPSpLRUSolver, ipsplru_solve
from ..domain.enums import SolverKind

SOLVERS = {
    SolverKind.IPSPLRU: IPSpLRUSolver,
    SolverKind.ADSPLRU: ADSpLRUSolver,
}


def make_solver(kind, phi, y, config) -> Solver:
    return SOLVERS[SolverKind(kind)](phi, y, config)
