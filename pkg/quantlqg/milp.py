"""
The selection problem as a mixed-integer linear program.

The program is built with PuLP and is only an audit artifact: minimize
sum_t c_t' x_t over binary x_t_i with exactly one quantizer per stage.
"""

import dataclasses
import logging
import os
import tempfile

import pulp

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class SelectionProgram:
    """A built selection program.

    Args:
        problem (pulp.LpProblem): The PuLP problem.
        variables (tuple): variables[t][i] is the binary x_t_<label_i>.
        labels (tuple): The quantizer label per bank position.
    """
    problem: pulp.LpProblem
    variables: tuple
    labels: tuple

    @property
    def horizon(self):
        """The number of stages T."""
        return len(self.variables)


def build_milp(c, labels, name='quantizer_selection'):
    """Builds the program from the adjusted prices.

    Args:
        c (array_like): c_t^i, shape (T, M).
        labels (sequence): The quantizer label per bank position.
        name (str): The problem name written in the LP header.

    Returns:
        program (SelectionProgram): The program.
    """
    problem = pulp.LpProblem(name, pulp.LpMinimize)
    variables = []
    for t in range(len(c)):
        variables.append(tuple(
            pulp.LpVariable(f'x_{t}_{label}', cat=pulp.LpBinary)
            for label in labels
        ))
    problem += pulp.lpSum(
        float(c[t][i]) * x
        for t, stage in enumerate(variables)
        for i, x in enumerate(stage)
    )
    for t, stage in enumerate(variables):
        problem += pulp.lpSum(stage) == 1, f'pick_{t}'
    return SelectionProgram(
        problem=problem, variables=tuple(variables), labels=tuple(labels)
    )


def export_milp(c, labels, path=None):
    """Returns the program in LP-file text, optionally writing it to path.

    Example:
        text = export_milp(schedule.c, bank.labels, 'milp.lp')
    """
    program = build_milp(c, labels)
    with tempfile.TemporaryDirectory() as tmp:
        target = os.path.join(tmp, 'milp.lp')
        program.problem.writeLP(target)
        with open(target, 'r', encoding='utf-8') as f:
            text = f.read()
    if path is not None:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.info('Wrote selection program to %s', path)
    return text


def milp_objective(program, theta):
    """Evaluates the program objective at a selection (bank positions)."""
    for t, stage in enumerate(program.variables):
        for i, x in enumerate(stage):
            x.varValue = 1.0 if i == theta[t] else 0.0
    return float(pulp.value(program.problem.objective))


def solve_milp(program):
    """Solves the program with the bundled CBC solver.

    Returns:
        theta (tuple): The selected bank positions, or None when the CBC
            solver is not available.
    """
    solver = pulp.PULP_CBC_CMD(msg=False)
    if not solver.available():
        logger.warning('CBC solver is not available')
        return None
    program.problem.solve(solver)
    return tuple(
        max(range(len(stage)), key=lambda i: stage[i].varValue or 0.0)
        for stage in program.variables
    )
