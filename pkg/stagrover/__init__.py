"""Information about this package.

Shortcuts to adiabaticity for the adiabatic Grover search: see `model.py`
    for the two-level reduction, `schedules.py` for schedule families,
    `counterdiabatic.py` for error functionals, `dynamics.py` for the
    Schrödinger integrator and `inverse.py` for invariant-based inverse
    engineering.
    ```python3.9+
    from stagrover.schedules import ScheduleSpec
    from stagrover.dynamics import EvolutionConfig, evolve
    spec = ScheduleSpec(family='cd-linear', size=64, final_time=20.0)
    print(evolve(EvolutionConfig(spec=spec)).fidelity)
    ```
"""

__author__ = "Davide Testa"
__email__ = "davide@davte.it"
__license__ = "GNU General Public License v3.0"
__version__ = "1.0.0"
__maintainer__ = "Davide Testa"

from stagrover import (config, counterdiabatic, dynamics, errors, inverse,
                       model, schedules, utilities)

__all__ = ['config', 'counterdiabatic', 'dynamics', 'errors', 'inverse',
           'model', 'schedules', 'utilities']
