from __future__ import annotations

from .classic import (  # noqa
    PolicyRecipe,
    ancestral_set,
    derive_district,
    identify,
    reduce_policy_query,
)
from .proximal import (  # noqa
    AdmissibleSequence,
    Margins,
    ProximalCheck,
    ProximalStep,
    SearchLimits,
    StepKind,
    check_proximal_step,
    ordinary_fix_margins,
    proximal_fix,
    proximal_identify,
    search_admissible_sequence,
)
