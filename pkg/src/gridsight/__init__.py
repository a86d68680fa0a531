"""Graph-theoretic observability and stealthy data-injection analysis for DC
power-system state estimation, with an exact linear-algebra oracle."""

from .model import (Bus, Case, Line, Measurement, GridSightError, ValidationError,
                    bundled_case, ieee14, load_case, parse_case, validate_case)
from .matching import (BipartiteGraph, HallViolation, Matching, distinct_representatives,
                       left_deficiency, maximum_matching)
from .observability import (SpanningTreeCertificate, UnobservabilityWitness,
                            boundary_injections, build_assignment, reconnectable)
from .critical_sets import (CriticalSet, TreeSplit, all_critical_sets,
                            backup_boundary_injections, critical_set,
                            is_critical_measurement, split_tree)
from .security import (AttackVerdict, CsmGraph, DefensePlan, assess_removal, build_csm_graph,
                       full_defense, sparsest_attack, sparsest_attack_including,
                       structural_verdict, threshold_defense)

__version__ = "0.1.0"
