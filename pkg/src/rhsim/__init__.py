"""Desk-scale simulator for multi-sided hammering attacks on DRAM.

The library models combined near (X+-1) and edge (X+-2) aggressor
hammering, the per-cell disturbance thresholds it has to beat, and the
counter-based defenses it tries to stay under.
"""

from .defense import (DefenseState, FrequentItem, GroupCounter, MacPolicy,
                      NrrEvent, PerRowCounter, is_bypassed, nrr_log_csv,
                      observe_activate, parse_defense_config, window_rollover)
from .disturbance import (CalibrationError, ChipClassification, ChipProfile,
                          ExtrapolationWarning, VictimState, calibrate,
                          cell_thresholds, classify_chip, dump_profile,
                          effective_disturbance, expected_flips, load_profile,
                          parse_profile, sample_flips, save_profile)
from .dram import (DramArrayState, DramGeometry, LayoutError, PhysicalMap,
                   RowData, RowId, count_bitflips, init_attack_layout,
                   physical_neighbors)
from .engine import (AttackConfig, CellTarget, CellVerdict, FlipReport,
                     Surface, SurfaceCell, feasibility, feasibility_csv,
                     find_optimal_set, parse_attack_config, run_attack, sweep)
from .profiles import (MFH_ANCHORS, PROFILE_BUILDERS, all_profiles,
                       get_profile, mfh_analytic, mfh_calibrated, mfh_table)
from .trace import (BudgetError, Command, CommandTrace, HammerSchedule,
                    TimingParams, Violation, compile_counter_bypass,
                    hammer_budget, validate_trace)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
