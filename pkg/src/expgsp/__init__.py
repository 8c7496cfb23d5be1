"""Exploratory position auctions (Exp-GSP, Exp-Laddered) and their analysis."""

from .core import (AuctionInstance, Bidder, CtrMatrix, ExploreConfig, PositionCurve,
                   ValidationReport, is_sne_safe, k_tilde, validate_instance)
from .effective_ctr import (EffectiveCtrMatrix, EffectiveCurve, effective_ctr_matrix,
                            effective_position_ctrs, schedule_oracle_effective_ctrs,
                            theta_differences)
from .equilibrium import (Analysis, BidProfile, analyze_gsp, analyze_laddered,
                          cost_of_uncertainty, cou_bound, cou_bound_truthful, efficiency,
                          efficiency_loss_bound, expected_revenue, max_sne_bids, min_sne_bids,
                          user_experience, verify_sne)
from .estimation import (ClickLog, confidence_radius, coverage_test, estimate_relevance,
                         estimate_valuation, estimation_report, required_phases,
                         simulate_phases)
from .mechanisms import (AllocationSchedule, build_schedule, gsp_prices, laddered_prices,
                         rank_bidders, run_laddered)
from .scenario import RUNNING_EXAMPLE, Scenario, ScenarioError

__version__ = "0.1.0"
