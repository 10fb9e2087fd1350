"""Exact, simulated and limiting statistics of uniformly random mappings,
centred on the deepest cycle (the cycle of the largest component)."""

from .exact import ConnectedLaw, ExactTable, connected_law, enumerate_all, indec_ratio, katz_A
from .graph import (Decomposition, Mapping, MappingStats, cyclic_vertices_bruteforce, decompose,
                    mapping_stats, stats)
from .limits import (DensityTable, LimitTables, build_limit_tables, constant_I, mu_cdf, mu_pdf,
                     nu_limit_cdf, purdom_williams_kappa, ratio_constants, solve_dde)
from .montecarlo import (MomentAccumulator, SimConfig, SimReport, random_mapping, report,
                         run_simulation)
from .special import exp_integral_e1, std_normal_cdf

__version__ = "0.1.0"
