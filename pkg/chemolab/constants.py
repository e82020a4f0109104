"""Numerical defaults, file layouts and text templates of the laboratory.


Copyright (c) 2026 The chemolab authors

This file is part of chemolab.

chemolab is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

chemolab is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with chemolab.  If not, see <https://www.gnu.org/licenses/>.
"""

# Linear algebra.
DEFAULT_LINEAR_TOL = 1e-10
KRYLOV_MAX_ITER = 5000
EIGEN_MAX_ITER = 1000
DENSE_BOUNDARY_LIMIT = 64
TRACE_SCAN_POINTS = 41

# Gagliardo-Nirenberg constant estimation.
GN_RANDOM_FIELDS = 200
GN_SEED = 20260

# Newton and fixed-point iterations.
NEWTON_TOL_RESIDUAL = 1e-9
NEWTON_TOL_STEP = 1e-11
NEWTON_MAX_ITER = 50
NEWTON_DAMPING_MIN = 1.0 / 64.0
FP_TOL = 1e-10
FP_MAX_ITER = 500
BRANCH_THRESHOLD = 1e-8
GAMMA_BISECTION_TOL = 1e-12

# Slack of the discrete a priori bounds.
SIGNAL_BOUND_SLACK = 1e-10
DENSITY_BOUND_SLACK = 1e-8
FIXED_POINT_SET_SLACK = 1e-8
EVOLUTION_BOUND_SLACK = 1e-12

# Time stepping and runtime monitors.
DT_SAFETY = 0.45
DT_GROWTH_AFTER = 20
DT_MIN = 1e-12
L1_RELATIVE_TOL = 1e-6
DEFAULT_MONITOR_ALPHA = 0.829
# (resolution, dt) pairs of the monitor tolerance calibration, run up to t = 1.
MONITOR_CALIBRATION_PAIRS = ((21, 0.02), (41, 0.01))
MONITOR_CALIBRATION_GAMMA = 1e-9

# Convergence analysis.
FIT_TRANSIENT_FRACTION = 0.1
FIT_MIN_SAMPLES = 5
INTERPOLATION_EXPONENTS = (2, 4, 32)
CONVERGENCE_TOL = 0.05

# Oracles.
ORACLE_TOL = 1e-10
ORACLE_DIRECTORY = "oracle"

THREADS_ENV_VAR = "CHEMOLAB_THREADS"

TRAJECTORY_COLUMNS = (
    "t", "l1_u", "l2_u", "linf_u", "min_u", "min_v", "max_v",
    "y_sub", "l2_diff_u", "linf_diff_v", "d2_diff_v",
)

CONFIG_ECHO_TEMPLATE = """# chemolab run configuration (effective values, defaults included)
{% for key, value in entries -%}
{{ key }} = {{ value }}
{% endfor -%}
"""

VERIFICATION_SUMMARY_TEMPLATE = """{{ title }}: {{ "PASS" if passed else "FAIL" }}
{% for check in checks -%}
[{{ "ok" if check["pass"] else "FAIL" }}] {{ check["name"] }}: \
{{ "%.6g"|format(check["lhs"]) }} <= {{ "%.6g"|format(check["rhs"]) }} \
(margin {{ "%.3g"|format(check["margin"]) }})
{% endfor -%}
{% for note in notes -%}
note: {{ note }}
{% endfor -%}
"""
