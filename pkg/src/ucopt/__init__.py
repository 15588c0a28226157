"""Neural-network online optimal control of ultra-capacitor charge/discharge.

Submodules: ``plant`` (UC dynamics), ``optctl`` (analytic robust optimal
control and HJB oracle), ``critic`` (online value-function learner),
``baselines`` (constant-current and P/PI controllers), ``sim`` (closed-loop
DC-bus simulation) and ``cli`` (config-driven runs and reports).
"""

__version__ = "0.1.0"
