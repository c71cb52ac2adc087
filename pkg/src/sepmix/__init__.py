"""Simple exclusion process in a random environment on a segment.

Modules
-------
env          environment laws, samples, regime classification
statespace   configurations, partial order, extremal states
graphical    seeded graphical construction, couplings, censoring
exact        generators, stationary and transient laws, mixing times
boundary     boundary driven boxes and the modified segment process
estimate     Monte Carlo estimators and scaling regressions
cli          command line entry point
"""

__version__ = "0.1.0"
