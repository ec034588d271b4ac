"""percolab: Bernoulli bond percolation on unimodular random rooted graphs.

Critical-probability probes (survival bisection, truncated cluster-size
diagnostics), the boundary-connection functional and its witness search,
mass-transport checking, and local weak convergence experiments, all on
lazily generated rooted graph instances with counter-based randomness.
"""

__version__ = "0.1.0"
