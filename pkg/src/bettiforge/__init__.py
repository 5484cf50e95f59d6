"""Exact clique-complex homology, Toffoli cost models, desk-scale quantum
subroutine simulation, and a path-integral Monte Carlo dequantizer for Betti
number estimation.

Modules:
    graphs     graph/point-cloud inputs, generators, clique enumeration
    homology   boundary matrices, Laplacians, Dirac operators, exact Betti
    resources  fault-tolerant Toffoli-cost model and family sweeps
    qsim       simulation of the quantum subroutines (Dicke, walk, filter, QAE)
    dequant    penalized-operator path-integral Monte Carlo estimator
    cli        command-line interface
"""

__version__ = "0.1.0"
