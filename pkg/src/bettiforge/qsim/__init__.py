"""Desk-scale classical simulation of the quantum subroutines.

Submodules:
    dicke     threshold-based fixed-weight state preparation
    walkenc   explicit block encoding and qubitized walk operator
    filters   Chebyshev eigenvalue filter and its spectral application
    kaiser    Kaiser-window kernel, tails, and amplitude-estimation sampling
    pipeline  end-to-end normalized Betti estimation
"""
