"""Classical randomized estimation of normalized Betti numbers.

Submodules:
    operators  penalized squared Dirac operator and one-sparse decomposition
    paths      closed eigenvector paths, thermal weights, Metropolis-Hastings
    estimator  the sampling algorithm, Trotter slicing, variance diagnostics
"""
