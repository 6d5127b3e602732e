"""Proximal kernels and least squares baselines."""