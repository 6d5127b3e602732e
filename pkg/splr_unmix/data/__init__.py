"""Cube, library and abundance file I/O, run manifests and synthetic data."""