"""Volume-constrained minimization of the first Dirichlet eigenvalue on a
grid, with free-boundary diagnostics for the optimal eigenfunction."""

__version__ = "0.1.0"
