"""Mixed-degree differential forms, Clifford algebras of V + V*, and their deformation theory."""

__version__ = "0.1.0"
