"""k3cm: exact-arithmetic workbench for quadratic-form invariants,
totally real cubic fields, K3 transcendental lattices with complex
multiplication, and Kuga-Satake Clifford-algebra rank computations."""

__version__ = "0.1.0"
