"""Simulatore di sciami robotici con rete TSCH/RRSF e modelli di propagazione RF."""

__version__ = "1.40"
