# ---
# File: errori.py
# Directory: sciame/
# Ultima Modifica: 2026-10-17
# Versione: 1.00
# ---

"""Gerarchia delle eccezioni del simulatore."""


class SciameError(Exception):
    pass


class ConfigError(SciameError, ValueError):
    """Configurazione non valida: il messaggio nomina la chiave o il vincolo violato."""


class SingularityError(SciameError, ArithmeticError):
    """Il potenziale originale diverge (d >= r_flock oppure d = 0)."""


class CausalityError(SciameError):
    """Pacchetto con ASN nel futuro rispetto allo stato di credenza."""


class TraceIOError(SciameError, OSError):
    pass
