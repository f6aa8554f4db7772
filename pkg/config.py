"""
Configuración de la librería - Variables de entorno y constantes
"""
import os

# ============================================
# VERSIÓN
# ============================================

VERSION = "1.0.0"

# Versión del formato JSON de decomposiciones, releases y reportes
FORMAT_VERSION = 1

# ============================================
# MODO DE PRUEBA
# ============================================

# Único interruptor que permite oráculos sin ruido (escala 0).
# Un release "privado" nunca puede correr sin ruido fuera de este modo.
TEST_MODE = os.getenv("SUBMOD_TEST_MODE", "0") == "1"

# ============================================
# LÍMITES NUMÉRICOS
# ============================================

# Tolerancia absoluta para comparaciones en chequeos estructurales
FLOAT_TOLERANCE = float(os.getenv("SUBMOD_FLOAT_TOLERANCE", "1e-9"))

# Tolerancia de normalización de distribuciones con pesos
NORMALIZATION_TOLERANCE = 1e-12

# Chequeos exhaustivos (2^d máscaras) solo hasta esta dimensión
MAX_EXHAUSTIVE_DIMENSION = int(os.getenv("SUBMOD_MAX_EXHAUSTIVE_DIMENSION", "20"))

# Universo explícito de multiplicative weights: |X| <= 2^22
MAX_MW_UNIVERSE_BITS = int(os.getenv("SUBMOD_MAX_MW_UNIVERSE_BITS", "22"))

# ============================================
# PARÁMETROS POR DEFECTO
# ============================================

# Probabilidad de falla del muestreo por buckets (cota de unión)
DEFAULT_FAILURE_PROBABILITY = float(os.getenv("SUBMOD_FAILURE_PROBABILITY", "0.05"))

# Workers para la estimación de medias por bucket
DEFAULT_WORKERS = int(os.getenv("SUBMOD_WORKERS", "1"))

# Probabilidad de inclusión por defecto de la distribución producto
DEFAULT_INCLUSION_RATE = float(os.getenv("SUBMOD_INCLUSION_RATE", "0.5"))

# Cantidad de bins del histograma de errores del censo
CENSUS_BINS = int(os.getenv("SUBMOD_CENSUS_BINS", "20"))

# ============================================
# LOGGING
# ============================================

LOG_LEVEL = os.getenv("SUBMOD_LOG_LEVEL", "INFO").upper()
