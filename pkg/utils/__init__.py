"""
Utilidades compartidas
"""

