"""
Comandos de la CLI
"""
