"""
Modelos Pydantic
"""

