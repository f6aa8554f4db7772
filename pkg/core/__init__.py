"""
Núcleo de la librería: decomposición, aproximación, privacidad y releases
"""
