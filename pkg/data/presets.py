SAMPLING_PRESETS = {
    "case1": {
        "params": {"center": [1.5, 0.5, 1.0, 1.0], "spread": 0.5},
        "coords": {"center": [0.5, 1.0], "spread": 0.5}
    },
    "case2": {
        "params": {"center": [1.5, 0.3, 1.0, 1.0], "spread": 0.3},
        "coords": {"center": [0.0, 1.0], "spread": 0.5}
    },
    "ay": {
        "params": {"center": [1.0, 0.5, 1.0], "spread": 0.4},
        "coords": {"center": [0.0, 0.0], "spread": 0.7}
    },
    "general2": {
        "params": {"center": [1.5, 0.8], "spread": 0.4},
        "coords": {"center": [1.0, 0.5, 0.5, 1.0], "spread": 0.7}
    },
    "yb3": {
        "params": {"center": [1.0, 0.5], "spread": 0.5},
        "coords": {"center": [0.0, 0.0, 1.0, 1.0], "spread": 0.6}
    },
    "boussinesq": {
        "params": {"center": [1.0], "spread": 0.5},
        "coords": {"center": [0.0, 0.0, 1.0, 1.0], "spread": 0.6}
    },
    "gv": {
        "params": {"center": [1.0], "spread": 0.5},
        "coords": {"center": [0.0, 0.0, 1.0, 1.0], "spread": 0.6}
    },
    "gv-vector": {
        "params": {"center": [1.0], "spread": 0.5},
        "coords": {"center": [0.0, 0.0, 0.0, 0.0], "spread": 0.5}
    }
}

# maps whose coordinates are drawn far from the origin are kept inside this box
SAMPLING_WINDOW = 1e3

# Casimir triples (f0, f1, f2) of named one-parameter leaf families
SURFACE_CURVES = {
    "boussinesq": lambda a: (a ** 3, 3 * a ** 2, 3 * a),
    "gv": lambda a: (-a ** 3, -a ** 2, a)
}

DEFAULT_CURVE_ALPHAS = [1.0, 2.0, 3.0]

DEFAULT_TOLERANCES = {
    "lax": 1e-9,
    "casimir": 1e-9,
    "yb": 1e-9,
    "poisson": 1e-6,
    "involution": 1e-9,
    "integrals": 1e-10,
    "independence": 1e-6,
    "oracle": 1e-8,
    "strong_lax": 1e-8,
    "drift": 1e-8,
    "surface": 1e-9
}
