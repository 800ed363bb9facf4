"""Built-in catalog entries, in the same schema that user entry files use."""

from __future__ import annotations

_SL2_CONSTANTS = [
    {"pair": [1, 2], "coefficients": [1, 0, 0]},
    {"pair": [1, 3], "coefficients": [0, 2, 0]},
    {"pair": [2, 3], "coefficients": [0, 0, 1]},
]

FREE_PARTICLE = {
    "name": "free",
    "title": "free particle x'' = 0",
    "levels": [["x"], ["v"]],
    "rhs": ["0"],
    "sampling": {"x": [-1, 1], "v": [0.3, 1.5]},
    "t_span": [0, 2],
    "basis": [{"name": "X1", "components": ["v", "0"]}],
    "decomposition": [["1", "X1"]],
    "expected": {"closure": "closed", "dimension": 1, "min_m": 1, "general_rule": True},
    "rules": [
        {
            "name": "row1",
            "kind": "general",
            "m": 1,
            "constants": ["k1", "k2"],
            "components": ["v_(1)*(k1*x_(1) + k2)"],
            "constraints": ["abs(v_(1))"],
            "note": "uses the velocity of the particular solution",
        },
        {"name": "row1-partial", "kind": "partial", "m": 1, "constants": ["k1"], "components": ["x_(1) + k1"],
         "k_box": [[-2, 2]]},
    ],
    "provenance": "first row of the table of superposition rules for autonomous and t-dependent second-order examples",
}

T_V2 = {
    "name": "tv2",
    "title": "x'' = t (x')^2",
    "levels": [["x"], ["v"]],
    "rhs": ["t*v^2"],
    "sampling": {"x": [-1, 1], "v": [-0.5, 0.5]},
    "t_span": [0, 1.5],
    "expected": {"closure": "exceeded", "general_rule": False},
    "rules": [
        {"name": "row2-partial", "kind": "partial", "m": 1, "constants": ["k1"], "components": ["x_(1) + k1"],
         "k_box": [[-2, 2]]},
    ],
    "provenance": "second row of the rules table: no superposition rule, only a partial one",
}

T2_V = {
    "name": "t2v",
    "title": "x'' = t^2 x'",
    "levels": [["x"], ["v"]],
    "rhs": ["t^2*v"],
    "sampling": {"x": [-1, 1], "v": [0.3, 1.5]},
    "t_span": [0, 1.5],
    "basis": [{"name": "X1", "components": ["v", "0"]}, {"name": "X2", "components": ["0", "v"]}],
    "decomposition": [["1", "X1"], ["t^2", "X2"]],
    "expected": {"closure": "closed", "dimension": 2, "min_m": 1, "general_rule": True},
    "rules": [
        {"name": "row3", "kind": "general", "m": 1, "constants": ["k1", "k2"], "components": ["k1*x_(1) + k2"],
         "constraints": ["abs(v_(1))"]},
        {"name": "row3-partial", "kind": "partial", "m": 1, "constants": ["k1"], "components": ["k1*x_(1)"],
         "k_box": [[-2, 2]]},
    ],
    "provenance": "third row of the rules table",
}

T2 = {
    "name": "t2",
    "title": "x'' = t^2",
    "levels": [["x"], ["v"]],
    "rhs": ["t^2"],
    "sampling": {"x": [-1, 1], "v": [-1, 1]},
    "t_span": [0, 2],
    "basis": [{"name": "X1", "components": ["v", "0"]}, {"name": "X2", "components": ["0", "1"]}],
    "decomposition": [["1", "X1"], ["t^2", "X2"]],
    "expected": {"closure": "closed", "dimension": 3, "min_m": 2, "general_rule": True},
    "rules": [
        {"name": "two-positions", "kind": "general", "m": 2, "constants": ["k1", "k2"],
         "components": ["k1*(x_(1) - x_(2)) + x_(1) + k2"], "constraints": ["abs(v_(1) - v_(2))"]},
        {"name": "two-jets", "kind": "general", "m": 2, "constants": ["k1", "k2"],
         "components": ["k1*(v_(1) - v_(2))*(x_(1) - x_(2)) + x_(1) + k2*(v_(1) - v_(2))"],
         "constraints": ["abs(v_(1) - v_(2))"]},
        {"name": "shift", "kind": "partial", "m": 1, "constants": ["k1"], "components": ["x_(1) + k1"],
         "k_box": [[-2, 2]]},
        {"name": "difference", "kind": "partial", "m": 2, "constants": ["k"], "components": ["(x_(1) - x_(2))*k + x_(1)"],
         "constraints": ["abs(v_(1) - v_(2))"], "k_box": [[-2, 2]]},
    ],
    "provenance": "worked example x'' = t^2 with its one- and two-solution rules and partial rules",
}

OSCILLATOR = {
    "name": "oscillator",
    "title": "harmonic oscillator with time-dependent frequency, x'' = -w2(t) x",
    "levels": [["x"], ["v"]],
    "functions": {"w2": "1 + t^2"},
    "rhs": ["-w2*x"],
    "sampling": {"x": [-1, 1], "v": [-1, 1]},
    "t_span": [0, 1.5],
    "basis": [
        {"name": "X1", "components": ["v", "0"]},
        {"name": "X2", "components": ["x/2", "-v/2"]},
        {"name": "X3", "components": ["0", "-x"]},
    ],
    "extra_fields": [{"name": "DeltaL", "components": ["0", "v"]}],
    "decomposition": [["1", "X1"], ["w2", "X3"]],
    "expected": {"closure": "closed", "dimension": 3, "structure": _SL2_CONSTANTS, "min_m": 2,
                 "with_extra_dimension": 4},
    "rules": [
        {"name": "linear", "kind": "base", "m": 2, "constants": ["k1", "k2"],
         "components": ["k1*x_(1) + k2*x_(2)"], "constraints": ["abs(x_(1)*v_(2) - x_(2)*v_(1))"]},
        {"name": "linear-jet", "kind": "first_order", "m": 2, "constants": ["k1", "k2"],
         "components": ["k1*x_(1) + k2*x_(2)", "k1*v_(1) + k2*v_(2)"],
         "constraints": ["abs(x_(1)*v_(2) - x_(2)*v_(1))"]},
    ],
    "provenance": "isotropic harmonic oscillator (n = 1): sl(2) Vessiot-Guldberg algebra, gl(2) once the Liouville field is added",
}

MILNE_PINNEY = {
    "name": "mp",
    "title": "Milne-Pinney equation x'' = -w(t)^2 x + c/x^3",
    "levels": [["x"], ["v"]],
    "parameters": {"c": 1},
    "functions": {"w": "1 + 3/10*sin(t)"},
    "rhs": ["-w^2*x + c/x^3"],
    "constraints": ["x", "20 - x"],
    "sampling": {"x": [0.5, 1.5], "v": [-0.5, 0.5]},
    "t_span": [0, 2],
    "basis": [
        {"name": "X1", "components": ["v", "c/x^3"]},
        {"name": "X2", "components": ["x/2", "-v/2"]},
        {"name": "X3", "components": ["0", "-x"]},
    ],
    "decomposition": [["1", "X1"], ["w^2", "X3"]],
    "expected": {"closure": "closed", "dimension": 3, "structure": _SL2_CONSTANTS, "min_m": 2},
    "definitions": [
        ["W", "v_(1)*x_(2) - v_(2)*x_(1)"],
        ["I3", "W^2 + c*((x_(1)/x_(2))^2 + (x_(2)/x_(1))^2)"],
        ["lam", "(c*(1 - k1^2 - k2^2) - k1*k2*I3)/(4*c^2 - I3^2)"],
    ],
    "integrals": [{"name": "I3", "expr": "I3"}],
    "rules": [
        {
            "name": "mp",
            "kind": "general",
            "m": 2,
            "constants": ["k1", "k2"],
            "branches": ["s"],
            "components": ["sqrt(k1*x_(1)^2 + k2*x_(2)^2 + 2*s*sqrt(lam)*W*x_(1)*x_(2))"],
            "constraints": ["I3 - 2*c"],
            "note": "the square root of the perfect square under the inner radical is taken as the smooth signed root",
        },
        {
            "name": "mp-qb",
            "kind": "quasi_base",
            "m": 2,
            "constants": ["k1", "k2"],
            "branches": ["s"],
            "aux": ["I3"],
            "components": ["sqrt(k1*x_(1)^2 + k2*x_(2)^2 + 2*s*sqrt(lam*(I3*x_(1)^2*x_(2)^2 - c*(x_(1)^4 + x_(2)^4))))"],
            "constraints": ["I3 - 2*c"],
        },
    ],
    "provenance": "Milne-Pinney equation; quasi-base superposition rule through the constant of motion I3",
}

DISSIPATIVE_MP = {
    "name": "dmp",
    "title": "dissipative Milne-Pinney equation, F(t) = t, w = 1, c = 1, in the reparametrised time",
    "levels": [["x"], ["v"]],
    "parameters": {"c": 1},
    "functions": {"E": "1/(1 + t)", "Fp": "1", "w": "1"},
    "rhs": ["-Fp*E*v - w^2*E^2*x + c*E^2/x^3"],
    "constraints": ["x", "20 - x"],
    "sampling": {"x": [0.5, 1.5], "v": [-0.5, 0.5]},
    "t_span": [0, 2],
    "expected": {"closure": "exceeded"},
    "definitions": [["W", "v_(1)*x_(2) - v_(2)*x_(1)"]],
    "integrals": [
        {"name": "I3mod", "expr": "W^2/E^2 + c*((x_(1)/x_(2))^2 + (x_(2)/x_(1))^2)",
         "note": "time-dependent; conserved along pairs of solutions"},
    ],
    "provenance": "Milne-Pinney equation after the time change tau = integral of exp(F); not a SODE Lie system",
}

_GAMMA = "(v_({a})*x_({b}) - v_({b})*x_({a}))^2/(x_({a})^3*x_({b})^3) + 4*b0*(x_({a})^2 + x_({b})^2)/(x_({a})*x_({b}))"

KUMMER_SCHWARZ_2 = {
    "name": "ks2",
    "title": "second-order Kummer-Schwarz equation x'' = 3/2 x'^2/x - 2 b0 x^3 + 2 a0(t) x",
    "levels": [["x"], ["v"]],
    "parameters": {"b0": -1},
    "functions": {"a0": "sin(t)"},
    "rhs": ["3/2*v^2/x - 2*b0*x^3 + 2*a0*x"],
    "constraints": ["x", "50 - x"],
    "sampling": {"x": [0.5, 1.2], "v": [-0.6, 0.6]},
    "t_span": [0, 0.5],
    "basis": [
        {"name": "X1", "components": ["0", "2*x"]},
        {"name": "X2", "components": ["x", "2*v"]},
        {"name": "X3", "components": ["v", "3/2*v^2/x - 2*b0*x^3"]},
    ],
    "decomposition": [["1", "X3"], ["a0", "X1"]],
    "expected": {"closure": "closed", "dimension": 3, "structure": _SL2_CONSTANTS, "min_m": 2},
    "definitions": [
        ["G01", _GAMMA.format(a=0, b=1)],
        ["G02", _GAMMA.format(a=0, b=2)],
        ["G12", _GAMMA.format(a=1, b=2)],
        ["W12", "v_(1)*x_(2) - v_(2)*x_(1)"],
        ["lam2", "256*b0^3 + k1*k2*G12 - 4*b0*(k1^2 + k2^2 + G12^2)"],
    ],
    "integrals": [
        {"name": "Gamma1", "expr": "G01"},
        {"name": "Gamma2", "expr": "G02"},
        {"name": "Gamma3", "expr": "G12"},
    ],
    "rules": [
        {
            "name": "ks2",
            "kind": "general",
            "m": 2,
            "constants": ["k1", "k2"],
            "branches": ["s"],
            "components": [
                "((G12*k1 - 8*b0*k2)*x_(1) + (G12*k2 - 8*b0*k1)*x_(2) + 2*s*sqrt(lam2)*W12/(x_(1)*x_(2)))"
                " / (16*b0*G12 + ((k1*x_(1) - k2*x_(2))^2 - 64*b0^2*(x_(1)^2 + x_(2)^2))/(x_(1)*x_(2)))"
            ],
            "hints": {"k1": "G01", "k2": "G02"},
            "k_box": [[-20, 20], [-20, 20]],
            "char_box": {"k1": [-12, -6], "k2": [-12, -6]},
            "note": "the constant inside lambda enters squared; the on-shell perfect-square root is taken smooth",
        },
        {
            "name": "ks2-qb",
            "kind": "quasi_base",
            "m": 2,
            "constants": ["k1", "k2"],
            "branches": ["s"],
            "aux": ["G12"],
            "components": [
                "((G12*k1 - 8*b0*k2)*x_(1) + (G12*k2 - 8*b0*k1)*x_(2)"
                " + 2*s*sqrt(lam2)*sqrt(G12*x_(1)*x_(2) - 4*b0*(x_(1)^2 + x_(2)^2)))"
                " / (16*b0*G12 + ((k1*x_(1) - k2*x_(2))^2 - 64*b0^2*(x_(1)^2 + x_(2)^2))/(x_(1)*x_(2)))"
            ],
            "hints": {"k1": "G01", "k2": "G02"},
            "k_box": [[-20, 20], [-20, 20]],
        },
    ],
    "provenance": "second-order Kummer-Schwarz equation: sl(2) Vessiot-Guldberg algebra, first integrals Gamma1-Gamma3 and the two-solution superposition rule",
}

KUMMER_SCHWARZ_3 = {
    "name": "ks3",
    "title": "third-order Kummer-Schwarz equation x''' = 3/2 x''^2/x' - 2 b0 x'^3 + 2 a0(t) x'",
    "kind": "hode",
    "levels": [["x"], ["y1"], ["y2"]],
    "parameters": {"b0": -1},
    "functions": {"a0": "cos(t)/5"},
    "rhs": ["3/2*y2^2/y1 - 2*b0*y1^3 + 2*a0*y1"],
    "constraints": ["y1", "50 - y1"],
    "sampling": {"x": [-1, 1], "y1": [0.5, 1.5], "y2": [-1, 1]},
    "t_span": [0, 0.5],
    "basis": [
        {"name": "X1", "components": ["0", "0", "2*y1"]},
        {"name": "X2", "components": ["0", "y1", "2*y2"]},
        {"name": "X3", "components": ["y1", "y2", "3/2*y2^2/y1 - 2*b0*y1^3"]},
    ],
    "decomposition": [["1", "X3"], ["a0", "X1"]],
    "expected": {"closure": "closed", "dimension": 3, "structure": _SL2_CONSTANTS, "min_m": 1},
    "definitions": [
        ["sb", "sqrt(-b0)"],
        ["K1", "y1_(1)/y1_(0)"],
        ["xi", "y1_(0)*y2_(1) - y1_(1)*y2_(0)"],
        ["K2", "y1_(1)^3/xi"],
        ["G1", "(K1^4 + 4*b0*K2^2*(1 + K1^2))/(K1*K2^2)"],
        ["R", "sqrt(4*b0^2*(1 + K1^2) - b0*K1*G1)"],
        ["G2", "(-8*b0*K1 + G1 + 4*R)*exp(-2*x_(1)*sb)"],
        ["G3", "x_(0) - ln(abs(2*sb*K1/(-8*b0 + K1*G1 + 4*R)))/(2*sb)"],
        ["E", "exp(2*sb*x_(1))"],
        ["f", "k1 - E*k2"],
    ],
    "integrals": [
        {"name": "Gamma1", "expr": "G1"},
        {"name": "Gamma2", "expr": "G2", "valid_when": ["xi"]},
        {"name": "Gamma3", "expr": "G3", "valid_when": ["xi"]},
    ],
    "rules": [
        {
            "name": "ks3",
            "kind": "base",
            "m": 1,
            "constants": ["k1", "k2", "k3"],
            "components": [
                "k3 + ln(abs(2*sb*(64*b0^2 - f^2)"
                "/(64*b0^2*(k1 - 2*E*k2) - k1*f^2 + 8*b0*(64*b0^2 - k1^2 + E^2*k2^2))))/(2*sb)"
            ],
            "constraints": ["xi"],
            "hints": {"k1": "G1", "k2": "G2", "k3": "G3"},
            "k_box": [[-20, 20], [-20, 20], [-5, 5]],
            "note": "valid for b0 < 0 and a positive sign of K2; logarithms of absolute values",
        },
    ],
    "provenance": "third-order Kummer-Schwarz equation as a HODE Lie system with the one-solution superposition rule",
}

BUILTIN_ENTRIES = [
    FREE_PARTICLE,
    T_V2,
    T2_V,
    T2,
    OSCILLATOR,
    MILNE_PINNEY,
    DISSIPATIVE_MP,
    KUMMER_SCHWARZ_2,
    KUMMER_SCHWARZ_3,
]
