import json

import numpy as np
import pytest

from dpnarx.poly import (
    CoupledPolynomial,
    UnivariatePoly,
    eval_coupled,
    eval_uni,
    gradient_coupled,
    hessian_coupled,
    monomial_exponents,
    n_monomials,
)


def naive_eval(p, z):
    # independent oracle: repeated multiplication, no power tables
    total = 0.0
    for exps, c in p.terms:
        term = c
        for k, e in enumerate(exps):
            for _ in range(e):
                term *= z[k]
        total += term
    return total


def random_poly(rng, m=4, degree=3, density=1.0):
    exps = monomial_exponents(m, degree)
    keep = rng.random(len(exps)) < density
    keep[0] = True
    return CoupledPolynomial(m, degree, exps[keep], rng.standard_normal(keep.sum()))


def fd_gradient(f, z, h=1e-5):
    g = np.empty(z.size)
    for k in range(z.size):
        e = np.zeros(z.size)
        e[k] = h
        g[k] = (f(z + e) - f(z - e)) / (2 * h)
    return g


def test_canonical_order_small_case():
    assert monomial_exponents(2, 2).tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]


@pytest.mark.parametrize("m,deg", [(1, 3), (3, 2), (6, 3), (4, 5)])
def test_monomial_count_matches_enumeration(m, deg):
    exps = monomial_exponents(m, deg)
    brute = {e for e in np.ndindex(*([deg + 1] * m)) if sum(e) <= deg}
    assert len(exps) == len(brute) == n_monomials(m, deg)
    assert {tuple(e) for e in exps.tolist()} == brute


def test_single_monomial_product():
    p = CoupledPolynomial.from_terms(2, 2, [((1, 1), 1.0)])
    assert eval_coupled(p, [2.0, 3.0]) == 6.0


def test_constant_polynomial():
    p = CoupledPolynomial.from_terms(3, 3, [((0, 0, 0), 5.0)])
    assert eval_coupled(p, [0.3, -2.0, 9.0]) == 5.0
    assert p.constant_term() == 5.0


def test_zero_vector_gives_constant_term(rng):
    p = random_poly(rng)
    assert eval_coupled(p, np.zeros(4)) == p.coefs[0]


def test_random_poly_matches_naive_oracle(rng):
    p = random_poly(rng)
    for _ in range(20):
        z = rng.uniform(-2, 2, 4)
        ref = naive_eval(p, z)
        assert abs(eval_coupled(p, z) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_matrix_and_pointwise_evaluation_agree(rng):
    p = random_poly(rng)
    Z = rng.standard_normal((7, 4))
    vec = p.evaluate(Z)
    assert vec.shape == (7,)
    assert all(vec[k] == eval_coupled(p, Z[k]) for k in range(7))


def test_dimension_mismatch_raises():
    p = CoupledPolynomial.from_terms(2, 2, [((1, 1), 1.0)])
    with pytest.raises(ValueError):
        eval_coupled(p, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        gradient_coupled(p, [1.0])
    with pytest.raises(ValueError):
        hessian_coupled(p, [1.0])


def test_gradient_trivial_cases():
    p = CoupledPolynomial.from_terms(1, 2, [((2,), 1.0)])
    assert gradient_coupled(p, [3.0]).tolist() == [6.0]
    q = CoupledPolynomial.from_terms(2, 2, [((1, 1), 1.0)])
    assert gradient_coupled(q, [2.0, 5.0]).tolist() == [5.0, 2.0]


def test_gradient_vs_finite_differences(rng):
    p = random_poly(rng)
    for _ in range(10):
        z = rng.uniform(-1, 1, 4)
        g = gradient_coupled(p, z)
        fd = fd_gradient(lambda x: eval_coupled(p, x), z)
        assert np.max(np.abs(g - fd) / (1 + np.abs(g))) < 1e-6


def test_hessian_trivial_cases():
    p = CoupledPolynomial.from_terms(2, 2, [((1, 1), 1.0)])
    assert hessian_coupled(p, [0.7, -3.0]).tolist() == [[0.0, 1.0], [1.0, 0.0]]
    q = CoupledPolynomial.from_terms(1, 3, [((3,), 1.0)])
    assert hessian_coupled(q, [1.5]).tolist() == [[9.0]]


def test_hessian_vs_finite_differences_of_gradient(rng):
    p = random_poly(rng)
    for _ in range(10):
        z = rng.uniform(-1, 1, 4)
        H = hessian_coupled(p, z)
        fd = np.column_stack([fd_gradient(lambda x: gradient_coupled(p, x)[i], z) for i in range(4)])
        assert np.max(np.abs(H - fd)) / (1 + np.abs(H).max()) < 1e-5


def test_hessian_exactly_symmetric(rng):
    p = random_poly(rng, m=5, degree=4)
    H = p.hessian(rng.standard_normal((30, 5)))
    assert np.array_equal(H, H.transpose(0, 2, 1))


def test_gradient_linearity(rng):
    exps = monomial_exponents(3, 3)
    p = CoupledPolynomial(3, 3, exps, rng.standard_normal(len(exps)))
    q = CoupledPolynomial(3, 3, exps, rng.standard_normal(len(exps)))
    a, b = 1.7, -0.4
    comb = CoupledPolynomial(3, 3, exps, a * p.coefs + b * q.coefs)
    z = rng.standard_normal(3)
    lhs = gradient_coupled(comb, z)
    rhs = a * gradient_coupled(p, z) + b * gradient_coupled(q, z)
    assert np.max(np.abs(lhs - rhs)) <= 1e-13 * max(1.0, np.abs(rhs).max())


def test_term_permutation_is_canonicalized(rng):
    p = random_poly(rng, density=0.6)
    terms = list(p.terms)
    rng.shuffle(terms)
    q = CoupledPolynomial.from_terms(4, 3, terms)
    assert np.array_equal(q.exponents, p.exponents)
    z = rng.standard_normal(4)
    assert eval_coupled(q, z) == eval_coupled(p, z)


def test_duplicates_and_disorder_rejected():
    with pytest.raises(ValueError):
        CoupledPolynomial.from_terms(2, 2, [((1, 0), 1.0), ((1, 0), 2.0)])
    with pytest.raises(ValueError):
        CoupledPolynomial(2, 2, np.array([[1, 0], [0, 0]]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        CoupledPolynomial.from_terms(2, 1, [((1, 1), 1.0)])


def test_json_round_trip_bit_exact(rng):
    p = random_poly(rng, density=0.7)
    text = p.to_json()
    q = CoupledPolynomial.from_json(text)
    assert np.array_equal(q.exponents, p.exponents)
    assert np.array_equal(q.coefs, p.coefs)
    data = json.loads(text)
    assert set(data) == {"input_dim", "max_degree", "terms"}
    assert set(data["terms"][0]) == {"exp", "coef"}


def test_json_rejects_non_finite():
    p = CoupledPolynomial.from_terms(1, 1, [((1,), float("nan"))])
    with pytest.raises(ValueError):
        p.to_json()


def test_scaled_polynomial_changes_coordinates(rng):
    p = random_poly(rng)
    s = np.array([2.0, 0.5, 3.0, 1.5])
    q = p.scaled(s, 4.0)
    z = rng.standard_normal(4)
    assert np.isclose(q.evaluate(s * z), p.evaluate(z) / 4.0, rtol=1e-12)


def test_univariate_trivial():
    assert eval_uni(UnivariatePoly([0, 0, 1]), 2.0, 2) == 12.0
    assert eval_uni(UnivariatePoly([2.0]), 3.7, 2) == 0.0
    with pytest.raises(ValueError):
        eval_uni(UnivariatePoly([1.0]), 1.0, 3)
    with pytest.raises(ValueError):
        UnivariatePoly([])


def test_univariate_first_derivative_vs_fd(rng):
    g = UnivariatePoly(rng.standard_normal(8))
    for x in rng.uniform(-1, 1, 10):
        h = 1e-6
        fd = (g(x + h) - g(x - h)) / (2 * h)
        d = eval_uni(g, x, 1)
        assert abs(d - fd) <= 1e-7 * max(1.0, abs(d))


def test_univariate_second_derivative_explicit_form(rng):
    c = rng.standard_normal(6)
    g = UnivariatePoly(c)
    for x in rng.uniform(-2, 2, 10):
        explicit = sum(j * (j - 1) * c[j - 1] * x ** (j - 2) for j in range(2, 7))
        assert abs(eval_uni(g, x, 2) - explicit) <= 1e-13 * max(1.0, abs(explicit))


def test_univariate_derivative_degrees():
    g = UnivariatePoly([1.0, 2.0, 3.0])
    assert g.derivative_coeffs(1).size == 3  # constant .. x^2
    assert g.derivative_coeffs(2).size == 2
    assert UnivariatePoly([1.0]).derivative_coeffs(2).size == 0


def test_univariate_rescaled_input(rng):
    g = UnivariatePoly(rng.standard_normal(4))
    h = g.rescaled_input(-2.5)
    x = rng.standard_normal(5)
    assert np.allclose(h(x), g(-2.5 * x), rtol=1e-13)


def test_univariate_basis_matches_evaluation(rng):
    c = rng.standard_normal(5)
    g = UnivariatePoly(c)
    x = rng.standard_normal(9)
    for order in (0, 1, 2):
        assert np.allclose(g.basis(x, order) @ c, g(x, order), rtol=1e-12, atol=1e-12)
