import numpy as np
import pytest

from symflow.matrix_core import (
    eig_sym,
    frobenius_inner,
    max_abs,
    numerical_rank,
    random_skew,
    random_sym,
)
from symflow.poisson import (
    CANONICAL_TOL,
    RankInstabilityError,
    canonical_form,
    canonical_skew_matrix,
    frozen_bracket,
    frozen_casimir_gradients,
    frozen_tensor,
    leaf_dimensions,
    lie_poisson_bracket,
    lie_poisson_casimir_gradients,
    lie_poisson_casimirs,
    lie_poisson_tensor,
    poisson_jacobi_defect,
    rank_certified,
    sym_basis,
    tensor_as_matrix,
)

N2 = canonical_skew_matrix([1.0])


class TestTensors:
    def test_lie_poisson_zero_gradient(self):
        rng = np.random.default_rng(0)
        x, nsk = random_sym(3, rng), random_skew(3, rng)
        assert max_abs(lie_poisson_tensor(x, np.zeros((3, 3)), nsk)) == 0.0

    def test_lie_poisson_generates_flow(self):
        # applying the tensor to the gradient of trace(x^2)/2 gives the flow
        rng = np.random.default_rng(1)
        x, nsk = random_sym(4, rng), random_skew(4, rng)
        x2 = x @ x
        assert max_abs(lie_poisson_tensor(x, x, nsk) - (x2 @ nsk - nsk @ x2)) < 1e-15

    def test_identity_state_reduces_to_frozen(self):
        rng = np.random.default_rng(2)
        y, nsk = random_sym(4, rng), random_skew(4, rng)
        assert max_abs(lie_poisson_tensor(np.eye(4), y, nsk) - frozen_tensor(y, nsk)) < 1e-15

    def test_frozen_zero(self):
        assert max_abs(frozen_tensor(np.zeros((2, 2)), N2)) == 0.0

    def test_frozen_hand_value(self):
        # oracle by direct 2x2 multiplication: YN = [[0,1],[1,0]], NY = [[0,-1],[-1,0]]
        y = np.diag([1.0, -1.0])
        assert np.allclose(frozen_tensor(y, N2), [[0.0, 2.0], [2.0, 0.0]], atol=0, rtol=0)

    def test_frozen_kills_structure_powers(self):
        # gradients N^{k-1} for odd k are frozen Casimirs
        rng = np.random.default_rng(3)
        nsk = random_skew(5, rng)
        for k in (3, 5):
            grad = np.linalg.matrix_power(nsk, k - 1)
            assert max_abs(frozen_tensor(grad, nsk)) <= 1e-15

    def test_results_symmetric(self):
        rng = np.random.default_rng(4)
        x, y, nsk = random_sym(5, rng), random_sym(5, rng), random_skew(5, rng)
        for r in (lie_poisson_tensor(x, y, nsk), frozen_tensor(y, nsk)):
            assert max_abs(r - r.T) < 1e-15


class TestBrackets:
    def test_self_bracket_tiny(self):
        rng = np.random.default_rng(5)
        x, nsk = random_sym(4, rng), random_skew(4, rng)
        g = random_sym(4, rng)
        assert abs(lie_poisson_bracket(g, g, x, nsk)) < 1e-15
        assert abs(frozen_bracket(g, g, nsk)) < 1e-15

    def test_lie_poisson_two_formula_cross_check(self):
        # independent evaluation: -trace[x (f n g - g n f)]
        rng = np.random.default_rng(6)
        for _ in range(10):
            x, nsk = random_sym(4, rng), random_skew(4, rng)
            f, g = random_sym(4, rng), random_sym(4, rng)
            direct = -np.trace(x @ (f @ nsk @ g - g @ nsk @ f))
            assert abs(lie_poisson_bracket(f, g, x, nsk) - direct) <= 1e-12

    def test_frozen_two_formula_cross_check(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            nsk = random_skew(4, rng)
            f, g = random_sym(4, rng), random_sym(4, rng)
            direct = -np.trace(f @ nsk @ g - g @ nsk @ f)
            assert abs(frozen_bracket(f, g, nsk) - direct) <= 1e-12

    def test_antisymmetry(self):
        rng = np.random.default_rng(8)
        x, nsk = random_sym(5, rng), random_skew(5, rng)
        f, g = random_sym(5, rng), random_sym(5, rng)
        assert lie_poisson_bracket(f, g, x, nsk) == pytest.approx(
            -lie_poisson_bracket(g, f, x, nsk), abs=1e-14)
        assert frozen_bracket(f, g, nsk) == pytest.approx(
            -frozen_bracket(g, f, nsk), abs=1e-14)

    def test_casimir_gradient_annihilates_bracket(self):
        rng = np.random.default_rng(9)
        form = canonical_form(canonical_skew_matrix([1.0, 2.0]))
        x = random_sym(4, rng)
        g = random_sym(4, rng)
        for grad in lie_poisson_casimir_gradients(form, x):
            assert abs(lie_poisson_bracket(g, grad, x, form.canonical_skew)) <= 1e-10

    def test_frozen_structure_power_kills_all(self):
        rng = np.random.default_rng(10)
        nsk = random_skew(4, rng)
        grad = np.linalg.matrix_power(nsk, 2)
        for _ in range(5):
            g = random_sym(4, rng)
            assert abs(frozen_bracket(grad, g, nsk)) <= 1e-14


class TestCanonicalForm:
    def test_already_canonical_2x2(self):
        form = canonical_form(N2)
        assert (form.p, form.d) == (1, 0)
        assert np.allclose(form.frequencies, [1.0])

    def test_zero_matrix(self):
        form = canonical_form(np.zeros((3, 3)))
        assert (form.p, form.d) == (0, 3)
        assert max_abs(form.pseudo_inverse) == 0.0
        assert max_abs(form.basis @ form.basis.T - np.eye(3)) < 1e-14

    @pytest.mark.parametrize("n,expected", [(4, (2, 0)), (5, (2, 1)), (7, (3, 1)), (8, (4, 0))])
    def test_generic_rank(self, n, expected):
        rng = np.random.default_rng(n)
        form = canonical_form(random_skew(n, rng))
        assert (form.p, form.d) == expected

    def test_invariants_hold(self):
        rng = np.random.default_rng(11)
        for n in (3, 5, 6, 8):
            nsk = random_skew(n, rng)
            form = canonical_form(nsk)
            q = form.basis
            assert max_abs(q @ q.T - np.eye(n)) <= CANONICAL_TOL
            assert max_abs(q @ nsk @ q.T - form.canonical_skew) <= CANONICAL_TOL
            proj = np.zeros((n, n))
            proj[:2 * form.p, :2 * form.p] = np.eye(2 * form.p)
            rotated = q @ nsk @ q.T
            assert max_abs(form.pseudo_inverse @ rotated - proj) <= CANONICAL_TOL
            assert max_abs(rotated @ form.pseudo_inverse - proj) <= CANONICAL_TOL

    def test_frequencies_sorted_descending(self):
        rng = np.random.default_rng(12)
        form = canonical_form(random_skew(8, rng))
        assert np.all(np.diff(form.frequencies) <= 0)

    def test_rotated_canonical_recovers_frequencies(self):
        rng = np.random.default_rng(13)
        g = rng.standard_normal((5, 5))
        q, _ = np.linalg.qr(g)
        nsk = q @ canonical_skew_matrix([2.0, 1.0], 1) @ q.T
        form = canonical_form((nsk - nsk.T) / 2)
        assert np.allclose(form.frequencies, [2.0, 1.0], atol=1e-12)
        assert (form.p, form.d) == (2, 1)

    def test_equal_frequency_grouping(self):
        form = canonical_form(canonical_skew_matrix([1.0, 1.0]))
        assert form.mode() == "equal"
        assert max_abs(form.basis @ form.skew @ form.basis.T - form.canonical_skew) <= CANONICAL_TOL

    def test_mode_detection(self):
        assert canonical_form(canonical_skew_matrix([1.0, 2.0])).mode() == "distinct"
        assert canonical_form(canonical_skew_matrix([1.0, 1.0, 2.0])).mode() == "mixed"
        assert canonical_form(N2).mode() == "distinct"

    def test_rejects_non_skew(self):
        with pytest.raises(ValueError):
            canonical_form(np.eye(3))

    def test_conjugation_round_trip(self):
        rng = np.random.default_rng(14)
        nsk = random_skew(5, rng)
        form = canonical_form(nsk)
        x = random_sym(5, rng)
        assert max_abs(form.from_canonical(form.to_canonical(x)) - x) < 1e-13


class TestFrozenCasimirs:
    def test_distinct_count(self):
        form = canonical_form(canonical_skew_matrix([1.0, 2.0], 1))
        grads = frozen_casimir_gradients(form, "distinct")
        assert len(grads) == form.p + form.d * (form.d + 1) // 2 == 3

    def test_equal_count(self):
        form = canonical_form(canonical_skew_matrix([1.0, 1.0]))
        grads = frozen_casimir_gradients(form, "equal")
        assert len(grads) == form.p ** 2 == 4

    def test_structural_annihilation_exact(self):
        for freqs, d, mode in ([[1.0, 2.0], 1, "distinct"], [[1.5, 1.5], 2, "equal"]):
            form = canonical_form(canonical_skew_matrix(freqs, d))
            for e in frozen_casimir_gradients(form, mode):
                assert max_abs(frozen_tensor(e, form.canonical_skew)) == 0.0

    def test_linearly_independent(self):
        form = canonical_form(canonical_skew_matrix([1.0, 1.0], 2))
        grads = frozen_casimir_gradients(form, "equal")
        assert numerical_rank([e.ravel() for e in grads], 1e-9) == len(grads)

    def test_mode_mismatch_raises(self):
        form = canonical_form(canonical_skew_matrix([1.0, 2.0]))
        with pytest.raises(ValueError):
            frozen_casimir_gradients(form, "equal")
        with pytest.raises(ValueError):
            frozen_casimir_gradients(form, "other")

    def test_gradients_symmetric(self):
        form = canonical_form(canonical_skew_matrix([1.0, 1.0], 1))
        for e in frozen_casimir_gradients(form, "equal"):
            assert np.array_equal(e, e.T)


class TestLiePoissonCasimirs:
    def test_symbolic_2x2(self):
        # (x core^{-1})^2 = (b^2 - ad) I by direct 2x2 multiplication
        form = canonical_form(N2)
        rng = np.random.default_rng(15)
        for _ in range(5):
            a, b, d = rng.uniform(-2, 2, 3)
            vals = lie_poisson_casimirs(form, np.array([[a, b], [b, d]]))
            assert vals[0] == pytest.approx(b * b - a * d, rel=1e-12)

    def test_zero_state(self):
        form = canonical_form(canonical_skew_matrix([1.0, 2.0]))
        assert np.array_equal(lie_poisson_casimirs(form, np.zeros((4, 4))), np.zeros(2))

    def test_count(self):
        for freqs, d in ([[1.0, 2.0], 0], [[1.0, 2.0], 2], [[3.0], 1]):
            form = canonical_form(canonical_skew_matrix(freqs, d))
            x = random_sym(form.n, np.random.default_rng(0))
            assert len(lie_poisson_casimirs(form, x)) == form.p + form.d * (form.d + 1) // 2

    @pytest.mark.parametrize("freqs,d", [([1.0, 2.0, 3.0], 0), ([1.0, 2.0, 3.0], 2)])
    def test_gradient_annihilation(self, freqs, d):
        # the defining property, at n = 6 with and without a kernel
        rng = np.random.default_rng(16)
        form = canonical_form(canonical_skew_matrix(freqs, d))
        n_can = form.canonical_skew
        for _ in range(5):
            x = random_sym(form.n, rng)
            for g in lie_poisson_casimir_gradients(form, x):
                assert max_abs(lie_poisson_tensor(x, g, n_can)) <= 1e-11

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(17)
        form = canonical_form(canonical_skew_matrix([1.0, 2.0], 1))
        x = random_sym(5, rng)
        grads = lie_poisson_casimir_gradients(form, x)
        h = random_sym(5, rng)
        eps = 1e-6
        fd = (lie_poisson_casimirs(form, x + eps * h) - lie_poisson_casimirs(form, x - eps * h)) / (2 * eps)
        for i, g in enumerate(grads):
            assert fd[i] == pytest.approx(frobenius_inner(g, h), abs=1e-7)

    def test_singular_kernel_block_raises(self):
        form = canonical_form(canonical_skew_matrix([1.0], 1))
        x = np.zeros((3, 3))
        x[0, 0] = 1.0  # kernel block is the zero scalar
        with pytest.raises(ValueError):
            lie_poisson_casimirs(form, x)

    def test_size_mismatch(self):
        form = canonical_form(N2)
        with pytest.raises(ValueError):
            lie_poisson_casimirs(form, np.zeros((3, 3)))


class TestTensorMatrix:
    def test_zero_structure(self):
        rng = np.random.default_rng(18)
        x = random_sym(3, rng)
        assert max_abs(tensor_as_matrix(x, np.zeros((3, 3)), "lie_poisson")) == 0.0

    def test_antisymmetry(self):
        rng = np.random.default_rng(19)
        x, nsk = random_sym(4, rng), random_skew(4, rng)
        for which in ("lie_poisson", "frozen"):
            m = tensor_as_matrix(x, nsk, which)
            assert max_abs(m + m.T) <= 1e-12

    def test_generic_rank_n4(self):
        rng = np.random.default_rng(20)
        x = random_sym(4, rng)
        m = tensor_as_matrix(x, canonical_skew_matrix([1.0, 2.0]), "lie_poisson")
        assert numerical_rank([m[:, j] for j in range(m.shape[1])], 1e-9) == 8

    def test_sym_basis_orthonormal(self):
        basis = sym_basis(3)
        assert len(basis) == 6
        gram = np.array([[frobenius_inner(a, b) for b in basis] for a in basis])
        assert max_abs(gram - np.eye(6)) < 1e-14

    def test_unknown_tensor(self):
        with pytest.raises(ValueError):
            tensor_as_matrix(np.eye(2), N2, "other")


class TestLeafDimensions:
    CASES = [
        ([1.0, 2.0], 0, (8, 8)),
        ([1.0, 1.0], 0, (8, 6)),
        ([2.0, 1.0], 1, (12, 12)),
        ([1.0, 2.0], 2, (16, 16)),
        ([1.0, 1.0], 2, (16, 14)),
    ]

    @pytest.mark.parametrize("freqs,d,expected", CASES)
    def test_closed_form_dimensions(self, freqs, d, expected):
        rng = np.random.default_rng(21)
        form = canonical_form(canonical_skew_matrix(freqs, d))
        x = random_sym(form.n, rng)
        assert leaf_dimensions(form, x) == expected

    def test_codimension_matches_casimir_count(self):
        rng = np.random.default_rng(22)
        for freqs, d in ([[1.0, 2.0], 0], [[2.0, 1.0], 1], [[1.0, 2.0], 2]):
            form = canonical_form(canonical_skew_matrix(freqs, d))
            x = random_sym(form.n, rng)
            dim_lp, _ = leaf_dimensions(form, x)
            sym_dim = form.n * (form.n + 1) // 2
            assert sym_dim - dim_lp == form.p + form.d * (form.d + 1) // 2

    def test_rank_instability_flagged(self):
        # singular values straddling the tolerance decade must not be
        # silently rounded either way
        cols = [np.array([1.0, 0.0]), np.array([0.0, 5e-9])]
        with pytest.raises(RankInstabilityError):
            rank_certified(cols, 1e-9)

    def test_rank_certified_clean_case(self):
        cols = [np.array([1.0, 0.0]), np.array([0.0, 0.5])]
        assert rank_certified(cols, 1e-9) == 2


class TestCompatibility:
    def quadratic_triple(self, n, rng):
        return tuple((random_sym(n, rng), random_sym(n, rng)) for _ in range(3))

    @pytest.mark.parametrize("weights", [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
    def test_jacobi_identity(self, weights):
        rng = np.random.default_rng(23)
        for n in (2, 3, 4, 6):
            for _ in range(5):
                x, nsk = random_sym(n, rng), random_skew(n, rng)
                f, g, h = self.quadratic_triple(n, rng)
                assert poisson_jacobi_defect(x, nsk, f, g, h, weights) <= 1e-10

    def test_pencil_weights(self):
        # any linear combination of the two structures stays Poisson
        rng = np.random.default_rng(24)
        x, nsk = random_sym(4, rng), random_skew(4, rng)
        f, g, h = self.quadratic_triple(4, rng)
        for t in (-2.0, 0.5, 3.0):
            assert poisson_jacobi_defect(x, nsk, f, g, h, (1.0, t)) <= 1e-10
