# -*- coding: utf-8 -*-
import math

from django.test import SimpleTestCase

import numpy as np

from vsi_intent import numeric as nm
from vsi_intent.exceptions import DimensionError, InvalidMaskError, NonFiniteError


def analytic_grads(f, params):
    with nm.ComputationTape() as tape:
        loss = f(params)
    return tape.backward(loss, params)


class NumericTestCase(SimpleTestCase):

    def assertGradientsAgree(self, f, params, tolerance=1e-6):
        analytic = analytic_grads(f, params)
        numeric = nm.finite_difference_grad(f, params)
        self.assertLess(nm.max_relative_error(analytic, numeric), tolerance)


class SoftmaxTestCase(NumericTestCase):

    def test_uniform_row(self):
        probs = nm.softmax_rows([[0.0, 0.0]]).data
        np.testing.assert_allclose(probs, [[0.5, 0.5]])

    def test_large_logits_stay_finite(self):
        probs = nm.softmax_rows([[1000.0, 0.0]]).data
        self.assertTrue(np.all(np.isfinite(probs)))
        self.assertEqual(probs[0, 0], 1.0)
        self.assertLess(probs[0, 1], 1e-300)

    def test_matches_closed_form(self):
        probs = nm.softmax_rows([[1.0, 2.0, 3.0]]).data[0]
        norm = math.exp(1) + math.exp(2) + math.exp(3)
        expected = [math.exp(1) / norm, math.exp(2) / norm, math.exp(3) / norm]
        np.testing.assert_allclose(probs, expected, rtol=1e-12)
        self.assertAlmostEqual(probs.sum(), 1.0, places=12)

    def test_masked_entries_are_exact_zero(self):
        probs = nm.softmax_rows([[5.0, 1.0, 2.0]], mask=[[True, False, True]]).data[0]
        self.assertEqual(probs[1], 0.0)
        norm = math.exp(5) + math.exp(2)
        self.assertAlmostEqual(probs[0], math.exp(5) / norm, places=12)

    def test_mask_broadcasts_over_rows(self):
        scores = np.zeros((2, 3, 3))
        mask = np.array([[True, True, False], [True, False, False]])[:, None, :]
        probs = nm.softmax_rows(scores, mask=mask).data
        np.testing.assert_allclose(probs[0], np.tile([0.5, 0.5, 0.0], (3, 1)))
        np.testing.assert_allclose(probs[1], np.tile([1.0, 0.0, 0.0], (3, 1)))

    def test_fully_masked_row_fails(self):
        with self.assertRaises(InvalidMaskError):
            nm.softmax_rows([[1.0, 2.0]], mask=[[False, False]])

    def test_gradient(self):
        params = {'x': nm.parameter([[0.3, -1.2, 0.8], [2.0, 0.1, -0.4]], 'x')}
        weights = nm.Tensor([[1.0, 2.0, -3.0], [0.5, -1.0, 4.0]])

        def f(p):
            return nm.sum_all(nm.mul(nm.softmax_rows(p['x']), weights))

        self.assertGradientsAgree(f, params)


class MatmulTestCase(NumericTestCase):

    def test_matches_triple_loop(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(4, 5))
        b = rng.normal(size=(5, 3))
        expected = np.zeros((4, 3))
        for i in range(4):
            for j in range(3):
                for k in range(5):
                    expected[i, j] += a[i, k] * b[k, j]
        np.testing.assert_allclose(nm.matmul(a, b).data, expected, atol=1e-12)

    def test_batched_against_shared_matrix(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=(2, 3, 4))
        b = rng.normal(size=(4, 2))
        out = nm.matmul(a, b).data
        for index in range(2):
            np.testing.assert_allclose(out[index], a[index] @ b, atol=1e-12)

    def test_inner_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            nm.matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_batch_axes_mismatch(self):
        with self.assertRaises(DimensionError):
            nm.matmul(np.ones((2, 3, 4)), np.ones((3, 4, 2)))

    def test_linearity(self):
        rng = np.random.default_rng(5)
        a, b, c = rng.normal(size=(3, 4)), rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
        left = nm.matmul(nm.add(nm.scale(a, 2.0), b), c).data
        right = 2.0 * nm.matmul(a, c).data + nm.matmul(b, c).data
        np.testing.assert_allclose(left, right, atol=1e-12)

    def test_gradient(self):
        rng = np.random.default_rng(6)
        params = {
            'a': nm.parameter(rng.normal(size=(2, 3, 4)), 'a'),
            'b': nm.parameter(rng.normal(size=(4, 2)), 'b'),
        }

        def f(p):
            return nm.sum_all(nm.mul(nm.matmul(p['a'], p['b']), nm.matmul(p['a'], p['b'])))

        self.assertGradientsAgree(f, params)


class ElementwiseTestCase(NumericTestCase):

    def test_relu(self):
        np.testing.assert_array_equal(nm.relu([[-1.0, 0.0, 2.5]]).data, [[0.0, 0.0, 2.5]])

    def test_gelu_reference_points(self):
        values = nm.gelu([[0.0, 1.0, -1.0]]).data[0]
        self.assertEqual(values[0], 0.0)
        self.assertAlmostEqual(values[1], 0.841192, places=5)
        self.assertAlmostEqual(values[2], -0.158808, places=5)

    def test_rowwise_broadcast(self):
        out = nm.add(np.zeros((2, 3)), [1.0, 2.0, 3.0]).data
        np.testing.assert_array_equal(out, [[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])

    def test_broadcast_rejects_columns(self):
        with self.assertRaises(DimensionError):
            nm.add(np.zeros((2, 3)), np.zeros(2))

    def test_non_finite_result(self):
        with np.errstate(over='ignore'), self.assertRaises(NonFiniteError):
            nm.scale([[1e308]], 10.0)

    def test_square_gradient(self):
        params = {'x': nm.parameter([1.5, -2.0, 0.25], 'x')}
        grads = analytic_grads(lambda p: nm.sum_all(nm.mul(p['x'], p['x'])), params)
        np.testing.assert_allclose(grads['x'].data, [3.0, -4.0, 0.5])

    def test_gelu_and_relu_gradients(self):
        params = {'x': nm.parameter([[0.7, -1.3, 2.1], [-0.2, 0.4, -2.5]], 'x')}

        def f(p):
            return nm.sum_all(nm.add(nm.gelu(p['x']), nm.scale(nm.relu(p['x']), 3.0)))

        self.assertGradientsAgree(f, params)


class ShapeOpsTestCase(NumericTestCase):

    def test_permute_reshape_roundtrip(self):
        x = np.arange(24, dtype=float).reshape(2, 3, 4)
        heads = nm.permute(nm.reshape(x, (2, 3, 2, 2)), (0, 2, 1, 3))
        self.assertEqual(heads.shape, (2, 2, 3, 2))
        back = nm.reshape(nm.permute(heads, (0, 2, 1, 3)), (2, 3, 4))
        np.testing.assert_array_equal(back.data, x)

    def test_concat_and_slice(self):
        a = np.ones((2, 3, 4))
        b = np.zeros((2, 1, 4))
        joined = nm.concat_rows(a, b)
        self.assertEqual(joined.shape, (2, 4, 4))
        np.testing.assert_array_equal(nm.slice_rows(joined, 3, 4).data, b)
        with self.assertRaises(DimensionError):
            nm.concat_rows(a, np.zeros((2, 1, 3)))

    def test_take_rows_out_of_range(self):
        with self.assertRaises(DimensionError):
            nm.take_rows(np.zeros((3, 2)), [[0, 3]])

    def test_shape_op_gradients(self):
        rng = np.random.default_rng(7)
        params = {
            'table': nm.parameter(rng.normal(size=(5, 4)), 'table'),
            'extra': nm.parameter(rng.normal(size=(2, 1, 4)), 'extra'),
            'right': nm.parameter(rng.normal(size=(2, 4, 3)), 'right'),
        }
        ids = np.array([[1, 4, 1], [0, 2, 3]])
        weights = rng.normal(size=(2, 3, 4))

        def f(p):
            rows = nm.concat_rows(nm.take_rows(p['table'], ids), p['extra'])
            wide = nm.concat_cols(rows, p['right'])
            heads = nm.permute(nm.reshape(wide, (2, 4, 7, 1)), (0, 2, 1, 3))
            flat = nm.reshape(nm.permute(heads, (0, 2, 1, 3)), (2, 4, 7))
            cut = nm.slice_rows(nm.transpose(nm.transpose(flat)), 1, 4)
            return nm.sum_all(nm.mul(nm.slice_rows(cut, 0, 3), np.concatenate([weights, weights[..., :3]], -1)))

        self.assertGradientsAgree(f, params)


class ReductionTestCase(NumericTestCase):

    def test_layer_norm_statistics(self):
        x = np.array([[1.0, 2.0, 3.0, 6.0]])
        out = nm.layer_norm(x, np.ones(4), np.zeros(4)).data[0]
        self.assertAlmostEqual(out.mean(), 0.0, places=12)
        self.assertAlmostEqual(out.var(), 1.0, places=4)

    def test_layer_norm_gradient(self):
        rng = np.random.default_rng(8)
        params = {
            'x': nm.parameter(rng.normal(size=(2, 3, 5)), 'x'),
            'gain': nm.parameter(rng.normal(size=5), 'gain'),
            'bias': nm.parameter(rng.normal(size=5), 'bias'),
        }
        weights = rng.normal(size=(2, 3, 5))

        def f(p):
            return nm.sum_all(nm.mul(nm.layer_norm(p['x'], p['gain'], p['bias']), weights))

        self.assertGradientsAgree(f, params)

    def test_masked_mean_ignores_masked_rows(self):
        x = np.array([[[1.0, 2.0], [3.0, 4.0], [1e6, -1e6]]])
        out = nm.masked_mean_rows(x, [[True, True, False]]).data
        np.testing.assert_allclose(out, [[2.0, 3.0]])

    def test_masked_mean_empty_mask(self):
        with self.assertRaises(InvalidMaskError):
            nm.masked_mean_rows(np.zeros((1, 2, 2)), [[False, False]])

    def test_cross_entropy_gradient(self):
        rng = np.random.default_rng(9)
        params = {'logits': nm.parameter(rng.normal(size=(4, 2)), 'logits')}
        labels = [0, 1, 1, 0]
        self.assertGradientsAgree(lambda p: nm.softmax_cross_entropy(p['logits'], labels), params)

    def test_cross_entropy_label_range(self):
        with self.assertRaises(DimensionError):
            nm.softmax_cross_entropy(np.zeros((2, 2)), [0, 2])


class TapeTestCase(SimpleTestCase):

    def test_backward_needs_scalar(self):
        x = nm.parameter([1.0, 2.0], 'x')
        with nm.ComputationTape() as tape:
            y = nm.mul(x, x)
        with self.assertRaises(DimensionError):
            tape.backward(y)

    def test_unused_parameter_gets_zero_gradient(self):
        params = {'x': nm.parameter([1.0, 2.0], 'x'), 'unused': nm.parameter([[3.0]], 'unused')}
        grads = analytic_grads(lambda p: nm.sum_all(p['x']), params)
        np.testing.assert_array_equal(grads['unused'].data, [[0.0]])
        np.testing.assert_array_equal(grads['x'].data, [1.0, 1.0])

    def test_no_recording_outside_tape(self):
        tape = nm.ComputationTape()
        x = nm.parameter([1.0], 'x')
        nm.mul(x, x)
        self.assertEqual(len(tape), 0)
        with tape:
            nm.mul(x, x)
        self.assertEqual(len(tape), 1)
        self.assertIsNone(nm.current_tape())

    def test_leaves_in_first_use_order(self):
        a = nm.parameter([1.0], 'a')
        b = nm.parameter([2.0], 'b')
        with nm.ComputationTape() as tape:
            loss = nm.sum_all(nm.add(nm.mul(b, b), a))
        self.assertEqual(list(tape.leaves()), ['b', 'a'])
        grads = tape.backward(loss)
        self.assertEqual(grads['b'].data[0], 4.0)

    def test_backward_is_linear_in_the_loss(self):
        rng = np.random.default_rng(11)
        params = {
            'w': nm.parameter(rng.normal(size=(3, 4)), 'w'),
            'v': nm.parameter(rng.normal(size=(4, 2)), 'v'),
        }

        def first(p):
            return nm.sum_all(nm.relu(nm.matmul(p['w'], p['v'])))

        def second(p):
            hidden = nm.gelu(nm.matmul(p['w'], p['v']))
            return nm.sum_all(nm.mul(hidden, hidden))

        combined = analytic_grads(lambda p: nm.add(first(p), second(p)), params)
        separate = [analytic_grads(first, params), analytic_grads(second, params)]
        for name in params:
            np.testing.assert_allclose(
                combined[name].data, separate[0][name].data + separate[1][name].data, rtol=1e-12, atol=1e-12)
