"""Unit tests for pauli.py."""
from hypothesis import given, settings, strategies as st
from oauth_dropins.webutil import testutil

from .. import pauli
from ..pauli import (
  CNOT,
  CZ,
  H,
  MZ,
  R0,
  DimensionError,
  PauliString,
  UnsupportedGate,
  commutes,
  conjugate,
  gate,
)


def P(label):
  return PauliString.from_label(label)


@st.composite
def paulis(draw, n=None):
  n = n or draw(st.integers(min_value=2, max_value=8))
  return PauliString(n, draw(st.integers(0, (1 << n) - 1)),
                     draw(st.integers(0, (1 << n) - 1)))


@st.composite
def paulis_and_gate(draw):
  a = draw(paulis())
  b = draw(paulis(n=a.n))
  kind = draw(st.sampled_from([H, CNOT, CZ, pauli.X, pauli.Z, pauli.IDLE]))
  if kind in pauli.TWO_QUBIT_GATES:
    targets = draw(st.lists(st.integers(0, a.n - 1), min_size=2, max_size=2,
                            unique=True))
  else:
    targets = [draw(st.integers(0, a.n - 1))]
  return a, b, gate(kind, *targets)


class PauliTest(testutil.TestCase):

  def test_commutes(self):
    self.assertFalse(commutes(P('X'), P('Z')))
    self.assertTrue(commutes(P('ZZ'), P('ZI')))
    self.assertTrue(commutes(P('XZ'), P('ZX')))
    self.assertFalse(commutes(P('XI'), P('YI')))

  def test_commutes_size_mismatch(self):
    with self.assertRaises(DimensionError):
      commutes(P('X'), P('XX'))

  def test_conjugate_cnot(self):
    self.assertEqual(P('XX'), conjugate(gate(CNOT, 0, 1), P('XI')))
    self.assertEqual(P('ZZ'), conjugate(gate(CNOT, 0, 1), P('IZ')))
    self.assertEqual(P('IX'), conjugate(gate(CNOT, 0, 1), P('IX')))

  def test_conjugate_cz(self):
    self.assertEqual(P('XZ'), conjugate(gate(CZ, 0, 1), P('XI')))
    self.assertEqual(P('ZY'), conjugate(gate(CZ, 0, 1), P('IY')))

  def test_conjugate_h(self):
    self.assertEqual(P('Z'), conjugate(gate(H, 0), P('X')))
    self.assertEqual(P('Y'), conjugate(gate(H, 0), P('Y')))

  def test_conjugate_non_unitary(self):
    for kind in R0, MZ:
      with self.assertRaises(UnsupportedGate):
        conjugate(gate(kind, 0), P('X'))

  def test_conjugate_out_of_range(self):
    with self.assertRaises(DimensionError):
      conjugate(gate(CNOT, 0, 3), P('XX'))

  def test_gate_validation(self):
    with self.assertRaises(ValueError):
      gate(CNOT, 1)
    with self.assertRaises(ValueError):
      gate(CZ, 2, 2)
    with self.assertRaises(ValueError):
      gate(H, 0, 1)
    with self.assertRaises(UnsupportedGate):
      gate('SWAP', 0, 1)

  def test_text(self):
    p = PauliString.from_text('X0*Z3*Y5', 6)
    self.assertEqual('XIIZIY', p.label())
    self.assertEqual('X0*Z3*Y5', str(p))
    self.assertEqual('I', str(PauliString(4)))
    self.assertEqual(3, p.weight())
    self.assertEqual([0, 3, 5], p.support())

  def test_identity(self):
    self.assertEqual(0, PauliString(5).weight())
    self.assertTrue(PauliString(5).is_identity())
    self.assertFalse(P('IZI').is_identity())

  def test_z_type(self):
    self.assertTrue(P('ZZ').is_z_type())
    self.assertFalse(P('ZY').is_z_type())
    self.assertFalse(P('II').is_z_type())

  def test_index(self):
    self.assertEqual(0, P('II').index())
    self.assertEqual(3, P('IZ').index())
    self.assertEqual(4, P('XI').index())
    self.assertEqual(15, P('ZZ').index())
    self.assertEqual([p.label() for p in pauli.all_paulis(2)],
                     [PauliString.from_index(i, 2).label() for i in range(16)])

  def test_masks_validated(self):
    with self.assertRaises(DimensionError):
      PauliString(2, x_mask=4)

  def test_multiply(self):
    self.assertEqual(P('YZ'), P('XI') * P('ZZ'))

  @given(paulis_and_gate())
  @settings(max_examples=300)
  def test_conjugate_preserves_commutation(self, args):
    a, b, g = args
    self.assertEqual(commutes(a, b),
                     commutes(conjugate(g, a), conjugate(g, b)))

  @given(paulis_and_gate())
  @settings(max_examples=300)
  def test_conjugate_is_involution(self, args):
    a, _, g = args
    self.assertEqual(a, conjugate(g, conjugate(g, a)))

  @given(paulis_and_gate())
  @settings(max_examples=300)
  def test_conjugate_leaves_other_qubits(self, args):
    a, _, g = args
    out = conjugate(g, a)
    for q in range(a.n):
      if q not in g.targets:
        self.assertEqual(a.letter(q), out.letter(q))
