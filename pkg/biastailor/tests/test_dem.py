"""Unit tests for dem.py."""
from oauth_dropins.webutil import testutil

from .. import circuit
from .. import dem as dem_mod
from ..circuit import MEMORY_H, Instruction, attach_noise, build_xzzx_memory
from ..dem import (
  DecompositionError,
  DemFormatError,
  ErrorMechanism,
  decompose_graphlike,
  extract_dem,
  xor_probability,
)
from ..noisemodel import noise_spec


def with_error(name, qubit, args, rounds=3):
  """Noiseless d=3 memory with a single error inserted before round 1."""
  c = attach_noise(build_xzzx_memory(3, MEMORY_H, rounds), noise_spec(0, 10))
  pos = next(i for i, inst in enumerate(c.instructions) if inst.tick == 8)
  error = Instruction(8, name, (qubit,), args)
  return c._replace(instructions=c.instructions[:pos] + (error,) +
                    c.instructions[pos:])


class DemTest(testutil.TestCase):

  def test_noiseless(self):
    dem = extract_dem(attach_noise(build_xzzx_memory(3, rounds=2),
                                   noise_spec(0, 10)))
    self.assertEqual([], dem.mechanisms)
    self.assertEqual(4 + 8 + 4, dem.num_detectors)
    self.assertEqual(1, dem.num_observables)
    self.assertTrue(dem.graphlike)

  def test_xor_probability(self):
    self.assertAlmostEqual(.18, xor_probability(.1, .1))
    self.assertEqual(.3, xor_probability(.3, 0))
    self.assertAlmostEqual(.5, xor_probability(.5, .2))

  def test_merges_equal_symptoms(self):
    merger = dem_mod._Merger()
    merger.add(.1, [3, 1], [0])
    merger.add(.1, [1, 3], [0])
    merger.add(1e-16, [2], [])
    merger.add(.2, [], [])
    [m] = merger.mechanisms()
    self.assertAlmostEqual(.18, m.probability)
    self.assertEqual(((1, 3), (0,)), m.key())

  def test_unbound_site(self):
    with self.assertRaises(dem_mod.sampler.UnboundNoiseSite):
      extract_dem(build_xzzx_memory(3, rounds=1))

  def test_single_z_error(self):
    dem = extract_dem(with_error(circuit.Z_ERROR, 4, (.01,)))
    [m] = dem.mechanisms
    self.assertEqual(.01, m.probability)
    self.assertEqual(2, len(m.detectors))
    self.assertEqual((0,), m.observables)
    self.assertTrue(dem.graphlike)

  def test_y_error_decomposes(self):
    dem = extract_dem(with_error(circuit.PAULI_CHANNEL_1, 4, (0, .01, 0)))
    [y] = dem.mechanisms
    self.assertEqual(4, len(y.detectors))
    self.assertEqual((0,), y.observables)
    self.assertFalse(dem.graphlike)
    self.assertEqual(2, len(y.parts))

    split = decompose_graphlike(dem)
    self.assertTrue(split.graphlike)
    self.assertEqual(2, len(split.mechanisms))
    dets, obs = set(), set()
    for m in split.mechanisms:
      self.assertEqual(2, len(m.detectors))
      self.assertEqual(.01, m.probability)
      dets ^= set(m.detectors)
      obs ^= set(m.observables)
    self.assertEqual(set(y.detectors), dets)
    self.assertEqual(set(y.observables), obs)

  def test_decomposes_full_memory(self):
    dem = extract_dem(attach_noise(build_xzzx_memory(5, rounds=5),
                                   noise_spec(.01, 10)))
    self.assertFalse(dem.graphlike)
    split = decompose_graphlike(dem)
    self.assertTrue(split.graphlike)
    self.assertEqual(dem.num_detectors, split.num_detectors)
    for m in split.mechanisms:
      self.assertLessEqual(len(m.detectors), 2)
      self.assertTrue(0 < m.probability <= .5, m)

  def test_decompose_graphlike_is_identity(self):
    dem = extract_dem(with_error(circuit.Z_ERROR, 4, (.01,)))
    self.assertIs(dem, decompose_graphlike(dem))

  def test_decompose_by_search(self):
    dem = dem_mod.parse('detectors 4\nobservables 1\n'
                        'error(0.1) D0 D1\nerror(0.2) D2 L0\nerror(0.05) D3\n'
                        'error(0.01) D0 D1 D2 D3 L0\n')
    split = decompose_graphlike(dem)
    probs = {m.key(): m.probability for m in split.mechanisms}
    self.assertEqual(3, len(probs))
    self.assertAlmostEqual(xor_probability(.1, .01), probs[((0, 1), ())])
    self.assertAlmostEqual(xor_probability(.2, .01), probs[((2,), (0,))])
    self.assertAlmostEqual(xor_probability(.05, .01), probs[((3,), ())])

  def test_decompose_prefers_known_edges(self):
    dem = dem_mod.DetectorErrorModel(3, 0, [
      ErrorMechanism(.1, [0], []),
      ErrorMechanism(.1, [1], []),
      ErrorMechanism(.1, [0, 1], []),
      ErrorMechanism(.1, [2], []),
      ErrorMechanism(.01, [0, 1, 2], [], parts=(((0, 1), ()), ((2,), ()))),
    ], False)
    keys = set(m.key() for m in decompose_graphlike(dem).mechanisms)
    self.assertEqual({((0,), ()), ((1,), ()), ((0, 1), ()), ((2,), ())}, keys)

  def test_decompose_failure(self):
    dem = dem_mod.parse('detectors 3\nobservables 0\nerror(0.1) D0 D1 D2\n')
    with self.assertRaises(DecompositionError):
      decompose_graphlike(dem)

    # the D2 part is not caused by any error on its own
    dem = dem_mod.DetectorErrorModel(3, 0, [
      ErrorMechanism(.1, [0, 1], []),
      ErrorMechanism(.01, [0, 1, 2], [], parts=(((0, 1), ()), ((2,), ()))),
    ], False)
    with self.assertRaises(DecompositionError):
      decompose_graphlike(dem)

  def test_text_round_trip(self):
    dem = decompose_graphlike(extract_dem(attach_noise(
      build_xzzx_memory(3, rounds=3), noise_spec(.003, 100))))
    parsed = dem_mod.parse(dem_mod.to_text(dem))
    self.assertEqual(dem.num_detectors, parsed.num_detectors)
    self.assertEqual(dem.num_observables, parsed.num_observables)
    self.assertTrue(parsed.graphlike)
    self.assertEqual([(m.probability, m.key()) for m in dem.mechanisms],
                     [(m.probability, m.key()) for m in parsed.mechanisms])

  def test_parse_errors(self):
    for text in ('error(0.1) D0',
                 'detectors 2\nobservables 1\nerror(x) D0',
                 'detectors 2\nobservables 1\nerror(2) D0',
                 'detectors 2\nobservables 1\nerror(0.1) D5',
                 'detectors 2\nobservables 1\nerror(0.1) L1',
                 'detectors 2\nobservables 1\nbogus'):
      with self.assertRaises(DemFormatError):
        dem_mod.parse(text)
