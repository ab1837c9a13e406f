"""Unit tests for noisemodel.py."""
import math
import os
import tempfile

from hypothesis import given, settings, strategies as st
from oauth_dropins.webutil import testutil

from .. import gatechar
from .. import noisemodel
from ..noisemodel import (
  CNOT,
  CZ,
  H,
  HBD_BP_CZ,
  HBD_DEPOL_CZ,
  HBD_RESIDUAL_CNOT,
  IDLE,
  MEAS_X,
  MEAS_Z,
  PREP_X,
  PREP_Z,
  SD,
  SITE_KINDS,
  ModelCoverageError,
  NoiseConfigError,
  ResidualBiasTable,
  channel_for_site,
  noise_spec,
)
from ..pauli import PauliString


def by_label(channel):
  return {e.label(): prob for e, prob in channel.errors()}


class NoiseModelTest(testutil.TestCase):

  def tearDown(self):
    noisemodel._tables.clear()
    super(NoiseModelTest, self).tearDown()

  def test_sd_cnot(self):
    channel = channel_for_site(noise_spec(.003, SD), CNOT)
    self.assertEqual(15, len(by_label(channel)))
    for prob in by_label(channel).values():
      self.assertAlmostEqual(.0002, prob, places=15)

  def test_sd_is_not_eta_half(self):
    sd = by_label(channel_for_site(noise_spec(.01, 'SD'), CZ))
    half = by_label(channel_for_site(noise_spec(.01, .5), CZ))
    self.assertAlmostEqual(.01 / 15, sd['ZZ'])
    self.assertAlmostEqual(.01 / 9, half['ZZ'])
    self.assertAlmostEqual(.01 / 3, by_label(
      channel_for_site(noise_spec(.01, SD), IDLE))['Z'])

  def test_biased_cz(self):
    probs = by_label(channel_for_site(noise_spec(.01, 1000), CZ))
    for label in 'ZI', 'IZ', 'ZZ':
      self.assertAlmostEqual(.0033300, probs.pop(label), places=7)
    self.assertEqual(12, len(probs))
    for prob in probs.values():
      self.assertAlmostEqual(8.325e-7, prob, delta=1e-10)

  def test_biased_cz_eta_one(self):
    probs = by_label(channel_for_site(noise_spec(.001, 1), CZ))
    self.assertAlmostEqual(.001 / 6, probs['ZZ'], places=15)
    self.assertAlmostEqual(.001 / 24, probs['XY'], places=15)

  def test_idle_infinite_bias_limit(self):
    probs = by_label(channel_for_site(noise_spec(.001, 1e9), IDLE))
    self.assertAlmostEqual(.001, probs['Z'], places=10)
    self.assertLess(probs['X'], 1e-12)
    self.assertLess(probs['Y'], 1e-12)

  def test_zero_p_is_identity(self):
    for site in SITE_KINDS:
      self.assertTrue(channel_for_site(noise_spec(0, 10), site).is_identity())

  def test_spam_flips(self):
    spec = noise_spec(.02, 100)
    for site in PREP_Z, MEAS_Z:
      self.assert_equals({'X': .02}, by_label(channel_for_site(spec, site)))
    for site in PREP_X, MEAS_X:
      self.assert_equals({'Z': .02}, by_label(channel_for_site(spec, site)))

  def test_hadamard_always_depolarizing(self):
    self.assertEqual(noisemodel.depolarizing(1, .004),
                     channel_for_site(noise_spec(.004, 1000), H))

  def test_residual_cnot(self):
    spec = noise_spec(.003, 1000, HBD_RESIDUAL_CNOT, eta_cnot=5)
    probs = by_label(channel_for_site(spec, CNOT))
    self.assertAlmostEqual(5 * .003 / 18, probs['ZI'])
    self.assertAlmostEqual(.003 / 72, probs['XX'])

  def test_variant_separation(self):
    bp = noise_spec(.005, 100, HBD_BP_CZ)
    depol = noise_spec(.005, 100, HBD_DEPOL_CZ)
    for site in SITE_KINDS:
      if site == CZ:
        self.assertNotEqual(channel_for_site(bp, site),
                            channel_for_site(depol, site))
      else:
        self.assertEqual(channel_for_site(bp, site),
                         channel_for_site(depol, site))

  def test_spec_validation(self):
    with self.assertRaises(NoiseConfigError):
      noise_spec(1, 10)
    with self.assertRaises(NoiseConfigError):
      noise_spec(.01, 0)
    with self.assertRaises(NoiseConfigError):
      noise_spec(.01, 'huge')
    with self.assertRaises(NoiseConfigError):
      noise_spec(.01, 10, 'hbd-other')
    with self.assertRaises(NoiseConfigError):
      noise_spec(.01, 10, HBD_RESIDUAL_CNOT)

  def test_missing_eta_cnot_at_lookup(self):
    spec = noisemodel.NoiseSpec(.01, 10, HBD_RESIDUAL_CNOT, None)
    with self.assertRaises(NoiseConfigError):
      channel_for_site(spec, CNOT)

  def test_unknown_site(self):
    with self.assertRaises(ModelCoverageError):
      channel_for_site(noise_spec(.01, 10), 'SWAP')

  @given(st.floats(0, .5), st.floats(.01, 1e6), st.sampled_from(SITE_KINDS),
         st.sampled_from([HBD_BP_CZ, HBD_DEPOL_CZ, HBD_RESIDUAL_CNOT]))
  @settings(max_examples=300)
  def test_normalization(self, p, eta, site, variant):
    spec = noise_spec(p, eta, variant, eta_cnot=5)
    channel = channel_for_site(spec, site)
    self.assertTrue(all(prob >= 0 for prob in channel.probs))
    self.assertAlmostEqual(p, channel.error_probability(), delta=1e-12)
    self.assertAlmostEqual(1, math.fsum(channel.probs), delta=1e-12)

  @given(st.floats(1e-4, .5), st.floats(.01, 1e6))
  def test_cz_bias_bookkeeping(self, p, eta):
    channel = channel_for_site(noise_spec(p, eta), CZ)
    self.assertAlmostEqual(1, gatechar.bias_of(channel.probs, 2) / eta,
                           delta=1e-9)

  def test_legacy_biased_channel(self):
    probs = by_label(noisemodel.legacy_biased_channel(2, .015, 10))
    self.assertAlmostEqual(.001, probs['ZZ'])
    self.assertAlmostEqual(.0001, probs['XI'])

  def test_table_grid_points_exact(self):
    table = ResidualBiasTable([1, 10, 100], [1.2, 3.5, 4.8])
    self.assertEqual(3.5, table(10))
    self.assertEqual(1.2, table(1.0))

  def test_table_interpolates_monotonically(self):
    table = ResidualBiasTable([1, 10, 100, 1000], [1.2, 3.5, 4.8, 4.98])
    values = [table(eta) for eta in (2, 5, 20, 50, 200, 500)]
    self.assertEqual(sorted(values), values)
    self.assertTrue(3.5 < table(31.6) < 4.8)

  def test_table_clamps(self):
    table = ResidualBiasTable([1, 10], [1.2, 3.5])
    self.assertEqual(3.5, table(1e5))
    self.assertEqual(1.2, table(.1))
    with self.assertRaises(NoiseConfigError):
      table(0)

  def test_table_save_load(self):
    table = ResidualBiasTable([1, 10, 100], [1.2, 3.5, 4.8])
    with tempfile.TemporaryDirectory() as dir:
      path = os.path.join(dir, 'table.json')
      table.save(path)
      loaded = noisemodel.residual_bias_table(path)
      self.assertEqual(table.etas, loaded.etas)
      self.assertEqual(table.values, loaded.values)
      self.assertEqual(4.8, noisemodel.residual_bias_lookup(100, path))

  def test_lookup_characterizes_once(self):
    self.mox.StubOutWithMock(gatechar, 'characterize_sweep')
    gatechar.characterize_sweep(
      'CNOT', gatechar.ETA_GRID, lambda_biased_total=gatechar.DEFAULT_LAMBDA,
      workers=1).AndReturn([
        gatechar.GateNoiseProfile('CNOT', eta, 2, None, bias, None, None)
        for eta, bias in ((1, 1.3), (10, 4), (10000, 5))])
    self.mox.ReplayAll()

    self.assertEqual(4, noisemodel.residual_bias_lookup(10))
    self.assertEqual(5, noisemodel.residual_bias_lookup(10000))

  def test_lookup_real_pipeline(self):
    table = ResidualBiasTable.characterize(etas=[1, 10, 10000])
    self.assertLess(table(1), 1.5)
    self.assertTrue(4.5 <= table(10000) <= 5.5)
