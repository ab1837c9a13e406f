#!/usr/bin/env python
"""Threshold and footprint regression tests at desk scale.

These run full memory experiments and take from tens of minutes to hours, so
they're not part of the unit test suite. Shots per point default to 10^5;
override with BIASTAILOR_LIVE_SHOTS, eg 1M. Pass --debug to see progress.
"""
import logging
import os
import sys
import unittest

import humanfriendly
import numpy as np

from biastailor import analysis, circuit, dem, noisemodel, sampler
from biastailor.noisemodel import SD, noise_spec

SHOTS = humanfriendly.parse_size(os.environ.get('BIASTAILOR_LIVE_SHOTS', '100k'))
WORKERS = os.cpu_count() or 1


def threshold(variant, eta, ps, distances=(5, 7, 9), compilation=circuit.CNOT_CZ):
  eta_cnot = None
  if variant == noisemodel.HBD_RESIDUAL_CNOT and eta != SD:
    eta_cnot = noisemodel.residual_bias_lookup(eta)

  curves = {}
  for d in distances:
    curves[d] = [
      (p, analysis.simulate(d, noise_spec(p, eta, variant, eta_cnot),
                            compilation=compilation, shots_ceiling=SHOTS,
                            workers=WORKERS).p_l)
      for p in ps]
  est = analysis.estimate_threshold(curves)
  logging.info('%s eta=%s %s: p_th = %.4g +/- %.2g', variant, eta, compilation,
               est.p_th, est.uncertainty)
  return est.p_th


class ThresholdTestLive(unittest.TestCase):

  def test_sd(self):
    p_th = threshold(noisemodel.HBD_BP_CZ, SD,
                     (.004, .005, .006, .007, .008, .009))
    self.assertAlmostEqual(.0066, p_th, delta=.001)

  def test_bias_preserving_cz(self):
    ps = (.006, .007, .008, .009, .01, .011)
    self.assertAlmostEqual(.0085, threshold(noisemodel.HBD_BP_CZ, 10, ps),
                           delta=.001)
    self.assertAlmostEqual(.0093, threshold(noisemodel.HBD_BP_CZ, 1000, ps),
                           delta=.001)

  def test_depolarizing_cz_saturates(self):
    ps = (.005, .006, .007, .008, .009)
    depol = threshold(noisemodel.HBD_DEPOL_CZ, 1000, ps)
    self.assertLessEqual(depol, .0075)
    self.assertAlmostEqual(threshold(noisemodel.HBD_BP_CZ, 1, ps), depol,
                           delta=.0007)

  def test_residual_cnot(self):
    ps = (.009, .01, .011, .012, .013, .014, .015)
    self.assertAlmostEqual(
      .012, threshold(noisemodel.HBD_RESIDUAL_CNOT, 100, ps), delta=.0015)
    self.assertAlmostEqual(
      .0126, threshold(noisemodel.HBD_RESIDUAL_CNOT, 1000, ps), delta=.0015)

  def test_cz_only(self):
    self.assertAlmostEqual(.0053, threshold(
      noisemodel.HBD_BP_CZ, SD, (.003, .004, .005, .006, .007),
      compilation=circuit.CZ_ONLY), delta=.001)
    self.assertAlmostEqual(.008, threshold(
      noisemodel.HBD_BP_CZ, 1000, (.006, .007, .008, .009, .01),
      compilation=circuit.CZ_ONLY), delta=.001)

  def test_footprint_fit(self):
    spec = noise_spec(.003, 1000, noisemodel.HBD_RESIDUAL_CNOT,
                      noisemodel.residual_bias_lookup(1000))
    points = {d: analysis.simulate(d, spec, shots_ceiling=100 * SHOTS,
                                   workers=WORKERS).p_l
              for d in (5, 7, 9, 11)}
    logging.info('p_L by distance: %s', points)

    values = [points[d] for d in sorted(points)]
    self.assertEqual(sorted(values, reverse=True), values)
    fit = analysis.footprint(points, 'megaquop')
    self.assertGreaterEqual(fit.r_squared, .98)

  def test_dem_matches_sampler(self):
    program = circuit.attach_noise(circuit.build_xzzx_memory(3, rounds=3),
                                   noise_spec(.002, 10))
    model = dem.extract_dem(program)

    expected = np.zeros(model.num_detectors)
    for m in model.mechanisms:
      for det in m.detectors:
        expected[det] = dem.xor_probability(expected[det], m.probability)

    shots = 10 ** 7
    batch = sampler.sample(program, shots, seed=11, workers=WORKERS)
    counts = np.zeros(model.num_detectors)
    for start in range(0, shots, 10 ** 6):
      counts += np.unpackbits(batch.detector_bits[start:start + 10 ** 6],
                              axis=1, bitorder='little',
                              count=model.num_detectors).sum(axis=0)

    sigma = np.sqrt(shots * expected * (1 - expected))
    np.testing.assert_array_less(np.abs(counts - shots * expected),
                                 5 * sigma + 5)


if __name__ == '__main__':
  if '--debug' in sys.argv:
    sys.argv.remove('--debug')
    logging.getLogger().setLevel(logging.DEBUG)
  else:
    logging.getLogger().setLevel(logging.CRITICAL + 1)
  unittest.main()
